// Python bindings for the featboot core: linear algebra primitives, the
// Procrustes machinery, the three bootstrap strategies, both simulators, and
// the random-convolutional-features learner.
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "featboot/bootstrap.hpp"
#include "featboot/lowrank.hpp"
#include "featboot/pointprocess.hpp"
#include "featboot/rcf.hpp"

namespace py = pybind11;
using namespace featboot;

namespace {

ParametricBasis parse_basis(const std::string& name) {
  if (name == "resampled") return ParametricBasis::kResampled;
  if (name == "fixed") return ParametricBasis::kFixed;
  throw std::invalid_argument("basis must be 'resampled' or 'fixed'");
}

ImageTensor tensor_from_array(const py::array_t<float>& arr) {
  const auto buf = arr.request();
  if (buf.ndim != 3) throw std::invalid_argument("image must be h x w x c");
  ImageTensor img;
  img.h = static_cast<int>(buf.shape[0]);
  img.w = static_cast<int>(buf.shape[1]);
  img.c = static_cast<int>(buf.shape[2]);
  py::array_t<float, py::array::c_style | py::array::forcecast> c(arr);
  const float* p = c.data();
  img.data.assign(p, p + static_cast<std::size_t>(img.h) * img.w * img.c);
  return img;
}

py::array_t<float> array_from_image(const std::vector<float>& data, int grid) {
  py::array_t<float> arr({grid, grid, kNumClasses});
  std::copy(data.begin(), data.end(), arr.mutable_data());
  return arr;
}

std::vector<ImageTensor> tensors_from_list(const std::vector<py::array_t<float>>& arrs) {
  std::vector<ImageTensor> out;
  out.reserve(arrs.size());
  for (const auto& a : arrs) out.push_back(tensor_from_array(a));
  return out;
}

}  // namespace

PYBIND11_MODULE(_featboot, m) {
  m.doc() = "bootstrap confidence regions for learned feature embeddings";

  // ------------------------------------------------------------ linalg
  m.def(
      "truncated_svd",
      [](const Matrix& X, int K) {
        TruncatedSvd f = truncated_svd(X, K);
        return py::make_tuple(f.U, f.S, f.V);
      },
      py::arg("X"), py::arg("K"),
      "Rank-K truncated SVD (U, S, V) with a deterministic sign convention.");
  m.def(
      "column_center",
      [](const Matrix& X) {
        auto [C, mean] = column_center(X);
        return py::make_tuple(C, mean);
      },
      py::arg("X"));
  m.def(
      "sample_haar_orthonormal",
      [](int n, int K, std::uint64_t seed, std::uint64_t stream) {
        Rng rng(seed, stream);
        return sample_haar_orthonormal(n, K, rng);
      },
      py::arg("n"), py::arg("K"), py::arg("seed"), py::arg("stream") = 0);
  m.def(
      "random_permutation",
      [](int K, std::uint64_t seed, std::uint64_t stream) {
        Rng rng(seed, stream);
        return random_permutation(K, rng);
      },
      py::arg("K"), py::arg("seed"), py::arg("stream") = 0);
  m.def("principal_coordinates", &principal_coordinates, py::arg("Z"),
        py::arg("K"));

  // --------------------------------------------------------- procrustes
  m.def("orthogonal_procrustes", &orthogonal_procrustes, py::arg("X"),
        py::arg("Y"),
        "Orthogonal R minimizing ||X - Y R||_F (reflections permitted).");
  m.def(
      "generalized_procrustes",
      [](const std::vector<Matrix>& Xs, double tol, int max_cycles) {
        GpaResult g = generalized_procrustes(Xs, tol, max_cycles);
        return py::make_tuple(g.rotations, g.consensus, g.objective_trace);
      },
      py::arg("Xs"), py::arg("tol") = 1e-9, py::arg("max_cycles") = 100,
      "Returns (rotations, consensus, objective_trace).");

  // ---------------------------------------------------------- bootstrap
  py::class_<ReplicateSet>(m, "ReplicateSet")
      .def_readonly("coords", &ReplicateSet::coords)
      .def_readonly("aligned", &ReplicateSet::aligned)
      .def_readonly("rotations", &ReplicateSet::rotations)
      .def_readonly("consensus", &ReplicateSet::consensus)
      .def_readonly("objective_trace", &ReplicateSet::objective_trace);

  py::class_<ConfidenceEllipseSet>(m, "ConfidenceEllipseSet")
      .def_readonly("means", &ConfidenceEllipseSet::means)
      .def_readonly("covariances", &ConfidenceEllipseSet::covariances)
      .def_readonly("regularization", &ConfidenceEllipseSet::regularization)
      .def_readonly("level", &ConfidenceEllipseSet::level)
      .def_readonly("quantile", &ConfidenceEllipseSet::quantile)
      .def_readonly("consensus", &ConfidenceEllipseSet::consensus)
      .def_readonly("K", &ConfidenceEllipseSet::K)
      .def("contains",
           [](const ConfidenceEllipseSet& e, int i, const Vector& x) {
             return ellipse_contains(e, i, x);
           })
      .def("area", [](const ConfidenceEllipseSet& e, int i) {
        return ellipse_area(e, i);
      });

  m.def(
      "split",
      [](int n, double learn_fraction, std::uint64_t seed) {
        Rng rng(seed);
        SplitSpec s = split(n, learn_fraction, rng);
        return py::make_tuple(s.learn_indices, s.infer_indices);
      },
      py::arg("n"), py::arg("learn_fraction"), py::arg("seed"));
  m.def("nonparametric_replicates", &nonparametric_replicates,
        py::arg("feature_sets"), py::arg("K"));
  m.def(
      "parametric_replicates",
      [](const Matrix& Z, int B, int K, std::uint64_t seed,
         const std::string& basis) {
        BootstrapConfig cfg;
        cfg.method = BootstrapMethod::kParametric;
        cfg.B = B;
        cfg.K = K;
        cfg.seed = seed;
        cfg.parametric_basis = parse_basis(basis);
        return parametric_replicates(Z, cfg, Rng(seed));
      },
      py::arg("Z"), py::arg("B"), py::arg("K"), py::arg("seed"),
      py::arg("basis") = "resampled");
  m.def(
      "compromise_replicates",
      [](const std::vector<Matrix>& sets, int B, int K, std::uint64_t seed) {
        BootstrapConfig cfg;
        cfg.method = BootstrapMethod::kCompromise;
        cfg.B = B;
        cfg.S = static_cast<int>(sets.size());
        cfg.K = K;
        cfg.seed = seed;
        return compromise_replicates(sets, cfg, Rng(seed));
      },
      py::arg("feature_sets"), py::arg("B"), py::arg("K"), py::arg("seed"));
  m.def("align", &align, py::arg("replicates"), py::arg("tol") = 1e-9,
        py::arg("max_cycles") = 100);
  m.def("confidence_ellipses", &confidence_ellipses, py::arg("replicates"),
        py::arg("alpha"));
  m.def("coverage", &coverage, py::arg("ellipses"), py::arg("truth"));
  m.def("chi_squared_quantile", &chi_squared_quantile, py::arg("dof"),
        py::arg("p"));

  // ------------------------------------------------------------ lowrank
  m.def(
      "generate_lowrank",
      [](int n, int D, double c, double b, int K, double sigma_E,
         double sigma_y, std::uint64_t seed) {
        LowRankConfig cfg;
        cfg.n = n;
        cfg.D = D;
        cfg.c = c;
        cfg.b_coef = b;
        cfg.K = K;
        cfg.sigma_E = sigma_E;
        cfg.sigma_y = sigma_y;
        Rng rng(seed);
        LowRankDataset d = generate_lowrank(cfg, rng);
        py::dict out;
        out["X"] = d.X;
        out["y"] = d.y;
        out["U"] = d.U;
        out["V"] = d.V;
        out["sigma"] = d.sigma;
        out["beta"] = d.beta;
        return out;
      },
      py::arg("n") = 1000, py::arg("D") = 100, py::arg("c") = 100.0,
      py::arg("b") = 1.0, py::arg("K") = 2, py::arg("sigma_E") = 0.1,
      py::arg("sigma_y") = 0.1, py::arg("seed") = 1);
  m.def(
      "svd_extractor",
      [](const Matrix& X, int K_hat, double noise_sd, std::uint64_t seed,
         std::uint64_t stream) {
        Rng rng(seed, stream);
        return svd_extractor(X, K_hat, noise_sd, rng);
      },
      py::arg("X"), py::arg("K_hat"), py::arg("noise_sd"), py::arg("seed"),
      py::arg("stream") = 0);
  m.def(
      "run_lowrank_experiment",
      [](const std::string& method, int n, int D, int B, int S, int K_hat,
         double alpha, std::uint64_t seed) {
        LowRankConfig cfg;
        cfg.n = n;
        cfg.D = D;
        cfg.K_hat = K_hat;
        BootstrapConfig boot;
        boot.method = parse_method(method);
        boot.B = B;
        boot.S = S;
        boot.K = cfg.K;
        boot.alpha = alpha;
        CoverageReport r = run_lowrank_experiment(cfg, boot, seed);
        py::dict out;
        out["method"] = r.method;
        out["n"] = r.n;
        out["B"] = r.B;
        out["S"] = r.S;
        out["K"] = r.K;
        out["alpha"] = r.alpha;
        out["coverage"] = r.coverage;
        out["mean_area"] = r.mean_area;
        out["runtime_s"] = r.runtime_s;
        out["seed"] = r.seed;
        return out;
      },
      py::arg("method"), py::arg("n") = 1000, py::arg("D") = 100,
      py::arg("B") = 1000, py::arg("S") = 100, py::arg("K_hat") = 10,
      py::arg("alpha") = 0.05, py::arg("seed") = 1);

  // ------------------------------------------------------- pointprocess
  m.def(
      "matern_covariance",
      [](double d, double nu, double alpha, double sigma2) {
        return matern_covariance(d, MaternParams{nu, alpha, sigma2});
      },
      py::arg("d"), py::arg("nu"), py::arg("alpha"), py::arg("sigma2") = 1.0);
  m.def(
      "sample_gaussian_field",
      [](int grid, double nu, double alpha, double sigma2,
         std::uint64_t seed) {
        Rng rng(seed);
        return sample_gaussian_field(grid, MaternParams{nu, alpha, sigma2},
                                     rng);
      },
      py::arg("grid"), py::arg("nu"), py::arg("alpha"),
      py::arg("sigma2") = 1.0, py::arg("seed") = 1);
  m.def(
      "generate_dataset",
      [](int n_images, std::uint64_t seed, int grid) {
        std::vector<ImageSample> data = generate_dataset(n_images, seed, grid);
        py::list out;
        for (const ImageSample& s : data) {
          py::dict d;
          d["image"] = array_from_image(s.image, s.grid);
          d["y"] = s.y;
          py::dict p;
          p["n_points"] = s.params.n_points;
          p["nu_lambda"] = s.params.nu_lambda;
          p["alpha_lambda"] = s.params.alpha_lambda;
          p["beta"] = s.params.beta;
          p["nu_b"] = s.params.nu_b;
          p["alpha_b"] = s.params.alpha_b;
          p["tau"] = s.params.tau;
          p["lambda"] = s.params.lambda;
          d["params"] = p;
          py::list pts;
          for (const PointRecord& pt : s.points)
            pts.append(py::make_tuple(pt.x, pt.y, pt.cls, pt.radius));
          d["points"] = pts;
          out.append(d);
        }
        return out;
      },
      py::arg("n_images"), py::arg("seed"), py::arg("grid") = 64,
      "Marked log-Cox Matern image dataset; each entry has image, y, params, "
      "points.");

  // ---------------------------------------------------------------- rcf
  m.def(
      "rcf_feature_matrix",
      [](const std::vector<py::array_t<float>>& train_images,
         const std::vector<py::array_t<float>>& images, int L, int s,
         std::uint64_t seed, bool center_kernels) {
        Rng rng(seed);
        RcfModel model;
        model.patches =
            sample_patches(tensors_from_list(train_images), L, s, rng,
                           center_kernels);
        return extract_feature_matrix(model, tensors_from_list(images));
      },
      py::arg("train_images"), py::arg("images"), py::arg("L") = 512,
      py::arg("s") = 8, py::arg("seed") = 1, py::arg("center_kernels") = true,
      "Sample L random patch kernels from the training images and extract "
      "spatially averaged linear features for all given images.");
  m.def(
      "fit_ridge",
      [](const Matrix& Z, const Vector& y, double lam) {
        RidgeFit f = fit_ridge(Z, y, lam);
        return py::make_tuple(f.beta, f.intercept);
      },
      py::arg("Z"), py::arg("y"), py::arg("lam"));
  m.def("choose_ridge_lambda", &choose_ridge_lambda, py::arg("Z"),
        py::arg("y"), py::arg("folds") = 5,
        py::arg("grid") = std::vector<double>{});
}
