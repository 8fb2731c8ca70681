#include "featboot/bootstrap.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace featboot {

namespace {

// stream ids < 2^32 belong to replicates; extractor-side resampling lives here
constexpr std::uint64_t kExtractorStreamBase = 1ULL << 32;

struct BasisFit {
  Matrix coords;             // n x K, all original rows projected on the basis
  std::vector<double> residuals;  // entries of (centered - rank-K fit)
};

// Row-resample Z (or take it as-is), center the working copy by its own
// column means, fit a rank-K truncated SVD, and project the original rows
// (centered by their own means) onto the fitted right basis.
BasisFit fit_basis(const Matrix& Z, const Matrix& Zc_original, int K,
                   Rng* resample_rng) {
  const int n = static_cast<int>(Z.rows());
  Matrix work;
  if (resample_rng != nullptr) {
    work.resize(n, Z.cols());
    for (int i = 0; i < n; ++i)
      work.row(i) = Z.row(static_cast<int>(resample_rng->below(n)));
  } else {
    work = Z;
  }
  Matrix centered = column_center(work).first;
  TruncatedSvd f = truncated_svd(centered, K);

  BasisFit out;
  out.coords = Zc_original * f.V;
  Matrix resid = centered - f.U * f.S.asDiagonal() * f.V.transpose();
  out.residuals.assign(resid.data(), resid.data() + resid.size());
  return out;
}

// Canonical ordering makes residual resampling invariant to column
// permutations of the input feature matrices.
void sort_pool(std::vector<double>& pool) {
  std::sort(pool.begin(), pool.end());
}

Matrix perturb_and_permute(const Matrix& coords,
                           const std::vector<double>& pool, int K, Rng& rng) {
  Matrix out = coords;
  const std::uint64_t P = pool.size();
  for (int i = 0; i < out.rows(); ++i)
    for (int k = 0; k < K; ++k) out(i, k) += pool[rng.below(P)];
  return permute_columns(out, random_permutation(K, rng));
}

void check_rows_distinct(const Matrix& Z) {
  for (int i = 1; i < Z.rows(); ++i)
    if (Z.row(i) != Z.row(0)) return;
  throw std::invalid_argument("parametric_replicates: fewer than 2 distinct rows");
}

}  // namespace

SplitSpec split(int n, double learn_fraction, Rng& rng) {
  if (learn_fraction <= 0.0 || learn_fraction >= 1.0)
    throw std::invalid_argument("split: learn_fraction must lie in (0, 1)");
  if (n < 4) throw std::invalid_argument("split: n >= 4 required");
  int m = static_cast<int>(std::lround(learn_fraction * n));
  m = std::clamp(m, 1, n - 1);

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < m; ++i) {
    const int j =
        i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[i], idx[j]);
  }
  SplitSpec out;
  out.learn_fraction = learn_fraction;
  out.learn_indices.assign(idx.begin(), idx.begin() + m);
  out.infer_indices.assign(idx.begin() + m, idx.end());
  std::sort(out.learn_indices.begin(), out.learn_indices.end());
  std::sort(out.infer_indices.begin(), out.infer_indices.end());
  return out;
}

BootstrapMethod parse_method(const std::string& name) {
  if (name == "nonparametric") return BootstrapMethod::kNonparametric;
  if (name == "parametric") return BootstrapMethod::kParametric;
  if (name == "compromise") return BootstrapMethod::kCompromise;
  throw std::invalid_argument("unknown bootstrap method: " + name);
}

std::string method_name(BootstrapMethod m) {
  switch (m) {
    case BootstrapMethod::kNonparametric: return "nonparametric";
    case BootstrapMethod::kParametric: return "parametric";
    case BootstrapMethod::kCompromise: return "compromise";
  }
  return "unknown";
}

ReplicateSet nonparametric_replicates(const std::vector<Matrix>& feature_sets,
                                      int K) {
  if (feature_sets.size() < 2)
    throw std::invalid_argument(
        "nonparametric_replicates: at least 2 feature sets required");
  const auto n = feature_sets[0].rows();
  ReplicateSet out;
  out.coords.reserve(feature_sets.size());
  for (const Matrix& Z : feature_sets) {
    if (Z.rows() != n)
      throw std::invalid_argument(
          "nonparametric_replicates: inconsistent row counts");
    if (K > Z.cols())
      throw std::invalid_argument(
          "nonparametric_replicates: K exceeds feature count");
    out.coords.push_back(principal_coordinates(column_center(Z).first, K));
  }
  return out;
}

ReplicateSet parametric_replicates(const Matrix& Z, const BootstrapConfig& cfg,
                                   const Rng& base) {
  const int K = cfg.K;
  if (K < 1 || K > std::min(Z.rows(), Z.cols()))
    throw std::invalid_argument("parametric_replicates: K out of range");
  check_rows_distinct(Z);
  if (cfg.B < 2) throw std::invalid_argument("parametric_replicates: B >= 2");

  const Matrix Zc = column_center(Z).first;
  ReplicateSet out;
  out.coords.reserve(cfg.B);

  if (cfg.parametric_basis == ParametricBasis::kFixed) {
    BasisFit fit = fit_basis(Z, Zc, K, nullptr);
    sort_pool(fit.residuals);
    for (int b = 0; b < cfg.B; ++b) {
      Rng rng = base.stream(static_cast<std::uint64_t>(b));
      out.coords.push_back(perturb_and_permute(fit.coords, fit.residuals, K, rng));
    }
  } else {
    for (int b = 0; b < cfg.B; ++b) {
      Rng rng = base.stream(static_cast<std::uint64_t>(b));
      BasisFit fit = fit_basis(Z, Zc, K, &rng);
      sort_pool(fit.residuals);
      out.coords.push_back(perturb_and_permute(fit.coords, fit.residuals, K, rng));
    }
  }
  return out;
}

ReplicateSet compromise_replicates(const std::vector<Matrix>& feature_sets,
                                   const BootstrapConfig& cfg, const Rng& base) {
  const int S = static_cast<int>(feature_sets.size());
  if (S < 1) throw std::invalid_argument("compromise_replicates: S >= 1");
  if (cfg.S != S)
    throw std::invalid_argument(
        "compromise_replicates: cfg.S must match the feature set count");
  if (cfg.B < 2) throw std::invalid_argument("compromise_replicates: B >= 2");
  const auto n = feature_sets[0].rows();

  std::vector<Matrix> coords(S);
  std::vector<double> pool;
  for (int s = 0; s < S; ++s) {
    const Matrix& Z = feature_sets[s];
    if (Z.rows() != n)
      throw std::invalid_argument(
          "compromise_replicates: inconsistent row counts");
    if (cfg.K < 1 || cfg.K > std::min(Z.rows(), Z.cols()))
      throw std::invalid_argument("compromise_replicates: K out of range");
    Rng rng = base.stream(kExtractorStreamBase + static_cast<std::uint64_t>(s));
    BasisFit fit = fit_basis(Z, column_center(Z).first, cfg.K, &rng);
    coords[s] = std::move(fit.coords);
    pool.insert(pool.end(), fit.residuals.begin(), fit.residuals.end());
  }
  sort_pool(pool);

  ReplicateSet out;
  out.coords.reserve(cfg.B);
  for (int b = 0; b < cfg.B; ++b) {
    Rng rng = base.stream(static_cast<std::uint64_t>(b));
    const int s = static_cast<int>(rng.below(static_cast<std::uint64_t>(S)));
    out.coords.push_back(perturb_and_permute(coords[s], pool, cfg.K, rng));
  }
  return out;
}

ReplicateSet align(ReplicateSet reps, double tol, int max_cycles) {
  if (reps.aligned) return reps;
  GpaResult gpa = generalized_procrustes(reps.coords, tol, max_cycles);
  for (std::size_t b = 0; b < reps.coords.size(); ++b)
    reps.coords[b] = reps.coords[b] * gpa.rotations[b];
  reps.rotations = std::move(gpa.rotations);
  reps.consensus = std::move(gpa.consensus);
  reps.objective_trace = std::move(gpa.objective_trace);
  reps.aligned = true;
  return reps;
}

double chi_squared_quantile(int dof, double p) {
  boost::math::chi_squared_distribution<double> dist(dof);
  return boost::math::quantile(dist, p);
}

ConfidenceEllipseSet confidence_ellipses(const ReplicateSet& reps,
                                         double alpha) {
  if (!reps.aligned)
    throw std::invalid_argument("confidence_ellipses: replicates not aligned");
  const int B = static_cast<int>(reps.coords.size());
  if (B < 2) throw std::invalid_argument("confidence_ellipses: B >= 2");
  if (alpha <= 0.0 || alpha >= 1.0)
    throw std::invalid_argument("confidence_ellipses: alpha in (0, 1)");
  const int n = static_cast<int>(reps.coords[0].rows());
  const int K = static_cast<int>(reps.coords[0].cols());

  ConfidenceEllipseSet out;
  out.K = K;
  out.level = 1.0 - alpha;
  out.quantile = chi_squared_quantile(K, 1.0 - alpha);
  out.consensus = reps.consensus;
  out.means.resize(n, K);
  out.covariances.resize(n);
  out.regularization.resize(n);

  Matrix cloud(B, K);
  for (int i = 0; i < n; ++i) {
    for (int b = 0; b < B; ++b) cloud.row(b) = reps.coords[b].row(i);
    Vector mu = cloud.colwise().mean();
    Matrix centered = cloud.rowwise() - mu.transpose();
    Matrix sigma = centered.transpose() * centered / static_cast<double>(B - 1);
    const double reg = std::max(1e-10 * sigma.trace() / K, 1e-12);
    sigma.diagonal().array() += reg;
    out.means.row(i) = mu.transpose();
    out.covariances[i] = std::move(sigma);
    out.regularization[i] = reg;
  }
  return out;
}

bool ellipse_contains(const ConfidenceEllipseSet& e, int i, const Vector& x) {
  Vector d = x - e.means.row(i).transpose();
  Vector solved = e.covariances[i].ldlt().solve(d);
  return d.dot(solved) <= e.quantile;
}

double ellipse_area(const ConfidenceEllipseSet& e, int i) {
  // volume of {x : (x-mu)^T Sigma^-1 (x-mu) <= q}; for K=2 this is
  // pi * q * sqrt(det Sigma)
  const int K = e.K;
  const double det = e.covariances[i].determinant();
  return std::pow(3.14159265358979323846 * e.quantile, K / 2.0) /
         std::tgamma(K / 2.0 + 1.0) * std::sqrt(std::max(det, 0.0));
}

double coverage(const ConfidenceEllipseSet& ellipses, const Matrix& truth) {
  if (truth.rows() != ellipses.means.rows() || truth.cols() != ellipses.K)
    throw std::invalid_argument("coverage: shape mismatch");
  Matrix truth_c = column_center(truth).first;
  Matrix R = orthogonal_procrustes(ellipses.consensus, truth_c);
  Matrix aligned = truth_c * R;
  int inside = 0;
  for (int i = 0; i < aligned.rows(); ++i)
    if (ellipse_contains(ellipses, i, aligned.row(i).transpose())) ++inside;
  return static_cast<double>(inside) / static_cast<double>(aligned.rows());
}

}  // namespace featboot
