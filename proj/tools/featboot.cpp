// featboot: bootstrap confidence regions for dimensionality-reduced learned
// features. Subcommands cover the two simulators, feature extraction, the
// three bootstrap strategies, figure export, and the end-to-end low-rank
// coverage experiment. Every command is a pure function of (config, seed).

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "featboot/bootstrap.hpp"
#include "featboot/io.hpp"
#include "featboot/lowrank.hpp"
#include "featboot/pointprocess.hpp"
#include "featboot/rcf.hpp"

namespace fs = std::filesystem;
using featboot::io::json;

namespace {

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  if (!fs::exists(path))
    throw CLI::ValidationError("--config", "file not found: " + path);
  return featboot::io::read_json(path);
}

template <typename T>
void from_config(const json& cfg, const char* key, T& value) {
  if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

// precedence: CLI flag > config file > built-in default
template <typename T>
void merge(const CLI::App* cmd, const std::string& flag, const json& cfg,
           const char* key, T& value, const T& flag_value) {
  // copy first: callers alias value and flag_value, and the config lookup
  // below would otherwise overwrite the parsed flag before it is applied
  const T parsed = flag_value;
  from_config(cfg, key, value);
  if (cmd->count(flag)) value = parsed;
}

std::string image_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "image_%05d.ten", i);
  return buf;
}

struct LowRankFlags {
  featboot::LowRankConfig cfg;
  std::string config_path;
  std::uint64_t seed = 1;
  std::string out = "out";

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--n", cfg.n);
    cmd->add_option("--D", cfg.D);
    cmd->add_option("--c", cfg.c);
    cmd->add_option("--b", cfg.b_coef);
    cmd->add_option("--K", cfg.K);
    cmd->add_option("--sigma-E", cfg.sigma_E);
    cmd->add_option("--sigma-y", cfg.sigma_y);
    cmd->add_option("--extractor-noise-sd", cfg.extractor_noise_sd);
    cmd->add_option("--K-hat", cfg.K_hat);
  }

  void resolve(const CLI::App* cmd) {
    const json j = load_config(config_path);
    merge(cmd, "--seed", j, "seed", seed, seed);
    merge(cmd, "--n", j, "n", cfg.n, cfg.n);
    merge(cmd, "--D", j, "D", cfg.D, cfg.D);
    merge(cmd, "--c", j, "c", cfg.c, cfg.c);
    merge(cmd, "--b", j, "b", cfg.b_coef, cfg.b_coef);
    merge(cmd, "--K", j, "K", cfg.K, cfg.K);
    merge(cmd, "--sigma-E", j, "sigma_E", cfg.sigma_E, cfg.sigma_E);
    merge(cmd, "--sigma-y", j, "sigma_y", cfg.sigma_y, cfg.sigma_y);
    merge(cmd, "--extractor-noise-sd", j, "extractor_noise_sd",
          cfg.extractor_noise_sd, cfg.extractor_noise_sd);
    merge(cmd, "--K-hat", j, "K_hat", cfg.K_hat, cfg.K_hat);
  }

  json effective() const {
    json j;
    j["n"] = cfg.n;
    j["D"] = cfg.D;
    j["c"] = cfg.c;
    j["b"] = cfg.b_coef;
    j["K"] = cfg.K;
    j["sigma_E"] = cfg.sigma_E;
    j["sigma_y"] = cfg.sigma_y;
    j["extractor_noise_sd"] = cfg.extractor_noise_sd;
    j["K_hat"] = cfg.K_hat;
    j["seed"] = seed;
    return j;
  }
};

int cmd_simulate_lowrank(const CLI::App* cmd, LowRankFlags& f) {
  f.resolve(cmd);
  featboot::Rng rng(f.seed);
  featboot::LowRankDataset d = featboot::generate_lowrank(f.cfg, rng);

  std::vector<std::string> xh, th;
  for (int j = 0; j < f.cfg.D; ++j) xh.push_back("x" + std::to_string(j + 1));
  for (int k = 0; k < f.cfg.K; ++k) th.push_back("t" + std::to_string(k + 1));
  const fs::path out(f.out);
  featboot::io::write_matrix_csv(out / "X.csv", d.X, xh);
  featboot::io::write_vector_csv(out / "y.csv", d.y, "y");
  featboot::io::write_matrix_csv(out / "truth_coords.csv",
                                 d.U * d.sigma.asDiagonal(), th);
  json manifest;
  manifest["command"] = "simulate-lowrank";
  manifest["config"] = f.effective();
  featboot::io::write_json(out / "manifest.json", manifest);
  return 0;
}

int cmd_simulate_images(const CLI::App* cmd, const std::string& config_path,
                        std::uint64_t seed, int n_images, int grid, bool png,
                        const std::string& out_dir) {
  const json j = load_config(config_path);
  std::uint64_t eff_seed = seed;
  int eff_n = n_images, eff_grid = grid;
  bool eff_png = png;
  merge(cmd, "--seed", j, "seed", eff_seed, seed);
  merge(cmd, "--n-images", j, "n_images", eff_n, n_images);
  merge(cmd, "--grid", j, "grid", eff_grid, grid);
  merge(cmd, "--png", j, "png", eff_png, png);

  auto dataset = featboot::generate_dataset(eff_n, eff_seed, eff_grid);
  const fs::path out(out_dir);

  json manifest;
  manifest["command"] = "simulate-images";
  manifest["config"] = {{"n_images", eff_n},
                        {"grid", eff_grid},
                        {"seed", eff_seed},
                        {"png", eff_png}};
  manifest["images"] = json::array();
  for (int i = 0; i < eff_n; ++i) {
    const featboot::ImageSample& s = dataset[i];
    featboot::ImageTensor t{s.grid, s.grid, featboot::kNumClasses, s.image};
    featboot::io::write_tensor(out / image_name(i), t);
    if (eff_png) {
      fs::path p = out / image_name(i);
      p.replace_extension(".png");
      featboot::io::write_png(p, t);
    }
    json rec;
    rec["file"] = image_name(i);
    rec["y"] = s.y;
    rec["params"] = {{"N", s.params.n_points},
                     {"nu_lambda", s.params.nu_lambda},
                     {"alpha_lambda", s.params.alpha_lambda},
                     {"beta", s.params.beta},
                     {"nu_B", s.params.nu_b},
                     {"alpha_B", s.params.alpha_b},
                     {"tau", s.params.tau},
                     {"lambda", s.params.lambda}};
    manifest["images"].push_back(std::move(rec));
  }
  featboot::io::write_json(out / "manifest.json", manifest);
  return 0;
}

int cmd_extract(const CLI::App* cmd, const std::string& features,
                const std::string& dataset_dir,
                const std::vector<std::string>& inputs, int L, int patch_size,
                int replicates, double learn_fraction, bool no_resample,
                std::uint64_t seed, const std::string& out_dir) {
  const fs::path out(out_dir);
  json manifest;
  manifest["command"] = "extract";

  if (features == "file") {
    if (inputs.empty())
      throw CLI::ValidationError("--inputs",
                                 "file mode requires at least one CSV");
    Eigen::Index rows = -1;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      std::vector<std::string> header;
      featboot::Matrix Z = featboot::io::read_matrix_csv(inputs[i], &header);
      for (std::size_t h = 0; h < header.size(); ++h)
        if (header[h] != "f" + std::to_string(h + 1))
          throw CLI::ValidationError(
              "--inputs", "expected header f1..fL in " + inputs[i]);
      if (rows >= 0 && Z.rows() != rows)
        throw CLI::ValidationError("--inputs",
                                   "row count mismatch in " + inputs[i]);
      rows = Z.rows();
      featboot::io::write_matrix_csv(
          out / ("features_" + std::to_string(i) + ".csv"), Z);
    }
    manifest["config"] = {{"features", "file"},
                          {"replicates", static_cast<int>(inputs.size())}};
    featboot::io::write_json(out / "manifest.json", manifest);
    return 0;
  }
  if (features != "rcf")
    throw CLI::ValidationError("--features", "must be 'rcf' or 'file'");
  if (dataset_dir.empty())
    throw CLI::ValidationError("--dataset", "required for rcf extraction");

  const json ds = featboot::io::read_json(fs::path(dataset_dir) /
                                          "manifest.json");
  const auto& images_meta = ds.at("images");
  const int n = static_cast<int>(images_meta.size());
  std::vector<featboot::ImageTensor> images;
  images.reserve(n);
  for (const auto& rec : images_meta)
    images.push_back(featboot::io::read_tensor(
        fs::path(dataset_dir) / rec.at("file").get<std::string>()));

  featboot::Rng base(seed);
  featboot::Rng split_rng = base.stream(1);
  featboot::SplitSpec sp = featboot::split(n, learn_fraction, split_rng);

  std::vector<featboot::ImageTensor> infer_images;
  for (int i : sp.infer_indices) infer_images.push_back(images[i]);

  for (int b = 0; b < replicates; ++b) {
    featboot::Rng rng = base.stream(1000 + static_cast<std::uint64_t>(b));
    std::vector<featboot::ImageTensor> learn_images;
    learn_images.reserve(sp.learn_indices.size());
    if (no_resample) {
      for (int i : sp.learn_indices) learn_images.push_back(images[i]);
      rng = base.stream(1000);  // identical extractor when not resampling
    } else {
      for (std::size_t q = 0; q < sp.learn_indices.size(); ++q)
        learn_images.push_back(
            images[sp.learn_indices[rng.below(sp.learn_indices.size())]]);
    }
    featboot::RcfModel model;
    model.patch_size = patch_size;
    model.feature_count = L;
    model.patches =
        featboot::sample_patches(learn_images, L, patch_size, rng);
    featboot::Matrix Z = featboot::extract_feature_matrix(model, infer_images);
    featboot::io::write_matrix_csv(
        out / ("features_" + std::to_string(b) + ".csv"), Z);
  }

  manifest["config"] = {{"features", "rcf"},
                        {"dataset", dataset_dir},
                        {"L", L},
                        {"patch_size", patch_size},
                        {"replicates", replicates},
                        {"learn_fraction", learn_fraction},
                        {"resample", !no_resample},
                        {"seed", seed}};
  manifest["learn_indices"] = sp.learn_indices;
  manifest["infer_indices"] = sp.infer_indices;
  featboot::io::write_json(out / "manifest.json", manifest);
  return 0;
}

int cmd_bootstrap(const std::string& method_name,
                  const std::vector<std::string>& inputs,
                  const std::string& truth_path, const std::string& basis,
                  featboot::BootstrapConfig boot, const std::string& out_dir) {
  boot.method = featboot::parse_method(method_name);
  if (basis == "fixed")
    boot.parametric_basis = featboot::ParametricBasis::kFixed;
  else if (basis != "resampled")
    throw CLI::ValidationError("--basis", "must be 'resampled' or 'fixed'");

  std::vector<featboot::Matrix> sets;
  sets.reserve(inputs.size());
  for (const std::string& p : inputs)
    sets.push_back(featboot::io::read_matrix_csv(p));

  featboot::ReplicateSet reps;
  const featboot::Rng base(boot.seed);
  switch (boot.method) {
    case featboot::BootstrapMethod::kNonparametric:
      if (static_cast<int>(sets.size()) < 2)
        throw CLI::ValidationError(
            "--inputs", "nonparametric needs B >= 2 feature CSVs");
      boot.B = static_cast<int>(sets.size());
      reps = featboot::nonparametric_replicates(sets, boot.K);
      break;
    case featboot::BootstrapMethod::kParametric:
      if (sets.size() != 1)
        throw CLI::ValidationError("--inputs",
                                   "parametric needs exactly one feature CSV");
      reps = featboot::parametric_replicates(sets[0], boot, base);
      break;
    case featboot::BootstrapMethod::kCompromise:
      boot.S = static_cast<int>(sets.size());
      reps = featboot::compromise_replicates(sets, boot, base);
      break;
  }

  reps = featboot::align(std::move(reps));
  featboot::ConfidenceEllipseSet ellipses =
      featboot::confidence_ellipses(reps, boot.alpha);

  const fs::path out(out_dir);
  featboot::io::write_aligned_coords_csv(out / "aligned_coords.csv", reps);
  featboot::io::write_json(out / "ellipses.json",
                           featboot::io::ellipses_to_json(ellipses));
  if (!truth_path.empty()) {
    featboot::Matrix truth = featboot::io::read_matrix_csv(truth_path);
    json cov;
    cov["coverage"] = featboot::coverage(ellipses, truth);
    cov["n"] = static_cast<int>(truth.rows());
    featboot::io::write_json(out / "coverage.json", cov);
  }
  json manifest;
  manifest["command"] = "bootstrap";
  manifest["config"] = {{"method", method_name},
                        {"B", boot.B},
                        {"S", boot.S},
                        {"K", boot.K},
                        {"alpha", boot.alpha},
                        {"seed", boot.seed},
                        {"parametric_basis", basis},
                        {"inputs", inputs}};
  featboot::io::write_json(out / "manifest.json", manifest);
  return 0;
}

int cmd_report(const std::string& ellipses_path, const std::string& coords_path,
               const std::string& shade_path, const std::string& out_dir) {
  featboot::ConfidenceEllipseSet ellipses = featboot::io::ellipses_from_json(
      featboot::io::read_json(ellipses_path));
  if (ellipses.means.rows() == 0)
    throw CLI::ValidationError("--ellipses", "empty ellipse set");
  featboot::Matrix coords =
      coords_path.empty() ? ellipses.means
                          : featboot::io::read_matrix_csv(coords_path);
  std::optional<featboot::Vector> shade;
  if (!shade_path.empty())
    shade = featboot::io::read_vector_csv(shade_path);

  const fs::path out(out_dir);
  featboot::io::atomic_write(
      out / "figure.svg",
      featboot::io::render_ellipse_svg(ellipses, coords,
                                       shade ? &*shade : nullptr));

  const int n = static_cast<int>(ellipses.means.rows());
  featboot::Matrix summary(n, 3);
  for (int i = 0; i < n; ++i) {
    Eigen::SelfAdjointEigenSolver<featboot::Matrix> eig(
        ellipses.covariances[i]);
    const double lmax = eig.eigenvalues().maxCoeff();
    const double lmin = eig.eigenvalues().minCoeff();
    summary(i, 0) = i;
    summary(i, 1) = featboot::ellipse_area(ellipses, i);
    summary(i, 2) = lmax > 0 ? std::sqrt(1.0 - std::max(lmin, 0.0) / lmax) : 0;
  }
  featboot::io::write_matrix_csv(out / "summary.csv", summary,
                                 {"sample", "area", "eccentricity"});
  return 0;
}

int cmd_experiment_lowrank(const CLI::App* cmd, LowRankFlags& f,
                           const std::string& method,
                           featboot::BootstrapConfig boot) {
  f.resolve(cmd);
  boot.method = featboot::parse_method(method);
  boot.K = f.cfg.K;  // projection rank tracks the latent rank here
  featboot::CoverageReport r =
      featboot::run_lowrank_experiment(f.cfg, boot, f.seed);
  json j;
  j["method"] = r.method;
  j["n"] = r.n;
  j["B"] = r.B;
  j["S"] = r.S;
  j["alpha"] = r.alpha;
  j["coverage"] = r.coverage;
  j["mean_area"] = r.mean_area;
  j["seed"] = r.seed;
  featboot::io::write_json(fs::path(f.out) / "report.json", j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bootstrap confidence regions for learned-feature projections"};
  app.require_subcommand(1);

  // simulate-lowrank
  LowRankFlags sim_lr;
  CLI::App* c_simlr = app.add_subcommand(
      "simulate-lowrank", "generate the low-rank dataset (X, y, truth)");
  sim_lr.attach(c_simlr);

  // simulate-images
  std::string si_config, si_out = "out";
  std::uint64_t si_seed = 1;
  int si_n = 10, si_grid = 64;
  bool si_png = false;
  CLI::App* c_simim = app.add_subcommand(
      "simulate-images", "generate marked point-process images");
  c_simim->add_option("--config", si_config);
  c_simim->add_option("--seed", si_seed);
  c_simim->add_option("--n-images", si_n);
  c_simim->add_option("--grid", si_grid)->check(CLI::Range(1, 128));
  c_simim->add_flag("--png", si_png, "also export 8-bit PNGs");
  c_simim->add_option("--out", si_out);

  // extract
  std::string ex_features = "rcf", ex_dataset, ex_out = "out";
  std::vector<std::string> ex_inputs;
  int ex_L = 512, ex_patch = 8, ex_reps = 1;
  double ex_frac = 0.5;
  bool ex_noresample = false;
  std::uint64_t ex_seed = 1;
  CLI::App* c_ex = app.add_subcommand(
      "extract", "featurize a dataset (rcf) or ingest external feature CSVs");
  c_ex->add_option("--features", ex_features, "rcf | file");
  c_ex->add_option("--dataset", ex_dataset, "simulate-images output dir");
  c_ex->add_option("--inputs", ex_inputs, "external feature CSVs (file mode)");
  c_ex->add_option("--L", ex_L, "random feature count");
  c_ex->add_option("--patch-size", ex_patch);
  c_ex->add_option("--replicates", ex_reps, "extractors to train");
  c_ex->add_option("--learn-fraction", ex_frac);
  c_ex->add_flag("--no-resample", ex_noresample,
                 "train every replicate on the unresampled learning set");
  c_ex->add_option("--seed", ex_seed);
  c_ex->add_option("--out", ex_out);

  // bootstrap
  std::string bs_method = "nonparametric", bs_truth, bs_basis = "resampled",
              bs_out = "out";
  std::vector<std::string> bs_inputs;
  featboot::BootstrapConfig bs_cfg;
  bs_cfg.seed = 1;
  CLI::App* c_bs = app.add_subcommand(
      "bootstrap", "replicate, align, and build confidence ellipses");
  c_bs->add_option("--method", bs_method,
                   "nonparametric | parametric | compromise");
  c_bs->add_option("--inputs", bs_inputs, "feature CSVs")->required();
  c_bs->add_option("--truth", bs_truth, "true coordinates CSV (optional)");
  c_bs->add_option("--B", bs_cfg.B);
  c_bs->add_option("--S", bs_cfg.S);
  c_bs->add_option("--K", bs_cfg.K);
  c_bs->add_option("--alpha", bs_cfg.alpha);
  c_bs->add_option("--seed", bs_cfg.seed);
  c_bs->add_option("--basis", bs_basis, "resampled | fixed");
  c_bs->add_option("--out", bs_out);

  // report
  std::string rp_ellipses, rp_coords, rp_shade, rp_out = "out";
  CLI::App* c_rp = app.add_subcommand(
      "report", "SVG figure and per-sample summary from ellipse output");
  c_rp->add_option("--ellipses", rp_ellipses)->required();
  c_rp->add_option("--coords", rp_coords, "coordinates CSV (default consensus)");
  c_rp->add_option("--shade", rp_shade, "response CSV for shading");
  c_rp->add_option("--out", rp_out);

  // experiment-lowrank
  LowRankFlags xp;
  std::string xp_method = "parametric";
  featboot::BootstrapConfig xp_boot;
  CLI::App* c_xp = app.add_subcommand(
      "experiment-lowrank", "full low-rank coverage experiment");
  xp.attach(c_xp);
  c_xp->add_option("--method", xp_method);
  c_xp->add_option("--B", xp_boot.B);
  c_xp->add_option("--S", xp_boot.S);
  c_xp->add_option("--alpha", xp_boot.alpha);

  CLI11_PARSE(app, argc, argv);
  try {
    if (c_simlr->parsed()) return cmd_simulate_lowrank(c_simlr, sim_lr);
    if (c_simim->parsed())
      return cmd_simulate_images(c_simim, si_config, si_seed, si_n, si_grid,
                                 si_png, si_out);
    if (c_ex->parsed())
      return cmd_extract(c_ex, ex_features, ex_dataset, ex_inputs, ex_L,
                         ex_patch, ex_reps, ex_frac, ex_noresample, ex_seed,
                         ex_out);
    if (c_bs->parsed())
      return cmd_bootstrap(bs_method, bs_inputs, bs_truth, bs_basis, bs_cfg,
                           bs_out);
    if (c_rp->parsed()) return cmd_report(rp_ellipses, rp_coords, rp_shade, rp_out);
    if (c_xp->parsed()) return cmd_experiment_lowrank(c_xp, xp, xp_method, xp_boot);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
