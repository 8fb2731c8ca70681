#include "featboot/lowrank.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

namespace featboot {

namespace {

// stream layout inside one experiment seed: replicate streams [0, B) and the
// extractor-resample block (1 << 32) + s are claimed by the bootstrap module;
// the experiment keeps its own draws clear of both
constexpr std::uint64_t kExtractorCallStream = 2ULL << 32;
constexpr std::uint64_t kDataStream = 3ULL << 32;

Matrix apply_extractor_noise(const Matrix& base_coords, double noise_sd,
                             Rng& rng) {
  Matrix Z = base_coords;
  for (int i = 0; i < Z.rows(); ++i)
    for (int j = 0; j < Z.cols(); ++j) Z(i, j) += noise_sd * rng.normal();
  return permute_columns(Z, random_permutation(static_cast<int>(Z.cols()), rng));
}

}  // namespace

LowRankDataset generate_lowrank(const LowRankConfig& cfg, Rng& rng) {
  if (cfg.K < 2 || cfg.K % 2 != 0)
    throw std::invalid_argument("generate_lowrank: K must be even and >= 2");
  if (cfg.K > std::min(cfg.n, cfg.D))
    throw std::invalid_argument("generate_lowrank: K exceeds min(n, D)");
  if (cfg.sigma_E < 0.0 || cfg.sigma_y < 0.0)
    throw std::invalid_argument("generate_lowrank: negative noise sd");

  LowRankDataset d;
  d.U = sample_haar_orthonormal(cfg.n, cfg.K, rng);
  d.V = sample_haar_orthonormal(cfg.D, cfg.K, rng);
  d.sigma = Vector::Constant(cfg.K, cfg.c);
  d.beta.resize(cfg.K);
  d.beta.head(cfg.K / 2).setConstant(cfg.b_coef);
  d.beta.tail(cfg.K / 2).setConstant(-cfg.b_coef);

  d.X = d.U * d.sigma.asDiagonal() * d.V.transpose();
  for (int i = 0; i < cfg.n; ++i)
    for (int j = 0; j < cfg.D; ++j) d.X(i, j) += cfg.sigma_E * rng.normal();

  d.y = d.U * d.sigma.asDiagonal() * d.beta;
  for (int i = 0; i < cfg.n; ++i) d.y(i) += cfg.sigma_y * rng.normal();
  return d;
}

Matrix svd_extractor(const Matrix& X, int K_hat, double noise_sd, Rng& rng) {
  if (K_hat < 1 || K_hat > std::min(X.rows(), X.cols()))
    throw std::invalid_argument("svd_extractor: rank out of range");
  TruncatedSvd f = truncated_svd(X, K_hat);
  Matrix coords = f.U * f.S.asDiagonal();
  return apply_extractor_noise(coords, noise_sd, rng);
}

CoverageReport run_lowrank_experiment(const LowRankConfig& cfg,
                                      const BootstrapConfig& boot,
                                      std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const Rng base(seed);

  Rng data_rng = base.stream(kDataStream);
  LowRankDataset data = generate_lowrank(cfg, data_rng);
  const Matrix truth = data.U * data.sigma.asDiagonal();

  // all extractor calls share the one SVD of X; only noise and column
  // permutation are redrawn per call, standing in for retraining
  TruncatedSvd f = truncated_svd(data.X, cfg.K_hat);
  const Matrix base_coords = f.U * f.S.asDiagonal();
  auto extractor_call = [&](int call) {
    Rng rng = base.stream(kExtractorCallStream + static_cast<std::uint64_t>(call));
    return apply_extractor_noise(base_coords, cfg.extractor_noise_sd, rng);
  };

  ReplicateSet reps;
  switch (boot.method) {
    case BootstrapMethod::kNonparametric: {
      std::vector<Matrix> sets;
      sets.reserve(boot.B);
      for (int b = 0; b < boot.B; ++b) sets.push_back(extractor_call(b));
      reps = nonparametric_replicates(sets, boot.K);
      break;
    }
    case BootstrapMethod::kParametric:
      reps = parametric_replicates(extractor_call(0), boot, base);
      break;
    case BootstrapMethod::kCompromise: {
      std::vector<Matrix> sets;
      sets.reserve(boot.S);
      for (int s = 0; s < boot.S; ++s) sets.push_back(extractor_call(s));
      reps = compromise_replicates(sets, boot, base);
      break;
    }
  }

  reps = align(std::move(reps));
  ConfidenceEllipseSet ellipses = confidence_ellipses(reps, boot.alpha);

  CoverageReport report;
  report.method = method_name(boot.method);
  report.n = cfg.n;
  report.B = boot.B;
  report.S = boot.method == BootstrapMethod::kCompromise ? boot.S : 0;
  report.K = boot.K;
  report.alpha = boot.alpha;
  report.seed = seed;
  report.coverage = coverage(ellipses, truth);
  double area = 0.0;
  for (int i = 0; i < cfg.n; ++i) area += ellipse_area(ellipses, i);
  report.mean_area = area / cfg.n;
  report.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

}  // namespace featboot
