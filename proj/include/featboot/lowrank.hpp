#pragma once

#include <cstdint>
#include <string>

#include "featboot/bootstrap.hpp"
#include "featboot/linalg.hpp"

namespace featboot {

struct LowRankConfig {
  int n = 1000;           // sample count
  int D = 100;            // ambient dimension
  double c = 100.0;       // shared singular-value scale
  double b_coef = 1.0;    // response coefficient magnitude
  int K = 2;              // latent rank (must be even)
  double sigma_E = 0.1;   // observation noise sd
  double sigma_y = 0.1;   // response noise sd
  double extractor_noise_sd = 0.1;
  int K_hat = 10;         // extractor output rank (see svd_extractor)
};

struct LowRankDataset {
  Matrix X;      // n x D
  Vector y;      // n
  Matrix U;      // n x K Haar factor
  Matrix V;      // D x K Haar factor
  Vector sigma;  // K singular values, all c
  Vector beta;   // (b, ..., b, -b, ..., -b)
};

/// X = U Sigma V^T + E, y = U Sigma beta + eps with Haar factors and
/// Gaussian noise.
LowRankDataset generate_lowrank(const LowRankConfig& cfg, Rng& rng);

/// Noisy, column-permuted principal coordinates: (U_Khat S_Khat + E~) Pi
/// with E~ entries N(0, noise_sd^2) and a fresh K_hat x K_hat permutation.
Matrix svd_extractor(const Matrix& X, int K_hat, double noise_sd, Rng& rng);

struct CoverageReport {
  std::string method;
  int n = 0;
  int B = 0;
  int S = 0;
  int K = 0;
  double alpha = 0.0;
  double coverage = 0.0;
  double mean_area = 0.0;
  double runtime_s = 0.0;
  std::uint64_t seed = 0;
};

/// End-to-end coverage experiment: generate data, run the configured
/// bootstrap strategy on extractor outputs, align, build ellipses, and
/// evaluate coverage against the true coordinates U Sigma. Deterministic
/// given (cfg, boot, seed).
CoverageReport run_lowrank_experiment(const LowRankConfig& cfg,
                                      const BootstrapConfig& boot,
                                      std::uint64_t seed);

}  // namespace featboot
