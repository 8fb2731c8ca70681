#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "featboot/linalg.hpp"
#include "featboot/procrustes.hpp"

namespace featboot {

struct SplitSpec {
  std::vector<int> learn_indices;  // I
  std::vector<int> infer_indices;  // I^C
  double learn_fraction = 0.0;
};

/// Uniformly random partition of {0..n-1} with |I| = round(fraction * n).
SplitSpec split(int n, double learn_fraction, Rng& rng);

struct ReplicateSet {
  std::vector<Matrix> coords;      // B matrices, n_inf x K
  bool aligned = false;
  std::vector<Matrix> rotations;   // present once aligned
  Matrix consensus;                // present once aligned
  std::vector<double> objective_trace;
};

enum class BootstrapMethod { kNonparametric, kParametric, kCompromise };
enum class ParametricBasis { kResampled, kFixed };

struct BootstrapConfig {
  BootstrapMethod method = BootstrapMethod::kNonparametric;
  int B = 1000;          // replicate count
  int S = 100;           // extractor count (compromise only)
  int K = 2;             // projection rank
  double alpha = 0.05;
  std::uint64_t seed = 0;
  ParametricBasis parametric_basis = ParametricBasis::kResampled;
};

BootstrapMethod parse_method(const std::string& name);
std::string method_name(BootstrapMethod m);

/// One coordinate matrix per feature extractor run: column-center, rank-K
/// truncated SVD, principal coordinates. Column counts may differ across
/// inputs; rows must agree.
ReplicateSet nonparametric_replicates(const std::vector<Matrix>& feature_sets,
                                      int K);

/// Fixed-effects bootstrap around a rank-K fit of a single feature matrix.
/// Per replicate b (stream b): resample rows, refit the rank-K basis, project
/// all original rows onto it, add noise resampled from the fit residual pool,
/// and apply a random column permutation. Under ParametricBasis::kFixed the
/// basis and pool come from a single fit of the original matrix.
ReplicateSet parametric_replicates(const Matrix& Z, const BootstrapConfig& cfg,
                                   const Rng& base);

/// Hybrid: S row-resampled rank-K fits, residual pool shared across all of
/// them, each of the B replicates drawing a basis uniformly from the S fits.
ReplicateSet compromise_replicates(const std::vector<Matrix>& feature_sets,
                                   const BootstrapConfig& cfg, const Rng& base);

/// Generalized Procrustes alignment of the replicate coordinates.
ReplicateSet align(ReplicateSet reps, double tol = 1e-9, int max_cycles = 100);

struct ConfidenceEllipseSet {
  Matrix means;                       // n_inf x K
  std::vector<Matrix> covariances;    // n_inf regularized K x K PSD matrices
  std::vector<double> regularization; // diagonal load applied per sample
  double level = 0.0;                 // 1 - alpha
  double quantile = 0.0;              // chi^2_K(1 - alpha)
  Matrix consensus;                   // alignment target for coverage
  int K = 0;
};

/// Per-sample mean and covariance of the B aligned positions, with a small
/// diagonal load so membership tests stay defined for degenerate clouds.
ConfidenceEllipseSet confidence_ellipses(const ReplicateSet& reps,
                                         double alpha);

/// Mahalanobis membership test for one sample.
bool ellipse_contains(const ConfidenceEllipseSet& e, int i, const Vector& x);

/// Area of the K=2 ellipse for sample i: pi * quantile * sqrt(det Sigma_i).
double ellipse_area(const ConfidenceEllipseSet& e, int i);

/// Fraction of samples whose true coordinates, centered and Procrustes-rotated
/// onto the consensus, fall inside their ellipses.
double coverage(const ConfidenceEllipseSet& ellipses, const Matrix& truth);

double chi_squared_quantile(int dof, double p);

}  // namespace featboot
