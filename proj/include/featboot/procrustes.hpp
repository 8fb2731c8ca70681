#pragma once

#include <vector>

#include "featboot/linalg.hpp"

namespace featboot {

/// Orthogonal map globally minimizing ||X - Y R||_F over the orthogonal
/// group (reflections permitted). X and Y must share shape and be
/// column-centered.
Matrix orthogonal_procrustes(const Matrix& X, const Matrix& Y);

struct GpaResult {
  std::vector<Matrix> rotations;       // B orthogonal K x K maps
  Matrix consensus;                    // n x K mean of rotated inputs
  std::vector<double> objective_trace; // per-cycle sum_b ||X_b R_b - M||_F^2
  int cycles = 0;
};

/// Generalized Procrustes alignment: cyclically re-solve each pairwise
/// problem against the evolving consensus mean until the relative objective
/// decrease over a full cycle drops below tol. The consensus is initialized
/// from the first input.
GpaResult generalized_procrustes(const std::vector<Matrix>& Xs,
                                 double tol = 1e-9, int max_cycles = 100);

}  // namespace featboot
