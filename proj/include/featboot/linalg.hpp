#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "featboot/rng.hpp"

namespace featboot {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct TruncatedSvd {
  Matrix U;  // n x K, orthonormal columns
  Vector S;  // K singular values, non-increasing
  Matrix V;  // L x K, orthonormal columns
  int rank = 0;
};

/// Best rank-K approximation factors of X, with a deterministic sign
/// convention: each column of V has its largest-magnitude entry nonnegative
/// (magnitude ties broken by lowest index).
TruncatedSvd truncated_svd(const Matrix& X, int K);

/// Subtract per-column means. Returns the centered matrix and the mean vector.
std::pair<Matrix, Vector> column_center(const Matrix& X);

/// n x K matrix with orthonormal columns, Haar-distributed. Realized by QR of
/// a standard Gaussian matrix with the R diagonal sign-fixed.
Matrix sample_haar_orthonormal(int n, int K, Rng& rng);

/// Uniform permutation of {0..K-1} (Fisher-Yates).
std::vector<int> random_permutation(int K, Rng& rng);

/// Apply a column permutation: result column j = X column perm[j].
Matrix permute_columns(const Matrix& X, const std::vector<int>& perm);

/// Rows are the sample positions in the top-K projection space: U_K diag(S_K)
/// from the truncated SVD of Z. Z must be column-centered by the caller.
Matrix principal_coordinates(const Matrix& Z, int K);

}  // namespace featboot
