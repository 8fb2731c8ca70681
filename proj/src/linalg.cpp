#include "featboot/linalg.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace featboot {

TruncatedSvd truncated_svd(const Matrix& X, int K) {
  if (!X.allFinite())
    throw std::invalid_argument("truncated_svd: non-finite input");
  const int m = static_cast<int>(X.rows());
  const int n = static_cast<int>(X.cols());
  if (K < 1 || K > std::min(m, n))
    throw std::invalid_argument("truncated_svd: K out of range");

  Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  TruncatedSvd out;
  out.U = svd.matrixU().leftCols(K);
  out.S = svd.singularValues().head(K);
  out.V = svd.matrixV().leftCols(K);
  out.rank = K;

  // sign convention: largest-magnitude entry of each V column nonnegative,
  // magnitude ties broken by lowest index
  for (int k = 0; k < K; ++k) {
    int arg = 0;
    double best = std::abs(out.V(0, k));
    for (int j = 1; j < n; ++j) {
      const double a = std::abs(out.V(j, k));
      if (a > best) {
        best = a;
        arg = j;
      }
    }
    if (out.V(arg, k) < 0.0) {
      out.V.col(k) = -out.V.col(k);
      out.U.col(k) = -out.U.col(k);
    }
  }
  return out;
}

std::pair<Matrix, Vector> column_center(const Matrix& X) {
  if (!X.allFinite())
    throw std::invalid_argument("column_center: non-finite input");
  Vector mean = X.colwise().mean();
  Matrix centered = X.rowwise() - mean.transpose();
  return {std::move(centered), std::move(mean)};
}

Matrix sample_haar_orthonormal(int n, int K, Rng& rng) {
  if (K < 1 || K > n)
    throw std::invalid_argument("sample_haar_orthonormal: need 1 <= K <= n");
  Matrix G(n, K);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < K; ++j) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ() * Matrix::Identity(n, K);
  Matrix R = qr.matrixQR().topRows(K).triangularView<Eigen::Upper>();
  // sign-fix against the R diagonal so the distribution is exactly Haar
  for (int j = 0; j < K; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  return Q;
}

std::vector<int> random_permutation(int K, Rng& rng) {
  if (K < 1) throw std::invalid_argument("random_permutation: K >= 1 required");
  std::vector<int> p(K);
  std::iota(p.begin(), p.end(), 0);
  for (int i = K - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(p[i], p[j]);
  }
  return p;
}

Matrix permute_columns(const Matrix& X, const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != X.cols())
    throw std::invalid_argument("permute_columns: size mismatch");
  Matrix out(X.rows(), X.cols());
  for (int j = 0; j < X.cols(); ++j) out.col(j) = X.col(perm[j]);
  return out;
}

Matrix principal_coordinates(const Matrix& Z, int K) {
  TruncatedSvd f = truncated_svd(Z, K);
  return f.U * f.S.asDiagonal();
}

}  // namespace featboot
