#include "featboot/procrustes.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace featboot {

Matrix orthogonal_procrustes(const Matrix& X, const Matrix& Y) {
  if (X.rows() != Y.rows() || X.cols() != Y.cols())
    throw std::invalid_argument("orthogonal_procrustes: shape mismatch");
  if (!X.allFinite() || !Y.allFinite())
    throw std::invalid_argument("orthogonal_procrustes: non-finite input");
  // ||X - Y R||^2 is minimized by R = U V^T from the SVD of Y^T X
  Matrix M = Y.transpose() * X;
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

namespace {

double gpa_objective(const std::vector<Matrix>& Xs,
                     const std::vector<Matrix>& Rs, const Matrix& M) {
  double obj = 0.0;
  for (std::size_t b = 0; b < Xs.size(); ++b)
    obj += (Xs[b] * Rs[b] - M).squaredNorm();
  return obj;
}

}  // namespace

GpaResult generalized_procrustes(const std::vector<Matrix>& Xs, double tol,
                                 int max_cycles) {
  const std::size_t B = Xs.size();
  if (B < 2) throw std::invalid_argument("generalized_procrustes: B >= 2");
  for (const Matrix& X : Xs)
    if (X.rows() != Xs[0].rows() || X.cols() != Xs[0].cols())
      throw std::invalid_argument("generalized_procrustes: shape mismatch");

  const int K = static_cast<int>(Xs[0].cols());
  GpaResult out;
  out.rotations.assign(B, Matrix::Identity(K, K));

  // cycle 0 is the trivial alignment (identity rotations, plain mean); a
  // candidate cycle is adopted only if it improves on the current state, so
  // the result can never be worse than no alignment at all
  Matrix mean0 = Matrix::Zero(Xs[0].rows(), K);
  for (const Matrix& X : Xs) mean0 += X;
  mean0 /= static_cast<double>(B);
  out.consensus = std::move(mean0);
  double prev = gpa_objective(Xs, out.rotations, out.consensus);
  out.objective_trace.push_back(prev);

  Matrix M = Xs[0];  // warm start for the first rotation update
  std::vector<Matrix> cand(B);
  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    for (std::size_t b = 0; b < B; ++b)
      cand[b] = orthogonal_procrustes(M, Xs[b]);
    Matrix cand_M = Matrix::Zero(Xs[0].rows(), K);
    for (std::size_t b = 0; b < B; ++b) cand_M += Xs[b] * cand[b];
    cand_M /= static_cast<double>(B);

    const double obj = gpa_objective(Xs, cand, cand_M);
    if (obj > prev) break;  // keep the previous configuration
    out.rotations = cand;
    out.consensus = cand_M;
    out.objective_trace.push_back(obj);
    out.cycles = cycle + 1;
    M = out.consensus;
    if (prev - obj < tol * std::max(prev, 1e-300)) break;
    prev = obj;
  }
  return out;
}

}  // namespace featboot
