#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "featboot/procrustes.hpp"

using namespace featboot;

namespace {

Matrix random_matrix(int n, int m, Rng& rng) {
  Matrix X(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) X(i, j) = rng.normal();
  return X;
}

Matrix rotation2(double theta) {
  Matrix R(2, 2);
  R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return R;
}

double fit_error(const Matrix& X, const Matrix& Y, const Matrix& R) {
  return (X - Y * R).squaredNorm();
}

double gpa_objective(const std::vector<Matrix>& Xs, const GpaResult& g) {
  double obj = 0.0;
  for (std::size_t b = 0; b < Xs.size(); ++b)
    obj += (Xs[b] * g.rotations[b] - g.consensus).squaredNorm();
  return obj;
}

}  // namespace

TEST_CASE("orthogonal_procrustes identical inputs give identity") {
  Rng rng(1);
  Matrix X = random_matrix(6, 3, rng);
  Matrix R = orthogonal_procrustes(X, X);
  CHECK((R - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("orthogonal_procrustes recovers a planted rotation exactly") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    Matrix Y = random_matrix(10, 3, rng);
    Matrix R0 = sample_haar_orthonormal(3, 3, rng);
    Matrix X = Y * R0;
    Matrix R = orthogonal_procrustes(X, Y);
    CHECK((R - R0).norm() < 1e-8);
    CHECK((R.transpose() * R - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <
          1e-10);
  }
}

TEST_CASE("orthogonal_procrustes beats a dense K=2 rotation grid") {
  // independent oracle: scan 1e5 rotations and reflections of the plane
  Rng rng(23);
  Matrix Y = random_matrix(8, 2, rng);
  Matrix X = random_matrix(8, 2, rng);
  Matrix R = orthogonal_procrustes(X, Y);
  const double solved = fit_error(X, Y, R);

  Matrix flip(2, 2);
  flip << 1, 0, 0, -1;
  double best = 1e300;
  const int G = 100000;
  for (int g = 0; g < G; ++g) {
    const Matrix Rg = rotation2(2.0 * 3.14159265358979323846 * g / G);
    best = std::min(best, fit_error(X, Y, Rg));
    best = std::min(best, fit_error(X, Y, Rg * flip));
  }
  CHECK(solved <= best + 1e-6);
}

TEST_CASE("orthogonal_procrustes optimality against random orthogonal maps") {
  Rng rng(31);
  Matrix Y = random_matrix(12, 4, rng);
  Matrix X = random_matrix(12, 4, rng);
  Matrix R = orthogonal_procrustes(X, Y);
  const double solved = fit_error(X, Y, R);
  for (int t = 0; t < 100; ++t) {
    Matrix Q = sample_haar_orthonormal(4, 4, rng);
    CHECK(solved <= fit_error(X, Y, Q) + 1e-9);
  }
}

TEST_CASE("orthogonal_procrustes shape mismatch throws") {
  Matrix X = Matrix::Zero(3, 2), Y = Matrix::Zero(4, 2);
  CHECK_THROWS_AS(orthogonal_procrustes(X, Y), std::invalid_argument);
}

TEST_CASE("generalized_procrustes on identical inputs") {
  Rng rng(3);
  Matrix X = random_matrix(7, 2, rng);
  std::vector<Matrix> Xs{X, X, X};
  GpaResult g = generalized_procrustes(Xs);
  for (const Matrix& R : g.rotations)
    CHECK((R - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((g.consensus - X).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(g.objective_trace.back() < 1e-18);
}

TEST_CASE("generalized_procrustes undoes planted rotations") {
  Rng rng(4);
  Matrix X = random_matrix(9, 3, rng);
  std::vector<Matrix> Xs;
  for (int b = 0; b < 5; ++b) {
    Matrix Rb = sample_haar_orthonormal(3, 3, rng);
    Xs.push_back(X * Rb.transpose());
  }
  GpaResult g = generalized_procrustes(Xs);
  CHECK(g.objective_trace.back() < 1e-12);
  // all rotated copies coincide with the consensus
  for (std::size_t b = 0; b < Xs.size(); ++b)
    CHECK((Xs[b] * g.rotations[b] - g.consensus).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("generalized_procrustes objective never increases") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Rng rng(seed);
    std::vector<Matrix> Xs;
    for (int b = 0; b < 4; ++b) Xs.push_back(random_matrix(6, 2, rng));
    GpaResult g = generalized_procrustes(Xs);
    for (std::size_t t = 1; t < g.objective_trace.size(); ++t)
      CHECK(g.objective_trace[t] <= g.objective_trace[t - 1] + 1e-12);
    // reported objective matches an external recomputation
    CHECK(gpa_objective(Xs, g) ==
          doctest::Approx(g.objective_trace.back()).epsilon(1e-9));
    // no worse than the trivial alignment (all rotations identity)
    Matrix M = Matrix::Zero(6, 2);
    for (const Matrix& X : Xs) M += X;
    M /= double(Xs.size());
    double trivial = 0.0;
    for (const Matrix& X : Xs) trivial += (X - M).squaredNorm();
    CHECK(g.objective_trace.back() <= trivial + 1e-9);
  }
}

TEST_CASE("generalized_procrustes is idempotent on aligned output") {
  Rng rng(77);
  std::vector<Matrix> Xs;
  for (int b = 0; b < 3; ++b) Xs.push_back(random_matrix(8, 2, rng));
  GpaResult g = generalized_procrustes(Xs);
  std::vector<Matrix> aligned;
  for (std::size_t b = 0; b < Xs.size(); ++b)
    aligned.push_back(Xs[b] * g.rotations[b]);
  GpaResult g2 = generalized_procrustes(aligned);
  const double before = g.objective_trace.back();
  const double after = g2.objective_trace.back();
  CHECK(after <= before + 1e-9);
  CHECK(std::abs(after - before) <= 1e-6 * std::max(before, 1.0));
}

TEST_CASE("generalized_procrustes input validation") {
  std::vector<Matrix> none;
  CHECK_THROWS_AS(generalized_procrustes(none), std::invalid_argument);
  std::vector<Matrix> mixed{Matrix::Zero(3, 2), Matrix::Zero(4, 2)};
  CHECK_THROWS_AS(generalized_procrustes(mixed), std::invalid_argument);
}
