#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "featboot/linalg.hpp"
#include "featboot/rng.hpp"

namespace featboot {

inline constexpr int kNumClasses = 3;

struct MaternParams {
  double nu = 1.0;      // roughness
  double alpha = 1.0;   // bandwidth
  double sigma2 = 1.0;  // marginal variance
};

/// Matern covariance at distance d; returns sigma2 at d = 0 (limit).
double matern_covariance(double d, const MaternParams& p);

/// Zero-mean Gaussian field on a grid x grid lattice of unit-square cell
/// centers, drawn through a dense Cholesky factorization with escalating
/// diagonal jitter. Reusable across draws.
class MaternFieldSampler {
 public:
  MaternFieldSampler(int grid, const MaternParams& p);
  Matrix draw(Rng& rng) const;
  int grid() const { return grid_; }

 private:
  int grid_;
  Matrix chol_;  // lower factor of the jittered covariance
};

Matrix sample_gaussian_field(int grid, const MaternParams& p, Rng& rng);

/// Ground-truth generative parameters for one image. Roughness/bandwidth
/// values are floored at 0.05 when fields are built; the raw draws are kept
/// here for the response computation.
struct PointProcessParams {
  double n_points = 200;                       // N, rounded at sampling time
  double nu_lambda = 1.0;                      // overall intensity roughness
  double alpha_lambda = 1.0;                   // overall intensity bandwidth
  std::array<double, kNumClasses> beta{};      // class frequency intercepts
  double nu_b = 1.0;                           // relative intensity roughness
  double alpha_b = 1.0;                        // relative intensity bandwidth
  double tau = 1.0;                            // class-assignment temperature
  std::array<double, kNumClasses> lambda{200, 200, 200};  // radius rates
};

struct PointRecord {
  double x = 0;  // unit-square coordinates
  double y = 0;
  int cls = 0;   // 0-based class index
  double radius = 0;
};

struct ImageSample {
  int grid = 64;
  std::vector<float> image;  // grid x grid x 3, row-major, values in [0, 1]
  std::vector<PointRecord> points;
  Matrix intensity;                              // Lambda grid
  std::array<Matrix, kNumClasses> class_fields;  // B_r grids
  double y = 0.0;
  PointProcessParams params;
};

/// Draw each parameter uniformly inside its range (see kParamRanges).
PointProcessParams draw_params(Rng& rng);

/// Hand-specified linear response: fixed influence weights applied to each
/// parameter after unit-scaling its range to [0, 1].
double response_from_params(const PointProcessParams& p);

/// Marked log-Cox Matern draw: exponentiated Gaussian fields give the overall
/// and per-class intensities, N locations are placed with density
/// proportional to the overall intensity, classes follow the tempered
/// relative intensities, and Gamma(5, rate lambda_r) radii are rasterized
/// into the class channels.
ImageSample sample_image(const PointProcessParams& params, int grid, Rng& rng);

std::vector<ImageSample> generate_dataset(int n_images, std::uint64_t seed,
                                          int grid = 64);

}  // namespace featboot
