#include "featboot/pointprocess.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "featboot/parallel.hpp"

namespace featboot {

namespace {

constexpr double kRoughnessFloor = 0.05;  // Matern undefined at nu or alpha 0

struct Range {
  double lo, hi;
};
constexpr Range kN{50, 1000};
constexpr Range kNuLambda{0, 8};
constexpr Range kAlphaLambda{0, 8};
constexpr Range kBeta{-0.15, 0.15};
constexpr Range kNuB{0, 3};
constexpr Range kAlphaB{0, 3};
constexpr Range kTau{0, 3};
constexpr Range kLambda{100, 500};

double draw_in(const Range& r, Rng& rng) {
  return r.lo + (r.hi - r.lo) * rng.uniform();
}

double unit_scale(double v, const Range& r) {
  return (v - r.lo) / (r.hi - r.lo);
}

// Gaussian fields are drawn on a lattice of at most this size and bilinearly
// interpolated to the render grid; dense Cholesky sampling at full render
// resolution is prohibitively slow and the fields are smooth at this scale.
constexpr int kFieldLatticeCap = 32;

// Bilinear interpolation from an fg x fg lattice of cell centers to a
// g x g lattice of cell centers, both spanning the unit square.
Matrix upsample_field(const Matrix& field, int g) {
  const int fg = static_cast<int>(field.rows());
  if (fg == g) return field;
  Matrix out(g, g);
  for (int row = 0; row < g; ++row) {
    const double v = (row + 0.5) / g * fg - 0.5;
    const int r0 = std::clamp(static_cast<int>(std::floor(v)), 0, fg - 1);
    const int r1 = std::min(r0 + 1, fg - 1);
    const double fv = std::clamp(v - r0, 0.0, 1.0);
    for (int col = 0; col < g; ++col) {
      const double u = (col + 0.5) / g * fg - 0.5;
      const int c0 = std::clamp(static_cast<int>(std::floor(u)), 0, fg - 1);
      const int c1 = std::min(c0 + 1, fg - 1);
      const double fu = std::clamp(u - c0, 0.0, 1.0);
      out(col, row) = (1 - fv) * ((1 - fu) * field(c0, r0) + fu * field(c1, r0)) +
                      fv * ((1 - fu) * field(c0, r1) + fu * field(c1, r1));
    }
  }
  return out;
}

}  // namespace

double matern_covariance(double d, const MaternParams& p) {
  if (p.nu <= 0.0 || p.alpha <= 0.0 || p.sigma2 <= 0.0)
    throw std::invalid_argument("matern_covariance: parameters must be > 0");
  if (d < 0.0) throw std::invalid_argument("matern_covariance: d >= 0");
  if (d == 0.0) return p.sigma2;
  const double u = std::sqrt(2.0 * p.nu) * d / p.alpha;
  const double val = p.sigma2 * std::pow(2.0, 1.0 - p.nu) /
                     std::tgamma(p.nu) * std::pow(u, p.nu) *
                     std::cyl_bessel_k(p.nu, u);
  // u overflow/underflow in the Bessel tail collapses to 0 correlation
  return std::isfinite(val) ? val : 0.0;
}

MaternFieldSampler::MaternFieldSampler(int grid, const MaternParams& p)
    : grid_(grid) {
  if (grid < 1 || grid > 128)
    throw std::invalid_argument("MaternFieldSampler: grid in [1, 128]");
  const int m = grid * grid;
  // lattice distances take only grid^2 distinct values, so evaluate the
  // (Bessel-backed) covariance once per offset pair instead of once per entry
  const double h = 1.0 / grid;
  Matrix table(grid, grid);
  for (int dr = 0; dr < grid; ++dr)
    for (int dc = 0; dc < grid; ++dc)
      table(dr, dc) = matern_covariance(h * std::hypot(dr, dc), p);
  Matrix cov(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) {
      const int dc = std::abs(a % grid - b % grid);
      const int dr = std::abs(a / grid - b / grid);
      cov(a, b) = cov(b, a) = table(dr, dc);
    }
  for (double jitter = 1e-8; jitter <= 1e-4 + 1e-12; jitter *= 2.0) {
    Matrix work = cov;
    work.diagonal().array() += jitter * p.sigma2;
    Eigen::LLT<Matrix> llt(work);
    if (llt.info() == Eigen::Success) {
      chol_ = llt.matrixL();
      return;
    }
  }
  throw std::runtime_error(
      "MaternFieldSampler: covariance factorization failed at max jitter");
}

Matrix MaternFieldSampler::draw(Rng& rng) const {
  const int m = grid_ * grid_;
  Vector z(m);
  for (int i = 0; i < m; ++i) z(i) = rng.normal();
  Vector field = chol_ * z;
  return Eigen::Map<Matrix>(field.data(), grid_, grid_);
}

Matrix sample_gaussian_field(int grid, const MaternParams& p, Rng& rng) {
  return MaternFieldSampler(grid, p).draw(rng);
}

PointProcessParams draw_params(Rng& rng) {
  PointProcessParams p;
  p.n_points = draw_in(kN, rng);
  p.nu_lambda = draw_in(kNuLambda, rng);
  p.alpha_lambda = draw_in(kAlphaLambda, rng);
  for (int r = 0; r < kNumClasses; ++r) p.beta[r] = draw_in(kBeta, rng);
  p.nu_b = draw_in(kNuB, rng);
  p.alpha_b = draw_in(kAlphaB, rng);
  p.tau = draw_in(kTau, rng);
  for (int r = 0; r < kNumClasses; ++r) p.lambda[r] = draw_in(kLambda, rng);
  return p;
}

double response_from_params(const PointProcessParams& p) {
  double y = 0.0;
  y += 0.5 * unit_scale(p.n_points, kN);
  y += -0.5 * unit_scale(p.nu_lambda, kNuLambda);
  y += -0.5 * unit_scale(p.alpha_lambda, kAlphaLambda);
  y += 1.0 * unit_scale(p.beta[0], kBeta);
  y += -1.0 * unit_scale(p.beta[1], kBeta);
  y += -1.0 * unit_scale(p.beta[2], kBeta);
  y += -0.5 * unit_scale(p.nu_b, kNuB);
  y += -0.5 * unit_scale(p.alpha_b, kAlphaB);
  y += 0.5 * unit_scale(p.tau, kTau);
  y += 1.0 * unit_scale(p.lambda[0], kLambda);
  return y;
}

ImageSample sample_image(const PointProcessParams& params, int grid, Rng& rng) {
  if (params.n_points < 1 || params.tau < 0.0)
    throw std::invalid_argument("sample_image: invalid params");
  for (double lam : params.lambda)
    if (lam <= 0.0) throw std::invalid_argument("sample_image: lambda > 0");

  ImageSample out;
  out.grid = grid;
  out.params = params;
  out.y = response_from_params(params);

  MaternParams overall{std::max(params.nu_lambda, kRoughnessFloor),
                       std::max(params.alpha_lambda, kRoughnessFloor), 1.0};
  MaternParams relative{std::max(params.nu_b, kRoughnessFloor),
                        std::max(params.alpha_b, kRoughnessFloor), 1.0};

  const int fg = std::min(grid, kFieldLatticeCap);
  out.intensity =
      upsample_field(MaternFieldSampler(fg, overall).draw(rng), grid)
          .array()
          .exp();
  MaternFieldSampler rel_sampler(fg, relative);
  for (int r = 0; r < kNumClasses; ++r)
    out.class_fields[r] =
        (upsample_field(rel_sampler.draw(rng), grid).array() + params.beta[r])
            .exp();

  // cell-selection weights proportional to the overall intensity
  const int m = grid * grid;
  std::vector<double> cum(m);
  double total = 0.0;
  for (int c = 0; c < m; ++c) {
    total += out.intensity(c % grid, c / grid);
    cum[c] = total;
  }

  const int n_points = static_cast<int>(std::lround(params.n_points));
  out.image.assign(static_cast<std::size_t>(m) * kNumClasses, 0.0f);
  out.points.reserve(n_points);

  for (int q = 0; q < n_points; ++q) {
    const double u = rng.uniform() * total;
    const int cell = static_cast<int>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    const int col = cell % grid;
    const int row = cell / grid;

    PointRecord pt;
    pt.x = (col + rng.uniform()) / grid;
    pt.y = (row + rng.uniform()) / grid;

    // tempered class assignment, computed as a softmax in log space
    double logits[kNumClasses];
    double lmax = -1e300;
    for (int r = 0; r < kNumClasses; ++r) {
      logits[r] = params.tau * std::log(out.class_fields[r](col, row));
      lmax = std::max(lmax, logits[r]);
    }
    double probs[kNumClasses];
    double psum = 0.0;
    for (int r = 0; r < kNumClasses; ++r) {
      probs[r] = std::exp(logits[r] - lmax);
      psum += probs[r];
    }
    double v = rng.uniform() * psum;
    pt.cls = kNumClasses - 1;
    for (int r = 0; r < kNumClasses; ++r) {
      v -= probs[r];
      if (v < 0.0) {
        pt.cls = r;
        break;
      }
    }

    pt.radius = rng.gamma(5.0, params.lambda[pt.cls]);
    out.points.push_back(pt);

    // rasterize: pixel radius = radius * grid / 512 (a rendering constant,
    // not part of the ground truth); typical radii paint single pixels, so
    // per-channel pixel counts track the point counts
    const double px = pt.x * grid;
    const double py = pt.y * grid;
    const double pr = pt.radius * grid / 512.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(px - pr)));
    const int x1 = std::min(grid - 1, static_cast<int>(std::ceil(px + pr)));
    const int y0 = std::max(0, static_cast<int>(std::floor(py - pr)));
    const int y1 = std::min(grid - 1, static_cast<int>(std::ceil(py + pr)));
    for (int yy = y0; yy <= y1; ++yy)
      for (int xx = x0; xx <= x1; ++xx)
        if (std::hypot(xx + 0.5 - px, yy + 0.5 - py) <= pr)
          out.image[(static_cast<std::size_t>(yy) * grid + xx) * kNumClasses +
                    pt.cls] = 1.0f;
    // a point always marks its own pixel, even at sub-pixel radius
    out.image[(static_cast<std::size_t>(std::min(row, grid - 1)) * grid +
               std::min(col, grid - 1)) *
                  kNumClasses +
              pt.cls] = 1.0f;
  }
  return out;
}

std::vector<ImageSample> generate_dataset(int n_images, std::uint64_t seed,
                                          int grid) {
  if (n_images < 1)
    throw std::invalid_argument("generate_dataset: n_images >= 1");
  const Rng base(seed);
  std::vector<ImageSample> out(n_images);
  parallel_for(n_images, [&](int i) {
    Rng rng = base.stream(static_cast<std::uint64_t>(i));
    PointProcessParams p = draw_params(rng);
    out[i] = sample_image(p, grid, rng);
  });
  return out;
}

}  // namespace featboot
