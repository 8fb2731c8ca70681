#include "featboot/rcf.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "featboot/parallel.hpp"

namespace featboot {

std::vector<Patch> sample_patches(const std::vector<ImageTensor>& train_images,
                                  int L, int s, Rng& rng, bool center_kernels) {
  if (train_images.empty())
    throw std::invalid_argument("sample_patches: no training images");
  if (L < 1) throw std::invalid_argument("sample_patches: L >= 1");
  for (const ImageTensor& img : train_images)
    if (img.h < s || img.w < s)
      throw std::invalid_argument("sample_patches: patch larger than image");

  std::vector<Patch> patches;
  patches.reserve(L);
  for (int l = 0; l < L; ++l) {
    const ImageTensor& img =
        train_images[rng.below(train_images.size())];
    const int y0 = static_cast<int>(rng.below(img.h - s + 1));
    const int x0 = static_cast<int>(rng.below(img.w - s + 1));
    Patch p;
    p.s = s;
    p.c = img.c;
    p.data.resize(static_cast<std::size_t>(s) * s * img.c);
    double sum = 0.0;
    for (int y = 0; y < s; ++y)
      for (int x = 0; x < s; ++x)
        for (int ch = 0; ch < img.c; ++ch) {
          const float v = img.at(y0 + y, x0 + x, ch);
          p.data[(static_cast<std::size_t>(y) * s + x) * img.c + ch] = v;
          sum += v;
        }
    if (center_kernels) {
      const float mean = static_cast<float>(sum / p.data.size());
      for (float& v : p.data) v -= mean;
    }
    patches.push_back(std::move(p));
  }
  return patches;
}

namespace {

// Averaging over offsets commutes with the kernel inner product, so each
// feature is a dot product against the per-position window means:
//   z_l = sum_k w_l[k] * mean_off image[off + k]
std::vector<double> window_means(const ImageTensor& img, int s) {
  const int oh = img.h - s + 1;
  const int ow = img.w - s + 1;
  std::vector<double> means(static_cast<std::size_t>(s) * s * img.c, 0.0);
  for (int ky = 0; ky < s; ++ky)
    for (int kx = 0; kx < s; ++kx)
      for (int ch = 0; ch < img.c; ++ch) {
        double sum = 0.0;
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) sum += img.at(oy + ky, ox + kx, ch);
        means[(static_cast<std::size_t>(ky) * s + kx) * img.c + ch] =
            sum / (static_cast<double>(oh) * ow);
      }
  return means;
}

}  // namespace

Vector extract_features(const RcfModel& model, const ImageTensor& image) {
  if (model.patches.empty())
    throw std::invalid_argument("extract_features: model has no patches");
  const int s = model.patches[0].s;
  if (image.h < s || image.w < s || image.c != model.patches[0].c)
    throw std::invalid_argument("extract_features: shape mismatch");

  const std::vector<double> means = window_means(image, s);
  Vector z(model.patches.size());
  for (std::size_t l = 0; l < model.patches.size(); ++l) {
    const Patch& p = model.patches[l];
    double acc = 0.0;
    for (std::size_t k = 0; k < p.data.size(); ++k)
      acc += static_cast<double>(p.data[k]) * means[k];
    z(static_cast<int>(l)) = acc;
  }
  return z;
}

Matrix extract_feature_matrix(const RcfModel& model,
                              const std::vector<ImageTensor>& images) {
  Matrix Z(images.size(), model.patches.size());
  parallel_for(static_cast<int>(images.size()), [&](int i) {
    Z.row(i) = extract_features(model, images[i]).transpose();
  });
  return Z;
}

RidgeFit fit_ridge(const Matrix& Z, const Vector& y, double lambda) {
  if (lambda <= 0.0) throw std::invalid_argument("fit_ridge: lambda > 0");
  if (Z.rows() != y.size())
    throw std::invalid_argument("fit_ridge: row count mismatch");

  auto [Zc, z_mean] = column_center(Z);
  const double y_mean = y.mean();
  Vector yc = y.array() - y_mean;

  Matrix A = Zc.transpose() * Zc;
  A.diagonal().array() += lambda;
  RidgeFit fit;
  fit.beta = A.ldlt().solve(Zc.transpose() * yc);
  fit.intercept = y_mean - z_mean.dot(fit.beta);
  return fit;
}

double choose_ridge_lambda(const Matrix& Z, const Vector& y, int folds,
                           const std::vector<double>& grid) {
  const int n = static_cast<int>(Z.rows());
  if (folds < 2 || folds > n)
    throw std::invalid_argument("choose_ridge_lambda: folds in [2, n]");
  std::vector<double> lambdas = grid;
  if (lambdas.empty())
    for (int e = -3; e <= 3; ++e) lambdas.push_back(std::pow(10.0, e));

  double best_lambda = lambdas.front();
  double best_err = std::numeric_limits<double>::infinity();
  for (double lambda : lambdas) {
    double err = 0.0;
    for (int f = 0; f < folds; ++f) {
      const int lo = static_cast<int>(static_cast<long long>(n) * f / folds);
      const int hi =
          static_cast<int>(static_cast<long long>(n) * (f + 1) / folds);
      const int held = hi - lo;
      Matrix Zt(n - held, Z.cols());
      Vector yt(n - held);
      Zt.topRows(lo) = Z.topRows(lo);
      yt.head(lo) = y.head(lo);
      Zt.bottomRows(n - hi) = Z.bottomRows(n - hi);
      yt.tail(n - hi) = y.tail(n - hi);
      RidgeFit fit = fit_ridge(Zt, yt, lambda);
      for (int i = lo; i < hi; ++i) {
        const double pred = Z.row(i).dot(fit.beta) + fit.intercept;
        err += (pred - y(i)) * (pred - y(i));
      }
    }
    if (err < best_err) {
      best_err = err;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

void fit_rcf_head(RcfModel& model, const Matrix& Z, const Vector& y,
                  double lambda) {
  RidgeFit fit = fit_ridge(Z, y, lambda);
  model.ridge_coef = std::move(fit.beta);
  model.intercept = fit.intercept;
  model.ridge_lambda = lambda;
  model.fitted = true;
}

double predict(const RcfModel& model, const ImageTensor& image) {
  if (!model.fitted) throw std::logic_error("predict: model not fitted");
  return extract_features(model, image).dot(model.ridge_coef) +
         model.intercept;
}

}  // namespace featboot
