#pragma once

#include <vector>

#include "featboot/linalg.hpp"
#include "featboot/rng.hpp"

namespace featboot {

/// Dense h x w x c image, row-major with channel fastest.
struct ImageTensor {
  int h = 0, w = 0, c = 0;
  std::vector<float> data;

  float at(int y, int x, int ch) const {
    return data[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
  float& at(int y, int x, int ch) {
    return data[(static_cast<std::size_t>(y) * w + x) * c + ch];
  }
};

/// One convolutional kernel: an s x s x c patch copied from a training image.
struct Patch {
  int s = 0, c = 0;
  std::vector<float> data;  // s * s * c, layout as ImageTensor
};

struct RcfModel {
  std::vector<Patch> patches;
  Vector ridge_coef;       // L
  double intercept = 0.0;
  double ridge_lambda = 0.0;
  bool fitted = false;
  int patch_size = 8;
  int feature_count = 0;
};

/// Sample L kernels: training images chosen uniformly with replacement, one
/// uniform spatial location each. Kernels are mean-centered when center_kernels
/// is set (the default) so constant regions contribute no signal.
std::vector<Patch> sample_patches(const std::vector<ImageTensor>& train_images,
                                  int L, int s, Rng& rng,
                                  bool center_kernels = true);

/// z_l = mean over all valid offsets of <kernel_l, image patch>; plain
/// cross-correlation with no padding and no nonlinearity.
Vector extract_features(const RcfModel& model, const ImageTensor& image);

/// Feature matrix for a batch of images (rows = images).
Matrix extract_feature_matrix(const RcfModel& model,
                              const std::vector<ImageTensor>& images);

struct RidgeFit {
  Vector beta;
  double intercept = 0.0;
};

/// Ridge solution on column-centered Z and mean-centered y; the intercept is
/// recovered from the means.
RidgeFit fit_ridge(const Matrix& Z, const Vector& y, double lambda);

/// Ridge penalty chosen by k-fold cross-validation over a log grid
/// (10^-3 .. 10^3 when no grid is given). Folds are contiguous row blocks,
/// so the choice is deterministic.
double choose_ridge_lambda(const Matrix& Z, const Vector& y, int folds = 5,
                           const std::vector<double>& grid = {});

/// Train the ridge head of an RCF model in place.
void fit_rcf_head(RcfModel& model, const Matrix& Z, const Vector& y,
                  double lambda);

double predict(const RcfModel& model, const ImageTensor& image);

}  // namespace featboot
