#pragma once

#include <span>
#include <vector>

#include "udepth/geometry.hpp"
#include "udepth/raster.hpp"

namespace udepth {

/// Weights of the L1 / SSIM mix and the SSIM box-window settings. Defaults are
/// the usual self-supervised depth values for intensities in [0, 1].
struct PhotometricConfig {
  double alpha = 0.85;
  int ssim_window = 3;
  double c1 = 0.01 * 0.01;
  double c2 = 0.03 * 0.03;

  void validate() const;
};

/// Windowed SSIM with a box filter and replicated borders, computed per
/// channel and averaged over channels.
Map ssim_map(const Image& a, const Image& b, const PhotometricConfig& cfg);

/// Per-pixel (1-alpha)*L1 + alpha/2*(1-SSIM) between target and one warped source.
Map photometric_candidate(const Image& target, const Image& warped, const PhotometricConfig& cfg);

struct PhotometricResidual {
  Map value;                // F_p, zero where invalid
  Mask valid;               // at least one source valid
  std::vector<int> source;  // argmin source index per pixel, -1 where invalid
};

/// Minimum candidate over the valid sources at each pixel.
PhotometricResidual photometric_residual(const Image& target, std::span<const WarpedImage> warps,
                                         const PhotometricConfig& cfg);

/// Gradient of sum_j upstream[j] * candidate[j] with respect to every warped
/// image value, laid out like Image::data().
std::vector<double> photometric_candidate_vjp(const Image& target, const Image& warped,
                                              const Map& upstream, const PhotometricConfig& cfg);

/// Edge-aware smoothness on the mean-normalized depth with forward differences.
Map edge_aware_smoothness(const Grid<double>& depth, const Image& image);
/// Same with an explicit guide intensity in place of the channel-mean image.
Map edge_aware_smoothness(const Grid<double>& depth, const Map& gray);

/// Gradient of mean(edge_aware_smoothness(depth, image)) with respect to depth,
/// including the dependence through the normalizing mean.
Map edge_aware_smoothness_mean_grad(const Grid<double>& depth, const Image& image);
Map edge_aware_smoothness_mean_grad(const Grid<double>& depth, const Map& gray);

}  // namespace udepth
