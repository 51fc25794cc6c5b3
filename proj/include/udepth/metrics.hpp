#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "udepth/raster.hpp"

namespace udepth {

class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Ratio of masked medians, median(reference) / median(prediction). Even
/// counts use the mean of the two central values.
double scale_correction(const DepthMap& reference, const DepthMap& prediction, const Mask& mask);

double masked_median(const Grid<double>& values, const Mask& mask);

struct DepthMetrics {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
};

/// Which depth divides the relative errors. The default divides by the
/// prediction; `GroundTruth` gives the more common convention.
enum class RelativeDenominator { Prediction, GroundTruth };

DepthMetrics depth_metrics(const DepthMap& gt, const DepthMap& pred, const Mask& mask,
                           RelativeDenominator denom = RelativeDenominator::Prediction);

/// Inverse of the standard normal CDF (Wichura's AS241, about 1e-16 relative).
double normal_quantile(double p);

/// Confidence levels 0.01, 0.02, ..., 0.99.
std::vector<double> default_p_grid();

struct CalibrationCurve {
  std::vector<double> p;
  std::vector<double> coverage;
};

/// Fraction of masked pixels whose truth lies in pred +- z((p+1)/2) * sigma.
CalibrationCurve calibration_curve(const DepthMap& gt, const DepthMap& pred, const UncMap& sigma,
                                   const Mask& mask, std::span<const double> p_grid);

struct Auce {
  double signed_area = 0.0;   // integral of p - coverage; > 0 means overconfident
  double absolute_area = 0.0; // integral of |coverage - p|
};

/// Trapezoidal areas over the grid, extended to p = 0 and p = 1 by linear
/// extrapolation of the calibration error from the nearest two grid points.
Auce auce(const CalibrationCurve& curve);

}  // namespace udepth
