#include "udepth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace udepth {

namespace {

void check_shapes(const Grid<double>& a, const Grid<double>& b, const Mask& mask) {
  if (!a.same_shape(b) || !a.same_shape(mask)) throw RasterError("metric input dimensions differ");
}

double poly(const double* c, int n, double x) {
  double acc = c[n - 1];
  for (int i = n - 2; i >= 0; --i) acc = acc * x + c[i];
  return acc;
}

}  // namespace

double masked_median(const Grid<double>& values, const Mask& mask) {
  if (!values.same_shape(mask)) throw RasterError("mask dimensions differ");
  std::vector<double> v;
  v.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i]) v.push_back(values[i]);
  }
  if (v.empty()) throw MetricError("no valid pixels");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lower + upper);
}

double scale_correction(const DepthMap& reference, const DepthMap& prediction, const Mask& mask) {
  check_shapes(reference, prediction, mask);
  const double num = masked_median(reference, mask);
  const double den = masked_median(prediction, mask);
  if (!(num > 0.0) || !(den > 0.0)) throw MetricError("medians must be positive");
  return num / den;
}

DepthMetrics depth_metrics(const DepthMap& gt, const DepthMap& pred, const Mask& mask,
                           RelativeDenominator denom) {
  check_shapes(gt, pred, mask);
  double abs_rel = 0, sq_rel = 0, sq = 0, sq_log = 0;
  std::size_t n = 0, d1 = 0, d2 = 0, d3 = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!mask[i]) continue;
    const double d = gt[i], p = pred[i];
    if (!(d > 0.0) || !(p > 0.0)) throw MetricError("nonpositive depth in the valid set");
    const double diff = d - p;
    const double base = denom == RelativeDenominator::Prediction ? p : d;
    abs_rel += std::abs(diff) / base;
    sq_rel += diff * diff / base;
    sq += diff * diff;
    const double ld = std::log(d) - std::log(p);
    sq_log += ld * ld;
    const double ratio = std::max(d / p, p / d);
    if (ratio < 1.25) ++d1;
    if (ratio < 1.25 * 1.25) ++d2;
    if (ratio < 1.25 * 1.25 * 1.25) ++d3;
    ++n;
  }
  if (n == 0) throw MetricError("no valid pixels");
  const double inv = 1.0 / double(n);
  return {abs_rel * inv,         sq_rel * inv,         std::sqrt(sq * inv), std::sqrt(sq_log * inv),
          double(d1) * inv,      double(d2) * inv,     double(d3) * inv};
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw MetricError("quantile level must lie in [0, 1]");
  }
  static constexpr double a[] = {3.3871328727963666080e0, 1.3314166789178437745e+2,
                                 1.9715909503065514427e+3, 1.3731693765509461125e+4,
                                 4.5921953931549871457e+4, 6.7265770927008700853e+4,
                                 3.3430575583588128105e+4, 2.5090809287301226727e+3};
  static constexpr double b[] = {1.0,
                                 4.2313330701600911252e+1, 6.8718700749205790830e+2,
                                 5.3941960214247511077e+3, 2.1213794301586595867e+4,
                                 3.9307895800092710610e+4, 2.8729085735721942674e+4,
                                 5.2264952788528545610e+3};
  static constexpr double c[] = {1.42343711074968357734e0, 4.63033784615654529590e0,
                                 5.76949722146069140550e0, 3.64784832476320460504e0,
                                 1.27045825245236838258e0, 2.41780725177450611770e-1,
                                 2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static constexpr double d[] = {1.0,
                                 2.05319162663775882187e0, 1.67638483018380384940e0,
                                 6.89767334985100004550e-1, 1.48103976427480074590e-1,
                                 1.51986665636164571966e-2, 5.47593808499534494600e-4,
                                 1.05075007164441684324e-9};
  static constexpr double e[] = {6.65790464350110377720e0, 5.46378491116411436990e0,
                                 1.78482653991729133580e0, 2.96560571828504891230e-1,
                                 2.65321895265761230930e-2, 1.24266094738807843860e-3,
                                 2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double f[] = {1.0,
                                 5.99832206555887937690e-1, 1.36929880922735805310e-1,
                                 1.48753612908506148525e-2, 7.86869131145613259100e-4,
                                 1.84631831751005468180e-5, 1.42151175831644588870e-7,
                                 2.04426310338993978564e-15};
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * poly(a, 8, r) / poly(b, 8, r);
  }
  double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = poly(c, 8, r) / poly(d, 8, r);
  } else {
    r -= 5.0;
    x = poly(e, 8, r) / poly(f, 8, r);
  }
  return q < 0.0 ? -x : x;
}

std::vector<double> default_p_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 99; ++i) g.push_back(i / 100.0);
  return g;
}

CalibrationCurve calibration_curve(const DepthMap& gt, const DepthMap& pred, const UncMap& sigma,
                                   const Mask& mask, std::span<const double> p_grid) {
  check_shapes(gt, pred, mask);
  if (!gt.same_shape(sigma)) throw RasterError("sigma dimensions differ");
  if (p_grid.empty()) throw MetricError("empty confidence grid");
  for (std::size_t k = 0; k < p_grid.size(); ++k) {
    if (!(p_grid[k] > 0.0 && p_grid[k] < 1.0)) throw MetricError("confidence levels must lie in (0, 1)");
    if (k > 0 && !(p_grid[k] > p_grid[k - 1])) throw MetricError("confidence grid must increase");
  }
  const UncMap std_map = sigma.to_std();

  std::vector<double> residual, scale;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!mask[i]) continue;
    if (!(std_map[i] > 0.0)) throw MetricError("sigma must be positive on valid pixels");
    residual.push_back(std::abs(gt[i] - pred[i]));
    scale.push_back(std_map[i]);
  }
  if (residual.empty()) throw MetricError("no valid pixels");

  CalibrationCurve curve{{p_grid.begin(), p_grid.end()}, {}};
  for (double p : p_grid) {
    const double z = normal_quantile(0.5 * (p + 1.0));
    std::size_t hit = 0;
    for (std::size_t i = 0; i < residual.size(); ++i) {
      if (residual[i] <= z * scale[i]) ++hit;
    }
    curve.coverage.push_back(double(hit) / double(residual.size()));
  }
  return curve;
}

Auce auce(const CalibrationCurve& curve) {
  const auto& p = curve.p;
  const auto& cov = curve.coverage;
  if (p.empty() || p.size() != cov.size()) throw MetricError("malformed calibration curve");

  std::vector<double> xs{0.0}, err{0.0};
  auto extend = [&](double at) {
    double e;
    if (p.size() == 1) {
      e = p[0] - cov[0];
    } else {
      const std::size_t i0 = at < p.front() ? 0 : p.size() - 2;
      const double e0 = p[i0] - cov[i0], e1 = p[i0 + 1] - cov[i0 + 1];
      e = e0 + (e1 - e0) * (at - p[i0]) / (p[i0 + 1] - p[i0]);
    }
    // Keep the extrapolated coverage inside [0, 1].
    const double c = std::clamp(at - e, 0.0, 1.0);
    return at - c;
  };
  err[0] = extend(0.0);
  for (std::size_t k = 0; k < p.size(); ++k) {
    xs.push_back(p[k]);
    err.push_back(p[k] - cov[k]);
  }
  xs.push_back(1.0);
  err.push_back(extend(1.0));

  Auce out;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double h = xs[k + 1] - xs[k];
    const double e0 = err[k], e1 = err[k + 1];
    out.signed_area += 0.5 * h * (e0 + e1);
    if ((e0 >= 0.0) == (e1 >= 0.0)) {
      out.absolute_area += 0.5 * h * (std::abs(e0) + std::abs(e1));
    } else {
      // Piecewise-linear segment crosses zero: integrate both triangles.
      const double t = e0 / (e0 - e1);
      out.absolute_area += 0.5 * h * (t * std::abs(e0) + (1.0 - t) * std::abs(e1));
    }
  }
  return out;
}

}  // namespace udepth
