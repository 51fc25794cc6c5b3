#include <doctest.h>

#include <cmath>

#include "udepth/metrics.hpp"
#include "udepth/random.hpp"

using namespace udepth;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Independent quantile oracle: bisection on the erfc-based CDF.
double bisect_quantile(double p) {
  double lo = -40, hi = 40;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

CalibrationCurve constant_curve(double c) {
  CalibrationCurve curve;
  curve.p = default_p_grid();
  curve.coverage.assign(curve.p.size(), c);
  return curve;
}

struct Synthetic {
  DepthMap gt, pred;
  UncMap sigma;
  Mask mask;
};

// Truth = pred + N(0, sigma^2) with per-pixel sigma.
Synthetic calibrated_set(std::uint64_t seed, int w, int h, double sigma_scale) {
  Rng rng(seed);
  std::vector<double> g, p, s;
  for (int i = 0; i < w * h; ++i) {
    const double sd = rng.uniform(0.5, 2.0);
    const double d = rng.uniform(20, 60);
    p.push_back(d);
    g.push_back(d + sd * rng.normal());
    s.push_back(sd * sigma_scale);
  }
  return {DepthMap(w, h, g), DepthMap(w, h, p), UncMap(w, h, UncKind::Std, s), full_mask(w, h)};
}

}  // namespace

TEST_CASE("scale correction examples") {
  const Mask m = full_mask(4, 1);
  const DepthMap gt(4, 1, {1, 2, 3, 4});
  CHECK(scale_correction(gt, gt, m) == 1.0);
  CHECK(scale_correction(gt, DepthMap(4, 1, {0.5, 1, 1.5, 2}), m) == 2.0);
  CHECK(scale_correction(gt, DepthMap(4, 1, {2, 2, 2, 10}), m) == doctest::Approx(1.25).epsilon(1e-15));
  CHECK_THROWS_AS(scale_correction(gt, DepthMap(4, 1, 0.0), m), MetricError);
  CHECK_THROWS_AS(scale_correction(gt, gt, Mask(4, 1, 0)), MetricError);
}

TEST_CASE("perfect prediction metrics") {
  Rng rng(1);
  std::vector<double> v(30);
  for (double& x : v) x = rng.uniform(1, 100);
  const DepthMap d(6, 5, v);
  const DepthMetrics m = depth_metrics(d, d, full_mask(6, 5));
  CHECK(m.abs_rel == 0.0);
  CHECK(m.sq_rel == 0.0);
  CHECK(m.rmse == 0.0);
  CHECK(m.rmse_log == 0.0);
  CHECK(m.delta1 == 1.0);
  CHECK(m.delta2 == 1.0);
  CHECK(m.delta3 == 1.0);
}

TEST_CASE("single pixel with ratio two") {
  const DepthMetrics m = depth_metrics(DepthMap(1, 1, 2.0), DepthMap(1, 1, 1.0), full_mask(1, 1));
  CHECK(m.abs_rel == 1.0);
  CHECK(m.sq_rel == 1.0);
  CHECK(m.rmse == 1.0);
  CHECK(m.rmse_log == doctest::Approx(0.6931).epsilon(1e-4));
  CHECK(m.delta1 == 0.0);
  CHECK(m.delta2 == 0.0);
  CHECK(m.delta3 == 0.0);
}

TEST_CASE("single pixel with ratio 1.2 is inside every threshold") {
  const DepthMetrics m = depth_metrics(DepthMap(1, 1, 1.2), DepthMap(1, 1, 1.0), full_mask(1, 1));
  CHECK(m.delta1 == 1.0);
  CHECK(m.delta2 == 1.0);
  CHECK(m.delta3 == 1.0);
  CHECK(m.abs_rel == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("relative errors use the prediction unless told otherwise") {
  const DepthMap a(1, 1, 2.0), b(1, 1, 1.0);
  const Mask m = full_mask(1, 1);
  const DepthMetrics ab = depth_metrics(a, b, m), ba = depth_metrics(b, a, m);
  CHECK(ab.abs_rel == 1.0);
  CHECK(ba.abs_rel == 0.5);
  CHECK(ab.delta1 == ba.delta1);
  CHECK(ab.delta3 == ba.delta3);
  CHECK(depth_metrics(a, b, m, RelativeDenominator::GroundTruth).abs_rel == 0.5);
  CHECK(depth_metrics(a, b, m, RelativeDenominator::GroundTruth).sq_rel == 0.5);
}

TEST_CASE("delta thresholds are symmetric and ordered") {
  Rng rng(2);
  std::vector<double> g(50), p(50);
  for (int i = 0; i < 50; ++i) {
    g[i] = rng.uniform(1, 10);
    p[i] = g[i] * std::exp(rng.uniform(-0.9, 0.9));
  }
  const DepthMap dg(10, 5, g), dp(10, 5, p);
  const Mask m = full_mask(10, 5);
  const DepthMetrics a = depth_metrics(dg, dp, m), b = depth_metrics(dp, dg, m);
  CHECK(a.delta1 == b.delta1);
  CHECK(a.delta2 == b.delta2);
  CHECK(a.delta3 == b.delta3);
  CHECK(a.delta1 <= a.delta2);
  CHECK(a.delta2 <= a.delta3);
  CHECK(a.abs_rel != b.abs_rel);

  // Common rescaling leaves dimensionless metrics unchanged and scales rmse.
  std::vector<double> g3(g), p3(p);
  for (auto& x : g3) x *= 3;
  for (auto& x : p3) x *= 3;
  const DepthMetrics c = depth_metrics(DepthMap(10, 5, g3), DepthMap(10, 5, p3), m);
  CHECK(c.abs_rel == doctest::Approx(a.abs_rel).epsilon(1e-13));
  CHECK(c.sq_rel == doctest::Approx(3 * a.sq_rel).epsilon(1e-13));
  CHECK(c.rmse == doctest::Approx(3 * a.rmse).epsilon(1e-13));
  CHECK(c.rmse_log == doctest::Approx(a.rmse_log).epsilon(1e-12));
  CHECK(c.delta1 == a.delta1);
}

TEST_CASE("metrics errors") {
  CHECK_THROWS_AS(depth_metrics(DepthMap(1, 1, 1.0), DepthMap(1, 1, 1.0), Mask(1, 1, 0)), MetricError);
  CHECK_THROWS_AS(depth_metrics(DepthMap(1, 1, 0.0), DepthMap(1, 1, 1.0), full_mask(1, 1)), MetricError);
}

TEST_CASE("normal quantile matches a bisection oracle") {
  for (double p = 0.005; p < 1.0; p += 0.005) {
    CHECK(std::abs(normal_quantile(p) - bisect_quantile(p)) < 1e-8);
  }
  for (double p : {1e-10, 1e-6, 0.999999}) CHECK(std::abs(normal_quantile(p) - bisect_quantile(p)) < 1e-8);
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
  CHECK_THROWS_AS(normal_quantile(1.5), MetricError);
}

TEST_CASE("calibration of exact predictions and vanishing sigma") {
  const DepthMap d(3, 3, 5.0);
  const auto grid = default_p_grid();
  CHECK(grid.size() == 99);
  const CalibrationCurve exact = calibration_curve(d, d, UncMap(3, 3, UncKind::Std, 1.0), full_mask(3, 3), grid);
  for (double c : exact.coverage) CHECK(c == 1.0);
  const CalibrationCurve empty = calibration_curve(DepthMap(3, 3, 6.0), d, UncMap(3, 3, UncKind::Std, 1e-12),
                                                   full_mask(3, 3), grid);
  for (double c : empty.coverage) CHECK(c == 0.0);
  CHECK_THROWS_AS(calibration_curve(d, d, UncMap(3, 3, UncKind::Std, 1.0), full_mask(3, 3), std::vector<double>{}),
                  MetricError);
}

TEST_CASE("truthful gaussian errors are calibrated") {
  const Synthetic s = calibrated_set(7, 1000, 1000, 1.0);
  const std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  const CalibrationCurve c = calibration_curve(s.gt, s.pred, s.sigma, s.mask, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) CHECK(std::abs(c.coverage[k] - grid[k]) < 0.002);
  const CalibrationCurve full = calibration_curve(s.gt, s.pred, s.sigma, s.mask, default_p_grid());
  for (std::size_t k = 1; k < full.coverage.size(); ++k) CHECK(full.coverage[k] >= full.coverage[k - 1]);
  CHECK(std::abs(auce(full).signed_area) < 0.02);
}

TEST_CASE("scaling sigma moves the signed area the right way") {
  const Synthetic s = calibrated_set(8, 200, 200, 1.0);
  const auto grid = default_p_grid();
  const double base = auce(calibration_curve(s.gt, s.pred, s.sigma, s.mask, grid)).signed_area;
  auto scaled = [&](double f) {
    std::vector<double> v(s.sigma.values());
    for (double& x : v) x *= f;
    return auce(calibration_curve(s.gt, s.pred, UncMap(200, 200, UncKind::Std, v), s.mask, grid)).signed_area;
  };
  CHECK(scaled(0.5) > base);
  CHECK(scaled(2.0) < base);
}

TEST_CASE("auce of the extreme curves") {
  CalibrationCurve perfect;
  perfect.p = default_p_grid();
  perfect.coverage = perfect.p;
  const Auce a = auce(perfect);
  CHECK(a.signed_area == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(a.absolute_area == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));

  const Auce under = auce(constant_curve(1.0));
  CHECK(under.signed_area == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(under.absolute_area == doctest::Approx(0.5).epsilon(1e-12));
  const Auce over = auce(constant_curve(0.0));
  CHECK(over.signed_area == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(over.absolute_area == doctest::Approx(0.5).epsilon(1e-12));
}
