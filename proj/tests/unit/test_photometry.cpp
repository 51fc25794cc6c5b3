#include <doctest.h>

#include <cmath>

#include "udepth/photometry.hpp"
#include "udepth/random.hpp"

using namespace udepth;

namespace {

Image random_image(Rng& rng, int w, int h, int c) {
  std::vector<double> v(static_cast<std::size_t>(w) * h * c);
  for (double& x : v) x = rng.uniform();
  return Image(w, h, c, v);
}

// Windowed SSIM written out directly from the definition.
double brute_ssim(const Image& a, const Image& b, int x, int y, const PhotometricConfig& cfg) {
  const int r = cfg.ssim_window / 2;
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0, n = 0;
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        const int xx = std::clamp(x + dx, 0, a.width() - 1), yy = std::clamp(y + dy, 0, a.height() - 1);
        const double va = a(xx, yy, c), vb = b(xx, yy, c);
        sa += va;
        sb += vb;
        saa += va * va;
        sbb += vb * vb;
        sab += va * vb;
        n += 1;
      }
    }
    const double ma = sa / n, mb = sb / n;
    const double va = saa / n - ma * ma, vb = sbb / n - mb * mb, cov = sab / n - ma * mb;
    total += ((2 * ma * mb + cfg.c1) * (2 * cov + cfg.c2)) /
             ((ma * ma + mb * mb + cfg.c1) * (va + vb + cfg.c2));
  }
  return total / a.channels();
}

}  // namespace

TEST_CASE("config validation") {
  PhotometricConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.ssim_window = 4;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.alpha = 1.5;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.c1 = 0.0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("ssim of an image with itself is one") {
  Rng rng(1);
  const Image a = random_image(rng, 9, 7, 3);
  const Map s = ssim_map(a, a, PhotometricConfig{});
  for (double v : s.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("ssim of two constants by formula") {
  PhotometricConfig cfg;
  cfg.c1 = 1e-4;
  const Map s = ssim_map(Image(5, 5, 1, 0.2), Image(5, 5, 1, 0.8), cfg);
  const double expected = ((2 * 0.2 * 0.8 + cfg.c1) * cfg.c2) / ((0.04 + 0.64 + cfg.c1) * cfg.c2);
  CHECK(expected == doctest::Approx(0.47067).epsilon(1e-4));
  for (double v : s.data()) CHECK(v == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("anti-correlated windows give negative ssim") {
  // Checkerboard around 0.5: every 3x3 window has mean close to 0.5 and b = 1 - a.
  std::vector<double> va(36), vb(36);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 6; ++x) {
      va[y * 6 + x] = ((x + y) % 2) ? 0.9 : 0.1;
      vb[y * 6 + x] = 1.0 - va[y * 6 + x];
    }
  }
  const Image a(6, 6, 1, va), b(6, 6, 1, vb);
  const PhotometricConfig cfg;
  const Map s = ssim_map(a, b, cfg);
  for (int y = 1; y < 5; ++y) {
    for (int x = 1; x < 5; ++x) {
      CHECK(s(x, y) < 0.0);
      CHECK(s(x, y) == doctest::Approx(brute_ssim(a, b, x, y, cfg)).epsilon(1e-12));
    }
  }
}

TEST_CASE("ssim matches brute force, is symmetric and bounded") {
  Rng rng(2);
  for (int window : {3, 5}) {
    PhotometricConfig cfg;
    cfg.ssim_window = window;
    const Image a = random_image(rng, 8, 6, 3), b = random_image(rng, 8, 6, 3);
    const Map ab = ssim_map(a, b, cfg), ba = ssim_map(b, a, cfg);
    CHECK(ab == ba);
    for (int y = 0; y < 6; ++y) {
      for (int x = 0; x < 8; ++x) {
        CHECK(ab(x, y) == doctest::Approx(brute_ssim(a, b, x, y, cfg)).epsilon(1e-12));
        CHECK(ab(x, y) <= 1.0);
        CHECK(ab(x, y) >= -1.0);
      }
    }
  }
  CHECK_THROWS(ssim_map(Image(3, 3, 1), Image(4, 3, 1), PhotometricConfig{}));
}

TEST_CASE("identical warped source gives zero residual") {
  Rng rng(3);
  const Image t = random_image(rng, 6, 6, 3);
  const WarpedImage w{t, full_mask(6, 6)};
  const PhotometricResidual r = photometric_residual(t, std::span(&w, 1), PhotometricConfig{});
  for (double v : r.value.data()) CHECK(v == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(count_valid(r.valid) == 36);
}

TEST_CASE("alpha zero reduces the residual to channel-mean L1") {
  Rng rng(4);
  const Image t = random_image(rng, 5, 4, 3), s = random_image(rng, 5, 4, 3);
  PhotometricConfig cfg;
  cfg.alpha = 0.0;
  const WarpedImage w{s, full_mask(5, 4)};
  const PhotometricResidual r = photometric_residual(t, std::span(&w, 1), cfg);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 5; ++x) {
      double l1 = 0;
      for (int c = 0; c < 3; ++c) l1 += std::abs(t(x, y, c) - s(x, y, c));
      CHECK(r.value(x, y) == doctest::Approx(l1 / 3).epsilon(1e-14));
    }
  }
}

TEST_CASE("residual is the minimum over valid sources") {
  // Gray constants with alpha = 0: candidates are |0.5 - 0.8| = 0.3 and |0.5 - 0.6| = 0.1.
  PhotometricConfig cfg;
  cfg.alpha = 0.0;
  const Image t(3, 3, 1, 0.5);
  std::vector<WarpedImage> ws{{Image(3, 3, 1, 0.8), full_mask(3, 3)}, {Image(3, 3, 1, 0.6), full_mask(3, 3)}};
  PhotometricResidual r = photometric_residual(t, ws, cfg);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(r.value[i] == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(r.source[i] == 1);
  }
  ws[1].valid(1, 1) = 0;
  r = photometric_residual(t, ws, cfg);
  CHECK(r.value(1, 1) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(r.source[4] == 0);
  ws[0].valid(1, 1) = 0;
  r = photometric_residual(t, ws, cfg);
  CHECK(r.valid(1, 1) == 0);
  CHECK(r.source[4] == -1);
  CHECK_THROWS(photometric_residual(t, std::span<const WarpedImage>(), cfg));
}

TEST_CASE("adding a source never increases the residual") {
  Rng rng(5);
  const Image t = random_image(rng, 7, 7, 3);
  std::vector<WarpedImage> ws;
  PhotometricResidual prev;
  for (int k = 0; k < 4; ++k) {
    Mask m(7, 7, 1);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform() < 0.7;
    ws.push_back({random_image(rng, 7, 7, 3), m});
    const PhotometricResidual r = photometric_residual(t, ws, PhotometricConfig{});
    for (double v : r.value.data()) CHECK(v >= 0.0);
    if (k > 0) {
      for (std::size_t i = 0; i < r.value.size(); ++i) {
        if (!prev.valid[i]) continue;
        CHECK(r.valid[i] != 0);
        CHECK(r.value[i] <= prev.value[i]);
      }
    }
    prev = r;
  }
}

TEST_CASE("candidate vjp matches finite differences") {
  Rng rng(6);
  const Image t = random_image(rng, 6, 5, 3);
  const Image w = random_image(rng, 6, 5, 3);
  Map up(6, 5);
  for (std::size_t i = 0; i < up.size(); ++i) up[i] = rng.uniform(-1, 1);
  const PhotometricConfig cfg;
  const auto g = photometric_candidate_vjp(t, w, up, cfg);
  auto objective = [&](const Image& img) {
    const Map c = photometric_candidate(t, img, cfg);
    double s = 0;
    for (std::size_t i = 0; i < c.size(); ++i) s += up[i] * c[i];
    return s;
  };
  const double h = 1e-6;
  std::vector<double> base(w.data().begin(), w.data().end());
  for (std::size_t k = 0; k < base.size(); k += 7) {
    auto plus = base, minus = base;
    plus[k] += h;
    minus[k] -= h;
    if (plus[k] > 1.0 || minus[k] < 0.0) continue;
    const double fd = (objective(Image(6, 5, 3, plus)) - objective(Image(6, 5, 3, minus))) / (2 * h);
    CHECK(g[k] == doctest::Approx(fd).epsilon(1e-5).scale(1e-6));
  }
}

TEST_CASE("smoothness of a constant depth is zero") {
  Rng rng(7);
  const Map s = edge_aware_smoothness(DepthMap(5, 5, 12.0), random_image(rng, 5, 5, 3));
  for (double v : s.data()) CHECK(v == 0.0);
}

TEST_CASE("unit depth step on a flat image gives one") {
  // Mean depth 1, so the normalized step equals the raw step of 1.
  const DepthMap d(2, 1, {0.5, 1.5});
  const Map s = edge_aware_smoothness(d, Image(2, 1, 3, 0.4));
  CHECK(s(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s(1, 0) == 0.0);
}

TEST_CASE("depth step on an intensity edge of two is damped by exp(-2)") {
  const DepthMap d(2, 1, {0.5, 1.5});
  const Map gray(2, 1, std::vector<double>{0.0, 2.0});
  const Map s = edge_aware_smoothness(d, gray);
  CHECK(s(0, 0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  CHECK(s(0, 0) == doctest::Approx(0.1353).epsilon(1e-3));
  // Largest edge a [0,1] image can carry.
  const Map s1 = edge_aware_smoothness(d, Image(2, 1, 1, {0.0, 1.0}));
  CHECK(s1(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("smoothness is invariant to depth rescaling") {
  Rng rng(8);
  std::vector<double> v(30);
  for (double& x : v) x = rng.uniform(5, 50);
  const DepthMap d(6, 5, v);
  std::vector<double> v2 = v;
  for (double& x : v2) x *= 4.0;  // power of two keeps the division exact
  const Image img = random_image(rng, 6, 5, 3);
  CHECK(edge_aware_smoothness(d, img) == edge_aware_smoothness(DepthMap(6, 5, v2), img));
  CHECK_THROWS(edge_aware_smoothness(DepthMap(6, 5, 0.0), img));
}

TEST_CASE("smoothness mean gradient matches finite differences") {
  Rng rng(9);
  std::vector<double> v(20);
  for (double& x : v) x = rng.uniform(5, 50);
  const Image img = random_image(rng, 5, 4, 3);
  const Map g = edge_aware_smoothness_mean_grad(DepthMap(5, 4, v), img);
  auto mean_fs = [&](const std::vector<double>& d) {
    const Map s = edge_aware_smoothness(DepthMap(5, 4, d), img);
    double t = 0;
    for (double x : s.data()) t += x;
    return t / double(s.size());
  };
  for (std::size_t k = 0; k < v.size(); ++k) {
    auto p = v, m = v;
    p[k] += 1e-5;
    m[k] -= 1e-5;
    CHECK(g[k] == doctest::Approx((mean_fs(p) - mean_fs(m)) / 2e-5).epsilon(1e-6).scale(1e-10));
  }
}
