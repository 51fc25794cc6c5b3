#include "udepth/photometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace udepth {

namespace {

struct WindowStats {
  double mu_a, mu_b, saa, sbb, sab;  // raw second moments
};

inline int clampi(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

WindowStats window_stats(const Image& a, const Image& b, int x, int y, int c, int r) {
  const int w = a.width(), h = a.height();
  WindowStats s{0, 0, 0, 0, 0};
  for (int dy = -r; dy <= r; ++dy) {
    const int yy = clampi(y + dy, 0, h - 1);
    for (int dx = -r; dx <= r; ++dx) {
      const int xx = clampi(x + dx, 0, w - 1);
      const double va = a(xx, yy, c), vb = b(xx, yy, c);
      s.mu_a += va;
      s.mu_b += vb;
      s.saa += va * va;
      s.sbb += vb * vb;
      s.sab += va * vb;
    }
  }
  const double n = double(2 * r + 1) * (2 * r + 1);
  s.mu_a /= n;
  s.mu_b /= n;
  s.saa /= n;
  s.sbb /= n;
  s.sab /= n;
  return s;
}

struct SsimParts {
  double n1, n2, d1, d2, value;
};

// Written so that swapping a and b yields bit-identical results.
SsimParts ssim_from_stats(const WindowStats& s, double c1, double c2) {
  const double var_a = s.saa - s.mu_a * s.mu_a;
  const double var_b = s.sbb - s.mu_b * s.mu_b;
  const double cov = s.sab - s.mu_a * s.mu_b;
  SsimParts p;
  p.n1 = 2.0 * s.mu_a * s.mu_b + c1;
  p.n2 = 2.0 * cov + c2;
  p.d1 = s.mu_a * s.mu_a + s.mu_b * s.mu_b + c1;
  p.d2 = var_a + var_b + c2;
  p.value = (p.n1 * p.n2) / (p.d1 * p.d2);
  return p;
}

void check_same(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels()) {
    throw RasterError("image dimensions differ");
  }
}

}  // namespace

void PhotometricConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  if (ssim_window < 3 || ssim_window % 2 == 0) {
    throw std::invalid_argument("ssim_window must be odd and >= 3");
  }
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw std::invalid_argument("SSIM constants must be positive");
}

Map ssim_map(const Image& a, const Image& b, const PhotometricConfig& cfg) {
  cfg.validate();
  check_same(a, b);
  const int r = cfg.ssim_window / 2;
  Map out(a.width(), a.height());
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      double acc = 0.0;
      for (int c = 0; c < a.channels(); ++c) {
        acc += ssim_from_stats(window_stats(a, b, x, y, c, r), cfg.c1, cfg.c2).value;
      }
      out(x, y) = acc / a.channels();
    }
  }
  return out;
}

Map photometric_candidate(const Image& target, const Image& warped, const PhotometricConfig& cfg) {
  const Map ssim = ssim_map(target, warped, cfg);
  const int nc = target.channels();
  Map out(target.width(), target.height());
  for (int y = 0; y < target.height(); ++y) {
    for (int x = 0; x < target.width(); ++x) {
      double l1 = 0.0;
      for (int c = 0; c < nc; ++c) l1 += std::abs(target(x, y, c) - warped(x, y, c));
      l1 /= nc;
      out(x, y) = (1.0 - cfg.alpha) * l1 + 0.5 * cfg.alpha * (1.0 - ssim(x, y));
    }
  }
  return out;
}

PhotometricResidual photometric_residual(const Image& target, std::span<const WarpedImage> warps,
                                         const PhotometricConfig& cfg) {
  if (warps.empty()) throw std::invalid_argument("photometric residual needs at least one source");
  const int w = target.width(), h = target.height();
  PhotometricResidual res{Map(w, h, 0.0), Mask(w, h, 0),
                          std::vector<int>(static_cast<std::size_t>(w) * h, -1)};
  std::vector<double> best(res.source.size(), std::numeric_limits<double>::infinity());
  for (std::size_t s = 0; s < warps.size(); ++s) {
    check_same(target, warps[s].image);
    if (!warps[s].valid.same_shape(w, h)) throw RasterError("warp mask dimensions differ");
    const Map cand = photometric_candidate(target, warps[s].image, cfg);
    for (std::size_t i = 0; i < best.size(); ++i) {
      if (warps[s].valid[i] && cand[i] < best[i]) {
        best[i] = cand[i];
        res.source[i] = static_cast<int>(s);
      }
    }
  }
  for (std::size_t i = 0; i < best.size(); ++i) {
    if (res.source[i] >= 0) {
      res.value[i] = std::max(best[i], 0.0);
      res.valid[i] = 1;
    }
  }
  return res;
}

std::vector<double> photometric_candidate_vjp(const Image& target, const Image& warped,
                                              const Map& upstream, const PhotometricConfig& cfg) {
  check_same(target, warped);
  const int w = target.width(), h = target.height(), nc = target.channels();
  const int r = cfg.ssim_window / 2;
  const double n = double(2 * r + 1) * (2 * r + 1);
  std::vector<double> grad(static_cast<std::size_t>(w) * h * nc, 0.0);
  auto at = [&](int x, int y, int c) { return (static_cast<std::size_t>(y) * w + x) * nc + c; };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double g = upstream(x, y);
      if (g == 0.0) continue;
      for (int c = 0; c < nc; ++c) {
        // L1 term; subgradient 0 at equality.
        const double diff = target(x, y, c) - warped(x, y, c);
        const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        grad[at(x, y, c)] += g * (1.0 - cfg.alpha) / nc * (-sgn);

        // SSIM term: candidate contains -(alpha/2)/nc * SSIM_c.
        const WindowStats s = window_stats(target, warped, x, y, c, r);
        const SsimParts p = ssim_from_stats(s, cfg.c1, cfg.c2);
        const double den = p.d1 * p.d2;
        // Partials of SSIM w.r.t. mu_b, E[ab] and E[b^2] (quotient rule).
        const double dn1_dmu = 2.0 * s.mu_a, dn2_dmu = -2.0 * s.mu_a;
        const double dd1_dmu = 2.0 * s.mu_b, dd2_dmu = -2.0 * s.mu_b;
        const double d_mu = (dn1_dmu * p.n2 + p.n1 * dn2_dmu) / den -
                            p.value * (dd1_dmu / p.d1 + dd2_dmu / p.d2);
        const double d_sab = p.n1 * 2.0 / den;
        const double d_sbb = -p.value / p.d2;
        const double scale = -g * 0.5 * cfg.alpha / nc / n;
        for (int dy = -r; dy <= r; ++dy) {
          const int yy = clampi(y + dy, 0, h - 1);
          for (int dx = -r; dx <= r; ++dx) {
            const int xx = clampi(x + dx, 0, w - 1);
            const double a = target(xx, yy, c), b = warped(xx, yy, c);
            grad[at(xx, yy, c)] += scale * (d_mu + d_sab * a + d_sbb * 2.0 * b);
          }
        }
      }
    }
  }
  return grad;
}

namespace {

double checked_mean(const Grid<double>& depth, const Map& gray) {
  if (!depth.same_shape(gray)) throw RasterError("depth and image dimensions differ");
  if (depth.empty()) throw std::invalid_argument("empty depth map");
  double sum = 0.0;
  for (double v : depth.data()) sum += v;
  const double mean = sum / double(depth.size());
  if (!(mean > 0.0)) throw std::invalid_argument("mean depth must be positive");
  return mean;
}

}  // namespace

Map edge_aware_smoothness(const Grid<double>& depth, const Image& image) {
  if (!depth.same_shape(image.width(), image.height())) throw RasterError("depth and image dimensions differ");
  return edge_aware_smoothness(depth, image.gray());
}

Map edge_aware_smoothness(const Grid<double>& depth, const Map& gray) {
  const double mean = checked_mean(depth, gray);
  const int w = depth.width(), h = depth.height();
  Map out(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      if (x + 1 < w) {
        const double dd = (depth(x + 1, y) - depth(x, y)) / mean;
        v += std::abs(dd) * std::exp(-std::abs(gray(x + 1, y) - gray(x, y)));
      }
      if (y + 1 < h) {
        const double dd = (depth(x, y + 1) - depth(x, y)) / mean;
        v += std::abs(dd) * std::exp(-std::abs(gray(x, y + 1) - gray(x, y)));
      }
      out(x, y) = v;
    }
  }
  return out;
}

Map edge_aware_smoothness_mean_grad(const Grid<double>& depth, const Image& image) {
  if (!depth.same_shape(image.width(), image.height())) throw RasterError("depth and image dimensions differ");
  return edge_aware_smoothness_mean_grad(depth, image.gray());
}

Map edge_aware_smoothness_mean_grad(const Grid<double>& depth, const Map& gray) {
  const double mean = checked_mean(depth, gray);
  const int w = depth.width(), h = depth.height();
  const double inv_p = 1.0 / double(depth.size());
  auto sgn = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };

  // Gradient with respect to the normalized depth d* = d / mean.
  Map g(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) {
        const double s = sgn(depth(x + 1, y) - depth(x, y)) *
                         std::exp(-std::abs(gray(x + 1, y) - gray(x, y))) * inv_p;
        g(x + 1, y) += s;
        g(x, y) -= s;
      }
      if (y + 1 < h) {
        const double s = sgn(depth(x, y + 1) - depth(x, y)) *
                         std::exp(-std::abs(gray(x, y + 1) - gray(x, y))) * inv_p;
        g(x, y + 1) += s;
        g(x, y) -= s;
      }
    }
  }
  double gd = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) gd += g[i] * depth[i];
  Map out(w, h);
  for (std::size_t i = 0; i < g.size(); ++i) {
    out[i] = g[i] / mean - gd * inv_p / (mean * mean);
  }
  return out;
}

}  // namespace udepth
