#include "udepth/synthcolon.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "udepth/parallel.hpp"
#include "udepth/random.hpp"

namespace udepth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kRidgeTwist = 0.4;       // angular wobble of each fold, rad
constexpr double kMinMarchStep = 0.02;    // mm of camera depth
constexpr int kMaxMarchSteps = 4000;
const double kTissue[3] = {0.95, 0.62, 0.52};

double fold(double phase) {
  const double c = 0.5 * (1.0 + std::cos(phase));
  return c * c * c;
}

std::uint64_t mix(std::uint64_t x) { return splitmix64(x); }

double lattice(std::uint64_t seed, std::int64_t ix, std::int64_t iy, std::int64_t iz) {
  std::uint64_t h = seed;
  h = mix(h ^ static_cast<std::uint64_t>(ix));
  h = mix(h ^ static_cast<std::uint64_t>(iy));
  h = mix(h ^ static_cast<std::uint64_t>(iz));
  return double(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

// Trilinear value noise in [0, 1).
double value_noise(std::uint64_t seed, double x, double y, double z) {
  const double fx = std::floor(x), fy = std::floor(y), fz = std::floor(z);
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy),
             iz = static_cast<std::int64_t>(fz);
  const double tx = smooth(x - fx), ty = smooth(y - fy), tz = smooth(z - fz);
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        const double w = (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) * (dz ? tz : 1 - tz);
        acc += w * lattice(seed, ix + dx, iy + dy, iz + dz);
      }
    }
  }
  return acc;
}

// Precomputed per-scene constants shared by the implicit function and the renderer.
class Tube {
 public:
  explicit Tube(const SceneParams& p) : p_(p) {
    Rng rng(derive_seed(p.seed, "scene"));
    ridge_phase_ = rng.uniform(0.0, kTwoPi);
    twist_phase_ = rng.uniform(0.0, kTwoPi);
    axial_offset_ = rng.uniform(0.0, 200.0);
    texture_seed_ = derive_seed(p.seed, "texture");
    const double w = p.curvature_frequency;
    const double axis_slope = p.curvature_amplitude_mm * w * (1.0 + 0.6 * 1.3);
    const double ridge_slope = 0.65 * p.ridge_amplitude_mm * p.ridge_frequency;
    const double twist_slope =
        0.65 * p.ridge_amplitude_mm * 2.0 * kRidgeTwist / std::max(p.radius_mm - p.ridge_amplitude_mm, 1e-3);
    lipschitz_ = 1.0 + axis_slope + ridge_slope + twist_slope;
  }

  std::array<double, 2> axis(double z) const {
    const double zz = z + axial_offset_;
    const double a = p_.curvature_amplitude_mm, w = p_.curvature_frequency;
    return {a * std::sin(w * zz), 0.6 * a * std::sin(1.3 * w * zz + 1.0)};
  }

  std::array<double, 2> axis_slope(double z) const {
    const double zz = z + axial_offset_;
    const double a = p_.curvature_amplitude_mm, w = p_.curvature_frequency;
    return {a * w * std::cos(w * zz), 0.6 * a * 1.3 * w * std::cos(1.3 * w * zz + 1.0)};
  }

  double implicit(const Vec3& q) const {
    const auto c = axis(q[2]);
    const double dx = q[0] - c[0], dy = q[1] - c[1];
    const double rho = std::hypot(dx, dy);
    const double theta = std::atan2(dy, dx);
    const double phase = p_.ridge_frequency * (q[2] + axial_offset_) + ridge_phase_ +
                         kRidgeTwist * std::sin(2.0 * theta + twist_phase_);
    return p_.radius_mm - p_.ridge_amplitude_mm * fold(phase) - rho;
  }

  Vec3 inward_normal(const Vec3& q) const {
    const double h = 1e-4;
    Vec3 g{};
    for (int k = 0; k < 3; ++k) {
      Vec3 a = q, b = q;
      a[k] += h;
      b[k] -= h;
      g[k] = (implicit(a) - implicit(b)) / (2.0 * h);
    }
    const double n = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
    return {g[0] / n, g[1] / n, g[2] / n};
  }

  std::array<double, 3> albedo(const Vec3& q) const {
    double n = 0.0, amp = 1.0, norm = 0.0;
    double freq = 1.0 / p_.texture_scale_mm;
    for (int o = 0; o < p_.texture_octaves; ++o) {
      n += amp * (2.0 * value_noise(texture_seed_ + o, q[0] * freq, q[1] * freq,
                                    (q[2] + axial_offset_) * freq) - 1.0);
      norm += amp;
      amp *= 0.5;
      freq *= 2.0;
    }
    n /= std::max(norm, 1e-12);
    const double m = std::max(0.05, 1.0 + p_.texture_contrast * n);
    // Slightly stronger modulation in green/blue reads as vessels on pink tissue.
    return {kTissue[0] * m, kTissue[1] * (1.0 + 1.2 * (m - 1.0)), kTissue[2] * (1.0 + 1.2 * (m - 1.0))};
  }

  double lipschitz() const { return lipschitz_; }

 private:
  SceneParams p_;
  double ridge_phase_ = 0, twist_phase_ = 0, axial_offset_ = 0, lipschitz_ = 1;
  std::uint64_t texture_seed_ = 0;
};

Vec3 add_scaled(const Vec3& o, const Vec3& d, double t) {
  return {o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2]};
}

// Returns the camera depth of the first wall crossing, or a negative value.
double march(const Tube& tube, const Vec3& origin, const Vec3& dir, double far) {
  const double dir_len = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
  double t = 0.0;
  double f = tube.implicit(origin);
  if (f <= 0.0) return -1.0;
  for (int it = 0; it < kMaxMarchSteps && t < far; ++it) {
    const double step = std::max(f / (tube.lipschitz() * dir_len), kMinMarchStep);
    const double t_next = std::min(t + step, far);
    const double f_next = tube.implicit(add_scaled(origin, dir, t_next));
    if (f_next <= 0.0) {
      double lo = t, hi = t_next;
      for (int b = 0; b < 60 && hi - lo > 1e-10; ++b) {
        const double mid = 0.5 * (lo + hi);
        (tube.implicit(add_scaled(origin, dir, mid)) > 0.0 ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    t = t_next;
    f = f_next;
  }
  return -1.0;
}

}  // namespace

void SceneParams::validate() const {
  if (!(radius_mm > 0.0)) throw SceneError("radius must be positive");
  if (!(ridge_amplitude_mm >= 0.0) || !(radius_mm > ridge_amplitude_mm)) {
    throw SceneError("ridge amplitude must lie in [0, radius)");
  }
  if (!(far_cap_mm > 0.0)) throw SceneError("far cap must be positive");
  if (texture_octaves < 1 || texture_octaves > 12) throw SceneError("texture octaves must lie in [1, 12]");
  if (!(texture_contrast >= 0.0) || !(texture_scale_mm > 0.0)) throw SceneError("invalid texture settings");
  if (!(curvature_amplitude_mm >= 0.0) || !(curvature_frequency >= 0.0) || !(ridge_frequency >= 0.0)) {
    throw SceneError("curvature and ridge settings must be nonnegative");
  }
  if (!(heading_noise_rad >= 0.0)) throw SceneError("heading noise must be nonnegative");
}

double SceneParams::implicit(const Vec3& p) const { return Tube(*this).implicit(p); }

std::array<double, 2> SceneParams::axis(double z) const { return Tube(*this).axis(z); }

void LightModel::validate() const {
  if (!(intensity >= 0.0)) throw SceneError("light intensity must be nonnegative");
  if (!(specular_cos > 0.0 && specular_cos < 1.0)) throw SceneError("specular_cos must lie in (0, 1)");
  if (!(specular_gain >= 0.0)) throw SceneError("specular gain must be nonnegative");
}

RenderResult render_view(const SceneParams& params, const Pose& camera_to_world,
                         const CameraIntrinsics& K, int width, int height,
                         const LightModel& light, int jobs) {
  params.validate();
  light.validate();
  if (width < 1 || height < 1) throw SceneError("image size must be positive");
  const Tube tube(params);
  const Vec3 origin = camera_to_world.translation();
  if (tube.implicit(origin) <= 0.0) throw SceneError("camera is outside the tube");

  std::vector<double> color(static_cast<std::size_t>(width) * height * 3, 0.0);
  std::vector<double> depth(static_cast<std::size_t>(width) * height, params.far_cap_mm);
  Mask valid(width, height, 0), spec(width, height, 0);
  const double far = params.far_cap_mm;

  parallel_for(static_cast<std::size_t>(height), jobs, [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      const Vec3 dir = camera_to_world.rotate({(x - K.cx()) / K.fx(), (y - K.cy()) / K.fy(), 1.0});
      const double t = march(tube, origin, dir, far);
      if (t < 0.0) {
        // Unresolved lumen: a dim cap at the far distance.
        const double v = light.intensity / (far * far);
        for (int c = 0; c < 3; ++c) color[i * 3 + c] = std::min(kTissue[c] * v, 1.0);
        continue;
      }
      const Vec3 hit = add_scaled(origin, dir, t);
      const Vec3 n = tube.inward_normal(hit);
      Vec3 to_light{origin[0] - hit[0], origin[1] - hit[1], origin[2] - hit[2]};
      const double dist = std::sqrt(to_light[0] * to_light[0] + to_light[1] * to_light[1] +
                                    to_light[2] * to_light[2]);
      for (auto& v : to_light) v /= dist;
      const double cosine = std::max(0.0, n[0] * to_light[0] + n[1] * to_light[1] + n[2] * to_light[2]);
      const auto alb = tube.albedo(hit);
      double highlight = 0.0;
      if (light.specular && cosine > light.specular_cos) {
        highlight = light.specular_gain * (cosine - light.specular_cos) / (1.0 - light.specular_cos);
        spec[i] = 1;
      }
      for (int c = 0; c < 3; ++c) {
        const double v = alb[c] * light.intensity * cosine / (dist * dist) + highlight;
        color[i * 3 + c] = std::clamp(v, 0.0, 1.0);
      }
      depth[i] = t;
      valid[i] = 1;
    }
  });
  return {Image(width, height, 3, std::move(color)), DepthMap(width, height, std::move(depth)),
          std::move(valid), std::move(spec)};
}

std::vector<Pose> generate_trajectory(const SceneParams& params, int n_frames, double step_mm) {
  params.validate();
  if (n_frames < 3) throw SceneError("trajectory needs at least 3 frames");
  if (!(step_mm > 0.0)) throw SceneError("step must be positive");
  if (step_mm >= params.far_cap_mm || step_mm >= params.radius_mm - params.ridge_amplitude_mm) {
    throw SceneError("step too large: camera would leave the tube between frames");
  }
  const Tube tube(params);
  Rng rng(derive_seed(params.seed, "trajectory"));
  std::vector<Pose> poses;
  poses.reserve(n_frames);
  for (int i = 0; i < n_frames; ++i) {
    const double z = i * step_mm;
    const auto c = tube.axis(z);
    const auto s = tube.axis_slope(z);
    const double len = std::sqrt(s[0] * s[0] + s[1] * s[1] + 1.0);
    const Vec3 fwd{s[0] / len, s[1] / len, 1.0 / len};
    // x = normalize(world_y x fwd), y = fwd x x: right-handed, y down.
    Vec3 xr{fwd[2], 0.0, -fwd[0]};
    const double xl = std::sqrt(xr[0] * xr[0] + xr[2] * xr[2]);
    xr = {xr[0] / xl, 0.0, xr[2] / xl};
    const Vec3 yd{fwd[1] * xr[2] - fwd[2] * xr[1], fwd[2] * xr[0] - fwd[0] * xr[2],
                  fwd[0] * xr[1] - fwd[1] * xr[0]};
    const Mat3 R{xr[0], yd[0], fwd[0], xr[1], yd[1], fwd[1], xr[2], yd[2], fwd[2]};
    const double nx = params.heading_noise_rad * rng.normal();
    const double ny = params.heading_noise_rad * rng.normal();
    const Pose pose = Pose(R, {c[0], c[1], z}) * Pose::from_axis_angle({nx, ny, 0.0});
    if (tube.implicit(pose.translation()) <= 0.0) throw SceneError("camera exits the tube");
    if (i > 0) {
      const Vec3& a = poses.back().translation();
      const Vec3& b = pose.translation();
      if (tube.implicit({0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])}) <= 0.0) {
        throw SceneError("step too large: camera exits the tube");
      }
    }
    poses.push_back(pose);
  }
  return poses;
}

Pose relative_pose(const std::vector<Pose>& trajectory, int target, int source) {
  return trajectory.at(source).inverse() * trajectory.at(target);
}

SfmLabels simulate_sfm_labels(const DepthMap& gt, std::uint64_t seed, double hole_fraction,
                              double noise_rel, double global_scale) {
  if (!(hole_fraction >= 0.0 && hole_fraction < 1.0)) throw SceneError("hole_fraction must lie in [0, 1)");
  if (!(noise_rel >= 0.0)) throw SceneError("noise_rel must be nonnegative");
  if (!(global_scale > 0.0)) throw SceneError("global_scale must be positive");
  const int w = gt.width(), h = gt.height();
  const std::size_t n = gt.size();

  Rng noise(derive_seed(seed, "sfm-noise"));
  std::vector<double> out(n, 0.0);
  Mask mask(w, h, 1);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      const double eps = noise_rel == 0.0 ? 0.0 : noise_rel * noise.normal();
      v = global_scale * gt[i] * (1.0 + eps);
      if (v > 0.0) break;
    }
    if (v > 0.0) {
      out[i] = v;
    } else {
      mask[i] = 0;
    }
  }

  const auto holes = static_cast<std::size_t>(std::llround(hole_fraction * double(n)));
  if (holes > 0) {
    std::vector<double> grad(n);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double gx = 0.5 * (gt(std::min(x + 1, w - 1), y) - gt(std::max(x - 1, 0), y));
        const double gy = 0.5 * (gt(x, std::min(y + 1, h - 1)) - gt(x, std::max(y - 1, 0)));
        grad[static_cast<std::size_t>(y) * w + x] = std::hypot(gx, gy);
      }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return grad[a] < grad[b]; });
    // Weighted sampling without replacement (Efraimidis-Spirakis keys).
    Rng pick(derive_seed(seed, "sfm-holes"));
    std::vector<std::pair<double, std::size_t>> keys(n);
    for (std::size_t r = 0; r < n; ++r) {
      const double u = 1.0 - pick.uniform();
      keys[r] = {std::log(u) / double(r + 1), order[r]};
    }
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(holes), keys.end(),
                      [](const auto& a, const auto& b) {
                        return a.first > b.first || (a.first == b.first && a.second < b.second);
                      });
    for (std::size_t k = 0; k < holes; ++k) {
      mask[keys[k].second] = 0;
      out[keys[k].second] = 0.0;
    }
  }
  return {DepthMap(w, h, std::move(out)), std::move(mask)};
}

void apply_domain_shift(const DomainShift& shift, SceneParams& params, LightModel& light) {
  params.texture_contrast *= shift.texture_contrast_scale;
  params.curvature_amplitude_mm *= shift.curvature_amplitude_scale;
  params.curvature_frequency *= shift.curvature_frequency_scale;
  light.intensity *= shift.light_intensity_scale;
  params.validate();
  light.validate();
}

}  // namespace udepth
