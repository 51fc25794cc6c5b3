#include "udepth/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace udepth {

CameraIntrinsics::CameraIntrinsics(double fx, double fy, double cx, double cy)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy) {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw GeometryError("focal lengths must be positive and finite");
  }
  if (!std::isfinite(cx) || !std::isfinite(cy)) throw GeometryError("principal point must be finite");
}

Pose::Pose() : R_{1, 0, 0, 0, 1, 0, 0, 0, 1}, t_{0, 0, 0} {}

Pose::Pose(const Mat3& rotation, const Vec3& translation) : R_(rotation), t_(translation) {
  for (double v : R_) {
    if (!std::isfinite(v)) throw GeometryError("rotation must be finite");
  }
  for (double v : t_) {
    if (!std::isfinite(v)) throw GeometryError("translation must be finite");
  }
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += R_[k * 3 + i] * R_[k * 3 + j];
      worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
    }
  }
  if (worst >= 1e-6) throw GeometryError("rotation is not orthonormal");
  const double det = R_[0] * (R_[4] * R_[8] - R_[5] * R_[7]) -
                     R_[1] * (R_[3] * R_[8] - R_[5] * R_[6]) +
                     R_[2] * (R_[3] * R_[7] - R_[4] * R_[6]);
  if (det <= 0.0) throw GeometryError("rotation must have determinant +1");
}

Pose Pose::from_translation(const Vec3& t) { return Pose({1, 0, 0, 0, 1, 0, 0, 0, 1}, t); }

Pose Pose::from_axis_angle(const Vec3& w, const Vec3& t) {
  const double theta = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
  if (theta < 1e-15) return from_translation(t);
  const double kx = w[0] / theta, ky = w[1] / theta, kz = w[2] / theta;
  const double c = std::cos(theta), s = std::sin(theta), v = 1.0 - c;
  const Mat3 R{c + kx * kx * v,      kx * ky * v - kz * s, kx * kz * v + ky * s,
               ky * kx * v + kz * s, c + ky * ky * v,      ky * kz * v - kx * s,
               kz * kx * v - ky * s, kz * ky * v + kx * s, c + kz * kz * v};
  return Pose(R, t);
}

Vec3 Pose::rotate(const Vec3& v) const {
  return {R_[0] * v[0] + R_[1] * v[1] + R_[2] * v[2], R_[3] * v[0] + R_[4] * v[1] + R_[5] * v[2],
          R_[6] * v[0] + R_[7] * v[1] + R_[8] * v[2]};
}

Vec3 Pose::apply(const Vec3& p) const {
  Vec3 q = rotate(p);
  return {q[0] + t_[0], q[1] + t_[1], q[2] + t_[2]};
}

Pose Pose::operator*(const Pose& o) const {
  Mat3 R{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += R_[i * 3 + k] * o.R_[k * 3 + j];
      R[i * 3 + j] = s;
    }
  }
  Pose out;
  out.R_ = R;
  out.t_ = apply(o.t_);
  return out;
}

Pose Pose::inverse() const {
  Pose out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out.R_[i * 3 + j] = R_[j * 3 + i];
  }
  const Vec3 rt = out.rotate(t_);
  out.t_ = {-rt[0], -rt[1], -rt[2]};
  return out;
}

double pose_distance(const Pose& a, const Pose& b) {
  double d = 0.0;
  for (int i = 0; i < 9; ++i) d = std::max(d, std::abs(a.rotation()[i] - b.rotation()[i]));
  for (int i = 0; i < 3; ++i) d = std::max(d, std::abs(a.translation()[i] - b.translation()[i]));
  return d;
}

PixelCoord project(const CameraIntrinsics& K, const Vec3& p) {
  if (!(p[2] > kNearPlaneMm)) throw GeometryError("point is behind the camera");
  return {K.fx() * p[0] / p[2] + K.cx(), K.fy() * p[1] / p[2] + K.cy()};
}

Vec3 backproject(const CameraIntrinsics& K, PixelCoord j, double depth) {
  if (!(depth > 0.0) || !std::isfinite(depth)) throw GeometryError("invalid depth");
  return {(j.x - K.cx()) * depth / K.fx(), (j.y - K.cy()) * depth / K.fy(), depth};
}

WarpJacobian warp_pixel_jacobian(PixelCoord j, double depth, const CameraIntrinsics& K,
                                 const Pose& pose, int width, int height) {
  WarpJacobian out;
  if (!(depth > 0.0) || !std::isfinite(depth)) return out;
  // The identity transform maps pixels onto themselves exactly, independent of depth.
  if (pose == Pose::identity()) {
    out.warp = {j, j.x >= 0.0 && j.y >= 0.0 && j.x <= width - 1 && j.y <= height - 1};
    return out;
  }
  const Vec3 ray{(j.x - K.cx()) / K.fx(), (j.y - K.cy()) / K.fy(), 1.0};
  const Vec3 q = pose.apply({ray[0] * depth, ray[1] * depth, depth});
  if (!(q[2] > kNearPlaneMm)) return out;
  const double inv_z = 1.0 / q[2];
  out.warp.pixel = {K.fx() * q[0] * inv_z + K.cx(), K.fy() * q[1] * inv_z + K.cy()};
  const auto& p = out.warp.pixel;
  out.warp.valid = p.x >= 0.0 && p.y >= 0.0 && p.x <= width - 1 && p.y <= height - 1;
  // d q / d depth = R * ray
  const Vec3 dq = pose.rotate(ray);
  out.dx_dd = K.fx() * (dq[0] * inv_z - q[0] * dq[2] * inv_z * inv_z);
  out.dy_dd = K.fy() * (dq[1] * inv_z - q[1] * dq[2] * inv_z * inv_z);
  return out;
}

WarpResult warp_pixel(PixelCoord j, double depth, const CameraIntrinsics& K, const Pose& pose,
                      int width, int height) {
  if (!(depth > 0.0)) throw GeometryError("invalid depth");
  return warp_pixel_jacobian(j, depth, K, pose, width, height).warp;
}

WarpedImage synthesize_warped_image(const Image& source, const DepthMap& target_depth,
                                    const Pose& target_to_source, const CameraIntrinsics& K) {
  if (!target_depth.same_shape(source.width(), source.height())) {
    throw RasterError("source image and target depth dimensions differ");
  }
  const int w = source.width(), h = source.height(), nc = source.channels();
  std::vector<double> data(static_cast<std::size_t>(w) * h * nc, 0.0);
  Mask valid(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = target_depth(x, y);
      if (!(d > 0.0)) continue;
      const WarpResult wr = warp_pixel({double(x), double(y)}, d, K, target_to_source, w, h);
      if (!wr.valid) continue;
      const Sample s = bilinear_sample(source, wr.pixel.x, wr.pixel.y);
      if (!s.valid) continue;
      valid(x, y) = 1;
      for (int c = 0; c < nc; ++c) {
        data[(static_cast<std::size_t>(y) * w + x) * nc + c] = s.color[c];
      }
    }
  }
  return {Image(w, h, nc, std::move(data)), std::move(valid)};
}

}  // namespace udepth
