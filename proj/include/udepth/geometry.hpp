#pragma once

#include <array>
#include <stdexcept>

#include "udepth/raster.hpp"

namespace udepth {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major

class GeometryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Points with camera-frame z at or below this distance (mm) cannot be projected.
inline constexpr double kNearPlaneMm = 1e-6;

struct PixelCoord {
  double x = 0.0;
  double y = 0.0;
};

/// Pinhole intrinsics in pixels. Camera frame: x right, y down, z forward.
class CameraIntrinsics {
 public:
  CameraIntrinsics(double fx, double fy, double cx, double cy);

  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }

  bool operator==(const CameraIntrinsics&) const = default;

 private:
  double fx_, fy_, cx_, cy_;
};

/// Rigid transform p -> R p + t with R in SO(3) and t in mm.
class Pose {
 public:
  Pose();
  Pose(const Mat3& rotation, const Vec3& translation);

  static Pose identity() { return Pose(); }
  static Pose from_translation(const Vec3& t);
  /// Rotation by |axis_angle| radians about its direction (Rodrigues).
  static Pose from_axis_angle(const Vec3& axis_angle, const Vec3& t = {0, 0, 0});

  const Mat3& rotation() const { return R_; }
  const Vec3& translation() const { return t_; }

  Vec3 apply(const Vec3& p) const;
  Vec3 rotate(const Vec3& v) const;
  /// (this * other)(p) = this(other(p)).
  Pose operator*(const Pose& other) const;
  Pose inverse() const;

  bool operator==(const Pose&) const = default;

 private:
  Mat3 R_;
  Vec3 t_;
};

/// Max-norm distance between two poses, over rotation and translation entries.
double pose_distance(const Pose& a, const Pose& b);

PixelCoord project(const CameraIntrinsics& K, const Vec3& p);
Vec3 backproject(const CameraIntrinsics& K, PixelCoord j, double depth);

struct WarpResult {
  PixelCoord pixel;
  bool valid = false;
};

/// Reprojects target pixel j with depth d into the source view, where pose
/// maps target-camera points into the source camera frame. Invalid when the
/// point lands behind the source camera or outside [0,w-1] x [0,h-1].
WarpResult warp_pixel(PixelCoord j, double depth, const CameraIntrinsics& K, const Pose& pose,
                      int width, int height);

/// Jacobian of the warped pixel with respect to the depth used for backprojection.
struct WarpJacobian {
  WarpResult warp;
  double dx_dd = 0.0;
  double dy_dd = 0.0;
};
WarpJacobian warp_pixel_jacobian(PixelCoord j, double depth, const CameraIntrinsics& K,
                                 const Pose& pose, int width, int height);

struct WarpedImage {
  Image image;
  Mask valid;
};

/// Inverse-warps the source image into the target frame using the target
/// depth. Invalid pixels are filled with zeros.
WarpedImage synthesize_warped_image(const Image& source, const DepthMap& target_depth,
                                    const Pose& target_to_source, const CameraIntrinsics& K);

}  // namespace udepth
