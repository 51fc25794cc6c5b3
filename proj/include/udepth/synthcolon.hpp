#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "udepth/geometry.hpp"
#include "udepth/raster.hpp"

namespace udepth {

class SceneError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Procedural colon-like tube. The axis wanders laterally as
/// (A sin(w z), 0.6 A sin(1.3 w z + 1)); the wall radius is reduced by
/// haustral folds of height `ridge_amplitude_mm` recurring every
/// 2 pi / ridge_frequency mm along the axis.
struct SceneParams {
  double radius_mm = 10.0;
  double curvature_amplitude_mm = 2.0;
  double curvature_frequency = 0.03;  // rad per mm along the axis
  double ridge_amplitude_mm = 1.5;
  double ridge_frequency = 0.6;       // rad per mm along the axis
  int texture_octaves = 4;
  double texture_contrast = 0.6;
  double texture_scale_mm = 2.5;      // feature size of the coarsest octave
  double far_cap_mm = 60.0;
  double heading_noise_rad = 0.005;   // per-frame camera heading jitter
  std::uint64_t seed = 0;

  void validate() const;
  /// Implicit wall function: positive inside the lumen, zero on the wall.
  double implicit(const Vec3& p) const;
  /// Lateral axis offset at axial coordinate z.
  std::array<double, 2> axis(double z) const;
};

/// Point light co-located with the camera, inverse-square falloff.
struct LightModel {
  double intensity = 300.0;  // radiance scale in mm^2
  bool specular = true;
  double specular_cos = 0.995;  // view-normal alignment that triggers a highlight
  double specular_gain = 0.8;

  void validate() const;
};

struct RenderResult {
  Image image;
  DepthMap depth;  // camera-frame z of the first wall hit, far cap where none
  Mask valid;      // wall hit before the far cap
  Mask specular;   // pixels with a highlight added
};

/// Sphere-traces one ray per pixel; `pose` maps camera coordinates to world.
RenderResult render_view(const SceneParams& params, const Pose& camera_to_world,
                         const CameraIntrinsics& K, int width, int height,
                         const LightModel& light, int jobs = 1);

/// Camera-to-world poses advancing along the tube axis by step_mm per frame.
std::vector<Pose> generate_trajectory(const SceneParams& params, int n_frames, double step_mm);

/// Transform taking points in frame `target`'s camera into frame `source`'s camera.
Pose relative_pose(const std::vector<Pose>& trajectory, int target, int source);

struct SfmLabels {
  DepthMap depth;
  Mask mask;
};

/// Noisy, up-to-scale, holed copy of a depth map. Holes prefer pixels with
/// large depth gradients (sampling weight = gradient-magnitude rank).
SfmLabels simulate_sfm_labels(const DepthMap& gt, std::uint64_t seed, double hole_fraction,
                              double noise_rel, double global_scale);

/// Appearance and geometry shift used for the teacher-student domain.
struct DomainShift {
  double texture_contrast_scale = 0.5;
  double light_intensity_scale = 0.7;
  double curvature_amplitude_scale = 1.8;
  double curvature_frequency_scale = 1.2;
};

void apply_domain_shift(const DomainShift& shift, SceneParams& params, LightModel& light);

}  // namespace udepth
