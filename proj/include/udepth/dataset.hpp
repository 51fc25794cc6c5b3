#pragma once

#include <filesystem>
#include <vector>

#include "udepth/serialize.hpp"
#include "udepth/synthcolon.hpp"
#include "udepth/trainer.hpp"

namespace udepth {

/// Rendered sequence. Per frame i the directory layout is frame_%04d.ppm,
/// depth_%04d.pfm, pose_%04d.json (camera to world), valid_%04d.pfm and
/// specular_%04d.pfm, plus intrinsics.json and manifest.json.
struct Dataset {
  CameraIntrinsics K{1.0, 1.0, 0.0, 0.0};
  std::vector<Image> images;
  std::vector<DepthMap> depths;
  std::vector<Mask> valid;
  std::vector<Mask> specular;
  std::vector<Pose> poses;

  int frames() const { return static_cast<int>(images.size()); }
  int width() const { return images.empty() ? 0 : images.front().width(); }
  int height() const { return images.empty() ? 0 : images.front().height(); }
};

/// fx = fy = 0.75 w, principal point at the image center.
CameraIntrinsics default_intrinsics(int width, int height);

/// Default trajectory step; small enough that consecutive frames stay
/// photometrically consistent under the co-located light.
inline constexpr double kDefaultStepMm = 0.35;
/// Default frame offset of the previous/posterior sources in self-supervision.
inline constexpr int kDefaultSourceOffset = 3;

Dataset render_dataset(const SceneParams& params, const LightModel& light,
                       const CameraIntrinsics& K, int width, int height, int frames,
                       double step_mm, int jobs = 1);

void write_dataset(const Dataset& data, const std::filesystem::path& dir);
/// Images come back quantized to 8 bits, as stored.
Dataset read_dataset(const std::filesystem::path& dir);

/// Image, GT depth and validity of one frame.
TrainBundle supervised_bundle(const Dataset& data, int target);
/// Target plus the frames `offset` before and after it, with exact relative poses.
TrainBundle selfsup_bundle(const Dataset& data, int target, int offset = kDefaultSourceOffset);

}  // namespace udepth
