#include "udepth/dataset.hpp"

#include <cstdio>

#include "udepth/pfm.hpp"

namespace udepth {

namespace {

std::filesystem::path frame_file(const std::filesystem::path& dir, const char* stem, int i,
                                 const char* ext) {
  char name[64];
  std::snprintf(name, sizeof name, "%s_%04d.%s", stem, i, ext);
  return dir / name;
}

}  // namespace

CameraIntrinsics default_intrinsics(int width, int height) {
  const double f = 0.75 * width;
  return CameraIntrinsics(f, f, 0.5 * (width - 1), 0.5 * (height - 1));
}

Dataset render_dataset(const SceneParams& params, const LightModel& light,
                       const CameraIntrinsics& K, int width, int height, int frames,
                       double step_mm, int jobs) {
  Dataset d;
  d.K = K;
  d.poses = generate_trajectory(params, frames, step_mm);
  for (const Pose& pose : d.poses) {
    RenderResult r = render_view(params, pose, K, width, height, light, jobs);
    d.images.push_back(std::move(r.image));
    d.depths.push_back(std::move(r.depth));
    d.valid.push_back(std::move(r.valid));
    d.specular.push_back(std::move(r.specular));
  }
  return d;
}

void write_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_json(dir / "intrinsics.json", to_json(data.K));
  for (int i = 0; i < data.frames(); ++i) {
    write_ppm(data.images[i], frame_file(dir, "frame", i, "ppm"));
    write_pfm(data.depths[i], frame_file(dir, "depth", i, "pfm"));
    write_pfm(data.valid[i], frame_file(dir, "valid", i, "pfm"));
    write_pfm(data.specular[i], frame_file(dir, "specular", i, "pfm"));
    write_json(frame_file(dir, "pose", i, "json"), to_json(data.poses[i]));
  }
}

Dataset read_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw FormatError("dataset directory not found: " + dir.string());
  Dataset d;
  d.K = intrinsics_from_json(read_json(dir / "intrinsics.json"));
  for (int i = 0; std::filesystem::exists(frame_file(dir, "frame", i, "ppm")); ++i) {
    d.images.push_back(read_ppm(frame_file(dir, "frame", i, "ppm")));
    d.depths.push_back(read_depth_pfm(frame_file(dir, "depth", i, "pfm")));
    const auto vpath = frame_file(dir, "valid", i, "pfm");
    d.valid.push_back(std::filesystem::exists(vpath) ? read_mask_pfm(vpath)
                                                     : full_mask(d.images.back().width(),
                                                                 d.images.back().height()));
    const auto spath = frame_file(dir, "specular", i, "pfm");
    d.specular.push_back(std::filesystem::exists(spath)
                             ? read_mask_pfm(spath)
                             : Mask(d.images.back().width(), d.images.back().height(), 0));
    d.poses.push_back(pose_from_json(read_json(frame_file(dir, "pose", i, "json"))));
  }
  if (d.images.empty()) throw FormatError("dataset has no frames: " + dir.string());
  return d;
}

TrainBundle supervised_bundle(const Dataset& data, int target) {
  if (target < 0 || target >= data.frames()) throw TrainError("target frame out of range");
  TrainBundle b;
  b.image = data.images[target];
  b.labels = data.depths[target];
  b.mask = data.valid[target];
  return b;
}

TrainBundle selfsup_bundle(const Dataset& data, int target, int offset) {
  if (offset < 1) throw TrainError("source offset must be positive");
  if (target - offset < 0 || target + offset >= data.frames()) {
    throw TrainError("target frame needs sources " + std::to_string(offset) + " frames on both sides");
  }
  TrainBundle b;
  b.image = data.images[target];
  for (int s : {target - offset, target + offset}) {
    b.sources.push_back(data.images[s]);
    b.target_to_source.push_back(data.poses[s].inverse() * data.poses[target]);
  }
  b.K = data.K;
  return b;
}

}  // namespace udepth
