#include "udepth/serialize.hpp"

#include <charconv>
#include <fstream>

namespace udepth {

namespace {

template <class T>
T get(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(std::string("bad value for '") + key + "'");
  }
}

template <class T>
void maybe(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = get<T>(j, key);
}

template <std::size_t N>
std::array<double, N> fixed_array(const Json& j, const char* key) {
  const auto v = get<std::vector<double>>(j, key);
  if (v.size() != N) throw FormatError(std::string("'") + key + "' must have " + std::to_string(N) + " entries");
  std::array<double, N> a{};
  std::copy(v.begin(), v.end(), a.begin());
  return a;
}

}  // namespace

Json to_json(const Pose& pose) {
  return Json{{"R", pose.rotation()}, {"t", pose.translation()}};
}

Pose pose_from_json(const Json& j) {
  try {
    return Pose(fixed_array<9>(j, "R"), fixed_array<3>(j, "t"));
  } catch (const GeometryError& e) {
    throw FormatError(std::string("invalid pose: ") + e.what());
  }
}

Json to_json(const CameraIntrinsics& K) {
  return Json{{"fx", K.fx()}, {"fy", K.fy()}, {"cx", K.cx()}, {"cy", K.cy()}};
}

CameraIntrinsics intrinsics_from_json(const Json& j) {
  try {
    return CameraIntrinsics(get<double>(j, "fx"), get<double>(j, "fy"), get<double>(j, "cx"),
                            get<double>(j, "cy"));
  } catch (const GeometryError& e) {
    throw FormatError(std::string("invalid intrinsics: ") + e.what());
  }
}

Json to_json(const DepthField& f) {
  return Json{{"grid_w", f.grid_w},
              {"grid_h", f.grid_h},
              {"seed", f.seed},
              {"log_depth", f.log_depth},
              {"log_sigma", f.log_sigma}};
}

DepthField field_from_json(const Json& j) {
  DepthField f;
  f.grid_w = get<int>(j, "grid_w");
  f.grid_h = get<int>(j, "grid_h");
  f.seed = get<std::uint64_t>(j, "seed");
  f.log_depth = get<std::vector<double>>(j, "log_depth");
  f.log_sigma = get<std::vector<double>>(j, "log_sigma");
  try {
    f.validate();
  } catch (const std::exception& e) {
    throw FormatError(std::string("invalid depth field: ") + e.what());
  }
  return f;
}

Json to_json(const SceneParams& p) {
  return Json{{"radius_mm", p.radius_mm},
              {"curvature_amplitude_mm", p.curvature_amplitude_mm},
              {"curvature_frequency", p.curvature_frequency},
              {"ridge_amplitude_mm", p.ridge_amplitude_mm},
              {"ridge_frequency", p.ridge_frequency},
              {"texture_octaves", p.texture_octaves},
              {"texture_contrast", p.texture_contrast},
              {"texture_scale_mm", p.texture_scale_mm},
              {"far_cap_mm", p.far_cap_mm},
              {"heading_noise_rad", p.heading_noise_rad},
              {"seed", p.seed}};
}

void update_from_json(const Json& j, SceneParams& p) {
  maybe(j, "radius_mm", p.radius_mm);
  maybe(j, "curvature_amplitude_mm", p.curvature_amplitude_mm);
  maybe(j, "curvature_frequency", p.curvature_frequency);
  maybe(j, "ridge_amplitude_mm", p.ridge_amplitude_mm);
  maybe(j, "ridge_frequency", p.ridge_frequency);
  maybe(j, "texture_octaves", p.texture_octaves);
  maybe(j, "texture_contrast", p.texture_contrast);
  maybe(j, "texture_scale_mm", p.texture_scale_mm);
  maybe(j, "far_cap_mm", p.far_cap_mm);
  maybe(j, "heading_noise_rad", p.heading_noise_rad);
  maybe(j, "seed", p.seed);
}

Json to_json(const LightModel& l) {
  return Json{{"intensity", l.intensity},
              {"specular", l.specular},
              {"specular_cos", l.specular_cos},
              {"specular_gain", l.specular_gain}};
}

void update_from_json(const Json& j, LightModel& l) {
  maybe(j, "intensity", l.intensity);
  maybe(j, "specular", l.specular);
  maybe(j, "specular_cos", l.specular_cos);
  maybe(j, "specular_gain", l.specular_gain);
}

Json to_json(const TrainConfig& c) {
  return Json{{"steps", c.steps},
              {"learning_rate", c.learning_rate},
              {"sigma_learning_rate", c.sigma_learning_rate},
              {"grid_w", c.grid_w},
              {"grid_h", c.grid_h},
              {"depth_init_mm", c.depth_init_mm},
              {"jitter", c.jitter},
              {"sigma_min", c.loss.sigma_min},
              {"lambda_u", c.loss.lambda_u},
              {"weight_decay", c.loss.weight_decay},
              {"ssim_alpha", c.photometric.alpha},
              {"ssim_window", c.photometric.ssim_window},
              {"ssim_c1", c.photometric.c1},
              {"ssim_c2", c.photometric.c2},
              {"seed", c.seed}};
}

void update_from_json(const Json& j, TrainConfig& c) {
  maybe(j, "steps", c.steps);
  maybe(j, "learning_rate", c.learning_rate);
  maybe(j, "sigma_learning_rate", c.sigma_learning_rate);
  maybe(j, "grid_w", c.grid_w);
  maybe(j, "grid_h", c.grid_h);
  maybe(j, "depth_init_mm", c.depth_init_mm);
  maybe(j, "jitter", c.jitter);
  maybe(j, "sigma_min", c.loss.sigma_min);
  maybe(j, "lambda_u", c.loss.lambda_u);
  maybe(j, "weight_decay", c.loss.weight_decay);
  maybe(j, "ssim_alpha", c.photometric.alpha);
  maybe(j, "ssim_window", c.photometric.ssim_window);
  maybe(j, "ssim_c1", c.photometric.c1);
  maybe(j, "ssim_c2", c.photometric.c2);
  maybe(j, "seed", c.seed);
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("failed writing " + path.string());
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace udepth
