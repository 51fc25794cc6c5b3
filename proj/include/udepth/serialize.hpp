#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "udepth/geometry.hpp"
#include "udepth/predictor.hpp"
#include "udepth/synthcolon.hpp"
#include "udepth/trainer.hpp"

namespace udepth {

using Json = nlohmann::ordered_json;

/// Malformed or missing JSON field.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json to_json(const Pose& pose);               // {"R": [9 row-major], "t": [3]}
Pose pose_from_json(const Json& j);
Json to_json(const CameraIntrinsics& K);      // {"fx", "fy", "cx", "cy"}
CameraIntrinsics intrinsics_from_json(const Json& j);
Json to_json(const DepthField& field);
DepthField field_from_json(const Json& j);
Json to_json(const SceneParams& p);
/// Missing keys keep the values already in `p`.
void update_from_json(const Json& j, SceneParams& p);
Json to_json(const LightModel& l);
void update_from_json(const Json& j, LightModel& l);
Json to_json(const TrainConfig& c);
void update_from_json(const Json& j, TrainConfig& c);

Json read_json(const std::filesystem::path& path);
/// Two-space indented, trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace udepth
