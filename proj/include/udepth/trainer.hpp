#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "udepth/geometry.hpp"
#include "udepth/losses.hpp"
#include "udepth/photometry.hpp"
#include "udepth/predictor.hpp"
#include "udepth/raster.hpp"

namespace udepth {

/// Bad regime, bundle or configuration.
class TrainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Loss or gradient became non-finite during training.
class NumericError : public std::runtime_error {
 public:
  NumericError(int step, const std::string& what);
  int step() const { return step_; }

 private:
  int step_;
};

enum class Regime { SupervisedGT, SupervisedSfM, SelfSupervised, PlainStudent, UncertainStudent };

/// Command-line spelling, e.g. "supervised-gt".
std::string_view regime_name(Regime r);
/// Throws TrainError listing the valid names.
Regime parse_regime(std::string_view name);
std::vector<std::string> regime_names();

/// Inputs for one scene-fitting run. Which members are required depends on
/// the regime:
///   SupervisedGT / SupervisedSfM: image, labels, mask (empty mask = all valid)
///   SelfSupervised: image, sources, target_to_source, K
///   PlainStudent: image, labels (teacher depth), mask
///   UncertainStudent: as PlainStudent plus teacher_sigma (standard deviation)
struct TrainBundle {
  Image image;
  DepthMap labels;
  Mask mask;
  UncMap teacher_sigma;
  std::vector<Image> sources;
  std::vector<Pose> target_to_source;
  std::optional<CameraIntrinsics> K;

  void validate(Regime regime) const;
  int width() const { return image.width(); }
  int height() const { return image.height(); }
};

struct TrainConfig {
  int steps = 1500;
  double learning_rate = 0.1;         // step on log-depth cells
  double sigma_learning_rate = 1.0;   // step on log-sigma cells
  int grid_w = 16;
  int grid_h = 16;
  double depth_init_mm = 30.0;
  double jitter = 0.05;
  LossConfig loss;
  PhotometricConfig photometric;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Defaults tuned for 64x64 scenes: the self-supervised objective has much
/// weaker depth gradients and gets a larger depth step and more smoothing.
TrainConfig recommended_config(Regime regime);

struct TrainReport {
  std::vector<double> loss;  // objective before each step, then after the last one
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

struct TrainedMember {
  DepthField field;
  TrainReport report;
};

/// Full objective (likelihood + prior terms) and its gradient with respect to
/// DepthField::parameters(). `branch` hashes every discrete choice the value
/// depends on (L1 signs, scale clamps, argmin sources, bilinear cells,
/// validity), so two evaluations with equal `branch` lie on one smooth piece.
struct Objective {
  double value = 0.0;
  std::vector<double> grad;
  std::uint64_t branch = 0;
};

Objective evaluate_objective(Regime regime, const TrainBundle& data, const DepthField& field,
                             const TrainConfig& cfg);

/// Fixed-step gradient descent from init_random(cfg.seed, ...).
TrainedMember train_member(Regime regime, const TrainBundle& data, const TrainConfig& cfg);
/// Same, starting from a given field.
TrainedMember train_member(Regime regime, const TrainBundle& data, const TrainConfig& cfg,
                           DepthField init);

/// Member i uses seed base_seed + i. Members train concurrently on up to
/// `jobs` threads; the result is ordered by seed and independent of `jobs`.
std::vector<TrainedMember> train_ensemble(Regime regime, const TrainBundle& data,
                                          const TrainConfig& cfg, int members,
                                          std::uint64_t base_seed, int jobs = 1);

struct AuditResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;  // parameters compared
  std::size_t kinks = 0;    // parameters skipped because a difference crossed a kink
};

/// Compares the analytic gradient of the objective with central differences
/// of size `step` per parameter. The error of one parameter is
/// |g - g_fd| / max(|g|, |g_fd|, 1e-3 * max_k |g_k|).
AuditResult finite_diff_audit(Regime regime, const TrainBundle& data, const DepthField& field,
                              const TrainConfig& cfg, double step = 1e-4);

/// Applies seeded rotation (rad) and translation (mm) noise to a pose.
Pose perturb_pose(const Pose& pose, std::uint64_t seed, double rotation_sigma,
                  double translation_sigma);

}  // namespace udepth
