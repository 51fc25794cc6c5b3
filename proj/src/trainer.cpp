#include "udepth/trainer.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>

#include "udepth/parallel.hpp"
#include "udepth/random.hpp"

namespace udepth {

namespace {

constexpr std::array<std::pair<Regime, std::string_view>, 5> kRegimes{{
    {Regime::SupervisedGT, "supervised-gt"},
    {Regime::SupervisedSfM, "supervised-sfm"},
    {Regime::SelfSupervised, "self-supervised"},
    {Regime::PlainStudent, "plain-student"},
    {Regime::UncertainStudent, "uncertain-student"},
}};

class BranchHash {
 public:
  void add(std::int64_t v) {
    auto u = static_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h_ ^= (u >> (8 * b)) & 0xff;
      h_ *= 0x100000001b3ULL;
    }
  }
  void add_sign(double v) { add(v > 0.0 ? 1 : (v < 0.0 ? -1 : 0)); }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

Mask effective_mask(const TrainBundle& data) {
  return data.mask.empty() ? full_mask(data.width(), data.height()) : data.mask;
}

// Warped source plus the derivative of every warped value with respect to the
// target depth of its pixel.
struct WarpWithGrad {
  WarpedImage warped;
  std::vector<double> d_depth;
};

WarpWithGrad warp_with_grad(const Image& source, const DepthMap& depth, const Pose& pose,
                            const CameraIntrinsics& K, BranchHash& branch) {
  const int w = source.width(), h = source.height(), nc = source.channels();
  std::vector<double> data(static_cast<std::size_t>(w) * h * nc, 0.0);
  std::vector<double> dd(data.size(), 0.0);
  Mask valid(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const WarpJacobian wj = warp_pixel_jacobian({double(x), double(y)}, depth(x, y), K, pose, w, h);
      if (!wj.warp.valid) {
        branch.add(-1);
        continue;
      }
      const SampleGrad s = bilinear_sample_grad(source, wj.warp.pixel.x, wj.warp.pixel.y);
      if (!s.valid) {
        branch.add(-1);
        continue;
      }
      branch.add(static_cast<std::int64_t>(std::floor(wj.warp.pixel.x)));
      branch.add(static_cast<std::int64_t>(std::floor(wj.warp.pixel.y)));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      valid[i] = 1;
      for (int c = 0; c < nc; ++c) {
        data[i * nc + c] = s.color[c];
        dd[i * nc + c] = s.d_dx[c] * wj.dx_dd + s.d_dy[c] * wj.dy_dd;
      }
    }
  }
  return {{Image(w, h, nc, std::move(data)), std::move(valid)}, std::move(dd)};
}

double map_mean(const Map& m) {
  double s = 0.0;
  for (double v : m.data()) s += v;
  return s / double(m.size());
}

void likelihood_branch(const LossValue&, const Grid<double>& labels, const FieldOutput& out,
                       const Mask& mask, const LossConfig& cfg, BranchHash& branch) {
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    branch.add_sign(labels[i] - out.depth[i]);
    branch.add(out.sigma[i] < cfg.sigma_min ? 1 : 0);
  }
}

}  // namespace

NumericError::NumericError(int step, const std::string& what)
    : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}

std::string_view regime_name(Regime r) {
  for (const auto& [reg, name] : kRegimes) {
    if (reg == r) return name;
  }
  throw TrainError("unknown regime");
}

std::vector<std::string> regime_names() {
  std::vector<std::string> out;
  for (const auto& entry : kRegimes) out.emplace_back(entry.second);
  return out;
}

Regime parse_regime(std::string_view name) {
  for (const auto& [reg, n] : kRegimes) {
    if (n == name) return reg;
  }
  std::string msg = "invalid regime '" + std::string(name) + "'; valid regimes:";
  for (const auto& entry : kRegimes) msg += " " + std::string(entry.second);
  throw TrainError(msg);
}

void TrainBundle::validate(Regime regime) const {
  if (image.empty()) throw TrainError("training bundle has no target image");
  const int w = width(), h = height();
  if (!mask.empty() && !mask.same_shape(w, h)) throw TrainError("mask does not match the image");
  if (regime == Regime::SelfSupervised) {
    if (sources.empty()) throw TrainError("self-supervised training needs source images");
    if (sources.size() != target_to_source.size()) {
      throw TrainError("one relative pose is needed per source image");
    }
    if (!K) throw TrainError("self-supervised training needs camera intrinsics");
    for (const auto& s : sources) {
      if (s.width() != w || s.height() != h || s.channels() != image.channels()) {
        throw TrainError("source image does not match the target");
      }
    }
    return;
  }
  if (labels.empty()) throw TrainError(std::string(regime_name(regime)) + " training needs depth labels");
  if (!labels.same_shape(w, h)) throw TrainError("labels do not match the image");
  const Mask m = mask.empty() ? full_mask(w, h) : mask;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] && !(labels[i] > 0.0)) throw TrainError("labels must be positive on valid pixels");
  }
  if (count_valid(m) == 0) throw TrainError("no valid label pixels");
  if (regime == Regime::UncertainStudent) {
    if (teacher_sigma.empty()) throw TrainError("uncertain-student training needs teacher uncertainty maps");
    if (!teacher_sigma.same_shape(w, h)) throw TrainError("teacher uncertainty does not match the image");
  }
}

void TrainConfig::validate() const {
  if (steps < 1) throw TrainError("steps must be at least 1");
  if (!(learning_rate >= 0.0) || !(sigma_learning_rate >= 0.0)) {
    throw TrainError("learning rates must be nonnegative");
  }
  if (grid_w < 1 || grid_h < 1) throw TrainError("grid size must be positive");
  if (!(depth_init_mm > 0.0)) throw TrainError("depth_init_mm must be positive");
  if (!(jitter >= 0.0)) throw TrainError("jitter must be nonnegative");
  loss.validate();
  photometric.validate();
}

TrainConfig recommended_config(Regime regime) {
  TrainConfig cfg;
  if (regime == Regime::SelfSupervised) {
    cfg.learning_rate = 1.0;
    cfg.loss.lambda_u = 0.05;
  }
  return cfg;
}

Objective evaluate_objective(Regime regime, const TrainBundle& data, const DepthField& field,
                             const TrainConfig& cfg) {
  const int w = data.width(), h = data.height();
  const FieldOutput out = forward(field, w, h);
  BranchHash branch;
  Objective obj;
  Map grad_depth(w, h, 0.0), grad_sigma(w, h, 0.0);

  if (regime == Regime::SelfSupervised) {
    const CameraIntrinsics& K = *data.K;
    std::vector<WarpWithGrad> warps;
    std::vector<WarpedImage> images;
    for (std::size_t s = 0; s < data.sources.size(); ++s) {
      warps.push_back(warp_with_grad(data.sources[s], out.depth, data.target_to_source[s], K, branch));
      images.push_back(warps.back().warped);
    }
    const PhotometricResidual res = photometric_residual(data.image, images, cfg.photometric);
    if (count_valid(res.valid) == 0) throw LossError("no pixel is visible in any source view");
    const LossValue lv = selfsup_nll(res.value, out.sigma, res.valid, cfg.loss);
    const int nc = data.image.channels();
    for (std::size_t i = 0; i < res.source.size(); ++i) {
      branch.add(res.source[i]);
      if (res.source[i] < 0) continue;
      const auto& wi = warps[static_cast<std::size_t>(res.source[i])].warped.image;
      const auto tgt = data.image.data();
      for (int c = 0; c < nc; ++c) branch.add_sign(tgt[i * nc + c] - wi.data()[i * nc + c]);
      branch.add(res.value[i] > 0.0 ? 1 : 0);
      branch.add(out.sigma[i] < cfg.loss.sigma_min ? 1 : 0);
    }
    for (std::size_t s = 0; s < warps.size(); ++s) {
      Map upstream(w, h, 0.0);
      bool any = false;
      for (std::size_t i = 0; i < upstream.size(); ++i) {
        if (res.source[i] == static_cast<int>(s) && res.value[i] > 0.0) {
          upstream[i] = lv.grad_depth[i];
          any = true;
        }
      }
      if (!any) continue;
      const std::vector<double> vjp =
          photometric_candidate_vjp(data.image, warps[s].warped.image, upstream, cfg.photometric);
      for (std::size_t i = 0; i < grad_depth.size(); ++i) {
        if (!warps[s].warped.valid[i]) continue;
        double g = 0.0;
        for (int c = 0; c < nc; ++c) g += vjp[i * nc + c] * warps[s].d_depth[i * nc + c];
        grad_depth[i] += g;
      }
    }
    grad_sigma = lv.grad_sigma;
    obj.value = lv.scalar;
    if (cfg.loss.lambda_u > 0.0) {
      const Map smooth = edge_aware_smoothness(out.depth, data.image);
      const Map sg = edge_aware_smoothness_mean_grad(out.depth, data.image);
      obj.value += cfg.loss.lambda_u * map_mean(smooth);
      for (std::size_t i = 0; i < grad_depth.size(); ++i) grad_depth[i] += cfg.loss.lambda_u * sg[i];
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (x + 1 < w) branch.add_sign(out.depth(x + 1, y) - out.depth(x, y));
          if (y + 1 < h) branch.add_sign(out.depth(x, y + 1) - out.depth(x, y));
        }
      }
    }
  } else {
    const Mask mask = effective_mask(data);
    LossValue lv;
    switch (regime) {
      case Regime::SupervisedGT:
      case Regime::SupervisedSfM:
        lv = supervised_nll(data.labels, out.depth, out.sigma, mask, cfg.loss);
        break;
      case Regime::PlainStudent:
        lv = plain_student_nll(data.labels, out.depth, out.sigma, mask, cfg.loss);
        break;
      default:
        lv = uncertain_teacher_nll(data.labels, data.teacher_sigma, out.depth, out.sigma, mask, cfg.loss);
        break;
    }
    likelihood_branch(lv, data.labels, out, mask, cfg.loss, branch);
    grad_depth = std::move(lv.grad_depth);
    grad_sigma = std::move(lv.grad_sigma);
    obj.value = lv.scalar;
  }

  const FieldGradient fg = backward(field, out, grad_depth, grad_sigma);
  obj.grad = fg.flat();
  const std::vector<double> theta = field.parameters();
  const PriorValue prior = prior_loss(theta, cfg.loss);
  obj.value += prior.value;
  for (std::size_t k = 0; k < obj.grad.size(); ++k) obj.grad[k] += prior.grad[k];
  obj.branch = branch.value();
  return obj;
}

TrainedMember train_member(Regime regime, const TrainBundle& data, const TrainConfig& cfg) {
  cfg.validate();
  return train_member(regime, data, cfg,
                      init_random(cfg.seed, cfg.grid_w, cfg.grid_h, cfg.depth_init_mm, cfg.jitter));
}

TrainedMember train_member(Regime regime, const TrainBundle& data, const TrainConfig& cfg,
                           DepthField field) {
  cfg.validate();
  data.validate(regime);
  field.validate();
  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  report.seed = field.seed;
  report.loss.reserve(static_cast<std::size_t>(cfg.steps) + 1);
  const std::size_t cells = field.cells();
  std::vector<double> theta = field.parameters();

  for (int step = 0; step <= cfg.steps; ++step) {
    Objective obj;
    try {
      obj = evaluate_objective(regime, data, field, cfg);
    } catch (const RasterError& e) {
      // Overflowing fields surface as non-finite rasters.
      if (step == 0) throw;
      throw NumericError(step, e.what());
    } catch (const LossError& e) {
      if (step == 0) throw;
      throw NumericError(step, e.what());
    }
    if (!std::isfinite(obj.value)) throw NumericError(step, "non-finite loss");
    report.loss.push_back(obj.value);
    if (step == cfg.steps) break;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      if (!std::isfinite(obj.grad[k])) throw NumericError(step, "non-finite gradient");
      theta[k] -= (k < cells ? cfg.learning_rate : cfg.sigma_learning_rate) * obj.grad[k];
    }
    for (double v : theta) {
      if (!std::isfinite(v)) throw NumericError(step, "non-finite parameter");
    }
    field.set_parameters(theta);
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(field), std::move(report)};
}

std::vector<TrainedMember> train_ensemble(Regime regime, const TrainBundle& data,
                                          const TrainConfig& cfg, int members,
                                          std::uint64_t base_seed, int jobs) {
  if (members < 1) throw TrainError("an ensemble needs at least one member");
  cfg.validate();
  data.validate(regime);
  std::vector<TrainedMember> out(static_cast<std::size_t>(members));
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    TrainConfig member_cfg = cfg;
    member_cfg.seed = base_seed + i;
    out[i] = train_member(regime, data, member_cfg);
  });
  return out;
}

AuditResult finite_diff_audit(Regime regime, const TrainBundle& data, const DepthField& field,
                              const TrainConfig& cfg, double step) {
  cfg.validate();
  data.validate(regime);
  field.validate();
  if (!(step > 0.0)) throw TrainError("finite-difference step must be positive");
  const Objective base = evaluate_objective(regime, data, field, cfg);
  double gmax = 0.0;
  for (double g : base.grad) gmax = std::max(gmax, std::abs(g));

  AuditResult result;
  const std::vector<double> theta = field.parameters();
  DepthField probe = field;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    std::vector<double> t = theta;
    t[k] = theta[k] + step;
    probe.set_parameters(t);
    const Objective plus = evaluate_objective(regime, data, probe, cfg);
    t[k] = theta[k] - step;
    probe.set_parameters(t);
    const Objective minus = evaluate_objective(regime, data, probe, cfg);
    if (plus.branch != base.branch || minus.branch != base.branch) {
      ++result.kinks;
      continue;
    }
    const double fd = (plus.value - minus.value) / (2.0 * step);
    const double g = base.grad[k];
    const double denom = std::max({std::abs(g), std::abs(fd), 1e-3 * gmax, 1e-300});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(g - fd) / denom);
    ++result.checked;
  }
  return result;
}

Pose perturb_pose(const Pose& pose, std::uint64_t seed, double rotation_sigma,
                  double translation_sigma) {
  if (!(rotation_sigma >= 0.0) || !(translation_sigma >= 0.0)) {
    throw TrainError("pose noise must be nonnegative");
  }
  Rng rng(derive_seed(seed, "pose-noise"));
  Vec3 rot{}, trans{};
  for (auto& v : rot) v = rotation_sigma * rng.normal();
  for (auto& v : trans) v = translation_sigma * rng.normal();
  return Pose::from_axis_angle(rot, trans) * pose;
}

}  // namespace udepth
