#include "udepth/losses.hpp"

#include <algorithm>
#include <cmath>

namespace udepth {

namespace {

// Neumaier-compensated sum; keeps reductions insensitive to pixel order.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

void require_shape(const Grid<double>& ref, const Grid<double>& other, const char* what) {
  if (!ref.same_shape(other)) throw RasterError(std::string(what) + " dimensions differ");
}

// Shared kernel for the L1-over-scale losses. With no teacher scale the
// effective scale is max(sigma, sigma_min); with one it is
// sqrt(sigma_T^2 + max(sigma, sigma_min)^2).
LossValue scaled_l1(const Grid<double>& labels, const Grid<double>& prediction,
                    const UncMap& sigma, const UncMap* teacher_sigma, const Mask& mask,
                    const LossConfig& cfg) {
  cfg.validate();
  require_shape(prediction, labels, "label");
  require_shape(prediction, sigma, "sigma");
  if (!prediction.same_shape(mask)) throw RasterError("mask dimensions differ");
  if (sigma.kind() != UncKind::Std) throw LossError("loss expects a standard-deviation map");
  if (teacher_sigma) {
    require_shape(prediction, *teacher_sigma, "teacher sigma");
    if (teacher_sigma->kind() != UncKind::Std) {
      throw LossError("teacher uncertainty must be a standard-deviation map");
    }
  }
  const std::size_t n = count_valid(mask);
  if (n == 0) throw LossError("no valid pixels");

  const int w = prediction.width(), h = prediction.height();
  LossValue out{0.0, Map(w, h, 0.0), Map(w, h, 0.0), Map(w, h, 0.0), n};
  const double inv_n = 1.0 / double(n);
  CompensatedSum total;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    if (!mask[i]) continue;
    const double raw = sigma[i];
    const bool clamped = raw < cfg.sigma_min;
    const double s = clamped ? cfg.sigma_min : raw;
    double scale = s;
    if (teacher_sigma) {
      const double t = (*teacher_sigma)[i];
      scale = std::sqrt(t * t + s * s);
    }
    const double diff = labels[i] - prediction[i];
    const double r = std::abs(diff);
    const double term = r / scale + std::log(scale);
    out.per_pixel[i] = term;
    total.add(term);

    const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    out.grad_depth[i] = -sgn / scale * inv_n;
    if (!clamped) {
      const double d_scale = -r / (scale * scale) + 1.0 / scale;
      const double chain = teacher_sigma ? s / scale : 1.0;
      out.grad_sigma[i] = d_scale * chain * inv_n;
    }
  }
  out.scalar = total.value() * inv_n;
  return out;
}

}  // namespace

void LossConfig::validate() const {
  if (!(sigma_min > 0.0)) throw std::invalid_argument("sigma_min must be positive");
  if (!(lambda_u >= 0.0)) throw std::invalid_argument("lambda_u must be nonnegative");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be nonnegative");
}

LossValue supervised_nll(const DepthMap& labels, const DepthMap& prediction, const UncMap& sigma,
                         const Mask& mask, const LossConfig& cfg) {
  return scaled_l1(labels, prediction, sigma, nullptr, mask, cfg);
}

LossValue plain_student_nll(const DepthMap& teacher_depth, const DepthMap& prediction,
                            const UncMap& sigma, const Mask& mask, const LossConfig& cfg) {
  return scaled_l1(teacher_depth, prediction, sigma, nullptr, mask, cfg);
}

LossValue uncertain_teacher_nll(const DepthMap& teacher_depth, const UncMap& teacher_sigma,
                                const DepthMap& prediction, const UncMap& sigma,
                                const Mask& mask, const LossConfig& cfg) {
  return scaled_l1(teacher_depth, prediction, sigma, &teacher_sigma, mask, cfg);
}

LossValue selfsup_nll(const Map& residual, const UncMap& u, const Mask& valid,
                      const LossConfig& cfg) {
  cfg.validate();
  require_shape(residual, u, "uncertainty");
  if (!residual.same_shape(valid)) throw RasterError("mask dimensions differ");
  if (u.kind() != UncKind::Std) throw LossError("loss expects a standard-deviation map");
  const std::size_t n = count_valid(valid);
  if (n == 0) throw LossError("no valid pixels");

  const int w = residual.width(), h = residual.height();
  LossValue out{0.0, Map(w, h, 0.0), Map(w, h, 0.0), Map(w, h, 0.0), n};
  const double inv_n = 1.0 / double(n);
  CompensatedSum total;
  for (std::size_t i = 0; i < residual.size(); ++i) {
    if (!valid[i]) continue;
    const bool clamped = u[i] < cfg.sigma_min;
    const double s = clamped ? cfg.sigma_min : u[i];
    const double fp = residual[i];
    const double term = fp / s + std::log(s);
    out.per_pixel[i] = term;
    total.add(term);
    out.grad_depth[i] = inv_n / s;
    if (!clamped) out.grad_sigma[i] = (-fp / (s * s) + 1.0 / s) * inv_n;
  }
  out.scalar = total.value() * inv_n;
  return out;
}

PriorValue prior_loss(std::span<const double> theta, const LossConfig& cfg) {
  cfg.validate();
  PriorValue out;
  out.grad.resize(theta.size());
  CompensatedSum sq;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    sq.add(theta[i] * theta[i]);
    out.grad[i] = 2.0 * cfg.weight_decay * theta[i];
  }
  out.value = cfg.weight_decay * sq.value();
  return out;
}

}  // namespace udepth
