#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "udepth/raster.hpp"

namespace udepth {

class LossError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct LossConfig {
  double sigma_min = 1e-3;    // floor applied to every predicted scale
  double lambda_u = 1e-3;     // edge-aware smoothness weight
  double weight_decay = 1e-6; // coefficient of ||theta||^2

  void validate() const;
};

/// Reduced loss plus per-pixel gradients. `grad_depth` holds dL/d(prediction)
/// (dL/dF_p for the self-supervised loss) and `grad_sigma` holds dL/d(sigma)
/// for the raw, unclamped scale; both are zero on masked pixels and already
/// include the 1/|valid| factor of the mean.
struct LossValue {
  double scalar = 0.0;
  Map per_pixel;
  Map grad_depth;
  Map grad_sigma;
  std::size_t valid_count = 0;
};

/// Laplace-style NLL |d - d_hat| / sigma + log sigma averaged over the mask.
LossValue supervised_nll(const DepthMap& labels, const DepthMap& prediction, const UncMap& sigma,
                         const Mask& mask, const LossConfig& cfg);

/// Photometric pseudo-likelihood F_p / u + log u averaged over valid pixels.
LossValue selfsup_nll(const Map& residual, const UncMap& u, const Mask& valid,
                      const LossConfig& cfg);

/// Student loss with scale sqrt(sigma_T^2 + max(sigma_a, sigma_min)^2).
/// The teacher scale is a constant; grad_sigma is with respect to sigma_a.
LossValue uncertain_teacher_nll(const DepthMap& teacher_depth, const UncMap& teacher_sigma,
                                const DepthMap& prediction, const UncMap& sigma,
                                const Mask& mask, const LossConfig& cfg);

/// Baseline distillation: supervised_nll with the teacher depth as label.
LossValue plain_student_nll(const DepthMap& teacher_depth, const DepthMap& prediction,
                            const UncMap& sigma, const Mask& mask, const LossConfig& cfg);

struct PriorValue {
  double value = 0.0;
  std::vector<double> grad;
};

/// weight_decay * ||theta||^2 and its gradient.
PriorValue prior_loss(std::span<const double> theta, const LossConfig& cfg);

}  // namespace udepth
