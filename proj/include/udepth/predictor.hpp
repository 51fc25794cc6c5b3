#pragma once

#include <cstdint>
#include <vector>

#include "udepth/raster.hpp"

namespace udepth {

/// Learnable coarse field standing in for a depth network: log-depth and
/// log-scale values on a grid_w x grid_h lattice, bilinearly upsampled
/// (corner-aligned) to image resolution and exponentiated.
struct DepthField {
  int grid_w = 0;
  int grid_h = 0;
  std::vector<double> log_depth;
  std::vector<double> log_sigma;
  std::uint64_t seed = 0;

  std::size_t cells() const { return static_cast<std::size_t>(grid_w) * grid_h; }
  /// Flattened parameter vector [log_depth..., log_sigma...].
  std::vector<double> parameters() const;
  void set_parameters(const std::vector<double>& theta);
  void validate() const;

  bool operator==(const DepthField&) const = default;
};

/// Same layout as DepthField::parameters().
struct FieldGradient {
  std::vector<double> log_depth;
  std::vector<double> log_sigma;

  std::vector<double> flat() const;
};

DepthField init_random(std::uint64_t seed, int grid_w, int grid_h, double depth_init_mm,
                       double jitter);

struct FieldOutput {
  DepthMap depth;
  UncMap sigma;  // standard deviation
};

FieldOutput forward(const DepthField& field, int width, int height);

/// Chain rule through exp and the upsampling weights.
FieldGradient backward(const DepthField& field, const Map& grad_depth, const Map& grad_sigma,
                       int width, int height);
/// Same, reusing an already computed forward pass of `field`.
FieldGradient backward(const DepthField& field, const FieldOutput& out, const Map& grad_depth,
                       const Map& grad_sigma);

}  // namespace udepth
