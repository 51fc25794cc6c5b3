#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "udepth/raster.hpp"

namespace udepth {

struct MemberPrediction {
  std::uint64_t seed = 0;
  DepthMap depth;
  UncMap sigma;  // aleatoric standard deviation
};

/// Moment-matched ensemble: mean depth, mean aleatoric variance, population
/// variance of member depths, and their sum.
struct EnsembleOutput {
  DepthMap depth;
  UncMap var_a;
  UncMap var_e;
  UncMap var_t;
  std::vector<std::uint64_t> seeds;  // member seeds in reduction order

  std::size_t members() const { return seeds.size(); }
};

/// Reductions run in ascending seed order, so the result is bitwise
/// independent of the order members are passed in.
EnsembleOutput fuse(std::span<const MemberPrediction> members);

struct DepthOnlyMember {
  std::uint64_t seed = 0;
  DepthMap depth;
};

/// Fusion for models without a depth aleatoric term: var_a is zero and the
/// total variance equals the epistemic one.
EnsembleOutput selfsup_fuse(std::span<const DepthOnlyMember> members);

}  // namespace udepth
