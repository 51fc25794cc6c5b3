#include "udepth/ensemble.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace udepth {

namespace {

EnsembleOutput fuse_impl(const std::vector<const DepthMap*>& depths,
                         const std::vector<const UncMap*>& sigmas,
                         std::vector<std::uint64_t> seeds) {
  const int w = depths.front()->width(), h = depths.front()->height();
  for (std::size_t m = 0; m < depths.size(); ++m) {
    if (!depths[m]->same_shape(w, h) || (sigmas[m] && !sigmas[m]->same_shape(w, h))) {
      throw RasterError("ensemble member dimensions differ");
    }
  }
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const double inv_m = 1.0 / double(depths.size());
  std::vector<double> mean(n), va(n), ve(n), vt(n);
  auto var_of = [&](std::size_t m, std::size_t i) {
    const double s = (*sigmas[m])[i];
    return sigmas[m]->kind() == UncKind::Std ? s * s : s;
  };
  // Means are accumulated as offsets from the first member so identical
  // members reproduce that member bit for bit and yield zero spread.
  for (std::size_t i = 0; i < n; ++i) {
    const double d0 = (*depths[0])[i];
    const double a0 = sigmas[0] ? var_of(0, i) : 0.0;
    double sd = 0.0, sa = 0.0;
    for (std::size_t m = 1; m < depths.size(); ++m) {
      sd += (*depths[m])[i] - d0;
      if (sigmas[m]) sa += var_of(m, i) - a0;
    }
    const double mu = d0 + sd * inv_m;
    double se = 0.0;
    for (std::size_t m = 0; m < depths.size(); ++m) {
      const double dev = mu - (*depths[m])[i];
      se += dev * dev;
    }
    mean[i] = mu;
    va[i] = a0 + sa * inv_m;
    ve[i] = se * inv_m;
    vt[i] = va[i] + ve[i];
  }
  return {DepthMap(w, h, std::move(mean)), UncMap(w, h, UncKind::Variance, std::move(va)),
          UncMap(w, h, UncKind::Variance, std::move(ve)),
          UncMap(w, h, UncKind::Variance, std::move(vt)), std::move(seeds)};
}

template <class Member>
std::vector<std::size_t> seed_order(std::span<const Member> members) {
  std::vector<std::size_t> order(members.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return members[a].seed < members[b].seed; });
  return order;
}

}  // namespace

EnsembleOutput fuse(std::span<const MemberPrediction> members) {
  if (members.empty()) throw std::invalid_argument("ensemble needs at least one member");
  std::vector<const DepthMap*> depths;
  std::vector<const UncMap*> sigmas;
  std::vector<std::uint64_t> seeds;
  for (std::size_t idx : seed_order(members)) {
    depths.push_back(&members[idx].depth);
    sigmas.push_back(&members[idx].sigma);
    seeds.push_back(members[idx].seed);
  }
  return fuse_impl(depths, sigmas, std::move(seeds));
}

EnsembleOutput selfsup_fuse(std::span<const DepthOnlyMember> members) {
  if (members.empty()) throw std::invalid_argument("ensemble needs at least one member");
  std::vector<const DepthMap*> depths;
  std::vector<const UncMap*> sigmas;
  std::vector<std::uint64_t> seeds;
  for (std::size_t idx : seed_order(members)) {
    depths.push_back(&members[idx].depth);
    sigmas.push_back(nullptr);
    seeds.push_back(members[idx].seed);
  }
  return fuse_impl(depths, sigmas, std::move(seeds));
}

}  // namespace udepth
