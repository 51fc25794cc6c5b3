#include "udepth/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "udepth/random.hpp"

namespace udepth {

namespace {

struct AxisWeights {
  std::vector<int> i0;
  std::vector<int> i1;
  std::vector<double> f;
};

// Corner-aligned mapping of n output samples onto a g-node axis.
AxisWeights axis_weights(int n, int g) {
  AxisWeights a;
  a.i0.resize(n);
  a.i1.resize(n);
  a.f.resize(n);
  for (int i = 0; i < n; ++i) {
    const double pos = (g == 1 || n == 1) ? 0.0 : double(i) * (g - 1) / double(n - 1);
    const int lo = std::min(static_cast<int>(std::floor(pos)), std::max(g - 2, 0));
    a.i0[i] = lo;
    a.i1[i] = std::min(lo + 1, g - 1);
    a.f[i] = pos - lo;
  }
  return a;
}

void check_output_size(const DepthField& field, int width, int height) {
  field.validate();
  if (width < field.grid_w || height < field.grid_h) {
    throw std::invalid_argument("output size must be at least the grid size");
  }
}

Map upsample(const std::vector<double>& grid, int gw, const AxisWeights& ax, const AxisWeights& ay) {
  const int w = static_cast<int>(ax.f.size()), h = static_cast<int>(ay.f.size());
  Map out(w, h);
  for (int y = 0; y < h; ++y) {
    const double fy = ay.f[y];
    const double* r0 = grid.data() + static_cast<std::size_t>(ay.i0[y]) * gw;
    const double* r1 = grid.data() + static_cast<std::size_t>(ay.i1[y]) * gw;
    for (int x = 0; x < w; ++x) {
      const double fx = ax.f[x];
      const double top = (1.0 - fx) * r0[ax.i0[x]] + fx * r0[ax.i1[x]];
      const double bot = (1.0 - fx) * r1[ax.i0[x]] + fx * r1[ax.i1[x]];
      out(x, y) = (1.0 - fy) * top + fy * bot;
    }
  }
  return out;
}

void scatter(std::vector<double>& grid, int gw, const AxisWeights& ax, const AxisWeights& ay,
             const Map& g) {
  for (int y = 0; y < g.height(); ++y) {
    const double fy = ay.f[y];
    double* r0 = grid.data() + static_cast<std::size_t>(ay.i0[y]) * gw;
    double* r1 = grid.data() + static_cast<std::size_t>(ay.i1[y]) * gw;
    for (int x = 0; x < g.width(); ++x) {
      const double v = g(x, y);
      if (v == 0.0) continue;
      const double fx = ax.f[x];
      r0[ax.i0[x]] += (1.0 - fy) * (1.0 - fx) * v;
      r0[ax.i1[x]] += (1.0 - fy) * fx * v;
      r1[ax.i0[x]] += fy * (1.0 - fx) * v;
      r1[ax.i1[x]] += fy * fx * v;
    }
  }
}

}  // namespace

std::vector<double> DepthField::parameters() const {
  std::vector<double> theta(log_depth);
  theta.insert(theta.end(), log_sigma.begin(), log_sigma.end());
  return theta;
}

void DepthField::set_parameters(const std::vector<double>& theta) {
  if (theta.size() != 2 * cells()) throw std::invalid_argument("parameter vector size mismatch");
  std::copy(theta.begin(), theta.begin() + cells(), log_depth.begin());
  std::copy(theta.begin() + cells(), theta.end(), log_sigma.begin());
}

void DepthField::validate() const {
  if (grid_w < 1 || grid_h < 1) throw std::invalid_argument("grid must be at least 1x1");
  if (log_depth.size() != cells() || log_sigma.size() != cells()) {
    throw std::invalid_argument("field grids do not match grid size");
  }
  for (double v : log_depth) {
    if (!std::isfinite(v)) throw std::invalid_argument("log_depth must be finite");
  }
  for (double v : log_sigma) {
    if (!std::isfinite(v)) throw std::invalid_argument("log_sigma must be finite");
  }
}

std::vector<double> FieldGradient::flat() const {
  std::vector<double> g(log_depth);
  g.insert(g.end(), log_sigma.begin(), log_sigma.end());
  return g;
}

DepthField init_random(std::uint64_t seed, int grid_w, int grid_h, double depth_init_mm,
                       double jitter) {
  if (!(depth_init_mm > 0.0)) throw std::invalid_argument("depth_init_mm must be positive");
  if (!(jitter >= 0.0)) throw std::invalid_argument("jitter must be nonnegative");
  DepthField f;
  f.grid_w = grid_w;
  f.grid_h = grid_h;
  f.seed = seed;
  const std::size_t n = static_cast<std::size_t>(std::max(grid_w, 0)) * std::max(grid_h, 0);
  f.log_depth.resize(n);
  f.log_sigma.resize(n);
  Rng rng(derive_seed(seed, "init"));
  const double base = std::log(depth_init_mm);
  for (auto& v : f.log_depth) v = jitter == 0.0 ? base : base + rng.uniform(-jitter, jitter);
  for (auto& v : f.log_sigma) v = jitter == 0.0 ? 0.0 : rng.uniform(-jitter, jitter);
  f.validate();
  return f;
}

FieldOutput forward(const DepthField& field, int width, int height) {
  check_output_size(field, width, height);
  const AxisWeights ax = axis_weights(width, field.grid_w);
  const AxisWeights ay = axis_weights(height, field.grid_h);
  Map ld = upsample(field.log_depth, field.grid_w, ax, ay);
  Map ls = upsample(field.log_sigma, field.grid_w, ax, ay);
  std::vector<double> d(ld.size()), s(ls.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = std::exp(ld[i]);
    s[i] = std::exp(ls[i]);
  }
  return {DepthMap(width, height, std::move(d)), UncMap(width, height, UncKind::Std, std::move(s))};
}

FieldGradient backward(const DepthField& field, const Map& grad_depth, const Map& grad_sigma,
                       int width, int height) {
  return backward(field, forward(field, width, height), grad_depth, grad_sigma);
}

FieldGradient backward(const DepthField& field, const FieldOutput& out, const Map& grad_depth,
                       const Map& grad_sigma) {
  const int width = out.depth.width(), height = out.depth.height();
  check_output_size(field, width, height);
  if (!grad_depth.same_shape(width, height) || !grad_sigma.same_shape(width, height)) {
    throw RasterError("gradient maps must match the output size");
  }
  Map gd(width, height), gs(width, height);
  for (std::size_t i = 0; i < gd.size(); ++i) {
    gd[i] = grad_depth[i] * out.depth[i];
    gs[i] = grad_sigma[i] * out.sigma[i];
  }
  const AxisWeights ax = axis_weights(width, field.grid_w);
  const AxisWeights ay = axis_weights(height, field.grid_h);
  FieldGradient g{std::vector<double>(field.cells(), 0.0), std::vector<double>(field.cells(), 0.0)};
  scatter(g.log_depth, field.grid_w, ax, ay, gd);
  scatter(g.log_sigma, field.grid_w, ax, ay, gs);
  return g;
}

}  // namespace udepth
