#include "udepth/raster.hpp"

#include <algorithm>
#include <cmath>

namespace udepth {

namespace {

void require_finite(std::span<const double> data, const char* what) {
  for (double v : data) {
    if (!std::isfinite(v)) throw RasterError(std::string(what) + " contains non-finite values");
  }
}

struct Footprint {
  int x0, y0, x1, y1;
  double fx, fy;
};

// Cell lookup shared by every bilinear variant. Points exactly on the last
// row/column use the previous cell with weight 1 on the far node.
bool footprint(int w, int h, double x, double y, Footprint& f) {
  if (!(x >= 0.0 && y >= 0.0 && x <= w - 1 && y <= h - 1)) return false;
  f.x0 = std::min(static_cast<int>(std::floor(x)), std::max(w - 2, 0));
  f.y0 = std::min(static_cast<int>(std::floor(y)), std::max(h - 2, 0));
  f.x1 = std::min(f.x0 + 1, w - 1);
  f.y1 = std::min(f.y0 + 1, h - 1);
  f.fx = x - f.x0;
  f.fy = y - f.y0;
  return true;
}

}  // namespace

Mask full_mask(int width, int height) { return Mask(width, height, 1); }

std::size_t count_valid(const Mask& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.data().begin(), mask.data().end(), [](auto v) { return v != 0; }));
}

Mask mask_and(const Mask& a, const Mask& b) {
  if (!a.same_shape(b)) throw RasterError("mask dimensions differ");
  Mask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] && b[i]) ? 1 : 0;
  return out;
}

Image::Image(int width, int height, int channels, double fill)
    : Image(width, height, channels,
            std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                    std::max(height, 0) * std::max(channels, 0),
                                fill)) {}

Image::Image(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width < 0 || height < 0) throw RasterError("negative image dimensions");
  if (channels != 1 && channels != 3) throw RasterError("image must have 1 or 3 channels");
  if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw RasterError("image data length does not match dimensions");
  }
  require_finite(data_, "image");
  for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
}

void Image::set(int x, int y, int c, double v) {
  if (!std::isfinite(v)) throw RasterError("image value must be finite");
  data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c] = std::clamp(v, 0.0, 1.0);
}

Map Image::gray() const {
  Map out(width_, height_);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      double s = 0.0;
      for (int c = 0; c < channels_; ++c) s += (*this)(x, y, c);
      out(x, y) = s / channels_;
    }
  }
  return out;
}

DepthMap::DepthMap(int width, int height, double fill) : Grid<double>(width, height, fill) {
  if (!std::isfinite(fill) || fill < 0.0) throw RasterError("depth fill must be finite and >= 0");
}

DepthMap::DepthMap(int width, int height, std::vector<double> data)
    : Grid<double>(width, height, std::move(data)) {
  require_finite(data_, "depth map");
  for (double v : data_) {
    if (v < 0.0) throw RasterError("depth map contains negative values");
  }
}

UncMap::UncMap(int width, int height, UncKind kind, double fill)
    : Grid<double>(width, height, fill), kind_(kind) {
  if (!std::isfinite(fill) || fill < 0.0) throw RasterError("uncertainty fill must be finite and >= 0");
}

UncMap::UncMap(int width, int height, UncKind kind, std::vector<double> data)
    : Grid<double>(width, height, std::move(data)), kind_(kind) {
  require_finite(data_, "uncertainty map");
  for (double v : data_) {
    if (v < 0.0) throw RasterError("uncertainty map contains negative values");
  }
}

UncMap UncMap::to_std() const {
  if (kind_ == UncKind::Std) return *this;
  std::vector<double> out(data_.size());
  std::transform(data_.begin(), data_.end(), out.begin(), [](double v) { return std::sqrt(v); });
  return UncMap(width_, height_, UncKind::Std, std::move(out));
}

UncMap UncMap::to_variance() const {
  if (kind_ == UncKind::Variance) return *this;
  std::vector<double> out(data_.size());
  std::transform(data_.begin(), data_.end(), out.begin(), [](double v) { return v * v; });
  return UncMap(width_, height_, UncKind::Variance, std::move(out));
}

Sample bilinear_sample(const Image& img, double x, double y) {
  Sample s;
  Footprint f{};
  if (img.empty() || !footprint(img.width(), img.height(), x, y, f)) return s;
  s.valid = true;
  s.color.resize(img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    const double top = (1.0 - f.fx) * img(f.x0, f.y0, c) + f.fx * img(f.x1, f.y0, c);
    const double bot = (1.0 - f.fx) * img(f.x0, f.y1, c) + f.fx * img(f.x1, f.y1, c);
    s.color[c] = (1.0 - f.fy) * top + f.fy * bot;
  }
  return s;
}

SampleGrad bilinear_sample_grad(const Image& img, double x, double y) {
  SampleGrad s;
  Footprint f{};
  if (img.empty() || !footprint(img.width(), img.height(), x, y, f)) return s;
  s.valid = true;
  const int nc = img.channels();
  s.color.resize(nc);
  s.d_dx.resize(nc);
  s.d_dy.resize(nc);
  // Degenerate 1-pixel axes have no slope along that axis.
  const double sx = f.x1 == f.x0 ? 0.0 : 1.0;
  const double sy = f.y1 == f.y0 ? 0.0 : 1.0;
  for (int c = 0; c < nc; ++c) {
    const double v00 = img(f.x0, f.y0, c), v10 = img(f.x1, f.y0, c);
    const double v01 = img(f.x0, f.y1, c), v11 = img(f.x1, f.y1, c);
    const double top = (1.0 - f.fx) * v00 + f.fx * v10;
    const double bot = (1.0 - f.fx) * v01 + f.fx * v11;
    s.color[c] = (1.0 - f.fy) * top + f.fy * bot;
    s.d_dx[c] = sx * ((1.0 - f.fy) * (v10 - v00) + f.fy * (v11 - v01));
    s.d_dy[c] = sy * (bot - top);
  }
  return s;
}

bool bilinear_sample(const Map& map, double x, double y, double& out) {
  Footprint f{};
  if (map.empty() || !footprint(map.width(), map.height(), x, y, f)) return false;
  const double top = (1.0 - f.fx) * map(f.x0, f.y0) + f.fx * map(f.x1, f.y0);
  const double bot = (1.0 - f.fx) * map(f.x0, f.y1) + f.fx * map(f.x1, f.y1);
  out = (1.0 - f.fy) * top + f.fy * bot;
  return true;
}

}  // namespace udepth
