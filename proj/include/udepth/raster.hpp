#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace udepth {

/// Raised when a raster is built from inconsistent or non-finite data.
class RasterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major single-channel grid. Pixel (x, y) lives at index y*width + x
/// and its center sits at integer coordinates.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }
  Grid(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height) {
      throw RasterError("grid data length does not match " + std::to_string(width) + "x" +
                        std::to_string(height));
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(int w, int h) const { return w == width_ && h == height_; }
  template <class U>
  bool same_shape(const Grid<U>& other) const {
    return same_shape(other.width(), other.height());
  }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<const T> data() const { return data_; }
  std::span<T> mutable_data() { return data_; }
  const std::vector<T>& values() const { return data_; }

  bool operator==(const Grid&) const = default;

 protected:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }
  static void check_dims(int w, int h) {
    if (w < 0 || h < 0) throw RasterError("negative raster dimensions");
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Per-pixel validity. Nonzero means valid.
using Mask = Grid<std::uint8_t>;

/// Unconstrained per-pixel scalar field (residuals, SSIM values, gradients).
using Map = Grid<double>;

Mask full_mask(int width, int height);
std::size_t count_valid(const Mask& mask);
Mask mask_and(const Mask& a, const Mask& b);

/// Color or gray observation. Values are clamped to [0, 1] on construction.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);
  Image(int width, int height, int channels, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  double operator()(int x, int y, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  /// Writes with clamping so the [0,1] invariant survives mutation.
  void set(int x, int y, int c, double v);

  std::span<const double> data() const { return data_; }

  /// Channel mean per pixel.
  Map gray() const;

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Per-pixel depth in mm. Entries are finite and nonnegative; zero marks a
/// pixel with no depth (only meaningful together with a Mask).
class DepthMap : public Grid<double> {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, double fill = 0.0);
  DepthMap(int width, int height, std::vector<double> data);
};

enum class UncKind { Std, Variance };

/// Per-pixel uncertainty, tagged as standard deviation or variance.
class UncMap : public Grid<double> {
 public:
  UncMap() = default;
  UncMap(int width, int height, UncKind kind, double fill = 0.0);
  UncMap(int width, int height, UncKind kind, std::vector<double> data);

  UncKind kind() const { return kind_; }
  UncMap to_std() const;
  UncMap to_variance() const;

  bool operator==(const UncMap&) const = default;

 private:
  UncKind kind_ = UncKind::Std;
};

struct Sample {
  std::vector<double> color;
  bool valid = false;
};

/// Bilinear interpolation at continuous pixel coordinates. The sample is
/// invalid if the 2x2 footprint leaves [0, w-1] x [0, h-1].
Sample bilinear_sample(const Image& img, double x, double y);

/// Bilinear sample plus its partial derivatives with respect to x and y,
/// taken from the cell that contains the point (one-sided on cell borders).
struct SampleGrad {
  std::vector<double> color;
  std::vector<double> d_dx;
  std::vector<double> d_dy;
  bool valid = false;
};
SampleGrad bilinear_sample_grad(const Image& img, double x, double y);

/// Same footprint rule for a scalar grid; returns false when out of bounds.
bool bilinear_sample(const Map& map, double x, double y, double& out);

}  // namespace udepth
