#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "udepth/raster.hpp"

namespace udepth {

enum class PfmErrorKind { Io, MalformedHeader, DimensionOverflow, NonFinite, UnexpectedEnd };

class PfmError : public std::runtime_error {
 public:
  PfmError(PfmErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  PfmErrorKind kind() const { return kind_; }

 private:
  PfmErrorKind kind_;
};

/// Decoded float payload, rows top to bottom, channels interleaved.
struct FloatRaster {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data;
};

FloatRaster decode_pfm(const std::string& bytes);
std::string encode_pfm(const FloatRaster& raster);

FloatRaster read_pfm_raw(const std::filesystem::path& path);
void write_pfm_raw(const FloatRaster& raster, const std::filesystem::path& path);

/// "PF" files decode to a 3-channel Image, "Pf" files to a single-channel map.
std::variant<Image, DepthMap> read_pfm(const std::filesystem::path& path);

DepthMap read_depth_pfm(const std::filesystem::path& path);
Map read_map_pfm(const std::filesystem::path& path);
UncMap read_unc_pfm(const std::filesystem::path& path, UncKind kind);
Image read_image_pfm(const std::filesystem::path& path);
Mask read_mask_pfm(const std::filesystem::path& path);

void write_pfm(const Grid<double>& map, const std::filesystem::path& path);
void write_pfm(const Image& image, const std::filesystem::path& path);
void write_pfm(const Mask& mask, const std::filesystem::path& path);

/// Binary P6 preview with round(v * 255) quantization; gray images are
/// replicated to three channels.
void write_ppm(const Image& image, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

}  // namespace udepth
