#include "udepth/pfm.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace udepth {

namespace {

constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 28;

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PfmError(PfmErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& bytes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PfmError(PfmErrorKind::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw PfmError(PfmErrorKind::Io, "write failed for " + path.string());
}

// Reads one whitespace-delimited header token and consumes exactly one
// trailing whitespace byte.
std::string_view next_token(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  if (start == pos || pos >= bytes.size()) {
    throw PfmError(PfmErrorKind::MalformedHeader, "malformed header");
  }
  std::string_view tok(bytes.data() + start, pos - start);
  ++pos;
  return tok;
}

int parse_dim(std::string_view tok) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec == std::errc::result_out_of_range) {
    throw PfmError(PfmErrorKind::DimensionOverflow, "dimension overflow");
  }
  if (ec != std::errc() || ptr != tok.data() + tok.size() || v <= 0) {
    throw PfmError(PfmErrorKind::MalformedHeader, "malformed header: bad dimension");
  }
  if (static_cast<std::uint64_t>(v) > kMaxElements) {
    throw PfmError(PfmErrorKind::DimensionOverflow, "dimension overflow");
  }
  return static_cast<int>(v);
}

std::vector<double> widen(const std::vector<float>& v) { return {v.begin(), v.end()}; }

FloatRaster narrow(int w, int h, int c, std::span<const double> data) {
  FloatRaster r{w, h, c, {}};
  r.data.reserve(data.size());
  for (double v : data) {
    if (!std::isfinite(v)) throw PfmError(PfmErrorKind::NonFinite, "non-finite value");
    r.data.push_back(static_cast<float>(v));
  }
  return r;
}

}  // namespace

FloatRaster decode_pfm(const std::string& bytes) {
  std::size_t pos = 0;
  const std::string_view magic = next_token(bytes, pos);
  FloatRaster r;
  if (magic == "PF") {
    r.channels = 3;
  } else if (magic == "Pf") {
    r.channels = 1;
  } else {
    throw PfmError(PfmErrorKind::MalformedHeader, "malformed header: bad magic");
  }
  r.width = parse_dim(next_token(bytes, pos));
  r.height = parse_dim(next_token(bytes, pos));
  const std::string_view scale_tok = next_token(bytes, pos);
  double scale = 0.0;
  try {
    scale = std::stod(std::string(scale_tok));
  } catch (const std::exception&) {
    throw PfmError(PfmErrorKind::MalformedHeader, "malformed header: bad scale");
  }
  if (scale == 0.0 || !std::isfinite(scale)) {
    throw PfmError(PfmErrorKind::MalformedHeader, "malformed header: bad scale");
  }
  const bool little = scale < 0.0;

  const std::uint64_t count =
      static_cast<std::uint64_t>(r.width) * r.height * static_cast<std::uint64_t>(r.channels);
  if (count > kMaxElements) throw PfmError(PfmErrorKind::DimensionOverflow, "dimension overflow");
  if (bytes.size() - pos < count * 4) {
    throw PfmError(PfmErrorKind::UnexpectedEnd, "unexpected end of data");
  }

  r.data.resize(count);
  const std::size_t row = static_cast<std::size_t>(r.width) * r.channels;
  const bool swap = little != (std::endian::native == std::endian::little);
  for (int y = 0; y < r.height; ++y) {
    // PFM stores rows bottom to top.
    const std::size_t src = pos + static_cast<std::size_t>(r.height - 1 - y) * row * 4;
    for (std::size_t i = 0; i < row; ++i) {
      std::uint32_t word;
      std::memcpy(&word, bytes.data() + src + i * 4, 4);
      if (swap) word = __builtin_bswap32(word);
      const float v = std::bit_cast<float>(word);
      if (!std::isfinite(v)) throw PfmError(PfmErrorKind::NonFinite, "non-finite value in payload");
      r.data[static_cast<std::size_t>(y) * row + i] = v;
    }
  }
  return r;
}

std::string encode_pfm(const FloatRaster& r) {
  if (r.channels != 1 && r.channels != 3) {
    throw PfmError(PfmErrorKind::MalformedHeader, "PFM supports 1 or 3 channels");
  }
  if (r.data.size() != static_cast<std::size_t>(r.width) * r.height * r.channels) {
    throw PfmError(PfmErrorKind::MalformedHeader, "raster length does not match dimensions");
  }
  std::string out = (r.channels == 3 ? "PF\n" : "Pf\n") + std::to_string(r.width) + " " +
                    std::to_string(r.height) + "\n-1.0\n";
  const std::size_t header = out.size();
  out.resize(header + r.data.size() * 4);
  const std::size_t row = static_cast<std::size_t>(r.width) * r.channels;
  for (int y = 0; y < r.height; ++y) {
    const std::size_t dst = header + static_cast<std::size_t>(r.height - 1 - y) * row * 4;
    for (std::size_t i = 0; i < row; ++i) {
      const float v = r.data[static_cast<std::size_t>(y) * row + i];
      if (!std::isfinite(v)) throw PfmError(PfmErrorKind::NonFinite, "non-finite value");
      std::uint32_t word = std::bit_cast<std::uint32_t>(v);
      if constexpr (std::endian::native != std::endian::little) word = __builtin_bswap32(word);
      std::memcpy(out.data() + dst + i * 4, &word, 4);
    }
  }
  return out;
}

FloatRaster read_pfm_raw(const std::filesystem::path& path) { return decode_pfm(slurp(path)); }

void write_pfm_raw(const FloatRaster& raster, const std::filesystem::path& path) {
  spit(encode_pfm(raster), path);
}

std::variant<Image, DepthMap> read_pfm(const std::filesystem::path& path) {
  FloatRaster r = read_pfm_raw(path);
  if (r.channels == 3) return Image(r.width, r.height, 3, widen(r.data));
  return DepthMap(r.width, r.height, widen(r.data));
}

DepthMap read_depth_pfm(const std::filesystem::path& path) {
  FloatRaster r = read_pfm_raw(path);
  if (r.channels != 1) throw PfmError(PfmErrorKind::MalformedHeader, "expected single-channel Pf map");
  return DepthMap(r.width, r.height, widen(r.data));
}

Map read_map_pfm(const std::filesystem::path& path) {
  FloatRaster r = read_pfm_raw(path);
  if (r.channels != 1) throw PfmError(PfmErrorKind::MalformedHeader, "expected single-channel Pf map");
  return Map(r.width, r.height, widen(r.data));
}

UncMap read_unc_pfm(const std::filesystem::path& path, UncKind kind) {
  FloatRaster r = read_pfm_raw(path);
  if (r.channels != 1) throw PfmError(PfmErrorKind::MalformedHeader, "expected single-channel Pf map");
  return UncMap(r.width, r.height, kind, widen(r.data));
}

Image read_image_pfm(const std::filesystem::path& path) {
  FloatRaster r = read_pfm_raw(path);
  return Image(r.width, r.height, r.channels, widen(r.data));
}

Mask read_mask_pfm(const std::filesystem::path& path) {
  Map m = read_map_pfm(path);
  Mask out(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] > 0.5 ? 1 : 0;
  return out;
}

void write_pfm(const Grid<double>& map, const std::filesystem::path& path) {
  write_pfm_raw(narrow(map.width(), map.height(), 1, map.data()), path);
}

void write_pfm(const Image& image, const std::filesystem::path& path) {
  if (image.channels() == 3) {
    write_pfm_raw(narrow(image.width(), image.height(), 3, image.data()), path);
  } else {
    write_pfm(image.gray(), path);
  }
}

void write_pfm(const Mask& mask, const std::filesystem::path& path) {
  Map m(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) m[i] = mask[i] ? 1.0 : 0.0;
  write_pfm(m, path);
}

void write_ppm(const Image& image, const std::filesystem::path& path) {
  std::string out = "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) +
                    "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(image.width()) * image.height() * 3);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        const int src = image.channels() == 3 ? c : 0;
        out.push_back(static_cast<char>(std::lround(image(x, y, src) * 255.0)));
      }
    }
  }
  spit(out, path);
}

Image read_ppm(const std::filesystem::path& path) {
  const std::string bytes = slurp(path);
  std::size_t pos = 0;
  if (next_token(bytes, pos) != "P6") {
    throw PfmError(PfmErrorKind::MalformedHeader, "malformed header: expected P6");
  }
  const int w = parse_dim(next_token(bytes, pos));
  const int h = parse_dim(next_token(bytes, pos));
  if (next_token(bytes, pos) != "255") {
    throw PfmError(PfmErrorKind::MalformedHeader, "malformed header: only maxval 255 supported");
  }
  const std::size_t n = static_cast<std::size_t>(w) * h * 3;
  if (bytes.size() - pos < n) throw PfmError(PfmErrorKind::UnexpectedEnd, "unexpected end of data");
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = static_cast<unsigned char>(bytes[pos + i]) / 255.0;
  }
  return Image(w, h, 3, std::move(data));
}

}  // namespace udepth
