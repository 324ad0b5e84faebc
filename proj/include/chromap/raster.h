#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "chromap/image.h"

namespace chromap {

enum class RasterErrc {
  kMissingFile,
  kMalformedContainer,
  kUnsupportedBitDepth,
  kUnwritablePath,
};

class RasterError : public std::runtime_error {
 public:
  RasterError(RasterErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  RasterErrc code() const { return code_; }

 private:
  RasterErrc code_;
};

struct RasterSize {
  int height = 0;
  int width = 0;
};

// 8-bit PNG I/O. Loaded channels are c / 255; alpha is dropped. Palette and
// grayscale files are expanded to RGB. 16-bit files are rejected.
Image load_raster(const std::filesystem::path& path);
Image decode_png(std::span<const std::uint8_t> bytes);

// Reads only the IHDR chunk. Throws kMalformedContainer if the signature or
// header is invalid.
RasterSize peek_png_size(std::span<const std::uint8_t> bytes);

// Writes 8-bit RGB with round-half-away-from-zero quantization of the
// clamped channel values.
void save_raster(const Image& image, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const Image& image);

// The 8-bit code save_raster writes for a channel value.
std::uint8_t quantize_channel(float v);

}  // namespace chromap
