#include "chromap/raster.h"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace chromap {

namespace {

constexpr std::array<std::uint8_t, 8> kPngSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

// Frees libpng's simplified-API state on every exit path.
struct PngImageGuard {
  png_image* image;
  ~PngImageGuard() { png_image_free(image); }
};

}  // namespace

std::uint8_t quantize_channel(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  // std::lround rounds halfway cases away from zero.
  return static_cast<std::uint8_t>(std::lround(static_cast<double>(c) * 255.0));
}

RasterSize peek_png_size(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 24 || !std::equal(kPngSignature.begin(), kPngSignature.end(), bytes.begin())) {
    throw RasterError(RasterErrc::kMalformedContainer, "not a PNG stream");
  }
  if (std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) {
    throw RasterError(RasterErrc::kMalformedContainer, "PNG stream lacks IHDR");
  }
  const std::uint32_t width = read_be32(bytes.data() + 16);
  const std::uint32_t height = read_be32(bytes.data() + 20);
  if (width == 0 || height == 0 || width > 0x7fffffffu || height > 0x7fffffffu) {
    throw RasterError(RasterErrc::kMalformedContainer, "PNG header has invalid dimensions");
  }
  return {static_cast<int>(height), static_cast<int>(width)};
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  peek_png_size(bytes);

  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  PngImageGuard guard{&png};

  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw RasterError(RasterErrc::kMalformedContainer,
                      std::string("PNG header rejected: ") + png.message);
  }
  if (png.format & PNG_FORMAT_FLAG_LINEAR) {
    throw RasterError(RasterErrc::kUnsupportedBitDepth, "only 8-bit PNG rasters are supported");
  }

  // Read with alpha so libpng does not composite; the alpha byte is discarded below.
  png.format = PNG_FORMAT_RGBA;
  const int width = static_cast<int>(png.width);
  const int height = static_cast<int>(png.height);
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, pixels.data(), 0, nullptr)) {
    throw RasterError(RasterErrc::kMalformedContainer,
                      std::string("PNG decode failed: ") + png.message);
  }

  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<float> data(3 * count);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t c = 0; c < 3; ++c) data[3 * i + c] = static_cast<float>(pixels[4 * i + c]) / 255.0f;
  }
  return Image(height, width, std::move(data));
}

Image load_raster(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw RasterError(RasterErrc::kMissingFile, "no such file: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw RasterError(RasterErrc::kMissingFile, "cannot open: " + path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_png(bytes);
  } catch (const RasterError& e) {
    throw RasterError(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  std::vector<std::uint8_t> pixels(image.data().size());
  std::transform(image.data().begin(), image.data().end(), pixels.begin(), quantize_channel);

  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_RGB;
  PngImageGuard guard{&png};

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("PNG encode failed: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("PNG encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

void save_raster(const Image& image, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw RasterError(RasterErrc::kUnwritablePath, "cannot write: " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw RasterError(RasterErrc::kUnwritablePath, "write failed: " + path.string());
  }
}

}  // namespace chromap
