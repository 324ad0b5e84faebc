#include <gtest/gtest.h>
#include <png.h>

#include <fstream>
#include <set>

#include "chromap/image.h"
#include "chromap/raster.h"
#include "chromap/resample.h"
#include "chromap/tiling.h"
#include "support.h"

namespace chromap {
namespace {

using testing::random_image;
using testing::TempDir;

std::vector<std::uint8_t> png_from_bytes(int h, int w, const std::vector<std::uint8_t>& rgb) {
  return encode_png(Image(h, w, [&] {
    std::vector<float> v;
    for (auto b : rgb) v.push_back(static_cast<float>(b) / 255.0f);
    return v;
  }()));
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                              static_cast<std::streamsize>(bytes.size()));
}

TEST(Image, RejectsBadExtents) {
  EXPECT_THROW(Image(0, 3), std::invalid_argument);
  EXPECT_THROW(Image(2, 2, std::vector<float>(11)), std::invalid_argument);
  EXPECT_EQ(Image(2, 3).data().size(), 18u);
}

TEST(Raster, WhitePixelLoadsAsOne) {
  const Image img = decode_png(png_from_bytes(1, 1, {255, 255, 255}));
  EXPECT_EQ(img, Image(1, 1, 1.0f));
}

TEST(Raster, ChannelsAreCodeOver255) {
  const Image img = decode_png(png_from_bytes(1, 2, {0, 128, 255, 64, 64, 64}));
  EXPECT_FLOAT_EQ(img.at(0, 0, 0), 0.0f);
  EXPECT_NEAR(img.at(0, 0, 1), 0.50196, 1e-5);
  EXPECT_FLOAT_EQ(img.at(0, 0, 2), 1.0f);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(img.at(0, 1, c), 0.25098, 1e-5);
}

TEST(Raster, AlphaIsDropped) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = 1;
  image.height = 1;
  image.format = PNG_FORMAT_RGBA;
  const std::uint8_t px[4] = {10, 20, 30, 40};
  png_alloc_size_t size = 0;
  ASSERT_TRUE(png_image_write_to_memory(&image, nullptr, &size, 0, px, 0, nullptr));
  std::vector<std::uint8_t> buf(size);
  ASSERT_TRUE(png_image_write_to_memory(&image, buf.data(), &size, 0, px, 0, nullptr));
  const Image img = decode_png(buf);
  EXPECT_FLOAT_EQ(img.at(0, 0, 0), 10.0f / 255.0f);
  EXPECT_FLOAT_EQ(img.at(0, 0, 2), 30.0f / 255.0f);
}

TEST(Raster, ErrorsAreDistinct) {
  TempDir dir("raster");
  try {
    load_raster(dir.file("absent.png"));
    FAIL();
  } catch (const RasterError& e) {
    EXPECT_EQ(e.code(), RasterErrc::kMissingFile);
  }

  auto good = png_from_bytes(4, 4, std::vector<std::uint8_t>(48, 7));
  good.resize(good.size() / 2);
  write_bytes(dir.file("truncated.png"), good);
  try {
    load_raster(dir.file("truncated.png"));
    FAIL();
  } catch (const RasterError& e) {
    EXPECT_EQ(e.code(), RasterErrc::kMalformedContainer);
  }

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = 2;
  image.height = 2;
  image.format = PNG_FORMAT_LINEAR_RGB;  // 16 bits per channel
  std::vector<std::uint16_t> px(12, 1000);
  png_alloc_size_t size = 0;
  ASSERT_TRUE(png_image_write_to_memory(&image, nullptr, &size, 0, px.data(), 0, nullptr));
  std::vector<std::uint8_t> buf(size);
  ASSERT_TRUE(png_image_write_to_memory(&image, buf.data(), &size, 0, px.data(), 0, nullptr));
  try {
    decode_png(buf);
    FAIL();
  } catch (const RasterError& e) {
    EXPECT_EQ(e.code(), RasterErrc::kUnsupportedBitDepth);
  }

  try {
    save_raster(Image(1, 1), dir.file("no/such/dir/out.png"));
    FAIL();
  } catch (const RasterError& e) {
    EXPECT_EQ(e.code(), RasterErrc::kUnwritablePath);
  }
}

TEST(Raster, QuantizationRoundsHalfAwayFromZero) {
  EXPECT_EQ(quantize_channel(1.0f), 255);
  EXPECT_EQ(quantize_channel(0.5f), 128);
  EXPECT_EQ(quantize_channel(-0.2f), 0);
  EXPECT_EQ(quantize_channel(1.7f), 255);
  EXPECT_EQ(quantize_channel(0.0f), 0);
}

TEST(Raster, EightBitImagesRoundtripExactly) {
  Image src(7, 5);
  std::mt19937_64 rng(3);
  for (float& v : src.data()) v = static_cast<float>(rng() % 256) / 255.0f;
  EXPECT_EQ(decode_png(encode_png(src)), src);
}

TEST(Raster, QuantizationErrorBound) {
  const Image x = random_image(16, 16, 11, -0.3f, 1.3f);
  const Image back = decode_png(encode_png(x));
  const Image clamped = x.clamped();
  for (std::size_t i = 0; i < x.data().size(); ++i) {
    EXPECT_LE(std::abs(back.data()[i] - clamped.data()[i]), 1.0f / 510.0f + 1e-7f);
  }
}

TEST(Raster, PeekReadsHeaderOnly) {
  const auto png = encode_png(Image(3, 9));
  const RasterSize size = peek_png_size(png);
  EXPECT_EQ(size.height, 3);
  EXPECT_EQ(size.width, 9);
  const std::vector<std::uint8_t> junk{1, 2, 3};
  EXPECT_THROW(peek_png_size(junk), RasterError);
}

// Oracle: for each destination pixel, sum each source pixel's exact overlap
// area with the destination footprint, computed from interval arithmetic.
Image area_average_oracle(const Image& src, int side) {
  Image out(side, side);
  const double sy = static_cast<double>(src.height()) / side;
  const double sx = static_cast<double>(src.width()) / side;
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      double acc[3] = {0, 0, 0};
      double area = 0;
      for (int y = 0; y < src.height(); ++y) {
        const double oy = std::max(0.0, std::min<double>(y + 1, (i + 1) * sy) - std::max<double>(y, i * sy));
        if (oy <= 0) continue;
        for (int x = 0; x < src.width(); ++x) {
          const double ox = std::max(0.0, std::min<double>(x + 1, (j + 1) * sx) - std::max<double>(x, j * sx));
          if (ox <= 0) continue;
          for (int c = 0; c < 3; ++c) acc[c] += oy * ox * src.at(y, x, c);
          area += oy * ox;
        }
      }
      for (int c = 0; c < 3; ++c) out.at(i, j, c) = static_cast<float>(acc[c] / area);
    }
  }
  return out;
}

TEST(Downsample, ConstantStaysExactlyConstant) {
  for (auto [h, w, side] : {std::tuple{37, 53, 8}, std::tuple{64, 64, 64}, std::tuple{100, 3, 7}}) {
    const Image src(h, w, 0.3137f);
    const Thumbnail t = downsample(src, side);
    for (float v : t.image().data()) EXPECT_EQ(v, 0.3137f);
  }
}

TEST(Downsample, TwoByTwoBoxAverage) {
  Image src(2, 2);
  src.at(0, 1, 0) = 1.0f;
  src.at(1, 1, 0) = 1.0f;
  EXPECT_FLOAT_EQ(downsample(src, 1).image().at(0, 0, 0), 0.5f);
}

TEST(Downsample, GradientMatchesAreaOracle) {
  Image src(512, 512);
  for (int y = 0; y < 512; ++y) {
    for (int x = 0; x < 512; ++x) {
      for (int c = 0; c < 3; ++c) src.at(y, x, c) = static_cast<float>(x) / 511.0f;
    }
  }
  const Image got = downsample(src, 64).image();
  const Image want = area_average_oracle(src, 64);
  for (std::size_t i = 0; i < got.data().size(); ++i) EXPECT_NEAR(got.data()[i], want.data()[i], 1e-6);
}

TEST(Downsample, FractionalFootprintsMatchOracle) {
  const Image src = random_image(23, 31, 5);
  for (int side : {1, 4, 7, 10}) {
    const Image got = downsample(src, side).image();
    const Image want = area_average_oracle(src, side);
    for (std::size_t i = 0; i < got.data().size(); ++i) EXPECT_NEAR(got.data()[i], want.data()[i], 1e-6);
  }
}

TEST(Downsample, IsDeterministicAndSquare) {
  const Image src = random_image(40, 60, 9);
  const Thumbnail a = downsample(src, 16);
  EXPECT_EQ(a.side(), 16);
  EXPECT_EQ(a.image(), downsample(src, 16).image());
  EXPECT_THROW(downsample(src, 0), std::invalid_argument);
}

TEST(Tiling, SmallImageIsOneTile) {
  const TileGrid g = tile(8, 8, 16);
  ASSERT_EQ(g.tiles.size(), 1u);
  EXPECT_EQ(g.tiles[0], (Tile{0, 0, 8, 8}));
}

TEST(Tiling, EvenSplit) {
  const TileGrid g = tile(8, 8, 4);
  ASSERT_EQ(g.tiles.size(), 4u);
  for (const Tile& t : g.tiles) {
    EXPECT_EQ(t.height, 4);
    EXPECT_EQ(t.width, 4);
  }
}

TEST(Tiling, RaggedEdgesAndReassembly) {
  const Image src = random_image(10, 7, 2);
  const TileGrid g = tile(src, 4);
  ASSERT_EQ(g.tiles.size(), 6u);
  std::vector<int> heights, widths;
  for (const Tile& t : g.tiles) {
    if (t.col == 0) heights.push_back(t.height);
    if (t.row == 0) widths.push_back(t.width);
  }
  EXPECT_EQ(heights, (std::vector<int>{4, 4, 2}));
  EXPECT_EQ(widths, (std::vector<int>{4, 3}));

  Image rebuilt(10, 7, -1.0f);
  for (const Tile& t : g.tiles) paste_tile(rebuilt, extract_tile(src, t), t);
  EXPECT_EQ(rebuilt, src);
}

TEST(Tiling, EveryPixelCoveredExactlyOnce) {
  for (int h = 1; h <= 12; ++h) {
    for (int w = 1; w <= 12; ++w) {
      for (int patch = 1; patch <= 13; ++patch) {
        std::vector<int> hits(static_cast<std::size_t>(h * w), 0);
        for (const Tile& t : tile(h, w, patch).tiles) {
          ASSERT_LE(t.height, patch);
          ASSERT_LE(t.width, patch);
          for (int y = t.row; y < t.row + t.height; ++y) {
            for (int x = t.col; x < t.col + t.width; ++x) ++hits[static_cast<std::size_t>(y * w + x)];
          }
        }
        for (int n : hits) ASSERT_EQ(n, 1) << h << "x" << w << " patch " << patch;
      }
    }
  }
  EXPECT_THROW(tile(4, 4, 0), std::invalid_argument);
}

}  // namespace
}  // namespace chromap
