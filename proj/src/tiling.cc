#include "chromap/tiling.h"

#include <algorithm>
#include <stdexcept>

namespace chromap {

TileGrid tile(int height, int width, int patch_size) {
  if (patch_size < 1) throw std::invalid_argument("patch size must be >= 1");
  if (height < 1 || width < 1) throw std::invalid_argument("cannot tile an empty image");
  TileGrid grid;
  grid.patch_size = patch_size;
  for (int r = 0; r < height; r += patch_size) {
    for (int c = 0; c < width; c += patch_size) {
      grid.tiles.push_back({r, c, std::min(patch_size, height - r), std::min(patch_size, width - c)});
    }
  }
  return grid;
}

Image extract_tile(const Image& image, const Tile& t) {
  Image out(t.height, t.width);
  const auto src = image.data();
  auto dst = out.data();
  const std::size_t row_len = static_cast<std::size_t>(t.width) * Image::kChannels;
  for (int y = 0; y < t.height; ++y) {
    const std::size_t from =
        (static_cast<std::size_t>(t.row + y) * image.width() + t.col) * Image::kChannels;
    std::copy_n(src.begin() + from, row_len, dst.begin() + y * row_len);
  }
  return out;
}

void paste_tile(Image& dst, const Image& src, const Tile& t) {
  if (src.height() != t.height || src.width() != t.width) {
    throw std::invalid_argument("tile image does not match tile extent");
  }
  auto out = dst.data();
  const auto in = src.data();
  const std::size_t row_len = static_cast<std::size_t>(t.width) * Image::kChannels;
  for (int y = 0; y < t.height; ++y) {
    const std::size_t to =
        (static_cast<std::size_t>(t.row + y) * dst.width() + t.col) * Image::kChannels;
    std::copy_n(in.begin() + y * row_len, row_len, out.begin() + to);
  }
}

}  // namespace chromap
