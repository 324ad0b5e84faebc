#pragma once

#include <vector>

#include "chromap/image.h"

namespace chromap {

struct Tile {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;

  bool operator==(const Tile&) const = default;
};

// Row-major partition of an image into patch_size x patch_size tiles. Tiles on
// the right and bottom edges hold the remainders.
struct TileGrid {
  int patch_size = 0;
  std::vector<Tile> tiles;
};

TileGrid tile(int height, int width, int patch_size);
inline TileGrid tile(const Image& image, int patch_size) {
  return tile(image.height(), image.width(), patch_size);
}

// Copies the tile region out of / back into an image.
Image extract_tile(const Image& image, const Tile& t);
void paste_tile(Image& dst, const Image& src, const Tile& t);

}  // namespace chromap
