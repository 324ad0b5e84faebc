#pragma once

#include "chromap/image.h"

namespace chromap {

// Square image fed to the encoder. Only constructible from a square Image.
class Thumbnail {
 public:
  explicit Thumbnail(Image image);

  int side() const { return image_.height(); }
  const Image& image() const { return image_; }

 private:
  Image image_;
};

// Area-average resampling to side x side. Each destination pixel averages the
// exact fractional source footprint it covers, so constant images stay exactly
// constant and equal-size inputs are copied unchanged.
Thumbnail downsample(const Image& image, int side);

}  // namespace chromap
