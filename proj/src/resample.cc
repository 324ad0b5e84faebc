#include "chromap/resample.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace chromap {

namespace {

struct Footprint {
  int first = 0;                // first contributing source index
  std::vector<double> weights;  // overlap of each source cell, starting at `first`
  double total = 0.0;
};

// Destination cell i covers [i * src / dst, (i + 1) * src / dst) in source units.
std::vector<Footprint> footprints(int src, int dst) {
  std::vector<Footprint> out(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  for (int i = 0; i < dst; ++i) {
    const double lo = i * scale;
    const double hi = (i + 1) * scale;
    const int first = static_cast<int>(lo);
    const int last = std::min(src - 1, static_cast<int>(std::ceil(hi)) - 1);
    Footprint& f = out[static_cast<std::size_t>(i)];
    f.first = first;
    for (int s = first; s <= last; ++s) {
      const double w = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
      f.weights.push_back(w > 0.0 ? w : 0.0);
      f.total += f.weights.back();
    }
  }
  return out;
}

}  // namespace

Thumbnail::Thumbnail(Image image) : image_(std::move(image)) {
  if (image_.height() != image_.width()) {
    throw std::invalid_argument("thumbnail must be square");
  }
}

Thumbnail downsample(const Image& image, int side) {
  if (side < 1) throw std::invalid_argument("thumbnail side must be >= 1");
  const auto rows = footprints(image.height(), side);
  const auto cols = footprints(image.width(), side);

  Image out(side, side);
  for (int i = 0; i < side; ++i) {
    const Footprint& fy = rows[static_cast<std::size_t>(i)];
    for (int j = 0; j < side; ++j) {
      const Footprint& fx = cols[static_cast<std::size_t>(j)];
      const double norm = fy.total * fx.total;
      for (int c = 0; c < Image::kChannels; ++c) {
        // Accumulate offsets from a reference sample: exact for constant footprints.
        const float ref = image.at(fy.first, fx.first, c);
        double acc = 0.0;
        for (std::size_t a = 0; a < fy.weights.size(); ++a) {
          const int y = fy.first + static_cast<int>(a);
          double row = 0.0;
          for (std::size_t b = 0; b < fx.weights.size(); ++b) {
            const int x = fx.first + static_cast<int>(b);
            row += fx.weights[b] * (static_cast<double>(image.at(y, x, c)) - ref);
          }
          acc += fy.weights[a] * row;
        }
        out.at(i, j, c) = static_cast<float>(static_cast<double>(ref) + acc / norm);
      }
    }
  }
  return Thumbnail(std::move(out));
}

}  // namespace chromap
