#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace chromap {

// Row-major h x w x 3 raster. Channel values are display-referred and nominally
// in [0, 1]; intermediate results (e.g. normalized images) may leave that range.
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int height, int width, float fill = 0.0f);
  Image(int height, int width, std::vector<float> data);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  bool empty() const { return data_.empty(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  float& at(int y, int x, int c) { return data_[index(y, x, c)]; }
  float at(int y, int x, int c) const { return data_[index(y, x, c)]; }

  // Copy with every channel clamped to [0, 1].
  Image clamped() const;

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * kChannels + static_cast<std::size_t>(c);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

// Mean absolute difference over all channels. Shapes must agree.
double mean_abs_diff(const Image& a, const Image& b);

// Mean squared difference over all channels. Shapes must agree.
double mean_squared_diff(const Image& a, const Image& b);

}  // namespace chromap
