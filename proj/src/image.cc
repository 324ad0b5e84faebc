#include "chromap/image.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace chromap {

namespace {

void check_dims(int height, int width) {
  if (height < 1 || width < 1) {
    throw std::invalid_argument("image dimensions must be >= 1, got " +
                                std::to_string(height) + "x" + std::to_string(width));
  }
}

void check_same_shape(const Image& a, const Image& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw std::invalid_argument("image shapes differ");
  }
}

}  // namespace

Image::Image(int height, int width, float fill) : height_(height), width_(width) {
  check_dims(height, width);
  data_.assign(pixel_count() * kChannels, fill);
}

Image::Image(int height, int width, std::vector<float> data)
    : height_(height), width_(width), data_(std::move(data)) {
  check_dims(height, width);
  if (data_.size() != pixel_count() * kChannels) {
    throw std::invalid_argument("image data length " + std::to_string(data_.size()) +
                                " does not match " + std::to_string(height) + "x" +
                                std::to_string(width) + "x3");
  }
}

Image Image::clamped() const {
  Image out = *this;
  for (float& v : out.data_) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

double mean_abs_diff(const Image& a, const Image& b) {
  check_same_shape(a, b);
  auto x = a.data();
  auto y = b.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum += std::abs(static_cast<double>(x[i]) - static_cast<double>(y[i]));
  }
  return sum / static_cast<double>(x.size());
}

double mean_squared_diff(const Image& a, const Image& b) {
  check_same_shape(a, b);
  auto x = a.data();
  auto y = b.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(x.size());
}

}  // namespace chromap
