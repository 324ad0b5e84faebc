#include "chromap/synth.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "chromap/raster.h"

namespace chromap {

namespace {

using Rgb = std::array<float, 3>;

Rgb hsv_to_rgb(float h, float s, float v) {
  const float c = v * s;
  const float hp = h * 6.0f;
  const float x = c * (1.0f - std::abs(std::fmod(hp, 2.0f) - 1.0f));
  Rgb rgb{};
  switch (static_cast<int>(hp) % 6) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  const float m = v - c;
  for (float& ch : rgb) ch += m;
  return rgb;
}

Rgb random_color(std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  const float h = u(rng);
  const float s = 0.15f + 0.75f * u(rng);
  const float v = 0.2f + 0.75f * u(rng);
  return hsv_to_rgb(h, s, v);
}

}  // namespace

Image synth_image(int height, int width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  const std::array<Rgb, 4> corners{random_color(rng), random_color(rng), random_color(rng), random_color(rng)};

  Image img(height, width);
  for (int y = 0; y < height; ++y) {
    const float fy = height > 1 ? static_cast<float>(y) / static_cast<float>(height - 1) : 0.0f;
    for (int x = 0; x < width; ++x) {
      const float fx = width > 1 ? static_cast<float>(x) / static_cast<float>(width - 1) : 0.0f;
      for (int c = 0; c < 3; ++c) {
        const float top = corners[0][c] + fx * (corners[1][c] - corners[0][c]);
        const float bottom = corners[2][c] + fx * (corners[3][c] - corners[2][c]);
        img.at(y, x, c) = top + fy * (bottom - top);
      }
    }
  }

  const int shapes = std::uniform_int_distribution<int>(3, 8)(rng);
  for (int s = 0; s < shapes; ++s) {
    const Rgb color = random_color(rng);
    const bool ellipse = u(rng) < 0.5f;
    const float cx = u(rng) * static_cast<float>(width);
    const float cy = u(rng) * static_cast<float>(height);
    const float rx = (0.08f + 0.3f * u(rng)) * static_cast<float>(width);
    const float ry = (0.08f + 0.3f * u(rng)) * static_cast<float>(height);
    const float softness = 0.05f + 0.3f * u(rng);
    const float opacity = 0.6f + 0.4f * u(rng);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const float dx = (static_cast<float>(x) + 0.5f - cx) / rx;
        const float dy = (static_cast<float>(y) + 0.5f - cy) / ry;
        const float dist = ellipse ? std::sqrt(dx * dx + dy * dy) : std::max(std::abs(dx), std::abs(dy));
        const float alpha = opacity * std::clamp((1.0f - dist) / softness, 0.0f, 1.0f);
        if (alpha <= 0.0f) continue;
        for (int c = 0; c < 3; ++c) {
          float& v = img.at(y, x, c);
          v += alpha * (color[c] - v);
        }
      }
    }
  }

  std::normal_distribution<float> noise(0.0f, 0.015f);
  for (float& v : img.data()) v = std::clamp(v + noise(rng), 0.0f, 1.0f);
  return img;
}

void write_synthetic_dataset(const std::string& dir, int count, int size, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "img_%04d.png", i);
    const std::uint64_t image_seed = seed * 0x100000001b3ULL + static_cast<std::uint64_t>(i) + 1;
    save_raster(synth_image(size, size, image_seed), (std::filesystem::path(dir) / name).string());
  }
}

}  // namespace chromap
