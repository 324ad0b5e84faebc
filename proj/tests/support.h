#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "chromap/image.h"
#include "chromap/tensor.h"

namespace chromap::testing {

inline Image random_image(int h, int w, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  Image img(h, w);
  for (float& v : img.data()) v = u(rng);
  return img;
}

template <typename T>
BasicTensor<T> random_tensor(Shape shape, std::uint64_t seed, T scale = T(1)) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<T> n(T(0), scale);
  BasicTensor<T> t(std::move(shape));
  for (T& v : t.data()) v = n(rng);
  return t;
}

// |a - n| / max(|a|, |n|, floor). The floor keeps gradients that are zero up
// to rounding from producing meaningless ratios.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Central difference of f with respect to *x, restoring *x afterwards.
inline double central_difference(const std::function<double()>& f, double* x, double h = 1e-4) {
  const double saved = *x;
  *x = saved + h;
  const double plus = f();
  *x = saved - h;
  const double minus = f();
  *x = saved;
  return (plus - minus) / (2.0 * h);
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("chromap_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace chromap::testing

#include "chromap/model.h"

namespace chromap::testing {

// A model whose every trainable tensor is nudged off the identity init, so
// that encoder outputs depend on the image. Stands in for a trained model in
// tests that only need "not the identity".
inline ModelParams perturbed_model(EncoderConfig config, std::uint64_t seed, float scale = 0.05f) {
  ModelParams model = init_model(config);
  for (Tensor* t : model.trainable()) {
    const Tensor noise = random_tensor<float>(t->shape(), seed++, scale);
    for (std::size_t i = 0; i < t->size(); ++i) (*t)[i] += noise[i];
  }
  return model;
}

inline EncoderConfig small_encoder(int k = 4, int thumbnail = 16) {
  EncoderConfig c;
  c.k = k;
  c.thumbnail_size = thumbnail;
  c.widths = {8, 8};
  c.seed = 1;
  return c;
}

}  // namespace chromap::testing
