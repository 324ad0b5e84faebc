#include "chromap/dncm.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

#include "chromap/tiling.h"

namespace chromap {

namespace {

void check_finite(std::span<const float> values, const char* what) {
  for (float v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " has a non-finite entry");
  }
}

void check_compatible(const ColorMapMatrix& t, const ProjectionPair& proj) {
  proj.validate();
  if (t.k() != proj.k()) {
    throw ShapeError("color map matrix k=" + std::to_string(t.k()) +
                     " does not match projection k=" + std::to_string(proj.k()));
  }
}

// Evaluates one pixel; e and f are k-element scratch rows. Sums run in double
// and each output channel is rounded once, so float storage stays within half
// an ulp of the exact product.
template <typename T>
inline void map_pixel(const T* x, const T* p, const T* t, const T* q, int k, double* e, double* f, T* y) {
  const double x0 = x[0], x1 = x[1], x2 = x[2];
  for (int j = 0; j < k; ++j) {
    e[j] = x0 * static_cast<double>(p[j]) + x1 * static_cast<double>(p[k + j]) + x2 * static_cast<double>(p[2 * k + j]);
  }
  for (int j = 0; j < k; ++j) f[j] = 0.0;
  for (int i = 0; i < k; ++i) {
    const double ei = e[i];
    const T* trow = t + i * k;
    for (int j = 0; j < k; ++j) f[j] += ei * static_cast<double>(trow[j]);
  }
  double y0 = 0.0, y1 = 0.0, y2 = 0.0;
  for (int j = 0; j < k; ++j) {
    y0 += f[j] * static_cast<double>(q[3 * j]);
    y1 += f[j] * static_cast<double>(q[3 * j + 1]);
    y2 += f[j] * static_cast<double>(q[3 * j + 2]);
  }
  y[0] = static_cast<T>(y0);
  y[1] = static_cast<T>(y1);
  y[2] = static_cast<T>(y2);
}

void clamp_all(std::span<float> values) {
  for (float& v : values) v = std::clamp(v, 0.0f, 1.0f);
}

// Kernel-owned buffer whose size is reported to an optional meter.
template <typename V>
class MeteredBuffer {
 public:
  MeteredBuffer(std::size_t count, MemoryMeter* meter) : data_(count), meter_(meter) {
    if (meter_) meter_->allocate(count * sizeof(V));
  }
  ~MeteredBuffer() {
    if (meter_) meter_->release(data_.size() * sizeof(V));
  }
  MeteredBuffer(const MeteredBuffer&) = delete;
  MeteredBuffer& operator=(const MeteredBuffer&) = delete;

  std::span<V> span() { return data_; }

 private:
  std::vector<V> data_;
  MemoryMeter* meter_;
};

}  // namespace

ColorMapMatrix::ColorMapMatrix(int k, std::vector<float> values) : k_(k), values_(std::move(values)) {
  if (k < 1) throw std::invalid_argument("color map matrix needs k >= 1");
  if (values_.size() != static_cast<std::size_t>(k) * static_cast<std::size_t>(k)) {
    throw ShapeError("color map matrix needs k^2=" + std::to_string(k * k) + " values, got " +
                     std::to_string(values_.size()));
  }
  check_finite(values_, "color map matrix");
}

ColorMapMatrix ColorMapMatrix::identity(int k) {
  std::vector<float> v(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 0.0f);
  for (int i = 0; i < k; ++i) v[static_cast<std::size_t>(i * k + i)] = 1.0f;
  return ColorMapMatrix(k, std::move(v));
}

Tensor ColorMapMatrix::as_tensor() const {
  const auto k = static_cast<std::size_t>(k_);
  return Tensor({k, k}, values_);
}

void ProjectionPair::validate() const {
  if (p.rank() != 2 || p.dim(0) != 3 || p.dim(1) < 1) {
    throw ShapeError("projection P must be [3 x k], got " + shape_string(p.shape()));
  }
  require_shape(q.shape(), {p.dim(1), 3}, "projection Q");
  check_finite(p.data(), "projection P");
  check_finite(q.data(), "projection Q");
}

ProjectionPair ProjectionPair::identity(int k, ProjectionRole role) {
  if (k < 1) throw std::invalid_argument("projection needs k >= 1");
  const auto kk = static_cast<std::size_t>(k);
  ProjectionPair pair{Tensor({3, kk}), Tensor({kk, 3}), role};
  for (std::size_t i = 0; i < std::min<std::size_t>(3, kk); ++i) {
    pair.p[i * kk + i] = 1.0f;
    pair.q[i * 3 + i] = 1.0f;
  }
  return pair;
}

ProjectionPair init_projection(int k, ProjectionRole role, std::uint64_t seed) {
  ProjectionPair pair = ProjectionPair::identity(k, role);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 0.1f);
  const auto kk = static_cast<std::size_t>(k);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 3; c < kk; ++c) pair.p[r * kk + c] = normal(rng);
  }
  return pair;
}

template <typename T>
void dncm_map(std::span<const T> pixels, std::span<const T> p, std::span<const T> t,
              std::span<const T> q, int k, std::span<T> out) {
  const std::size_t n = pixels.size() / 3;
  std::vector<double> scratch(2 * static_cast<std::size_t>(k));
  double* e = scratch.data();
  double* f = e + k;
  for (std::size_t i = 0; i < n; ++i) {
    map_pixel(pixels.data() + 3 * i, p.data(), t.data(), q.data(), k, e, f, out.data() + 3 * i);
  }
}

template <typename T>
void dncm_map_backward(std::span<const T> pixels, std::span<const T> p, std::span<const T> t,
                       std::span<const T> q, int k, std::span<const T> upstream, T* dx, T* dp,
                       T* dt, T* dq) {
  const std::size_t n = pixels.size() / 3;
  const auto kk = static_cast<std::size_t>(k);

  // Every parameter gradient factors through the 3x3 matrix A = X^T G.
  std::array<double, 9> a{};
  for (std::size_t i = 0; i < n; ++i) {
    const T* x = pixels.data() + 3 * i;
    const T* g = upstream.data() + 3 * i;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) a[3 * r + c] += static_cast<double>(x[r]) * static_cast<double>(g[c]);
    }
  }

  // TQ[j][c] = sum_l T[j][l] Q[l][c]   (k x 3)
  std::vector<double> tq(kk * 3, 0.0);
  for (std::size_t j = 0; j < kk; ++j) {
    for (std::size_t l = 0; l < kk; ++l) {
      const double tjl = t[j * kk + l];
      for (int c = 0; c < 3; ++c) tq[j * 3 + c] += tjl * q[l * 3 + c];
    }
  }
  // PT[r][l] = sum_j P[r][j] T[j][l]   (3 x k)
  std::vector<double> pt(3 * kk, 0.0);
  for (int r = 0; r < 3; ++r) {
    for (std::size_t j = 0; j < kk; ++j) {
      const double prj = p[r * kk + j];
      for (std::size_t l = 0; l < kk; ++l) pt[r * kk + l] += prj * t[j * kk + l];
    }
  }

  if (dt) {
    // dT = P^T A Q^T: dT[i][j] = sum_{r,c} P[r][i] A[r][c] Q[j][c]
    std::vector<double> aq(3 * kk, 0.0);  // A Q^T  (3 x k)
    for (int r = 0; r < 3; ++r) {
      for (std::size_t j = 0; j < kk; ++j) {
        for (int c = 0; c < 3; ++c) aq[r * kk + j] += a[3 * r + c] * q[j * 3 + c];
      }
    }
    for (std::size_t i = 0; i < kk; ++i) {
      for (std::size_t j = 0; j < kk; ++j) {
        double s = 0.0;
        for (int r = 0; r < 3; ++r) s += static_cast<double>(p[r * kk + i]) * aq[r * kk + j];
        dt[i * kk + j] += static_cast<T>(s);
      }
    }
  }
  if (dp) {
    // dP = A (T Q)^T: dP[r][j] = sum_c A[r][c] TQ[j][c]
    for (int r = 0; r < 3; ++r) {
      for (std::size_t j = 0; j < kk; ++j) {
        double s = 0.0;
        for (int c = 0; c < 3; ++c) s += a[3 * r + c] * tq[j * 3 + c];
        dp[r * kk + j] += static_cast<T>(s);
      }
    }
  }
  if (dq) {
    // dQ = (P T)^T A: dQ[l][c] = sum_r PT[r][l] A[r][c]
    for (std::size_t l = 0; l < kk; ++l) {
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int r = 0; r < 3; ++r) s += pt[r * kk + l] * a[3 * r + c];
        dq[l * 3 + c] += static_cast<T>(s);
      }
    }
  }
  if (dx) {
    // dX = G M^T with M = P T Q (3 x 3).
    std::array<double, 9> m{};
    for (int r = 0; r < 3; ++r) {
      for (std::size_t l = 0; l < kk; ++l) {
        for (int c = 0; c < 3; ++c) m[3 * r + c] += pt[r * kk + l] * q[l * 3 + c];
      }
    }
    std::array<T, 9> mt;
    for (int i = 0; i < 9; ++i) mt[static_cast<std::size_t>(i)] = static_cast<T>(m[static_cast<std::size_t>(i)]);
    for (std::size_t i = 0; i < n; ++i) {
      const T* g = upstream.data() + 3 * i;
      T* d = dx + 3 * i;
      for (int r = 0; r < 3; ++r) {
        d[r] += g[0] * mt[3 * r] + g[1] * mt[3 * r + 1] + g[2] * mt[3 * r + 2];
      }
    }
  }
}

template void dncm_map<float>(std::span<const float>, std::span<const float>,
                              std::span<const float>, std::span<const float>, int,
                              std::span<float>);
template void dncm_map<double>(std::span<const double>, std::span<const double>,
                               std::span<const double>, std::span<const double>, int,
                               std::span<double>);
template void dncm_map_backward<float>(std::span<const float>, std::span<const float>,
                                       std::span<const float>, std::span<const float>, int,
                                       std::span<const float>, float*, float*, float*, float*);
template void dncm_map_backward<double>(std::span<const double>, std::span<const double>,
                                        std::span<const double>, std::span<const double>, int,
                                        std::span<const double>, double*, double*, double*,
                                        double*);

Image dncm_apply(const Image& image, const ColorMapMatrix& t, const ProjectionPair& proj,
                 Clamp clamp) {
  check_compatible(t, proj);
  Image out(image.height(), image.width());
  dncm_map<float>(image.data(), proj.p.data(), t.values(), proj.q.data(), t.k(), out.data());
  if (clamp == Clamp::kYes) clamp_all(out.data());
  return out;
}

std::array<float, 9> precompose(const ColorMapMatrix& t, const ProjectionPair& proj) {
  check_compatible(t, proj);
  const auto k = static_cast<std::size_t>(t.k());
  std::vector<double> pt(3 * k, 0.0);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t l = 0; l < k; ++l) {
        pt[r * k + l] += static_cast<double>(proj.p[r * k + j]) * t.values()[j * k + l];
      }
    }
  }
  std::array<float, 9> m{};
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) s += pt[r * k + l] * proj.q[l * 3 + c];
      m[r * 3 + c] = static_cast<float>(s);
    }
  }
  return m;
}

Image dncm_apply_precomposed(const Image& image, const ColorMapMatrix& t,
                             const ProjectionPair& proj, Clamp clamp) {
  const std::array<float, 9> m = precompose(t, proj);
  Image out(image.height(), image.width());
  const auto in = image.data();
  auto o = out.data();
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    const float* x = in.data() + 3 * i;
    for (int c = 0; c < 3; ++c) o[3 * i + c] = x[0] * m[c] + x[1] * m[3 + c] + x[2] * m[6 + c];
  }
  if (clamp == Clamp::kYes) clamp_all(o);
  return out;
}

void MemoryMeter::allocate(std::size_t bytes) {
  current_ += bytes;
  peak_ = std::max(peak_, current_);
}

void MemoryMeter::release(std::size_t bytes) { current_ -= std::min(bytes, current_); }

Image dncm_apply_tiled(const Image& image, const ColorMapMatrix& t, const ProjectionPair& proj,
                       const TiledOptions& options) {
  check_compatible(t, proj);
  if (options.workers < 1) throw std::invalid_argument("tiled apply needs at least one worker");
  const TileGrid grid = tile(image, options.patch_size);
  Image out(image.height(), image.width());
  const int k = t.k();
  const std::size_t stride = static_cast<std::size_t>(image.width()) * 3;

  const int workers = std::min<int>(options.workers, static_cast<int>(grid.tiles.size()));
  // Meter updates are serialized by construction: each worker reserves its
  // buffers before the threads start and releases them after they join.
  std::vector<std::unique_ptr<MeteredBuffer<float>>> staging;
  std::vector<std::unique_ptr<MeteredBuffer<double>>> scratch;
  const std::size_t tile_capacity = static_cast<std::size_t>(
      std::min(options.patch_size, image.height())) *
      static_cast<std::size_t>(std::min(options.patch_size, image.width())) * 3;
  for (int w = 0; w < workers; ++w) {
    staging.push_back(std::make_unique<MeteredBuffer<float>>(tile_capacity, options.meter));
    scratch.push_back(std::make_unique<MeteredBuffer<double>>(2 * static_cast<std::size_t>(k), options.meter));
  }

  auto run = [&](int worker) {
    std::span<float> buffer = staging[static_cast<std::size_t>(worker)]->span();
    double* e = scratch[static_cast<std::size_t>(worker)]->span().data();
    double* f = e + k;
    const float* p = proj.p.data().data();
    const float* tv = t.values().data();
    const float* q = proj.q.data().data();
    for (std::size_t idx = static_cast<std::size_t>(worker); idx < grid.tiles.size();
         idx += static_cast<std::size_t>(workers)) {
      const Tile& tl = grid.tiles[idx];
      const std::size_t row_len = static_cast<std::size_t>(tl.width) * 3;
      for (int y = 0; y < tl.height; ++y) {
        const float* src = image.data().data() + static_cast<std::size_t>(tl.row + y) * stride +
                           static_cast<std::size_t>(tl.col) * 3;
        std::copy_n(src, row_len, buffer.data() + static_cast<std::size_t>(y) * row_len);
      }
      const std::size_t count = static_cast<std::size_t>(tl.height) * static_cast<std::size_t>(tl.width);
      for (std::size_t i = 0; i < count; ++i) {
        float* px = buffer.data() + 3 * i;
        map_pixel(px, p, tv, q, k, e, f, px);
      }
      if (options.clamp == Clamp::kYes) clamp_all(buffer.first(3 * count));
      for (int y = 0; y < tl.height; ++y) {
        float* dst = out.data().data() + static_cast<std::size_t>(tl.row + y) * stride +
                     static_cast<std::size_t>(tl.col) * 3;
        std::copy_n(buffer.data() + static_cast<std::size_t>(y) * row_len, row_len, dst);
      }
    }
  };

  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(run, w);
  }
  return out;
}

DncmGradients dncm_backward(const Image& image, const ColorMapMatrix& t,
                            const ProjectionPair& proj, const Image& upstream) {
  check_compatible(t, proj);
  if (upstream.height() != image.height() || upstream.width() != image.width()) {
    throw ShapeError("upstream gradient extent does not match the image");
  }
  const auto k = static_cast<std::size_t>(t.k());
  DncmGradients g{Tensor({k, k}), Tensor({3, k}), Tensor({k, 3}), Image(image.height(), image.width())};
  dncm_map_backward<float>(image.data(), proj.p.data(), t.values(), proj.q.data(), t.k(),
                           upstream.data(), g.dx.data().data(), g.dp.data().data(),
                           g.dt.data().data(), g.dq.data().data());
  return g;
}

}  // namespace chromap
