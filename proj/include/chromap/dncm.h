#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "chromap/autodiff.h"
#include "chromap/image.h"
#include "chromap/tensor.h"

namespace chromap {

// Image-adaptive k x k matrix (T, or by role the normalizing d / stylizing r).
// Values are row-major: entry (i, j) is values()[i * k + j].
class ColorMapMatrix {
 public:
  ColorMapMatrix(int k, std::vector<float> values);
  static ColorMapMatrix identity(int k);

  int k() const { return k_; }
  std::span<const float> values() const { return values_; }
  float at(int row, int col) const { return values_[static_cast<std::size_t>(row * k_ + col)]; }
  Tensor as_tensor() const;

  bool operator==(const ColorMapMatrix&) const = default;

 private:
  int k_;
  std::vector<float> values_;
};

enum class ProjectionRole : std::uint8_t { kNormalizing, kStylizing };

// Learnable P [3 x k] and Q [k x 3], shared by all images for one mapping role.
struct ProjectionPair {
  Tensor p;
  Tensor q;
  ProjectionRole role = ProjectionRole::kNormalizing;

  int k() const { return static_cast<int>(p.dim(1)); }
  // Throws ShapeError / std::invalid_argument on bad shapes or non-finite entries.
  void validate() const;

  // P = [I3 | 0], Q = [I3 ; 0] (truncated when k < 3).
  static ProjectionPair identity(int k, ProjectionRole role);

  bool operator==(const ProjectionPair&) const = default;
};

// Training initialization. Same as identity() except the embedding columns of P
// beyond the first three are drawn from N(0, 0.1^2). Because the matching rows
// of Q are zero, P * Q is still exactly I3 and the mapping is still the
// identity, but gradients can reach those embedding dimensions.
ProjectionPair init_projection(int k, ProjectionRole role, std::uint64_t seed);

enum class Clamp { kNo, kYes };

// Per-pixel y = ((x * P) * T) * Q, evaluated in that order with ascending
// summation indices. pixels and out hold n x 3 values and may alias.
template <typename T>
void dncm_map(std::span<const T> pixels, std::span<const T> p, std::span<const T> t,
              std::span<const T> q, int k, std::span<T> out);

// Gradients of sum(G . Y) for Y = X P T Q, accumulated into the given buffers
// (any may be null):
//   dT = P^T X^T G Q^T,  dP = X^T G Q^T T^T,  dQ = T^T P^T X^T G,  dX = G Q^T T^T P^T
template <typename T>
void dncm_map_backward(std::span<const T> pixels, std::span<const T> p, std::span<const T> t,
                       std::span<const T> q, int k, std::span<const T> upstream, T* dx, T* dp,
                       T* dt, T* dq);

Image dncm_apply(const Image& image, const ColorMapMatrix& t, const ProjectionPair& proj,
                 Clamp clamp = Clamp::kNo);

// Collapses P * T * Q into one 3x3 matrix (row-major) and applies that per
// pixel. Mathematically equal to dncm_apply; not bitwise.
std::array<float, 9> precompose(const ColorMapMatrix& t, const ProjectionPair& proj);
Image dncm_apply_precomposed(const Image& image, const ColorMapMatrix& t,
                             const ProjectionPair& proj, Clamp clamp = Clamp::kNo);

// Working-memory accounting for the tiled kernel. Only buffers the kernel
// allocates for itself are counted; the caller's input and output are not.
class MemoryMeter {
 public:
  void allocate(std::size_t bytes);
  void release(std::size_t bytes);
  std::size_t current() const { return current_; }
  std::size_t peak() const { return peak_; }
  void reset() { current_ = peak_ = 0; }

 private:
  std::size_t current_ = 0;
  std::size_t peak_ = 0;
};

struct TiledOptions {
  int patch_size = 512;
  int workers = 1;
  Clamp clamp = Clamp::kNo;
  MemoryMeter* meter = nullptr;
};

// Same result as dncm_apply, bit for bit, computed tile by tile. Each worker
// stages one tile at a time, so working memory is O(workers * patch^2 + k).
Image dncm_apply_tiled(const Image& image, const ColorMapMatrix& t, const ProjectionPair& proj,
                       const TiledOptions& options);

struct DncmGradients {
  Tensor dt;  // [k x k]
  Tensor dp;  // [3 x k]
  Tensor dq;  // [k x 3]
  Image dx;   // same extent as the input
};

DncmGradients dncm_backward(const Image& image, const ColorMapMatrix& t,
                            const ProjectionPair& proj, const Image& upstream);

namespace ad {

// pixels [n x 3], p [3 x k], t [k x k], q [k x 3] -> [n x 3]
template <typename T>
Var<T> dncm(Tape<T>& tape, Var<T> pixels, Var<T> p, Var<T> t, Var<T> q) {
  const auto& x = tape.value(pixels);
  const auto& pv = tape.value(p);
  const auto& tv = tape.value(t);
  const auto& qv = tape.value(q);
  if (x.rank() != 2 || x.dim(1) != 3 || pv.rank() != 2 || pv.dim(0) != 3) {
    throw ShapeError("dncm: pixels must be [n x 3] and P [3 x k]");
  }
  const std::size_t k = pv.dim(1);
  require_shape(tv.shape(), {k, k}, "dncm T");
  require_shape(qv.shape(), {k, 3}, "dncm Q");

  BasicTensor<T> out(x.shape());
  dncm_map<T>(x.data(), pv.data(), tv.data(), qv.data(), static_cast<int>(k), out.data());
  return tape.record(std::move(out), [pixels, p, t, q, k](Tape<T>& tp, std::size_t self) {
    dncm_map_backward<T>(tp.value(pixels).data(), tp.value(p).data(), tp.value(t).data(),
                         tp.value(q).data(), static_cast<int>(k), tp.grad(self).data(),
                         tp.grad(pixels).data().data(), tp.grad(p).data().data(),
                         tp.grad(t).data().data(), tp.grad(q).data().data());
  });
}

}  // namespace ad
}  // namespace chromap
