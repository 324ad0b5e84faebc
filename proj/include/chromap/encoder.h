#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "chromap/autodiff.h"
#include "chromap/dncm.h"
#include "chromap/resample.h"
#include "chromap/tensor.h"

namespace chromap {

struct EncoderConfig {
  int k = 16;
  int thumbnail_size = 64;
  std::vector<int> widths{16, 32, 64, 128};
  std::uint64_t seed = 0;

  // Throws std::invalid_argument when k < 1, widths is empty or has a
  // non-positive entry, or thumbnail_size is not a multiple of 2^stages.
  void validate() const;
  int stages() const { return static_cast<int>(widths.size()); }

  bool operator==(const EncoderConfig&) const = default;
};

// Plain CNN trunk (conv3x3/stride 2 + relu per stage, global average pool)
// feeding two linear heads that each emit k^2 values.
template <typename T>
struct BasicEncoderWeights {
  std::vector<BasicTensor<T>> kernels;  // stage s: [widths[s] x c_in x 3 x 3]
  std::vector<BasicTensor<T>> biases;   // stage s: [widths[s]]
  BasicTensor<T> head_d_weight;         // [widths.back() x k^2]
  BasicTensor<T> head_d_bias;           // [k^2]
  BasicTensor<T> head_r_weight;
  BasicTensor<T> head_r_bias;

  // Every tensor in serialization order: stage kernels and biases interleaved,
  // then head_d weight/bias, then head_r weight/bias.
  std::vector<BasicTensor<T>*> tensors();
  std::vector<const BasicTensor<T>*> tensors() const;

  template <typename U>
  BasicEncoderWeights<U> cast() const {
    BasicEncoderWeights<U> out;
    for (const auto& t : kernels) out.kernels.push_back(t.template cast<U>());
    for (const auto& t : biases) out.biases.push_back(t.template cast<U>());
    out.head_d_weight = head_d_weight.template cast<U>();
    out.head_d_bias = head_d_bias.template cast<U>();
    out.head_r_weight = head_r_weight.template cast<U>();
    out.head_r_bias = head_r_bias.template cast<U>();
    return out;
  }

  bool operator==(const BasicEncoderWeights&) const = default;
};

using EncoderWeights = BasicEncoderWeights<float>;

// He-normal conv kernels from config.seed, zero conv biases, zero head weights
// and head biases equal to the row-major identity, so d = r = I_k for any input.
EncoderWeights init_weights(const EncoderConfig& config);

// Checks every tensor shape against the config.
void validate_weights(const EncoderConfig& config, const EncoderWeights& weights);

struct StyleParams {
  ColorMapMatrix d;  // normalizing
  ColorMapMatrix r;  // stylizing
};

// [3 x s x s] network input: HWC thumbnail transposed to CHW and shifted by -0.5.
template <typename T>
BasicTensor<T> encoder_input(const Thumbnail& thumbnail);

template <typename T>
struct EncoderVars {
  std::vector<typename Tape<T>::Var> kernels;
  std::vector<typename Tape<T>::Var> biases;
  typename Tape<T>::Var head_d_weight, head_d_bias, head_r_weight, head_r_bias;

  std::vector<typename Tape<T>::Var> all() const;
};

template <typename T>
EncoderVars<T> encoder_leaves(Tape<T>& tape, const BasicEncoderWeights<T>& weights);

// Records the forward pass; returns (d, r) as [k x k] nodes.
template <typename T>
std::pair<typename Tape<T>::Var, typename Tape<T>::Var> encoder_forward(
    Tape<T>& tape, const EncoderVars<T>& vars, const BasicTensor<T>& input, int k);

StyleParams encode(const Thumbnail& thumbnail, const EncoderConfig& config,
                   const EncoderWeights& weights);

// Reverse pass for given upstream gradients on d and r ([k x k] each).
// Returns gradients with the same layout as the weights.
template <typename T>
BasicEncoderWeights<T> encode_backward(const BasicTensor<T>& input, const EncoderConfig& config,
                                       const BasicEncoderWeights<T>& weights,
                                       const BasicTensor<T>& upstream_d,
                                       const BasicTensor<T>& upstream_r);

EncoderWeights encode_backward(const Thumbnail& thumbnail, const EncoderConfig& config,
                               const EncoderWeights& weights, const Tensor& upstream_d,
                               const Tensor& upstream_r);

}  // namespace chromap
