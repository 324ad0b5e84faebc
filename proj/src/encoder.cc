#include "chromap/encoder.h"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace chromap {

void EncoderConfig::validate() const {
  if (k < 1) throw std::invalid_argument("encoder k must be >= 1");
  if (widths.empty()) throw std::invalid_argument("encoder needs at least one stage");
  for (int w : widths) {
    if (w < 1) throw std::invalid_argument("encoder stage widths must be positive");
  }
  if (stages() > 30) throw std::invalid_argument("too many encoder stages");
  const int factor = 1 << stages();
  if (thumbnail_size < factor || thumbnail_size % factor != 0) {
    throw std::invalid_argument("thumbnail size " + std::to_string(thumbnail_size) +
                                " must be a positive multiple of 2^stages = " +
                                std::to_string(factor));
  }
}

template <typename T>
std::vector<BasicTensor<T>*> BasicEncoderWeights<T>::tensors() {
  std::vector<BasicTensor<T>*> out;
  for (std::size_t s = 0; s < kernels.size(); ++s) {
    out.push_back(&kernels[s]);
    out.push_back(&biases[s]);
  }
  out.insert(out.end(), {&head_d_weight, &head_d_bias, &head_r_weight, &head_r_bias});
  return out;
}

template <typename T>
std::vector<const BasicTensor<T>*> BasicEncoderWeights<T>::tensors() const {
  std::vector<const BasicTensor<T>*> out;
  for (std::size_t s = 0; s < kernels.size(); ++s) {
    out.push_back(&kernels[s]);
    out.push_back(&biases[s]);
  }
  out.insert(out.end(), {&head_d_weight, &head_d_bias, &head_r_weight, &head_r_bias});
  return out;
}

template struct BasicEncoderWeights<float>;
template struct BasicEncoderWeights<double>;

namespace {

std::vector<Shape> expected_shapes(const EncoderConfig& config) {
  std::vector<Shape> shapes;
  std::size_t c_in = 3;
  for (int w : config.widths) {
    const auto c_out = static_cast<std::size_t>(w);
    shapes.push_back({c_out, c_in, 3, 3});
    shapes.push_back({c_out});
    c_in = c_out;
  }
  const auto kk = static_cast<std::size_t>(config.k) * static_cast<std::size_t>(config.k);
  shapes.push_back({c_in, kk});
  shapes.push_back({kk});
  shapes.push_back({c_in, kk});
  shapes.push_back({kk});
  return shapes;
}

}  // namespace

EncoderWeights init_weights(const EncoderConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  EncoderWeights w;
  std::size_t c_in = 3;
  for (int width : config.widths) {
    const auto c_out = static_cast<std::size_t>(width);
    Tensor kernel({c_out, c_in, 3, 3});
    std::normal_distribution<float> he(0.0f, std::sqrt(2.0f / static_cast<float>(c_in * 9)));
    for (float& v : kernel.data()) v = he(rng);
    w.kernels.push_back(std::move(kernel));
    w.biases.emplace_back(Shape{c_out});
    c_in = c_out;
  }
  const auto k = static_cast<std::size_t>(config.k);
  Tensor identity({k * k});
  for (std::size_t i = 0; i < k; ++i) identity[i * k + i] = 1.0f;
  w.head_d_weight = Tensor({c_in, k * k});
  w.head_d_bias = identity;
  w.head_r_weight = Tensor({c_in, k * k});
  w.head_r_bias = identity;
  return w;
}

void validate_weights(const EncoderConfig& config, const EncoderWeights& weights) {
  config.validate();
  if (weights.kernels.size() != config.widths.size() || weights.biases.size() != config.widths.size()) {
    throw ShapeError("encoder weights have " + std::to_string(weights.kernels.size()) +
                     " stages, config has " + std::to_string(config.widths.size()));
  }
  const auto shapes = expected_shapes(config);
  const auto tensors = weights.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    require_shape(tensors[i]->shape(), shapes[i], "encoder weight");
    for (float v : tensors[i]->data()) {
      if (!std::isfinite(v)) throw std::invalid_argument("encoder weights contain a non-finite value");
    }
  }
}

template <typename T>
BasicTensor<T> encoder_input(const Thumbnail& thumbnail) {
  const Image& img = thumbnail.image();
  const auto s = static_cast<std::size_t>(thumbnail.side());
  BasicTensor<T> out({3, s, s});
  for (std::size_t y = 0; y < s; ++y) {
    for (std::size_t x = 0; x < s; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        out[(c * s + y) * s + x] =
            static_cast<T>(img.at(static_cast<int>(y), static_cast<int>(x), static_cast<int>(c))) - T(0.5);
      }
    }
  }
  return out;
}

template <typename T>
std::vector<typename Tape<T>::Var> EncoderVars<T>::all() const {
  std::vector<typename Tape<T>::Var> out;
  for (std::size_t s = 0; s < kernels.size(); ++s) {
    out.push_back(kernels[s]);
    out.push_back(biases[s]);
  }
  out.insert(out.end(), {head_d_weight, head_d_bias, head_r_weight, head_r_bias});
  return out;
}

template <typename T>
EncoderVars<T> encoder_leaves(Tape<T>& tape, const BasicEncoderWeights<T>& weights) {
  EncoderVars<T> vars;
  for (std::size_t s = 0; s < weights.kernels.size(); ++s) {
    vars.kernels.push_back(tape.leaf(weights.kernels[s]));
    vars.biases.push_back(tape.leaf(weights.biases[s]));
  }
  vars.head_d_weight = tape.leaf(weights.head_d_weight);
  vars.head_d_bias = tape.leaf(weights.head_d_bias);
  vars.head_r_weight = tape.leaf(weights.head_r_weight);
  vars.head_r_bias = tape.leaf(weights.head_r_bias);
  return vars;
}

template <typename T>
std::pair<typename Tape<T>::Var, typename Tape<T>::Var> encoder_forward(
    Tape<T>& tape, const EncoderVars<T>& vars, const BasicTensor<T>& input, int k) {
  auto x = tape.leaf(input);
  for (std::size_t s = 0; s < vars.kernels.size(); ++s) {
    x = ad::relu(tape, ad::conv2d(tape, x, vars.kernels[s], vars.biases[s]));
  }
  const auto pooled = ad::global_avg_pool(tape, x);
  const auto kk = static_cast<std::size_t>(k);
  const auto d = ad::reshape(tape, ad::linear(tape, pooled, vars.head_d_weight, vars.head_d_bias), {kk, kk});
  const auto r = ad::reshape(tape, ad::linear(tape, pooled, vars.head_r_weight, vars.head_r_bias), {kk, kk});
  return {d, r};
}

StyleParams encode(const Thumbnail& thumbnail, const EncoderConfig& config,
                   const EncoderWeights& weights) {
  if (thumbnail.side() != config.thumbnail_size) {
    throw std::invalid_argument("thumbnail side " + std::to_string(thumbnail.side()) +
                                " does not match encoder input size " +
                                std::to_string(config.thumbnail_size));
  }
  Tape<float> tape;
  const auto vars = encoder_leaves(tape, weights);
  const auto [d, r] = encoder_forward(tape, vars, encoder_input<float>(thumbnail), config.k);
  const auto values = [&](auto v) {
    const auto data = tape.value(v).data();
    return std::vector<float>(data.begin(), data.end());
  };
  return {ColorMapMatrix(config.k, values(d)), ColorMapMatrix(config.k, values(r))};
}

template <typename T>
BasicEncoderWeights<T> encode_backward(const BasicTensor<T>& input, const EncoderConfig& config,
                                       const BasicEncoderWeights<T>& weights,
                                       const BasicTensor<T>& upstream_d,
                                       const BasicTensor<T>& upstream_r) {
  const auto kk = static_cast<std::size_t>(config.k);
  require_shape(upstream_d.shape(), {kk, kk}, "encode_backward upstream d");
  require_shape(upstream_r.shape(), {kk, kk}, "encode_backward upstream r");
  Tape<T> tape;
  const auto vars = encoder_leaves(tape, weights);
  const auto [d, r] = encoder_forward(tape, vars, input, config.k);
  tape.grad(d) = upstream_d;
  tape.grad(r) = upstream_r;
  tape.backward_seeded();

  BasicEncoderWeights<T> grads = weights;
  const auto leaves = vars.all();
  const auto out = grads.tensors();
  for (std::size_t i = 0; i < leaves.size(); ++i) *out[i] = tape.grad(leaves[i]);
  return grads;
}

EncoderWeights encode_backward(const Thumbnail& thumbnail, const EncoderConfig& config,
                               const EncoderWeights& weights, const Tensor& upstream_d,
                               const Tensor& upstream_r) {
  return encode_backward<float>(encoder_input<float>(thumbnail), config, weights, upstream_d,
                                upstream_r);
}

#define CHROMAP_INSTANTIATE_ENCODER(T)                                                          \
  template BasicTensor<T> encoder_input<T>(const Thumbnail&);                                   \
  template struct EncoderVars<T>;                                                               \
  template EncoderVars<T> encoder_leaves<T>(Tape<T>&, const BasicEncoderWeights<T>&);           \
  template std::pair<typename Tape<T>::Var, typename Tape<T>::Var> encoder_forward<T>(          \
      Tape<T>&, const EncoderVars<T>&, const BasicTensor<T>&, int);                             \
  template BasicEncoderWeights<T> encode_backward<T>(const BasicTensor<T>&, const EncoderConfig&, \
                                                     const BasicEncoderWeights<T>&,             \
                                                     const BasicTensor<T>&, const BasicTensor<T>&);

CHROMAP_INSTANTIATE_ENCODER(float)
CHROMAP_INSTANTIATE_ENCODER(double)

#undef CHROMAP_INSTANTIATE_ENCODER

}  // namespace chromap
