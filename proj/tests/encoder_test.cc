#include <gtest/gtest.h>

#include "chromap/encoder.h"
#include "gradcheck.h"
#include "support.h"

namespace chromap {
namespace {

using testing::random_image;
using testing::random_tensor;

EncoderConfig small_config() {
  EncoderConfig c;
  c.k = 3;
  c.thumbnail_size = 8;
  c.widths = {4, 6};
  c.seed = 7;
  return c;
}

// Randomizes every weight, including the heads, so the forward pass is not
// trivially the identity.
EncoderWeights random_weights(const EncoderConfig& c, std::uint64_t seed) {
  EncoderWeights w = init_weights(c);
  for (Tensor* t : w.tensors()) *t = random_tensor<float>(t->shape(), seed++, 0.3f);
  return w;
}

// Straight-line reference: explicit loops for each layer in double.
std::pair<std::vector<double>, std::vector<double>> reference_forward(const Image& thumb, const EncoderConfig& c,
                                                                      const EncoderWeights& w) {
  int size = thumb.height();
  int channels = 3;
  std::vector<double> act(static_cast<std::size_t>(3 * size * size));
  for (int ch = 0; ch < 3; ++ch) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) act[static_cast<std::size_t>((ch * size + y) * size + x)] = thumb.at(y, x, ch) - 0.5;
    }
  }
  for (std::size_t s = 0; s < c.widths.size(); ++s) {
    const int out_c = c.widths[s];
    const int out_size = (size + 1) / 2;
    std::vector<double> next(static_cast<std::size_t>(out_c * out_size * out_size));
    for (int o = 0; o < out_c; ++o) {
      for (int y = 0; y < out_size; ++y) {
        for (int x = 0; x < out_size; ++x) {
          double acc = w.biases[s][static_cast<std::size_t>(o)];
          for (int ch = 0; ch < channels; ++ch) {
            for (int dy = 0; dy < 3; ++dy) {
              for (int dx = 0; dx < 3; ++dx) {
                const int sy = 2 * y + dy - 1, sx = 2 * x + dx - 1;
                if (sy < 0 || sx < 0 || sy >= size || sx >= size) continue;
                acc += w.kernels[s][static_cast<std::size_t>(((o * channels + ch) * 3 + dy) * 3 + dx)] *
                       act[static_cast<std::size_t>((ch * size + sy) * size + sx)];
              }
            }
          }
          next[static_cast<std::size_t>((o * out_size + y) * out_size + x)] = std::max(0.0, acc);
        }
      }
    }
    act = std::move(next);
    channels = out_c;
    size = out_size;
  }
  std::vector<double> pooled(static_cast<std::size_t>(channels), 0.0);
  for (int ch = 0; ch < channels; ++ch) {
    for (int i = 0; i < size * size; ++i) pooled[static_cast<std::size_t>(ch)] += act[static_cast<std::size_t>(ch * size * size + i)];
    pooled[static_cast<std::size_t>(ch)] /= size * size;
  }
  const int kk = c.k * c.k;
  auto head = [&](const Tensor& weight, const Tensor& bias) {
    std::vector<double> out(static_cast<std::size_t>(kk));
    for (int j = 0; j < kk; ++j) {
      double acc = bias[static_cast<std::size_t>(j)];
      for (int i = 0; i < channels; ++i) acc += pooled[static_cast<std::size_t>(i)] * weight[static_cast<std::size_t>(i * kk + j)];
      out[static_cast<std::size_t>(j)] = acc;
    }
    return out;
  };
  return {head(w.head_d_weight, w.head_d_bias), head(w.head_r_weight, w.head_r_bias)};
}

TEST(EncoderConfig, Validation) {
  EncoderConfig c;
  EXPECT_NO_THROW(c.validate());
  c.thumbnail_size = 24;  // not a multiple of 16
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = EncoderConfig{};
  c.k = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = EncoderConfig{};
  c.widths = {};
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Encoder, DefaultSizeIsAboutHundredThousandWeights) {
  const EncoderWeights w = init_weights(EncoderConfig{});
  std::size_t n = 0;
  for (const Tensor* t : w.tensors()) n += t->size();
  EXPECT_GT(n, 90000u);
  EXPECT_LT(n, 200000u);
}

TEST(Encoder, IdentityInitEmitsIdentity) {
  const EncoderConfig c;
  const EncoderWeights w = init_weights(c);
  for (std::uint64_t seed : {1, 2, 3}) {
    const StyleParams p = encode(downsample(random_image(64, 64, seed), 64), c, w);
    EXPECT_EQ(p.d, ColorMapMatrix::identity(16));
    EXPECT_EQ(p.r, ColorMapMatrix::identity(16));
  }
}

TEST(Encoder, InitIsSeededAndDeterministic) {
  EncoderConfig c;
  EXPECT_EQ(init_weights(c), init_weights(c));
  EncoderConfig other = c;
  other.seed = 99;
  EXPECT_NE(init_weights(c).kernels[0], init_weights(other).kernels[0]);
}

TEST(Encoder, ForwardMatchesStraightLineReference) {
  const EncoderConfig c = small_config();
  const EncoderWeights w = random_weights(c, 50);
  const Image img = random_image(8, 8, 51);
  const StyleParams p = encode(downsample(img, 8), c, w);
  const auto [d, r] = reference_forward(img, c, w);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_NEAR(p.d.values()[i], d[i], 1e-5);
    EXPECT_NEAR(p.r.values()[i], r[i], 1e-5);
  }
}

TEST(Encoder, RejectsWrongThumbnailSize) {
  const EncoderConfig c = small_config();
  EXPECT_THROW(encode(downsample(random_image(16, 16, 1), 16), c, init_weights(c)), std::invalid_argument);
}

TEST(Encoder, ValidateWeightsCatchesShapeErrors) {
  const EncoderConfig c = small_config();
  EncoderWeights w = init_weights(c);
  EXPECT_NO_THROW(validate_weights(c, w));
  w.head_r_bias = Tensor({4});
  EXPECT_THROW(validate_weights(c, w), ShapeError);
}

TEST(Encoder, BackwardMatchesFiniteDifferences) {
  const EncoderConfig c = small_config();
  auto w = random_weights(c, 60).cast<double>();
  const Image img = random_image(8, 8, 61);
  const auto input = encoder_input<double>(downsample(img, 8));
  const auto up_d = random_tensor<double>({3, 3}, 62);
  const auto up_r = random_tensor<double>({3, 3}, 63);
  const auto grads = encode_backward<double>(input, c, w, up_d, up_r);

  auto objective = [&] {
    Tape<double> tape;
    const auto vars = encoder_leaves(tape, w);
    const auto [d, r] = encoder_forward(tape, vars, input, c.k);
    double s = 0;
    for (std::size_t i = 0; i < 9; ++i) s += tape.value(d)[i] * up_d[i] + tape.value(r)[i] * up_r[i];
    return s;
  };
  const auto params = w.tensors();
  const auto gparams = grads.tensors();
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t]->size(); ++i) {
      const double numeric = testing::central_difference(objective, &params[t]->data()[i]);
      EXPECT_LT(testing::relative_error((*gparams[t])[i], numeric), 1e-3) << "tensor " << t << " entry " << i;
    }
  }
}

}  // namespace
}  // namespace chromap
