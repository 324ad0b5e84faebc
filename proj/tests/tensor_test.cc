#include <gtest/gtest.h>

#include "chromap/adam.h"
#include "chromap/autodiff.h"
#include "chromap/ops.h"
#include "gradcheck.h"
#include "support.h"

namespace chromap {
namespace {

using testing::check_gradients;
using testing::GraphFn;
using testing::random_tensor;
using testing::Tape64;
using testing::Var64;

// Reduces an op output to a scalar that depends on every element.
Var64 reduce(Tape64& tape, Var64 out, std::uint64_t seed) {
  const Tensor64 target = random_tensor<double>(tape.value(out).shape(), seed);
  return ad::mean_squared_error(tape, out, tape.leaf(target));
}

TEST(Tensor, ShapeAndSize) {
  const Tensor t({2, 3, 4});
  EXPECT_EQ(t.rank(), 3u);
  EXPECT_EQ(t.size(), 24u);
  EXPECT_THROW(Tensor({2, 2}, std::vector<float>(3)), ShapeError);
}

TEST(Matmul, IdentityAndHandArithmetic) {
  const Tensor eye({2, 2}, {1, 0, 0, 1});
  const Tensor b({2, 2}, {3, 4, 5, 6});
  EXPECT_EQ(ops::matmul(eye, b), b);
  EXPECT_EQ(ops::matmul(Tensor({1, 2}, {1, 2}), Tensor({2, 1}, {3, 4})), Tensor({1, 1}, {11}));
  EXPECT_THROW(ops::matmul(Tensor({2, 3}), Tensor({2, 3})), ShapeError);
}

TEST(Matmul, MatchesNaiveTripleLoop) {
  const auto a = random_tensor<double>({5, 7}, 1);
  const auto b = random_tensor<double>({7, 3}, 2);
  const auto c = ops::matmul(a, b);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0;
      for (std::size_t l = 0; l < 7; ++l) s += a[i * 7 + l] * b[l * 3 + j];
      EXPECT_NEAR(c[i * 3 + j], s, 1e-12);
    }
  }
}

TEST(Matmul, AdjointsMatchFiniteDifferences) {
  auto a = random_tensor<double>({3, 4}, 3);
  auto b = random_tensor<double>({4, 2}, 4);
  check_gradients({&a, &b}, [](Tape64& t, const std::vector<Var64>& v) {
    return reduce(t, ad::matmul(t, v[0], v[1]), 5);
  }, 1e-6);
}

// Direct stride-2, pad-1, 3x3 cross-correlation.
Tensor64 conv_oracle(const Tensor64& x, const Tensor64& k, const Tensor64& b) {
  const std::size_t cin = x.dim(0), h = x.dim(1), w = x.dim(2), cout = k.dim(0);
  const std::size_t oh = (h + 1) / 2, ow = (w + 1) / 2;
  Tensor64 out({cout, oh, ow});
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t xx = 0; xx < ow; ++xx) {
        double s = b[o];
        for (std::size_t c = 0; c < cin; ++c) {
          for (int dy = 0; dy < 3; ++dy) {
            for (int dx = 0; dx < 3; ++dx) {
              const long sy = static_cast<long>(2 * y) + dy - 1;
              const long sx = static_cast<long>(2 * xx) + dx - 1;
              if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) || sx >= static_cast<long>(w)) continue;
              s += k[((o * cin + c) * 3 + dy) * 3 + dx] * x[(c * h + sy) * w + sx];
            }
          }
        }
        out[(o * oh + y) * ow + xx] = s;
      }
    }
  }
  return out;
}

TEST(Conv2d, DeltaKernelSamplesEvenCoordinates) {
  Tensor x({1, 4, 4});
  for (std::size_t i = 0; i < 16; ++i) x[i] = static_cast<float>(i);
  Tensor k({1, 1, 3, 3});
  k[4] = 1.0f;
  const Tensor y = ops::conv2d(x, k, Tensor({1}));
  ASSERT_EQ(y.shape(), (Shape{1, 2, 2}));
  EXPECT_EQ(y, Tensor({1, 2, 2}, {0, 2, 8, 10}));
}

TEST(Conv2d, ZeroInputGivesBias) {
  const Tensor y = ops::conv2d(Tensor({2, 5, 5}), random_tensor<float>({3, 2, 3, 3}, 1), Tensor({3}, {1, 2, 3}));
  ASSERT_EQ(y.shape(), (Shape{3, 3, 3}));
  for (std::size_t o = 0; o < 3; ++o) {
    for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(y[o * 9 + i], static_cast<float>(o + 1));
  }
}

TEST(Conv2d, MatchesDirectLoopOnOddSizes) {
  const auto x = random_tensor<double>({3, 7, 6}, 6);
  const auto k = random_tensor<double>({4, 3, 3, 3}, 7);
  const auto b = random_tensor<double>({4}, 8);
  const auto got = ops::conv2d(x, k, b);
  const auto want = conv_oracle(x, k, b);
  ASSERT_EQ(got.shape(), want.shape());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(Conv2d, AdjointsMatchFiniteDifferences) {
  auto x = random_tensor<double>({3, 8, 8}, 9);
  auto k = random_tensor<double>({4, 3, 3, 3}, 10);
  auto b = random_tensor<double>({4}, 11);
  check_gradients({&x, &k, &b}, [](Tape64& t, const std::vector<Var64>& v) {
    return reduce(t, ad::conv2d(t, v[0], v[1], v[2]), 12);
  }, 1e-3);
}

TEST(Relu, ValuesAndGradient) {
  EXPECT_EQ(ops::relu(Tensor({3}, {-1, 0, 2})), Tensor({3}, {0, 0, 2}));
  // Keep entries away from the kink so the finite difference is well defined.
  auto x = random_tensor<double>({10}, 13);
  for (double& v : x.data()) v += v >= 0 ? 0.1 : -0.1;
  check_gradients({&x}, [](Tape64& t, const std::vector<Var64>& v) { return reduce(t, ad::relu(t, v[0]), 14); },
                  1e-3);
}

TEST(GlobalAvgPool, ConstantChannelAndGradient) {
  Tensor x({2, 3, 3});
  for (std::size_t i = 0; i < 9; ++i) x[i] = 0.25f;
  for (std::size_t i = 9; i < 18; ++i) x[i] = -2.0f;
  EXPECT_EQ(ops::global_avg_pool(x), Tensor({2}, {0.25f, -2.0f}));
  auto xd = random_tensor<double>({3, 4, 5}, 15);
  check_gradients({&xd}, [](Tape64& t, const std::vector<Var64>& v) {
    return reduce(t, ad::global_avg_pool(t, v[0]), 16);
  }, 1e-3);
}

TEST(Linear, ZeroWeightGivesBiasAndGradients) {
  const Tensor b({3}, {1, 2, 3});
  EXPECT_EQ(ops::linear(Tensor({4}, {1, 2, 3, 4}), Tensor({4, 3}), b), b);
  auto x = random_tensor<double>({5}, 17);
  auto w = random_tensor<double>({5, 3}, 18);
  auto bd = random_tensor<double>({3}, 19);
  check_gradients({&x, &w, &bd}, [](Tape64& t, const std::vector<Var64>& v) {
    return reduce(t, ad::linear(t, v[0], v[1], v[2]), 20);
  }, 1e-3);
  EXPECT_THROW(ops::linear(Tensor({4}), Tensor({3, 3}), b), ShapeError);
}

TEST(Losses, GradientsMatchFiniteDifferences) {
  auto a = random_tensor<double>({4, 3}, 21);
  auto b = random_tensor<double>({4, 3}, 22);
  check_gradients({&a, &b}, [](Tape64& t, const std::vector<Var64>& v) {
    return ad::mean_squared_error(t, v[0], v[1]);
  }, 1e-3);
  check_gradients({&a, &b}, [](Tape64& t, const std::vector<Var64>& v) {
    return ad::mean_abs_error(t, v[0], v[1]);
  }, 1e-3);
}

TEST(Tape, ReshapeAddScaleGradients) {
  auto a = random_tensor<double>({2, 6}, 23);
  auto b = random_tensor<double>({3, 4}, 24);
  check_gradients({&a, &b}, [](Tape64& t, const std::vector<Var64>& v) {
    const Var64 ra = ad::reshape(t, v[0], {3, 4});
    return reduce(t, ad::scale(t, ad::add(t, ra, v[1]), 0.7), 25);
  }, 1e-3);
}

TEST(Tape, BackwardVisitsEachOpOnceInReverse) {
  Tape<double> tape;
  const auto x = tape.leaf(random_tensor<double>({2, 2}, 26));
  const auto y = ad::matmul(tape, x, x);
  const auto z = ad::relu(tape, y);
  const auto w = ad::add(tape, z, y);
  const auto loss = ad::mean_squared_error(tape, w, tape.leaf(Tensor64({2, 2})));
  tape.backward(loss);
  EXPECT_EQ(tape.last_visit_order(), (std::vector<std::size_t>{loss.id, w.id, z.id, y.id}));
}

TEST(Tape, SharedInputsAccumulateAndSumOfLossesIsSumOfGradients) {
  auto a = random_tensor<double>({3, 3}, 27);
  auto t1 = random_tensor<double>({3, 3}, 28);
  auto t2 = random_tensor<double>({3, 3}, 29);
  auto grad_of = [&](int which) {
    Tape<double> tape;
    const auto va = tape.leaf(a);
    const auto l1 = ad::mean_squared_error(tape, ad::matmul(tape, va, va), tape.leaf(t1));
    const auto l2 = ad::mean_abs_error(tape, va, tape.leaf(t2));
    tape.backward(which == 0 ? l1 : which == 1 ? l2 : ad::add(tape, l1, l2));
    return tape.grad(va);
  };
  const auto g1 = grad_of(0), g2 = grad_of(1), g12 = grad_of(2);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(g12[i], g1[i] + g2[i], 1e-14);
}

TEST(Tape, ReplayIsBitwiseDeterministic) {
  auto run = [] {
    Tape<float> tape;
    const auto x = tape.leaf(random_tensor<float>({3, 8, 8}, 30));
    const auto k = tape.leaf(random_tensor<float>({4, 3, 3, 3}, 31));
    const auto b = tape.leaf(random_tensor<float>({4}, 32));
    const auto out = ad::global_avg_pool(tape, ad::relu(tape, ad::conv2d(tape, x, k, b)));
    tape.backward(ad::mean_squared_error(tape, out, tape.leaf(Tensor({4}))));
    return std::pair{tape.grad(k), tape.grad(x)};
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Tensor p({3}, {1, 2, 3});
  const Tensor before = p;
  Tensor g({3});
  std::vector<Tensor*> params{&p};
  std::vector<const Tensor*> grads{&g};
  AdamState state = make_adam_state(params);
  for (int i = 0; i < 3; ++i) adam_step(params, grads, state, {});
  EXPECT_EQ(p, before);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Tensor p({1}, {0.5f});
  Tensor g({1}, {1.0f});
  std::vector<Tensor*> params{&p};
  std::vector<const Tensor*> grads{&g};
  AdamState state = make_adam_state(params);
  adam_step(params, grads, state, {});
  // m_hat = 1, v_hat = 1, step = lr / (1 + eps).
  EXPECT_NEAR(p[0], 0.5 - 3e-4 / (1 + 1e-8), 1e-7);
  EXPECT_EQ(state.step, 1);
}

TEST(Adam, MatchesReferenceRecurrence) {
  Tensor p({2}, {1.0f, -0.5f});
  std::vector<Tensor*> params{&p};
  AdamState state = make_adam_state(params);
  double ref[2] = {1.0, -0.5}, m[2] = {0, 0}, v[2] = {0, 0};
  for (int t = 1; t <= 5; ++t) {
    Tensor g({2}, {static_cast<float>(0.3 * t), static_cast<float>(-0.2)});
    std::vector<const Tensor*> grads{&g};
    adam_step(params, grads, state, {});
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      ref[i] -= 3e-4 * mh / (std::sqrt(vh) + 1e-8);
      EXPECT_NEAR(p[i], ref[i], 1e-6);
    }
  }
}

TEST(Adam, DescendsQuadratic) {
  Tensor theta({1}, {1.0f});
  std::vector<Tensor*> params{&theta};
  AdamState state = make_adam_state(params);
  AdamHyper hyper;
  hyper.lr = 0.05f;
  float prev = theta[0] * theta[0];
  for (int i = 0; i < 10; ++i) {
    Tensor g({1}, {2.0f * theta[0]});
    std::vector<const Tensor*> grads{&g};
    adam_step(params, grads, state, hyper);
    const float f = theta[0] * theta[0];
    EXPECT_LT(f, prev);
    prev = f;
  }
}

TEST(Adam, RejectsShapeMismatch) {
  Tensor p({2});
  Tensor g({3});
  std::vector<Tensor*> params{&p};
  std::vector<const Tensor*> grads{&g};
  AdamState state = make_adam_state(params);
  EXPECT_THROW(adam_step(params, grads, state, {}), ShapeError);
}

}  // namespace
}  // namespace chromap
