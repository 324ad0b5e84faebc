#include <gtest/gtest.h>

#include <fstream>

#include "chromap/checkpoint.h"
#include "chromap/raster.h"
#include "chromap/synth.h"
#include "chromap/trainer.h"
#include "support.h"

namespace chromap {
namespace {

using testing::random_image;
using testing::TempDir;

TrainConfig tiny_config() {
  TrainConfig c;
  c.k = 4;
  c.thumbnail_size = 16;
  c.image_size = 16;
  c.batch_size = 2;
  c.steps = 6;
  c.seed = 3;
  return c;
}

std::vector<Image> tiny_images(int n, int size = 16) {
  std::vector<Image> out;
  for (int i = 0; i < n; ++i) out.push_back(synth_image(size, size, 500 + static_cast<std::uint64_t>(i)));
  return out;
}

PairFn identity_pairs() {
  return [](const Image& img, std::uint64_t) { return std::pair{img, img}; };
}

TEST(Losses, ConsistencyOracle) {
  EXPECT_EQ(consistency_loss(Image(3, 3, 0.4f), Image(3, 3, 0.4f)), 0.0);
  EXPECT_DOUBLE_EQ(consistency_loss(Image(3, 3, 0.0f), Image(3, 3, 1.0f)), 1.0);
  const Image a = random_image(5, 7, 1, -1.0f, 2.0f), b = random_image(5, 7, 2, -1.0f, 2.0f);
  double s = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - b.data()[i];
    s += d * d;
  }
  EXPECT_NEAR(consistency_loss(a, b), s / static_cast<double>(a.data().size()), 1e-7);
  EXPECT_THROW(consistency_loss(Image(2, 2), Image(2, 3)), std::invalid_argument);
}

TEST(Losses, ReconstructionOracle) {
  const Image i = random_image(4, 4, 3), j = random_image(4, 4, 4);
  EXPECT_EQ(reconstruction_loss(i, i, j, j), 0.0);
  Image shifted = i;
  for (float& v : shifted.data()) v += 0.1f;
  EXPECT_NEAR(reconstruction_loss(shifted, i, j, j), 0.1, 1e-6);

  const Image yi = random_image(6, 5, 5), yj = random_image(6, 5, 6), ii = random_image(6, 5, 7),
              ij = random_image(6, 5, 8);
  double a = 0, b = 0;
  for (std::size_t n = 0; n < yi.data().size(); ++n) {
    a += std::abs(static_cast<double>(yi.data()[n]) - ii.data()[n]);
    b += std::abs(static_cast<double>(yj.data()[n]) - ij.data()[n]);
  }
  const double count = static_cast<double>(yi.data().size());
  EXPECT_NEAR(reconstruction_loss(yi, ii, yj, ij), a / count + b / count, 1e-7);
  EXPECT_THROW(reconstruction_loss(yi, ii, Image(1, 1), ij), std::invalid_argument);
}

TEST(TrainConfig, LearningRateSchedule) {
  TrainConfig c;
  c.steps = 2000;
  EXPECT_FLOAT_EQ(c.lr_at(0), 3e-4f);
  EXPECT_FLOAT_EQ(c.lr_at(1499), 3e-4f);
  EXPECT_FLOAT_EQ(c.lr_at(1500), 3e-5f);
  EXPECT_FLOAT_EQ(c.lr_at(1999), 3e-5f);
  c.lr = -1.0f;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(TrainStep, IdentityPairsAtInitLeaveEverythingUnchanged) {
  TrainConfig c = tiny_config();
  c.lambda = 0.0f;
  Checkpoint ck = initial_checkpoint(c.encoder_config());
  const ModelParams before = ck.model;
  const auto images = tiny_images(2);
  const LossReport r = train_step(images, ck, c, identity_pairs());
  EXPECT_EQ(r.total, 0.0);
  EXPECT_EQ(r.l_rec, 0.0);
  EXPECT_EQ(r.l_con, 0.0);
  EXPECT_EQ(ck.model, before);
  EXPECT_EQ(ck.step, 1);
}

TEST(TrainStep, ReportsAreDeterministicAndConsistent) {
  const TrainConfig c = tiny_config();
  const auto images = tiny_images(2);
  Checkpoint a = initial_checkpoint(c.encoder_config());
  Checkpoint b = a;
  for (int s = 0; s < 3; ++s) {
    const LossReport ra = train_step(images, a, c, default_pairs());
    const LossReport rb = train_step(images, b, c, default_pairs());
    EXPECT_EQ(ra, rb);
    EXPECT_GE(ra.l_rec, 0.0);
    EXPECT_GE(ra.l_con, 0.0);
    EXPECT_NEAR(ra.total, ra.l_rec + c.lambda * ra.l_con, 1e-6);
  }
  EXPECT_EQ(a, b);
}

TEST(TrainStep, TwentyStepsReduceLoss) {
  TrainConfig c = tiny_config();
  c.lr = 3e-3f;
  c.steps = 20;
  const auto images = tiny_images(2);
  Checkpoint ck = initial_checkpoint(c.encoder_config());
  // Fixed pairs so that the same objective is measured at both ends.
  const PairFn fixed = [](const Image& img, std::uint64_t) { return make_pair(img, 77); };
  const double first = train_step(images, ck, c, fixed).total;
  double last = first;
  for (int s = 1; s <= 20; ++s) last = train_step(images, ck, c, fixed).total;
  EXPECT_LT(last, first);
}

TEST(TrainStep, NonFiniteLossAborts) {
  const TrainConfig c = tiny_config();
  Checkpoint ck = initial_checkpoint(c.encoder_config());
  ck.model.normalizing.p[0] = std::numeric_limits<float>::infinity();
  const Checkpoint before = ck;
  EXPECT_THROW(train_step(tiny_images(2), ck, c, default_pairs()), NonFiniteLossError);
  EXPECT_EQ(ck.step, before.step);
}

// Builds the double-precision loss graph for one fixed pair.
struct EndToEnd {
  EncoderConfig config;
  Tensor64 pn, qn, ps, qs;
  BasicEncoderWeights<double> encoder;
  std::vector<PairSample<double>> samples;
  double lambda = 10.0;

  double value() {
    Tape<double> tape;
    const auto params = graph_leaves(tape, encoder, pn, qn, ps, qs);
    return tape.value(batch_loss<double>(tape, params, samples, config.k, lambda).total)[0];
  }
  std::vector<double*> parameter_entries(std::size_t tensor) {
    std::vector<Tensor64*> ts = encoder.tensors();
    ts.insert(ts.end(), {&pn, &qn, &ps, &qs});
    std::vector<double*> out;
    for (double& v : ts[tensor]->data()) out.push_back(&v);
    return out;
  }
};

TEST(TrainStep, EndToEndGradientMatchesFiniteDifferences) {
  EndToEnd e;
  e.config.k = 2;
  e.config.thumbnail_size = 8;
  e.config.widths = {3, 4};
  e.config.seed = 5;
  ModelParams model = init_model(e.config);
  // Move away from the identity point, where the L1 terms sit on their kink.
  std::uint64_t seed = 90;
  for (Tensor* t : model.trainable()) {
    const Tensor noise = testing::random_tensor<float>(t->shape(), seed++, 0.3f);
    for (std::size_t i = 0; i < t->size(); ++i) (*t)[i] += noise[i];
  }
  e.encoder = model.encoder.cast<double>();
  e.pn = model.normalizing.p.cast<double>();
  e.qn = model.normalizing.q.cast<double>();
  e.ps = model.stylizing.p.cast<double>();
  e.qs = model.stylizing.q.cast<double>();
  const auto [ii, ij] = make_pair(random_image(8, 8, 91), 92);
  e.samples.push_back(make_sample<double>(ii, ij, 8));

  Tape<double> tape;
  const auto params = graph_leaves(tape, e.encoder, e.pn, e.qn, e.ps, e.qs);
  tape.backward(batch_loss<double>(tape, params, e.samples, e.config.k, e.lambda).total);
  const auto leaves = params.all();
  ASSERT_EQ(leaves.size(), 2 * e.config.widths.size() + 8);
  double worst = 0;
  for (std::size_t t = 0; t < leaves.size(); ++t) {
    const Tensor64 grad = tape.grad(leaves[t]);
    const auto entries = e.parameter_entries(t);
    ASSERT_EQ(entries.size(), grad.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const double numeric = testing::central_difference([&] { return e.value(); }, entries[i], 1e-6);
      const double err = testing::relative_error(grad[i], numeric);
      worst = std::max(worst, err);
      EXPECT_LT(err, 1e-3) << "tensor " << t << " entry " << i << " analytic " << grad[i] << " numeric " << numeric;
    }
  }
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(TrainStep, SwappingPairIsSymmetric) {
  const TrainConfig c = tiny_config();
  ModelParams model = init_model(c.encoder_config());
  std::uint64_t seed = 40;
  for (Tensor* t : model.trainable()) {
    const Tensor noise = testing::random_tensor<float>(t->shape(), seed++, 0.2f);
    for (std::size_t i = 0; i < t->size(); ++i) (*t)[i] += noise[i];
  }
  const auto [a, b] = make_pair(synth_image(16, 16, 9), 10);
  auto loss_of = [&](const Image& x, const Image& y) {
    Tape<double> tape;
    const auto params = graph_leaves(tape, model.encoder.cast<double>(), model.normalizing.p.cast<double>(),
                                     model.normalizing.q.cast<double>(), model.stylizing.p.cast<double>(),
                                     model.stylizing.q.cast<double>());
    const std::vector<PairSample<double>> s{make_sample<double>(x, y, 16)};
    return tape.value(batch_loss<double>(tape, params, s, c.k, 10.0).total)[0];
  };
  EXPECT_NEAR(loss_of(a, b), loss_of(b, a), 1e-12);
}

TEST(Checkpoint, RoundtripIsBitwise) {
  TrainConfig c = tiny_config();
  c.steps = 3;
  const Checkpoint ck = train(c, tiny_images(4)).checkpoint;
  EXPECT_EQ(decode_checkpoint(encode_checkpoint(ck)), ck);
  EXPECT_EQ(encode_checkpoint(decode_checkpoint(encode_checkpoint(ck))), encode_checkpoint(ck));
  TempDir dir("ckpt");
  save_checkpoint(ck, dir.file("m.npck"));
  EXPECT_EQ(load_checkpoint(dir.file("m.npck")), ck);
}

CheckpointErrc decode_error(std::vector<std::uint8_t> bytes) {
  try {
    decode_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode succeeded";
  return CheckpointErrc::kInvalid;
}

TEST(Checkpoint, ErrorsAreDistinct) {
  const auto good = encode_checkpoint(initial_checkpoint(tiny_config().encoder_config()));
  auto bad = good;
  bad[0] = 'X';
  EXPECT_EQ(decode_error(bad), CheckpointErrc::kBadMagic);
  bad = good;
  bad[4] = 9;
  EXPECT_EQ(decode_error(bad), CheckpointErrc::kVersionMismatch);
  EXPECT_EQ(decode_error({good.begin(), good.begin() + static_cast<long>(good.size() / 2)}),
            CheckpointErrc::kTruncated);
  try {
    load_checkpoint("/nonexistent/dir/x.npck");
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_EQ(e.code(), CheckpointErrc::kMissingFile);
  }
}

TEST(Train, ZeroStepsReturnsInitialization) {
  TrainConfig c = tiny_config();
  c.steps = 0;
  const TrainResult r = train(c, tiny_images(2));
  EXPECT_EQ(r.checkpoint, initial_checkpoint(c.encoder_config()));
  EXPECT_TRUE(r.log.empty());
}

TEST(Train, SameSeedSameCheckpointBytes) {
  const TrainConfig c = tiny_config();
  const auto a = train(c, tiny_images(5));
  const auto b = train(c, tiny_images(5));
  EXPECT_EQ(encode_checkpoint(a.checkpoint), encode_checkpoint(b.checkpoint));
  EXPECT_EQ(a.log, b.log);
  TrainConfig other = c;
  other.seed = 4;
  EXPECT_NE(encode_checkpoint(train(other, tiny_images(5)).checkpoint), encode_checkpoint(a.checkpoint));
}

TEST(Train, DirectoryRunWritesLogAndCheckpointAndSkipsBadFiles) {
  TempDir dir("train");
  write_synthetic_dataset(dir.file("imgs"), 3, 20, 1);
  std::ofstream(dir.file("imgs/zz_broken.png")) << "not a png";
  TrainConfig c = tiny_config();
  c.steps = 4;
  std::vector<std::string> warnings;
  TrainOptions opts;
  opts.checkpoint_path = dir.file("out.npck");
  opts.log_path = dir.file("loss.csv");
  opts.on_warning = [&](const std::string& w) { warnings.push_back(w); };
  const TrainResult r = train(c, dir.file("imgs"), opts);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_EQ(load_checkpoint(opts.checkpoint_path), r.checkpoint);
  EXPECT_EQ(r.checkpoint.step, 4);

  std::ifstream log(opts.log_path);
  std::string line;
  std::getline(log, line);
  EXPECT_EQ(line, "step,l_rec,l_con,total,lr");
  int rows = 0;
  while (std::getline(log, line)) ++rows;
  EXPECT_EQ(rows, 4);

  c.batch_size = 8;
  EXPECT_THROW(train(c, dir.file("imgs"), opts), std::runtime_error);
}

}  // namespace
}  // namespace chromap
