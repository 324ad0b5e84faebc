#include "chromap/trainer.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "chromap/raster.h"
#include "chromap/resample.h"

namespace chromap {

void TrainConfig::validate() const {
  if (!(lambda >= 0.0f) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be >= 0");
  if (!(lr > 0.0f) || !std::isfinite(lr)) throw std::invalid_argument("learning rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (!(decay_at >= 0.0 && decay_at <= 1.0)) throw std::invalid_argument("decay_at must lie in [0, 1]");
  if (!(decay_factor > 0.0f)) throw std::invalid_argument("decay factor must be > 0");
  if (image_size < 1) throw std::invalid_argument("image size must be >= 1");
  encoder_config().validate();
}

EncoderConfig TrainConfig::encoder_config() const {
  EncoderConfig c;
  c.k = k;
  c.thumbnail_size = thumbnail_size;
  c.seed = seed;
  return c;
}

float TrainConfig::lr_at(std::int64_t step) const {
  const auto boundary = static_cast<std::int64_t>(std::floor(decay_at * static_cast<double>(steps)));
  return step >= boundary ? lr * decay_factor : lr;
}

double consistency_loss(const Image& z_i, const Image& z_j) { return mean_squared_diff(z_i, z_j); }

double reconstruction_loss(const Image& y_i, const Image& i_i, const Image& y_j, const Image& i_j) {
  return mean_abs_diff(y_i, i_i) + mean_abs_diff(y_j, i_j);
}

PairFn default_pairs(std::vector<Lut3D> bank) {
  return [bank = std::move(bank)](const Image& image, std::uint64_t seed) {
    return make_pair(image, seed, bank);
  };
}

namespace {

template <typename T>
BasicTensor<T> pixel_tensor(const Image& image) {
  const auto data = image.data();
  std::vector<T> values(data.begin(), data.end());
  return BasicTensor<T>({image.pixel_count(), 3}, std::move(values));
}

}  // namespace

template <typename T>
PairSample<T> make_sample(const Image& i_i, const Image& i_j, int thumbnail_size) {
  if (i_i.height() != i_j.height() || i_i.width() != i_j.width()) {
    throw ShapeError("pair images differ in size");
  }
  return {encoder_input<T>(downsample(i_i, thumbnail_size)), encoder_input<T>(downsample(i_j, thumbnail_size)),
          pixel_tensor<T>(i_i), pixel_tensor<T>(i_j)};
}

template <typename T>
std::vector<typename Tape<T>::Var> GraphParams<T>::all() const {
  auto out = encoder.all();
  out.insert(out.end(), {pn, qn, ps, qs});
  return out;
}

template <typename T>
GraphParams<T> graph_leaves(Tape<T>& tape, const BasicEncoderWeights<T>& encoder,
                            const BasicTensor<T>& pn, const BasicTensor<T>& qn,
                            const BasicTensor<T>& ps, const BasicTensor<T>& qs) {
  GraphParams<T> g;
  g.encoder = encoder_leaves(tape, encoder);
  g.pn = tape.leaf(pn);
  g.qn = tape.leaf(qn);
  g.ps = tape.leaf(ps);
  g.qs = tape.leaf(qs);
  return g;
}

template <typename T>
LossGraph<T> batch_loss(Tape<T>& tape, const GraphParams<T>& params,
                        std::span<const PairSample<T>> samples, int k, T lambda) {
  if (samples.empty()) throw std::invalid_argument("empty batch");
  using V = typename Tape<T>::Var;
  V rec_sum{}, con_sum{};
  for (std::size_t b = 0; b < samples.size(); ++b) {
    const PairSample<T>& s = samples[b];
    const auto [d_i, r_i] = encoder_forward(tape, params.encoder, s.input_i, k);
    const auto [d_j, r_j] = encoder_forward(tape, params.encoder, s.input_j, k);
    const V x_i = tape.leaf(s.pixels_i);
    const V x_j = tape.leaf(s.pixels_j);
    const V z_i = ad::dncm(tape, x_i, params.pn, d_i, params.qn);
    const V z_j = ad::dncm(tape, x_j, params.pn, d_j, params.qn);
    const V y_i = ad::dncm(tape, z_j, params.ps, r_i, params.qs);
    const V y_j = ad::dncm(tape, z_i, params.ps, r_j, params.qs);
    const V rec = ad::add(tape, ad::mean_abs_error(tape, y_i, x_i), ad::mean_abs_error(tape, y_j, x_j));
    const V con = ad::mean_squared_error(tape, z_i, z_j);
    rec_sum = b == 0 ? rec : ad::add(tape, rec_sum, rec);
    con_sum = b == 0 ? con : ad::add(tape, con_sum, con);
  }
  const T inv = T(1) / static_cast<T>(samples.size());
  LossGraph<T> out;
  out.l_rec = ad::scale(tape, rec_sum, inv);
  out.l_con = ad::scale(tape, con_sum, inv);
  out.total = ad::add(tape, out.l_rec, ad::scale(tape, out.l_con, lambda));
  return out;
}

std::uint64_t pair_seed(std::uint64_t seed, std::int64_t step, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(static_cast<std::uint64_t>(step) >> 32),
                    static_cast<std::uint32_t>(index)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

LossReport train_step(std::span<const Image> batch, Checkpoint& checkpoint, const TrainConfig& config,
                      const PairFn& pairs) {
  if (batch.empty()) throw std::invalid_argument("train_step needs a nonempty batch");
  ModelParams& model = checkpoint.model;

  Tape<float> tape;
  const auto params = graph_leaves(tape, model.encoder, model.normalizing.p, model.normalizing.q,
                                   model.stylizing.p, model.stylizing.q);
  std::vector<PairSample<float>> samples;
  samples.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto [a, b] = pairs(batch[i], pair_seed(config.seed, checkpoint.step, i));
    samples.push_back(make_sample<float>(a, b, model.config.thumbnail_size));
  }
  const auto loss = batch_loss<float>(tape, params, samples, model.k(), config.lambda);

  LossReport report;
  report.step = checkpoint.step;
  report.l_rec = tape.value(loss.l_rec)[0];
  report.l_con = tape.value(loss.l_con)[0];
  report.total = report.l_rec + static_cast<double>(config.lambda) * report.l_con;
  report.lr = config.lr_at(checkpoint.step);
  if (!std::isfinite(tape.value(loss.total)[0]) || !std::isfinite(report.total)) {
    throw NonFiniteLossError("non-finite loss at step " + std::to_string(checkpoint.step) +
                             ": l_rec=" + std::to_string(report.l_rec) +
                             " l_con=" + std::to_string(report.l_con));
  }

  tape.backward(loss.total);
  const auto leaves = params.all();
  std::vector<const Tensor*> grads;
  grads.reserve(leaves.size());
  for (const auto& v : leaves) grads.push_back(&tape.grad(v));
  const auto targets = model.trainable();
  AdamHyper hyper;
  hyper.lr = report.lr;
  adam_step(targets, grads, checkpoint.optimizer, hyper);
  ++checkpoint.step;
  return report;
}

std::vector<Image> load_training_images(const std::string& dir, int image_size,
                                        const std::function<void(const std::string&)>& on_warning) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Image> images;
  for (const auto& f : files) {
    try {
      Image img = load_raster(f.string());
      if (img.height() != image_size || img.width() != image_size) {
        img = downsample(img, image_size).image();
      }
      images.push_back(std::move(img));
    } catch (const std::exception& e) {
      if (on_warning) on_warning("skipping " + f.string() + ": " + e.what());
    }
  }
  return images;
}

void write_loss_log(const std::vector<LossReport>& log, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write loss log: " + path);
  out.precision(9);
  out << "step,l_rec,l_con,total,lr\n";
  for (const auto& r : log) out << r.step << ',' << r.l_rec << ',' << r.l_con << ',' << r.total << ',' << r.lr << '\n';
}

TrainResult train(const TrainConfig& config, std::vector<Image> images, const TrainOptions& options) {
  config.validate();
  if (images.size() < static_cast<std::size_t>(config.batch_size)) {
    throw std::runtime_error("need at least " + std::to_string(config.batch_size) + " training images, have " +
                             std::to_string(images.size()));
  }
  TrainResult result;
  result.checkpoint = initial_checkpoint(config.encoder_config());
  const PairFn pairs = default_pairs(options.bank);

  // Batches walk a fresh permutation each epoch.
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;
  std::vector<Image> batch;
  for (std::int64_t s = 0; s < config.steps; ++s) {
    batch.clear();
    for (int b = 0; b < config.batch_size; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(images[order[cursor++]]);
    }
    LossReport report = train_step(batch, result.checkpoint, config, pairs);
    if (options.on_step) options.on_step(report);
    result.log.push_back(report);
  }
  if (!options.checkpoint_path.empty()) save_checkpoint(result.checkpoint, options.checkpoint_path);
  if (!options.log_path.empty()) write_loss_log(result.log, options.log_path);
  return result;
}

TrainResult train(const TrainConfig& config, const std::string& image_dir, const TrainOptions& options) {
  config.validate();
  return train(config, load_training_images(image_dir, config.image_size, options.on_warning), options);
}

#define CHROMAP_INSTANTIATE_TRAINER(T)                                                                    \
  template PairSample<T> make_sample<T>(const Image&, const Image&, int);                                 \
  template struct GraphParams<T>;                                                                         \
  template GraphParams<T> graph_leaves<T>(Tape<T>&, const BasicEncoderWeights<T>&, const BasicTensor<T>&, \
                                          const BasicTensor<T>&, const BasicTensor<T>&,                   \
                                          const BasicTensor<T>&);                                         \
  template LossGraph<T> batch_loss<T>(Tape<T>&, const GraphParams<T>&, std::span<const PairSample<T>>, int, T);

CHROMAP_INSTANTIATE_TRAINER(float)
CHROMAP_INSTANTIATE_TRAINER(double)

#undef CHROMAP_INSTANTIATE_TRAINER

}  // namespace chromap
