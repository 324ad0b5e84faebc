#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chromap/augment.h"
#include "chromap/autodiff.h"
#include "chromap/checkpoint.h"
#include "chromap/encoder.h"
#include "chromap/image.h"

namespace chromap {

struct TrainConfig {
  float lambda = 10.0f;
  float lr = 3e-4f;
  int batch_size = 8;
  std::int64_t steps = 2000;
  double decay_at = 0.75;  // fraction of `steps` after which lr is multiplied by decay_factor
  float decay_factor = 0.1f;
  int k = 16;
  int thumbnail_size = 64;
  int image_size = 64;
  std::uint64_t seed = 0;

  void validate() const;
  EncoderConfig encoder_config() const;
  float lr_at(std::int64_t step) const;
};

struct LossReport {
  std::int64_t step = 0;
  double l_rec = 0.0;
  double l_con = 0.0;
  double total = 0.0;
  float lr = 0.0f;

  bool operator==(const LossReport&) const = default;
};

class NonFiniteLossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mean squared difference over all elements.
double consistency_loss(const Image& z_i, const Image& z_j);
// mean|Y_i - I_i| + mean|Y_j - I_j|.
double reconstruction_loss(const Image& y_i, const Image& i_i, const Image& y_j, const Image& i_j);

// Produces the two perturbed views of one training image.
using PairFn = std::function<std::pair<Image, Image>(const Image& image, std::uint64_t seed)>;
PairFn default_pairs(std::vector<Lut3D> bank = {});

// One perturbed pair, ready for the graph: encoder inputs from the thumbnails
// and the full-resolution pixels as [n x 3].
template <typename T>
struct PairSample {
  BasicTensor<T> input_i, input_j;
  BasicTensor<T> pixels_i, pixels_j;
};

template <typename T>
PairSample<T> make_sample(const Image& i_i, const Image& i_j, int thumbnail_size);

template <typename T>
struct GraphParams {
  EncoderVars<T> encoder;
  typename Tape<T>::Var pn, qn, ps, qs;

  // Same order as ModelParams::trainable().
  std::vector<typename Tape<T>::Var> all() const;
};

template <typename T>
GraphParams<T> graph_leaves(Tape<T>& tape, const BasicEncoderWeights<T>& encoder,
                            const BasicTensor<T>& pn, const BasicTensor<T>& qn,
                            const BasicTensor<T>& ps, const BasicTensor<T>& qs);

template <typename T>
struct LossGraph {
  typename Tape<T>::Var total, l_rec, l_con;  // batch means
};

// For every sample: Z_i = nDNCM(I_i, d_i), Z_j = nDNCM(I_j, d_j),
// Y_i = sDNCM(Z_j, r_i), Y_j = sDNCM(Z_i, r_j), and
// loss = L_rec + lambda * L_con, averaged over the batch.
template <typename T>
LossGraph<T> batch_loss(Tape<T>& tape, const GraphParams<T>& params,
                        std::span<const PairSample<T>> samples, int k, T lambda);

// Builds pairs for the batch, runs forward and backward, applies one Adam
// update to the encoder and both projection pairs, and advances the step.
// Pair seeds derive from (config.seed, checkpoint.step, index in batch).
LossReport train_step(std::span<const Image> batch, Checkpoint& checkpoint, const TrainConfig& config,
                      const PairFn& pairs);

std::uint64_t pair_seed(std::uint64_t seed, std::int64_t step, std::size_t index);

struct TrainOptions {
  std::vector<Lut3D> bank;
  std::string checkpoint_path;  // written at the end when non-empty
  std::string log_path;         // per-step CSV when non-empty
  std::function<void(const LossReport&)> on_step;
  std::function<void(const std::string&)> on_warning;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossReport> log;
};

// Loads every PNG in `image_dir` (sorted by name, resized to image_size
// squares), skipping unreadable files, and runs `config.steps` steps from
// a fresh initialization. Throws if fewer than batch_size images load.
TrainResult train(const TrainConfig& config, const std::string& image_dir, const TrainOptions& options = {});
TrainResult train(const TrainConfig& config, std::vector<Image> images, const TrainOptions& options = {});

std::vector<Image> load_training_images(const std::string& dir, int image_size,
                                        const std::function<void(const std::string&)>& on_warning = {});

void write_loss_log(const std::vector<LossReport>& log, const std::string& path);

}  // namespace chromap
