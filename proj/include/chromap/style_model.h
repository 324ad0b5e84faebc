#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "chromap/checkpoint.h"
#include "chromap/encoder.h"
#include "chromap/image.h"
#include "chromap/model.h"

namespace chromap {

// Read-only inference model loaded from a checkpoint. Safe to share across
// threads; the encoder-call counter exists so callers can verify that preset
// switching never re-runs the encoder.
class StyleModel {
 public:
  explicit StyleModel(ModelParams params);
  // Throws CheckpointError (kMissingFile when the path does not exist).
  static std::shared_ptr<const StyleModel> load(const std::string& checkpoint_path);

  const ModelParams& params() const { return params_; }
  const EncoderConfig& config() const { return params_.config; }
  int k() const { return params_.config.k; }
  const Fingerprint& fingerprint() const { return fingerprint_; }

  // Downsamples to the thumbnail size and runs the encoder.
  StyleParams encode(const Image& image) const;
  StyleParams encode(const Thumbnail& thumbnail) const;

  std::uint64_t encoder_calls() const { return encoder_calls_.load(); }
  void reset_counters() const { encoder_calls_.store(0); }

 private:
  ModelParams params_;
  Fingerprint fingerprint_;
  mutable std::atomic<std::uint64_t> encoder_calls_{0};
};

}  // namespace chromap
