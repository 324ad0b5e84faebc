#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "chromap/adam.h"
#include "chromap/model.h"

namespace chromap {

inline constexpr std::uint8_t kCheckpointVersion = 1;

enum class CheckpointErrc { kMissingFile, kBadMagic, kVersionMismatch, kTruncated, kInvalid };

class CheckpointError : public std::runtime_error {
 public:
  CheckpointError(CheckpointErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  CheckpointErrc code() const { return code_; }

 private:
  CheckpointErrc code_;
};

struct Checkpoint {
  ModelParams model;
  AdamState optimizer;
  std::int64_t step = 0;

  bool operator==(const Checkpoint&) const = default;
};

// Fresh checkpoint: init_model(config) and zeroed optimizer moments.
Checkpoint initial_checkpoint(const EncoderConfig& config);

// "NPCK", version byte, encoder config (k, thumbnail size, stage count,
// widths, seed), then length-prefixed little-endian float arrays: model
// tensors in ModelParams::trainable() order, Adam m, Adam v; then the Adam
// step and the training step as 64-bit integers.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace chromap
