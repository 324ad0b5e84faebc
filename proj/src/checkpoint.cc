#include "chromap/checkpoint.h"

#include <filesystem>

#include "chromap/bytes.h"

namespace chromap {

namespace {

constexpr char kMagic[] = "NPCK";

void write_array(ByteWriter& w, const Tensor& t) {
  w.u32(static_cast<std::uint32_t>(t.size()));
  w.f32s(t.data());
}

void read_array(ByteReader& r, Tensor& t) {
  const std::uint32_t n = r.u32();
  if (n != t.size()) {
    throw CheckpointError(CheckpointErrc::kInvalid, "checkpoint array has " + std::to_string(n) +
                                                        " values, expected " + std::to_string(t.size()));
  }
  auto values = r.f32s(n);
  std::copy(values.begin(), values.end(), t.data().begin());
}

}  // namespace

Checkpoint initial_checkpoint(const EncoderConfig& config) {
  Checkpoint ckpt;
  ckpt.model = init_model(config);
  const auto params = ckpt.model.trainable();
  ckpt.optimizer = make_adam_state(params);
  return ckpt;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint) {
  checkpoint.model.validate();
  const auto params = checkpoint.model.trainable();
  if (checkpoint.optimizer.m.size() != params.size() || checkpoint.optimizer.v.size() != params.size()) {
    throw CheckpointError(CheckpointErrc::kInvalid, "optimizer state does not match the model");
  }
  const EncoderConfig& c = checkpoint.model.config;
  ByteWriter w;
  w.text(kMagic);
  w.u8(kCheckpointVersion);
  w.i32(c.k);
  w.i32(c.thumbnail_size);
  w.u32(static_cast<std::uint32_t>(c.widths.size()));
  for (int width : c.widths) w.i32(width);
  w.u64(c.seed);
  for (const Tensor* t : params) write_array(w, *t);
  for (const Tensor& t : checkpoint.optimizer.m) write_array(w, t);
  for (const Tensor& t : checkpoint.optimizer.v) write_array(w, t);
  w.i64(checkpoint.optimizer.step);
  w.i64(checkpoint.step);
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  try {
    ByteReader r(bytes);
    if (r.text(4) != kMagic) throw CheckpointError(CheckpointErrc::kBadMagic, "not a checkpoint (bad magic)");
    const std::uint8_t version = r.u8();
    if (version != kCheckpointVersion) {
      throw CheckpointError(CheckpointErrc::kVersionMismatch,
                            "checkpoint version " + std::to_string(version) + " is not supported");
    }
    EncoderConfig config;
    config.k = r.i32();
    config.thumbnail_size = r.i32();
    const std::uint32_t stages = r.u32();
    if (stages == 0 || stages > 30) throw CheckpointError(CheckpointErrc::kInvalid, "bad stage count");
    config.widths.resize(stages);
    for (int& width : config.widths) width = r.i32();
    config.seed = r.u64();
    if (config.k < 1 || config.k > 4096) throw CheckpointError(CheckpointErrc::kInvalid, "bad k");
    try {
      config.validate();
    } catch (const std::invalid_argument& e) {
      throw CheckpointError(CheckpointErrc::kInvalid, e.what());
    }

    // Shapes come from a fresh initialization of the same config.
    Checkpoint ckpt = initial_checkpoint(config);
    for (Tensor* t : ckpt.model.trainable()) read_array(r, *t);
    for (Tensor& t : ckpt.optimizer.m) read_array(r, t);
    for (Tensor& t : ckpt.optimizer.v) read_array(r, t);
    ckpt.optimizer.step = r.i64();
    ckpt.step = r.i64();
    if (!r.done()) throw CheckpointError(CheckpointErrc::kInvalid, "trailing bytes after checkpoint");
    try {
      ckpt.model.validate();
    } catch (const std::exception& e) {
      throw CheckpointError(CheckpointErrc::kInvalid, e.what());
    }
    return ckpt;
  } catch (const TruncatedError& e) {
    throw CheckpointError(CheckpointErrc::kTruncated, e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  write_file_atomic(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw CheckpointError(CheckpointErrc::kMissingFile, "checkpoint not found: " + path);
  }
  return decode_checkpoint(read_file_bytes(path));
}

}  // namespace chromap
