#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "chromap/dncm.h"
#include "chromap/encoder.h"

namespace chromap {

// Everything inference needs: the encoder and both projection pairs.
struct ModelParams {
  EncoderConfig config;
  EncoderWeights encoder;
  ProjectionPair normalizing;
  ProjectionPair stylizing;

  int k() const { return config.k; }
  // Trainable tensors in optimizer order: encoder tensors, then Pn, Qn, Ps, Qs.
  std::vector<Tensor*> trainable();
  std::vector<const Tensor*> trainable() const;
  // Throws on any shape, role or finiteness problem.
  void validate() const;

  bool operator==(const ModelParams&) const = default;
};

// Identity-mapping initialization: encoder heads emit I_k and both projection
// pairs satisfy P * Q = I3, so a freshly initialized model reproduces its input.
ModelParams init_model(const EncoderConfig& config);

// 8-byte FNV-1a hash binding presets and normalized images to the projection
// matrices they were produced under.
struct Fingerprint {
  std::array<std::uint8_t, 8> bytes{};

  std::string hex() const;
  static Fingerprint from_hex(const std::string& hex);
  bool operator==(const Fingerprint&) const = default;
};

Fingerprint fingerprint(const ProjectionPair& normalizing, const ProjectionPair& stylizing);
inline Fingerprint fingerprint(const ModelParams& model) {
  return fingerprint(model.normalizing, model.stylizing);
}

}  // namespace chromap
