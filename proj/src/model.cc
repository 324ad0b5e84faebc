#include "chromap/model.h"

#include <bit>
#include <random>
#include <stdexcept>

namespace chromap {

std::vector<Tensor*> ModelParams::trainable() {
  std::vector<Tensor*> out = encoder.tensors();
  out.insert(out.end(), {&normalizing.p, &normalizing.q, &stylizing.p, &stylizing.q});
  return out;
}

std::vector<const Tensor*> ModelParams::trainable() const {
  std::vector<const Tensor*> out = encoder.tensors();
  out.insert(out.end(), {&normalizing.p, &normalizing.q, &stylizing.p, &stylizing.q});
  return out;
}

void ModelParams::validate() const {
  validate_weights(config, encoder);
  normalizing.validate();
  stylizing.validate();
  if (normalizing.role != ProjectionRole::kNormalizing || stylizing.role != ProjectionRole::kStylizing) {
    throw std::invalid_argument("projection pairs carry the wrong roles");
  }
  if (normalizing.k() != config.k || stylizing.k() != config.k) {
    throw ShapeError("projection k does not match encoder k=" + std::to_string(config.k));
  }
}

ModelParams init_model(const EncoderConfig& config) {
  ModelParams model;
  model.config = config;
  model.encoder = init_weights(config);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::uint64_t seed_n = rng();
  const std::uint64_t seed_s = rng();
  model.normalizing = init_projection(config.k, ProjectionRole::kNormalizing, seed_n);
  model.stylizing = init_projection(config.k, ProjectionRole::kStylizing, seed_s);
  return model;
}

std::string Fingerprint::hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (std::uint8_t b : bytes) {
    out += kDigits[b >> 4];
    out += kDigits[b & 0xf];
  }
  return out;
}

Fingerprint Fingerprint::from_hex(const std::string& hex) {
  if (hex.size() != 16) throw std::invalid_argument("fingerprint must be 16 hex digits");
  Fingerprint fp;
  for (std::size_t i = 0; i < 8; ++i) {
    fp.bytes[i] = static_cast<std::uint8_t>(std::stoul(hex.substr(2 * i, 2), nullptr, 16));
  }
  return fp;
}

Fingerprint fingerprint(const ProjectionPair& normalizing, const ProjectionPair& stylizing) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  mix(static_cast<std::uint16_t>(normalizing.k()), 2);
  for (const Tensor* t : {&normalizing.p, &normalizing.q, &stylizing.p, &stylizing.q}) {
    for (float v : t->data()) mix(std::bit_cast<std::uint32_t>(v), 4);
  }
  Fingerprint fp;
  for (int i = 0; i < 8; ++i) fp.bytes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(h >> (8 * i));
  return fp;
}

}  // namespace chromap
