#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "chromap/dncm.h"
#include "chromap/image.h"
#include "chromap/model.h"
#include "chromap/style_model.h"

namespace chromap {

inline constexpr std::uint8_t kPresetVersion = 1;

struct Preset {
  ProjectionRole role = ProjectionRole::kStylizing;
  ColorMapMatrix matrix = ColorMapMatrix::identity(1);
  std::string name;
  std::int64_t created = 0;  // unix seconds
  Fingerprint fingerprint;

  int k() const { return matrix.k(); }
  bool operator==(const Preset&) const = default;
};

enum class PresetErrc { kMissingFile, kBadMagic, kVersionMismatch, kTruncated, kInvalid };

class PresetError : public std::runtime_error {
 public:
  PresetError(PresetErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  PresetErrc code() const { return code_; }

 private:
  PresetErrc code_;
};

// Encodes the style image and keeps its stylizing matrix r.
Preset extract_preset(const StyleModel& model, const Image& style, std::string name);
Preset extract_preset(const StyleModel& model, const Image& style, std::string name, std::int64_t created);

// "NPRE" | version u8 | role u8 ('n' or 's') | k u16 | fingerprint (8 bytes) |
// k^2 f32 row-major | name length u16 | UTF-8 name | created i64. All
// integers and floats little-endian. Size: 1050 + name bytes for k = 16.
std::vector<std::uint8_t> encode_preset(const Preset& preset);
Preset decode_preset(std::span<const std::uint8_t> bytes);
std::size_t preset_file_size(int k, std::size_t name_bytes);

void save_preset(const Preset& preset, const std::string& path);
Preset load_preset(const std::string& path);

// Directory of .npre files keyed by file stem. Concurrent readers, one writer.
class PresetStore {
 public:
  explicit PresetStore(std::filesystem::path dir);

  void put(const std::string& key, const Preset& preset);
  std::optional<Preset> get(const std::string& key) const;
  std::vector<std::string> keys() const;

 private:
  std::filesystem::path path_for(const std::string& key) const;

  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
};

}  // namespace chromap
