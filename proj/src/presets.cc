#include "chromap/presets.h"

#include <algorithm>
#include <chrono>
#include <mutex>

#include "chromap/bytes.h"

namespace chromap {

namespace {

constexpr char kMagic[] = "NPRE";

std::uint8_t role_byte(ProjectionRole role) { return role == ProjectionRole::kNormalizing ? 'n' : 's'; }

}  // namespace

Preset extract_preset(const StyleModel& model, const Image& style, std::string name, std::int64_t created) {
  Preset p;
  p.role = ProjectionRole::kStylizing;
  p.matrix = model.encode(style).r;
  p.name = std::move(name);
  p.created = created;
  p.fingerprint = model.fingerprint();
  return p;
}

Preset extract_preset(const StyleModel& model, const Image& style, std::string name) {
  const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  return extract_preset(model, style, std::move(name), now);
}

std::size_t preset_file_size(int k, std::size_t name_bytes) {
  return 4 + 1 + 1 + 2 + 8 + 4 * static_cast<std::size_t>(k) * static_cast<std::size_t>(k) + 2 + name_bytes + 8;
}

std::vector<std::uint8_t> encode_preset(const Preset& preset) {
  if (preset.k() < 1 || preset.k() > 0xffff) throw PresetError(PresetErrc::kInvalid, "preset k out of range");
  if (preset.name.size() > 0xffff) throw PresetError(PresetErrc::kInvalid, "preset name longer than 65535 bytes");
  ByteWriter w;
  w.text(kMagic);
  w.u8(kPresetVersion);
  w.u8(role_byte(preset.role));
  w.u16(static_cast<std::uint16_t>(preset.k()));
  w.bytes(preset.fingerprint.bytes);
  w.f32s(preset.matrix.values());
  w.u16(static_cast<std::uint16_t>(preset.name.size()));
  w.text(preset.name);
  w.i64(preset.created);
  return w.take();
}

Preset decode_preset(std::span<const std::uint8_t> bytes) {
  try {
    ByteReader r(bytes);
    if (r.text(4) != kMagic) throw PresetError(PresetErrc::kBadMagic, "not a preset file (bad magic)");
    const std::uint8_t version = r.u8();
    if (version != kPresetVersion) {
      throw PresetError(PresetErrc::kVersionMismatch, "preset version " + std::to_string(version) + " is not supported");
    }
    Preset p;
    const std::uint8_t role = r.u8();
    if (role == 'n') {
      p.role = ProjectionRole::kNormalizing;
    } else if (role == 's') {
      p.role = ProjectionRole::kStylizing;
    } else {
      throw PresetError(PresetErrc::kInvalid, "preset role byte must be 'n' or 's'");
    }
    const int k = r.u16();
    if (k < 1) throw PresetError(PresetErrc::kInvalid, "preset k must be >= 1");
    const auto fp = r.bytes(8);
    std::copy(fp.begin(), fp.end(), p.fingerprint.bytes.begin());
    auto values = r.f32s(static_cast<std::size_t>(k) * static_cast<std::size_t>(k));
    try {
      p.matrix = ColorMapMatrix(k, std::move(values));
    } catch (const std::invalid_argument& e) {
      throw PresetError(PresetErrc::kInvalid, e.what());
    }
    p.name = r.text(r.u16());
    p.created = r.i64();
    if (!r.done()) throw PresetError(PresetErrc::kInvalid, "trailing bytes after preset");
    return p;
  } catch (const TruncatedError& e) {
    throw PresetError(PresetErrc::kTruncated, e.what());
  }
}

void save_preset(const Preset& preset, const std::string& path) {
  write_file_atomic(path, encode_preset(preset));
}

Preset load_preset(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw PresetError(PresetErrc::kMissingFile, "preset not found: " + path);
  }
  return decode_preset(read_file_bytes(path));
}

PresetStore::PresetStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path PresetStore::path_for(const std::string& key) const {
  if (key.empty() || key.find_first_of("/\\") != std::string::npos || key == "." || key == "..") {
    throw std::invalid_argument("invalid preset key: '" + key + "'");
  }
  return dir_ / (key + ".npre");
}

void PresetStore::put(const std::string& key, const Preset& preset) {
  const auto path = path_for(key);
  std::unique_lock lock(mutex_);
  save_preset(preset, path.string());
}

std::optional<Preset> PresetStore::get(const std::string& key) const {
  const auto path = path_for(key);
  std::shared_lock lock(mutex_);
  if (!std::filesystem::is_regular_file(path)) return std::nullopt;
  return load_preset(path.string());
}

std::vector<std::string> PresetStore::keys() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".npre") out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace chromap
