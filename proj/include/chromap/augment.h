#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chromap/image.h"

namespace chromap {

// Piecewise-linear tone curve through five knots, strictly increasing in both
// coordinates.
struct ToneCurve {
  std::array<float, 5> x{0.0f, 0.25f, 0.5f, 0.75f, 1.0f};
  std::array<float, 5> y{0.0f, 0.25f, 0.5f, 0.75f, 1.0f};

  float operator()(float v) const;
  bool is_identity() const { return x == y; }
  bool operator==(const ToneCurve&) const = default;
};

// Photo-filter style color adjustment. Stages run in declaration order:
// white balance, gain/bias, gamma, saturation, tone curve; every stage clamps
// its output to [0, 1].
struct FilterParams {
  std::array<float, 3> white_balance{1.0f, 1.0f, 1.0f};  // [0.8, 1.25]
  std::array<float, 3> gain{1.0f, 1.0f, 1.0f};           // [0.6, 1.4]
  std::array<float, 3> bias{0.0f, 0.0f, 0.0f};           // [-0.15, 0.15]
  float gamma = 1.0f;                                    // [0.5, 2.0]
  float saturation = 1.0f;                               // [0.4, 1.6]
  ToneCurve tone;

  // Throws std::invalid_argument if any field is out of range.
  void validate() const;
  bool is_identity() const;
  bool operator==(const FilterParams&) const = default;
};

inline constexpr std::array<float, 3> kRec709Luma{0.2126f, 0.7152f, 0.0722f};

FilterParams random_filter(std::uint64_t seed);
FilterParams random_filter(std::mt19937_64& rng);
Image apply_filter(const Image& image, const FilterParams& params);

// 3D lookup table, N^3 RGB entries with red varying fastest.
struct Lut3D {
  int size = 0;
  std::vector<float> table;  // 3 * size^3 values
  std::string title;
  std::array<float, 3> domain_min{0.0f, 0.0f, 0.0f};
  std::array<float, 3> domain_max{1.0f, 1.0f, 1.0f};

  static Lut3D identity(int size);
  std::size_t index(int r, int g, int b) const {
    return 3 * (static_cast<std::size_t>(r) +
                static_cast<std::size_t>(size) * (static_cast<std::size_t>(g) +
                                                  static_cast<std::size_t>(size) * static_cast<std::size_t>(b)));
  }
  void validate() const;
  bool operator==(const Lut3D&) const = default;
};

enum class CubeErrc {
  kMissingSize,
  kWrongEntryCount,
  kNonNumeric,
  kSizeOutOfRange,
  kMalformedLine,
};

class CubeError : public std::runtime_error {
 public:
  CubeError(CubeErrc code, int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), code_(code), line_(line) {}
  CubeErrc code() const { return code_; }
  int line() const { return line_; }

 private:
  CubeErrc code_;
  int line_;
};

inline constexpr int kMaxCubeSize = 256;

// Parses the .cube text format: optional TITLE, LUT_3D_SIZE N (2..256),
// optional DOMAIN_MIN / DOMAIN_MAX, then N^3 triples. '#' starts a comment.
// Table values are clamped into [0, 1].
Lut3D parse_cube(std::string_view text);
std::string serialize_cube(const Lut3D& lut);
Lut3D load_cube(const std::string& path);
std::vector<Lut3D> load_cube_directory(const std::string& dir);

// Trilinear interpolation on the lattice after mapping the domain onto [0, 1].
Image apply_lut3d(const Image& image, const Lut3D& lut);

// Lattice with a random channel mix followed by a random filter baked in.
Lut3D random_lut(std::mt19937_64& rng, int size = 17);

// Two independent color-only perturbations of one image. Each is a filter, a
// LUT, or a LUT followed by a filter, chosen uniformly. LUTs come from `bank`
// when it is non-empty (half of the time) and are otherwise generated.
std::pair<Image, Image> make_pair(const Image& image, std::uint64_t seed,
                                  std::span<const Lut3D> bank = {});

}  // namespace chromap
