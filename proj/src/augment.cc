#include "chromap/augment.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace chromap {

namespace {

void check_range(float v, float lo, float hi, const char* what) {
  if (!(v >= lo && v <= hi)) {
    throw std::invalid_argument(std::string(what) + " out of range [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "]");
  }
}

float uniform(std::mt19937_64& rng, float lo, float hi) {
  return std::uniform_real_distribution<float>(lo, hi)(rng);
}

float clamp01(float v) { return std::clamp(v, 0.0f, 1.0f); }

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

float parse_float(std::string_view token, int line) {
  float v = 0.0f;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw CubeError(CubeErrc::kNonNumeric, line, "not a number: '" + std::string(token) + "'");
  }
  return v;
}

std::array<float, 3> parse_triple(const std::vector<std::string_view>& tokens, std::size_t first,
                                  int line) {
  if (tokens.size() != first + 3) {
    throw CubeError(CubeErrc::kMalformedLine, line, "expected three values");
  }
  return {parse_float(tokens[first], line), parse_float(tokens[first + 1], line),
          parse_float(tokens[first + 2], line)};
}

void append_float(std::string& out, float v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

float ToneCurve::operator()(float v) const {
  if (v <= x[0]) return y[0];
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (v <= x[i]) {
      const float t = (v - x[i - 1]) / (x[i] - x[i - 1]);
      return y[i - 1] + t * (y[i] - y[i - 1]);
    }
  }
  return y.back();
}

void FilterParams::validate() const {
  for (int c = 0; c < 3; ++c) {
    check_range(white_balance[c], 0.8f, 1.25f, "white balance gain");
    check_range(gain[c], 0.6f, 1.4f, "gain");
    check_range(bias[c], -0.15f, 0.15f, "bias");
  }
  check_range(gamma, 0.5f, 2.0f, "gamma");
  check_range(saturation, 0.4f, 1.6f, "saturation");
  for (std::size_t i = 0; i < tone.x.size(); ++i) {
    check_range(tone.x[i], 0.0f, 1.0f, "tone knot x");
    check_range(tone.y[i], 0.0f, 1.0f, "tone knot y");
    if (i > 0 && (tone.x[i] <= tone.x[i - 1] || tone.y[i] <= tone.y[i - 1])) {
      throw std::invalid_argument("tone curve knots must be strictly increasing");
    }
  }
}

bool FilterParams::is_identity() const { return *this == FilterParams{}; }

FilterParams random_filter(std::mt19937_64& rng) {
  FilterParams p;
  for (int c = 0; c < 3; ++c) p.white_balance[c] = uniform(rng, 0.8f, 1.25f);
  for (int c = 0; c < 3; ++c) p.gain[c] = uniform(rng, 0.6f, 1.4f);
  for (int c = 0; c < 3; ++c) p.bias[c] = uniform(rng, -0.15f, 0.15f);
  // Log-uniform so that brightening and darkening are equally likely.
  p.gamma = std::exp(uniform(rng, std::log(0.5f), std::log(2.0f)));
  p.gamma = std::clamp(p.gamma, 0.5f, 2.0f);
  p.saturation = uniform(rng, 0.4f, 1.6f);
  p.tone.y[0] = uniform(rng, 0.0f, 0.1f);
  for (std::size_t i = 1; i + 1 < p.tone.y.size(); ++i) {
    p.tone.y[i] = p.tone.x[i] + uniform(rng, -0.08f, 0.08f);
  }
  p.tone.y[4] = uniform(rng, 0.9f, 1.0f);
  return p;
}

FilterParams random_filter(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_filter(rng);
}

Image apply_filter(const Image& image, const FilterParams& params) {
  params.validate();
  const bool unit_wb = params.white_balance == std::array<float, 3>{1.0f, 1.0f, 1.0f};
  const bool unit_gain = params.gain == std::array<float, 3>{1.0f, 1.0f, 1.0f} &&
                         params.bias == std::array<float, 3>{0.0f, 0.0f, 0.0f};
  Image out = image;
  auto data = out.data();
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    float* px = data.data() + 3 * i;
    if (!unit_wb) {
      for (int c = 0; c < 3; ++c) px[c] = clamp01(px[c] * params.white_balance[c]);
    }
    if (!unit_gain) {
      for (int c = 0; c < 3; ++c) px[c] = clamp01(px[c] * params.gain[c] + params.bias[c]);
    }
    if (params.gamma != 1.0f) {
      for (int c = 0; c < 3; ++c) px[c] = clamp01(std::pow(px[c], params.gamma));
    }
    if (params.saturation != 1.0f) {
      const float luma = kRec709Luma[0] * px[0] + kRec709Luma[1] * px[1] + kRec709Luma[2] * px[2];
      for (int c = 0; c < 3; ++c) px[c] = clamp01(luma + params.saturation * (px[c] - luma));
    }
    if (!params.tone.is_identity()) {
      for (int c = 0; c < 3; ++c) px[c] = clamp01(params.tone(px[c]));
    }
  }
  return out;
}

Lut3D Lut3D::identity(int size) {
  if (size < 2 || size > kMaxCubeSize) throw std::invalid_argument("LUT size must be in [2, 256]");
  Lut3D lut;
  lut.size = size;
  lut.table.resize(3 * static_cast<std::size_t>(size) * size * size);
  const float step = 1.0f / static_cast<float>(size - 1);
  for (int b = 0; b < size; ++b) {
    for (int g = 0; g < size; ++g) {
      for (int r = 0; r < size; ++r) {
        const std::size_t i = lut.index(r, g, b);
        lut.table[i] = static_cast<float>(r) * step;
        lut.table[i + 1] = static_cast<float>(g) * step;
        lut.table[i + 2] = static_cast<float>(b) * step;
      }
    }
  }
  return lut;
}

void Lut3D::validate() const {
  if (size < 2 || size > kMaxCubeSize) throw std::invalid_argument("LUT size must be in [2, 256]");
  if (table.size() != 3 * static_cast<std::size_t>(size) * size * size) {
    throw std::invalid_argument("LUT table must hold size^3 entries");
  }
  for (float v : table) {
    if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument("LUT entries must lie in [0, 1]");
  }
  for (int c = 0; c < 3; ++c) {
    if (!(domain_max[c] > domain_min[c])) throw std::invalid_argument("LUT domain is empty");
  }
}

Lut3D parse_cube(std::string_view text) {
  Lut3D lut;
  std::size_t expected = 0;
  std::size_t entries = 0;
  int line_no = 0;
  int last_line = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    last_line = line_no;

    const auto tokens = split_ws(line);
    const std::string_view key = tokens.front();
    const char lead = key.front();
    const bool numeric = (lead >= '0' && lead <= '9') || lead == '-' || lead == '+' || lead == '.';
    if (numeric) {
      if (expected == 0) {
        throw CubeError(CubeErrc::kMissingSize, line_no, "table data before LUT_3D_SIZE");
      }
      if (entries == expected) {
        throw CubeError(CubeErrc::kWrongEntryCount, line_no,
                        "more than the " + std::to_string(expected) + " entries declared");
      }
      const auto v = parse_triple(tokens, 0, line_no);
      for (int c = 0; c < 3; ++c) lut.table[3 * entries + c] = clamp01(v[c]);
      ++entries;
    } else if (key == "TITLE") {
      const auto open = line.find('"');
      const auto close = line.rfind('"');
      lut.title = open != std::string_view::npos && close > open
                      ? std::string(line.substr(open + 1, close - open - 1))
                      : std::string(trim(line.substr(5)));
    } else if (key == "LUT_3D_SIZE") {
      if (tokens.size() != 2) throw CubeError(CubeErrc::kMalformedLine, line_no, "LUT_3D_SIZE takes one value");
      int n = 0;
      auto [ptr, ec] = std::from_chars(tokens[1].data(), tokens[1].data() + tokens[1].size(), n);
      if (ec != std::errc() || ptr != tokens[1].data() + tokens[1].size()) {
        throw CubeError(CubeErrc::kNonNumeric, line_no, "LUT_3D_SIZE is not an integer");
      }
      if (n < 2 || n > kMaxCubeSize) {
        throw CubeError(CubeErrc::kSizeOutOfRange, line_no,
                        "LUT_3D_SIZE " + std::to_string(n) + " outside [2, 256]");
      }
      if (expected != 0) throw CubeError(CubeErrc::kMalformedLine, line_no, "duplicate LUT_3D_SIZE");
      lut.size = n;
      expected = static_cast<std::size_t>(n) * n * n;
      lut.table.assign(3 * expected, 0.0f);
    } else if (key == "DOMAIN_MIN") {
      lut.domain_min = parse_triple(tokens, 1, line_no);
    } else if (key == "DOMAIN_MAX") {
      lut.domain_max = parse_triple(tokens, 1, line_no);
    } else if (key == "LUT_3D_INPUT_RANGE") {
      if (tokens.size() != 3) throw CubeError(CubeErrc::kMalformedLine, line_no, "LUT_3D_INPUT_RANGE takes two values");
      const float lo = parse_float(tokens[1], line_no);
      const float hi = parse_float(tokens[2], line_no);
      lut.domain_min = {lo, lo, lo};
      lut.domain_max = {hi, hi, hi};
    } else if (key == "LUT_1D_SIZE") {
      throw CubeError(CubeErrc::kMissingSize, line_no, "1D LUTs are not supported");
    }
    // Other keywords (e.g. LUT_1D_INPUT_RANGE from some exporters) carry no 3D data.
  }
  if (expected == 0) throw CubeError(CubeErrc::kMissingSize, last_line, "no LUT_3D_SIZE declaration");
  if (entries != expected) {
    throw CubeError(CubeErrc::kWrongEntryCount, last_line,
                    "expected " + std::to_string(expected) + " entries, found " + std::to_string(entries));
  }
  for (int c = 0; c < 3; ++c) {
    if (!(lut.domain_max[c] > lut.domain_min[c])) {
      throw CubeError(CubeErrc::kMalformedLine, last_line, "DOMAIN_MAX must exceed DOMAIN_MIN");
    }
  }
  return lut;
}

std::string serialize_cube(const Lut3D& lut) {
  lut.validate();
  std::string out;
  if (!lut.title.empty()) out += "TITLE \"" + lut.title + "\"\n";
  if (lut.domain_min != std::array<float, 3>{0.0f, 0.0f, 0.0f}) {
    out += "DOMAIN_MIN";
    for (float v : lut.domain_min) {
      out += ' ';
      append_float(out, v);
    }
    out += '\n';
  }
  if (lut.domain_max != std::array<float, 3>{1.0f, 1.0f, 1.0f}) {
    out += "DOMAIN_MAX";
    for (float v : lut.domain_max) {
      out += ' ';
      append_float(out, v);
    }
    out += '\n';
  }
  out += "LUT_3D_SIZE " + std::to_string(lut.size) + "\n";
  for (std::size_t i = 0; i < lut.table.size(); i += 3) {
    append_float(out, lut.table[i]);
    out += ' ';
    append_float(out, lut.table[i + 1]);
    out += ' ';
    append_float(out, lut.table[i + 2]);
    out += '\n';
  }
  return out;
}

Lut3D load_cube(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cube file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_cube(ss.str());
}

std::vector<Lut3D> load_cube_directory(const std::string& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".cube") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Lut3D> luts;
  for (const auto& f : files) luts.push_back(load_cube(f.string()));
  return luts;
}

Image apply_lut3d(const Image& image, const Lut3D& lut) {
  lut.validate();
  const int n = lut.size;
  const float top = static_cast<float>(n - 1);
  Image out(image.height(), image.width());
  const auto in = image.data();
  auto o = out.data();
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    int base[3];
    float frac[3];
    for (int c = 0; c < 3; ++c) {
      const float u = clamp01((in[3 * i + c] - lut.domain_min[c]) / (lut.domain_max[c] - lut.domain_min[c])) * top;
      const int b = std::min(static_cast<int>(u), n - 2);
      base[c] = b;
      frac[c] = u - static_cast<float>(b);
    }
    // Successive lerps along r, g, b: a constant neighbourhood stays exact and
    // the result cannot drift outside the lattice's value range.
    auto lerp = [](float a, float b, float t) { return a + t * (b - a); };
    for (int c = 0; c < 3; ++c) {
      auto at = [&](int dr, int dg, int db) { return lut.table[lut.index(base[0] + dr, base[1] + dg, base[2] + db) + c]; };
      const float g0 = lerp(lerp(at(0, 0, 0), at(1, 0, 0), frac[0]), lerp(at(0, 1, 0), at(1, 1, 0), frac[0]), frac[1]);
      const float g1 = lerp(lerp(at(0, 0, 1), at(1, 0, 1), frac[0]), lerp(at(0, 1, 1), at(1, 1, 1), frac[0]), frac[1]);
      o[3 * i + c] = clamp01(lerp(g0, g1, frac[2]));
    }
  }
  return out;
}

Lut3D random_lut(std::mt19937_64& rng, int size) {
  // Row-stochastic channel mix near the identity.
  std::array<float, 9> mix{};
  for (int r = 0; r < 3; ++r) {
    float sum = 0.0f;
    for (int c = 0; c < 3; ++c) {
      mix[3 * r + c] = r == c ? 1.0f : uniform(rng, -0.1f, 0.25f);
      sum += mix[3 * r + c];
    }
    for (int c = 0; c < 3; ++c) mix[3 * r + c] /= sum;
  }
  const FilterParams filter = random_filter(rng);

  Lut3D lut = Lut3D::identity(size);
  const auto lattice = lut.table;
  Image mixed(1, static_cast<int>(lattice.size() / 3));
  auto m = mixed.data();
  for (std::size_t i = 0; i < lattice.size(); i += 3) {
    for (int c = 0; c < 3; ++c) {
      m[i + c] = clamp01(lattice[i] * mix[c] + lattice[i + 1] * mix[3 + c] + lattice[i + 2] * mix[6 + c]);
    }
  }
  const Image graded = apply_filter(mixed, filter);
  std::copy(graded.data().begin(), graded.data().end(), lut.table.begin());
  return lut;
}

namespace {

Image perturb(const Image& image, std::mt19937_64& rng, std::span<const Lut3D> bank) {
  const int kind = std::uniform_int_distribution<int>(0, 2)(rng);
  auto pick_lut = [&]() -> Lut3D {
    if (!bank.empty() && std::uniform_int_distribution<int>(0, 1)(rng) == 0) {
      return bank[std::uniform_int_distribution<std::size_t>(0, bank.size() - 1)(rng)];
    }
    return random_lut(rng);
  };
  switch (kind) {
    case 0:
      return apply_filter(image, random_filter(rng));
    case 1:
      return apply_lut3d(image, pick_lut());
    default: {
      const Lut3D lut = pick_lut();
      return apply_filter(apply_lut3d(image, lut), random_filter(rng));
    }
  }
}

}  // namespace

std::pair<Image, Image> make_pair(const Image& image, std::uint64_t seed, std::span<const Lut3D> bank) {
  std::mt19937_64 rng(seed);
  Image first = perturb(image, rng, bank);
  Image second = perturb(image, rng, bank);
  return {std::move(first), std::move(second)};
}

}  // namespace chromap
