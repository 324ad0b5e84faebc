#include "chromap/bench.h"

#include <algorithm>
#include <chrono>
#include <random>
#include <stdexcept>

#include "chromap/dncm.h"
#include "chromap/synth.h"

namespace chromap {

std::vector<BenchRecord> bench_patch_sweep(const BenchOptions& options, std::span<const int> patch_sizes) {
  if (patch_sizes.size() < 2) throw std::invalid_argument("bench needs at least two patch sizes");
  if (options.repeats < 1) throw std::invalid_argument("bench needs at least one repeat");

  const Image image = synth_image(options.height, options.width, options.seed);
  std::mt19937_64 rng(options.seed + 1);
  std::normal_distribution<float> normal(0.0f, 0.2f);
  const auto k = static_cast<std::size_t>(options.k);
  std::vector<float> t(k * k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) t[i * k + j] = (i == j ? 1.0f : 0.0f) + normal(rng);
  }
  const ColorMapMatrix matrix(options.k, std::move(t));
  const ProjectionPair proj = init_projection(options.k, ProjectionRole::kStylizing, options.seed + 2);

  std::vector<BenchRecord> records;
  for (int patch : patch_sizes) {
    MemoryMeter meter;
    TiledOptions tiled;
    tiled.patch_size = patch;
    tiled.workers = options.workers;
    tiled.meter = &meter;
    std::vector<double> times;
    for (int r = 0; r < options.repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      const Image out = dncm_apply_tiled(image, matrix, proj, tiled);
      const auto stop = std::chrono::steady_clock::now();
      times.push_back(std::chrono::duration<double>(stop - start).count());
    }
    std::nth_element(times.begin(), times.begin() + static_cast<long>(times.size() / 2), times.end());
    records.push_back({patch, image.pixel_count(), times[times.size() / 2], meter.peak()});
  }
  return records;
}

void write_bench_csv(std::ostream& out, std::span<const BenchRecord> records, int workers) {
  out << "# workers=" << workers << '\n';
  out << "patch_size,pixels,seconds,peak_bytes\n";
  for (const auto& r : records) {
    out << r.patch_size << ',' << r.pixels << ',' << r.seconds << ',' << r.peak_bytes << '\n';
  }
}

}  // namespace chromap
