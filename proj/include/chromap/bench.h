#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

namespace chromap {

struct BenchRecord {
  int patch_size = 0;
  std::size_t pixels = 0;
  double seconds = 0.0;  // median wall time
  std::size_t peak_bytes = 0;
};

struct BenchOptions {
  int height = 2048;
  int width = 2048;
  int k = 16;
  int repeats = 5;
  int workers = 1;
  std::uint64_t seed = 0;
};

// Times dncm_apply_tiled on a synthetic image for every patch size, reporting
// the median of `repeats` runs and the kernel's peak working memory.
std::vector<BenchRecord> bench_patch_sweep(const BenchOptions& options, std::span<const int> patch_sizes);

// "# workers=N" comment, then "patch_size,pixels,seconds,peak_bytes" rows.
void write_bench_csv(std::ostream& out, std::span<const BenchRecord> records, int workers);

}  // namespace chromap
