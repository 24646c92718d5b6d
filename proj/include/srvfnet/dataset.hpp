#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "srvfnet/function.hpp"

namespace srvfnet {

/// Generative law for synthetic K-peaked profiles: raised-cosine bumps with
/// jittered centers and uniformly drawn amplitudes and widths.
struct BumpSpec {
  int num_peaks = 2;
  std::array<double, 2> amplitude_range{0.5, 1.5};
  double center_jitter = 0.15;
  std::array<double, 2> width_range{0.08, 0.15};
  int grid_size = 300;
  std::uint64_t seed = 0;

  /// Default jitter scales with peak count so supports stay disjoint.
  static BumpSpec defaults(int num_peaks, int grid_size, std::uint64_t seed);
};

void validate(const BumpSpec& spec);

struct Dataset {
  std::vector<Srvf> srvfs;               // unit norm, parallel to raw
  std::vector<SampledFunction> raw;
  std::vector<int> excluded_rows;        // 1-based rows dropped as degenerate
  int grid_size = 0;
  int size() const { return static_cast<int>(srvfs.size()); }
};

/// n functions, each drawn from a per-function seed derived from spec.seed,
/// so the corpus is identical for any worker count.
Dataset generate_bumps(const BumpSpec& spec, int n, int workers = 1);

/// Reads one function per CSV row, converts to unit-norm SRVFs, and drops
/// rows whose derivative vanishes everywhere (reported in excluded_rows).
Dataset load_profiles_csv(const std::string& path, int expected_size);

/// Seeded shuffle, then the first round(fraction * n) functions become the
/// test set. Disjoint and exhaustive.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d,
                                          double test_fraction,
                                          std::uint64_t seed);

}  // namespace srvfnet
