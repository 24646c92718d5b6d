#include "srvfnet/dataset.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <numeric>

#include "srvfnet/errors.hpp"
#include "srvfnet/parallel.hpp"
#include "srvfnet/rng.hpp"

namespace srvfnet {

namespace {

double raised_cosine(double t, double center, double amp, double width) {
  const double u = std::abs(t - center) / width;
  if (u >= 1.0) return 0.0;
  return amp * 0.5 * (1.0 + std::cos(std::numbers::pi * u));
}

SampledFunction draw_bump_function(const BumpSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  const int k = spec.num_peaks;
  std::vector<double> center(k), amp(k), width(k);
  for (int p = 0; p < k; ++p) {
    center[p] = (p + 0.5) / k +
                rng.uniform(-spec.center_jitter, spec.center_jitter);
    amp[p] = rng.uniform(spec.amplitude_range[0], spec.amplitude_range[1]);
    width[p] = rng.uniform(spec.width_range[0], spec.width_range[1]);
  }
  const int t = spec.grid_size;
  SampledFunction f;
  f.values.setZero(t);
  for (int i = 0; i < t; ++i) {
    const double x = static_cast<double>(i) / (t - 1);
    for (int p = 0; p < k; ++p) {
      f.values(i) += raised_cosine(x, center[p], amp[p], width[p]);
    }
  }
  return f;
}

}  // namespace

BumpSpec BumpSpec::defaults(int num_peaks, int grid_size, std::uint64_t seed) {
  BumpSpec spec;
  spec.num_peaks = num_peaks;
  spec.grid_size = grid_size;
  spec.seed = seed;
  spec.center_jitter = 0.3 / num_peaks;
  return spec;
}

void validate(const BumpSpec& spec) {
  if (spec.num_peaks < 1) throw PreconditionError("BumpSpec: num_peaks < 1");
  if (spec.grid_size < 3) throw PreconditionError("BumpSpec: grid_size < 3");
  if (spec.amplitude_range[0] > spec.amplitude_range[1] ||
      spec.amplitude_range[0] <= 0.0) {
    throw PreconditionError("BumpSpec: bad amplitude range");
  }
  if (spec.width_range[0] > spec.width_range[1] || spec.width_range[0] <= 0.0) {
    throw PreconditionError("BumpSpec: bad width range");
  }
  if (spec.center_jitter < 0.0) {
    throw PreconditionError("BumpSpec: negative center jitter");
  }
}

Dataset generate_bumps(const BumpSpec& spec, int n, int workers) {
  validate(spec);
  if (n < 1) throw PreconditionError("generate_bumps: n < 1");
  Dataset d;
  d.grid_size = spec.grid_size;
  d.raw.resize(n);
  d.srvfs.resize(n);
  parallel_for(n, workers, [&](int i) {
    d.raw[i] = draw_bump_function(spec, derive_seed(spec.seed, i));
    d.srvfs[i] = to_srvf(d.raw[i], true);
  });
  return d;
}

Dataset load_profiles_csv(const std::string& path, int expected_size) {
  if (expected_size < 3) {
    throw PreconditionError("load_profiles_csv: expected_size < 3");
  }
  std::ifstream in(path);
  if (!in) throw ParseError("load_profiles_csv: cannot open " + path);

  Dataset d;
  d.grid_size = expected_size;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    SampledFunction f;
    f.values.resize(expected_size);
    int col = 0;
    const char* cursor = line.c_str();
    while (*cursor != '\0') {
      char* end = nullptr;
      const double value = std::strtod(cursor, &end);
      if (end == cursor) {
        throw ParseError("load_profiles_csv: row " + std::to_string(row) +
                         ": non-numeric token");
      }
      if (col >= expected_size) {
        ++col;  // count past the end for the error report
      } else {
        f.values(col) = value;
        ++col;
      }
      cursor = end;
      while (*cursor == ' ' || *cursor == '\t') ++cursor;
      if (*cursor == ',') {
        ++cursor;
        while (*cursor == ' ' || *cursor == '\t') ++cursor;
      }
    }
    if (col != expected_size) {
      throw DimensionError("load_profiles_csv: row " + std::to_string(row) +
                           ": expected " + std::to_string(expected_size) +
                           " values, got " + std::to_string(col));
    }
    if (!f.values.allFinite()) {
      throw ParseError("load_profiles_csv: row " + std::to_string(row) +
                       ": non-finite value");
    }

    try {
      Srvf q = to_srvf(f, true);
      d.raw.push_back(std::move(f));
      d.srvfs.push_back(std::move(q));
    } catch (const DegenerateInputError&) {
      d.excluded_rows.push_back(row);
    }
  }
  return d;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d,
                                          double test_fraction,
                                          std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0) {
    throw PreconditionError("split_dataset: need 0 <= fraction < 1");
  }
  const int n = d.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.integer(i + 1));
    std::swap(order[i], order[j]);
  }
  const int n_test = static_cast<int>(std::llround(test_fraction * n));

  Dataset train, test;
  train.grid_size = test.grid_size = d.grid_size;
  for (int i = 0; i < n; ++i) {
    Dataset& dst = (i < n_test) ? test : train;
    dst.srvfs.push_back(d.srvfs[order[i]]);
    dst.raw.push_back(d.raw[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace srvfnet
