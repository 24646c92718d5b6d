#pragma once

#include <utility>
#include <vector>

#include "srvfnet/diffeo.hpp"
#include "srvfnet/function.hpp"

namespace srvfnet {

/// Lattice search controls for dynamic-programming alignment.
struct DpConfig {
  int slope_window = 3;  // steps (a, b) with 1 <= a, b <= slope_window
  int grid_size = 0;
  static DpConfig defaults(int grid_size);
};

void validate(const DpConfig& cfg);

struct DpResult {
  Diffeo warp;
  double cost = 0.0;
  // Lattice nodes (i, j) visited by the optimal path, (0,0) .. (T-1,T-1).
  std::vector<std::pair<int, int>> path;
};

/// Minimizes ||qf - sqrt(g') (qg o g)||^2 over piecewise-linear warps whose
/// knots lie on the integer lattice with step sizes bounded by slope_window.
/// Both inputs must be unit norm. The identity path is always admissible,
/// so the returned cost never exceeds the unaligned cost.
DpResult dp_align(const Srvf& qf, const Srvf& qg, const DpConfig& cfg);

struct KarcherResult {
  Srvf mean;
  std::vector<Diffeo> warps;
  std::vector<double> objective_trace;  // mean squared alignment cost
  int iterations = 0;
  bool converged = false;
};

/// Alternates (i) aligning every input to the current mean and (ii) replacing
/// the mean with the unit-normalized Euclidean average of the warped SRVFs,
/// starting from the normalized average of the inputs. Stops once the mean's
/// geodesic movement drops below tol or after max_iter rounds. The averaging
/// in (ii) uses knot values consistent with the DP quadrature, which makes
/// objective_trace non-increasing up to rounding. Alignment calls within one
/// round fan out across `workers` threads.
KarcherResult karcher_mean(const std::vector<Srvf>& qs, const DpConfig& cfg,
                           int max_iter, double tol, int workers = 1);

}  // namespace srvfnet
