#include "srvfnet/elastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "srvfnet/errors.hpp"
#include "srvfnet/parallel.hpp"

namespace srvfnet {

namespace {

constexpr double kUnitNormTol = 1e-6;
constexpr double kMeanNormFloor = 1e-12;

double interp_index(const Eigen::VectorXd& y, double pos) {
  const int i =
      std::clamp(static_cast<int>(std::floor(pos)), 0,
                 static_cast<int>(y.size()) - 2);
  const double f = pos - i;
  return y(i) * (1.0 - f) + y(i + 1) * f;
}

void require_unit(const Srvf& q, const char* who) {
  if (std::abs(trapz_norm_sq(q.values) - 1.0) > kUnitNormTol) {
    throw PreconditionError(std::string(who) + ": input must be unit norm");
  }
}

// Trapezoidal cost of the segment (i0,j0) -> (i0+a, j0+b): the warp is linear
// with slope b/a across the a grid columns, and qg is linearly interpolated.
double segment_cost(const Eigen::VectorXd& qf, const Eigen::VectorXd& qg,
                    int i0, int j0, int a, int b, double dt) {
  const double slope = static_cast<double>(b) / a;
  const double sq = std::sqrt(slope);
  double sum = 0.0;
  for (int m = 0; m <= a; ++m) {
    const double diff = qf(i0 + m) - sq * interp_index(qg, j0 + m * slope);
    const double w = (m == 0 || m == a) ? 0.5 : 1.0;
    sum += w * diff * diff;
  }
  return sum * dt;
}

// Knot values of sqrt(g') (qg o g) along the lattice path, matching the DP
// quadrature: where two segments meet with different slopes the two one-sided
// values are averaged. With these knots the unit-normalized Euclidean average
// is the exact minimizer of the summed DP cost over the sphere, so the
// Karcher objective trace cannot increase.
Eigen::VectorXd warped_knots(const Eigen::VectorXd& qg,
                             const std::vector<std::pair<int, int>>& path) {
  const int t = static_cast<int>(qg.size());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(t);
  Eigen::VectorXd cnt = Eigen::VectorXd::Zero(t);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(t);
  for (size_t s = 0; s + 1 < path.size(); ++s) {
    const auto [i0, j0] = path[s];
    const auto [i1, j1] = path[s + 1];
    const int a = i1 - i0;
    const double slope = static_cast<double>(j1 - j0) / a;
    const double sq = std::sqrt(slope);
    for (int m = 0; m <= a; ++m) {
      const double val = sq * interp_index(qg, j0 + m * slope);
      if (m == 0 || m == a) {
        sum(i0 + m) += val;
        cnt(i0 + m) += 1.0;
      } else {
        out(i0 + m) = val;
      }
    }
  }
  for (int k = 0; k < t; ++k) {
    if (cnt(k) > 0.0) out(k) = sum(k) / cnt(k);
  }
  return out;
}

}  // namespace

DpConfig DpConfig::defaults(int grid_size) {
  DpConfig cfg;
  cfg.grid_size = grid_size;
  cfg.slope_window = std::min(3, std::max(1, grid_size / 2));
  return cfg;
}

void validate(const DpConfig& cfg) {
  if (cfg.grid_size < 3) throw PreconditionError("DpConfig: grid size < 3");
  if (cfg.slope_window < 1 || cfg.slope_window > cfg.grid_size / 2) {
    throw PreconditionError("DpConfig: need 1 <= slope_window <= grid/2");
  }
}

DpResult dp_align(const Srvf& qf, const Srvf& qg, const DpConfig& cfg) {
  validate(cfg);
  const int t = cfg.grid_size;
  if (qf.size() != t || qg.size() != t) {
    throw DimensionError("dp_align: grid size mismatch with config");
  }
  require_unit(qf, "dp_align");
  require_unit(qg, "dp_align");

  const int l = cfg.slope_window;
  const double dt = grid_spacing(t);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(static_cast<size_t>(t) * t, inf);
  std::vector<int> step(static_cast<size_t>(t) * t, -1);  // a << 16 | b
  auto at = [t](int i, int j) { return static_cast<size_t>(i) * t + j; };
  cost[at(0, 0)] = 0.0;

  for (int i = 0; i <= t - 1; ++i) {
    for (int j = 0; j <= t - 1; ++j) {
      if (i == 0 && j == 0) continue;
      double best = inf;
      int best_step = -1;
      // (a, b) = (1, 1) comes first and ties never displace it, so exact
      // self-alignment returns the identity even on zero plateaus.
      for (int a = 1; a <= std::min(l, i); ++a) {
        for (int b = 1; b <= std::min(l, j); ++b) {
          const double prev = cost[at(i - a, j - b)];
          if (prev == inf) continue;
          const double c =
              prev + segment_cost(qf.values, qg.values, i - a, j - b, a, b, dt);
          if (c < best) {
            best = c;
            best_step = (a << 16) | b;
          }
        }
      }
      cost[at(i, j)] = best;
      step[at(i, j)] = best_step;
    }
  }

  if (step[at(t - 1, t - 1)] < 0) {
    throw NumericError("dp_align: no admissible lattice path");
  }

  DpResult res;
  res.cost = cost[at(t - 1, t - 1)];
  int i = t - 1, j = t - 1;
  res.path.emplace_back(i, j);
  while (i != 0 || j != 0) {
    const int s = step[at(i, j)];
    i -= s >> 16;
    j -= s & 0xffff;
    res.path.emplace_back(i, j);
  }
  std::reverse(res.path.begin(), res.path.end());

  Eigen::VectorXd gamma(t);
  for (size_t s = 0; s + 1 < res.path.size(); ++s) {
    const auto [i0, j0] = res.path[s];
    const auto [i1, j1] = res.path[s + 1];
    const double slope = static_cast<double>(j1 - j0) / (i1 - i0);
    for (int k = i0; k <= i1; ++k) {
      gamma(k) = (j0 + (k - i0) * slope) / (t - 1);
    }
  }
  res.warp = Diffeo{std::move(gamma)};
  return res;
}

KarcherResult karcher_mean(const std::vector<Srvf>& qs, const DpConfig& cfg,
                           int max_iter, double tol, int workers) {
  validate(cfg);
  if (qs.empty()) throw PreconditionError("karcher_mean: empty input");
  const int t = cfg.grid_size;
  const int n = static_cast<int>(qs.size());
  for (const Srvf& q : qs) {
    if (q.size() != t) throw DimensionError("karcher_mean: mixed grid sizes");
  }
  if (max_iter < 1) throw PreconditionError("karcher_mean: max_iter < 1");

  auto normalized_mean = [t](const Eigen::VectorXd& sum, int count) {
    Eigen::VectorXd avg = sum / count;
    const double nrm = trapz_norm(avg);
    if (nrm < kMeanNormFloor) {
      throw DegenerateInputError(
          "karcher_mean: average SRVF is numerically zero");
    }
    return Srvf{avg / nrm, true};
  };

  Eigen::VectorXd init_sum = Eigen::VectorXd::Zero(t);
  for (const Srvf& q : qs) init_sum += q.values;
  Srvf mean = normalized_mean(init_sum, n);

  KarcherResult res;
  std::vector<DpResult> aligned(n);
  while (res.iterations < max_iter) {
    parallel_for(n, workers,
                 [&](int i) { aligned[i] = dp_align(mean, qs[i], cfg); });

    double total_cost = 0.0;
    Eigen::VectorXd warped_sum = Eigen::VectorXd::Zero(t);
    for (int i = 0; i < n; ++i) {
      total_cost += aligned[i].cost;
      warped_sum += warped_knots(qs[i].values, aligned[i].path);
    }
    res.objective_trace.push_back(total_cost / n);

    Srvf next = normalized_mean(warped_sum, n);
    const double movement = geodesic_distance(mean, next);
    mean = std::move(next);
    ++res.iterations;
    if (movement < tol) {
      res.converged = true;
      break;
    }
  }

  res.mean = std::move(mean);
  res.warps.reserve(n);
  for (int i = 0; i < n; ++i) res.warps.push_back(std::move(aligned[i].warp));
  return res;
}

}  // namespace srvfnet
