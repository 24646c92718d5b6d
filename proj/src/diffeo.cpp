#include "srvfnet/diffeo.hpp"

#include <algorithm>
#include <cmath>

#include "srvfnet/errors.hpp"

namespace srvfnet {

namespace {
constexpr double kEndpointTol = 1e-9;
constexpr double kVelocityFloor = 1e-300;  // positive-sum guard
}  // namespace

PiConfig PiConfig::defaults(int grid_size) {
  PiConfig cfg;
  cfg.grid_size = grid_size;
  cfg.smooth_size = std::max(3, std::min(grid_size - 1,
                                         std::max(10, grid_size / 10)));
  cfg.smoothing = grid_size >= 4;
  return cfg;
}

void validate(const Diffeo& g) {
  const int t = g.size();
  if (t < 3) throw PreconditionError("Diffeo: grid size must be >= 3");
  if (std::abs(g.values(0)) > kEndpointTol ||
      std::abs(g.values(t - 1) - 1.0) > kEndpointTol) {
    throw PreconditionError("Diffeo: endpoints must be 0 and 1");
  }
  for (int k = 0; k + 1 < t; ++k) {
    if (g.values(k + 1) < g.values(k)) {
      throw PreconditionError("Diffeo: values must be non-decreasing");
    }
  }
}

void validate(const PiConfig& cfg) {
  if (cfg.grid_size < 3) throw PreconditionError("PiConfig: grid size < 3");
  if (cfg.smoothing &&
      (cfg.smooth_size < 3 || cfg.smooth_size >= cfg.grid_size)) {
    throw PreconditionError("PiConfig: need 3 <= smooth_size < grid_size");
  }
}

Diffeo identity_diffeo(int grid_size) {
  return Diffeo{Eigen::VectorXd::LinSpaced(grid_size, 0.0, 1.0)};
}

double interp_uniform(const Eigen::VectorXd& y, double x) {
  const int n = static_cast<int>(y.size());
  const double pos = x * (n - 1);
  int i = static_cast<int>(std::floor(pos));
  i = std::clamp(i, 0, n - 2);
  const double f = pos - i;
  return y(i) * (1.0 - f) + y(i + 1) * f;
}

Eigen::VectorXd resample_linear(const Eigen::VectorXd& y, int new_size) {
  return graph::resample_apply(graph::make_resample_map(
                                   static_cast<int>(y.size()), new_size),
                               y);
}

Diffeo velocity_to_gamma(const Eigen::VectorXd& gdot) {
  if (gdot.size() < 2) {
    throw PreconditionError("velocity_to_gamma: need at least 2 entries");
  }
  if ((gdot.array() < 0.0).any()) {
    throw PreconditionError("velocity_to_gamma: entries must be nonnegative");
  }
  graph::CumNormCache cache;
  graph::cumnorm_forward(gdot, cache);
  return Diffeo{std::move(cache.gamma)};
}

Diffeo pi_layer(const Eigen::VectorXd& v, const PiConfig& cfg) {
  validate(cfg);
  const auto down = graph::make_resample_map(cfg.grid_size, cfg.smooth_size);
  const auto up = graph::make_resample_map(cfg.smooth_size, cfg.grid_size);
  graph::PiCache cache;
  graph::pi_forward(v, cfg, down, up, cache);
  return Diffeo{std::move(cache.final_stage.gamma)};
}

Eigen::VectorXd gamma_dot(const Diffeo& g) {
  const int t = g.size();
  const double scale = static_cast<double>(t - 1);
  Eigen::VectorXd d(t);
  for (int k = 0; k + 1 < t; ++k) d(k) = (g.values(k + 1) - g.values(k)) * scale;
  d(t - 1) = d(t - 2);
  return d;
}

Srvf warp_srvf(const Srvf& q, const Diffeo& g) {
  if (q.size() != g.size()) {
    throw DimensionError("warp_srvf: grid size mismatch");
  }
  graph::WarpCache cache;
  graph::warp_forward(q.values, g.values, cache);
  return Srvf{std::move(cache.warped), false};
}

Diffeo compose_diffeo(const Diffeo& g1, const Diffeo& g2) {
  if (g1.size() != g2.size()) {
    throw DimensionError("compose_diffeo: grid size mismatch");
  }
  const int t = g1.size();
  Eigen::VectorXd out(t);
  for (int k = 0; k < t; ++k) out(k) = interp_uniform(g1.values, g2.values(k));
  return Diffeo{std::move(out)};
}

namespace graph {

ResampleMap make_resample_map(int in_size, int out_size) {
  if (in_size < 2 || out_size < 2) {
    throw PreconditionError("resample: sizes must be >= 2");
  }
  ResampleMap m;
  m.in_size = in_size;
  m.out_size = out_size;
  m.idx.resize(out_size);
  m.frac.resize(out_size);
  const double step = static_cast<double>(in_size - 1) / (out_size - 1);
  for (int j = 0; j < out_size; ++j) {
    const double pos = j * step;
    int i = static_cast<int>(std::floor(pos));
    i = std::clamp(i, 0, in_size - 2);
    m.idx[j] = i;
    m.frac(j) = pos - i;
  }
  // Pin the last sample to the last knot so endpoints survive exactly.
  m.idx[out_size - 1] = in_size - 2;
  m.frac(out_size - 1) = 1.0;
  return m;
}

Eigen::VectorXd resample_apply(const ResampleMap& m, const Eigen::VectorXd& y) {
  if (y.size() != m.in_size) throw DimensionError("resample_apply: bad input");
  Eigen::VectorXd out(m.out_size);
  for (int j = 0; j < m.out_size; ++j) {
    const int i = m.idx[j];
    const double f = m.frac(j);
    out(j) = y(i) * (1.0 - f) + y(i + 1) * f;
  }
  return out;
}

void resample_apply_transpose(const ResampleMap& m, const Eigen::VectorXd& dy,
                              Eigen::VectorXd& dx_accum) {
  for (int j = 0; j < m.out_size; ++j) {
    const int i = m.idx[j];
    const double f = m.frac(j);
    dx_accum(i) += dy(j) * (1.0 - f);
    dx_accum(i + 1) += dy(j) * f;
  }
}

void cumnorm_forward(const Eigen::VectorXd& d, CumNormCache& cache) {
  const int t = static_cast<int>(d.size()) + 1;
  cache.cum.resize(t);
  cache.cum(0) = 0.0;
  for (int k = 1; k < t; ++k) cache.cum(k) = cache.cum(k - 1) + d(k - 1);
  cache.total = cache.cum(t - 1);
  if (!std::isfinite(cache.total)) {
    throw NumericError("velocity_to_gamma: velocity sum overflow");
  }
  if (!(cache.total > kVelocityFloor)) {
    throw DegenerateInputError("velocity_to_gamma: velocity sum is zero");
  }
  cache.gamma = cache.cum / cache.total;
}

void cumnorm_backward(const CumNormCache& cache, const Eigen::VectorXd& dgamma,
                      Eigen::VectorXd& dd) {
  const int t = static_cast<int>(cache.cum.size());
  const double s = cache.total;
  const double mix = dgamma.dot(cache.gamma);
  // Suffix sums of d(cum); entry T-1 also carries the normalization term.
  double acc = (dgamma(t - 1) - mix) / s;
  dd(t - 2) += acc;
  for (int i = t - 3; i >= 0; --i) {
    acc += dgamma(i + 1) / s;
    dd(i) += acc;
  }
}

void pi_forward(const Eigen::VectorXd& v, const PiConfig& cfg,
                const ResampleMap& down, const ResampleMap& up,
                PiCache& cache) {
  const int t = cfg.grid_size;
  if (v.size() != t) throw DimensionError("pi_layer: input length != grid");
  if (!v.allFinite()) throw NumericError("pi_layer: non-finite input");
  cache.v = v;
  cache.sq_sum = v.squaredNorm();
  if (!std::isfinite(cache.sq_sum)) {
    // finite entries can still overflow the sum of squares
    throw NumericError("pi_layer: squared norm overflow");
  }
  if (std::sqrt(cache.sq_sum) <= cfg.norm_guard) {
    throw DegenerateInputError("pi_layer: ||v|| below guard");
  }
  cache.simplex = v.cwiseProduct(v) / cache.sq_sum;
  cumnorm_forward(cache.simplex.head(t - 1), cache.head);

  if (cfg.smoothing) {
    cache.smoothed = resample_apply(up, resample_apply(down, cache.head.gamma));
  } else {
    cache.smoothed = cache.head.gamma;
  }
  cache.diffs = cache.smoothed.tail(t - 1) - cache.smoothed.head(t - 1);
  cumnorm_forward(cache.diffs.cwiseMax(0.0), cache.final_stage);
}

void pi_backward(const PiCache& cache, const PiConfig& cfg,
                 const ResampleMap& down, const ResampleMap& up,
                 const Eigen::VectorXd& dgamma, Eigen::VectorXd& dv) {
  const int t = cfg.grid_size;
  Eigen::VectorXd dclamped = Eigen::VectorXd::Zero(t - 1);
  cumnorm_backward(cache.final_stage, dgamma, dclamped);

  Eigen::VectorXd dsmoothed = Eigen::VectorXd::Zero(t);
  for (int k = 0; k + 1 < t; ++k) {
    if (cache.diffs(k) > 0.0) {
      dsmoothed(k + 1) += dclamped(k);
      dsmoothed(k) -= dclamped(k);
    }
  }

  Eigen::VectorXd dpre;  // gradient w.r.t. the pre-smoothing gamma
  if (cfg.smoothing) {
    Eigen::VectorXd dsmall = Eigen::VectorXd::Zero(cfg.smooth_size);
    resample_apply_transpose(up, dsmoothed, dsmall);
    dpre = Eigen::VectorXd::Zero(t);
    resample_apply_transpose(down, dsmall, dpre);
  } else {
    dpre = std::move(dsmoothed);
  }

  Eigen::VectorXd dhead = Eigen::VectorXd::Zero(t - 1);
  cumnorm_backward(cache.head, dpre, dhead);

  // Through the squared-normalized simplex map w = v.^2 / ||v||^2.
  Eigen::VectorXd dsimplex = Eigen::VectorXd::Zero(t);
  dsimplex.head(t - 1) = dhead;
  const double dot = cache.simplex.dot(dsimplex);
  dv = (2.0 / cache.sq_sum) *
       cache.v.cwiseProduct((dsimplex.array() - dot).matrix());
}

void warp_forward(const Eigen::VectorXd& q, const Eigen::VectorXd& gamma,
                  WarpCache& cache) {
  const int t = static_cast<int>(q.size());
  const double scale = static_cast<double>(t - 1);
  cache.gdot.resize(t);
  for (int k = 0; k + 1 < t; ++k) {
    cache.gdot(k) = (gamma(k + 1) - gamma(k)) * scale;
  }
  cache.gdot(t - 1) = cache.gdot(t - 2);
  cache.sqrt_gdot = cache.gdot.cwiseMax(0.0).cwiseSqrt();

  cache.idx.resize(t);
  cache.frac.resize(t);
  cache.q_at_gamma.resize(t);
  for (int k = 0; k < t; ++k) {
    const double pos = gamma(k) * scale;
    int i = static_cast<int>(std::floor(pos));
    i = std::clamp(i, 0, t - 2);
    const double f = pos - i;
    cache.idx[k] = i;
    cache.frac(k) = f;
    cache.q_at_gamma(k) = q(i) * (1.0 - f) + q(i + 1) * f;
  }
  cache.warped = cache.sqrt_gdot.cwiseProduct(cache.q_at_gamma);
}

void warp_backward(const Eigen::VectorXd& q, const WarpCache& cache,
                   const Eigen::VectorXd& dwarped, Eigen::VectorXd& dgamma) {
  const int t = static_cast<int>(q.size());
  const double scale = static_cast<double>(t - 1);

  Eigen::VectorXd dgdot(t);
  for (int k = 0; k < t; ++k) {
    const double sq = cache.sqrt_gdot(k);
    dgdot(k) = (sq > 0.0)
                   ? dwarped(k) * cache.q_at_gamma(k) * 0.5 / sq
                   : 0.0;
    // Composition node: slope of the segment q lies on at gamma(k).
    const int i = cache.idx[k];
    dgamma(k) += dwarped(k) * cache.sqrt_gdot(k) * (q(i + 1) - q(i)) * scale;
  }
  dgdot(t - 2) += dgdot(t - 1);  // replicated last velocity entry
  for (int k = 0; k + 1 < t; ++k) {
    dgamma(k + 1) += dgdot(k) * scale;
    dgamma(k) -= dgdot(k) * scale;
  }
}

}  // namespace graph

}  // namespace srvfnet
