#pragma once

#include <Eigen/Dense>
#include <vector>

#include "srvfnet/function.hpp"

namespace srvfnet {

/// A boundary-preserving non-decreasing warp of [0,1], sampled on the same
/// uniform grid as the functions it acts on.
struct Diffeo {
  Eigen::VectorXd values;

  int size() const { return static_cast<int>(values.size()); }
};

/// Configuration of the constraint-satisfaction and smoothing layer.
struct PiConfig {
  int grid_size = 0;        // T
  int smooth_size = 0;      // downsample target, must satisfy 3 <= smooth < T
  double norm_guard = 1e-8; // reject decoder outputs with ||v|| below this
  bool smoothing = true;    // down/upsample pass can be switched off

  static PiConfig defaults(int grid_size);
};

void validate(const Diffeo& g);
void validate(const PiConfig& cfg);

Diffeo identity_diffeo(int grid_size);

/// Linear interpolation of samples y (uniform grid on [0,1]) at x in [0,1].
double interp_uniform(const Eigen::VectorXd& y, double x);

/// Linear resampling of y onto a uniform grid with new_size points.
Eigen::VectorXd resample_linear(const Eigen::VectorXd& y, int new_size);

/// Rebuilds gamma from a velocity: entries are renormalized to sum to one
/// and accumulated with an exclusive prefix sum, so gamma(0) = 0 and
/// gamma(1) = 1 hold exactly.
Diffeo velocity_to_gamma(const Eigen::VectorXd& gdot);

/// The Pi layer: squared-normalized simplex map, prefix-sum reconstruction,
/// optional down/upsample smoothing, and exact constraint re-enforcement.
Diffeo pi_layer(const Eigen::VectorXd& v, const PiConfig& cfg);

/// Discrete velocity: forward differences scaled by (T-1), last entry
/// replicated. Entries are nonnegative for a valid Diffeo.
Eigen::VectorXd gamma_dot(const Diffeo& g);

/// Group action (q, gamma) -> sqrt(gamma') (q o gamma); an approximate
/// isometry of the trapezoidal norm.
Srvf warp_srvf(const Srvf& q, const Diffeo& g);

Diffeo compose_diffeo(const Diffeo& g1, const Diffeo& g2);

// --- differentiable building blocks -------------------------------------
//
// The training engine re-runs the Pi layer and the warp action inside its
// reverse-mode pass; the cached forms below are the single source of truth
// for both the public ops above and the gradient engine.

namespace graph {

/// Sparse form of the linear map "resample onto new uniform grid".
struct ResampleMap {
  int in_size = 0;
  int out_size = 0;
  std::vector<int> idx;    // left knot per output sample
  Eigen::VectorXd frac;    // interpolation weight of the right knot
};

ResampleMap make_resample_map(int in_size, int out_size);
Eigen::VectorXd resample_apply(const ResampleMap& m, const Eigen::VectorXd& y);
// Transpose (scatter) action used by the backward pass.
void resample_apply_transpose(const ResampleMap& m, const Eigen::VectorXd& dy,
                              Eigen::VectorXd& dx_accum);

/// velocity_to_gamma with cached intermediates: cum = inclusive prefix of d
/// (0 prepended), gamma = cum / cum.tail(1).
struct CumNormCache {
  Eigen::VectorXd cum;   // length T
  double total = 0.0;    // cum(T-1)
  Eigen::VectorXd gamma; // length T
};

void cumnorm_forward(const Eigen::VectorXd& d, CumNormCache& cache);
/// Accumulates d(loss)/d(d) into dd given d(loss)/d(gamma).
void cumnorm_backward(const CumNormCache& cache, const Eigen::VectorXd& dgamma,
                      Eigen::VectorXd& dd);

struct PiCache {
  Eigen::VectorXd v;
  double sq_sum = 0.0;       // ||v||^2 (Euclidean)
  Eigen::VectorXd simplex;   // (v/||v||)^2, length T
  CumNormCache head;         // on the first T-1 simplex entries
  Eigen::VectorXd smoothed;  // after down+up sampling (== head.gamma if off)
  Eigen::VectorXd diffs;     // forward differences of smoothed
  CumNormCache final_stage;  // on clamped diffs
};

/// Forward pass; cache.final_stage.gamma is the layer output.
void pi_forward(const Eigen::VectorXd& v, const PiConfig& cfg,
                const ResampleMap& down, const ResampleMap& up, PiCache& cache);
/// Given d(loss)/d(gamma_out), writes d(loss)/d(v) into dv.
void pi_backward(const PiCache& cache, const PiConfig& cfg,
                 const ResampleMap& down, const ResampleMap& up,
                 const Eigen::VectorXd& dgamma, Eigen::VectorXd& dv);

struct WarpCache {
  Eigen::VectorXd gdot;      // gamma_dot of the warp
  Eigen::VectorXd sqrt_gdot;
  std::vector<int> idx;      // interpolation knots of q at gamma
  Eigen::VectorXd frac;
  Eigen::VectorXd q_at_gamma;
  Eigen::VectorXd warped;    // sqrt_gdot .* q_at_gamma
};

void warp_forward(const Eigen::VectorXd& q, const Eigen::VectorXd& gamma,
                  WarpCache& cache);
/// Accumulates d(loss)/d(gamma) given d(loss)/d(warped). Interpolation
/// nodes use the piecewise-linear subgradient (left segment at knots).
void warp_backward(const Eigen::VectorXd& q, const WarpCache& cache,
                   const Eigen::VectorXd& dwarped, Eigen::VectorXd& dgamma);

}  // namespace graph

}  // namespace srvfnet
