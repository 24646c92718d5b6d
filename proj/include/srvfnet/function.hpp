#pragma once

#include <Eigen/Dense>

namespace srvfnet {

/// A scalar function sampled on the uniform grid of [0,1]; spacing is
/// 1/(T-1) where T = values.size().
struct SampledFunction {
  Eigen::VectorXd values;

  int size() const { return static_cast<int>(values.size()); }
};

/// Square-root velocity representation q = f' / sqrt(|f'|). When unit_norm
/// is set, <q,q> = 1 holds under the trapezoidal inner product.
struct Srvf {
  Eigen::VectorXd values;
  bool unit_norm = false;

  int size() const { return static_cast<int>(values.size()); }
};

inline double grid_spacing(int grid_size) { return 1.0 / (grid_size - 1); }

/// Trapezoidal-rule approximation of the L2 inner product on [0,1].
double trapz_inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double trapz_norm_sq(const Eigen::VectorXd& a);
double trapz_norm(const Eigen::VectorXd& a);

double inner_product(const SampledFunction& a, const SampledFunction& b);
double inner_product(const Srvf& a, const Srvf& b);

/// Throws PreconditionError unless T >= 3 and all samples are finite.
void validate(const SampledFunction& f);

/// Second-order derivative on the uniform grid: central differences in the
/// interior, one-sided three-point stencils at the ends.
Eigen::VectorXd numerical_derivative(const SampledFunction& f);

/// SRVF map. Samples where |f'| falls below the 1e-12 floor map to q = 0,
/// the continuous limit of f'/sqrt(|f'|). With normalize, the result is
/// scaled onto the unit Hilbert sphere (degenerate if f' vanishes a.e.).
Srvf to_srvf(const SampledFunction& f, bool normalize);

/// Inverse map f(s) = f0 + integral_0^s q|q|, cumulative trapezoid.
SampledFunction from_srvf(const Srvf& q, double f0);

/// Arc distance acos(<a,b>) on the unit sphere; requires unit-norm inputs.
double geodesic_distance(const Srvf& a, const Srvf& b);

}  // namespace srvfnet
