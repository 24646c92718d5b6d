#include "srvfnet/function.hpp"

#include <algorithm>
#include <cmath>

#include "srvfnet/errors.hpp"

namespace srvfnet {

namespace {
constexpr double kDerivativeFloor = 1e-12;   // |f'| below this maps to q = 0
constexpr double kUnitNormTolerance = 1e-6;  // geodesic precondition slack
}  // namespace

double trapz_inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw DimensionError("trapz_inner: length mismatch " +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  const auto n = a.size();
  if (n < 2) throw PreconditionError("trapz_inner: need at least 2 samples");
  double s = a.dot(b) - 0.5 * (a(0) * b(0) + a(n - 1) * b(n - 1));
  return s * grid_spacing(static_cast<int>(n));
}

double trapz_norm_sq(const Eigen::VectorXd& a) { return trapz_inner(a, a); }

double trapz_norm(const Eigen::VectorXd& a) {
  return std::sqrt(std::max(0.0, trapz_norm_sq(a)));
}

double inner_product(const SampledFunction& a, const SampledFunction& b) {
  return trapz_inner(a.values, b.values);
}

double inner_product(const Srvf& a, const Srvf& b) {
  return trapz_inner(a.values, b.values);
}

void validate(const SampledFunction& f) {
  if (f.size() < 3) {
    throw PreconditionError("SampledFunction: grid size must be >= 3");
  }
  if (!f.values.allFinite()) {
    throw PreconditionError("SampledFunction: non-finite sample");
  }
}

Eigen::VectorXd numerical_derivative(const SampledFunction& f) {
  validate(f);
  const int t = f.size();
  const double inv2h = 0.5 / grid_spacing(t);
  const Eigen::VectorXd& y = f.values;
  Eigen::VectorXd d(t);
  d(0) = (-3.0 * y(0) + 4.0 * y(1) - y(2)) * inv2h;
  for (int k = 1; k + 1 < t; ++k) d(k) = (y(k + 1) - y(k - 1)) * inv2h;
  d(t - 1) = (3.0 * y(t - 1) - 4.0 * y(t - 2) + y(t - 3)) * inv2h;
  return d;
}

Srvf to_srvf(const SampledFunction& f, bool normalize) {
  const Eigen::VectorXd d = numerical_derivative(f);
  Eigen::VectorXd q(d.size());
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    const double a = std::abs(d(k));
    q(k) = (a < kDerivativeFloor) ? 0.0 : d(k) / std::sqrt(a);
  }
  if (normalize) {
    const double n = trapz_norm(q);
    if (n < kDerivativeFloor) {
      throw DegenerateInputError(
          "to_srvf: derivative vanishes everywhere, cannot normalize");
    }
    q /= n;
    return Srvf{std::move(q), true};
  }
  return Srvf{std::move(q), false};
}

SampledFunction from_srvf(const Srvf& q, double f0) {
  const int t = q.size();
  if (t < 3) throw PreconditionError("from_srvf: grid size must be >= 3");
  const double h = grid_spacing(t);
  // q|q| = sign(q) q^2 recovers f'.
  const Eigen::VectorXd g = q.values.cwiseProduct(q.values.cwiseAbs());
  Eigen::VectorXd f(t);
  f(0) = f0;
  for (int k = 1; k < t; ++k) {
    f(k) = f(k - 1) + 0.5 * h * (g(k - 1) + g(k));
  }
  return SampledFunction{std::move(f)};
}

double geodesic_distance(const Srvf& a, const Srvf& b) {
  if (a.size() != b.size()) {
    throw DimensionError("geodesic_distance: length mismatch");
  }
  if (std::abs(trapz_norm_sq(a.values) - 1.0) > kUnitNormTolerance ||
      std::abs(trapz_norm_sq(b.values) - 1.0) > kUnitNormTolerance) {
    throw PreconditionError("geodesic_distance: inputs must be unit norm");
  }
  const double c = std::clamp(trapz_inner(a.values, b.values), -1.0, 1.0);
  return std::acos(c);
}

}  // namespace srvfnet
