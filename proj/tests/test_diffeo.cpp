#include <cmath>

#include "doctest.h"
#include "srvfnet/diffeo.hpp"
#include "srvfnet/errors.hpp"
#include "srvfnet/function.hpp"
#include "srvfnet/rng.hpp"
#include "test_helpers.hpp"

using namespace srvfnet;

TEST_CASE("identity diffeo is the uniform grid") {
  const Diffeo id = identity_diffeo(50);
  CHECK(testutil::valid_diffeo(id.values, 1e-15));
  CHECK(id.values(25) == doctest::Approx(25.0 / 49.0).epsilon(1e-14));
  const Eigen::VectorXd gd = gamma_dot(id);
  for (int k = 0; k < 50; ++k) CHECK(gd(k) == doctest::Approx(1.0));
}

TEST_CASE("linear resampling preserves endpoints and linear data") {
  const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(37, -0.5, 2.0);
  const Eigen::VectorXd up = resample_linear(y, 101);
  CHECK(up(0) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(up(100) == doctest::Approx(2.0).epsilon(1e-14));
  for (int k = 0; k < 101; ++k) {
    const double x = static_cast<double>(k) / 100;
    CHECK(up(k) == doctest::Approx(-0.5 + 2.5 * x).epsilon(1e-12));
  }
}

TEST_CASE("resample map transpose is the adjoint of the forward map") {
  using namespace graph;
  Rng rng(3);
  const ResampleMap m = make_resample_map(23, 61);
  Eigen::VectorXd x(23), y(61);
  for (int k = 0; k < 23; ++k) x(k) = rng.gaussian();
  for (int k = 0; k < 61; ++k) y(k) = rng.gaussian();
  const Eigen::VectorXd ax = resample_apply(m, x);
  Eigen::VectorXd aty = Eigen::VectorXd::Zero(23);
  resample_apply_transpose(m, y, aty);
  CHECK(ax.dot(y) == doctest::Approx(x.dot(aty)).epsilon(1e-12));
}

TEST_CASE("velocity to gamma enforces the boundary exactly") {
  Rng rng(17);
  Eigen::VectorXd v(40);
  for (int k = 0; k < 40; ++k) v(k) = rng.uniform(0.1, 2.0);
  const Diffeo g = velocity_to_gamma(v);
  CHECK(g.values(0) == 0.0);
  CHECK(g.values(g.size() - 1) == 1.0);
  CHECK(testutil::valid_diffeo(g.values, 0.0));
  CHECK_THROWS_AS(velocity_to_gamma(Eigen::VectorXd::Zero(10)),
                  DegenerateInputError);
}

TEST_CASE("constraint layer output is always a valid warp") {
  Rng rng(99);
  const PiConfig cfg = PiConfig::defaults(120);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd v(120);
    for (int k = 0; k < 120; ++k) v(k) = rng.gaussian();
    const Diffeo g = pi_layer(v, cfg);
    CHECK(testutil::valid_diffeo(g.values, 1e-9));
  }
  CHECK_THROWS_AS(pi_layer(Eigen::VectorXd::Zero(120), cfg),
                  DegenerateInputError);
}

TEST_CASE("constraint layer works with smoothing disabled") {
  Rng rng(7);
  PiConfig cfg = PiConfig::defaults(60);
  cfg.smoothing = false;
  Eigen::VectorXd v(60);
  for (int k = 0; k < 60; ++k) v(k) = rng.gaussian();
  const Diffeo g = pi_layer(v, cfg);
  CHECK(testutil::valid_diffeo(g.values, 1e-9));
}

TEST_CASE("warping by the identity changes nothing") {
  const Srvf q = testutil::bump_srvf(4, 70);
  const Srvf w = warp_srvf(q, identity_diffeo(70));
  CHECK((w.values - q.values).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("composition with the identity is a no-op") {
  Rng rng(12);
  const PiConfig cfg = PiConfig::defaults(64);
  Eigen::VectorXd v(64);
  for (int k = 0; k < 64; ++k) v(k) = rng.gaussian();
  const Diffeo g = pi_layer(v, cfg);
  const Diffeo gi = compose_diffeo(g, identity_diffeo(64));
  CHECK((gi.values - g.values).lpNorm<Eigen::Infinity>() < 1e-12);
}

// Finite-difference check of the full differentiable chain
// v -> pi -> warp -> scalar, against the reverse-mode building blocks.
TEST_CASE("constraint layer and warp gradients match finite differences") {
  using namespace graph;
  Rng rng(31);
  const int t = 24;
  PiConfig cfg = PiConfig::defaults(t);
  cfg.smooth_size = 9;
  const ResampleMap down = make_resample_map(t, cfg.smooth_size);
  const ResampleMap up = make_resample_map(cfg.smooth_size, t);
  const Srvf q = testutil::random_srvf(rng, t);

  Eigen::VectorXd v(t), weight(t);
  for (int k = 0; k < t; ++k) {
    v(k) = rng.gaussian();
    weight(k) = rng.gaussian();
  }

  const auto scalar = [&](const Eigen::VectorXd& vv) {
    PiCache pc;
    pi_forward(vv, cfg, down, up, pc);
    WarpCache wc;
    warp_forward(q.values, pc.final_stage.gamma, wc);
    return weight.dot(wc.warped);
  };

  // reverse pass
  PiCache pc;
  pi_forward(v, cfg, down, up, pc);
  WarpCache wc;
  warp_forward(q.values, pc.final_stage.gamma, wc);
  Eigen::VectorXd dgamma = Eigen::VectorXd::Zero(t);
  warp_backward(q.values, wc, weight, dgamma);
  Eigen::VectorXd dv;
  pi_backward(pc, cfg, down, up, dgamma, dv);

  const double eps = 1e-6;
  for (int k = 0; k < t; ++k) {
    Eigen::VectorXd vp = v, vm = v;
    vp(k) += eps;
    vm(k) -= eps;
    const double fd = (scalar(vp) - scalar(vm)) / (2 * eps);
    CHECK(dv(k) == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("prefix-sum normalization gradient matches finite differences") {
  using namespace graph;
  Rng rng(41);
  const int n = 15;
  Eigen::VectorXd d(n), w(n + 1);
  for (int k = 0; k < n; ++k) d(k) = rng.uniform(0.05, 1.0);
  for (int k = 0; k <= n; ++k) w(k) = rng.gaussian();

  const auto scalar = [&](const Eigen::VectorXd& dd) {
    CumNormCache c;
    cumnorm_forward(dd, c);
    return w.dot(c.gamma);
  };

  CumNormCache c;
  cumnorm_forward(d, c);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
  cumnorm_backward(c, w, grad);

  const double eps = 1e-7;
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd dp = d, dm = d;
    dp(k) += eps;
    dm(k) -= eps;
    const double fd = (scalar(dp) - scalar(dm)) / (2 * eps);
    CHECK(grad(k) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("warp action approximately preserves the norm") {
  const int t = 300;
  const Srvf q = testutil::bump_srvf(21, t);

  // Smooth warps: the forward-difference velocity is first-order accurate
  // but its bias integrates against a smooth curvature, so the norm drift
  // stays well inside 5e-3 at this resolution.
  std::vector<Eigen::VectorXd> gammas;
  for (const double a : {0.5, 0.8, 1.25, 2.0}) {
    Eigen::VectorXd g(t);
    for (int k = 0; k < t; ++k) {
      g(k) = std::pow(static_cast<double>(k) / (t - 1), a);
    }
    gammas.push_back(g);
  }
  for (const double amp : {0.05, 0.1}) {
    Eigen::VectorXd g(t);
    for (int k = 0; k < t; ++k) {
      const double x = static_cast<double>(k) / (t - 1);
      g(k) = x + amp * std::sin(2.0 * M_PI * x) / (2.0 * M_PI);
    }
    gammas.push_back(g);
  }
  for (const Eigen::VectorXd& g : gammas) {
    const Srvf w = warp_srvf(q, Diffeo{g});
    CHECK(std::abs(trapz_norm(w.values) - 1.0) < 5e-3);
  }

  // Rough piecewise-linear warps from the constraint layer have slope jumps,
  // so the quadrature only holds them to a looser bound.
  Rng rng(55);
  const PiConfig cfg = PiConfig::defaults(t);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd v(t);
    for (int k = 0; k < t; ++k) v(k) = rng.gaussian();
    const Srvf w = warp_srvf(q, pi_layer(v, cfg));
    CHECK(std::abs(trapz_norm(w.values) - 1.0) < 2e-2);
  }
}
