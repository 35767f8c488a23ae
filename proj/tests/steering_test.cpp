#include "nlsc/steering.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace nlsc;

namespace {

constexpr double kPi = std::numbers::pi;

SpectralField random_field(const TorusGrid& grid, unsigned seed, double norm) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  SpectralField f(grid);
  for (int j = 0; j < grid.size(); ++j) {
    int k = grid.mode_of_index(j);
    f.coeffs[j] = Complex(nd(rng), nd(rng)) / std::pow(1.0 + std::abs(k), 2.0);
  }
  f.coeffs *= norm / l2_norm(f);
  return f;
}

BumpProfile full_damper(const TorusGrid& grid) {
  // degenerate bump: a == 1 on the whole circle
  return BumpProfile::make(grid, BumpSpec{0.0, 2.0 * kPi, 0.0, 2.0 * kPi},
                           TemporalProfile::one());
}

}  // namespace

TEST_CASE("decay fit recovers an exact exponential") {
  TorusGrid grid(16);
  TrajectoryTrace tr;
  tr.t0 = 0;
  tr.dt = 0.05;
  const double gamma = 0.25;
  for (int j = 0; j <= 200; ++j) {
    SpectralField f(grid);
    f.mode(1) = 0.8 * std::exp(-gamma * j * tr.dt);
    tr.snapshots.push_back(f);
  }
  DecayFit fit = decay_rate_fit(tr, 1.0, 10.0);
  CHECK(fit.gamma == doctest::Approx(gamma).epsilon(1e-10));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fit.t_a == 1.0);
  CHECK(fit.t_b == 10.0);
}

TEST_CASE("full-domain damping follows the closed-form envelope exactly") {
  // with a == 1 the damping factor acts uniformly: every step multiplies the
  // norm by exp(-phi(t_mid)^2 h) exactly, so the whole trace must match the
  // accumulated midpoint product to rounding
  TorusGrid grid(32);
  SpectralField u0 = random_field(grid, 2, 1.0);
  BumpProfile a = full_damper(grid);
  double dt = 1e-3;
  StabilizeResult res = stabilize_until(u0, a, 1.0, 0.1, 20.0, dt);
  CHECK(res.reached);
  CHECK(res.t_star > 0);
  // ln(1/0.1) = 2.30 of integrated phi^2 is needed; the ramp only delays it
  CHECK(res.t_star >= std::log(10.0) - 1e-9);
  CHECK(res.t_star <= std::log(10.0) + 1.5);
  double h = res.trace.dt;
  double envelope = l2_norm(u0);
  for (int j = 1; j <= res.trace.steps(); ++j) {
    double phi = res.phi.eval(res.trace.time_of(j - 1) + 0.5 * h);
    envelope *= std::exp(-phi * phi * h);
    CHECK(l2_norm(res.trace.snapshots[j]) == doctest::Approx(envelope).epsilon(1e-11));
  }
}

TEST_CASE("trivial stabilization: data already below threshold") {
  TorusGrid grid(16);
  SpectralField u0 = random_field(grid, 3, 1e-4);
  StabilizeResult res = stabilize_until(u0, full_damper(grid), 1.0, 1e-3, 10.0, 1e-3);
  CHECK(res.reached);
  CHECK(res.t_star == 0.0);
}

TEST_CASE("observability scan matches the closed form for uniform damping") {
  // a == 1, phi == 1: ||u(t)|| = e^{-t} ||u0||, so the scan ratio equals
  // ||u0||^2 over the trapezoid quadrature of e^{-2t} ||u0||^2
  TorusGrid grid(16);
  BumpProfile a = full_damper(grid);
  std::vector<SpectralField> ensemble{random_field(grid, 5, 1.0), random_field(grid, 6, 2.0)};
  const double T = 1.0, dt = 1e-3;
  double ratio = damped_observability_scan(a, 1.0, T, ensemble, dt);
  int steps = static_cast<int>(std::lround(T / dt));
  double quad = 0;
  for (int j = 0; j <= steps; ++j) {
    double w = (j == 0 || j == steps) ? 0.5 : 1.0;
    quad += w * dt * std::exp(-2.0 * j * dt);
  }
  CHECK(ratio == doctest::Approx(1.0 / quad).epsilon(1e-10));
  // continuum limit for reference: 2 / (1 - e^{-2T})
  CHECK(ratio == doctest::Approx(2.0 / (1.0 - std::exp(-2.0 * T))).epsilon(1e-4));
  CHECK_THROWS(damped_observability_scan(a, 1.0, T, {SpectralField(grid)}, dt));
}

TEST_CASE("data supported away from the damping region is still observed") {
  TorusGrid grid(32);
  BumpProfile a = BumpProfile::make(grid, BumpSpec{0.0, kPi / 2, 0.1 * kPi, 0.4 * kPi},
                                    TemporalProfile::one());
  // concentrated on the opposite side of the circle
  Vec vals = Vec::Zero(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    double x = grid.point(j);
    vals[j] = std::exp(-8.0 * std::pow(std::sin(0.5 * (x - 1.5 * kPi)), 2.0));
  }
  SpectralField u0 = to_spectral(grid, vals);
  u0.coeffs *= 1.0 / l2_norm(u0);
  double ratio = damped_observability_scan(a, 1.0, 2.0, {u0}, 1e-3);
  CHECK(std::isfinite(ratio));
  CHECK(ratio > 0);
}

TEST_CASE("damping written as a control replays through the sourced equation") {
  // fine-mesh lockstep check of the g_damp = -i a^2 phi^2 u identity: the
  // damped flow and the undamped flow driven by the recorded feedback source
  // must agree to 1e-8 all the way to the smallness crossing
  TorusGrid grid(32);
  SpectralField u0 = random_field(grid, 7, 1.0);
  BumpProfile a = BumpProfile::make(grid, BumpSpec{0.0, kPi / 2, 0.075 * kPi, 0.425 * kPi},
                                    TemporalProfile::one());
  TemporalProfile phi = TemporalProfile::ramp(0.5, 0.0, 0.0);
  const double dt = 5e-5, lambda = 1.0, threshold = 1e-2, t_max = 80.0;

  EvolutionParams damped;
  damped.lambda = lambda;
  damped.dt = 0.5 * dt;
  damped.damping = Damping{a.a_sq_phys, phi};
  EvolutionParams sourced;
  sourced.lambda = lambda;
  sourced.dt = dt;

  SpectralField u = u0, v = u0;
  double worst = 0, t = 0;
  bool crossed = false;
  while (t < t_max) {
    TrajectoryTrace local;
    local.t0 = t;
    local.dt = 0.5 * dt;
    local.snapshots.resize(3);
    local.snapshots[0] = u;
    local.snapshots[1] = strang_step(u, t, 0.5 * dt, damped, SourceTerm::zero());
    local.snapshots[2] =
        strang_step(local.snapshots[1], t + 0.5 * dt, 0.5 * dt, damped, SourceTerm::zero());
    u = local.snapshots[2];
    SourceTerm g = SourceTerm::damped_feedback(local, a.a_sq_phys, phi);
    v = strang_step(v, t, dt, sourced, g);
    t += dt;
    worst = std::max(worst, l2_norm(v - u));
    if (l2_norm(u) <= threshold) {
      crossed = true;
      break;
    }
  }
  CHECK(crossed);
  CHECK(t < t_max);
  CHECK(worst <= 1e-8);
}

TEST_CASE("two-point steering composes the three phases and hits the target") {
  TorusGrid grid(32);
  ControlGeometry geom =
      ControlGeometry::standard(grid, 1.0, BumpSpec{0.0, kPi, 0.15 * kPi, 0.85 * kPi}, 5e-4);
  SpectralField u0 = random_field(grid, 11, 1.0);
  SpectralField u1 = random_field(grid, 12, 1.0);
  SteeringPlan plan = steer(u0, u1, geom, 1.0);

  CHECK(plan.end_error <= 1e-4);
  CHECK(plan.t_total > 0);
  CHECK(plan.has_forward_null);
  CHECK(plan.has_reverse);
  // the phases tile [0, t_total]
  double cursor = 0;
  for (const auto& ph : plan.phases) {
    CHECK(ph.start == doctest::Approx(cursor).epsilon(1e-12));
    cursor += ph.duration;
  }
  CHECK(cursor == doctest::Approx(plan.t_total).epsilon(1e-12));
  // the control vanishes at both endpoints ...
  CHECK(l2_norm(plan.control.eval(0.0, grid)) <= 1e-10);
  CHECK(l2_norm(plan.control.eval(plan.t_total - 1e-12, grid)) <= 1e-10);
  // ... and outside the support of a, at all sampled times
  for (double frac : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    Vec g_phys = to_physical(plan.control.eval(frac * plan.t_total, grid));
    for (int j = 0; j < grid.size(); ++j) {
      if (grid.point(j) > kPi) CHECK(std::abs(g_phys[j]) <= 1e-12);
    }
  }
  // the verification trace starts at u0 and ends on the target
  CHECK(l2_norm(plan.verification.front() - u0) <= 1e-12);
  CHECK(l2_norm(plan.verification.back() - u1) <= 1e-4);
}

TEST_CASE("steering rejects a hopeless stabilization budget") {
  TorusGrid grid(16);
  ControlGeometry geom =
      ControlGeometry::standard(grid, 1.0, BumpSpec{0.0, kPi, 0.15 * kPi, 0.85 * kPi}, 1e-3);
  SpectralField u0 = random_field(grid, 13, 1.0);
  SpectralField u1 = random_field(grid, 14, 1.0);
  SteeringOptions opts;
  opts.stabilize_t_max = 0.5;  // cannot possibly reach the gate
  CHECK_THROWS(steer(u0, u1, geom, 1.0, opts));
}
