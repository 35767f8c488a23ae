// Stabilization, decay-rate measurement, damped observability scans and the
// global two-point steering pipeline: stabilize u0 to the smallness gate,
// drive the small state to 0 by local null control, then append the
// time-reversed conjugate of the same construction applied to conj(u1),
// which drives 0 to u1.

#pragma once

#include "nlsc/dynamics.hpp"
#include "nlsc/linear_control.hpp"
#include "nlsc/nonlinear_control.hpp"
#include "nlsc/spectral.hpp"

#include <string>
#include <vector>

namespace nlsc {

struct DecayFit {
  double c = 0;      // prefactor of C e^{-gamma t} relative to ||u(t0)||
  double gamma = 0;  // decay rate, inverse time units
  double t_a = 0, t_b = 0;
  double r2 = 0;
};

// Least-squares line through (t, log ||u(t)||) on [t_a, t_b].
DecayFit decay_rate_fit(const TrajectoryTrace& trace, double t_a, double t_b);

struct StabilizeResult {
  TrajectoryTrace trace;  // damped evolution, mesh dt/2 for exact replay hits
  TemporalProfile phi;    // the damping ramp actually used
  double t_star = -1;     // first crossing of the threshold
  double t_end = 0;       // phase length (crossing time padded by the ramp-down)
  bool reached = false;
  DecayFit fit;           // fit over the recorded span (partial when not reached)
};

// Damped evolution until ||u(t)|| <= threshold; phi ramps smoothly 0 -> 1
// at the start and back to 0 at the phase end, so the phase reads as a
// control g = -i a^2 phi^2 u supported in supp(a) and vanishing at both
// phase edges.  The phase length is rounded up to a multiple of dt.
StabilizeResult stabilize_until(const SpectralField& u0, const BumpProfile& a, double lambda,
                                double threshold, double t_max, double dt);

// max over the ensemble of ||u(0)||^2 / int_0^T ||a u||^2 dt for the damped
// flow (phi == 1); throws if some trajectory makes the observation vanish.
double damped_observability_scan(const BumpProfile& a, double lambda, double t_end,
                                 const std::vector<SpectralField>& ensemble, double dt = 1e-3);

struct SteeringOptions {
  double smallness_gate = 5e-3;
  double stabilize_t_max = 120;
  NullControlOptions null_opts;
};

struct SteeringPhase {
  std::string name;
  double start = 0, duration = 0;
};

struct SteeringPlan {
  std::vector<SteeringPhase> phases;
  double t_total = 0;
  SourceTerm control;             // assembled g on [0, t_total]
  TrajectoryTrace verification;   // forward solve of the full equation under g
  double end_error = 0;           // ||u(t_total) - u1||
  // per-phase records (forward side and the reversed construction)
  StabilizeResult stabilize_fwd, stabilize_rev;
  ControlSolution null_fwd, null_rev;
  bool has_forward_null = false, has_reverse = false;
};

// Theorem-2 style two-point steering u0 -> u1; throws if any phase fails.
SteeringPlan steer(const SpectralField& u0, const SpectralField& u1,
                   const ControlGeometry& geom, double lambda,
                   const SteeringOptions& opts = {});

}  // namespace nlsc
