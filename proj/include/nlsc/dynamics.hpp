// Time integration of the controlled/damped cubic NLS
//
//   i u_t + u_xx + i phi(t)^2 a(x)^2 u = lambda |u|^2 u + g
//
// by Strang splitting with exactly solvable sub-flows:
// half linear phase, nonlinear phase, damping factor, midpoint source
// kick, half linear phase.

#pragma once

#include "nlsc/spectral.hpp"

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlsc {

struct TrajectoryTrace {
  double t0 = 0;
  double dt = 0;
  std::vector<SpectralField> snapshots;  // at t0 + j*dt
  bool under_resolved = false;           // tail monitor tripped somewhere
  double max_tail_fraction = 0;

  double t1() const { return t0 + dt * (static_cast<double>(snapshots.size()) - 1); }
  int steps() const { return static_cast<int>(snapshots.size()) - 1; }
  double time_of(int j) const { return t0 + j * dt; }
  const SpectralField& front() const { return snapshots.front(); }
  const SpectralField& back() const { return snapshots.back(); }
  // linear interpolation between bracketing snapshots
  SpectralField sample(double t) const;
};

struct Damping {
  RealVec a_sq_phys;        // a(x_j)^2
  TemporalProfile phi;      // phi_damp(t)
};

struct EvolutionParams {
  double lambda = 0;
  std::optional<Damping> damping;
  double dt = 1e-3;
  bool dealias = false;  // off inside the integrator by default
  double tail_monitor_threshold = 1e-4;
  double blowup_step_factor = 2.0;  // per-step norm growth that trips the guard
};

struct BlowupError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SourceSegment;

// Time-dependent source g(t, x), evaluated as a spectral field.  Several
// closed forms are supported so that evaluation at integrator midpoints
// stays accurate; trace-backed sources interpolate in the interaction
// picture (slowly varying) and prefer exact sample hits.
class SourceTerm {
 public:
  SourceTerm();  // zero source
  static SourceTerm zero();
  // trace samples; stored internally as e^{-it dxx} u(t) and re-propagated
  // on evaluation
  static SourceTerm from_trace(const TrajectoryTrace& trace);
  // HUM control g = a^2 phi(t)^2 e^{it dxx} Phi0 (exact at any t)
  static SourceTerm hum(SpectralField phi0, RealVec a_sq_phys, TemporalProfile phi,
                        double t_offset = 0.0);
  // damping written as a control: g = -i a^2 phi(t)^2 u(t), u given by trace
  static SourceTerm damped_feedback(const TrajectoryTrace& u_trace, RealVec a_sq_phys,
                                    TemporalProfile phi);
  // t -> conj of inner(t_total - t); drives 0 to conj(final state of inner run)
  static SourceTerm time_reversed_conj(SourceTerm inner, double t_total);
  static SourceTerm shifted(SourceTerm inner, double t_offset);
  // piecewise source: segment i active on [start_i, start_i + duration_i)
  using Segment = SourceSegment;
  static SourceTerm concat(std::vector<Segment> segments);

  bool is_zero() const;
  SpectralField eval(double t, const TorusGrid& grid) const;

  struct Impl;

 private:
  std::shared_ptr<const Impl> impl_;
};

struct SourceSegment {
  double start = 0, duration = 0;
  SourceTerm source;
};

struct StepDiag {
  double tail_fraction = 0;     // energy fraction in the top 1/8 of modes
  double source_kick_norm = 0;  // |dt| * ||g(midpoint)||
};

// One Strang step from t to t + dt_signed (dt_signed may be negative for
// backward integration).
SpectralField strang_step(const SpectralField& u, double t, double dt_signed,
                          const EvolutionParams& params, const SourceTerm& g,
                          StepDiag* diag = nullptr);

// Forward integration on [t0, t1] with params.dt.
TrajectoryTrace evolve(const SpectralField& u0, double t0, double t1,
                       const EvolutionParams& params, const SourceTerm& g);

// Backward integration from u(t1) = u1 down to t0; the returned trace is in
// forward time order on [t0, t1].
TrajectoryTrace evolve_backward(const SpectralField& u1, double t0, double t1,
                                const EvolutionParams& params, const SourceTerm& g);

// Max over snapshot times of the discrete mass-balance defect
// | ||u(t)||^2 - ||u(0)||^2 + 2 int ||a phi u||^2 - 2 Im int <g, u> |
// with trapezoid quadrature in time.
double mass_identity_residual(const TrajectoryTrace& trace, const EvolutionParams& params,
                              const SourceTerm& g);

// CSV export: t, L2 norm, H1 norm (optionally followed by the full
// coefficient list, Re/Im pairs ordered by mode index -N/2..N/2-1).
void export_trace_csv(const TrajectoryTrace& trace, const std::string& path,
                      bool dump_coeffs = false);
// Flat little-endian binary dump: per snapshot, N complex<double> pairs
// ordered by mode index -N/2..N/2-1.
void export_trace_binary(const TrajectoryTrace& trace, const std::string& path);

}  // namespace nlsc
