// Discrete X^{s,b} norms on windowed space-time traces and the numerical
// probes of the dispersive estimates (L4 bound, trilinear bound,
// multiplication loss, Duhamel gain).
//
// The restriction norm over [0,T] is replaced throughout by the norm of a
// fixed windowed extension: multiply the trace by a smooth cutoff, pass to
// the interaction picture u -> e^{-it dxx} u, zero-pad in time and weight
// the temporal DFT by <tau>^{2b} |k|^{2s} (zero mode weighted as |k| = 1).

#pragma once

#include "nlsc/dynamics.hpp"
#include "nlsc/spectral.hpp"

#include <vector>

namespace nlsc {

struct TimeWindow {
  BumpSpec spec;  // in trace time coordinates

  // window spanning the trace with the given plateau fraction centered in it
  static TimeWindow spanning(const TrajectoryTrace& trace, double plateau_fraction = 1.0 / 3.0);
  double eval(double t) const { return bump_eval(spec, t); }
};

struct XsbSettings {
  int pad_factor = 4;  // temporal zero padding, >= 4
};

// || psi u ||_{X^{s,b}} of the windowed trace; |b| <= 1.
double xsb_norm(const TrajectoryTrace& trace, double s, double b, const TimeWindow& window,
                const XsbSettings& settings = {});

// || psi u ||_{L4} / || psi u ||_{X^{0,3/8}}; throws on the zero field.
double l4_ratio(const TrajectoryTrace& trace, const TimeWindow& window,
                const XsbSettings& settings = {});

// || psi u1 conj(u2) u3 ||_{X^{s,-3/8}} divided by
// min over slot placements of ||u_i||_{X^{s,3/8}} prod_{j != i} ||u_j||_{X^{0,3/8}}.
double trilinear_ratio(const TrajectoryTrace& u1, const TrajectoryTrace& u2,
                       const TrajectoryTrace& u3, double s, const TimeWindow& window,
                       const XsbSettings& settings = {});

struct SlopeFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
  std::vector<double> abscissae, values;  // raw (log x, log y) data
};

SlopeFit log_log_fit(const std::vector<double>& x, const std::vector<double>& y);

// || e^{ix} u_n ||_{X^{0,b}} for u_n = psi(t) e^{inx} e^{-i n^2 t}; returns the
// log-log slope versus n (expected to approach b).
struct MultiplicationLossResult {
  SlopeFit fit;
  std::vector<double> base_norms;     // || u_n || itself, n-independent
  std::vector<double> shifted_norms;  // || e^{ix} u_n ||
};
MultiplicationLossResult multiplication_loss_probe(const std::vector<int>& n_list, double b,
                                                   int grid_modes = 128);

// Duhamel time-smoothing gain: with f_T(t) = profile(t/T) and
// F(t) = Psi(t/T) int_0^t f_T, the slope of ||F||_{H^b} / ||f_T||_{H^{-b'}}
// versus T approaches 1 - b - b'.  Requires 0 < b' < 1/2 < b, b + b' <= 1.
struct DuhamelGainResult {
  SlopeFit fit;
  std::vector<double> ratios;
};
DuhamelGainResult duhamel_gain_probe(const std::vector<double>& t_list, double b, double bprime,
                                     int time_samples = 1 << 13);

// Temporal H^b norm of regularly sampled data (zero-padded DFT with <tau>
// weights); shared by the 1D probes and the xsb tests.
double temporal_hb_norm(const std::vector<Complex>& samples, double dt, double b,
                        int pad_factor = 4);

}  // namespace nlsc
