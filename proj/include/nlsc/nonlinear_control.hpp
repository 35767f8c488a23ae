// Fixed-point construction of nonlinear null controls near 0: with
// u solving the controlled NLS backward from u(T) = 0 under the source
// lambda |u|^2 u + a^2 phi^2 Phi, and v the linear backward solve with
// source lambda |u|^2 u alone, K Phi0 = v(0) and
//
//   B Phi0 = -S^{-1} K Phi0 + S^{-1} u0 = -i Lambda^{-1} (u0 - K Phi0).
//
// A fixed point Phi of B yields a control g = a^2 phi^2 e^{it dxx} Phi0
// driving u0 to 0 at time T; Picard iteration from Phi = 0 converges for
// small u0 (contraction ratios are recorded and reported).

#pragma once

#include "nlsc/dynamics.hpp"
#include "nlsc/linear_control.hpp"
#include "nlsc/spectral.hpp"

#include <vector>

namespace nlsc {

struct ControlSolution {
  SpectralField phi0;
  TrajectoryTrace control;       // g(t_j) on the quadrature mesh
  std::vector<double> ratios;    // rho_m = |d Phi_{m+1}| / |d Phi_m|
  int iterations = 0;            // Picard steps taken
  double verification_error = 0; // ||u(T)|| from the forward replay
  TrajectoryTrace verification;  // the forward replay trace itself
};

// v(0) of the two backward solves; the u solve runs at dt_q/2 so the cubic
// source of the v solve is sampled exactly at the v midpoints.
SpectralField k_operator(const SpectralField& phi0, const ControlGeometry& geom, double lambda);

SpectralField b_map(const SpectralField& phi0, const SpectralField& u0,
                    const ControlGeometry& geom, double lambda, const GramianOperator& gram,
                    double cg_tol = 1e-12, int cg_max_iter = 500);
SpectralField b_map(const SpectralField& phi0, const SpectralField& u0,
                    const ControlGeometry& geom, double lambda);

struct NullControlOptions {
  double picard_tol = 1e-11;   // successive-difference stop
  int max_iter = 40;           // Picard cap
  double cg_tol = 1e-12;
  int cg_max_iter = 500;
  double smallness_gate = 5e-2;  // ||u0|| precondition (empirical)
};

// Picard iteration Phi <- B Phi from Phi = 0, control synthesis and forward
// verification.  Throws on gate violation, contraction failure (some
// rho_m >= 1), iteration cap, CG failure or solver blow-up.
ControlSolution local_null_control(const SpectralField& u0, const ControlGeometry& geom,
                                   double lambda, const NullControlOptions& opts = {});

struct HsRow {
  double s = 0;
  double phi0_norm = 0;   // ||Phi0||_{H^s}
  double g_max_norm = 0;  // max_t ||g(t)||_{H^s}
};
std::vector<HsRow> hs_regularity_report(const ControlSolution& sol,
                                        const std::vector<double>& s_list);

// Largest amplitude eps in [lo, hi] with all Picard ratios <= ratio_cap for
// data eps * direction, located by bisection.
double contraction_threshold(const SpectralField& direction, const ControlGeometry& geom,
                             double lambda, double lo, double hi, double ratio_cap = 0.9,
                             int bisection_steps = 12);

}  // namespace nlsc
