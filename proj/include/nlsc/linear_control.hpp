// HUM for the linear Schrodinger equation.  The Gramian
//
//   Lambda Phi0 = int_0^T e^{-it dxx} a^2 phi(t)^2 e^{it dxx} Phi0 dt
//
// is Hermitian positive semidefinite; the control operator is S = i Lambda,
// so the data-to-control map is Phi0 = -i Lambda^{-1} Psi0 and the control
// itself is g(t) = a^2 phi(t)^2 e^{it dxx} Phi0.

#pragma once

#include "nlsc/dynamics.hpp"
#include "nlsc/spectral.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>

namespace nlsc {

struct ControlGeometry {
  TorusGrid grid;
  double horizon = 1.0;  // T
  BumpProfile a;         // spatial cutoff; a.temporal is phi(t)
  double dt_q = 1e-3;    // quadrature/evolution mesh step

  // bump a supported in `support`, phi = 1 on [T/3, 2T/3] vanishing at 0, T
  static ControlGeometry standard(const TorusGrid& grid, double horizon,
                                  const BumpSpec& support, double dt_q = 1e-3);
  // a == 1 everywhere with the given temporal window (test geometry)
  static ControlGeometry uniform(const TorusGrid& grid, double horizon,
                                 const TemporalProfile& temporal, double dt_q = 1e-3);

  double phi(double t) const { return a.phi(t); }
  int quad_steps() const;  // trapezoid panel count, horizon / dt_q
};

// One trapezoid pass of the Gramian integral applied to Phi0.
SpectralField gramian_apply(const SpectralField& phi0, const ControlGeometry& geom);

// Dense Gramian cached as an N x N matrix.  Assembly goes through the
// convolution structure Lambda_{j,j'} = ahat[(j-j') mod N] * I(k_j^2 - k_{j'}^2)
// with the same trapezoid weights as gramian_apply, so the two routes agree
// to rounding.
class GramianOperator {
 public:
  explicit GramianOperator(const ControlGeometry& geom);

  const Eigen::MatrixXcd& matrix() const { return mat_; }
  const ControlGeometry& geometry() const { return geom_; }
  SpectralField apply(const SpectralField& phi0) const;
  double hermiticity_defect() const;  // max |Lambda - Lambda^H| entry

 private:
  ControlGeometry geom_;
  Eigen::MatrixXcd mat_;
};

struct CgResult {
  Vec x;
  int iterations = 0;
  bool converged = false;
  double relative_residual = 0;
};

// Conjugate gradient for Hermitian positive definite operators.
CgResult conjugate_gradient(const std::function<Vec(const Vec&)>& apply, const Vec& b,
                            double tol = 1e-10, int max_iter = 500);

// Best constant of the observability inequality on the n_obs lowest modes
// (ordered 0, 1, -1, 2, -2, ...): 1 / lambda_min of the Gramian submatrix,
// lambda_min by inverse power iteration with CG solves.  Throws when CG
// stalls (near-unobservable subspace at this resolution).
double observability_constant(const GramianOperator& gram, int n_obs);
double observability_constant(const ControlGeometry& geom, int n_obs);

struct LinearControlResult {
  SpectralField phi0;
  TrajectoryTrace control;  // g(t_j) = a^2 phi(t_j)^2 e^{i t_j dxx} Phi0
  TrajectoryTrace replay;   // Psi integrated backward from Psi(T) = 0
  double replay_residual = 0;  // ||Psi(0) - Psi0|| / ||Psi0||
  int iterations = 0;
  bool converged = false;
};

// CG solve of Lambda Phi0 = i Psi0 followed by the replay verification.
LinearControlResult solve_linear_hum(const SpectralField& psi0, const ControlGeometry& geom,
                                     double tol = 1e-10, int max_iter = 500);

// Long-format dump: t, x_j, Re g, Im g per row.
void export_control_csv(const TrajectoryTrace& control, const std::string& path);

}  // namespace nlsc
