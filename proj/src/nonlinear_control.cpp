#include "nlsc/nonlinear_control.hpp"

#include <cmath>
#include <stdexcept>

namespace nlsc {

namespace {
TrajectoryTrace cubic_trace(const TrajectoryTrace& u, double lambda) {
  TrajectoryTrace w;
  w.t0 = u.t0;
  w.dt = u.dt;
  w.snapshots.reserve(u.snapshots.size());
  for (const SpectralField& snap : u.snapshots) {
    SpectralField c = triple_product(snap, snap, snap);
    c *= lambda;
    w.snapshots.push_back(std::move(c));
  }
  return w;
}

TrajectoryTrace control_trace(const SpectralField& phi0, const ControlGeometry& geom) {
  const int nq = geom.quad_steps();
  const double dt = geom.horizon / nq;
  TrajectoryTrace out;
  out.t0 = 0;
  out.dt = dt;
  out.snapshots.reserve(nq + 1);
  for (int j = 0; j <= nq; ++j) {
    double t = j * dt;
    double p = geom.phi(t);
    SpectralField g(geom.grid);
    if (p != 0) {
      Vec vals = to_physical(free_propagate(phi0, t));
      vals = vals.cwiseProduct(geom.a.a_sq_phys.cast<Complex>()) * (p * p);
      g = to_spectral(geom.grid, vals);
    }
    out.snapshots.push_back(std::move(g));
  }
  return out;
}
}  // namespace

SpectralField k_operator(const SpectralField& phi0, const ControlGeometry& geom,
                         double lambda) {
  if (!(phi0.grid == geom.grid)) throw std::invalid_argument("k_operator: grid mismatch");
  if (lambda == 0) return SpectralField(geom.grid);  // v solves the free equation from 0

  // u solve on the half mesh so that the v midpoints are exact samples
  EvolutionParams pu;
  pu.lambda = lambda;
  pu.dt = geom.dt_q / 2;
  SourceTerm gu = SourceTerm::hum(phi0, geom.a.a_sq_phys, geom.a.temporal);
  TrajectoryTrace u = evolve_backward(SpectralField(geom.grid), 0.0, geom.horizon, pu, gu);

  EvolutionParams pv;
  pv.lambda = 0;
  pv.dt = geom.dt_q;
  SourceTerm gv = SourceTerm::from_trace(cubic_trace(u, lambda));
  TrajectoryTrace v = evolve_backward(SpectralField(geom.grid), 0.0, geom.horizon, pv, gv);
  return v.front();
}

SpectralField b_map(const SpectralField& phi0, const SpectralField& u0,
                    const ControlGeometry& geom, double lambda, const GramianOperator& gram,
                    double cg_tol, int cg_max_iter) {
  if (!(u0.grid == geom.grid)) throw std::invalid_argument("b_map: grid mismatch");
  SpectralField rhs = u0 - k_operator(phi0, geom, lambda);
  // S^{-1} = -i Lambda^{-1}; one CG solve serves both terms by linearity
  auto apply = [&](const Vec& v) -> Vec { return gram.matrix() * v; };
  CgResult cg = conjugate_gradient(apply, rhs.coeffs, cg_tol, cg_max_iter);
  if (!cg.converged) throw std::runtime_error("b_map: CG did not converge");
  return SpectralField(geom.grid, Complex{0, -1} * cg.x);
}

SpectralField b_map(const SpectralField& phi0, const SpectralField& u0,
                    const ControlGeometry& geom, double lambda) {
  return b_map(phi0, u0, geom, lambda, GramianOperator(geom));
}

ControlSolution local_null_control(const SpectralField& u0, const ControlGeometry& geom,
                                   double lambda, const NullControlOptions& opts) {
  if (!(u0.grid == geom.grid))
    throw std::invalid_argument("local_null_control: grid mismatch");
  if (l2_norm(u0) > opts.smallness_gate)
    throw std::invalid_argument("local_null_control: ||u0|| exceeds the smallness gate");

  ControlSolution sol;
  sol.phi0 = SpectralField(geom.grid);

  if (l2_norm(u0) > 0) {
    GramianOperator gram(geom);
    SpectralField phi = sol.phi0;  // Phi^(0) = 0
    double prev_diff = -1;
    for (int m = 0; m < opts.max_iter; ++m) {
      SpectralField next = b_map(phi, u0, geom, lambda, gram, opts.cg_tol, opts.cg_max_iter);
      double diff = l2_norm(next - phi);
      sol.iterations = m + 1;
      if (prev_diff > 0) {
        double rho = diff / prev_diff;
        sol.ratios.push_back(rho);
        if (rho >= 1.0)
          throw std::runtime_error(
              "local_null_control: Picard diverges (smallness violated)");
      }
      phi = next;
      if (diff < opts.picard_tol * std::max(1.0, l2_norm(phi))) break;
      prev_diff = diff;
      if (m + 1 == opts.max_iter)
        throw std::runtime_error("local_null_control: Picard iteration cap reached");
    }
    sol.phi0 = phi;
  }

  sol.control = control_trace(sol.phi0, geom);

  // forward verification of the synthesized control
  EvolutionParams params;
  params.lambda = lambda;
  params.dt = geom.dt_q;
  SourceTerm g = SourceTerm::hum(sol.phi0, geom.a.a_sq_phys, geom.a.temporal);
  sol.verification = evolve(u0, 0.0, geom.horizon, params, g);
  sol.verification_error = l2_norm(sol.verification.back());
  return sol;
}

std::vector<HsRow> hs_regularity_report(const ControlSolution& sol,
                                        const std::vector<double>& s_list) {
  std::vector<HsRow> rows;
  rows.reserve(s_list.size());
  for (double s : s_list) {
    HsRow row;
    row.s = s;
    row.phi0_norm = hs_norm(sol.phi0, s);
    for (const SpectralField& g : sol.control.snapshots)
      row.g_max_norm = std::max(row.g_max_norm, hs_norm(g, s));
    rows.push_back(row);
  }
  return rows;
}

double contraction_threshold(const SpectralField& direction, const ControlGeometry& geom,
                             double lambda, double lo, double hi, double ratio_cap,
                             int bisection_steps) {
  if (!(lo > 0 && hi > lo)) throw std::invalid_argument("contraction_threshold: bad bracket");
  SpectralField unit = direction;
  unit *= 1.0 / l2_norm(direction);

  auto contracts = [&](double eps) {
    SpectralField u0 = unit;
    u0 *= eps;
    NullControlOptions opts;
    opts.smallness_gate = 2 * hi;
    try {
      ControlSolution sol = local_null_control(u0, geom, lambda, opts);
      for (double r : sol.ratios)
        if (r > ratio_cap) return false;
      return true;
    } catch (const std::exception&) {
      return false;
    }
  };

  if (!contracts(lo))
    throw std::runtime_error("contraction_threshold: no contraction at the lower bracket");
  if (contracts(hi)) return hi;
  double good = lo, bad = hi;
  for (int i = 0; i < bisection_steps; ++i) {
    double mid = std::sqrt(good * bad);  // geometric bisection over amplitudes
    (contracts(mid) ? good : bad) = mid;
  }
  return good;
}

}  // namespace nlsc
