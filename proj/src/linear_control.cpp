#include "nlsc/linear_control.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <stdexcept>
#include <unordered_map>

namespace nlsc {

namespace {
int checked_steps(double span, double dt) {
  double raw = span / dt;
  int n = static_cast<int>(std::lround(raw));
  if (n < 1 || std::abs(raw - n) > 1e-8 * std::max(1.0, raw))
    throw std::invalid_argument("quadrature step does not divide the horizon");
  return n;
}
}  // namespace

ControlGeometry ControlGeometry::standard(const TorusGrid& grid, double horizon,
                                          const BumpSpec& support, double dt_q) {
  if (horizon <= 0) throw std::invalid_argument("ControlGeometry: horizon must be positive");
  ControlGeometry g;
  g.grid = grid;
  g.horizon = horizon;
  g.dt_q = dt_q;
  g.a = BumpProfile::make(grid, support, TemporalProfile::control_window(horizon));
  checked_steps(horizon, dt_q);
  return g;
}

ControlGeometry ControlGeometry::uniform(const TorusGrid& grid, double horizon,
                                         const TemporalProfile& temporal, double dt_q) {
  if (horizon <= 0) throw std::invalid_argument("ControlGeometry: horizon must be positive");
  ControlGeometry g;
  g.grid = grid;
  g.horizon = horizon;
  g.dt_q = dt_q;
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  BumpSpec full{0.0, kTwoPi, 0.0, kTwoPi};  // degenerate spec: a == 1
  g.a = BumpProfile::make(grid, full, temporal);
  checked_steps(horizon, dt_q);
  return g;
}

int ControlGeometry::quad_steps() const { return checked_steps(horizon, dt_q); }

SpectralField gramian_apply(const SpectralField& phi0, const ControlGeometry& geom) {
  if (!(phi0.grid == geom.grid)) throw std::invalid_argument("gramian_apply: grid mismatch");
  const int nq = geom.quad_steps();
  const double dt = geom.horizon / nq;
  SpectralField acc(geom.grid);
  for (int j = 0; j <= nq; ++j) {
    double t = j * dt;
    double p = geom.phi(t);
    if (p == 0) continue;
    double w = (j == 0 || j == nq) ? 0.5 : 1.0;
    SpectralField f = free_propagate(phi0, t);
    Vec vals = to_physical(f);
    vals = vals.cwiseProduct(geom.a.a_sq_phys.cast<Complex>());
    SpectralField g = to_spectral(geom.grid, vals);
    acc.coeffs += (w * dt * p * p) * free_propagate(g, -t).coeffs;
  }
  return acc;
}

GramianOperator::GramianOperator(const ControlGeometry& geom) : geom_(geom) {
  const int n = geom.grid.size();
  const int nq = geom.quad_steps();
  const double dt = geom.horizon / nq;

  // spectral coefficients of a^2, symmetrized exactly (real samples)
  SpectralField ahat = to_spectral(geom.grid, geom.a.a_sq_phys.cast<Complex>());
  for (int k = 1; k < n / 2; ++k) {
    Complex avg = 0.5 * (ahat.mode(k) + std::conj(ahat.mode(-k)));
    ahat.mode(k) = avg;
    ahat.mode(-k) = std::conj(avg);
  }
  ahat.mode(0) = ahat.mode(0).real();
  ahat.mode(-n / 2) = ahat.mode(-n / 2).real();

  // trapezoid samples of phi^2
  std::vector<double> wphi(nq + 1);
  std::vector<double> times(nq + 1);
  for (int j = 0; j <= nq; ++j) {
    times[j] = j * dt;
    double p = geom.phi(times[j]);
    wphi[j] = ((j == 0 || j == nq) ? 0.5 : 1.0) * dt * p * p;
  }

  // I(omega) = int phi^2 e^{i omega t}, memoized over the distinct k^2 - k'^2
  std::unordered_map<long long, Complex> cache;
  auto phase_integral = [&](long long omega) {
    auto it = cache.find(omega);
    if (it != cache.end()) return it->second;
    Complex acc{0, 0};
    for (int j = 0; j <= nq; ++j) {
      if (wphi[j] == 0) continue;
      acc += wphi[j] * std::polar(1.0, static_cast<double>(omega) * times[j]);
    }
    cache.emplace(omega, acc);
    return acc;
  };

  mat_.resize(n, n);
  for (int col = 0; col < n; ++col) {
    long long kc = geom.grid.mode_of_index(col);
    for (int row = 0; row < n; ++row) {
      long long kr = geom.grid.mode_of_index(row);
      int shift = row - col;
      if (shift < 0) shift += n;
      mat_(row, col) = ahat.coeffs[shift] * phase_integral(kr * kr - kc * kc);
    }
  }
}

SpectralField GramianOperator::apply(const SpectralField& phi0) const {
  if (!(phi0.grid == geom_.grid)) throw std::invalid_argument("GramianOperator: grid mismatch");
  return SpectralField(geom_.grid, mat_ * phi0.coeffs);
}

double GramianOperator::hermiticity_defect() const {
  return (mat_ - mat_.adjoint()).cwiseAbs().maxCoeff();
}

CgResult conjugate_gradient(const std::function<Vec(const Vec&)>& apply, const Vec& b,
                            double tol, int max_iter) {
  CgResult res;
  const double bnorm = b.norm();
  res.x = Vec::Zero(b.size());
  if (bnorm == 0) {
    res.converged = true;
    return res;
  }
  Vec r = b;
  Vec p = r;
  double rr = r.squaredNorm();
  for (int it = 0; it < max_iter; ++it) {
    Vec ap = apply(p);
    Complex pap = p.dot(ap);
    double alpha = rr / pap.real();
    res.x += alpha * p;
    r -= alpha * ap;
    double rr_new = r.squaredNorm();
    res.iterations = it + 1;
    if (std::sqrt(rr_new) <= tol * bnorm) {
      res.converged = true;
      rr = rr_new;
      break;
    }
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  res.relative_residual = std::sqrt(rr) / bnorm;
  if (res.converged) res.relative_residual = (b - apply(res.x)).norm() / bnorm;
  return res;
}

namespace {
// storage indices of the modes 0, 1, -1, 2, -2, ... (lowest |k| first)
std::vector<int> low_mode_indices(const TorusGrid& grid, int n_obs) {
  if (n_obs < 1 || n_obs > grid.size())
    throw std::invalid_argument("observability_constant: n_obs out of range");
  std::vector<int> idx;
  idx.push_back(grid.index_of_mode(0));
  for (int k = 1; k < grid.size() / 2 && static_cast<int>(idx.size()) < n_obs; ++k) {
    idx.push_back(grid.index_of_mode(k));
    if (static_cast<int>(idx.size()) < n_obs) idx.push_back(grid.index_of_mode(-k));
  }
  if (static_cast<int>(idx.size()) < n_obs) idx.push_back(grid.index_of_mode(-grid.size() / 2));
  return idx;
}
}  // namespace

double observability_constant(const GramianOperator& gram, int n_obs) {
  std::vector<int> idx = low_mode_indices(gram.geometry().grid, n_obs);
  Eigen::MatrixXcd sub(n_obs, n_obs);
  for (int c = 0; c < n_obs; ++c)
    for (int r = 0; r < n_obs; ++r) sub(r, c) = gram.matrix()(idx[r], idx[c]);

  auto apply = [&](const Vec& v) -> Vec { return sub * v; };
  Vec x = Vec::Ones(n_obs);
  x /= x.norm();
  double lambda = 0;
  for (int it = 0; it < 500; ++it) {
    CgResult cg = conjugate_gradient(apply, x, 1e-12, 50 * n_obs);
    if (!cg.converged)
      throw std::runtime_error(
          "observability_constant: CG stalled (near-unobservable subspace)");
    Vec y = cg.x / cg.x.norm();
    double lambda_new = y.dot(sub * y).real();
    bool settled = it > 0 && std::abs(lambda_new - lambda) <= 1e-13 * std::abs(lambda_new);
    lambda = lambda_new;
    x = y;
    if (settled) break;
  }
  if (lambda <= 0)
    throw std::runtime_error("observability_constant: nonpositive Gramian eigenvalue");
  return 1.0 / lambda;
}

double observability_constant(const ControlGeometry& geom, int n_obs) {
  return observability_constant(GramianOperator(geom), n_obs);
}

LinearControlResult solve_linear_hum(const SpectralField& psi0, const ControlGeometry& geom,
                                     double tol, int max_iter) {
  if (!(psi0.grid == geom.grid)) throw std::invalid_argument("solve_linear_hum: grid mismatch");
  LinearControlResult out;
  out.phi0 = SpectralField(geom.grid);

  const int nq = geom.quad_steps();
  const double dt = geom.horizon / nq;

  if (l2_norm(psi0) == 0) {
    out.converged = true;
  } else {
    GramianOperator gram(geom);
    auto apply = [&](const Vec& v) -> Vec { return gram.matrix() * v; };
    CgResult cg = conjugate_gradient(apply, psi0.coeffs, tol, max_iter);
    if (!cg.converged)
      throw std::runtime_error("solve_linear_hum: CG did not converge within max_iter");
    out.phi0 = SpectralField(geom.grid, Complex{0, -1} * cg.x);
    out.iterations = cg.iterations;
    out.converged = true;
  }

  // the emitted control g(t_j) on the quadrature mesh
  out.control.t0 = 0;
  out.control.dt = dt;
  out.control.snapshots.reserve(nq + 1);
  for (int j = 0; j <= nq; ++j) {
    double t = j * dt;
    double p = geom.phi(t);
    SpectralField g(geom.grid);
    if (p != 0) {
      Vec vals = to_physical(free_propagate(out.phi0, t));
      vals = vals.cwiseProduct(geom.a.a_sq_phys.cast<Complex>()) * (p * p);
      g = to_spectral(geom.grid, vals);
    }
    out.control.snapshots.push_back(std::move(g));
  }

  // replay: backward solve of i Psi_t + Psi_xx = g from Psi(T) = 0
  EvolutionParams params;
  params.lambda = 0;
  params.dt = dt;
  SourceTerm g = SourceTerm::hum(out.phi0, geom.a.a_sq_phys, geom.a.temporal);
  out.replay = evolve_backward(SpectralField(geom.grid), 0.0, geom.horizon, params, g);
  double denom = l2_norm(psi0);
  out.replay_residual =
      denom > 0 ? l2_norm(out.replay.front() - psi0) / denom : l2_norm(out.replay.front());
  return out;
}

void export_control_csv(const TrajectoryTrace& control, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("export_control_csv: cannot open " + path);
  std::fprintf(f, "t,x,re_g,im_g\n");
  for (size_t j = 0; j < control.snapshots.size(); ++j) {
    double t = control.time_of(static_cast<int>(j));
    const SpectralField& snap = control.snapshots[j];
    Vec vals = to_physical(snap);
    for (int i = 0; i < snap.grid.size(); ++i)
      std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", t, snap.grid.point(i), vals[i].real(),
                   vals[i].imag());
  }
  std::fclose(f);
}

}  // namespace nlsc
