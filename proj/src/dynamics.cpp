#include "nlsc/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace nlsc {

namespace {
const Complex kImagUnit{0.0, 1.0};

int checked_step_count(double t0, double t1, double dt) {
  if (!(t1 > t0)) throw std::invalid_argument("evolve: t1 must exceed t0");
  if (!(dt > 0)) throw std::invalid_argument("evolve: dt must be positive");
  double raw = (t1 - t0) / dt;
  int n = static_cast<int>(std::llround(raw));
  if (n < 1 || std::abs(raw - n) > 1e-8 * std::max(1.0, raw))
    throw std::invalid_argument("evolve: (t1-t0) must be an integer number of steps");
  return n;
}
}  // namespace

SpectralField TrajectoryTrace::sample(double t) const {
  double s = (t - t0) / dt;
  int j = static_cast<int>(std::floor(s));
  if (j < 0) j = 0;
  if (j >= static_cast<int>(snapshots.size()) - 1) j = static_cast<int>(snapshots.size()) - 2;
  double w = s - j;
  if (snapshots.size() == 1) return snapshots.front();
  SpectralField out = snapshots[j];
  out.coeffs = (1.0 - w) * snapshots[j].coeffs + w * snapshots[j + 1].coeffs;
  return out;
}

// --- SourceTerm -----------------------------------------------------------

struct SourceTerm::Impl {
  virtual ~Impl() = default;
  virtual SpectralField eval(double t, const TorusGrid& grid) const = 0;
  virtual bool zero() const { return false; }
};

namespace {

struct ZeroImpl final : SourceTerm::Impl {
  SpectralField eval(double, const TorusGrid& grid) const override {
    return SpectralField(grid);
  }
  bool zero() const override { return true; }
};

// Samples stored in the interaction picture e^{-it dxx} u(t); there the
// trace varies on the slow (nonlinear/damping) time scale, so linear
// interpolation between samples is accurate even when u itself carries
// fast k^2 phases.  Exact sample hits bypass the interpolation entirely.
struct InteractionTrace {
  double t0 = 0, dt = 0;
  std::vector<SpectralField> hash_snapshots;

  explicit InteractionTrace(const TrajectoryTrace& trace) : t0(trace.t0), dt(trace.dt) {
    hash_snapshots.reserve(trace.snapshots.size());
    for (size_t j = 0; j < trace.snapshots.size(); ++j)
      hash_snapshots.push_back(free_propagate(trace.snapshots[j], -trace.time_of(static_cast<int>(j))));
  }

  SpectralField state_at(double t) const {
    double s = (t - t0) / dt;
    int j = static_cast<int>(std::llround(s));
    if (j >= 0 && j < static_cast<int>(hash_snapshots.size()) && std::abs(s - j) < 1e-7)
      return free_propagate(hash_snapshots[j], t);
    int lo = static_cast<int>(std::floor(s));
    lo = std::max(0, std::min(lo, static_cast<int>(hash_snapshots.size()) - 2));
    double w = s - lo;
    SpectralField mix = hash_snapshots[lo];
    mix.coeffs = (1.0 - w) * hash_snapshots[lo].coeffs + w * hash_snapshots[lo + 1].coeffs;
    return free_propagate(mix, t);
  }
};

struct TraceImpl final : SourceTerm::Impl {
  InteractionTrace trace;
  explicit TraceImpl(const TrajectoryTrace& t) : trace(t) {}
  SpectralField eval(double t, const TorusGrid&) const override { return trace.state_at(t); }
};

struct HumImpl final : SourceTerm::Impl {
  SpectralField phi0;
  RealVec a_sq;
  TemporalProfile phi;
  double t_offset;
  SpectralField eval(double t, const TorusGrid&) const override {
    double tt = t - t_offset;
    double w = phi.eval(tt);
    if (w == 0.0) return SpectralField(phi0.grid);
    Vec phys = to_physical(free_propagate(phi0, tt));
    phys = phys.cwiseProduct((a_sq * (w * w)).cast<Complex>());
    return to_spectral(phi0.grid, phys);
  }
};

struct DampedFeedbackImpl final : SourceTerm::Impl {
  InteractionTrace trace;
  RealVec a_sq;
  TemporalProfile phi;
  DampedFeedbackImpl(const TrajectoryTrace& t, RealVec a2, TemporalProfile p)
      : trace(t), a_sq(std::move(a2)), phi(std::move(p)) {}
  SpectralField eval(double t, const TorusGrid& grid) const override {
    double w = phi.eval(t);
    if (w == 0.0) return SpectralField(grid);
    SpectralField u = trace.state_at(t);
    Vec phys = to_physical(u);
    phys = phys.cwiseProduct((a_sq * (w * w)).cast<Complex>());
    SpectralField g = to_spectral(grid, phys);
    g *= -kImagUnit;
    return g;
  }
};

struct ReversedImpl final : SourceTerm::Impl {
  SourceTerm inner;
  double t_total;
  SpectralField eval(double t, const TorusGrid& grid) const override {
    return conj_field(inner.eval(t_total - t, grid));
  }
};

struct ShiftImpl final : SourceTerm::Impl {
  SourceTerm inner;
  double offset;
  SpectralField eval(double t, const TorusGrid& grid) const override {
    return inner.eval(t - offset, grid);
  }
};

struct ConcatImpl final : SourceTerm::Impl {
  std::vector<SourceTerm::Segment> segments;
  SpectralField eval(double t, const TorusGrid& grid) const override {
    for (const auto& seg : segments)
      if (t >= seg.start && t < seg.start + seg.duration) return seg.source.eval(t, grid);
    return SpectralField(grid);
  }
};

}  // namespace

SourceTerm::SourceTerm() : impl_(std::make_shared<ZeroImpl>()) {}
SourceTerm SourceTerm::zero() { return SourceTerm(); }

SourceTerm SourceTerm::from_trace(const TrajectoryTrace& trace) {
  SourceTerm s;
  s.impl_ = std::make_shared<TraceImpl>(trace);
  return s;
}

SourceTerm SourceTerm::hum(SpectralField phi0, RealVec a_sq_phys, TemporalProfile phi,
                           double t_offset) {
  auto impl = std::make_shared<HumImpl>();
  impl->phi0 = std::move(phi0);
  impl->a_sq = std::move(a_sq_phys);
  impl->phi = std::move(phi);
  impl->t_offset = t_offset;
  SourceTerm s;
  s.impl_ = impl;
  return s;
}

SourceTerm SourceTerm::damped_feedback(const TrajectoryTrace& u_trace, RealVec a_sq_phys,
                                       TemporalProfile phi) {
  SourceTerm s;
  s.impl_ = std::make_shared<DampedFeedbackImpl>(u_trace, std::move(a_sq_phys), std::move(phi));
  return s;
}

SourceTerm SourceTerm::time_reversed_conj(SourceTerm inner, double t_total) {
  auto impl = std::make_shared<ReversedImpl>();
  impl->inner = std::move(inner);
  impl->t_total = t_total;
  SourceTerm s;
  s.impl_ = impl;
  return s;
}

SourceTerm SourceTerm::shifted(SourceTerm inner, double t_offset) {
  auto impl = std::make_shared<ShiftImpl>();
  impl->inner = std::move(inner);
  impl->offset = t_offset;
  SourceTerm s;
  s.impl_ = impl;
  return s;
}

SourceTerm SourceTerm::concat(std::vector<Segment> segments) {
  auto impl = std::make_shared<ConcatImpl>();
  impl->segments = std::move(segments);
  SourceTerm s;
  s.impl_ = impl;
  return s;
}

bool SourceTerm::is_zero() const { return impl_->zero(); }

SpectralField SourceTerm::eval(double t, const TorusGrid& grid) const {
  return impl_->eval(t, grid);
}

// --- stepping -------------------------------------------------------------

namespace {
double tail_energy_fraction(const SpectralField& u) {
  const int n = u.grid.size();
  const int cut = (7 * (n / 2)) / 8;  // |k| >= cut is the top 1/8 band
  double tail = 0, total = 0;
  for (int j = 0; j < n; ++j) {
    double e = std::norm(u.coeffs[j]);
    total += e;
    if (std::abs(u.grid.mode_of_index(j)) >= cut) tail += e;
  }
  return total > 0 ? tail / total : 0.0;
}

void dealias_two_thirds(SpectralField& u) {
  const int n = u.grid.size();
  for (int j = 0; j < n; ++j)
    if (std::abs(u.grid.mode_of_index(j)) > n / 3) u.coeffs[j] = 0.0;
}
}  // namespace

SpectralField strang_step(const SpectralField& u, double t, double dt_signed,
                          const EvolutionParams& params, const SourceTerm& g,
                          StepDiag* diag) {
  const double h = dt_signed;
  const double t_mid = t + 0.5 * h;
  SpectralField v = free_propagate(u, 0.5 * h);

  const bool pointwise = params.lambda != 0.0 || params.damping.has_value();
  const bool sourced = !g.is_zero();
  if (diag) diag->source_kick_norm = 0;

  if (pointwise) {
    // exact flow of u' = -i lambda |u|^2 u - theta u over a span s, theta
    // frozen at t_mid; |u| = |u0| e^{-theta s} and the accumulated phase is
    // -lambda |u0|^2 (1 - e^{-2 theta s}) / (2 theta)
    Vec phys = to_physical(v);
    const double phi = params.damping ? params.damping->phi.eval(t_mid) : 0.0;
    auto nd_pass = [&](Vec& w, double s) {
      for (Eigen::Index j = 0; j < w.size(); ++j) {
        double theta = params.damping ? params.damping->a_sq_phys[j] * phi * phi : 0.0;
        Complex z = w[j];
        // for theta*s below rounding use the series for (1-e^{-2 theta s})/(2 theta);
        // the ratio form underflows to 0 (not s) when 2*theta*s leaves double range
        double x = 2.0 * theta * s;
        double tau = std::abs(x) > 1e-8 ? -std::expm1(-x) / (2.0 * theta)
                                        : s * (1.0 - 0.5 * x * (1.0 - x / 3.0));
        w[j] = z * std::polar(std::exp(-theta * s), -params.lambda * std::norm(z) * tau);
      }
    };
    if (sourced) {
      // palindromic split around the midpoint kick: together with the exact
      // sub-flows this makes a backward step the exact inverse of a forward
      // step, which the time-reversal construction relies on
      nd_pass(phys, 0.5 * h);
      SpectralField gm = g.eval(t_mid, u.grid);
      if (diag) diag->source_kick_norm = std::abs(h) * l2_norm(gm);
      phys -= (kImagUnit * h) * to_physical(gm);
      nd_pass(phys, 0.5 * h);
    } else {
      nd_pass(phys, h);
    }
    v = to_spectral(u.grid, phys);
    if (params.dealias) dealias_two_thirds(v);
  } else if (sourced) {
    SpectralField gm = g.eval(t_mid, u.grid);
    if (diag) diag->source_kick_norm = std::abs(h) * l2_norm(gm);
    v.coeffs -= kImagUnit * h * gm.coeffs;
  }

  v = free_propagate(v, 0.5 * h);
  if (diag) diag->tail_fraction = tail_energy_fraction(v);
  return v;
}

namespace {
TrajectoryTrace run(const SpectralField& ustart, double t0, double t1,
                    const EvolutionParams& params, const SourceTerm& g, bool backward) {
  const int n_steps = checked_step_count(t0, t1, params.dt);
  const double h = backward ? -params.dt : params.dt;
  TrajectoryTrace trace;
  trace.t0 = t0;
  trace.dt = params.dt;
  trace.snapshots.resize(n_steps + 1);
  int pos = backward ? n_steps : 0;
  trace.snapshots[pos] = ustart;
  SpectralField u = ustart;
  double norm_prev = l2_norm(u);
  for (int s = 0; s < n_steps; ++s) {
    double t = backward ? t1 + s * h : t0 + s * h;
    StepDiag diag;
    u = strang_step(u, t, h, params, g, &diag);
    if (!u.finite()) throw BlowupError("non-finite state during integration");
    double norm_now = l2_norm(u);
    if (norm_now > params.blowup_step_factor * norm_prev + 2.0 * diag.source_kick_norm + 1e-12)
      throw BlowupError("norm growth guard tripped (possible blow-up)");
    norm_prev = norm_now;
    if (diag.tail_fraction > params.tail_monitor_threshold) {
      trace.under_resolved = true;
    }
    trace.max_tail_fraction = std::max(trace.max_tail_fraction, diag.tail_fraction);
    pos += backward ? -1 : 1;
    trace.snapshots[pos] = u;
  }
  return trace;
}
}  // namespace

TrajectoryTrace evolve(const SpectralField& u0, double t0, double t1,
                       const EvolutionParams& params, const SourceTerm& g) {
  return run(u0, t0, t1, params, g, false);
}

TrajectoryTrace evolve_backward(const SpectralField& u1, double t0, double t1,
                                const EvolutionParams& params, const SourceTerm& g) {
  return run(u1, t0, t1, params, g, true);
}

double mass_identity_residual(const TrajectoryTrace& trace, const EvolutionParams& params,
                              const SourceTerm& g) {
  const int m = static_cast<int>(trace.snapshots.size());
  const TorusGrid& grid = trace.snapshots.front().grid;
  std::vector<double> damp_term(m, 0.0), src_term(m, 0.0), norm2(m, 0.0);
  for (int j = 0; j < m; ++j) {
    const SpectralField& u = trace.snapshots[j];
    double t = trace.time_of(j);
    double n = l2_norm(u);
    norm2[j] = n * n;
    if (params.damping) {
      double phi = params.damping->phi.eval(t);
      Vec phys = to_physical(u);
      double acc = 0;
      for (Eigen::Index i = 0; i < phys.size(); ++i)
        acc += params.damping->a_sq_phys[i] * phi * phi * std::norm(phys[i]);
      damp_term[j] = acc / grid.size();
    }
    if (!g.is_zero()) src_term[j] = inner(g.eval(t, grid), u).imag();
  }
  double residual = 0, int_damp = 0, int_src = 0;
  for (int j = 1; j < m; ++j) {
    int_damp += 0.5 * trace.dt * (damp_term[j - 1] + damp_term[j]);
    int_src += 0.5 * trace.dt * (src_term[j - 1] + src_term[j]);
    double defect = (norm2[j] - norm2[0]) + 2.0 * int_damp - 2.0 * int_src;
    residual = std::max(residual, std::abs(defect));
  }
  return residual;
}

void export_trace_csv(const TrajectoryTrace& trace, const std::string& path, bool dump_coeffs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "t,l2_norm,h1_norm";
  const TorusGrid& grid = trace.snapshots.front().grid;
  if (dump_coeffs)
    for (int k = -grid.size() / 2; k < grid.size() / 2; ++k)
      out << ",re_" << k << ",im_" << k;
  out << "\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (int j = 0; j < static_cast<int>(trace.snapshots.size()); ++j) {
    const SpectralField& u = trace.snapshots[j];
    put(trace.time_of(j));
    out << ',';
    put(l2_norm(u));
    out << ',';
    put(hs_norm(u, 1.0));
    if (dump_coeffs) {
      for (int k = -grid.size() / 2; k < grid.size() / 2; ++k) {
        Complex c = u.mode(k);
        out << ',';
        put(c.real());
        out << ',';
        put(c.imag());
      }
    }
    out << "\n";
  }
}

void export_trace_binary(const TrajectoryTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  const TorusGrid& grid = trace.snapshots.front().grid;
  for (const auto& u : trace.snapshots) {
    for (int k = -grid.size() / 2; k < grid.size() / 2; ++k) {
      Complex c = u.mode(k);
      double re = c.real(), im = c.imag();
      out.write(reinterpret_cast<const char*>(&re), sizeof re);
      out.write(reinterpret_cast<const char*>(&im), sizeof im);
    }
  }
}

}  // namespace nlsc
