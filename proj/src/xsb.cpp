#include "nlsc/xsb.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nlsc {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

double bracket(double x) { return std::sqrt(1.0 + x * x); }  // <x>

std::vector<Complex> dft(const std::vector<Complex>& padded) {
  thread_local Eigen::FFT<double> fft;
  std::vector<Complex> out(padded.size());
  fft.fwd(out, padded);
  return out;
}

double mode_weight(int k, double s) {
  return k == 0 ? 1.0 : std::pow(std::abs(static_cast<double>(k)), s);
}
}  // namespace

TimeWindow TimeWindow::spanning(const TrajectoryTrace& trace, double plateau_fraction) {
  double span = trace.t1() - trace.t0;
  double margin = 0.5 * span * (1.0 - plateau_fraction);
  TimeWindow w;
  w.spec = BumpSpec{trace.t0, trace.t1(), trace.t0 + margin, trace.t1() - margin};
  return w;
}

double temporal_hb_norm(const std::vector<Complex>& samples, double dt, double b,
                        int pad_factor) {
  const int n = static_cast<int>(samples.size());
  const int p = next_pow2(pad_factor * n);
  std::vector<Complex> padded(p, Complex{0, 0});
  std::copy(samples.begin(), samples.end(), padded.begin());
  std::vector<Complex> hat = dft(padded);
  double acc = 0;
  for (int m = 0; m < p; ++m) {
    double tau = kTwoPi * (m < p / 2 ? m : m - p) / (p * dt);
    acc += std::pow(bracket(tau), 2.0 * b) * std::norm(hat[m]);
  }
  return std::sqrt(acc * dt / p);
}

double xsb_norm(const TrajectoryTrace& trace, double s, double b, const TimeWindow& window,
                const XsbSettings& settings) {
  if (std::abs(b) > 1.0) throw std::invalid_argument("xsb_norm: |b| must be <= 1");
  if (settings.pad_factor < 4) throw std::invalid_argument("xsb_norm: pad factor must be >= 4");
  if (window.spec.support_lo < trace.t0 - 1e-12 || window.spec.support_hi > trace.t1() + 1e-12)
    throw std::invalid_argument("xsb_norm: window exceeds trace span");
  const int m = static_cast<int>(trace.snapshots.size());
  const TorusGrid& grid = trace.snapshots.front().grid;
  const int n = grid.size();
  const int p = next_pow2(settings.pad_factor * m);

  // windowed interaction-picture samples
  std::vector<Vec> hash(m);
  for (int j = 0; j < m; ++j) {
    double t = trace.time_of(j);
    SpectralField f = free_propagate(trace.snapshots[j], -t);
    hash[j] = window.eval(t) * f.coeffs;
  }

  double acc = 0;
  std::vector<Complex> series(p);
  for (int idx = 0; idx < n; ++idx) {
    std::fill(series.begin(), series.end(), Complex{0, 0});
    for (int j = 0; j < m; ++j) series[j] = hash[j][idx];
    std::vector<Complex> hat = dft(series);
    double ws = mode_weight(grid.mode_of_index(idx), s);
    double mode_acc = 0;
    for (int q = 0; q < p; ++q) {
      double tau = kTwoPi * (q < p / 2 ? q : q - p) / (p * trace.dt);
      mode_acc += std::pow(bracket(tau), 2.0 * b) * std::norm(hat[q]);
    }
    acc += ws * ws * mode_acc;
  }
  return std::sqrt(acc * trace.dt / p);
}

double l4_ratio(const TrajectoryTrace& trace, const TimeWindow& window,
                const XsbSettings& settings) {
  double denom = xsb_norm(trace, 0.0, 3.0 / 8.0, window, settings);
  if (denom < 1e-300) throw std::invalid_argument("l4_ratio: zero field");
  const int m = static_cast<int>(trace.snapshots.size());
  const int n = trace.snapshots.front().grid.size();
  double acc = 0;
  for (int j = 0; j < m; ++j) {
    double psi = window.eval(trace.time_of(j));
    if (psi == 0) continue;
    Vec vals = to_physical(trace.snapshots[j]);
    double space = 0;
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
      double a2 = std::norm(vals[i]) * psi * psi;
      space += a2 * a2;
    }
    double w = (j == 0 || j == m - 1) ? 0.5 : 1.0;
    acc += w * trace.dt * space / n;
  }
  return std::pow(acc, 0.25) / denom;
}

double trilinear_ratio(const TrajectoryTrace& u1, const TrajectoryTrace& u2,
                       const TrajectoryTrace& u3, double s, const TimeWindow& window,
                       const XsbSettings& settings) {
  const int m = static_cast<int>(u1.snapshots.size());
  if (static_cast<int>(u2.snapshots.size()) != m || static_cast<int>(u3.snapshots.size()) != m)
    throw std::invalid_argument("trilinear_ratio: mesh mismatch");
  TrajectoryTrace prod;
  prod.t0 = u1.t0;
  prod.dt = u1.dt;
  prod.snapshots.resize(m);
  for (int j = 0; j < m; ++j)
    prod.snapshots[j] = triple_product(u1.snapshots[j], u2.snapshots[j], u3.snapshots[j]);
  double num = xsb_norm(prod, s, -3.0 / 8.0, window, settings);

  const TrajectoryTrace* traces[3] = {&u1, &u2, &u3};
  double lo[3], hi[3];
  for (int i = 0; i < 3; ++i) {
    lo[i] = xsb_norm(*traces[i], 0.0, 3.0 / 8.0, window, settings);
    hi[i] = xsb_norm(*traces[i], s, 3.0 / 8.0, window, settings);
  }
  double denom = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    double d = hi[i];
    for (int j = 0; j < 3; ++j)
      if (j != i) d *= lo[j];
    denom = std::min(denom, d);
  }
  if (denom < 1e-300) throw std::invalid_argument("trilinear_ratio: zero denominator");
  return num / denom;
}

SlopeFit log_log_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("log_log_fit: bad data");
  SlopeFit fit;
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    double lx = std::log(x[i]), ly = std::log(y[i]);
    fit.abscissae.push_back(lx);
    fit.values.push_back(ly);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0, ss_tot = 0, ymean = sy / n;
  for (int i = 0; i < n; ++i) {
    double pred = fit.intercept + fit.slope * fit.abscissae[i];
    ss_res += (fit.values[i] - pred) * (fit.values[i] - pred);
    ss_tot += (fit.values[i] - ymean) * (fit.values[i] - ymean);
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

MultiplicationLossResult multiplication_loss_probe(const std::vector<int>& n_list, double b,
                                                   int grid_modes) {
  if (!(b > 0.0 && b < 1.0) && b != 0.0)
    throw std::invalid_argument("multiplication_loss_probe: b must be in [0,1)");
  TorusGrid grid(grid_modes);
  const double span = 4.0;
  const int steps = 1024;
  const double dt = span / steps;

  MultiplicationLossResult result;
  std::vector<double> ns;
  for (int n : n_list) {
    if (n + 1 > grid_modes / 3)
      throw std::invalid_argument("multiplication_loss_probe: n exceeds N/3");
    TrajectoryTrace base, shifted;
    base.t0 = shifted.t0 = 0;
    base.dt = shifted.dt = dt;
    base.snapshots.resize(steps + 1);
    shifted.snapshots.resize(steps + 1);
    for (int j = 0; j <= steps; ++j) {
      double t = j * dt;
      Complex phase = std::polar(1.0, -static_cast<double>(n) * n * t);
      SpectralField ub(grid), us(grid);
      ub.mode(n) = phase;
      us.mode(n + 1) = phase;  // e^{ix} u_n
      base.snapshots[j] = std::move(ub);
      shifted.snapshots[j] = std::move(us);
    }
    TimeWindow window = TimeWindow::spanning(base, 0.5);
    result.base_norms.push_back(xsb_norm(base, 0.0, b, window));
    result.shifted_norms.push_back(xsb_norm(shifted, 0.0, b, window));
    ns.push_back(n);
  }
  result.fit = log_log_fit(ns, result.shifted_norms);
  return result;
}

DuhamelGainResult duhamel_gain_probe(const std::vector<double>& t_list, double b, double bprime,
                                     int time_samples) {
  if (!(bprime > 0 && bprime < 0.5 && b > 0.5 && b + bprime <= 1.0))
    throw std::invalid_argument("duhamel_gain_probe: need 0 < b' < 1/2 < b, b + b' <= 1");
  for (double T : t_list)
    if (!(T > 0 && T <= 1.0))
      throw std::invalid_argument("duhamel_gain_probe: T must lie in (0,1]");

  const double t_lo = -2.5, t_hi = 2.5;
  const int m = time_samples;
  const double dt = (t_hi - t_lo) / m;
  // zero-mean pulse p(s) = q(s) - q(s - 1/2): without vanishing mean the
  // H^{-b'} norm carries a T^2 low-frequency term whose relative size decays
  // only like T^{1-2b'}, which buries the predicted slope at desk scale
  const BumpSpec lobe{0.0, 0.5, 0.175, 0.325};
  const BumpSpec psi{-2.0, 2.0, -1.0, 1.0};  // outer window in t/T

  DuhamelGainResult result;
  for (double T : t_list) {
    std::vector<Complex> f(m + 1), big_f(m + 1);
    for (int j = 0; j <= m; ++j) {
      double s = (t_lo + j * dt) / T;
      f[j] = bump_eval(lobe, s) - bump_eval(lobe, s - 0.5);
    }
    double cum = 0;
    for (int j = 0; j <= m; ++j) {
      double t = t_lo + j * dt;
      if (j > 0) cum += 0.5 * dt * (f[j - 1].real() + f[j].real());
      double start_cum = 0;
      // integral from 0, not from the grid start; f vanishes for t < 0 so
      // the cumulative sum already starts at 0 there
      big_f[j] = bump_eval(psi, t / T) * (cum - start_cum);
    }
    double num = temporal_hb_norm(big_f, dt, b);
    double den = temporal_hb_norm(f, dt, -bprime);
    result.ratios.push_back(num / den);
  }
  result.fit = log_log_fit(t_list, result.ratios);
  return result;
}

}  // namespace nlsc
