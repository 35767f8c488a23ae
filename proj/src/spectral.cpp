#include "nlsc/spectral.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nlsc {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> fft;
  return fft;
}

// multiplier of D^r at wavenumber k, with sgn(0)=1 and |0| read as 1
double dr_multiplier(int k, double r) {
  if (k == 0) return 1.0;
  double m = std::pow(std::abs(static_cast<double>(k)), r);
  return k < 0 ? -m : m;
}

double hs_weight(int k, double s) {
  if (k == 0) return 1.0;
  return std::pow(std::abs(static_cast<double>(k)), s);
}
}  // namespace

TorusGrid::TorusGrid(int n) : n_modes(n) {
  if (n < 8 || n % 2 != 0) throw std::invalid_argument("TorusGrid: N must be even and >= 8");
}

double TorusGrid::point(int j) const { return kTwoPi * j / n_modes; }

RealVec TorusGrid::points() const {
  RealVec x(n_modes);
  for (int j = 0; j < n_modes; ++j) x[j] = point(j);
  return x;
}

int TorusGrid::mode_of_index(int j) const { return j < n_modes / 2 ? j : j - n_modes; }

int TorusGrid::index_of_mode(int k) const {
  if (k < -n_modes / 2 || k >= n_modes / 2) throw std::out_of_range("mode outside grid");
  return k >= 0 ? k : k + n_modes;
}

SpectralField::SpectralField(const TorusGrid& g, Vec c) : grid(g), coeffs(std::move(c)) {
  if (coeffs.size() != g.size()) throw std::invalid_argument("coefficient length mismatch");
}

bool SpectralField::finite() const { return coeffs.allFinite(); }

SpectralField operator+(SpectralField a, const SpectralField& b) { a += b; return a; }
SpectralField operator-(SpectralField a, const SpectralField& b) { a -= b; return a; }
SpectralField operator*(Complex z, SpectralField a) { a *= z; return a; }

Vec to_physical(const SpectralField& field) {
  const int n = field.grid.size();
  Vec out(n);
  std::vector<Complex> in(field.coeffs.data(), field.coeffs.data() + n), res(n);
  fft_engine().inv(res, in);
  for (int j = 0; j < n; ++j) out[j] = res[j] * static_cast<double>(n);
  return out;
}

SpectralField to_spectral(const TorusGrid& grid, const Vec& values) {
  const int n = grid.size();
  if (values.size() != n) throw std::invalid_argument("to_spectral: array length != N");
  std::vector<Complex> in(values.data(), values.data() + n), res(n);
  fft_engine().fwd(res, in);
  SpectralField f(grid);
  for (int j = 0; j < n; ++j) f.coeffs[j] = res[j] / static_cast<double>(n);
  return f;
}

SpectralField apply_Dr(const SpectralField& field, double r) {
  SpectralField out = field;
  const int n = field.grid.size();
  for (int j = 0; j < n; ++j)
    out.coeffs[j] *= dr_multiplier(field.grid.mode_of_index(j), r);
  return out;
}

double hs_norm(const SpectralField& field, double s) {
  const int n = field.grid.size();
  double acc = 0;
  for (int j = 0; j < n; ++j) {
    double w = hs_weight(field.grid.mode_of_index(j), s);
    acc += w * w * std::norm(field.coeffs[j]);
  }
  return std::sqrt(acc);
}

double l2_norm(const SpectralField& field) { return field.coeffs.norm(); }

Complex inner(const SpectralField& a, const SpectralField& b) {
  // <a,b> = sum_k a_k conj(b_k)
  return b.coeffs.dot(a.coeffs);
}

SpectralField free_propagate(const SpectralField& field, double t) {
  SpectralField out = field;
  const int n = field.grid.size();
  for (int j = 0; j < n; ++j) {
    double k = field.grid.mode_of_index(j);
    out.coeffs[j] *= std::polar(1.0, -k * k * t);
  }
  return out;
}

SpectralField parity_project(const SpectralField& field, Parity tag) {
  if (tag == Parity::None) return field;
  const int n = field.grid.size();
  SpectralField out(field.grid);
  // reflection x -> -x maps c_k to c_{-k}; mode -N/2 has no partner and is
  // its own reflection under the storage wraparound
  for (int j = 0; j < n; ++j) {
    int k = field.grid.mode_of_index(j);
    int krefl = -k;
    Complex refl;
    if (krefl >= -n / 2 && krefl < n / 2)
      refl = field.coeffs[field.grid.index_of_mode(krefl)];
    else
      refl = field.coeffs[j];  // Nyquist mode
    if (tag == Parity::Even) {
      out.coeffs[j] = 0.5 * (field.coeffs[j] + refl);
    } else {
      out.coeffs[j] = 0.5 * (field.coeffs[j] - refl);
    }
  }
  if (tag == Parity::Odd) out.mode(0) = 0.0;
  return out;
}

SpectralField conj_field(const SpectralField& field) {
  const int n = field.grid.size();
  SpectralField out(field.grid);
  for (int j = 0; j < n; ++j) {
    int k = field.grid.mode_of_index(j);
    int krefl = -k;
    if (krefl >= -n / 2 && krefl < n / 2)
      out.coeffs[field.grid.index_of_mode(krefl)] = std::conj(field.coeffs[j]);
    else
      out.coeffs[j] = std::conj(field.coeffs[j]);
  }
  return out;
}

namespace {
SpectralField pad_to(const SpectralField& f, const TorusGrid& big) {
  SpectralField out(big);
  const int n = f.grid.size();
  for (int j = 0; j < n; ++j)
    out.mode(f.grid.mode_of_index(j)) = f.coeffs[j];
  return out;
}

SpectralField truncate_to(const SpectralField& f, const TorusGrid& small) {
  SpectralField out(small);
  const int n = small.size();
  for (int j = 0; j < n; ++j)
    out.coeffs[j] = f.mode(small.mode_of_index(j));
  return out;
}
}  // namespace

SpectralField multiply(const SpectralField& a, const SpectralField& b, bool dealias) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("multiply: grid mismatch");
  if (!dealias) {
    Vec va = to_physical(a), vb = to_physical(b);
    return to_spectral(a.grid, va.cwiseProduct(vb));
  }
  TorusGrid big(2 * a.grid.size());
  Vec va = to_physical(pad_to(a, big)), vb = to_physical(pad_to(b, big));
  return truncate_to(to_spectral(big, va.cwiseProduct(vb)), a.grid);
}

SpectralField triple_product(const SpectralField& u1, const SpectralField& u2conj,
                             const SpectralField& u3) {
  TorusGrid big(4 * u1.grid.size());
  Vec v1 = to_physical(pad_to(u1, big));
  Vec v2 = to_physical(pad_to(u2conj, big));
  Vec v3 = to_physical(pad_to(u3, big));
  Vec prod = v1.cwiseProduct(v2.conjugate()).cwiseProduct(v3);
  return truncate_to(to_spectral(big, prod), u1.grid);
}

SpectralField commutator_Dr_mult(const SpectralField& f, double r, const SpectralField& u) {
  SpectralField fu = multiply(f, u, true);
  SpectralField fDu = multiply(f, apply_Dr(u, r), true);
  return apply_Dr(fu, r) - fDu;
}

double smooth_step(double x) {
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  double h0 = std::exp(-1.0 / x);
  double h1 = std::exp(-1.0 / (1.0 - x));
  return h0 / (h0 + h1);
}

void validate_bump(const BumpSpec& spec) {
  bool degenerate = spec.support_lo == spec.plateau_lo && spec.support_hi == spec.plateau_hi;
  if (degenerate) return;  // constant-one window
  if (!(spec.support_lo < spec.plateau_lo && spec.plateau_lo < spec.plateau_hi &&
        spec.plateau_hi < spec.support_hi))
    throw std::invalid_argument("bump plateau must lie strictly inside support");
}

double bump_eval(const BumpSpec& spec, double x) {
  if (spec.support_lo == spec.plateau_lo && spec.support_hi == spec.plateau_hi)
    return (x >= spec.support_lo && x <= spec.support_hi) ? 1.0 : 0.0;
  if (x <= spec.support_lo || x >= spec.support_hi) return 0.0;
  if (x < spec.plateau_lo)
    return smooth_step((x - spec.support_lo) / (spec.plateau_lo - spec.support_lo));
  if (x > spec.plateau_hi)
    return smooth_step((spec.support_hi - x) / (spec.support_hi - spec.plateau_hi));
  return 1.0;
}

SpectralField make_spatial_bump(const TorusGrid& grid, const BumpSpec& spec) {
  validate_bump(spec);
  Vec vals(grid.size());
  for (int j = 0; j < grid.size(); ++j) vals[j] = bump_eval(spec, grid.point(j));
  SpectralField f = to_spectral(grid, vals);
  // enforce exact Hermitian symmetry of the real-valued samples
  for (int k = 1; k < grid.size() / 2; ++k)
    f.mode(-k) = std::conj(f.mode(k));
  f.mode(0) = f.mode(0).real();
  f.mode(-grid.size() / 2) = f.mode(-grid.size() / 2).real();
  return f;
}

TemporalProfile TemporalProfile::one() { return TemporalProfile{}; }

TemporalProfile TemporalProfile::control_window(double t_end) {
  TemporalProfile p;
  p.kind = Kind::Bump;
  p.bump = BumpSpec{0.0, t_end, t_end / 3.0, 2.0 * t_end / 3.0};
  return p;
}

TemporalProfile TemporalProfile::from_bump(const BumpSpec& spec) {
  validate_bump(spec);
  TemporalProfile p;
  p.kind = Kind::Bump;
  p.bump = spec;
  return p;
}

TemporalProfile TemporalProfile::ramp(double up_end, double down_start, double down_end) {
  TemporalProfile p;
  p.kind = Kind::Ramp;
  p.ramp_up_end = up_end;
  p.ramp_down_start = down_start;
  p.ramp_down_end = down_end;
  return p;
}

double TemporalProfile::eval(double t) const {
  switch (kind) {
    case Kind::One:
      return 1.0;
    case Kind::Bump:
      return bump_eval(bump, t);
    case Kind::Ramp: {
      double v = 1.0;
      if (ramp_up_end > 0) v = std::min(v, smooth_step(t / ramp_up_end));
      if (ramp_down_end > ramp_down_start)
        v = std::min(v, smooth_step((ramp_down_end - t) / (ramp_down_end - ramp_down_start)));
      else if (ramp_down_end == ramp_down_start && t >= ramp_down_start && ramp_down_start > 0)
        v = 0.0;
      return std::max(0.0, v);
    }
  }
  return 1.0;
}

BumpProfile BumpProfile::make(const TorusGrid& grid, const BumpSpec& spatial,
                              const TemporalProfile& temporal) {
  validate_bump(spatial);
  BumpProfile p;
  p.spatial = spatial;
  p.temporal = temporal;
  p.a = make_spatial_bump(grid, spatial);
  p.a_sq_phys = RealVec(grid.size());
  for (int j = 0; j < grid.size(); ++j) {
    double v = bump_eval(spatial, grid.point(j));
    p.a_sq_phys[j] = v * v;
  }
  p.floor_eta = 0.5;  // a == 1 on the plateau, so a^2 > 1/2 there
  return p;
}

double parity_defect(const SpectralField& field, Parity preserved) {
  Parity broken = preserved == Parity::Odd ? Parity::Even : Parity::Odd;
  SpectralField part = parity_project(field, broken);
  double n = l2_norm(part);
  return n * n;
}

}  // namespace nlsc
