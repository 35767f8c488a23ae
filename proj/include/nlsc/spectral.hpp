// Spectral representation of functions on the torus R/2piZ.
//
// A field is stored as complex Fourier coefficients c_k, k in
// {-N/2,...,N/2-1}, kept in FFT layout (index j maps to k = j for
// j < N/2 and k = j - N otherwise).  The normalization is fixed so
// that u(x) = sum_k c_k e^{ikx}; the coefficient l2 norm is the
// working "L2 norm" of the whole toolkit and Parseval reads
// sum_k |c_k|^2 = (1/N) sum_j |u(x_j)|^2.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace nlsc {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXcd;
using RealVec = Eigen::VectorXd;

struct TorusGrid {
  int n_modes = 0;  // N, even, >= 8

  TorusGrid() = default;
  explicit TorusGrid(int n);

  int size() const { return n_modes; }
  double point(int j) const;          // collocation point x_j = 2*pi*j/N
  RealVec points() const;
  int mode_of_index(int j) const;     // storage index -> wavenumber
  int index_of_mode(int k) const;     // wavenumber (-N/2..N/2-1) -> storage index

  bool operator==(const TorusGrid& o) const { return n_modes == o.n_modes; }
};

struct SpectralField {
  TorusGrid grid;
  Vec coeffs;  // length N, FFT layout

  SpectralField() = default;
  explicit SpectralField(const TorusGrid& g) : grid(g), coeffs(Vec::Zero(g.size())) {}
  SpectralField(const TorusGrid& g, Vec c);

  Complex mode(int k) const { return coeffs[grid.index_of_mode(k)]; }
  Complex& mode(int k) { return coeffs[grid.index_of_mode(k)]; }
  bool finite() const;

  SpectralField& operator+=(const SpectralField& o) { coeffs += o.coeffs; return *this; }
  SpectralField& operator-=(const SpectralField& o) { coeffs -= o.coeffs; return *this; }
  SpectralField& operator*=(Complex z) { coeffs *= z; return *this; }
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(Complex z, SpectralField a);

enum class Parity { Odd, Even, None };

// Unitary-up-to-rounding transforms between coefficients and collocation values.
Vec to_physical(const SpectralField& field);
SpectralField to_spectral(const TorusGrid& grid, const Vec& values);

// Fourier multiplier sgn(n)|n|^r with |0| read as 1 and sgn(0) = 1
// (so the zero mode is left untouched).  hs_norm is ||D^s u||_{l2}.
SpectralField apply_Dr(const SpectralField& field, double r);
double hs_norm(const SpectralField& field, double s);
double l2_norm(const SpectralField& field);
Complex inner(const SpectralField& a, const SpectralField& b);

// Free Schrodinger flow e^{it dxx}: c_k -> e^{-i k^2 t} c_k.
SpectralField free_propagate(const SpectralField& field, double t);

SpectralField parity_project(const SpectralField& field, Parity tag);
SpectralField conj_field(const SpectralField& field);  // spatial complex conjugate

// Collocation product.  With dealias the product is formed on a padded grid
// and truncated back (alias-free for band-limited factors).
SpectralField multiply(const SpectralField& a, const SpectralField& b, bool dealias = true);
SpectralField triple_product(const SpectralField& u1, const SpectralField& u2conj,
                             const SpectralField& u3);

// [D^r, f] u = D^r(f u) - f D^r(u), product dealiased.
SpectralField commutator_Dr_mult(const SpectralField& f, double r, const SpectralField& u);

// --- smooth cutoffs -------------------------------------------------------

// Support/plateau description of a bump; plateau must sit strictly inside
// the support (they may coincide with it only when the bump degenerates to
// the constant 1, support == plateau == full domain).
struct BumpSpec {
  double support_lo = 0, support_hi = 0;
  double plateau_lo = 0, plateau_hi = 0;
};

// C^inf transition built from e^{-1/x}: 0 for x<=0, 1 for x>=1, monotone.
double smooth_step(double x);
// Evaluate the bump at x: 1 on the plateau, 0 outside the support.
double bump_eval(const BumpSpec& spec, double x);
void validate_bump(const BumpSpec& spec);

// Sample a spatial bump on the collocation grid and return its spectral
// representation (real-valued, Hermitian-symmetric coefficients).
SpectralField make_spatial_bump(const TorusGrid& grid, const BumpSpec& spec);

// Smooth temporal cutoff phi(t) on [0, t_end]: kinds cover the constant-one
// window, the compactly supported control window and the stabilization ramp.
struct TemporalProfile {
  enum class Kind { One, Bump, Ramp };
  Kind kind = Kind::One;
  BumpSpec bump;                         // Kind::Bump
  double ramp_up_end = 0;                // Kind::Ramp: s on [0, up_end]
  double ramp_down_start = 0, ramp_down_end = 0;  // 1 in between, s down after

  static TemporalProfile one();
  static TemporalProfile control_window(double t_end);  // phi=1 on [T/3,2T/3], 0 at 0,T
  static TemporalProfile from_bump(const BumpSpec& spec);
  static TemporalProfile ramp(double up_end, double down_start, double down_end);

  double eval(double t) const;
};

// Spatial damping/control cutoff a(x) with temporal window phi(t).
struct BumpProfile {
  BumpSpec spatial;
  TemporalProfile temporal;
  SpectralField a;        // spectral samples of a on its grid
  RealVec a_sq_phys;      // a(x_j)^2 on the collocation grid
  double floor_eta = 0;   // a^2 > eta on the plateau

  static BumpProfile make(const TorusGrid& grid, const BumpSpec& spatial,
                          const TemporalProfile& temporal);
  double phi(double t) const { return temporal.eval(t); }
};

// Energy of the field's even-parity (resp. odd-parity) component; used by
// the Dirichlet/Neumann parity checks.
double parity_defect(const SpectralField& field, Parity preserved);

}  // namespace nlsc
