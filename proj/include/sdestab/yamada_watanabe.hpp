#pragma once

#include <cstdint>

#include "sdestab/quadrature.hpp"

namespace sdestab {

// a_m = exp(-m(m+1)/2), a_0 = 1: the regularization scale sequence with
// int_{a_m}^{a_{m-1}} dx/x = m.
double yw_a(int m);

// Largest m with a(m)*n >= 1, i.e. m(m+1)/2 <= ln n; >= 1 for every n > 2.
int select_level(std::int64_t n);

// -Gamma(alpha)*cos(alpha*pi/2)/2, the positive constant in front of the
// smoothed |x|^{alpha-1} second-difference identity; alpha in (1,2).
double k_alpha(double alpha);

// A_{m,n} = a(m-1) + 2*c_jy/m + 2*c_jsigma/(m*a(m)*n): the error budget of
// one regularization level. With m = select_level(n) it is O((ln n)^{-1/2}).
double theoretical_bound(std::int64_t n, int m, double c_jy, double c_jsigma);

// One regularization level m: the C^2 bump phi_m supported on
// +-(a_m, a_{m-1}) with per-side mass 1 and envelope phi_m(x) <= 2/(x m),
// its antiderivative, and the smoothed absolute value
// u_m(x) = int_0^{|x|} int_0^y phi_m(z) dz dy with
// |x| - a_{m-1} <= u_m(x) <= |x| and |u_m'| <= 1.
class YWLevel {
 public:
  explicit YWLevel(int m, double bump_plateau_fraction = 0.25);
  // Custom scale pair; requires ln(a_prev/a_m) = m to 1e-12 relative.
  YWLevel(int m, double a_m, double a_prev,
          double bump_plateau_fraction = 0.25);

  int m() const { return m_; }
  double a() const { return a_m_; }
  double a_prev() const { return a_prev_; }
  double plateau_fraction() const { return w_; }

  double phi(double x) const;        // even, zero outside +-(a_m, a_prev)
  double phi_mass() const;           // per-side integral from the table
  double u(double x) const;          // smoothed |x|
  double u_prime(double x) const;    // odd, clamped to [-1, 1]
  // Smoothed |x|^{alpha-1}: convolution of |.|^{alpha-1} with the
  // unit-total-mass kernel phi_m/2; alpha in (1,2). Adaptive quadrature,
  // ~1e-8 absolute.
  double v(double alpha, double x) const;

 private:
  void build_tables();
  double ramp(double t) const;  // trapezoid profile g on [0,1]

  int m_ = 1;
  double a_m_ = 0, a_prev_ = 0, w_ = 0.25, norm_ = 0.75;
  CumulativeTable phi_cum_;  // int_{a_m}^{x} phi   (first antiderivative)
  CumulativeTable u_cum_;    // int_{a_m}^{x} of the above (second)
};

}  // namespace sdestab
