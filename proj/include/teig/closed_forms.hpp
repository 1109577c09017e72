#pragma once

#include <array>
#include <complex>

#include "teig/numerics.hpp"

// Explicit formulas for the fixture potentials: constant well of height v on
// (0, b), the +-1 two-step on (0, 1), and a single delta spike c delta(x - a).
namespace teig::closed {

inline cplx square_well_F(double v, double b, double cot, cplx k) {
  const cplx w = std::sqrt(k * k - v);
  return std::exp(I * k * b) * ((k - I * cot) * std::cos(w * b) - (I * w * w + k * cot) * sin_over(w, b));
}

inline cplx square_well_D(double v, double b, double cot, cplx k) {
  const cplx w = std::sqrt(k * k - v);
  const cplx sk = sin_over(k, b), sw = sin_over(w, b);
  return (k * k + cot * cot) * std::cos(w * b) * sk - (w * w + cot * cot) * std::cos(k * b) * sw - v * cot * sw * sk;
}

/// b = 1, cot(theta) = 0, V = 1 on (0, 1/2) and -1 on (1/2, 1).
inline cplx two_step_D(cplx k) {
  const cplx a = std::sqrt(k * k - 1.0);
  const cplx p = std::sqrt(k * k + 1.0);
  const cplx q1 = k * std::sin(k) * std::cos(0.5 * a) * std::cos(0.5 * p);
  const cplx q2 = p * std::sin(0.5 * p) * std::cos(k) * std::cos(0.5 * a);
  const cplx q3 = a * std::sin(0.5 * a) * std::cos(k) * std::cos(0.5 * p);
  const cplx q4 = k * a * std::sin(0.5 * a) * std::sin(k) * sin_over(p, 0.5);
  return q1 - q2 - q3 - q4;
}

/// f(k, 0) for the delta spike.
inline cplx delta_f0(double a, double c, cplx k) {
  return 1.0 + (I * c / (2.0 * k)) * (1.0 - std::exp(2.0 * I * k * a));
}

inline cplx delta_D(double a, double c, double cot, cplx k) {
  const cplx t = std::cos(k * a) - cot * sin_over(k, a);
  return c * t * t;
}

/// Coefficients of 1, k^2, k^4 in the small-k expansion of delta_D.
inline std::array<double, 3> delta_small_k(double a, double c, double cot) {
  const double u = a * cot;
  const double a2 = a * a;
  return {c * (u - 1.0) * (u - 1.0), -c * a2 / 3.0 * (u - 1.0) * (u - 3.0),
          2.0 * c * a2 * a2 / 45.0 * ((u - 3.0) * (u - 3.0) - 1.5)};
}

}  // namespace teig::closed
