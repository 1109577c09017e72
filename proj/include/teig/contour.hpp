#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "teig/error.hpp"
#include "teig/numerics.hpp"

namespace teig {

using ComplexFn = std::function<cplx(cplx)>;

struct Rect {
  double re0 = 0.0, re1 = 1.0, im0 = 0.0, im1 = 1.0;
  double width() const { return re1 - re0; }
  double height() const { return im1 - im0; }
  double diameter() const { return std::hypot(width(), height()); }
  cplx center() const { return {0.5 * (re0 + re1), 0.5 * (im0 + im1)}; }
  bool contains(cplx z) const { return z.real() >= re0 && z.real() <= re1 && z.imag() >= im0 && z.imag() <= im1; }
};

namespace detail {

struct boundary_hit {};

inline double phase_step(cplx from, cplx to) { return std::arg(to / from); }

/// Phase accumulated by f along z(t), t in [t0, t1]; sub-steps are bisected
/// until both halves turn by less than a quarter turn in total.
template <class Path>
double track_phase(const ComplexFn& f, Path&& z, double t0, double t1, int n0) {
  struct Node {
    double t;
    cplx fz;
  };
  const double span = std::abs(t1 - t0);
  double total = 0.0;
  auto eval = [&](double t) {
    const cplx v = f(z(t));
    if (v == 0.0 || !std::isfinite(v.real()) || !std::isfinite(v.imag())) throw boundary_hit{};
    return v;
  };
  Node left{t0, eval(t0)};
  for (int i = 1; i <= n0; ++i) {
    const double tr = (i == n0) ? t1 : t0 + (t1 - t0) * i / n0;
    std::vector<Node> stack{{tr, eval(tr)}};
    while (!stack.empty()) {
      const Node right = stack.back();
      const double tm = 0.5 * (left.t + right.t);
      const Node mid{tm, eval(tm)};
      const double d1 = phase_step(left.fz, mid.fz);
      const double d2 = phase_step(mid.fz, right.fz);
      if (std::abs(d1) + std::abs(d2) < 0.5 * pi) {
        total += d1 + d2;
        left = right;
        stack.pop_back();
      } else {
        if (std::abs(right.t - left.t) < 1e-13 * std::max(1.0, span)) throw boundary_hit{};
        stack.push_back(mid);
      }
    }
  }
  return total;
}

inline int rect_winding(const ComplexFn& f, const Rect& r, double step) {
  const cplx c[4] = {{r.re0, r.im0}, {r.re1, r.im0}, {r.re1, r.im1}, {r.re0, r.im1}};
  double total = 0.0;
  for (int e = 0; e < 4; ++e) {
    const cplx a = c[e], b = c[(e + 1) % 4];
    const int n0 = std::max(4, static_cast<int>(std::ceil(std::abs(b - a) / step)));
    total += track_phase(f, [&](double t) { return a + (b - a) * t; }, 0.0, 1.0, n0);
  }
  return static_cast<int>(std::lround(total / (2.0 * pi)));
}

inline int circle_winding(const ComplexFn& f, cplx z0, double r) {
  return static_cast<int>(std::lround(
      track_phase(f, [&](double t) { return z0 + r * std::exp(I * t); }, 0.0, 2.0 * pi, 16) / (2.0 * pi)));
}

}  // namespace detail

/// Zeros of f inside r counted with multiplicity. If the contour passes
/// through a zero the rectangle is pushed outward, at most five times.
inline int count_zeros_rect(const ComplexFn& f, Rect r, double step = 0.0) {
  if (step <= 0.0) step = std::max(r.width(), r.height()) / 16.0;
  for (int attempt = 0; attempt <= 5; ++attempt) {
    try {
      return detail::rect_winding(f, r, step);
    } catch (const detail::boundary_hit&) {
      const double d = 1e-4 * r.diameter() * (attempt + 1) * 1.37;
      r = {r.re0 - d, r.re1 + d, r.im0 - d, r.im1 + d};
    }
  }
  throw error(error_kind::contour, "zero on the contour persists after 5 nudges");
}

/// Winding of f on |z - z0| = r; throws contour error when the circle hits a zero.
inline int count_zeros_circle(const ComplexFn& f, cplx z0, double r) {
  try {
    return detail::circle_winding(f, z0, r);
  } catch (const detail::boundary_hit&) {
    throw error(error_kind::contour, "zero on the circle");
  }
}

struct MultiplicityResult {
  int order = 0;      // order in k
  double radius = 0;  // radius at which the count stabilized
};

/// Order of the zero at k0 from windings on radii r0 2^j; accepted once two
/// consecutive nonzero counts agree.
inline MultiplicityResult multiplicity_detail(const ComplexFn& f, cplx k0, double r0 = 1e-3, int max_doublings = 12) {
  int prev = -1, before = -1;
  double r = r0;
  for (int j = 0; j <= max_doublings; ++j, r *= 2.0) {
    int n;
    try {
      n = detail::circle_winding(f, k0, r);
    } catch (const detail::boundary_hit&) {
      before = prev;
      prev = -1;
      continue;
    }
    if (n > 0 && n == prev) return {n, 0.5 * r};
    before = prev;
    prev = n;
  }
  throw error(error_kind::ambiguity, "zero order did not stabilize around k0 (last counts " + std::to_string(before) +
                                         " and " + std::to_string(prev) + ")");
}

/// Multiplicity of k0^2 as a zero of D(k) seen as a function of k^2.
inline int multiplicity_at(const ComplexFn& f, cplx k0, double r0 = 1e-3) {
  const int m = multiplicity_detail(f, k0, r0).order;
  if (std::abs(k0) == 0.0) {
    if (m % 2 != 0)
      throw error(error_kind::ambiguity, "odd zero order " + std::to_string(m) + " at the origin for an even function");
    return m / 2;
  }
  return m;
}

}  // namespace teig
