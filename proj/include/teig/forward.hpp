#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <ostream>
#include <vector>

#include "teig/error.hpp"
#include "teig/numerics.hpp"
#include "teig/potential.hpp"

namespace teig {

struct JostEval {
  cplx k;
  cplx f0;
  cplx fp0;
  cplx F;
};

struct RegularEval {
  cplx k;
  double x = 0.0;
  cplx phi;
  cplx phip;
};

inline constexpr double growth_guard = 700.0;

namespace detail {

inline void check_k(const Potential& p, cplx k) {
  if (!std::isfinite(k.real()) || !std::isfinite(k.imag())) throw error(error_kind::validation, "k must be finite");
  if (std::abs(k.imag()) * p.b > growth_guard) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "|Im k| b = %.6g exceeds the overflow guard %.0f", std::abs(k.imag()) * p.b,
                  growth_guard);
    throw error(error_kind::range, buf);
  }
}

inline State2 step_constant(cplx k2, double v, double L, const State2& y) {
  const cplx w = std::sqrt(k2 - v);
  const cplx c = std::cos(w * L);
  const cplx s = sin_over(w, L);
  return {c * y[0] + s * y[1], -(k2 - v) * s * y[0] + c * y[1]};
}

inline State2 step_linear(const Piece& pc, cplx k2, double from, double to, const State2& y,
                          const IntegratorOptions& opt) {
  const double slope = (pc.v1 - pc.v0) / (pc.x1 - pc.x0);
  auto rhs = [&](double x, const State2& u) {
    const double v = pc.v0 + slope * (x - pc.x0);
    return State2{u[1], (v - k2) * u[0]};
  };
  return integrate_dp45(rhs, from, to, y, opt);
}

/// Carries (u, u') from x = 0 to x = xe through every piece to the left of xe.
/// A delta sitting exactly at xe is not crossed.
inline State2 propagate_forward(const std::vector<Piece>& pcs, cplx k, State2 y, double xe,
                                const IntegratorOptions& opt) {
  const cplx k2 = k * k;
  for (const auto& pc : pcs) {
    if (pc.x0 >= xe) break;
    switch (pc.type) {
      case Piece::kind::delta:
        y[1] += pc.v0 * y[0];
        break;
      case Piece::kind::constant:
        y = step_constant(k2, pc.v0, std::min(pc.x1, xe) - pc.x0, y);
        break;
      case Piece::kind::linear:
        y = step_linear(pc, k2, pc.x0, std::min(pc.x1, xe), y, opt);
        break;
    }
  }
  return y;
}

/// Carries (u, u') from x = b back to x = 0.
inline State2 propagate_backward(const std::vector<Piece>& pcs, cplx k, State2 y, const IntegratorOptions& opt) {
  const cplx k2 = k * k;
  for (auto it = pcs.rbegin(); it != pcs.rend(); ++it) {
    const auto& pc = *it;
    switch (pc.type) {
      case Piece::kind::delta:
        y[1] -= pc.v0 * y[0];
        break;
      case Piece::kind::constant:
        y = step_constant(k2, pc.v0, pc.x0 - pc.x1, y);
        break;
      case Piece::kind::linear:
        y = step_linear(pc, k2, pc.x1, pc.x0, y, opt);
        break;
    }
  }
  return y;
}

/// Like propagate_backward but stops at xe in [0, b].
inline State2 propagate_backward_to(const std::vector<Piece>& pcs, cplx k, State2 y, double xe,
                                    const IntegratorOptions& opt) {
  const cplx k2 = k * k;
  for (auto it = pcs.rbegin(); it != pcs.rend(); ++it) {
    const auto& pc = *it;
    if (pc.type == Piece::kind::delta) {
      if (pc.x0 <= xe) break;
      y[1] -= pc.v0 * y[0];
      continue;
    }
    if (pc.x1 <= xe) break;
    const double to = std::max(pc.x0, xe);
    if (pc.type == Piece::kind::constant)
      y = step_constant(k2, pc.v0, to - pc.x1, y);
    else
      y = step_linear(pc, k2, pc.x1, to, y, opt);
    if (to == xe) break;
  }
  return y;
}

inline cplx jost_combination(const BoundaryCondition& bc, cplx f0, cplx fp0) {
  return bc.dirichlet ? f0 : -I * (fp0 + bc.cot_theta * f0);
}

}  // namespace detail

/// Jost solution at the origin, integrated from its plane-wave data at x = b.
inline JostEval jost_at_origin(const Potential& p, const BoundaryCondition& bc, cplx k,
                               const IntegratorOptions& opt = {}) {
  detail::check_k(p, k);
  const cplx e = std::exp(I * k * p.b);
  const State2 y = detail::propagate_backward(layout(p), k, {e, I * k * e}, opt);
  return {k, y[0], y[1], detail::jost_combination(bc, y[0], y[1])};
}

/// (f(k,x), f'(k,x)) for 0 <= x <= b.
inline State2 jost_solution(const Potential& p, cplx k, double x, const IntegratorOptions& opt = {}) {
  detail::check_k(p, k);
  if (x >= p.b) return {std::exp(I * k * x), I * k * std::exp(I * k * x)};
  const cplx e = std::exp(I * k * p.b);
  return detail::propagate_backward_to(layout(p), k, {e, I * k * e}, std::max(x, 0.0), opt);
}

/// Jost function alone; convenience for callers that only need F.
inline cplx jost_function(const Potential& p, const BoundaryCondition& bc, cplx k, const IntegratorOptions& opt = {}) {
  return jost_at_origin(p, bc, k, opt).F;
}

/// Independent evaluation of f(k,0), f'(k,0) by fixed-point sweeps of the
/// Volterra equations on a trapezoid grid. Each sweep costs O(nodes).
inline JostEval jost_series_oracle(const Potential& p, const BoundaryCondition& bc, cplx k, int iterations,
                                   int nodes = 200'000) {
  if (!p.deltas.empty()) throw error(error_kind::unsupported, "series oracle does not accept delta potentials");
  if (iterations < 1) throw error(error_kind::validation, "iterations must be at least 1");
  detail::check_k(p, k);
  const auto pcs = layout(p);

  std::vector<double> xs{0.0};
  std::vector<double> vl, vr;  // one-sided V at the ends of each interval
  for (const auto& pc : pcs) {
    const double len = pc.x1 - pc.x0;
    const int n = std::max(2, static_cast<int>(std::ceil(nodes * len / p.b)));
    for (int i = 1; i <= n; ++i) {
      const double xa = pc.x0 + len * (i - 1) / n;
      const double xb = (i == n) ? pc.x1 : pc.x0 + len * i / n;
      auto vat = [&](double x) {
        return pc.type == Piece::kind::linear ? pc.v0 + (pc.v1 - pc.v0) * (x - pc.x0) / len : pc.v0;
      };
      xs.push_back(xb);
      vl.push_back(vat(xa));
      vr.push_back(vat(xb));
    }
  }
  const size_t N = xs.size();
  std::vector<cplx> cosk(N), sinover(N), plane(N);
  for (size_t i = 0; i < N; ++i) {
    cosk[i] = std::cos(k * xs[i]);
    sinover[i] = sin_over(k, xs[i]);
    plane[i] = std::exp(I * k * xs[i]);
  }
  std::vector<cplx> f = plane;
  cplx B0 = 0.0;  // A = int sin(ky)/k V f, B = int cos(ky) V f, both over (x, b)
  std::vector<cplx> next(N);
  for (int it = 0; it < iterations; ++it) {
    cplx A = 0.0, B = 0.0;
    next[N - 1] = plane[N - 1];
    for (size_t j = N - 1; j-- > 0;) {
      const double h = xs[j + 1] - xs[j];
      A += 0.5 * h * (sinover[j] * vl[j] * f[j] + sinover[j + 1] * vr[j] * f[j + 1]);
      B += 0.5 * h * (cosk[j] * vl[j] * f[j] + cosk[j + 1] * vr[j] * f[j + 1]);
      next[j] = plane[j] + cosk[j] * A - sinover[j] * B;
    }
    B0 = B;
    f.swap(next);
  }
  const cplx f0 = f[0];
  const cplx fp0 = I * k - B0;
  return {k, f0, fp0, detail::jost_combination(bc, f0, fp0)};
}

inline RegularEval regular_solution(const Potential& p, const BoundaryCondition& bc, cplx k, double x,
                                    const IntegratorOptions& opt = {}) {
  detail::check_k(p, k);
  if (!(x >= 0.0 && x <= p.b)) throw error(error_kind::validation, "regular_solution needs 0 <= x <= b");
  const State2 y0 = bc.dirichlet ? State2{0.0, 1.0} : State2{1.0, -bc.cot_theta};
  const State2 y = detail::propagate_forward(layout(p), k, y0, x, opt);
  return {k, x, y[0], y[1]};
}

/// Regular solution of the unperturbed problem and its derivative at x.
inline std::pair<cplx, cplx> free_regular(const BoundaryCondition& bc, cplx k, double x) {
  if (bc.dirichlet) return {sin_over(k, x), std::cos(k * x)};
  return {std::cos(k * x) - bc.cot_theta * sin_over(k, x), -k * k * sin_over(k, x) - bc.cot_theta * std::cos(k * x)};
}

/// D as the Wronskian of the free and perturbed regular solutions at x = b.
inline cplx determinant_from_regular(const Potential& p, const BoundaryCondition& bc, cplx k,
                                     const IntegratorOptions& opt = {}) {
  const auto r = regular_solution(p, bc, k, p.b, opt);
  const auto [u0, u0p] = free_regular(bc, k, p.b);
  return u0 * r.phip - u0p * r.phi;
}

inline constexpr double small_k_switch = 0.05;

/// D(k) from the Jost function at +-k; near k = 0 the Wronskian form is used
/// since the Jost combination divides by k.
inline cplx D_eval(const Potential& p, const BoundaryCondition& bc, cplx k, const IntegratorOptions& opt = {}) {
  detail::check_k(p, k);
  if (std::abs(k) * p.b < small_k_switch) return determinant_from_regular(p, bc, k, opt);
  const auto jp = jost_at_origin(p, bc, k, opt);
  const auto jm = jost_at_origin(p, bc, -k, opt);
  if (bc.dirichlet) return (jp.f0 - jm.f0) / (2.0 * I * k);
  return (jp.F + jm.F) / (2.0 * I) + bc.cot_theta / (2.0 * k) * (jp.F - jm.F);
}

/// [F0(k)F(-k) - F0(-k)F(k)] / (2ik) with F0(k) = k - i cot(theta).
inline cplx determinant_factorized(const Potential& p, const BoundaryCondition& bc, cplx k,
                                   const IntegratorOptions& opt = {}) {
  if (bc.dirichlet) throw error(error_kind::unsupported, "factorized determinant is defined for non-Dirichlet mode");
  const cplx Fp = jost_function(p, bc, k, opt);
  const cplx Fm = jost_function(p, bc, -k, opt);
  const cplx F0p = k - I * bc.cot_theta;
  const cplx F0m = -k - I * bc.cot_theta;
  return (F0p * Fm - F0m * Fp) / (2.0 * I * k);
}

/// D(0) = -iF(0) + cot(theta) F'(0) (Dirichlet: -i d/dk f(k,0) at 0), derivative by central difference.
inline cplx determinant_at_origin_from_jost(const Potential& p, const BoundaryCondition& bc, double h = 1e-5,
                                            const IntegratorOptions& opt = {}) {
  if (bc.dirichlet) {
    const cplx d = (jost_at_origin(p, bc, h, opt).f0 - jost_at_origin(p, bc, -h, opt).f0) / (2.0 * h);
    return -I * d;
  }
  const cplx dF = (jost_function(p, bc, h, opt) - jost_function(p, bc, -h, opt)) / (2.0 * h);
  return -I * jost_function(p, bc, 0.0, opt) + bc.cot_theta * dF;
}

inline cplx free_scattering_matrix(const BoundaryCondition& bc, cplx k) {
  if (bc.dirichlet) return 1.0;
  return (k + I * bc.cot_theta) / (k - I * bc.cot_theta);
}

inline constexpr double pole_threshold = 1e-12;

inline cplx scattering_matrix(const Potential& p, const BoundaryCondition& bc, cplx k,
                              const IntegratorOptions& opt = {}) {
  const auto jp = jost_at_origin(p, bc, k, opt);
  const auto jm = jost_at_origin(p, bc, -k, opt);
  const cplx den = jp.F;
  if (std::abs(den) < pole_threshold * std::max(1.0, std::abs(k)))
    throw error(error_kind::pole, "Jost function vanishes at the requested k", std::abs(den));
  if (bc.dirichlet) return jm.f0 / jp.f0;
  return -jm.F / jp.F;
}

struct AsymptoticResidual {
  cplx k;
  double jost = 0.0;          // |f(k,0) - 1 + W/(2ik)| |k|
  double jost_function = 0.0;  // |F(k) - k - i(W/2 - cot)|
  double determinant = 0.0;    // |D(k) - W/2|
};

inline std::vector<AsymptoticResidual> asymptotics_check(const Potential& p, const BoundaryCondition& bc,
                                                         const std::vector<cplx>& ks,
                                                         const IntegratorOptions& opt = {}) {
  const double W = moment_W(p);
  std::vector<AsymptoticResidual> out;
  for (const cplx k : ks) {
    const auto j = jost_at_origin(p, bc, k, opt);
    AsymptoticResidual r{k};
    r.jost = std::abs(j.f0 - 1.0 + W / (2.0 * I * k)) * std::abs(k);
    r.jost_function = bc.dirichlet ? 0.0 : std::abs(j.F - k - I * (0.5 * W - bc.cot_theta));
    r.determinant = std::abs(D_eval(p, bc, k, opt) - 0.5 * W);
    out.push_back(r);
  }
  return out;
}

inline void write_d_grid_csv(std::ostream& os, const std::vector<cplx>& ks, const std::vector<cplx>& Ds) {
  os << "k_re,k_im,D_re,D_im\n";
  char buf[160];
  for (size_t i = 0; i < ks.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", ks[i].real(), ks[i].imag(), Ds[i].real(),
                  Ds[i].imag());
    os << buf;
  }
}

}  // namespace teig
