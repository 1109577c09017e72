#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "teig/contour.hpp"
#include "teig/error.hpp"
#include "teig/forward.hpp"
#include "teig/numerics.hpp"
#include "teig/potential.hpp"

namespace teig {

enum class eig_kind { positive, negative, zero, complex };

inline const char* to_string(eig_kind k) {
  switch (k) {
    case eig_kind::positive: return "positive";
    case eig_kind::negative: return "negative";
    case eig_kind::zero: return "zero";
    case eig_kind::complex: return "complex";
  }
  return "unknown";
}

struct EigenvalueRecord {
  cplx lambda;
  cplx k;
  int multiplicity = 1;  // as a zero in lambda
  eig_kind kind = eig_kind::positive;
  double residual = 0.0;  // |D(k)|
  bool refined = true;
};

struct SearchParams {
  double k_max = 30.0;
  double beta_max = 20.0;
  std::optional<Rect> rect;  // open-quadrant region, defaults to the box spanned by k_max and beta_max
  double tol = 1e-12;        // relative step size at which refinement stops
  double step = 0.0;         // axis scan step, 0 means pi/(8b)
  double origin_radius = 1e-3;
  bool complex_search = true;
};

struct HadamardData {
  double gamma = 0.0;
  int d = 0;
  struct Zero {
    cplx k;
    int mult = 1;
  };
  std::vector<Zero> zeros;
  int truncation = 0;
};

struct BoundState {
  double beta = 0.0;
  double m = 0.0;
  double m_quadrature = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

struct AxisRoot {
  double s;
  bool even;  // touched zero without sign change
};

/// Roots of a real function on [s0, s1]: sign changes on a uniform grid
/// refined by Brent, plus local minima of |g| that touch zero or hide a pair.
inline std::vector<AxisRoot> scan_real(const std::function<double(double)>& g, double s0, double s1, double h,
                                       double xtol) {
  std::vector<AxisRoot> roots;
  if (!(s1 > s0)) return roots;
  const int n = std::max(2, static_cast<int>(std::ceil((s1 - s0) / h)));
  std::vector<double> s(n + 1), v(n + 1);
  for (int i = 0; i <= n; ++i) {
    s[i] = (i == n) ? s1 : s0 + (s1 - s0) * i / n;
    v[i] = g(s[i]);
  }
  auto sgn = [](double x) { return (x > 0) - (x < 0); };
  auto brent = [&](double a, double b, double fa, double fb) { return brent_root(g, a, b, fa, fb, xtol); };
  for (int i = 0; i <= n; ++i) {
    if (v[i] == 0.0) {
      roots.push_back({s[i], false});
      continue;
    }
    if (i > 0 && v[i - 1] != 0.0 && sgn(v[i - 1]) != sgn(v[i])) roots.push_back({brent(s[i - 1], s[i], v[i - 1], v[i]), false});
    if (i == 0 || i == n) continue;
    if (v[i - 1] == 0.0 || v[i + 1] == 0.0) continue;
    if (sgn(v[i - 1]) != sgn(v[i]) || sgn(v[i + 1]) != sgn(v[i])) continue;
    if (!(std::abs(v[i]) < std::abs(v[i - 1]) && std::abs(v[i]) <= std::abs(v[i + 1]))) continue;
    const double dh = 1e-6 * (s[i + 1] - s[i - 1]);
    auto dg = [&](double x) { return (g(x + dh) - g(x - dh)) / (2.0 * dh); };
    const double a = s[i - 1] + dh, b = s[i + 1] - dh;
    const double da = dg(a), db = dg(b);
    if (da == 0.0 || db == 0.0 || sgn(da) == sgn(db)) continue;
    const double sm = brent_root(dg, a, b, da, db, xtol);
    const double vm = g(sm);
    if (vm == 0.0) {
      roots.push_back({sm, true});
    } else if (sgn(vm) != sgn(v[i])) {
      roots.push_back({brent(s[i - 1], sm, v[i - 1], vm), false});
      roots.push_back({brent(sm, s[i + 1], vm, v[i + 1]), false});
    } else if (std::abs(vm) <= 1e-8 * std::max(std::abs(v[i - 1]), std::abs(v[i + 1]))) {
      roots.push_back({sm, true});
    }
  }
  std::sort(roots.begin(), roots.end(), [](const AxisRoot& a, const AxisRoot& b) { return a.s < b.s; });
  // Roundoff can split an even zero into a sign-change pair; merge near-coincident roots.
  std::vector<AxisRoot> merged;
  for (const auto& r : roots) {
    if (!merged.empty() && r.s - merged.back().s < 1e-6 * h) {
      merged.back().even = true;
      continue;
    }
    merged.push_back(r);
  }
  return merged;
}

inline cplx fd_derivative(const ComplexFn& f, cplx z) {
  const double h = 1e-6 * std::max(1.0, std::abs(z));
  return (f(z + h) - f(z - h)) / (2.0 * h);
}

struct NewtonResult {
  cplx z;
  bool converged = false;
};

inline NewtonResult newton(const ComplexFn& f, cplx z, double tol, int max_iter = 60) {
  for (int it = 0; it < max_iter; ++it) {
    const cplx fz = f(z);
    if (fz == 0.0) return {z, true};
    const cplx df = fd_derivative(f, z);
    if (df == 0.0 || !std::isfinite(std::abs(df))) return {z, false};
    const cplx dz = fz / df;
    z -= dz;
    if (!std::isfinite(std::abs(z))) return {z, false};
    if (std::abs(dz) <= tol * std::max(1.0, std::abs(z))) return {z, true};
  }
  return {z, false};
}

inline eig_kind classify(cplx k) {
  if (k == 0.0) return eig_kind::zero;
  if (k.imag() == 0.0) return eig_kind::positive;
  if (k.real() == 0.0) return eig_kind::negative;
  return eig_kind::complex;
}

inline EigenvalueRecord make_record(const ComplexFn& D, cplx k, int mult, bool refined) {
  EigenvalueRecord r;
  r.k = k;
  r.lambda = k * k;
  r.kind = classify(k);
  if (r.kind == eig_kind::positive) r.lambda.imag(0.0);
  if (r.kind == eig_kind::negative) r.lambda = {-k.imag() * k.imag(), 0.0};
  r.multiplicity = mult;
  r.residual = std::abs(D(k));
  r.refined = refined;
  return r;
}

/// Order of an isolated zero in k, probing from a radius tied to the scan scale.
inline int local_order(const ComplexFn& D, cplx k0, double scale) {
  try {
    return multiplicity_detail(D, k0, 1e-4 * scale, 10).order;
  } catch (const error&) {
    return 1;
  }
}

/// Open-quadrant zeros by recursive subdivision. A box resting on an axis is
/// counted through its mirror image across that axis, so no contour ever runs
/// along an axis; the known axis zeros are subtracted using the symmetries
/// D(-k) = D(k) and D(k*) = D(k)*.
struct QuadrantSearch {
  const ComplexFn& D;
  double step;
  double tol;
  std::vector<std::pair<double, int>> real_zeros;  // (k, order) on the positive real axis
  std::vector<std::pair<double, int>> imag_zeros;  // (beta, order) on the positive imaginary axis
  int origin_order = 0;
  std::vector<EigenvalueRecord> out;

  static int axis_sum(const std::vector<std::pair<double, int>>& zs, double lo, double hi) {
    int n = 0;
    for (const auto& [x, m] : zs)
      if (x > lo && x < hi) n += m;
    return n;
  }

  /// Zeros in the part of r lying in the open quadrant.
  int count(const Rect& r) const {
    const bool L = r.re0 == 0.0, B = r.im0 == 0.0;
    const Rect e{L ? -r.re1 : r.re0, r.re1, B ? -r.im1 : r.im0, r.im1};
    const int n = rect_winding(D, e, std::min(step, std::max(e.width(), e.height()) / 4.0));
    int known = 0, fold = 1;
    if (L && B) {
      known = 2 * axis_sum(real_zeros, 0.0, r.re1) + 2 * axis_sum(imag_zeros, 0.0, r.im1) + origin_order;
      fold = 4;
    } else if (B) {
      known = axis_sum(real_zeros, r.re0, r.re1);
      fold = 2;
    } else if (L) {
      known = axis_sum(imag_zeros, r.im0, r.im1);
      fold = 2;
    }
    const int q = n - known;
    if (q < 0 || q % fold != 0) throw boundary_hit{};
    return q / fold;
  }

  /// Split fraction in (0.3, 0.7) keeping the cut away from known zeros on the axis it crosses.
  static double pick_cut(double lo, double hi, const std::vector<std::pair<double, int>>& zs, int attempt) {
    static constexpr double cand[] = {0.5, 0.45, 0.55, 0.4, 0.6, 0.35, 0.65, 0.47, 0.53, 0.42};
    double best = 0.5 * (lo + hi), best_gap = -1.0;
    for (int i = 0; i < 10; ++i) {
      const double x = lo + (hi - lo) * cand[(i + attempt) % 10];
      double gap = std::numeric_limits<double>::infinity();
      for (const auto& z : zs) gap = std::min(gap, std::abs(z.first - x));
      if (gap > best_gap + 1e-3 * (hi - lo)) {
        best_gap = gap;
        best = x;
      }
    }
    return best;
  }

  void run(const Rect& r, int n, int depth = 0) {
    if (n <= 0) return;
    const bool tiny = r.diameter() < 1e-3 || depth > 40;
    if (n == 1 || tiny) {
      const auto nr = newton(D, r.center(), tol);
      const double pad = 1e-9 * std::max(1.0, std::abs(r.center()));
      const bool inside = nr.converged && nr.z.real() > 0.0 && nr.z.imag() > 0.0 && nr.z.real() >= r.re0 - pad &&
                          nr.z.real() <= r.re1 + pad && nr.z.imag() >= r.im0 - pad && nr.z.imag() <= r.im1 + pad;
      if (inside) {
        out.push_back(make_record(D, nr.z, tiny ? n : 1, true));
        return;
      }
      if (tiny) {
        out.push_back(make_record(D, nr.converged ? nr.z : r.center(), n, false));
        return;
      }
    }
    for (int attempt = 0; attempt < 10; ++attempt) {
      const double xm = pick_cut(r.re0, r.re1, real_zeros, attempt);
      const double ym = pick_cut(r.im0, r.im1, imag_zeros, attempt);
      const Rect kids[4] = {{r.re0, xm, r.im0, ym}, {xm, r.re1, r.im0, ym}, {r.re0, xm, ym, r.im1}, {xm, r.re1, ym, r.im1}};
      int counts[4];
      try {
        int total = 0;
        for (int q = 0; q < 4; ++q) total += counts[q] = count(kids[q]);
        if (total != n) continue;
      } catch (const boundary_hit&) {
        continue;
      }
      for (int q = 0; q < 4; ++q) run(kids[q], counts[q], depth + 1);
      return;
    }
    throw error(error_kind::contour, "rectangle subdivision could not find consistent split lines");
  }
};

inline void sort_records(std::vector<EigenvalueRecord>& recs) {
  std::sort(recs.begin(), recs.end(), [](const EigenvalueRecord& a, const EigenvalueRecord& b) {
    const double la = std::abs(a.lambda), lb = std::abs(b.lambda);
    if (la != lb) return la < lb;
    return a.k.real() < b.k.real();
  });
}

}  // namespace detail

/// Transmission eigenvalues of an even entire D in the closed first quadrant.
/// `b` sets the default axis scan step pi/(8b).
inline std::vector<EigenvalueRecord> transmission_eigenvalues(const ComplexFn& D, double b, const SearchParams& sp) {
  const double h = sp.step > 0.0 ? sp.step : pi / (8.0 * b);
  std::vector<EigenvalueRecord> recs;

  double start = sp.origin_radius;
  int n0 = 0, origin_order = 0;
  try {
    n0 = count_zeros_circle(D, 0.0, sp.origin_radius);
  } catch (const error&) {
    n0 = 1;  // D vanishes on the probe circle itself; let the doubling decide
  }
  if (n0 > 0) {
    const auto m = multiplicity_detail(D, 0.0, sp.origin_radius);
    if (m.order % 2 != 0)
      throw error(error_kind::ambiguity, "odd zero order " + std::to_string(m.order) + " at the origin");
    auto r = detail::make_record(D, 0.0, m.order / 2, true);
    recs.push_back(r);
    origin_order = m.order;
    start = std::max(start, 2.0 * m.radius);
  }

  const double xtol = sp.tol;
  // Axes are scanned slightly past the requested reach so the search box can
  // place its outer edges away from axis zeros.
  const double k_scan = 1.05 * sp.k_max + h, b_scan = 1.05 * sp.beta_max + h;
  std::vector<std::pair<double, int>> real_zeros, imag_zeros;
  auto real_axis = [&](double s) { return D(s).real(); };
  for (const auto& root : detail::scan_real(real_axis, start, k_scan, h, xtol * std::max(1.0, k_scan))) {
    const cplx k{root.s, 0.0};
    const int order = detail::local_order(D, k, h);
    real_zeros.push_back({root.s, order});
    if (root.s <= sp.k_max) recs.push_back(detail::make_record(D, k, order, true));
  }
  auto imag_axis = [&](double s) { return D(cplx(0.0, s)).real(); };
  for (const auto& root : detail::scan_real(imag_axis, start, b_scan, h, xtol * std::max(1.0, b_scan))) {
    const cplx k{0.0, root.s};
    const int order = detail::local_order(D, k, h);
    imag_zeros.push_back({root.s, order});
    if (root.s <= sp.beta_max) recs.push_back(detail::make_record(D, k, order, true));
  }

  if (sp.complex_search) {
    Rect r = sp.rect.value_or(Rect{0.0, sp.k_max, 0.0, sp.beta_max});
    const Rect wanted = r;
    if (r.re0 < start) r.re0 = 0.0;
    if (r.im0 < start) r.im0 = 0.0;
    auto clear_of = [&](double x, const std::vector<std::pair<double, int>>& zs) {
      for (int i = 0; i < 20; ++i) {
        bool ok = true;
        for (const auto& z : zs)
          if (std::abs(z.first - x) < 0.05 * h) ok = false;
        if (ok) break;
        x += 0.1 * h;
      }
      return x;
    };
    r.re1 = clear_of(r.re1, real_zeros);
    r.im1 = clear_of(r.im1, imag_zeros);
    if (r.re1 > r.re0 && r.im1 > r.im0) {
      detail::QuadrantSearch qs{D, h, sp.tol, real_zeros, imag_zeros, origin_order, {}};
      int n = -1;
      for (int attempt = 0; attempt < 6 && n < 0; ++attempt) {
        try {
          n = qs.count(r);
        } catch (const detail::boundary_hit&) {
          r.re1 += 0.0137 * h;
          r.im1 += 0.0137 * h;
        }
      }
      if (n < 0) throw error(error_kind::contour, "zero on the search contour persists after 5 nudges");
      qs.run(r, n);
      for (auto& rec : qs.out) {
        if (rec.k.real() <= 0.0 || rec.k.imag() <= 0.0) continue;
        if (!wanted.contains(rec.k) && !(wanted.re0 < start && rec.k.real() < start) &&
            !(wanted.im0 < start && rec.k.imag() < start))
          continue;
        if (rec.k.real() > wanted.re1 || rec.k.imag() > wanted.im1) continue;
        bool dup = false;
        for (const auto& o : recs)
          if (std::abs(o.k - rec.k) < 1e-7 * std::max(1.0, std::abs(rec.k))) dup = true;
        if (!dup) recs.push_back(rec);
      }
    }
  }
  detail::sort_records(recs);
  return recs;
}

inline ComplexFn determinant_fn(const Potential& p, const BoundaryCondition& bc) {
  return [p, bc](cplx k) { return D_eval(p, bc, k); };
}

inline std::vector<EigenvalueRecord> transmission_eigenvalues(const Potential& p, const BoundaryCondition& bc,
                                                              const SearchParams& sp) {
  validate(p);
  return transmission_eigenvalues(determinant_fn(p, bc), p.b, sp);
}

/// D as a real function of lambda = k^2 (even in k, real for real lambda).
inline double determinant_in_lambda(const ComplexFn& D, double lambda) {
  const cplx k = lambda >= 0.0 ? cplx(std::sqrt(lambda), 0.0) : cplx(0.0, std::sqrt(-lambda));
  return D(k).real();
}

/// (gamma, d) from the origin record and difference quotients in lambda.
inline HadamardData hadamard_extract(const ComplexFn& D, const std::vector<EigenvalueRecord>& eigs, double b = 1.0) {
  HadamardData hd;
  double lam_min = std::numeric_limits<double>::infinity();
  for (const auto& e : eigs) {
    if (e.kind == eig_kind::zero) {
      hd.d = e.multiplicity;
    } else {
      hd.zeros.push_back({e.k, e.multiplicity});
      lam_min = std::min(lam_min, std::abs(e.lambda));
    }
  }
  hd.truncation = static_cast<int>(hd.zeros.size());
  if (hd.d == 0) {
    hd.gamma = D(0.0).real();
  } else {
    const int d = hd.d;
    const int half = d / 2 + 1;
    std::vector<double> stencil;
    for (int i = -half; i <= half; ++i) stencil.push_back(i);
    const auto w = fornberg_weights(0.0, stencil, d);
    double fact = 1.0;
    for (int i = 2; i <= d; ++i) fact *= i;
    double h0 = 0.5 / (b * b);
    if (std::isfinite(lam_min)) h0 = std::min(h0, 0.25 * lam_min / half);
    std::vector<double> est;
    for (int j = 0; j < 8; ++j) {
      const double hj = h0 / std::pow(2.0, j);
      double acc = 0.0;
      for (size_t i = 0; i < stencil.size(); ++i) acc += w[i] * determinant_in_lambda(D, stencil[i] * hj);
      est.push_back(acc / (std::pow(hj, d) * fact));
    }
    const auto diag = richardson_diagonal(est, 2.0, 2.0);
    size_t best = 1;
    double best_diff = std::numeric_limits<double>::infinity();
    for (size_t j = 1; j < diag.size(); ++j) {
      const double diff = std::abs(diag[j] - diag[j - 1]);
      if (diff < best_diff) {
        best_diff = diff;
        best = j;
      }
    }
    hd.gamma = diag[best];
    if (!(best_diff <= 1e-4 * std::abs(hd.gamma)))
      throw error(error_kind::accuracy, "gamma extraction unstable: successive extrapolants disagree",
                  best_diff / std::abs(hd.gamma));
  }
  if (!(std::isfinite(hd.gamma)) || hd.gamma == 0.0)
    throw error(error_kind::accuracy, "gamma extraction returned zero or non-finite value");
  return hd;
}

/// Truncated product gamma k^{2d} prod (1 - k^2/k_j^2); a complex k_j also
/// stands for its conjugate.
inline cplx hadamard_eval(const HadamardData& hd, cplx k) {
  const cplx k2 = k * k;
  cplx acc = hd.gamma * std::pow(k2, hd.d);
  for (const auto& z : hd.zeros) {
    cplx f = 1.0 - k2 / (z.k * z.k);
    if (z.k.real() != 0.0 && z.k.imag() != 0.0) f *= 1.0 - k2 / (std::conj(z.k) * std::conj(z.k));
    for (int m = 0; m < z.mult; ++m) acc *= f;
  }
  return acc;
}

/// Zeros of an arbitrary Jost function on the positive imaginary axis with
/// norming constants from the residue of S = -F(-k)/F(k).
inline std::vector<BoundState> bound_states_of(const ComplexFn& F, double beta_max, double b) {
  const double h = pi / (16.0 * b);
  auto g = [&](double beta) { return F(cplx(0.0, beta)).imag(); };
  const auto roots = detail::scan_real(g, 1e-8 / b, beta_max, h, 1e-14 * std::max(1.0, beta_max));
  std::vector<BoundState> out;
  for (size_t j = 0; j < roots.size(); ++j) {
    const double beta = roots[j].s;
    double gap = beta;
    if (j > 0) gap = std::min(gap, beta - roots[j - 1].s);
    if (j + 1 < roots.size()) gap = std::min(gap, roots[j + 1].s - beta);
    const double r = std::min(beta / 4.0, gap / 4.0);
    const int N = 64;
    cplx res = 0.0;
    for (int n = 0; n < N; ++n) {
      const cplx dz = r * std::exp(I * (2.0 * pi * (n + 0.5) / N));
      const cplx k = cplx(0.0, beta) + dz;
      res += -F(-k) / F(k) * dz;
    }
    res /= static_cast<double>(N);
    const cplx m2 = -I * res;
    if (!(m2.real() > 0.0) || std::abs(m2.imag()) > 1e-6 * std::abs(m2))
      throw error(error_kind::consistency, "residue gives a non-positive squared norming constant", m2.real());
    out.push_back({beta, std::sqrt(m2.real())});
  }
  return out;
}

/// 1 / sqrt(int_0^inf f(i beta, x)^2 dx) by Gauss-Legendre panels on [0, b].
inline double norming_constant_quadrature(const Potential& p, double beta) {
  static const Quadrature rule = gauss_legendre(20);
  const cplx k(0.0, beta);
  const cplx e = std::exp(I * k * p.b);
  const auto pcs = layout(p);
  State2 y{e, I * k * e};
  double acc = std::exp(-2.0 * beta * p.b) / (2.0 * beta);
  const IntegratorOptions opt{};
  for (auto it = pcs.rbegin(); it != pcs.rend(); ++it) {
    const auto& pc = *it;
    if (pc.type == Piece::kind::delta) {
      y[1] -= pc.v0 * y[0];
      continue;
    }
    const double len = pc.x1 - pc.x0;
    const double rate = std::sqrt(std::abs(beta * beta + std::max(pc.v0, pc.v1))) +
                        std::sqrt(std::abs(std::min(pc.v0, pc.v1)) + 1.0);
    const int panels = std::max(4, static_cast<int>(std::ceil(2.0 * len * rate)));
    const auto q = composite_gauss(pc.x0, pc.x1, panels, rule);
    for (size_t i = 0; i < q.nodes.size(); ++i) {
      State2 u;
      if (pc.type == Piece::kind::constant)
        u = detail::step_constant(k * k, pc.v0, q.nodes[i] - pc.x1, y);
      else
        u = detail::step_linear(pc, k * k, pc.x1, q.nodes[i], y, opt);
      acc += q.weights[i] * (u[0] * u[0]).real();
    }
    y = (pc.type == Piece::kind::constant) ? detail::step_constant(k * k, pc.v0, -len, y)
                                           : detail::step_linear(pc, k * k, pc.x1, pc.x0, y, opt);
  }
  return 1.0 / std::sqrt(acc);
}

/// Bound states of the potential; the residue value is cross-checked by the
/// direct normalization integral. Dirichlet mode uses the integral only.
inline std::vector<BoundState> bound_states(const Potential& p, const BoundaryCondition& bc, double beta_max) {
  if (!(beta_max > 0.0)) throw error(error_kind::validation, "beta_max must be positive");
  validate(p);
  std::vector<BoundState> out;
  if (bc.dirichlet) {
    const double h = pi / (16.0 * p.b);
    auto g = [&](double beta) { return jost_at_origin(p, bc, cplx(0.0, beta)).f0.real(); };
    for (const auto& r : detail::scan_real(g, 1e-8 / p.b, beta_max, h, 1e-14 * std::max(1.0, beta_max))) {
      const double mq = norming_constant_quadrature(p, r.s);
      out.push_back({r.s, mq, mq});
    }
    return out;
  }
  out = bound_states_of([&](cplx k) { return jost_function(p, bc, k); }, beta_max, p.b);
  for (auto& bs : out) bs.m_quadrature = norming_constant_quadrature(p, bs.beta);
  return out;
}

struct AuxSpectra {
  std::vector<double> omega_sq;  // zeros of phi(k, b) in lambda
  std::vector<double> eta_sq;    // zeros of phi'(k, b) in lambda
  bool complete = true;
};

/// First n eigenvalues of the problems with phi(b) = 0 and phi'(b) = 0.
inline AuxSpectra aux_spectra(const Potential& p, const BoundaryCondition& bc, int n) {
  if (n < 1) throw error(error_kind::validation, "n must be at least 1");
  validate(p);
  // Quadratic-form lower bound: every point value u(x0)^2 is at most
  // |u|^2/b + 2|u||u'|, which bounds the negative boundary and delta terms.
  double vmin = 0.0;
  for (const auto& s : p.segments) vmin = std::min(vmin, s.v);
  for (double v : p.samples.vs) vmin = std::min(vmin, v);
  double sigma = bc.dirichlet ? 0.0 : std::max(bc.cot_theta, 0.0);
  for (const auto& d : p.deltas) sigma += std::max(-d.c, 0.0);
  const double lower = vmin - sigma / p.b - sigma * sigma;
  const double beta_hi = std::sqrt(std::max(0.0, -lower)) + 1.0;

  auto kof = [](double s) { return s >= 0.0 ? cplx(s, 0.0) : cplx(0.0, -s); };
  auto lam = [](double s) { return s >= 0.0 ? s * s : -s * s; };
  auto phi_b = [&](double s) { return regular_solution(p, bc, kof(s), p.b).phi.real(); };
  auto dphi_b = [&](double s) { return regular_solution(p, bc, kof(s), p.b).phip.real(); };

  // Signed variable s with lambda = s|s| keeps the scan continuous through 0.
  const double h = pi / (16.0 * p.b);
  AuxSpectra out;
  const double s_cap = beta_hi + (n + 4) * pi / p.b + std::sqrt(std::max(0.0, -vmin)) + 10.0;
  auto collect = [&](const std::function<double(double)>& g, std::vector<double>& dst) {
    double lo = -beta_hi;
    double hi = std::min(s_cap, std::max(1.0, (n + 1) * pi / p.b));
    while (true) {
      const auto roots = detail::scan_real(g, lo, hi, h, 1e-14);
      dst.clear();
      for (const auto& r : roots) {
        dst.push_back(lam(r.s));
        if (r.even) dst.push_back(lam(r.s));
      }
      if (static_cast<int>(dst.size()) >= n || hi >= s_cap) break;
      hi = std::min(s_cap, 2.0 * hi);
    }
    if (static_cast<int>(dst.size()) > n) dst.resize(n);
    if (static_cast<int>(dst.size()) < n) out.complete = false;
  };
  collect(phi_b, out.omega_sq);
  collect(dphi_b, out.eta_sq);
  return out;
}

inline void write_eigenvalue_csv(std::ostream& os, const std::vector<EigenvalueRecord>& recs) {
  os << "lambda_re,lambda_im,k_re,k_im,multiplicity,kind,residual\n";
  char buf[256];
  for (const auto& r : recs) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d,%s,%.17g\n", r.lambda.real(), r.lambda.imag(),
                  r.k.real(), r.k.imag(), r.multiplicity, to_string(r.kind), r.residual);
    os << buf;
  }
}

inline void to_json(nlohmann::json& j, const HadamardData& hd) {
  j = {{"gamma", hd.gamma}, {"d", hd.d}, {"zeros", nlohmann::json::array()}, {"truncation", hd.truncation}};
  for (const auto& z : hd.zeros) j["zeros"].push_back({{"k_re", z.k.real()}, {"k_im", z.k.imag()}, {"mult", z.mult}});
}

inline void from_json(const nlohmann::json& j, HadamardData& hd) {
  try {
    hd = HadamardData{};
    hd.gamma = j.at("gamma").get<double>();
    hd.d = j.value("d", 0);
    if (j.contains("zeros"))
      for (const auto& z : j.at("zeros"))
        hd.zeros.push_back({cplx(z.at("k_re").get<double>(), z.value("k_im", 0.0)), z.value("mult", 1)});
    hd.truncation = static_cast<int>(hd.zeros.size());
  } catch (const nlohmann::json::exception& e) {
    throw error(error_kind::validation, std::string("malformed Hadamard data: ") + e.what());
  }
  if (!std::isfinite(hd.gamma) || hd.gamma == 0.0) throw error(error_kind::validation, "gamma must be finite and nonzero");
  if (hd.d < 0) throw error(error_kind::validation, "d must be nonnegative");
  for (const auto& z : hd.zeros) {
    if (z.mult < 1) throw error(error_kind::validation, "zero multiplicities must be positive");
    if (z.k == 0.0) throw error(error_kind::validation, "the origin is carried by d, not by the zero list");
    if (z.k.real() < 0.0 || z.k.imag() < 0.0) throw error(error_kind::validation, "zeros must lie in the first quadrant");
  }
}

}  // namespace teig
