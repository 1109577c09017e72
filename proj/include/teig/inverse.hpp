#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "teig/closed_forms.hpp"
#include "teig/error.hpp"
#include "teig/forward.hpp"
#include "teig/numerics.hpp"
#include "teig/potential.hpp"
#include "teig/spectra.hpp"

namespace teig {

/// The inverse datum: an even entire function real on the real axis, either
/// given in closed form or as a truncated Hadamard product.
struct DSource {
  enum class form_t { closed, hadamard };
  form_t form = form_t::closed;
  ComplexFn D;
  std::optional<HadamardData> hadamard;
  std::optional<double> W_hint;
  double b = 1.0;  // support radius; sets quadrature and Fourier scales

  cplx operator()(cplx k) const { return D(k); }

  static DSource closed(ComplexFn D, double b, std::optional<double> W_hint = std::nullopt) {
    DSource d;
    d.D = std::move(D);
    d.b = b;
    d.W_hint = W_hint;
    return d;
  }
  static DSource from_hadamard(HadamardData hd, double b, std::optional<double> W_hint = std::nullopt) {
    DSource d;
    d.form = form_t::hadamard;
    d.D = [hd](cplx k) { return hadamard_eval(hd, k); };
    d.hadamard = std::move(hd);
    d.b = b;
    d.W_hint = W_hint;
    return d;
  }
};

/// Probe-grid check that D is even and real on the real axis.
inline void check_dsource(const DSource& d) {
  if (!d.D) throw error(error_kind::validation, "D source has no evaluator");
  if (!(d.b > 0.0) || !std::isfinite(d.b)) throw error(error_kind::validation, "D source support radius must be positive");
  const double reach = 20.0 / d.b;
  for (int i = 0; i < 40; ++i) {
    const double t = reach * (i + 0.37) / 40.0;
    const cplx v = d(t);
    const double scale = std::max(1.0, std::abs(v));
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw error(error_kind::validation, "D is not finite at k = " + detail::num(t));
    if (std::abs(v.imag()) > 1e-8 * scale)
      throw error(error_kind::validation, "D is not real on the real axis at k = " + detail::num(t));
    if (std::abs(d(-t) - v) > 1e-8 * scale)
      throw error(error_kind::validation, "D is not even at k = " + detail::num(t));
  }
  for (int i = 0; i < 20; ++i) {
    const cplx k(reach * (i + 0.5) / 20.0, 0.3 * (i % 5) / d.b);
    const cplx v = d(k);
    if (std::abs(d(-k) - v) > 1e-8 * std::max(1.0, std::abs(v)))
      throw error(error_kind::validation, "D is not even at a complex probe point");
  }
}

struct LimitReport {
  double W = 0.0;
  std::vector<double> ladder;  // windowed averages of D at K0 2^j
  double spread = 0.0;         // last extrapolant difference, in units of W
  bool from_hint = false;
};

/// W = 2 lim D(k) on the real axis. Each rung averages D over [K_j, 1.5 K_j]
/// with a sin^2 window so the oscillating O(1/k) part drops out; the rungs
/// are then extrapolated in 1/K^2.
inline LimitReport limit_W_report(const DSource& d, double K0 = 0.0) {
  LimitReport rep;
  if (d.form == DSource::form_t::hadamard && d.W_hint) {
    rep.W = *d.W_hint;
    rep.from_hint = true;
    return rep;
  }
  if (K0 <= 0.0) K0 = 50.0 / d.b;
  static const Quadrature rule = gauss_legendre(16);
  const double panel = pi / (2.0 * d.b);
  for (int j = 0; j < 5; ++j) {
    const double a = K0 * std::ldexp(1.0, j), L = 0.5 * a;
    const int panels = std::max(8, static_cast<int>(std::ceil(L / panel)));
    const auto q = composite_gauss(a, a + L, panels, rule);
    std::vector<double> vals(q.nodes.size());
    parallel_for(q.nodes.size(), [&](size_t i) { vals[i] = d(q.nodes[i]).real(); });
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < vals.size(); ++i) {
      const double s = std::sin(pi * (q.nodes[i] - a) / L);
      num += q.weights[i] * s * s * vals[i];
      den += q.weights[i] * s * s;
    }
    rep.ladder.push_back(num / den);
  }
  const auto diag = richardson_diagonal(rep.ladder, 2.0, 2.0);
  rep.W = 2.0 * diag.back();
  const double scale = std::max(1.0, std::abs(rep.W));
  rep.spread = 2.0 * std::abs(diag.back() - diag[diag.size() - 2]) / scale;
  if (!std::isfinite(rep.W) || rep.spread > 1e-3)
    throw error(error_kind::accuracy, "large-k limit of D did not converge along the ladder", rep.spread);
  if (d.W_hint && std::abs(*d.W_hint - rep.W) > 1e-3 * scale)
    throw error(error_kind::datum_inconsistency,
                "supplied W " + detail::num(*d.W_hint) + " disagrees with the limit of D " + detail::num(rep.W));
  return rep;
}

inline double limit_W(const DSource& d) { return limit_W_report(d).W; }

/// M(k) = (1/(pi i)) int (D(t) - W/2) / (t - k - i0) dt with g = D - W/2 cached
/// at Gauss nodes on [0, R]; evenness folds the line integral onto [0, R].
class PlusFunction {
 public:
  PlusFunction(DSource d, double W, double k_reach = 0.0, double tol = 1e-8) : d_(std::move(d)), W_(W) {
    panel_ = pi / (2.0 * d_.b);
    k_reach = std::max(k_reach, 1.0 / d_.b);
    double R = std::max(400.0 / d_.b, 2.5 * k_reach);
    for (int attempt = 0; attempt < 4; ++attempt, R *= 2.0) {
      build(R);
      tail_ = tail_bound(k_reach);
      if (tail_ <= tol * std::max(1.0, k_reach)) return;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "quadrature tail %.3g exceeds tolerance; try R >= %.6g", tail_, R);
    throw error(error_kind::accuracy, buf, tail_);
  }

  double W() const { return W_; }
  double R() const { return R_; }
  double tail() const { return tail_; }
  const DSource& source() const { return d_; }

  cplx g(cplx k) const { return d_(k) - 0.5 * W_; }

  cplx M(cplx k) const {
    if (k.imag() < 0.0) return 2.0 * d_(k) - W_ - M(-k);
    if (k == 0.0) return g(0.0);
    return integral(k) / (pi * I);
  }

  /// Principal value on the real axis, the Cauchy integral itself above it.
  cplx Q(cplx k) const {
    if (k.imag() == 0.0) return M(k) - g(k);
    if (k.imag() > 0.0) return M(k);
    return -Q(-k);
  }

 private:
  void build(double R) {
    static const Quadrature rule = gauss_legendre(16);
    R_ = R;
    const int panels = static_cast<int>(std::ceil(R / panel_));
    q_ = composite_gauss(0.0, R, panels, rule);
    gv_.assign(q_.nodes.size(), 0.0);
    parallel_for(q_.nodes.size(), [&](size_t i) { gv_[i] = d_(q_.nodes[i]).real() - 0.5 * W_; });
  }

  double tail_bound(double k_reach) const {
    double acc = 0.0;
    for (size_t i = 0; i < q_.nodes.size(); ++i)
      if (q_.nodes[i] > 0.5 * R_) acc += q_.weights[i] * gv_[i] / (q_.nodes[i] * q_.nodes[i]);
    return std::abs(acc) / 3.0 * 2.0 * k_reach / pi;
  }

  cplx integral(cplx k) const {
    cplx acc = 0.0;
    if (k.imag() >= panel_) {
      for (size_t i = 0; i < q_.nodes.size(); ++i) {
        const double t = q_.nodes[i];
        acc += q_.weights[i] * gv_[i] / (t * t - k * k);
      }
      return 2.0 * k * acc;
    }
    const cplx gk = g(k);
    const double near = 1e-12 * std::max(1.0, std::abs(k));
    cplx dg;
    bool have_dg = false;
    for (size_t i = 0; i < q_.nodes.size(); ++i) {
      const double t = q_.nodes[i];
      const cplx dt = t - k;
      if (std::abs(dt) < near) {
        if (!have_dg) {
          const double h = 1e-5 * std::max(1.0, std::abs(k));
          dg = (g(k + h) - g(k - h)) / (2.0 * h);
          have_dg = true;
        }
        acc += q_.weights[i] * dg / (t + k);
        continue;
      }
      acc += q_.weights[i] * (gv_[i] - gk) / (dt * (t + k));
    }
    return 2.0 * k * acc + gk * (std::log((R_ - k) / (R_ + k)) + pi * I);
  }

  DSource d_;
  double W_ = 0.0;
  double panel_ = 1.0;
  double R_ = 0.0;
  double tail_ = 0.0;
  Quadrature q_;
  std::vector<double> gv_;
};

inline cplx M_eval(const PlusFunction& m, cplx k) { return m.M(k); }

/// Jost function rebuilt from M: F(0) and F(k) in terms of M(k) and M(-i cot).
class JostRecovery {
 public:
  JostRecovery(PlusFunction M, double cot_theta) : M_(std::move(M)), c_(cot_theta) {
    F0_ = I * (0.5 * M_.W() - c_) + I * M_.M(cplx(0.0, -c_));
  }

  double cot_theta() const { return c_; }
  double W() const { return M_.W(); }
  cplx F0() const { return F0_; }
  const PlusFunction& plus() const { return M_; }

  cplx operator()(cplx k) const {
    if (c_ == 0.0) return k + I * (0.5 * M_.W() + M_.M(k));
    const cplx pole(0.0, -c_);
    const double scale = std::max(1.0, std::abs(c_));
    if (std::abs(k - pole) < 1e-4 * scale) {
      const int N = 32;
      const double r = 0.05 * scale;
      cplx acc = 0.0;
      for (int n = 0; n < N; ++n) acc += raw(pole + r * std::exp(I * (2.0 * pi * (n + 0.5) / N)));
      return acc / static_cast<double>(N);
    }
    return raw(k);
  }

 private:
  cplx raw(cplx k) const {
    return I / (k + I * c_) * (k * (-I * k + 0.5 * M_.W() + M_.M(k)) + c_ * F0_);
  }

  PlusFunction M_;
  double c_ = 0.0;
  cplx F0_;
};

struct ScatteringData {
  double h = 0.0;
  double K = 0.0;
  bool offset = false;          // grid shifted by h/2 (F(0) = 0)
  std::vector<double> ks;       // symmetric uniform grid
  std::vector<cplx> S_values;
  std::vector<BoundState> bound_states;
  double W = 0.0;
  double cot_theta = 0.0;
  double unitarity = 0.0;  // max ||S| - 1|
};

/// S = -F(-k)/F(k) on a symmetric grid of spacing h and reach K, bound states
/// from the zeros of F on the positive imaginary axis.
inline ScatteringData scattering_from_F(const ComplexFn& F, double K_reach, double h, double b, double W,
                                        double cot_theta, double beta_max) {
  if (!(h > 0.0) || !(K_reach > h)) throw error(error_kind::validation, "scattering grid needs 0 < h < K");
  ScatteringData sd;
  sd.h = h;
  sd.W = W;
  sd.cot_theta = cot_theta;
  const cplx F0 = F(0.0);
  sd.offset = std::abs(F0) < 1e-8;
  const double shift = sd.offset ? 0.5 * h : 0.0;
  const int n = static_cast<int>(std::floor((K_reach - shift) / h));
  sd.K = shift + n * h;
  std::vector<double> pos(n + 1);
  for (int j = 0; j <= n; ++j) pos[j] = shift + j * h;
  std::vector<cplx> Fp(n + 1), Fm(n + 1);
  parallel_for(pos.size(), [&](size_t j) {
    Fp[j] = F(pos[j]);
    Fm[j] = (pos[j] == 0.0) ? Fp[j] : F(-pos[j]);
  });
  for (size_t j = 0; j < pos.size(); ++j) {
    for (const cplx v : {Fp[j], Fm[j]}) {
      if (std::abs(v) < 1e-10 * std::max(1.0, pos[j]))
        throw error(error_kind::datum_inconsistency,
                    "recovered Jost function vanishes on the real axis at k = " + detail::num(pos[j]), std::abs(v));
    }
  }
  const size_t first = (shift == 0.0) ? 1 : 0;
  for (size_t j = pos.size(); j-- > first;) {
    sd.ks.push_back(-pos[j]);
    sd.S_values.push_back(-Fp[j] / Fm[j]);
  }
  for (size_t j = 0; j < pos.size(); ++j) {
    sd.ks.push_back(pos[j]);
    sd.S_values.push_back(-Fm[j] / Fp[j]);
  }
  for (size_t j = 0; j < sd.ks.size(); ++j) {
    const double u = std::abs(std::abs(sd.S_values[j]) - 1.0);
    sd.unitarity = std::max(sd.unitarity, u);
    const cplx prod = sd.S_values[j] * sd.S_values[sd.ks.size() - 1 - j];
    if (u > 1e-6 || std::abs(prod - 1.0) > 1e-6)
      throw error(error_kind::consistency, "scattering matrix fails |S| = 1 at k = " + detail::num(sd.ks[j]), u);
  }
  sd.bound_states = bound_states_of(F, beta_max, b);
  return sd;
}

/// Omega(y) for y >= 0. The large-k part of S - 1 is taken out through the
/// rational model -i a k/(k^2+mu^2) - (a^2/2)/(k^2+mu^2), a = W - 2 cot, whose
/// transform is added in closed form.
class MarchenkoKernel {
 public:
  static constexpr double taper_width = 0.2;

  MarchenkoKernel(ScatteringData sd, double b) : sd_(std::move(sd)) {
    mu_ = 1.0 / b;
    alpha_ = sd_.W - 2.0 * sd_.cot_theta;
    rem_.resize(sd_.ks.size());
    for (size_t j = 0; j < sd_.ks.size(); ++j) {
      const double k = sd_.ks[j];
      const double den = k * k + mu_ * mu_;
      rem_[j] = sd_.S_values[j] - 1.0 + I * alpha_ * k / den + 0.5 * alpha_ * alpha_ / den;
    }
    const double Kr = sd_.K;
    taper_.resize(sd_.ks.size());
    for (size_t j = 0; j < sd_.ks.size(); ++j) {
      const double u = (std::abs(sd_.ks[j]) - (1.0 - taper_width) * Kr) / (taper_width * Kr);
      taper_[j] = u <= 0.0 ? 1.0 : 0.5 * (1.0 + std::cos(pi * std::min(u, 1.0)));
    }
    rem_tail_ = std::max(std::abs(rem_.front()), std::abs(rem_.back())) * Kr / (2.0 * pi);
  }

  const ScatteringData& scattering() const { return sd_; }
  /// Size of the neglected integral beyond the grid, assuming a 1/k^3 remainder.
  double truncation_estimate() const { return rem_tail_; }

  cplx complex_value(double y) const {
    if (y < 0.0) throw error(error_kind::validation, "Marchenko kernel is needed for y >= 0 only");
    cplx acc = 0.0;
    const size_t n = sd_.ks.size();
    for (size_t j = 0; j < n; ++j) {
      acc += taper_[j] * rem_[j] * std::polar(1.0, sd_.ks[j] * y);
    }
    acc *= sd_.h / (2.0 * pi);
    acc += (0.5 * alpha_ - alpha_ * alpha_ / (4.0 * mu_)) * std::exp(-mu_ * y);
    for (const auto& bs : sd_.bound_states) acc += bs.m * bs.m * std::exp(-bs.beta * y);
    return acc;
  }

  double operator()(double y) const { return complex_value(y).real(); }

 private:
  ScatteringData sd_;
  double mu_ = 1.0, alpha_ = 0.0, rem_tail_ = 0.0;
  std::vector<cplx> rem_;
  std::vector<double> taper_;
};

inline double marchenko_kernel(const MarchenkoKernel& om, double y) { return om(y); }

struct MarchenkoSolution {
  std::vector<double> x_grid;
  std::vector<double> y_grid;  // offsets: K_values(i, j) = K(x_i, x_i + y_j)
  Eigen::MatrixXd K_values;
  std::vector<double> V_recovered;
  double max_condition = 0.0;
  double tail = 0.0;  // max |K(x, x + y_reach)|
};

struct MarchenkoOptions {
  int grid = 2048;         // y intervals on [x, x + y_reach]
  int x_stride = 1;        // x spacing in units of the y step
  int richardson = 0;      // extra halvings combined by Richardson extrapolation
  double max_condition = 1e12;
};

namespace detail {

inline std::vector<double> diff4(const std::vector<double>& f, double h) {
  const size_t n = f.size();
  std::vector<double> d(n, 0.0);
  if (n < 5) {
    for (size_t i = 0; i < n; ++i) {
      const size_t a = i == 0 ? 0 : i - 1, b = std::min(n - 1, i + 1);
      d[i] = b > a ? (f[b] - f[a]) / ((b - a) * h) : 0.0;
    }
    return d;
  }
  for (size_t i = 2; i + 2 < n; ++i) d[i] = (-f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]) / (12.0 * h);
  d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
  d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
  const size_t m = n - 1;
  d[m] = (25.0 * f[m] - 48.0 * f[m - 1] + 36.0 * f[m - 2] - 16.0 * f[m - 3] + 3.0 * f[m - 4]) / (12.0 * h);
  d[m - 1] = (3.0 * f[m] + 10.0 * f[m - 1] - 18.0 * f[m - 2] + 6.0 * f[m - 3] - f[m - 4]) / (12.0 * h);
  return d;
}

/// Trapezoid Nystrom solve at x = i dy for i in xs_idx; returns K(x_i, x_i + j dy).
inline Eigen::MatrixXd nystrom(const std::function<double(double)>& omega, double dy, int n,
                               const std::vector<int>& xs_idx, double max_cond, double& cond_out) {
  const int top = xs_idx.empty() ? 0 : *std::max_element(xs_idx.begin(), xs_idx.end());
  std::vector<double> om(2 * top + 2 * n + 1);
  parallel_for(om.size(), [&](size_t m) { om[m] = omega(m * dy); });
  Eigen::MatrixXd K(xs_idx.size(), n + 1);
  std::vector<double> conds(xs_idx.size(), 0.0);
  parallel_for(xs_idx.size(), [&](size_t r) {
    const int i = xs_idx[r];
    Eigen::MatrixXd A(n + 1, n + 1);
    Eigen::VectorXd rhs(n + 1);
    for (int p = 0; p <= n; ++p) {
      rhs(p) = -om[2 * i + p];
      for (int q = 0; q <= n; ++q) A(p, q) = ((q == 0 || q == n) ? 0.5 : 1.0) * dy * om[2 * i + p + q];
      A(p, p) += 1.0;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    const double rc = lu.rcond();
    conds[r] = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    K.row(r) = lu.solve(rhs).transpose();
  });
  cond_out = *std::max_element(conds.begin(), conds.end());
  if (!(cond_out <= max_cond))
    throw error(error_kind::solve, "Marchenko system is ill-conditioned", cond_out);
  return K;
}

}  // namespace detail

/// Solves K(x,y) + Omega(x+y) + int_x^{x+Y} K(x,z) Omega(z+y) dz = 0 for x on
/// [0, x_max] and y on [x, x + y_reach]; V = -2 d/dx K(x,x).
inline MarchenkoSolution solve_marchenko(const std::function<double(double)>& omega, double x_max, double y_reach,
                                         const MarchenkoOptions& opt = {}) {
  if (!(y_reach > 0.0) || !(x_max >= 0.0) || opt.grid < 4 || opt.x_stride < 1 || opt.richardson < 0)
    throw error(error_kind::validation, "invalid Marchenko discretization");
  const double dy = y_reach / opt.grid;
  const double dx = dy * opt.x_stride;
  const int nx = static_cast<int>(std::ceil(x_max / dx - 1e-9)) + 1;
  MarchenkoSolution sol;
  std::vector<int> idx(nx);
  for (int i = 0; i < nx; ++i) {
    idx[i] = i * opt.x_stride;
    sol.x_grid.push_back(i * dx);
  }
  for (int j = 0; j <= opt.grid; ++j) sol.y_grid.push_back(j * dy);

  std::vector<Eigen::MatrixXd> levels;
  double cond = 0.0;
  for (int lev = 0; lev <= opt.richardson; ++lev) {
    const int scale = 1 << lev;
    std::vector<int> li(nx);
    for (int i = 0; i < nx; ++i) li[i] = idx[i] * scale;
    double c = 0.0;
    const Eigen::MatrixXd Kl = detail::nystrom(omega, dy / scale, opt.grid * scale, li, opt.max_condition, c);
    cond = std::max(cond, c);
    Eigen::MatrixXd coarse(nx, opt.grid + 1);
    for (int j = 0; j <= opt.grid; ++j) coarse.col(j) = Kl.col(j * scale);
    levels.push_back(std::move(coarse));
  }
  for (int j = 1; j < static_cast<int>(levels.size()); ++j)
    for (int i = static_cast<int>(levels.size()) - 1; i >= j; --i) {
      const double f = std::pow(4.0, j);
      levels[i] = (f * levels[i] - levels[i - 1]) / (f - 1.0);
    }
  sol.K_values = levels.back();
  sol.max_condition = cond;
  sol.tail = sol.K_values.col(opt.grid).cwiseAbs().maxCoeff();
  std::vector<double> diag(nx);
  for (int i = 0; i < nx; ++i) diag[i] = sol.K_values(i, 0);
  const auto d = detail::diff4(diag, dx);
  for (double v : d) sol.V_recovered.push_back(-2.0 * v);
  return sol;
}

struct ReconstructConfig {
  MarchenkoOptions marchenko{};
  double y_reach = 0.0;   // 0: max(40 / min beta, 20 b)
  double x_max = 0.0;     // 0: 1.5 b
  double K_reach = 0.0;   // 0: 200 / b
  double beta_max = 0.0;  // 0: chosen from W and cot
  double tol = 1e-8;
};

struct Reconstruction {
  double W = 0.0;
  bool W_from_hint = false;
  cplx F0;
  std::vector<BoundState> bound_states;
  double quadrature_R = 0.0;
  double unitarity = 0.0;
  double omega_imag = 0.0;  // max |Im Omega| on the solve lattice
  double y_reach = 0.0;
  MarchenkoSolution solution;
  std::vector<std::string> notes;
};

/// Full pipeline from the datum D and cot(theta) to the potential.
inline Reconstruction reconstruct(const DSource& d, const BoundaryCondition& bc, const ReconstructConfig& cfg = {}) {
  Reconstruction out;
  auto stage = [](const char* name, auto&& fn) -> decltype(fn()) {
    try {
      return fn();
    } catch (const error& e) {
      throw e.stage().empty() ? e.with_stage(name) : e;
    }
  };
  stage("validate", [&] {
    if (bc.dirichlet)
      throw error(error_kind::validation, "the inverse pipeline requires a non-Dirichlet boundary condition");
    if (!std::isfinite(bc.cot_theta)) throw error(error_kind::validation, "cot_theta must be finite");
    check_dsource(d);
    return 0;
  });
  const double b = d.b, c = bc.cot_theta;
  if (d.form == DSource::form_t::hadamard)
    out.notes.push_back("Hadamard-form datum: truncated products distort the large-k limit");
  const auto lim = stage("limit_W", [&] { return limit_W_report(d); });
  out.W = lim.W;
  out.W_from_hint = lim.from_hint;

  const double x_max = cfg.x_max > 0.0 ? cfg.x_max : 1.5 * b;
  const double K = cfg.K_reach > 0.0 ? cfg.K_reach : 200.0 / b;
  const double beta_max = cfg.beta_max > 0.0 ? cfg.beta_max : std::max(20.0 / b, 2.0 * (std::abs(out.W) + std::abs(c)));

  const auto M = stage("M_eval", [&] { return PlusFunction(d, out.W, std::max(K, beta_max), cfg.tol); });
  out.quadrature_R = M.R();
  const auto F = stage("recover_F", [&] { return JostRecovery(M, c); });
  out.F0 = F.F0();

  // the y reach depends on the bound states, which set the Fourier step; a
  // first pass on a coarse grid finds them
  const auto bs = stage("scattering", [&] { return bound_states_of(std::cref(F), beta_max, b); });
  double beta_min = std::numeric_limits<double>::infinity();
  for (const auto& s : bs) beta_min = std::min(beta_min, s.beta);
  out.y_reach = cfg.y_reach > 0.0 ? cfg.y_reach : std::max(bs.empty() ? 0.0 : 40.0 / beta_min, 20.0 * b);
  const double s_max = 2.0 * (x_max + out.y_reach);
  const double h = pi / s_max;

  const auto sd = stage("scattering", [&] { return scattering_from_F(std::cref(F), K, h, b, out.W, c, beta_max); });
  out.bound_states = sd.bound_states;
  out.unitarity = sd.unitarity;
  const MarchenkoKernel omega(sd, b);

  out.solution = stage("solve_marchenko", [&] {
    return solve_marchenko([&](double y) { return omega(y); }, x_max, out.y_reach, cfg.marchenko);
  });
  stage("marchenko_kernel", [&] {
    const int probes = 64;
    for (int i = 0; i <= probes; ++i)
      out.omega_imag = std::max(out.omega_imag, std::abs(omega.complex_value(s_max * i / probes).imag()));
    if (out.omega_imag > 1e-6)
      throw error(error_kind::consistency, "Marchenko kernel is not real", out.omega_imag);
    return 0;
  });
  return out;
}

// JSON front end for the inverse problem.

inline DSource dsource_from_json(const nlohmann::json& j, double cot_theta) {
  try {
    const auto& dj = j.at("D");
    const auto type = dj.at("type").get<std::string>();
    std::optional<double> hint;
    if (j.contains("W") && !j.at("W").is_null()) hint = j.at("W").get<double>();
    if (type == "hadamard") {
      HadamardData hd = dj.get<HadamardData>();
      return DSource::from_hadamard(hd, dj.value("b", 1.0), hint);
    }
    if (type != "builtin") throw error(error_kind::validation, "unknown D type '" + type + "'");
    const auto name = dj.at("name").get<std::string>();
    const nlohmann::json params = dj.value("params", nlohmann::json::object());
    const double b = params.value("b", 1.0);
    if (name == "zero") return DSource::closed([](cplx) { return cplx(0.0); }, b, hint);
    if (name == "square_well") {
      const double v = params.at("v").get<double>();
      return DSource::closed([=](cplx k) { return closed::square_well_D(v, b, cot_theta, k); }, b, hint);
    }
    if (name == "delta") {
      const double a = params.at("a").get<double>(), cs = params.at("c").get<double>();
      return DSource::closed([=](cplx k) { return closed::delta_D(a, cs, cot_theta, k); }, b, hint);
    }
    Potential p;
    if (name == "two_step")
      p = Potential::two_step(params.at("v").get<double>(), b);
    else if (name == "potential")
      p = params.at("potential").get<Potential>();
    else
      throw error(error_kind::validation, "unknown builtin D '" + name + "'");
    validate(p);
    const auto bc = BoundaryCondition::non_dirichlet(cot_theta);
    return DSource::closed([p, bc](cplx k) { return D_eval(p, bc, k); }, p.b, hint);
  } catch (const nlohmann::json::exception& e) {
    throw error(error_kind::validation, std::string("malformed inverse input: ") + e.what());
  }
}

inline BoundaryCondition inverse_bc_from_json(const nlohmann::json& j) {
  try {
    if (j.contains("boundary")) return j.at("boundary").get<BoundaryCondition>();
    return BoundaryCondition::non_dirichlet(j.at("cot_theta").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw error(error_kind::validation, std::string("malformed inverse input: ") + e.what());
  }
}

inline nlohmann::json to_json(const Reconstruction& r) {
  nlohmann::json j;
  j["W"] = r.W;
  j["F0"] = {r.F0.real(), r.F0.imag()};
  j["bound_states"] = nlohmann::json::array();
  for (const auto& bs : r.bound_states) j["bound_states"].push_back({{"beta", bs.beta}, {"m", bs.m}});
  j["V"] = {{"xs", r.solution.x_grid}, {"vs", r.solution.V_recovered}};
  j["diagnostics"] = {{"W_from_hint", r.W_from_hint},       {"quadrature_R", r.quadrature_R},
                      {"unitarity", r.unitarity},           {"omega_imag", r.omega_imag},
                      {"max_condition", r.solution.max_condition}, {"kernel_tail", r.solution.tail},
                      {"y_reach", r.y_reach},               {"notes", r.notes}};
  return j;
}

}  // namespace teig
