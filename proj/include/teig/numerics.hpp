#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numbers>
#include <thread>
#include <vector>

#include "teig/error.hpp"

namespace teig {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

/// sin(z L)/z, finite at z = 0 (returns L there). Series below |zL| < 1e-4.
inline cplx sin_over(cplx z, double L) {
  const cplx t = z * L;
  if (std::abs(t) < 1e-4) {
    const cplx t2 = t * t;
    return L * (1.0 - t2 / 6.0 + t2 * t2 / 120.0);
  }
  return std::sin(t) / z;
}

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule on [-1, 1].
inline Quadrature gauss_legendre(int n) {
  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int j = 2; j <= n; ++j) {
      const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    q.nodes[i] = -x;
    q.nodes[n - 1 - i] = x;
    q.weights[i] = w;
    q.weights[n - 1 - i] = w;
  }
  return q;
}

/// Composite Gauss-Legendre nodes on [a, b] split into `panels` equal panels.
inline Quadrature composite_gauss(double a, double b, int panels, const Quadrature& rule) {
  Quadrature q;
  const double h = (b - a) / panels;
  q.nodes.reserve(static_cast<size_t>(panels) * rule.nodes.size());
  q.weights.reserve(q.nodes.capacity());
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    for (size_t i = 0; i < rule.nodes.size(); ++i) {
      q.nodes.push_back(lo + 0.5 * h * (rule.nodes[i] + 1.0));
      q.weights.push_back(0.5 * h * rule.weights[i]);
    }
  }
  return q;
}

/// Brent's method on a bracket with f(a), f(b) of opposite sign (or one zero).
template <class F>
double brent_root(F&& f, double a, double b, double fa, double fb, double xtol = 0.0, int max_iter = 200) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0) == (fb > 0)) throw error(error_kind::accuracy, "brent_root: bracket has no sign change");
  double c = a, fc = fa, d = b - a, e = d;
  for (int it = 0; it < max_iter; ++it) {
    if ((fb > 0) == (fc > 0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * xtol;
    const double m = 0.5 * (c - b);
    if (std::abs(m) <= tol || fb == 0.0) return b;
    if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0) q = -q; else p = -p;
      if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol) ? d : (m > 0 ? tol : -tol);
    fb = f(b);
  }
  return b;
}

/// Finite-difference weights (Fornberg) for the m-th derivative at x0 on stencil xs.
inline std::vector<double> fornberg_weights(double x0, const std::vector<double>& xs, int m) {
  const int n = static_cast<int>(xs.size());
  std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0, c4 = xs[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = xs[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][m];
  return w;
}

/// Richardson/Neville table for values A(h_j) with h_{j+1} = h_j / ratio and an
/// error expansion in powers h^p, h^{2p}, ... Returns the diagonal entries.
inline std::vector<double> richardson_diagonal(const std::vector<double>& values, double ratio, double p) {
  std::vector<std::vector<double>> t(values.size());
  std::vector<double> diag;
  for (size_t i = 0; i < values.size(); ++i) {
    t[i].push_back(values[i]);
    for (size_t j = 1; j <= i; ++j) {
      const double f = std::pow(ratio, p * j);
      t[i].push_back((f * t[i][j - 1] - t[i - 1][j - 1]) / (f - 1.0));
    }
    diag.push_back(t[i].back());
  }
  return diag;
}

/// Thread cap from TEIG_THREADS, else hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("TEIG_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Runs fn(i) for i in [0, n). Results must be written to disjoint slots; the
/// first exception thrown by any worker is rethrown.
template <class Fn>
void parallel_for(size_t n, Fn&& fn) {
  const unsigned workers = std::min<size_t>(thread_count(), n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct IntegratorOptions {
  double atol = 1e-10;
  double rtol = 1e-10;
  int max_steps = 2'000'000;
};

using State2 = std::array<cplx, 2>;

/// Dormand-Prince 5(4) on a complex 2-vector, from x0 to x1 (either direction).
template <class Rhs>
State2 integrate_dp45(Rhs&& rhs, double x0, double x1, State2 y, const IntegratorOptions& opt) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  const double span = x1 - x0;
  if (span == 0.0) return y;
  const double dir = span > 0 ? 1.0 : -1.0;
  double h = dir * std::min(std::abs(span), std::abs(span) / 16.0 + 1e-3);
  double x = x0;
  auto add = [](const State2& a, double s, const State2& k) { return State2{a[0] + s * k[0], a[1] + s * k[1]}; };
  State2 k1 = rhs(x, y);
  double last_err = 0.0;
  for (int step = 0; step < opt.max_steps; ++step) {
    if (dir * (x + h - x1) > 0) h = x1 - x;
    State2 k2 = rhs(x + c2 * h, add(y, h * a21, k1));
    State2 t3{y[0] + h * (a31 * k1[0] + a32 * k2[0]), y[1] + h * (a31 * k1[1] + a32 * k2[1])};
    State2 k3 = rhs(x + c3 * h, t3);
    State2 t4{y[0] + h * (a41 * k1[0] + a42 * k2[0] + a43 * k3[0]), y[1] + h * (a41 * k1[1] + a42 * k2[1] + a43 * k3[1])};
    State2 k4 = rhs(x + c4 * h, t4);
    State2 t5{y[0] + h * (a51 * k1[0] + a52 * k2[0] + a53 * k3[0] + a54 * k4[0]),
              y[1] + h * (a51 * k1[1] + a52 * k2[1] + a53 * k3[1] + a54 * k4[1])};
    State2 k5 = rhs(x + c5 * h, t5);
    State2 t6{y[0] + h * (a61 * k1[0] + a62 * k2[0] + a63 * k3[0] + a64 * k4[0] + a65 * k5[0]),
              y[1] + h * (a61 * k1[1] + a62 * k2[1] + a63 * k3[1] + a64 * k4[1] + a65 * k5[1])};
    State2 k6 = rhs(x + h, t6);
    State2 yn{y[0] + h * (b1 * k1[0] + b3 * k3[0] + b4 * k4[0] + b5 * k5[0] + b6 * k6[0]),
              y[1] + h * (b1 * k1[1] + b3 * k3[1] + b4 * k4[1] + b5 * k5[1] + b6 * k6[1])};
    State2 k7 = rhs(x + h, yn);
    double err = 0.0;
    for (int i = 0; i < 2; ++i) {
      const cplx ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(yn[i]));
      err = std::max(err, std::abs(ei) / sc);
    }
    last_err = err;
    if (err <= 1.0) {
      x += h;
      y = yn;
      k1 = k7;
      if (dir * (x - x1) >= 0) return y;
      const double fac = err == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err, -0.2));
      h *= fac;
    } else {
      h *= std::max(0.1, 0.9 * std::pow(err, -0.2));
    }
    if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(x))) {
      throw error(error_kind::accuracy, "ODE integrator step size underflow", last_err * opt.rtol);
    }
  }
  throw error(error_kind::accuracy, "ODE integrator exceeded max_steps", last_err * opt.rtol);
}

}  // namespace teig
