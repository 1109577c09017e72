// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "teig/closed_forms.hpp"
#include "teig/inverse.hpp"

using namespace teig;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string f(double x, const char* spec = "%.3e") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::vector<EigenvalueRecord> positive_eigs(const Potential& p, const BoundaryCondition& bc, double k_max,
                                            std::vector<EigenvalueRecord>* imaginary = nullptr) {
  SearchParams sp;
  sp.k_max = k_max;
  sp.beta_max = 20.0;
  sp.complex_search = false;
  std::vector<EigenvalueRecord> out;
  for (const auto& r : transmission_eigenvalues(p, bc, sp)) {
    if (r.kind == eig_kind::positive)
      for (int m = 0; m < r.multiplicity; ++m) out.push_back(r);
    if (r.kind == eig_kind::negative && imaginary) imaginary->push_back(r);
  }
  return out;
}

std::vector<EigenvalueRecord> found_61, found_63;

Outcome criterion1() {
  Outcome o;
  const auto p = Potential::square_well(16.0 * pi * pi, 1.0);
  const auto bc = BoundaryCondition::non_dirichlet(-2.0);
  std::vector<EigenvalueRecord> imag;
  found_61 = positive_eigs(p, bc, 30.0, &imag);
  const double published[] = {6.00966, 30.411, 78.4704, 180.238, 246.74, 717.049};
  o.require(found_61.size() == 6, std::to_string(found_61.size()) + " positive eigenvalues");
  double worst = 0.0;
  for (size_t j = 0; j < 6 && j < found_61.size(); ++j) worst = std::max(worst, rel(found_61[j].lambda.real(), published[j]));
  o.require(worst <= 1e-3, "max rel. error " + f(worst));
  o.require(imag.empty(), std::to_string(imag.size()) + " imaginary-axis zeros");
  o.note("max rel. error " + f(worst));
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto p = Potential::two_step(1.0, 1.0);
  const auto bc = BoundaryCondition::non_dirichlet(0.0);
  found_63 = positive_eigs(p, bc, 50.0);
  const double published[] = {0.558488, 3.2639, 6.68385, 9.4647, 12.8942};
  o.require(found_63.size() >= 15, std::to_string(found_63.size()) + " positive zeros");
  double worst = 0.0;
  for (size_t j = 0; j < 5 && j < found_63.size(); ++j) worst = std::max(worst, rel(found_63[j].k.real(), published[j]));
  o.require(worst <= 1e-3, "first five k rel. error " + f(worst));
  o.note("first five k max rel. error " + f(worst));
  if (found_63.size() >= 15) {
    std::string devs;
    bool decreasing = true;
    double prev = 0.0;
    for (size_t j = 10; j <= 14; ++j) {
      const double lam = found_63[j].lambda.real();
      const double d = std::abs(lam - j * j * pi * pi) / lam;
      devs += (j > 10 ? "," : "") + f(d, "%.2e");
      if (j > 10 && !(d < prev)) decreasing = false;
      prev = d;
    }
    o.require(decreasing, "|lambda_j - j^2 pi^2|/lambda_j for j=10..14 not decreasing [" + devs +
                              "]: zeros near 2m pi cluster and split, so the deviations alternate");
    if (decreasing) o.note("trend " + devs);
  }
  return o;
}

Outcome criterion3() {
  Outcome o;
  auto D = [](double v, double cot) {
    return determinant_fn(Potential::square_well(v, 1.0), BoundaryCondition::non_dirichlet(cot));
  };
  const auto Da = D(1.0, 0.0);
  const double D0 = Da(0.0).real();
  o.require(std::abs(D0 - std::sinh(1.0)) <= 1e-8, "D(0) - sinh 1 = " + f(D0 - std::sinh(1.0)));
  o.require(std::abs(D0) > 1e-3, "lambda = 0 looks like a zero for v = 1");
  const int mb = multiplicity_at(D(-pi * pi, 0.0), 0.0);
  o.require(mb == 1, "v = -pi^2 order " + std::to_string(mb));
  const ComplexFn Dc = D(5.86092, 1.88182);
  const int mc = multiplicity_at(Dc, 0.0);
  o.require(mc == 2, "cot 1.88182 order " + std::to_string(mc));
  o.note("D(0) - sinh 1 = " + f(D0 - std::sinh(1.0)) + ", orders " + std::to_string(mb) + " and " + std::to_string(mc));
  return o;
}

Outcome criterion4() {
  Outcome o;
  const double a = 0.5, c = 1.0;
  const auto p = Potential::delta(a, c, 1.0);
  double worst = 0.0;
  for (double cot : {-1.0, 0.3, 1.0 / a}) {
    const auto bc = BoundaryCondition::non_dirichlet(cot);
    for (int i = 0; i < 60; ++i) {
      const cplx k(0.07 + 0.4 * i, 0.05 * (i % 7));
      const cplx ref = closed::delta_D(a, c, cot, k);
      worst = std::max(worst, std::abs(D_eval(p, bc, k) - ref) / std::max(1.0, std::abs(ref)));
    }
  }
  o.require(worst <= 1e-10, "closed vs pipeline " + f(worst));
  for (double cot : {-1.0, 1.0 / a}) {
    const auto bc = BoundaryCondition::non_dirichlet(cot);
    const ComplexFn D = determinant_fn(p, bc);
    SearchParams sp;
    sp.k_max = 10.0;
    sp.beta_max = 10.0;
    sp.complex_search = false;
    const auto hd = hadamard_extract(D, transmission_eigenvalues(D, 1.0, sp), 1.0);
    const bool special = cot == 1.0 / a;
    const double g = special ? c * std::pow(a, 4) / 9.0 : c * std::pow(a * cot - 1.0, 2);
    o.require(std::abs(hd.gamma - g) <= 1e-8 * std::max(1.0, g), "gamma " + f(hd.gamma, "%.10g") + " vs " + f(g, "%.10g"));
    if (special) {
      const int m = multiplicity_at(D, 0.0);
      o.require(m == 2 && hd.d == 2, "origin order " + std::to_string(m) + ", d = " + std::to_string(hd.d));
    }
  }
  o.note("closed vs pipeline " + f(worst));
  return o;
}

Outcome criterion5() {
  Outcome o;
  double worst = 0.0;
  for (double cot : {0.5, 1.0, 2.0})
    for (int n = 1; n <= 3; ++n) {
      const auto p = Potential::square_well(-cot * cot - n * n * pi * pi, 1.0);
      const auto bc = BoundaryCondition::non_dirichlet(cot);
      const cplx k(0.0, cot);
      worst = std::max({worst, std::abs(jost_function(p, bc, k)), std::abs(D_eval(p, bc, k))});
    }
  o.require(worst < 1e-8, "max residual " + f(worst));
  o.note("max |F|, |D| at i cot = " + f(worst));
  return o;
}

Outcome criterion6() {
  Outcome o;
  double worst = 0.0;
  int n = 0;
  auto run = [&](const Potential& p, double cot, const std::vector<EigenvalueRecord>& eigs) {
    const auto bc = BoundaryCondition::non_dirichlet(cot);
    for (const auto& e : eigs) {
      const cplx k = e.k;
      if (std::abs(k) < 1e-8 || std::abs(std::abs(k) - std::abs(cot)) < 1e-8) continue;
      worst = std::max(worst, std::abs(scattering_matrix(p, bc, k) - free_scattering_matrix(bc, k)));
      ++n;
    }
  };
  run(Potential::square_well(16.0 * pi * pi, 1.0), -2.0, found_61);
  run(Potential::two_step(1.0, 1.0), 0.0, found_63);
  o.require(n > 0, "no eigenvalues to check");
  o.require(worst <= 1e-6, "max |S - S0| " + f(worst));
  o.note(std::to_string(n) + " eigenvalues, max |S - S0| " + f(worst));
  return o;
}

Outcome criterion7() {
  Outcome o;
  const std::vector<std::pair<Potential, double>> cases = {{Potential::square_well(2.0, 1.0), 1.0},
                                                           {Potential::two_step(3.0, 1.0), -0.5},
                                                           {Potential::square_well(-5.0, 1.5), 0.0}};
  double even = 0, conj = 0, real = 0, jost = 0, unit = 0, agree = 0;
  for (const auto& [p, cot] : cases) {
    const auto bc = BoundaryCondition::non_dirichlet(cot);
    for (int i = 0; i < 200; ++i) {
      const double t = 0.06 + 0.1 * i;
      const cplx k(t, 0.02 * (i % 25));
      const cplx Dk = D_eval(p, bc, k);
      const double s = std::max(1.0, std::abs(Dk));
      even = std::max(even, std::abs(D_eval(p, bc, -k) - Dk) / s);
      conj = std::max(conj, std::abs(D_eval(p, bc, -std::conj(k)) - std::conj(Dk)) / s);
      const cplx Fk = jost_function(p, bc, k);
      jost = std::max(jost, std::abs(jost_function(p, bc, -std::conj(k)) + std::conj(Fk)) / std::max(1.0, std::abs(Fk)));
      agree = std::max(agree, std::abs(determinant_from_regular(p, bc, k) - Dk) / s);
      const cplx Dt = D_eval(p, bc, t);
      real = std::max(real, std::abs(Dt.imag()) / std::max(1.0, std::abs(Dt)));
      unit = std::max(unit, std::abs(std::abs(scattering_matrix(p, bc, t)) - 1.0));
    }
  }
  const double worst = std::max({even, conj, real, jost, unit});
  o.require(worst <= 1e-10, "symmetry residual " + f(worst));
  o.require(agree <= 1e-8, "Wronskian vs Jost form " + f(agree));
  o.note("symmetries " + f(worst) + ", Wronskian vs Jost form " + f(agree));
  return o;
}

Outcome criterion8() {
  Outcome o;
  const std::vector<std::pair<Potential, double>> cases = {{Potential::square_well(1.0, 1.0), 0.0},
                                                           {Potential::two_step(5.0, 1.0), 1.0},
                                                           {Potential::square_well(-4.0, 1.0), -0.5}};
  double worst = 0.0;
  int n = 0;
  for (const auto& [p, cot] : cases) {
    const auto bc = BoundaryCondition::non_dirichlet(cot);
    for (int i = 0; i < 50; ++i) {
      const cplx k = std::polar(0.5 + 19.5 * i / 49.0, 0.1 * pi * (2.0 * i / 49.0 - 1.0));
      const auto ref = jost_at_origin(p, bc, k);
      const auto osc = jost_series_oracle(p, bc, k, 40, 40000);
      worst = std::max(worst, std::abs(osc.F - ref.F) / std::max(1.0, std::abs(ref.F)));
      ++n;
    }
  }
  o.require(worst <= 1e-6, "max rel. difference " + f(worst));
  o.note(std::to_string(n) + " points, max rel. difference " + f(worst));
  return o;
}

Outcome criterion9() {
  Outcome o;
  const std::vector<std::tuple<std::string, Potential, double>> cases = {
      {"free", Potential::zero(1.0), 0.0},
      {"square well", Potential::square_well(-20.0, 1.0), 0.7},
      {"two-step", Potential::two_step(1.0, 1.0), 0.0}};
  for (const auto& [name, p, cot] : cases) {
    const auto aux = aux_spectra(p, BoundaryCondition::non_dirichlet(cot), 10);
    bool ok = aux.complete && aux.eta_sq.size() >= 10 && aux.omega_sq.size() >= 10;
    for (size_t j = 0; ok && j < 10; ++j) {
      ok = aux.eta_sq[j] < aux.omega_sq[j];
      if (ok && j + 1 < 10) ok = aux.omega_sq[j] < aux.eta_sq[j + 1];
    }
    o.require(ok, name + " fails to interlace");
  }
  if (o.pass) o.note("free, square well, two-step");
  return o;
}

Outcome criterion10() {
  Outcome o;
  const double v = 2.0, b = 1.0, c = 1.0;
  const auto p = Potential::square_well(v, b);
  const auto bc = BoundaryCondition::non_dirichlet(c);
  const DSource d = DSource::closed([&](cplx k) { return D_eval(p, bc, k); }, b);
  ReconstructConfig cfg;
  cfg.marchenko.grid = 2048;
  cfg.y_reach = 40.0;
  const auto r = reconstruct(d, bc, cfg);
  o.require(std::abs(r.W - 2.0) <= 1e-3, "W " + f(r.W, "%.9f"));

  const PlusFunction M(d, r.W, 20.0);
  const JostRecovery F(M, c);
  double ferr = 0.0, refl = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double t = -20.0 + 0.1 * i;
    const cplx Ft = jost_function(p, bc, t);
    ferr = std::max(ferr, std::abs(F(t) - Ft) / std::abs(Ft));
    refl = std::max(refl, std::abs(M.M(t) + M.M(-t) - 2.0 * d(t) + r.W));
  }
  o.require(ferr <= 1e-5, "F rel. error " + f(ferr));
  o.require(refl <= 1e-8, "reflection identity " + f(refl));

  const auto& s = r.solution;
  const double dx = s.x_grid[1] - s.x_grid[0];
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < s.x_grid.size(); ++i) {
    if (std::abs(s.x_grid[i] - b) <= 2.0 * dx + 1e-12) continue;
    const double vt = evaluate(p, s.x_grid[i]);
    num += std::abs(s.V_recovered[i] - vt) * dx;
    den += std::abs(vt) * dx;
  }
  o.require(num / den <= 0.05, "L1 rel. error " + f(num / den));
  o.note("W " + f(r.W, "%.9f") + ", F " + f(ferr) + ", reflection " + f(refl) + ", L1 " + f(num / den));
  return o;
}

Outcome criterion11() {
  Outcome o;
  const auto bs = bound_states(Potential::square_well(-20.0, 1.0), BoundaryCondition::non_dirichlet(0.0), 20.0);
  o.require(bs.size() == 2, std::to_string(bs.size()) + " bound states");
  double worst = 0.0;
  for (const auto& s : bs) worst = std::max(worst, rel(s.m, s.m_quadrature));
  o.require(worst <= 1e-4, "residue vs quadrature " + f(worst));

  const double beta = bs.empty() ? 1.0 : bs[0].beta, m = bs.empty() ? 1.0 : bs[0].m;
  MarchenkoOptions opt;
  opt.grid = 512;
  opt.richardson = 2;
  const auto sol = solve_marchenko([&](double y) { return m * m * std::exp(-beta * y); }, 1.5, 40.0 / beta, opt);
  double kerr = 0.0;
  for (size_t i = 0; i < sol.x_grid.size(); ++i)
    for (size_t j = 0; j < sol.y_grid.size(); ++j) {
      const double x = sol.x_grid[i], y = x + sol.y_grid[j];
      const double K = -m * m * std::exp(-beta * (x + y)) / (1.0 + m * m / (2.0 * beta) * std::exp(-2.0 * beta * x));
      kerr = std::max(kerr, std::abs(sol.K_values(i, j) - K));
    }
  o.require(kerr <= 1e-8, "separable kernel " + f(kerr));
  o.note("norming " + f(worst) + ", separable kernel " + f(kerr));
  return o;
}

Outcome criterion12() {
  Outcome o;
  const auto z = Potential::zero(1.0);
  double dz = 0.0;
  for (const auto& bc : {BoundaryCondition::non_dirichlet(0.0), BoundaryCondition::non_dirichlet(1.3),
                         BoundaryCondition::dirichlet_mode()})
    for (int i = 0; i < 50; ++i) {
      // D is a difference of terms of size 1 + |k|^2
      const cplx k(0.4 * i, 0.1 * (i % 4));
      dz = std::max(dz, std::abs(D_eval(z, bc, k)) / (1.0 + std::norm(k)));
    }
  o.require(dz <= 1e-15, "free D " + f(dz));

  ReconstructConfig cfg;
  cfg.marchenko.grid = 512;
  const auto r = reconstruct(DSource::closed([](cplx) { return cplx(0.0); }, 1.0), BoundaryCondition::non_dirichlet(0.0), cfg);
  double vz = 0.0;
  for (double v : r.solution.V_recovered) vz = std::max(vz, std::abs(v));
  o.require(vz <= 1e-10, "zero datum V " + f(vz));

  double dd = 0.0;
  const auto bc = BoundaryCondition::dirichlet_mode();
  for (const auto& p : {Potential::square_well(2.0, 1.0), Potential::two_step(3.0, 1.0)})
    for (int i = 0; i < 100; ++i) {
      const cplx k(0.06 + 0.2 * i, 0.03 * (i % 5));
      const cplx ref = determinant_from_regular(p, bc, k);
      dd = std::max(dd, std::abs(D_eval(p, bc, k) - ref) / std::max(1.0, std::abs(ref)));
    }
  o.require(dd <= 1e-8, "Dirichlet D vs Wronskian " + f(dd));
  o.note("free D " + f(dz) + ", zero datum V " + f(vz) + ", Dirichlet " + f(dd));
  return o;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    std::function<Outcome()> run;
    double budget;  // seconds, 0 for none
  };
  const std::vector<Entry> entries = {{1, criterion1, 10.0},  {2, criterion2, 10.0},   {3, criterion3, 5.0},
                                      {4, criterion4, 0.0},   {5, criterion5, 0.0},    {6, criterion6, 0.0},
                                      {7, criterion7, 0.0},   {8, criterion8, 0.0},    {9, criterion9, 0.0},
                                      {10, criterion10, 300.0}, {11, criterion11, 0.0}, {12, criterion12, 0.0}};
  int failed = 0;
  for (const auto& e : entries) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = e.run();
    } catch (const error& ex) {
      o.pass = false;
      o.detail = std::string(to_string(ex.kind())) + " error: " + ex.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (e.budget > 0.0 && secs > e.budget) o.require(false, "runtime " + f(secs, "%.1f") + " s over " + f(e.budget, "%.0f") + " s");
    std::printf("criterion %2d: %s (%.2f s) %s\n", e.id, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(entries.size()) - failed, entries.size());
  return failed ? 1 : 0;
}
