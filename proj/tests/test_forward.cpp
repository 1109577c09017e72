#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "teig/closed_forms.hpp"
#include "teig/forward.hpp"

using namespace teig;

namespace {

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

std::vector<cplx> probe_points(std::mt19937_64& rng, int n, double reach, double imag) {
  std::uniform_real_distribution<double> re(-reach, reach), im(-imag, imag);
  std::vector<cplx> ks;
  for (int i = 0; i < n; ++i) ks.emplace_back(re(rng), im(rng));
  return ks;
}

}  // namespace

TEST_CASE("transfer matrices reproduce the closed-form square well") {
  std::mt19937_64 rng(7);
  for (const auto& [v, b, cot] : {std::tuple{2.0, 1.0, 1.0}, std::tuple{-20.0, 1.0, 0.0}, std::tuple{16 * pi * pi, 1.0, -2.0},
                                  std::tuple{3.0, 2.0, 0.5}}) {
    const auto p = Potential::square_well(v, b);
    const auto bc = BoundaryCondition::non_dirichlet(cot);
    for (const cplx k : probe_points(rng, 40, 20.0, 3.0)) {
      CHECK(rel(jost_function(p, bc, k), closed::square_well_F(v, b, cot, k)) < 1e-10);
      CHECK(rel(D_eval(p, bc, k), closed::square_well_D(v, b, cot, k)) < 1e-10);
    }
  }
}

TEST_CASE("square-well D at high-precision reference points") {
  // reference values from 30-digit evaluation of the closed form, v = 2, b = 1, cot = 1
  const auto p = Potential::square_well(2.0, 1.0);
  const auto bc = BoundaryCondition::non_dirichlet(1.0);
  CHECK(std::abs(D_eval(p, bc, 0.7) - 0.69939812668748981) < 1e-12);
  CHECK(std::abs(D_eval(p, bc, 3.3) - 1.0879973843489745) < 1e-12);
  CHECK(std::abs(D_eval(p, bc, cplx(2.0, 0.5)) - cplx(0.51734429117687638, 0.1416399925531933)) < 1e-12);
}

TEST_CASE("two-step and delta fixtures match their closed forms") {
  const auto ts = Potential::two_step(1.0, 1.0);
  const auto bc0 = BoundaryCondition::non_dirichlet(0.0);
  for (double t = 0.1; t < 30.0; t += 0.73) {
    CHECK(rel(D_eval(ts, bc0, t), closed::two_step_D(t)) < 1e-10);
    CHECK(rel(D_eval(ts, bc0, cplx(t, 0.4)), closed::two_step_D(cplx(t, 0.4))) < 1e-10);
  }
  const double a = 0.5, c = 2.0;
  const auto dp = Potential::delta(a, c, 1.0);
  for (double cot : {2.0, -1.0, 0.3}) {
    const auto bc = BoundaryCondition::non_dirichlet(cot);
    for (double t = 0.2; t < 25.0; t += 0.9) {
      const cplx k(t, 0.3);
      CHECK(rel(jost_at_origin(dp, bc, k).f0, closed::delta_f0(a, c, k)) < 1e-12);
      CHECK(rel(D_eval(dp, bc, k), closed::delta_D(a, c, cot, k)) < 1e-10);
    }
    const auto s = closed::delta_small_k(a, c, cot);
    CHECK(std::abs(D_eval(dp, bc, 0.0) - s[0]) < 1e-12);
  }
}

TEST_CASE("D at the origin through the Wronskian and through F and its derivative") {
  const auto p = Potential::square_well(1.0, 1.0);
  const auto bc = BoundaryCondition::non_dirichlet(0.0);
  CHECK(std::abs(D_eval(p, bc, 0.0) - std::sinh(1.0)) < 1e-10);
  CHECK(std::abs(determinant_at_origin_from_jost(p, bc) - std::sinh(1.0)) < 1e-8);
  const auto bc2 = BoundaryCondition::non_dirichlet(1.3);
  const auto p2 = Potential::two_step(2.0, 1.5);
  CHECK(std::abs(determinant_at_origin_from_jost(p2, bc2) - D_eval(p2, bc2, 0.0)) < 1e-7);
  const auto dir = BoundaryCondition::dirichlet_mode();
  CHECK(std::abs(determinant_at_origin_from_jost(p2, dir) - D_eval(p2, dir, 0.0)) < 1e-7);
}

TEST_CASE("small-k switch is continuous") {
  const auto p = Potential::two_step(1.7, 1.0);
  const auto bc = BoundaryCondition::non_dirichlet(0.4);
  const double s = small_k_switch;
  CHECK(std::abs(D_eval(p, bc, s * (1 - 1e-9)) - D_eval(p, bc, s * (1 + 1e-9))) < 1e-9);
}

TEST_CASE("Neumann-series oracle agrees with the propagators") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> xs, vs;
    for (int i = 0; i <= 6; ++i) {
      xs.push_back(i / 6.0);
      vs.push_back(3.0 * u(rng));
    }
    Potential p = Potential::sampled(xs, vs, 1.0);
    if (trial == 2) p = Potential{1.0, {{0.0, 0.3, 2.0}, {0.6, 1.0, -3.0}}, {}, {}};
    const auto bc = BoundaryCondition::non_dirichlet(u(rng));
    REQUIRE(l1_norm(p) <= 5.0);
    for (int i = 0; i < 6; ++i) {
      const cplx k(20.0 * u(rng), 0.5 * std::abs(u(rng)));
      const auto o = jost_series_oracle(p, bc, k, 40, 40'000);
      const auto t = jost_at_origin(p, bc, k);
      CHECK(rel(o.F, t.F) < 1e-6);
      CHECK(rel(o.f0, t.f0) < 1e-6);
    }
  }
  CHECK_THROWS_AS(jost_series_oracle(Potential::delta(0.5, 1.0), BoundaryCondition::non_dirichlet(0), 1.0, 3), error);
}

TEST_CASE("symmetries of D, F and S") {
  std::mt19937_64 rng(3);
  const std::vector<std::pair<Potential, double>> cases = {
      {Potential::square_well(2.0, 1.0), 1.0},
      {Potential::two_step(1.0, 1.0), 0.0},
      {Potential::sampled({0.0, 0.4, 1.2}, {1.0, -2.0, 0.5}, 1.2), -0.7}};
  for (const auto& [p, cot] : cases) {
    const auto bc = BoundaryCondition::non_dirichlet(cot);
    for (const cplx k : probe_points(rng, 25, 15.0, 2.0)) {
      const cplx D = D_eval(p, bc, k);
      CHECK(rel(D_eval(p, bc, -k), D) < 1e-9);
      CHECK(rel(D_eval(p, bc, std::conj(k)), std::conj(D)) < 1e-9);
      CHECK(rel(jost_function(p, bc, -std::conj(k)), -std::conj(jost_function(p, bc, k))) < 1e-10);
      CHECK(rel(determinant_factorized(p, bc, k), D) < 1e-8);
      const double t = k.real();
      CHECK(std::abs(D_eval(p, bc, t).imag()) < 1e-10);
      CHECK(std::abs(std::abs(scattering_matrix(p, bc, t)) - 1.0) < 1e-10);
    }
  }
}

TEST_CASE("the determinant exponential type is 2b on the imaginary axis") {
  const auto p = Potential::square_well(2.0, 1.5);
  const auto bc = BoundaryCondition::non_dirichlet(1.0);
  const double g = std::log(std::abs(D_eval(p, bc, cplx(0, 60.0))) / std::abs(D_eval(p, bc, cplx(0, 40.0)))) / 20.0;
  CHECK(g == Catch::Approx(2.0 * p.b).epsilon(0.02));
}

TEST_CASE("Dirichlet D is the Wronskian with sin(kx)/k") {
  const auto p = Potential::two_step(2.0, 1.0);
  const auto dir = BoundaryCondition::dirichlet_mode();
  for (double t = 0.3; t < 20.0; t += 0.61) {
    const cplx k(t, 0.25);
    const auto r = regular_solution(p, dir, k, p.b);
    const cplx w = sin_over(k, p.b) * r.phip - std::cos(k * p.b) * r.phi;
    CHECK(rel(D_eval(p, dir, k), w) < 1e-8);
  }
  CHECK(free_scattering_matrix(dir, 2.0) == cplx(1.0));
}

TEST_CASE("the zero potential has D identically zero") {
  const auto z = Potential::zero(1.0);
  for (const auto& bc : {BoundaryCondition::non_dirichlet(0.7), BoundaryCondition::dirichlet_mode()})
    for (double t = 0.0; t < 20.0; t += 0.5) CHECK(std::abs(D_eval(z, bc, cplx(t, 0.3))) < 1e-14);
  CHECK(std::abs(jost_function(z, BoundaryCondition::non_dirichlet(0.7), 3.0) - cplx(3.0, -0.7)) < 1e-15);
}

TEST_CASE("Jost function and D vanish together at i cot(theta)") {
  for (int n = 1; n <= 3; ++n) {
    const double cot = 0.8, v = -cot * cot - n * n * pi * pi;
    const auto p = Potential::square_well(v, 1.0);
    const auto bc = BoundaryCondition::non_dirichlet(cot);
    CHECK(std::abs(jost_function(p, bc, cplx(0, cot))) < 1e-10);
    CHECK(std::abs(D_eval(p, bc, cplx(0, cot))) < 1e-10);
  }
}

TEST_CASE("large-k asymptotics flatten along a ladder") {
  const auto p = Potential::square_well(2.0, 1.0);
  const auto bc = BoundaryCondition::non_dirichlet(1.0);
  const auto rs = asymptotics_check(p, bc, {cplx(0, 5), cplx(0, 10), cplx(0, 20), cplx(0, 40)});
  for (size_t i = 1; i < rs.size(); ++i) CHECK(rs[i].jost_function < rs[i - 1].jost_function);
  // D grows off the real axis, so its ladder runs along it
  const auto rr = asymptotics_check(p, bc, {cplx(10.3), cplx(41.2), cplx(164.8), cplx(659.2)});
  for (size_t i = 1; i < rr.size(); ++i) CHECK(rr[i].determinant < rr[i - 1].determinant);
}

TEST_CASE("input errors") {
  const auto p = Potential::square_well(1.0, 1.0);
  const auto bc = BoundaryCondition::non_dirichlet(0.0);
  try {
    D_eval(p, bc, cplx(0, 800.0));
    FAIL("expected a range error");
  } catch (const error& e) {
    CHECK(e.kind() == error_kind::range);
  }
  CHECK_THROWS_AS(D_eval(p, bc, cplx(std::nan(""), 0.0)), error);
  CHECK_THROWS_AS(regular_solution(p, bc, 1.0, 2.0), error);
  // S has a pole at a bound state
  const auto well = Potential::square_well(-20.0, 1.0);
  try {
    scattering_matrix(well, bc, cplx(0.0, 2.471531310250313));
    FAIL("expected a pole error");
  } catch (const error& e) {
    CHECK(e.kind() == error_kind::pole);
  }
}

TEST_CASE("D-grid CSV layout") {
  std::ostringstream os;
  write_d_grid_csv(os, {cplx(0.5, 0.0)}, {cplx(0.25, -1.0)});
  CHECK(os.str() == "k_re,k_im,D_re,D_im\n0.5,0,0.25,-1\n");
}
