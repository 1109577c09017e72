#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "teig/cli.hpp"

static void arg_error(const std::string& what) {
  std::cerr << nlohmann::json{{"error", "validation"}, {"stage", "arguments"}, {"message", what}}.dump() << "\n";
}

int main(int argc, char** argv) {
  using namespace teig;
  cli::RunConfig cfg;
  CLI::App app{"Transmission eigenvalues of the half-line Schroedinger equation: forward and inverse tools"};
  app.require_subcommand(1);

  std::optional<double> cot;
  bool dirichlet = false;
  std::string rect;
  auto common = [&](CLI::App* sc, bool with_bc) {
    if (with_bc) {
      auto* c = sc->add_option("--cot-theta", cot, "cot(theta) of the boundary condition psi'(0) + cot(theta) psi(0) = 0");
      auto* d = sc->add_flag("--dirichlet", dirichlet, "Dirichlet boundary condition psi(0) = 0");
      c->excludes(d);
      d->excludes(c);
    }
    sc->add_option("--k-max", cfg.k_max, "real-axis reach")->capture_default_str();
    sc->add_option("--beta-max", cfg.beta_max, "imaginary-axis reach")->capture_default_str();
    sc->add_option("--rect", rect, "search or grid box re0,re1,im0,im1");
    sc->add_option("--grid", cfg.grid, "grid size (forward: intervals, inverse: Marchenko intervals)");
    sc->add_option("--tol", cfg.tol, "root refinement tolerance")->capture_default_str();
    sc->add_option("--out", cfg.output_path, "output file (default stdout)");
    sc->add_option("--format", cfg.format, "csv or json")->capture_default_str();
  };

  auto* fwd = app.add_subcommand("forward", "D(k) on a real grid or over --rect");
  fwd->add_option("--potential", cfg.potential_path, "potential JSON")->required();
  common(fwd, true);

  auto* eigs = app.add_subcommand("eigs", "transmission eigenvalues and Hadamard data");
  eigs->add_option("--potential", cfg.potential_path, "potential JSON")->required();
  eigs->add_option("--hadamard", cfg.hadamard_path, "Hadamard data JSON output");
  common(eigs, true);

  auto* inv = app.add_subcommand("inverse", "reconstruct the potential from D and cot(theta)");
  inv->add_option("--input", cfg.input_path, "inverse input JSON")->required();
  inv->add_option("--diag", cfg.diag_path, "eigenvalue CSV of the datum");
  common(inv, true);

  auto* rt = app.add_subcommand("roundtrip", "forward D of a potential fed back through the inverse pipeline");
  rt->add_option("--potential", cfg.potential_path, "potential JSON")->required();
  common(rt, true);

  auto* ex = app.add_subcommand("example", "run a fixture and compare with the published values");
  ex->add_option("id", cfg.example_id, "6.1a 6.1b 6.1c 6.1d 6.2 6.3 6.4")
      ->required()
      ->check(CLI::IsMember({"6.1a", "6.1b", "6.1c", "6.1d", "6.2", "6.3", "6.4"}));
  common(ex, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    arg_error(e.what());
    return 2;
  }

  for (auto* sc : app.get_subcommands()) cfg.command = sc->get_name();
  if (cot) cfg.bc = BoundaryCondition::non_dirichlet(*cot);
  if (dirichlet) cfg.bc = BoundaryCondition::dirichlet_mode();
  if (!rect.empty()) {
    try {
      cfg.rect = cli::parse_rect(rect);
    } catch (const error& e) {
      arg_error(e.what());
      return 2;
    }
  }
  return cli::run(cfg, std::cout, std::cerr);
}
