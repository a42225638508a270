// plgrowth command line: run / solve / verify experiments, evaluate bounds.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include <plgrowth/plgrowth.hpp>

namespace {

int print_summary(const plgrowth::RunSummary& s) {
  for (const auto& r : s.reports)
    std::fprintf(stderr, "%-15s lhs=%-12.6g rhs=%-12.6g %s\n", r.name.c_str(), r.lhs, r.rhs,
                 r.passed ? "passed" : "FAILED");
  if (s.growth && std::isfinite(s.growth->alpha_fit))
    std::fprintf(stderr, "alpha_fit=%.6f alpha_floor=%.6f\n", s.growth->alpha_fit, s.growth->alpha_floor);
  if (!s.converged) std::fprintf(stderr, "solver did not converge\n");
  return s.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace plgrowth;
  CLI::App app{"Phragmen-Lindelof growth experiments for p- and infinity-harmonic functions"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output;
  std::string field_path;

  auto* run = app.add_subcommand("run", "solve, check and write all artifacts");
  run->add_option("config", config_path, "experiment config (JSON) or run manifest")->required();
  run->add_option("-o,--output", output, "override the output directory");

  auto* solve_cmd = app.add_subcommand("solve", "solve only, write field.csv and manifest.json");
  solve_cmd->add_option("config", config_path, "experiment config (JSON)")->required();
  solve_cmd->add_option("-o,--output", output, "override the output directory");

  auto* verify = app.add_subcommand("verify", "run the configured checks on a field CSV");
  verify->add_option("config", config_path, "experiment config (JSON)")->required();
  verify->add_option("--field", field_path, "field CSV from an earlier solve")->required();
  verify->add_option("-o,--output", output, "override the output directory");

  int n = 2;
  double k0 = 0.0;
  std::optional<double> C;
  std::optional<double> theta_emp;
  auto* bounds = app.add_subcommand("bounds", "theta and alpha for (n, kappa0, C), or C from an observed theta");
  bounds->add_option("--n", n, "dimension")->default_val(2);
  bounds->add_option("--kappa0", k0, "density ratio in (0, 1]")->required();
  auto* c_opt = bounds->add_option("--C", C, "constant C");
  auto* t_opt = bounds->add_option("--theta-emp", theta_emp, "observed ratio M(r)/M(4r)");
  c_opt->excludes(t_opt);
  t_opt->excludes(c_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*bounds) {
      if (!C && !theta_emp) throw ConfigError("bounds: give either --C or --theta-emp");
      nlohmann::json j;
      if (C) {
        const BoundParams p{n, k0, *C};
        j = {{"theta", theta(p)}, {"alpha", alpha(p)}};
      } else {
        j = {{"C", calibrate_C(*theta_emp, n, k0)}};
      }
      std::cout << j.dump() << "\n";
      return kExitOk;
    }

    ExperimentConfig cfg = load_config(config_path);
    if (!output.empty()) {
      cfg.output = output;
      cfg.raw["output"] = output;
    }
    if (*run) return print_summary(run_experiment(cfg));
    if (*solve_cmd) return print_summary(solve_experiment(cfg));
    return print_summary(verify_experiment(cfg, field_path));
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}
