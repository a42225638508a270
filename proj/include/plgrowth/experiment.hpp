#pragma once

// JSON-configured experiments: build the grid, solve, run the requested
// checks and write the artifacts of one run directory.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "benchmarks.hpp"
#include "bounds.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "infsolve.hpp"
#include "psolve.hpp"
#include "svg.hpp"
#include "verify.hpp"

namespace plgrowth {

inline constexpr const char* kVersion = "0.3.0";

enum ExitCode : int { kExitOk = 0, kExitChecksFailed = 1, kExitConfig = 2, kExitNoConvergence = 3 };

/// Raised for anything wrong with a config; maps to exit code 2.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class SolverKind { P, Inf, Continuation };

struct CheckSpec {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
};

struct ExperimentConfig {
  nlohmann::json raw;  // resolved config, echoed into the manifest
  DomainSpec domain = DomainSpec::half_plane({0, 1}, 0, {0, 0});
  Point x0;
  double R = 1.0;
  double spacing = 1.0 / 64;
  SolverKind solver = SolverKind::Inf;
  PSolveConfig psolve;
  InfConfig infsolve;
  std::optional<Benchmark> benchmark;
  std::filesystem::path boundary_csv;
  std::vector<CheckSpec> checks;
  std::filesystem::path output = "out";
};

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names = {"growth",    "oscillation", "caccioppoli", "lemma1",
                                                 "pointwise", "gehring_mostow", "monotone"};
  return names;
}

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path q(p);
  return q.is_absolute() || base.empty() ? q : base / q;
}

}  // namespace detail

/// Parses and validates a config. Relative paths resolve against base_dir.
/// A run manifest is accepted too; its "config" member is used.
inline ExperimentConfig parse_config(const nlohmann::json& input, const std::filesystem::path& base_dir = {}) {
  try {
    const nlohmann::json& j = input.contains("config") && input.contains("manifest_version") ? input.at("config")
                                                                                           : input;
    ExperimentConfig c;
    c.domain = domain_from_json(j.at("domain"));
    c.x0 = j.contains("x0") ? j.at("x0").get<Point>() : c.domain.anchor();
    c.R = j.value("R", 1.0);
    if (!(c.R > 0.0)) throw ConfigError("R must be positive");
    c.spacing = j.at("spacing").get<double>();
    if (!(c.spacing > 0.0)) throw ConfigError("spacing must be positive");
    if (c.spacing > c.R / 16 * (1 + 1e-12)) throw ConfigError("spacing must not exceed R/16");

    const auto solver = j.value("solver", std::string("inf"));
    if (solver == "p") c.solver = SolverKind::P;
    else if (solver == "inf") c.solver = SolverKind::Inf;
    else if (solver == "continuation") c.solver = SolverKind::Continuation;
    else throw ConfigError("unknown solver '" + solver + "' (expected p, inf or continuation)");
    c.psolve = psolve_config_from_json(j.value("psolve", nlohmann::json::object()));
    if (c.solver == SolverKind::Continuation && c.psolve.continuation.empty())
      throw ConfigError("solver 'continuation' needs psolve.continuation");
    c.infsolve = inf_config_from_json(j.value("infsolve", nlohmann::json::object()));

    const auto& b = j.at("boundary");
    if (b.is_string()) {
      c.benchmark = benchmark_from_string(b.get<std::string>());
    } else if (b.is_object() && b.contains("benchmark")) {
      c.benchmark = benchmark_from_string(b.at("benchmark").get<std::string>());
    } else if (b.is_object() && b.contains("csv")) {
      c.boundary_csv = detail::resolve(base_dir, b.at("csv").get<std::string>());
    } else {
      throw ConfigError("boundary must name a benchmark or give {\"csv\": path}");
    }
    if (c.benchmark) check_benchmark_compatible(c.domain, *c.benchmark);

    for (const auto& e : j.value("checks", nlohmann::json::array())) {
      CheckSpec s;
      if (e.is_string()) {
        s.name = e.get<std::string>();
      } else {
        s.name = e.at("name").get<std::string>();
        s.params = e;
        s.params.erase("name");
      }
      if (std::find(known_checks().begin(), known_checks().end(), s.name) == known_checks().end())
        throw ConfigError("unknown check '" + s.name + "'");
      c.checks.push_back(std::move(s));
    }
    c.output = detail::resolve(base_dir, j.value("output", std::string("out")));

    c.raw = j;
    c.raw["x0"] = c.x0;
    c.raw["R"] = c.R;
    c.raw["solver"] = solver;
    c.raw["psolve"] = to_json(c.psolve);
    c.raw["infsolve"] = to_json(c.infsolve);
    if (!c.boundary_csv.empty()) c.raw["boundary"] = {{"csv", c.boundary_csv.string()}};
    c.raw["output"] = c.output.string();
    return c;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  return parse_config(j, path.parent_path());
}

inline GridPtr make_grid(const ExperimentConfig& c) {
  try {
    return build_grid(c.domain, c.x0, c.R, c.spacing);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline ScalarField make_boundary(const ExperimentConfig& c, const GridPtr& grid) {
  if (c.benchmark) return benchmark_boundary(grid, c.domain, *c.benchmark);
  std::ifstream in(c.boundary_csv);
  if (!in) throw ConfigError("cannot open boundary CSV '" + c.boundary_csv.string() + "'");
  try {
    ScalarField f = read_field_csv(grid, in);
    for (std::size_t k = 0; k < grid->size(); ++k)
      if (grid->node_class(k) == NodeClass::Interior) f[k] = 0.0;
    return f;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

struct SolveOutcome {
  ScalarField field;
  bool converged = true;
  nlohmann::json stats;
};

inline SolveOutcome solve(const ExperimentConfig& c, const ScalarField& boundary) {
  SolveOutcome out{ScalarField(boundary.grid_ptr()), true, nlohmann::json::object()};
  switch (c.solver) {
    case SolverKind::P: {
      auto r = solve_p_harmonic(boundary, c.psolve);
      out.field = std::move(r.field);
      out.converged = r.stats.converged;
      out.stats = r.stats;
      break;
    }
    case SolverKind::Continuation: {
      auto r = p_continuation(boundary, c.psolve);
      out.field = std::move(r.field);
      out.converged = !r.failed_stage;
      out.stats = {{"schedule", r.schedule}, {"diffs", r.diffs}, {"stages", r.stages}};
      break;
    }
    case SolverKind::Inf: {
      // Start from the harmonic solve; the fixed point does not depend on it.
      PSolveConfig harmonic;
      harmonic.p = 2.0;
      const auto start = solve_p_harmonic(boundary, harmonic);
      auto r = solve_inf_harmonic(boundary, c.infsolve, &start.field);
      out.field = std::move(r.field);
      out.converged = r.stats.converged;
      out.stats = r.stats;
      out.stats["sweeps"] = r.stats.update_history.size();
      break;
    }
  }
  return out;
}

namespace detail {

inline double sup_near(const ScalarField& u, Point c, double r) {
  const Grid& g = u.grid();
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.active(k) && norm(g.position(k) - c) <= r * (1 + 1e-12)) m = std::max(m, u[k]);
  return m;
}

inline double field_osc(const ScalarField& u) {
  const Grid& g = u.grid();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.active(k)) {
      lo = std::min(lo, u[k]);
      hi = std::max(hi, u[k]);
    }
  return hi - lo;
}

inline std::vector<double> eps_factors(const nlohmann::json& p) {
  return p.value("eps_factors", std::vector<double>{1.0, 0.1, 0.01});
}

// Barrier with M4r = sup of u on B(c, 4r) and ε = factor·osc(u).
inline LogBarrier barrier_for(const ScalarField& u, Point c, double r, double factor) {
  const double osc = field_osc(u);
  return LogBarrier(sup_near(u, c, 4 * r), factor * (osc > 0.0 ? osc : 1.0));
}

// Centre and radius of a ball well inside D: halfway out along the inward
// direction, radius capped by the distance to ∂D.
inline std::pair<Point, double> interior_ball(const ExperimentConfig& c) {
  const Point centre = c.x0 + c.domain.inward_direction() * (0.5 * c.R);
  const double dist = c.domain.signed_distance(centre);
  return {centre, 0.9 * std::min(dist, c.R / 4)};
}

inline std::vector<double> default_growth_radii(double R) { return {R / 32, R / 16, R / 8, R / 4}; }

}  // namespace detail

struct CheckOutcome {
  std::vector<EstimateReport> reports;
  std::optional<GrowthTable> growth;
  std::optional<double> alpha_ref;
};

/// Runs one named check on a solved field.
inline CheckOutcome run_check(const ExperimentConfig& c, const CheckSpec& s, const ScalarField& u) {
  CheckOutcome out;
  const auto& P = s.params;
  const double r_default = P.value("r", c.R / 4);
  const Point x0 = c.x0;

  auto growth_params = [&](const GrowthTable& t) {
    BoundParams bp;
    bp.n = P.value("n", 2);
    bp.C = P.value("C", 1.0);
    if (P.contains("kappa0")) bp.kappa0 = P.at("kappa0").get<double>();
    else bp.kappa0 = kappa0(c.domain, x0, t.radii).value;
    return bp;
  };

  if (s.name == "growth" || s.name == "oscillation") {
    const auto radii = P.value("radii", detail::default_growth_radii(c.R));
    GrowthTable t = measure_growth(u, x0, radii);
    if (s.name == "growth") {
      EstimateReport r;
      r.name = "growth";
      r.rhs = t.alpha_fit;
      r.lhs = P.value("alpha_min", t.alpha_fit);
      r.slack = r.rhs - r.lhs;
      r.passed = t.positive && std::isfinite(t.alpha_fit) && r.slack >= 0.0;
      r.metadata = {{"alpha_fit", t.alpha_fit}, {"alpha_floor", t.alpha_floor}, {"r", radii.back()}};
      out.reports.push_back(r);
    } else {
      const BoundParams bp = growth_params(t);
      out.reports.push_back(check_oscillation_inequality(t, bp));
      out.alpha_ref = alpha(bp);
    }
    out.growth = std::move(t);
    return out;
  }

  if (s.name == "caccioppoli") {
    double p = c.solver == SolverKind::Inf ? 0.0 : c.psolve.p;
    p = P.value("p", p);
    if (!(p > 1.0)) throw ConfigError("check 'caccioppoli' needs a p solve or an explicit p");
    for (double f : detail::eps_factors(P)) {
      auto rep = check_caccioppoli(u, p, detail::barrier_for(u, x0, r_default, f), x0, r_default);
      rep.metadata["eps_factor"] = f;
      out.reports.push_back(std::move(rep));
    }
    return out;
  }

  if (s.name == "lemma1") {
    auto [centre, r] = detail::interior_ball(c);
    if (P.contains("center")) centre = P.at("center").get<Point>();
    r = P.value("r", r);
    for (double delta : P.value("deltas", std::vector<double>{0.25, 0.5}))
      for (double f : detail::eps_factors(P)) {
        const LogBarrier b(detail::sup_near(u, centre, 4 * r), f * std::max(detail::field_osc(u), 1e-300));
        auto rep = check_lemma1(u, b, centre, r, delta);
        rep.metadata["eps_factor"] = f;
        out.reports.push_back(std::move(rep));
      }
    return out;
  }

  if (s.name == "pointwise" || s.name == "gehring_mostow") {
    const ScalarField h = cutoff_h(u);
    for (double f : detail::eps_factors(P)) {
      const LogBarrier b = detail::barrier_for(h, x0, r_default, f);
      auto rep = s.name == "pointwise" ? check_pointwise(h, b, x0, r_default, P.value("collar", 1))
                                       : check_gehring_mostow(h, b, x0, r_default);
      rep.metadata["eps_factor"] = f;
      out.reports.push_back(std::move(rep));
    }
    return out;
  }

  if (s.name == "monotone") {
    const auto radii = P.value("radii", std::vector<double>{c.R / 8, c.R / 4});
    const ScalarField h = cutoff_h(u);
    for (double f : detail::eps_factors(P)) {
      const LogBarrier b(detail::sup_near(h, x0, c.R), f * std::max(detail::field_osc(h), 1e-300));
      auto rep = check_monotone_osc(u, b, x0, radii);
      rep.metadata["eps_factor"] = f;
      out.reports.push_back(std::move(rep));
    }
    return out;
  }
  throw ConfigError("unknown check '" + s.name + "'");
}

/// Threads for independent check units, from PLGROWTH_THREADS (default 1).
inline unsigned runner_threads() {
  const char* env = std::getenv("PLGROWTH_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw ConfigError("PLGROWTH_THREADS must be a positive integer");
  return static_cast<unsigned>(std::min<long>(v, 256));
}

/// Runs every requested check; results keep the config order whatever the
/// thread count.
inline std::vector<CheckOutcome> run_checks(const ExperimentConfig& c, const ScalarField& u, unsigned threads) {
  std::vector<CheckOutcome> out(c.checks.size());
  std::vector<std::exception_ptr> errors(c.checks.size());
  std::size_t next = 0;
  std::mutex m;
  auto worker = [&] {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard lock(m);
        if (next >= c.checks.size()) return;
        k = next++;
      }
      try {
        out[k] = run_check(c, c.checks[k], u);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(c.checks.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

struct RunSummary {
  int exit_code = kExitOk;
  bool converged = true;
  std::vector<EstimateReport> reports;
  std::optional<GrowthTable> growth;
};

namespace detail {

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
  f << s;
}

inline nlohmann::json manifest(const ExperimentConfig& c, const nlohmann::json& solve_stats, const char* command) {
  char eigen[32];
  std::snprintf(eigen, sizeof eigen, "%d.%d.%d", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION);
  return {{"manifest_version", 1},
          {"command", command},
          {"config", c.raw},
          {"versions", {{"plgrowth", kVersion}, {"eigen", eigen}, {"nlohmann_json", NLOHMANN_JSON_VERSION_MAJOR}}},
          {"seeds", {{"qmc", kQmcSeed}}},
          {"sweep_order", "row-major"},
          {"solve", solve_stats}};
}

}  // namespace detail

/// Checks on a given field and the resulting artifacts.
inline RunSummary verify_field(const ExperimentConfig& c, const ScalarField& u, const nlohmann::json& solve_stats,
                               bool converged, const char* command) {
  RunSummary s;
  s.converged = converged;
  const auto outcomes = run_checks(c, u, runner_threads());
  std::optional<double> alpha_ref;
  nlohmann::json reports_json = nlohmann::json::array();
  for (const auto& o : outcomes) {
    for (const auto& r : o.reports) {
      s.reports.push_back(r);
      reports_json.push_back(r);
    }
    if (o.growth && !s.growth) s.growth = o.growth;
    if (o.alpha_ref) alpha_ref = o.alpha_ref;
  }

  std::filesystem::create_directories(c.output);
  std::ostringstream field;
  write_field_csv(u, field);
  detail::write_text(c.output / "field.csv", field.str());
  std::ostringstream csv;
  write_reports_csv(s.reports, csv);
  detail::write_text(c.output / "reports.csv", csv.str());
  detail::write_text(c.output / "reports.json", reports_json.dump(2) + "\n");
  if (s.growth) {
    detail::write_text(c.output / "growth.json", nlohmann::json(*s.growth).dump(2) + "\n");
    if (!alpha_ref) {
      BoundParams bp;
      bp.kappa0 = kappa0(c.domain, c.x0, s.growth->radii).value;
      alpha_ref = alpha(bp);
    }
    std::ostringstream svg;
    write_growth_svg(*s.growth, alpha_ref, svg);
    detail::write_text(c.output / "growth.svg", svg.str());
  }
  detail::write_text(c.output / "manifest.json", detail::manifest(c, solve_stats, command).dump(2) + "\n");

  const bool all_passed = std::all_of(s.reports.begin(), s.reports.end(), [](const auto& r) { return r.passed; });
  s.exit_code = !converged ? kExitNoConvergence : (all_passed ? kExitOk : kExitChecksFailed);
  return s;
}

/// Full run: grid, boundary data, solve, checks, artifacts.
inline RunSummary run_experiment(const ExperimentConfig& c) {
  const GridPtr grid = make_grid(c);
  const ScalarField boundary = make_boundary(c, grid);
  SolveOutcome sol = solve(c, boundary);
  return verify_field(c, sol.field, sol.stats, sol.converged, "run");
}

/// Solve only: field.csv and manifest.json.
inline RunSummary solve_experiment(const ExperimentConfig& c) {
  const GridPtr grid = make_grid(c);
  const ScalarField boundary = make_boundary(c, grid);
  SolveOutcome sol = solve(c, boundary);
  std::filesystem::create_directories(c.output);
  std::ostringstream field;
  write_field_csv(sol.field, field);
  detail::write_text(c.output / "field.csv", field.str());
  detail::write_text(c.output / "manifest.json", detail::manifest(c, sol.stats, "solve").dump(2) + "\n");
  RunSummary s;
  s.converged = sol.converged;
  s.exit_code = sol.converged ? kExitOk : kExitNoConvergence;
  return s;
}

/// Checks on a field CSV written by an earlier solve.
inline RunSummary verify_experiment(const ExperimentConfig& c, const std::filesystem::path& field_csv) {
  const GridPtr grid = make_grid(c);
  std::ifstream in(field_csv);
  if (!in) throw ConfigError("cannot open field CSV '" + field_csv.string() + "'");
  ScalarField u(grid);
  try {
    u = read_field_csv(grid, in);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return verify_field(c, u, {{"field", field_csv.string()}}, true, "verify");
}

}  // namespace plgrowth
