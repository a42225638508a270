#pragma once

// Dirichlet problem for ∇·(|∇u|^{p-2}∇u) = 0 by minimizing the discrete
// p-Dirichlet energy
//
//   E(u) = Σ_cells (h²/4) Σ_{corner triangles T} (|∇u_T|² + reg²)^{p/2},
//
// where ∇u_T is the gradient of the linear interpolant on the right triangle
// spanned by a cell corner and its two cell edges. For p = 2 the
// Euler–Lagrange equations are the 5-point Laplacian. The minimizer is found
// by damped Newton iterations with row-wise log-scaling, so that weights
// s^{p/2-1} spanning hundreds of orders of magnitude stay representable.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <json.hpp>

#include "grid.hpp"

namespace plgrowth {

struct PSolveConfig {
  double p = 2.0;
  std::optional<double> reg;  // defaults to spacing²
  double tol = 1e-10;
  int max_iter = 200;
  std::vector<double> continuation;  // increasing p schedule ending at p

  double regularization(const Grid& g) const { return reg ? *reg : g.spacing() * g.spacing(); }

  std::vector<double> schedule() const { return continuation.empty() ? std::vector<double>{p} : continuation; }

  void validate() const {
    if (!(p >= 2.0) || !std::isfinite(p)) throw std::invalid_argument("PSolveConfig: p must be >= 2");
    if (reg && !(*reg >= 0.0)) throw std::invalid_argument("PSolveConfig: reg must be >= 0");
    if (!(tol > 0.0)) throw std::invalid_argument("PSolveConfig: tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("PSolveConfig: max_iter must be positive");
    for (std::size_t k = 0; k < continuation.size(); ++k) {
      if (!(continuation[k] >= 2.0)) throw std::invalid_argument("PSolveConfig: schedule entries must be >= 2");
      if (k > 0 && !(continuation[k] > continuation[k - 1]))
        throw std::invalid_argument("PSolveConfig: continuation must be strictly increasing");
    }
    if (!continuation.empty() && continuation.back() != p)
      throw std::invalid_argument("PSolveConfig: continuation must end at p");
  }
};

struct SolveStats {
  int iterations = 0;
  double final_residual = std::numeric_limits<double>::infinity();
  double energy = 0.0;
  double log_energy = -std::numeric_limits<double>::infinity();
  bool converged = false;
  bool diverged = false;
  std::vector<double> log_energy_history;  // one entry per accepted step, initial first
  std::vector<double> update_history;      // sup-norm update per iteration
};

struct PSolveResult {
  ScalarField field;
  SolveStats stats;
};

namespace detail {

inline double log_sum_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline void require_boundary_data(const ScalarField& data, double& lo, double& hi) {
  const Grid& g = data.grid();
  lo = std::numeric_limits<double>::infinity();
  hi = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!is_boundary(g.node_class(k))) continue;
    if (!std::isfinite(data[k])) throw std::invalid_argument("boundary data must be finite at every boundary node");
    lo = std::min(lo, data[k]);
    hi = std::max(hi, data[k]);
  }
  if (!(lo <= hi)) throw std::invalid_argument("grid has no boundary nodes");
}

// Discrete p-Dirichlet energy on the corner-triangle split.
class PEnergy {
 public:
  PEnergy(const Grid& g, double p, double reg) : g_(g), p_(p), reg2_(reg * reg), h2_(g.spacing() * g.spacing()) {
    unknown_.assign(g.size(), -1);
    for (std::size_t k = 0; k < g.size(); ++k)
      if (g.node_class(k) == NodeClass::Interior) {
        unknown_[k] = static_cast<int>(nodes_.size());
        nodes_.push_back(k);
      }
    for (int j = 0; j + 1 < g.ny(); ++j)
      for (int i = 0; i + 1 < g.nx(); ++i) {
        const std::size_t n00 = g.index(i, j), n10 = g.index(i + 1, j);
        const std::size_t n01 = g.index(i, j + 1), n11 = g.index(i + 1, j + 1);
        add(n00, n10, n01);
        add(n10, n00, n11);
        add(n01, n11, n00);
        add(n11, n01, n10);
      }
    node_tris_.resize(nodes_.size());
    for (std::size_t t = 0; t < tris_.size(); ++t)
      for (std::size_t v : tris_[t].v)
        if (unknown_[v] >= 0) node_tris_[static_cast<std::size_t>(unknown_[v])].push_back(t);
  }

  std::size_t unknowns() const { return nodes_.size(); }
  const std::vector<std::size_t>& nodes() const { return nodes_; }
  const std::vector<int>& unknown_index() const { return unknown_; }

  // s_T = |∇u_T|² + reg² and ds_T = ∂(h² s_T)/2∂u over (corner, x-end, y-end).
  void triangle(const std::vector<double>& u, std::size_t t, double& s, std::array<double, 3>& ds) const {
    const auto& v = tris_[t].v;
    const double e1 = u[v[1]] - u[v[0]];
    const double e2 = u[v[2]] - u[v[0]];
    s = (e1 * e1 + e2 * e2) / h2_ + reg2_;
    ds = {-(e1 + e2), e1, e2};
  }

  double log_energy(const std::vector<double>& u) const {
    std::vector<double> terms(tris_.size());
    std::array<double, 3> ds{};
    double s = 0.0;
    const double log_area = std::log(h2_ / 4.0);
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      triangle(u, t, s, ds);
      terms[t] = log_area + 0.5 * p_ * std::log(s);
    }
    return log_sum_exp(terms);
  }

  // Row scale m_k = max over incident triangles of log s^{p/2-1}.
  std::vector<double> row_scales(const std::vector<double>& u) const {
    std::vector<double> m(nodes_.size(), -std::numeric_limits<double>::infinity());
    std::array<double, 3> ds{};
    double s = 0.0;
    for (std::size_t r = 0; r < nodes_.size(); ++r)
      for (std::size_t t : node_tris_[r]) {
        triangle(u, t, s, ds);
        m[r] = std::max(m[r], (0.5 * p_ - 1.0) * std::log(s));
      }
    return m;
  }

  // Scaled gradient F̃_k = e^{-m_k} Σ_T w_T ds_{T,k} and relative residual
  // |Σ w ds| / Σ w |ds| per unknown.
  void residual(const std::vector<double>& u, const std::vector<double>& m, std::vector<double>& F,
                double& rel_max) const {
    F.assign(nodes_.size(), 0.0);
    rel_max = 0.0;
    std::array<double, 3> ds{};
    double s = 0.0;
    for (std::size_t r = 0; r < nodes_.size(); ++r) {
      double num = 0.0;
      double den = 0.0;
      const std::size_t node = nodes_[r];
      for (std::size_t t : node_tris_[r]) {
        triangle(u, t, s, ds);
        const double w = std::exp((0.5 * p_ - 1.0) * std::log(s) - m[r]);
        const auto& v = tris_[t].v;
        for (int a = 0; a < 3; ++a)
          if (v[a] == node) {
            num += w * ds[a];
            den += w * std::abs(ds[a]);
          }
      }
      F[r] = num;
      if (den > 0.0) rel_max = std::max(rel_max, std::abs(num) / den);
    }
  }

  // Row-scaled Jacobian of the Euler–Lagrange system (triplets, fixed pattern).
  void jacobian(const std::vector<double>& u, const std::vector<double>& m,
                std::vector<Eigen::Triplet<double>>& trip) const {
    static constexpr double B[3][3] = {{2, -1, -1}, {-1, 1, 0}, {-1, 0, 1}};
    trip.clear();
    std::array<double, 3> ds{};
    double s = 0.0;
    for (std::size_t r = 0; r < nodes_.size(); ++r) {
      const std::size_t node = nodes_[r];
      for (std::size_t t : node_tris_[r]) {
        triangle(u, t, s, ds);
        const double w = std::exp((0.5 * p_ - 1.0) * std::log(s) - m[r]);
        const double c = (p_ - 2.0) / (h2_ * s);
        const auto& v = tris_[t].v;
        for (int a = 0; a < 3; ++a) {
          if (v[a] != node) continue;
          for (int b = 0; b < 3; ++b) {
            const int col = unknown_[v[b]];
            if (col < 0) continue;
            trip.emplace_back(static_cast<int>(r), col, w * (c * ds[a] * ds[b] + B[a][b]));
          }
        }
      }
    }
  }

 private:
  struct Tri {
    std::array<std::size_t, 3> v;  // corner, x-end, y-end
  };

  void add(std::size_t c, std::size_t xe, std::size_t ye) {
    if (!g_.active(c) || !g_.active(xe) || !g_.active(ye)) return;
    tris_.push_back({{c, xe, ye}});
  }

  const Grid& g_;
  double p_;
  double reg2_;
  double h2_;
  std::vector<int> unknown_;
  std::vector<std::size_t> nodes_;
  std::vector<Tri> tris_;
  std::vector<std::vector<std::size_t>> node_tris_;
};

}  // namespace detail

/// Minimizes the discrete p-Dirichlet energy with the boundary values of
/// `boundary` (lateral and outer-arc nodes). Interior values of `initial`, if
/// given, seed the iteration. The result respects the boundary data range.
inline PSolveResult solve_p_harmonic(const ScalarField& boundary, double p, const PSolveConfig& cfg,
                                     const ScalarField* initial = nullptr) {
  cfg.validate();
  if (!(p >= 2.0)) throw std::invalid_argument("solve_p_harmonic: p must be >= 2");
  const Grid& g = boundary.grid();
  double lo = 0.0;
  double hi = 0.0;
  detail::require_boundary_data(boundary, lo, hi);

  std::vector<double> u = boundary.values();
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.node_class(k) == NodeClass::Exterior) u[k] = 0.0;
    if (g.node_class(k) != NodeClass::Interior) continue;
    const double v = initial ? (*initial)[k] : 0.5 * (lo + hi);
    u[k] = std::clamp(std::isfinite(v) ? v : 0.5 * (lo + hi), lo, hi);
  }

  const detail::PEnergy energy(g, p, cfg.regularization(g));
  SolveStats stats;
  const std::size_t n = energy.unknowns();
  const auto& nodes = energy.nodes();

  std::vector<double> F;
  std::vector<double> m = energy.row_scales(u);
  double rel = 0.0;
  energy.residual(u, m, F, rel);
  double logE = energy.log_energy(u);
  stats.log_energy_history.push_back(logE);

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  Eigen::SparseMatrix<double> J(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<Eigen::Triplet<double>> trip;
  bool pattern_ready = false;

  std::vector<double> trial(u.size());
  std::vector<double> Ft;
  int it = 0;
  for (; it < cfg.max_iter && n > 0; ++it) {
    if (rel <= cfg.tol) break;
    energy.jacobian(u, m, trip);
    J.setFromTriplets(trip.begin(), trip.end());
    if (!pattern_ready) {
      lu.analyzePattern(J);
      pattern_ready = true;
    }
    lu.factorize(J);
    if (lu.info() != Eigen::Success) {
      stats.diverged = true;
      break;
    }
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) rhs[static_cast<Eigen::Index>(r)] = -F[r];
    const Eigen::VectorXd step = lu.solve(rhs);
    if (!step.allFinite()) {
      stats.diverged = true;
      break;
    }

    double merit = 0.0;
    for (double f : F) merit += f * f;
    bool accepted = false;
    double update = 0.0;
    for (double t = 1.0; t >= 1e-12; t *= 0.5) {
      trial = u;
      update = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const std::size_t k = nodes[r];
        trial[k] = std::clamp(u[k] + t * step[static_cast<Eigen::Index>(r)], lo, hi);
        update = std::max(update, std::abs(trial[k] - u[k]));
      }
      double rel_t = 0.0;
      energy.residual(trial, m, Ft, rel_t);
      double merit_t = 0.0;
      for (double f : Ft) merit_t += f * f;
      const double logE_t = energy.log_energy(trial);
      const bool energy_ok = logE_t <= logE + 1e-13 * std::max(1.0, std::abs(logE));
      if (std::isfinite(merit_t) && merit_t <= (1.0 - 1e-4 * t) * merit && energy_ok) {
        u.swap(trial);
        logE = logE_t;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    stats.log_energy_history.push_back(logE);
    stats.update_history.push_back(update);
    m = energy.row_scales(u);
    energy.residual(u, m, F, rel);
    if (update == 0.0) break;
  }

  stats.iterations = it;
  stats.final_residual = rel;
  stats.log_energy = logE;
  stats.energy = std::exp(logE);
  if (!std::isfinite(logE)) stats.diverged = true;
  stats.converged = !stats.diverged && rel <= cfg.tol;
  return {ScalarField(boundary.grid_ptr(), std::move(u)), stats};
}

inline PSolveResult solve_p_harmonic(const ScalarField& boundary, const PSolveConfig& cfg,
                                     const ScalarField* initial = nullptr) {
  return solve_p_harmonic(boundary, cfg.p, cfg, initial);
}

struct ContinuationResult {
  ScalarField field;
  std::vector<double> diffs;  // ‖u_{p_{k+1}} - u_{p_k}‖∞
  std::vector<double> schedule;
  std::vector<SolveStats> stages;
  std::vector<ScalarField> stage_fields;
  std::optional<std::size_t> failed_stage;
};

/// Warm-started solves along cfg.schedule(); stops at the first stage that
/// fails to converge and reports its index.
inline ContinuationResult p_continuation(const ScalarField& boundary, const PSolveConfig& cfg) {
  cfg.validate();
  const auto schedule = cfg.schedule();
  ContinuationResult out{ScalarField(boundary.grid_ptr()), {}, schedule, {}, {}, std::nullopt};
  const ScalarField* warm = nullptr;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    auto res = solve_p_harmonic(boundary, schedule[k], cfg, warm);
    out.stages.push_back(res.stats);
    if (!out.stage_fields.empty()) out.diffs.push_back(sup_distance(res.field, out.stage_fields.back()));
    out.stage_fields.push_back(std::move(res.field));
    warm = &out.stage_fields.back();
    if (!out.stages.back().converged) {
      out.failed_stage = k;
      break;
    }
  }
  out.field = out.stage_fields.back();
  return out;
}

inline void to_json(nlohmann::json& j, const SolveStats& s) {
  j = {{"iterations", s.iterations},
       {"final_residual", s.final_residual},
       {"energy", std::isfinite(s.energy) ? nlohmann::json(s.energy) : nlohmann::json(nullptr)},
       {"log_energy", s.log_energy},
       {"converged", s.converged},
       {"diverged", s.diverged}};
}

inline PSolveConfig psolve_config_from_json(const nlohmann::json& j) {
  PSolveConfig c;
  c.p = j.value("p", 2.0);
  if (j.contains("reg") && !j.at("reg").is_null()) c.reg = j.at("reg").get<double>();
  c.tol = j.value("tol", c.tol);
  c.max_iter = j.value("max_iter", c.max_iter);
  if (j.contains("continuation")) c.continuation = j.at("continuation").get<std::vector<double>>();
  c.validate();
  return c;
}

inline nlohmann::json to_json(const PSolveConfig& c) {
  nlohmann::json j = {{"p", c.p}, {"tol", c.tol}, {"max_iter", c.max_iter}, {"continuation", c.continuation}};
  j["reg"] = c.reg ? nlohmann::json(*c.reg) : nlohmann::json(nullptr);
  return j;
}

}  // namespace plgrowth
