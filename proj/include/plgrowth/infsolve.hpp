#pragma once

// Discrete ∞-harmonic functions via the midpoint property
//
//   u(x) = ½ (max_{y ∈ S(x)} u(y) + min_{y ∈ S(x)} u(y)),
//
// S(x) the lattice ball of radius stencil_radius·h around x (shrunk near the
// boundary to the largest full ball of active nodes, so every stencil is
// point-symmetric). Solved by Gauss–Seidel (or Jacobi) sweeps, accelerated
// by policy steps that freeze the argmax/argmin and solve the resulting
// linear system. Also hosts exact viscosity solutions for benchmarking.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include <json.hpp>

#include "grid.hpp"
#include "psolve.hpp"

namespace plgrowth {

enum class SweepMode { GaussSeidel, Jacobi };

struct InfConfig {
  double tol = 1e-10;
  int max_iter = 200000;
  int stencil_radius = 3;
  SweepMode mode = SweepMode::GaussSeidel;
  bool distance_weighted = true;  // weight the extremal pair by distance
  unsigned threads = 1;      // Jacobi mode only

  void validate() const {
    if (!(tol > 0.0)) throw std::invalid_argument("InfConfig: tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("InfConfig: max_iter must be positive");
    if (stencil_radius < 1 || stencil_radius > 8)
      throw std::invalid_argument("InfConfig: stencil_radius must lie in [1, 8]");
    if (threads < 1) throw std::invalid_argument("InfConfig: threads must be >= 1");
  }
};

struct InfSolveResult {
  ScalarField field;
  SolveStats stats;
};

namespace detail {

struct MidpointPair {
  std::size_t a = 0;
  std::size_t b = 0;
  double wa = 0.5;
  double wb = 0.5;
};

// Per-node symmetric lattice stencils stored as offsets into the node array.
class MidpointStencil {
 public:
  MidpointStencil(const Grid& g, int radius, bool distance_weighted) : distance_weighted_(distance_weighted) {
    std::vector<std::array<int, 3>> offs;  // di, dj, |d|²
    for (int dj = -radius; dj <= radius; ++dj)
      for (int di = -radius; di <= radius; ++di) {
        const int d2 = di * di + dj * dj;
        if (d2 == 0 || d2 > radius * radius) continue;
        offs.push_back({di, dj, d2});
      }
    std::stable_sort(offs.begin(), offs.end(), [](const auto& a, const auto& b) { return a[2] < b[2]; });

    for (std::size_t q = 0; q < offs.size(); ++q)
      if (q + 1 == offs.size() || offs[q + 1][2] != offs[q][2]) {
        shell_end_.push_back(q + 1);
        shell_dist_.push_back(std::sqrt(static_cast<double>(offs[q][2])));
      }

    start_.push_back(0);
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (g.node_class(k) != NodeClass::Interior) continue;
      nodes_.push_back(k);
      const int i = g.i_of(k);
      const int j = g.j_of(k);
      // Admit whole shells of equal |d|² while every node in them is active.
      std::size_t shells = 0;
      std::size_t s = 0;
      for (; shells < shell_end_.size(); ++shells) {
        bool ok = true;
        for (std::size_t q = s; q < shell_end_[shells]; ++q)
          if (!g.active(i + offs[q][0], j + offs[q][1])) ok = false;
        if (!ok) break;
        s = shell_end_[shells];
      }
      for (std::size_t q = 0; q < s; ++q) {
        nbrs_.push_back(g.index(i + offs[q][0], j + offs[q][1]));
        dist_.push_back(std::sqrt(static_cast<double>(offs[q][2])));
      }
      nshells_.push_back(static_cast<std::uint8_t>(shells));
      start_.push_back(nbrs_.size());
    }
  }

  std::size_t size() const { return nodes_.size(); }
  std::size_t node(std::size_t r) const { return nodes_[r]; }
  std::span<const std::size_t> neighbours(std::size_t r) const {
    return {nbrs_.data() + start_[r], start_[r + 1] - start_[r]};
  }
  std::span<const double> distances(std::size_t r) const {
    return {dist_.data() + start_[r], start_[r + 1] - start_[r]};
  }

  // Weighted midpoint over the stencil of row r: the pair (a, b) maximizing
  // (u_a - u_b)/(d_a + d_b) and the value (d_b u_a + d_a u_b)/(d_a + d_b).
  // With uniform weighting all distances count as equal and this is
  // ½(max + min).
  double midpoint(const std::vector<double>& u, std::size_t r, MidpointPair* pair = nullptr) const {
    const auto nb = neighbours(r);
    if (!distance_weighted_) {
      double hi = -std::numeric_limits<double>::infinity();
      double lo = std::numeric_limits<double>::infinity();
      std::size_t ih = 0, il = 0;
      for (std::size_t k : nb) {
        const double v = u[k];
        if (v > hi) { hi = v; ih = k; }
        if (v < lo) { lo = v; il = k; }
      }
      if (pair) *pair = {ih, il, 0.5, 0.5};
      return 0.5 * (hi + lo);
    }
    // Only the extreme values within a shell of equal distance can win, so
    // reduce each shell to its max and min first.
    constexpr std::size_t kMaxShells = 64;
    const std::size_t ns = nshells_[r];
    std::array<double, kMaxShells> hi, lo;
    std::array<std::size_t, kMaxShells> ih, il;
    std::size_t q = 0;
    for (std::size_t c = 0; c < ns; ++c) {
      hi[c] = -std::numeric_limits<double>::infinity();
      lo[c] = std::numeric_limits<double>::infinity();
      for (; q < shell_end_[c]; ++q) {
        const double v = u[nb[q]];
        if (v > hi[c]) { hi[c] = v; ih[c] = nb[q]; }
        if (v < lo[c]) { lo[c] = v; il[c] = nb[q]; }
      }
    }
    double best = -std::numeric_limits<double>::infinity();
    std::size_t ca = 0, cb = 0;
    for (std::size_t a = 0; a < ns; ++a)
      for (std::size_t b = 0; b < ns; ++b) {
        const double slope = (hi[a] - lo[b]) / (shell_dist_[a] + shell_dist_[b]);
        if (slope > best) { best = slope; ca = a; cb = b; }
      }
    const double wa = shell_dist_[cb] / (shell_dist_[ca] + shell_dist_[cb]);
    if (pair) *pair = {ih[ca], il[cb], wa, 1.0 - wa};
    return wa * hi[ca] + (1.0 - wa) * lo[cb];
  }

  double residual(const std::vector<double>& u) const {
    double r = 0.0;
    for (std::size_t q = 0; q < nodes_.size(); ++q) r = std::max(r, std::abs(u[nodes_[q]] - midpoint(u, q)));
    return r;
  }

 private:
  std::vector<std::size_t> nodes_;
  bool distance_weighted_;
  std::vector<std::size_t> nbrs_;
  std::vector<double> dist_;
  std::vector<std::size_t> start_;
  std::vector<std::size_t> shell_end_;
  std::vector<double> shell_dist_;
  std::vector<std::uint8_t> nshells_;
};

inline double gauss_seidel_sweep(const MidpointStencil& st, std::vector<double>& u) {
  double upd = 0.0;
  for (std::size_t r = 0; r < st.size(); ++r) {
    const std::size_t k = st.node(r);
    const double v = st.midpoint(u, r);
    upd = std::max(upd, std::abs(v - u[k]));
    u[k] = v;
  }
  return upd;
}

inline double jacobi_sweep(const MidpointStencil& st, std::vector<double>& u, std::vector<double>& scratch,
                           unsigned threads) {
  scratch = u;
  const std::size_t n = st.size();
  std::vector<double> part(threads, 0.0);
  auto work = [&](unsigned t) {
    const std::size_t b = n * t / threads;
    const std::size_t e = n * (t + 1) / threads;
    double upd = 0.0;
    for (std::size_t r = b; r < e; ++r) {
      const double v = st.midpoint(u, r);
      upd = std::max(upd, std::abs(v - u[st.node(r)]));
      scratch[st.node(r)] = v;
    }
    part[t] = upd;
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }
  u.swap(scratch);
  return *std::max_element(part.begin(), part.end());
}

}  // namespace detail

/// Fixed point of the midpoint scheme with the boundary values of `boundary`.
/// stats.final_residual is max |u - ½(max + min)| over interior nodes;
/// stats.update_history holds the sup-norm update of every sweep.
inline InfSolveResult solve_inf_harmonic(const ScalarField& boundary, const InfConfig& cfg,
                                         const ScalarField* initial = nullptr) {
  cfg.validate();
  const Grid& g = boundary.grid();
  double lo = 0.0;
  double hi = 0.0;
  detail::require_boundary_data(boundary, lo, hi);
  const detail::MidpointStencil st(g, cfg.stencil_radius, cfg.distance_weighted);

  std::vector<double> u = boundary.values();
  for (std::size_t r = 0; r < st.size(); ++r) {
    const std::size_t k = st.node(r);
    const double v = initial ? (*initial)[k] : 0.5 * (lo + hi);
    u[k] = std::clamp(std::isfinite(v) ? v : 0.5 * (lo + hi), lo, hi);
  }
  for (std::size_t k = 0; k < g.size(); ++k)
    if (!g.active(k)) u[k] = 0.0;

  SolveStats stats;
  std::vector<double> scratch;
  double res = st.residual(u);
  int it = 0;
  while (it < cfg.max_iter && res > cfg.tol) {
    const double upd = cfg.mode == SweepMode::GaussSeidel ? detail::gauss_seidel_sweep(st, u)
                                                          : detail::jacobi_sweep(st, u, scratch, cfg.threads);
    stats.update_history.push_back(upd);
    ++it;
    // The residual costs a sweep; only look once updates are small.
    if (upd <= cfg.tol) res = st.residual(u);
  }
  stats.iterations = it;
  stats.final_residual = res;
  stats.converged = res <= cfg.tol;
  return {ScalarField(boundary.grid_ptr(), std::move(u)), stats};
}

// ---------------------------------------------------------------------------
// Exact solutions

/// Aronsson's function |x|^{4/3} - |y|^{4/3}: ∞-harmonic in the plane,
/// non-negative on the sector {|y| <= x}, zero on |y| = |x|.
inline double exact_aronsson(Point p) {
  return std::pow(std::abs(p.x), 4.0 / 3.0) - std::pow(std::abs(p.y), 4.0 / 3.0);
}

inline double exact_linear(Point p, Point direction) { return dot(p, direction); }

/// Δ∞f = f_x² f_xx + 2 f_x f_y f_xy + f_y² f_yy by central differences at
/// interior nodes whose 3×3 neighbourhood is active; other nodes get 0.
/// Values are raw (not scaled by spacing²).
inline ScalarField residual_inf_laplacian(const ScalarField& f) {
  const Grid& g = f.grid();
  const double h = g.spacing();
  ScalarField out(f.grid_ptr());
  for (int j = 1; j + 1 < g.ny(); ++j)
    for (int i = 1; i + 1 < g.nx(); ++i) {
      if (g.node_class(i, j) != NodeClass::Interior) continue;
      bool full = true;
      for (int dj = -1; dj <= 1 && full; ++dj)
        for (int di = -1; di <= 1; ++di)
          if (!g.active(i + di, j + dj)) full = false;
      if (!full) continue;
      const double fx = (f.at(i + 1, j) - f.at(i - 1, j)) / (2 * h);
      const double fy = (f.at(i, j + 1) - f.at(i, j - 1)) / (2 * h);
      const double fxx = (f.at(i + 1, j) - 2 * f.at(i, j) + f.at(i - 1, j)) / (h * h);
      const double fyy = (f.at(i, j + 1) - 2 * f.at(i, j) + f.at(i, j - 1)) / (h * h);
      const double fxy =
          (f.at(i + 1, j + 1) - f.at(i + 1, j - 1) - f.at(i - 1, j + 1) + f.at(i - 1, j - 1)) / (4 * h * h);
      out[g.index(i, j)] = fx * fx * fxx + 2 * fx * fy * fxy + fy * fy * fyy;
    }
  return out;
}

inline InfConfig inf_config_from_json(const nlohmann::json& j) {
  InfConfig c;
  c.tol = j.value("tol", c.tol);
  c.max_iter = j.value("max_iter", c.max_iter);
  c.stencil_radius = j.value("stencil_radius", c.stencil_radius);
  c.distance_weighted = j.value("distance_weighted", c.distance_weighted);
  const auto mode = j.value("mode", std::string("gauss_seidel"));
  if (mode == "jacobi") c.mode = SweepMode::Jacobi;
  else if (mode != "gauss_seidel") throw std::invalid_argument("InfConfig: unknown sweep mode '" + mode + "'");
  c.validate();
  return c;
}

inline nlohmann::json to_json(const InfConfig& c) {
  return {{"tol", c.tol},
          {"max_iter", c.max_iter},
          {"stencil_radius", c.stencil_radius},
          {"distance_weighted", c.distance_weighted},
          {"mode", c.mode == SweepMode::Jacobi ? "jacobi" : "gauss_seidel"}};
}

}  // namespace plgrowth
