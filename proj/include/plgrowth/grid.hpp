#pragma once

// Uniform Cartesian discretization of D ∩ B(x0, R): node classification,
// nodal fields, finite differences, ball/sphere measurements and the
// cutoffs max(u, 0), max(u - δ, 0) extended by zero outside D.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "geometry.hpp"

namespace plgrowth {

enum class NodeClass : std::uint8_t { Interior, LateralBoundary, OuterArc, Exterior };

inline const char* to_string(NodeClass c) {
  switch (c) {
    case NodeClass::Interior: return "interior";
    case NodeClass::LateralBoundary: return "lateral";
    case NodeClass::OuterArc: return "outer_arc";
    case NodeClass::Exterior: return "exterior";
  }
  return "?";
}

inline NodeClass node_class_from_string(const std::string& s) {
  if (s == "interior") return NodeClass::Interior;
  if (s == "lateral") return NodeClass::LateralBoundary;
  if (s == "outer_arc") return NodeClass::OuterArc;
  if (s == "exterior") return NodeClass::Exterior;
  throw std::invalid_argument("unknown node class '" + s + "'");
}

inline bool is_boundary(NodeClass c) {
  return c == NodeClass::LateralBoundary || c == NodeClass::OuterArc;
}

class Grid {
 public:
  Grid(Point origin, double spacing, int nx, int ny, std::vector<NodeClass> classes, Point x0,
       double R, std::optional<DomainSpec> domain = std::nullopt)
      : origin_(origin),
        spacing_(spacing),
        nx_(nx),
        ny_(ny),
        classes_(std::move(classes)),
        x0_(x0),
        R_(R),
        domain_(std::move(domain)) {
    if (!(spacing > 0.0)) throw std::invalid_argument("Grid: spacing must be positive");
    if (nx < 3 || ny < 3) throw std::invalid_argument("Grid: need at least 3 nodes per axis");
    if (classes_.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny))
      throw std::invalid_argument("Grid: class array has the wrong size");
    for (int j = 0; j < ny_; ++j)
      for (int i = 0; i < nx_; ++i) {
        if (node_class(i, j) != NodeClass::Interior) continue;
        if (i == 0 || j == 0 || i == nx_ - 1 || j == ny_ - 1)
          throw std::invalid_argument("Grid: interior node on the grid edge");
        for (auto [di, dj] : std::array<std::array<int, 2>, 4>{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}})
          if (node_class(i + di, j + dj) == NodeClass::Exterior)
            throw std::invalid_argument("Grid: interior node with an exterior neighbour");
      }
  }

  Point origin() const { return origin_; }
  double spacing() const { return spacing_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return classes_.size(); }
  Point x0() const { return x0_; }
  double R() const { return R_; }
  const std::optional<DomainSpec>& domain() const { return domain_; }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
  }
  int i_of(std::size_t k) const { return static_cast<int>(k % static_cast<std::size_t>(nx_)); }
  int j_of(std::size_t k) const { return static_cast<int>(k / static_cast<std::size_t>(nx_)); }
  bool in_range(int i, int j) const { return i >= 0 && j >= 0 && i < nx_ && j < ny_; }

  Point position(int i, int j) const { return {origin_.x + i * spacing_, origin_.y + j * spacing_}; }
  Point position(std::size_t k) const { return position(i_of(k), j_of(k)); }

  NodeClass node_class(int i, int j) const { return classes_[index(i, j)]; }
  NodeClass node_class(std::size_t k) const { return classes_[k]; }
  bool active(int i, int j) const {
    return in_range(i, j) && node_class(i, j) != NodeClass::Exterior;
  }
  bool active(std::size_t k) const { return classes_[k] != NodeClass::Exterior; }

  std::size_t count(NodeClass c) const {
    return static_cast<std::size_t>(std::count(classes_.begin(), classes_.end(), c));
  }

 private:
  Point origin_;
  double spacing_;
  int nx_;
  int ny_;
  std::vector<NodeClass> classes_;
  Point x0_;
  double R_;
  std::optional<DomainSpec> domain_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Grid over the bounding square of B(x0, R). Nodes within spacing/2 of ∂D
/// are lateral boundary, nodes within spacing/2 of the circle (and deeper
/// than spacing/2 in D) are outer arc, nodes deeper than spacing/2 in both
/// are interior, everything else is exterior. Interior nodes with an
/// exterior node among their 8 neighbours are then moved to the nearer
/// boundary class, so boundary nodes lie within (√2 - 1/2)·spacing of it.
inline GridPtr build_grid(const DomainSpec& domain, Point x0, double R, double spacing) {
  if (!(R > 0.0)) throw std::invalid_argument("build_grid: R must be positive");
  if (!(spacing > 0.0)) throw std::invalid_argument("build_grid: spacing must be positive");
  if (spacing > R / 16.0 * (1.0 + 1e-12))
    throw std::invalid_argument("build_grid: spacing must not exceed R/16");
  const int n = static_cast<int>(std::floor(2.0 * R / spacing + 1e-9)) + 1;
  const Point origin = x0 - Point{R, R};
  const double band = 0.5 * spacing * (1.0 + 1e-9);
  std::vector<NodeClass> classes(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  std::size_t interior = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Point p{origin.x + i * spacing, origin.y + j * spacing};
      const double sd = domain.signed_distance(p);
      const double sb = R - norm(p - x0);
      NodeClass c = NodeClass::Exterior;
      if (sd >= -band && sb >= -band) {
        if (sd > band && sb > band) c = NodeClass::Interior;
        else if (sd <= band) c = NodeClass::LateralBoundary;
        else c = NodeClass::OuterArc;
      }
      if (c == NodeClass::Interior) ++interior;
      classes[static_cast<std::size_t>(j) * n + i] = c;
    }
  }
  // An interior node whose 3x3 block reaches an exterior node would lose
  // corner triangles in the energy, and the p = 2 equations there would no
  // longer be the 5-point Laplacian. Such nodes join the nearer boundary.
  auto at = [&](int i, int j) -> NodeClass& { return classes[static_cast<std::size_t>(j) * n + i]; };
  std::vector<std::pair<int, int>> demote;
  for (int j = 1; j + 1 < n; ++j)
    for (int i = 1; i + 1 < n; ++i) {
      if (at(i, j) != NodeClass::Interior) continue;
      bool touches = false;
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) touches = touches || at(i + di, j + dj) == NodeClass::Exterior;
      if (touches) demote.emplace_back(i, j);
    }
  for (auto [i, j] : demote) {
    const Point p{origin.x + i * spacing, origin.y + j * spacing};
    at(i, j) = domain.signed_distance(p) <= R - norm(p - x0) ? NodeClass::LateralBoundary : NodeClass::OuterArc;
    --interior;
  }
  if (interior == 0) throw std::invalid_argument("build_grid: domain and ball do not overlap");
  return std::make_shared<const Grid>(origin, spacing, n, n, std::move(classes), x0, R, domain);
}

/// Nodal values of a function on a grid. Entries at exterior nodes are
/// carried as zero (extension by zero) and ignored by measurements.
class ScalarField {
 public:
  explicit ScalarField(GridPtr grid) : grid_(std::move(grid)), values_(grid_->size(), 0.0) {}
  ScalarField(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->size()) throw std::invalid_argument("ScalarField: size mismatch");
  }

  template <class F>
  static ScalarField sample(GridPtr grid, F&& f) {
    ScalarField out(grid);
    for (std::size_t k = 0; k < grid->size(); ++k)
      if (grid->active(k)) out.values_[k] = f(grid->position(k));
    return out;
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }
  double at(int i, int j) const { return values_[grid_->index(i, j)]; }

  /// Sup-norm over active nodes.
  double sup_norm() const {
    double m = 0.0;
    for (std::size_t k = 0; k < values_.size(); ++k)
      if (grid_->active(k)) m = std::max(m, std::abs(values_[k]));
    return m;
  }

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

/// max over active nodes of |a - b|.
inline double sup_distance(const ScalarField& a, const ScalarField& b) {
  if (&a.grid() != &b.grid()) throw std::invalid_argument("sup_distance: fields on different grids");
  double m = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k)
    if (a.grid().active(k)) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

// ---------------------------------------------------------------------------
// Differences

struct GradientField {
  std::vector<double> gx;
  std::vector<double> gy;
  std::vector<std::uint8_t> central;  // both axes used central differences

  double magnitude(std::size_t k) const { return std::hypot(gx[k], gy[k]); }
};

/// Central differences where both axis neighbours are active, one-sided
/// differences next to exterior nodes.
inline GradientField discrete_gradient(const ScalarField& f) {
  const Grid& g = f.grid();
  const double h = g.spacing();
  GradientField out;
  out.gx.assign(g.size(), 0.0);
  out.gy.assign(g.size(), 0.0);
  out.central.assign(g.size(), 0);
  auto diff = [&](int i, int j, int di, int dj, bool& central) {
    const bool fwd = g.active(i + di, j + dj);
    const bool bwd = g.active(i - di, j - dj);
    const double c = f.at(i, j);
    central = fwd && bwd;
    if (central) return (f.at(i + di, j + dj) - f.at(i - di, j - dj)) / (2 * h);
    if (fwd) return (f.at(i + di, j + dj) - c) / h;
    if (bwd) return (c - f.at(i - di, j - dj)) / h;
    return 0.0;
  };
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      if (!g.active(i, j)) continue;
      const std::size_t k = g.index(i, j);
      bool cx = false;
      bool cy = false;
      out.gx[k] = diff(i, j, 1, 0, cx);
      out.gy[k] = diff(i, j, 0, 1, cy);
      out.central[k] = cx && cy;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Ball and sphere measurements

namespace detail {

inline void check_radius(const Grid& g, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("measurement radius must be positive");
  if (r > g.R() * (1.0 + 1e-12)) throw std::invalid_argument("measurement radius exceeds the grid window");
}

template <class Pred>
std::pair<double, double> min_max_where(const ScalarField& f, Pred&& pred) {
  const Grid& g = f.grid();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.active(k) || !pred(g.position(k))) continue;
    lo = std::min(lo, f[k]);
    hi = std::max(hi, f[k]);
  }
  if (!(lo <= hi)) throw std::invalid_argument("no active nodes in the measurement set");
  return {lo, hi};
}

inline constexpr double kRadiusSlack = 1e-12;

}  // namespace detail

/// max of f over active nodes with |x - x0| <= r.
inline double sup_on_ball(const ScalarField& f, Point x0, double r) {
  detail::check_radius(f.grid(), r);
  const double rr = r * (1 + detail::kRadiusSlack);
  return detail::min_max_where(f, [&](Point p) { return norm(p - x0) <= rr; }).second;
}

inline double osc_on_ball(const ScalarField& f, Point x0, double r) {
  detail::check_radius(f.grid(), r);
  const double rr = r * (1 + detail::kRadiusSlack);
  const auto [lo, hi] = detail::min_max_where(f, [&](Point p) { return norm(p - x0) <= rr; });
  return hi - lo;
}

/// Oscillation over the annulus r - shell <= |x - x0| <= r.
inline double osc_on_sphere(const ScalarField& f, Point x0, double r, double shell) {
  detail::check_radius(f.grid(), r);
  if (shell < f.grid().spacing() * (1 - 1e-12))
    throw std::invalid_argument("osc_on_sphere: shell must be at least one spacing");
  const double rr = r * (1 + detail::kRadiusSlack);
  const double inner = (r - shell) * (1 - detail::kRadiusSlack);
  const auto [lo, hi] = detail::min_max_where(f, [&](Point p) {
    const double d = norm(p - x0);
    return d <= rr && d >= inner;
  });
  return hi - lo;
}

// ---------------------------------------------------------------------------
// Cutoffs

/// h = max(u, 0) at interior and outer-arc nodes, 0 on ∂D and outside D.
inline ScalarField cutoff_h(const ScalarField& u) {
  ScalarField h(u.grid_ptr());
  const Grid& g = u.grid();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const NodeClass c = g.node_class(k);
    if (c == NodeClass::Interior || c == NodeClass::OuterArc) h[k] = std::max(u[k], 0.0);
  }
  return h;
}

inline ScalarField cutoff_h_delta(const ScalarField& u, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("cutoff_h_delta: delta must be positive");
  ScalarField h(u.grid_ptr());
  const Grid& g = u.grid();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const NodeClass c = g.node_class(k);
    if (c == NodeClass::Interior || c == NodeClass::OuterArc) h[k] = std::max(u[k] - delta, 0.0);
  }
  return h;
}

/// Nodewise composition φ∘f on active nodes (exterior entries stay 0).
template <class Map>
ScalarField compose(const ScalarField& f, Map&& phi) {
  ScalarField out(f.grid_ptr());
  for (std::size_t k = 0; k < f.grid().size(); ++k)
    if (f.grid().active(k)) out[k] = phi(f[k]);
  return out;
}

// ---------------------------------------------------------------------------
// Cell quadrature on the corner-triangle split

/// Gradients of the piecewise-linear interpolant on the four corner
/// triangles of cell (i, j); a triangle is present when its three nodes are
/// active. Returns the number of present triangles.
inline int cell_triangle_gradients(const ScalarField& f, int i, int j, std::array<Point, 4>& out) {
  const Grid& g = f.grid();
  const double h = g.spacing();
  const bool a00 = g.active(i, j), a10 = g.active(i + 1, j);
  const bool a01 = g.active(i, j + 1), a11 = g.active(i + 1, j + 1);
  int n = 0;
  auto bottom = [&] { return (f.at(i + 1, j) - f.at(i, j)) / h; };
  auto top = [&] { return (f.at(i + 1, j + 1) - f.at(i, j + 1)) / h; };
  auto left = [&] { return (f.at(i, j + 1) - f.at(i, j)) / h; };
  auto right = [&] { return (f.at(i + 1, j + 1) - f.at(i + 1, j)) / h; };
  if (a00 && a10 && a01) out[n++] = {bottom(), left()};
  if (a10 && a00 && a11) out[n++] = {bottom(), right()};
  if (a01 && a11 && a00) out[n++] = {top(), left()};
  if (a11 && a01 && a10) out[n++] = {top(), right()};
  return n;
}

/// Area fraction of the cell with lower-left node (i, j) inside B(c, r).
inline double cell_ball_fraction(const Grid& g, int i, int j, Point c, double r) {
  const double h = g.spacing();
  const Point lo = g.position(i, j);
  const double cx = std::clamp(c.x, lo.x, lo.x + h);
  const double cy = std::clamp(c.y, lo.y, lo.y + h);
  if (norm(Point{cx, cy} - c) >= r) return 0.0;
  const double fx = std::max(std::abs(lo.x - c.x), std::abs(lo.x + h - c.x));
  const double fy = std::max(std::abs(lo.y - c.y), std::abs(lo.y + h - c.y));
  if (std::hypot(fx, fy) <= r) return 1.0;
  constexpr int sub = 16;
  int hits = 0;
  for (int a = 0; a < sub; ++a)
    for (int b = 0; b < sub; ++b) {
      const Point p{lo.x + (a + 0.5) * h / sub, lo.y + (b + 0.5) * h / sub};
      if (norm(p - c) < r) ++hits;
    }
  return static_cast<double>(hits) / (sub * sub);
}

/// ∫_{B(c,r)} F(∇f, x) dx by midpoint quadrature over cells, with the
/// integrand averaged over the cell's corner triangles and weighted by the
/// cell/ball overlap. Missing triangles (outside D) contribute zero.
template <class Integrand>
double integrate_over_ball(const ScalarField& f, Point c, double r, Integrand&& F) {
  const Grid& g = f.grid();
  const double h = g.spacing();
  double total = 0.0;
  std::array<Point, 4> grads{};
  for (int j = 0; j + 1 < g.ny(); ++j)
    for (int i = 0; i + 1 < g.nx(); ++i) {
      const double frac = cell_ball_fraction(g, i, j, c, r);
      if (frac == 0.0) continue;
      const int n = cell_triangle_gradients(f, i, j, grads);
      if (n == 0) continue;
      const Point mid = g.position(i, j) + Point{h / 2, h / 2};
      double s = 0.0;
      for (int t = 0; t < n; ++t) s += F(grads[t], mid);
      total += frac * h * h * s / 4.0;
    }
  return total;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json grid_to_json(const Grid& g) {
  nlohmann::json j = {{"origin", g.origin()},
                      {"spacing", g.spacing()},
                      {"nx", g.nx()},
                      {"ny", g.ny()},
                      {"x0", g.x0()},
                      {"R", g.R()},
                      {"counts",
                       {{"interior", g.count(NodeClass::Interior)},
                        {"lateral", g.count(NodeClass::LateralBoundary)},
                        {"outer_arc", g.count(NodeClass::OuterArc)},
                        {"exterior", g.count(NodeClass::Exterior)}}}};
  if (g.domain()) j["domain"] = *g.domain();
  return j;
}

/// CSV rows (i, j, x, y, class, value) for every active node.
inline void write_field_csv(const ScalarField& f, std::ostream& os) {
  const Grid& g = f.grid();
  os << "i,j,x,y,class,value\n";
  char buf[160];
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      if (!g.active(i, j)) continue;
      const Point p = g.position(i, j);
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%s,%.17g\n", i, j, p.x, p.y,
                    to_string(g.node_class(i, j)), f.at(i, j));
      os << buf;
    }
}

/// Reads a field written by write_field_csv back onto the same grid.
inline ScalarField read_field_csv(GridPtr grid, std::istream& is) {
  ScalarField f(grid);
  std::string line;
  if (!std::getline(is, line) || line.rfind("i,j,x,y,class,value", 0) != 0)
    throw std::invalid_argument("field CSV: missing header");
  std::vector<std::uint8_t> seen(grid->size(), 0);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell[6];
    for (auto& c : cell)
      if (!std::getline(ss, c, ',')) throw std::invalid_argument("field CSV: short row");
    const int i = std::stoi(cell[0]);
    const int j = std::stoi(cell[1]);
    if (!grid->in_range(i, j)) throw std::invalid_argument("field CSV: node outside grid");
    if (node_class_from_string(cell[4]) != grid->node_class(i, j))
      throw std::invalid_argument("field CSV: node class does not match the grid");
    f[grid->index(i, j)] = std::stod(cell[5]);
    seen[grid->index(i, j)] = 1;
  }
  for (std::size_t k = 0; k < grid->size(); ++k)
    if (grid->active(k) && !seen[k]) throw std::invalid_argument("field CSV: missing active node");
  return f;
}

}  // namespace plgrowth
