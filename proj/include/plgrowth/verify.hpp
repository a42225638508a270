#pragma once

// Executable versions of the estimates in the growth argument: Caccioppoli,
// the interior gradient bound, the pointwise barrier bound, the
// Gehring-Mostow step, the oscillation inequality and the growth fit.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bounds.hpp"
#include "grid.hpp"

namespace plgrowth {

struct GrowthPair {
  double r = 0.0;       // M(r) / M(4r)
  double M_r = 0.0;
  double M_4r = 0.0;
  double theta = 0.0;
};

struct GrowthTable {
  Point anchor;
  std::vector<double> radii;
  std::vector<double> M_values;
  std::vector<GrowthPair> pairs;  // dyadic-4 pairs with M(4r) > 0
  double alpha_fit = std::numeric_limits<double>::quiet_NaN();
  double alpha_floor = std::numeric_limits<double>::quiet_NaN();
  bool positive = false;  // some M(r) > 0; otherwise nothing is fitted

  std::vector<double> theta_emp() const {
    std::vector<double> t;
    for (const auto& p : pairs) t.push_back(p.theta);
    return t;
  }
};

struct EstimateReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;      // rhs - lhs
  double tolerance = 0.0;  // passed iff slack >= -tolerance
  bool passed = false;
  nlohmann::json metadata = nlohmann::json::object();
};

namespace detail {

inline EstimateReport make_report(std::string name, double lhs, double rhs, double tolerance) {
  EstimateReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  r.tolerance = tolerance;
  r.passed = r.slack >= -tolerance;
  return r;
}

inline nlohmann::json barrier_json(const LogBarrier& b) { return {{"M4r", b.M4r()}, {"eps", b.eps()}}; }

// Radial hat: 1 on B_{r/2}, linear down to 0 at |x - c| = r.
inline double hat(Point x, Point c, double r) {
  const double d = norm(x - c);
  return std::clamp(2.0 - 2.0 * d / r, 0.0, 1.0);
}

inline double hat_slope(Point x, Point c, double r) {
  const double d = norm(x - c);
  return (d > 0.5 * r && d < r) ? 2.0 / r : 0.0;
}

// Nodes at Chebyshev distance <= width from a node of another class.
inline std::vector<std::uint8_t> transition_collar(const Grid& g, int width) {
  std::vector<std::uint8_t> out(g.size(), 0);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const NodeClass c = g.node_class(i, j);
      bool mixed = false;
      for (int dj = -width; dj <= width && !mixed; ++dj)
        for (int di = -width; di <= width; ++di) {
          const NodeClass o = g.in_range(i + di, j + dj) ? g.node_class(i + di, j + dj) : NodeClass::Exterior;
          if (o != c) { mixed = true; break; }
        }
      out[g.index(i, j)] = mixed;
    }
  return out;
}

// φ∘f on the nodes within two spacings of B(c, radius), zero elsewhere. The
// barrier only has to hold where the check looks.
inline ScalarField barrier_near(const ScalarField& f, const LogBarrier& b, Point c, double radius) {
  const Grid& g = f.grid();
  const double reach = radius + 2 * g.spacing();
  ScalarField out(f.grid_ptr());
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.active(k) && norm(g.position(k) - c) <= reach) out[k] = b(f[k]);
  return out;
}

inline void check_window(const Grid& g, Point x0, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("ball radius must be positive");
  if (norm(x0 - g.x0()) + r > g.R() * (1 + 1e-12))
    throw std::invalid_argument("ball is not contained in the grid window");
}

}  // namespace detail

/// Caccioppoli inequality for φ(u_p):
///   (∫_{B_r} |∇φ(u_p)|^p ξ^p)^{1/p} <= p/(p-1) (∫_{B_r} |∇ξ|^p)^{1/p}
/// with the radial hat cutoff ξ. Both integrals run over D ∩ B_r.
inline EstimateReport check_caccioppoli(const ScalarField& u, double p, const LogBarrier& barrier, Point x0,
                                        double r, double rel_slack = 0.05) {
  if (!(p > 1.0)) throw std::invalid_argument("check_caccioppoli: p must exceed 1");
  detail::check_window(u.grid(), x0, r);
  const ScalarField v = detail::barrier_near(u, barrier, x0, r);
  // Scale before raising to the power p, the integrands span many decades.
  double scale = 0.0;
  integrate_over_ball(v, x0, r, [&](Point g, Point mid) {
    scale = std::max(scale, norm(g) * detail::hat(mid, x0, r));
    return 0.0;
  });
  double lhs = 0.0;
  if (scale > 0.0) {
    const double I = integrate_over_ball(
        v, x0, r, [&](Point g, Point mid) { return std::pow(norm(g) * detail::hat(mid, x0, r) / scale, p); });
    lhs = scale * std::pow(I, 1.0 / p);
  }
  const double s = 2.0 / r;
  const double J = integrate_over_ball(v, x0, r, [&](Point, Point mid) {
    return std::pow(detail::hat_slope(mid, x0, r) / s, p);
  });
  const double rhs = p / (p - 1.0) * s * std::pow(J, 1.0 / p);
  auto rep = detail::make_report("caccioppoli", lhs, rhs, rel_slack * rhs);
  rep.metadata = {{"r", r}, {"p", p}, {"x0", x0}, {"barrier", detail::barrier_json(barrier)}};
  return rep;
}

/// Interior gradient bound ‖∇φ(u)‖_{L∞(B_{(1-δ)r})} <= 1/(δ r) for a ball
/// whose nodes are all interior to D.
inline EstimateReport check_lemma1(const ScalarField& u, const LogBarrier& barrier, Point x0, double r, double delta,
                                   double rel_slack = 0.1) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("check_lemma1: delta must lie in (0, 1)");
  const Grid& g = u.grid();
  detail::check_window(g, x0, r);
  if (g.domain() && g.domain()->signed_distance(x0) < r)
    throw std::invalid_argument("check_lemma1: ball is not interior to the domain");
  for (std::size_t k = 0; k < g.size(); ++k)
    if (norm(g.position(k) - x0) <= r && g.node_class(k) != NodeClass::Interior)
      throw std::invalid_argument("check_lemma1: ball is not interior to the domain");
  const ScalarField v = detail::barrier_near(u, barrier, x0, r);
  const GradientField grad = discrete_gradient(v);
  const double inner = (1.0 - delta) * r * (1 + 1e-12);
  double lhs = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.active(k) && norm(g.position(k) - x0) <= inner) lhs = std::max(lhs, grad.magnitude(k));
  const double rhs = 1.0 / (delta * r);
  auto rep = detail::make_report("lemma1", lhs, rhs, rel_slack * rhs);
  rep.metadata = {{"r", r}, {"delta", delta}, {"x0", x0}, {"barrier", detail::barrier_json(barrier)}};
  return rep;
}

/// Pointwise bound |∇φ(h)| <= 2/r on B(x0, 2r), away from a collar of
/// nodes next to class transitions.
inline EstimateReport check_pointwise(const ScalarField& h, const LogBarrier& barrier, Point x0, double r,
                                      int collar = 1, double rel_slack = 0.1) {
  const Grid& g = h.grid();
  detail::check_window(g, x0, 2 * r);
  const ScalarField v = detail::barrier_near(h, barrier, x0, 2 * r);
  const GradientField grad = discrete_gradient(v);
  const auto skip = detail::transition_collar(g, collar);
  const double rr = 2 * r * (1 + 1e-12);
  double lhs = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.active(k) || skip[k] || norm(g.position(k) - x0) > rr) continue;
    lhs = std::max(lhs, grad.magnitude(k));
    ++used;
  }
  const double rhs = 2.0 / r;
  auto rep = detail::make_report("pointwise", lhs, rhs, rel_slack * rhs);
  rep.metadata = {{"r", r}, {"x0", x0}, {"collar", collar}, {"nodes", used},
                  {"barrier", detail::barrier_json(barrier)}};
  return rep;
}

/// Records C_GM = osc(φ(h); B_r)² log 2 / ∫_{B_2r} |∇φ(h)|². There is no
/// reference constant, so the report passes whenever C_GM is finite.
inline EstimateReport check_gehring_mostow(const ScalarField& h, const LogBarrier& barrier, Point x0, double r) {
  detail::check_window(h.grid(), x0, 2 * r);
  const ScalarField v = detail::barrier_near(h, barrier, x0, 2 * r);
  const double osc = osc_on_ball(v, x0, r);
  const double lhs = osc * osc * std::numbers::ln2;
  const double integral = integrate_over_ball(v, x0, 2 * r, [](Point g, Point) { return dot(g, g); });
  double C = 0.0;
  if (lhs > 0.0) {
    if (!(integral > 0.0))
      throw std::runtime_error("check_gehring_mostow: zero Dirichlet integral with nonzero oscillation");
    C = lhs / integral;
  }
  auto rep = detail::make_report("gehring_mostow", lhs, integral, std::numeric_limits<double>::infinity());
  rep.passed = std::isfinite(C);
  rep.metadata = {{"r", r}, {"x0", x0}, {"C_GM", C}, {"barrier", detail::barrier_json(barrier)}};
  return rep;
}

/// M(r) = sup of u over D ∩ B(x0, r) on the given radii, with the
/// least-squares exponent and the dyadic-4 ratios.
inline GrowthTable measure_growth(const ScalarField& u, Point x0, const std::vector<double>& radii) {
  const Grid& g = u.grid();
  if (radii.size() < 3) throw std::invalid_argument("measure_growth: need at least 3 radii");
  const double q = radii[1] / radii[0];
  if (!(std::abs(q - 2.0) < 1e-9 || std::abs(q - 4.0) < 1e-9))
    throw std::invalid_argument("measure_growth: radii must be geometric with ratio 2 or 4");
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(radii[k] > 0.0) || radii[k] > g.R() / 4 * (1 + 1e-12))
      throw std::invalid_argument("measure_growth: radii must lie in (0, R/4]");
    if (k > 0 && std::abs(radii[k] / radii[k - 1] - q) > 1e-9)
      throw std::invalid_argument("measure_growth: radii must be geometric with ratio 2 or 4");
  }
  detail::check_window(g, x0, radii.back());

  GrowthTable t;
  t.anchor = x0;
  t.radii = radii;
  for (double r : radii) t.M_values.push_back(sup_on_ball(u, x0, r));
  for (std::size_t k = 1; k < t.M_values.size(); ++k)
    if (t.M_values[k] < t.M_values[k - 1]) throw std::logic_error("measure_growth: sup over nested balls decreased");

  const std::size_t step = std::abs(q - 2.0) < 1e-9 ? 2 : 1;
  for (std::size_t k = 0; k + step < radii.size(); ++k) {
    const double a = t.M_values[k];
    const double b = t.M_values[k + step];
    if (b > 0.0) t.pairs.push_back({radii[k], a, b, std::max(a, 0.0) / b});
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(t.M_values[k] > 0.0)) continue;
    const double x = std::log(radii[k]);
    const double y = std::log(t.M_values[k]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++n;
  }
  t.positive = n > 0;
  if (n >= 2) t.alpha_fit = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double floor = std::numeric_limits<double>::infinity();
  for (const auto& p : t.pairs)
    if (p.theta > 0.0) floor = std::min(floor, -std::log(p.theta) / std::log(4.0));
  if (std::isfinite(floor)) t.alpha_floor = floor;
  return t;
}

/// Every empirical θ = M(r)/M(4r) must stay below θ(params). Reports the
/// worst pair and the constant C that would make it tight.
inline EstimateReport check_oscillation_inequality(const GrowthTable& t, const BoundParams& params) {
  if (t.pairs.empty()) throw std::invalid_argument("check_oscillation_inequality: no dyadic-4 pair with M(4r) > 0");
  const double bound = theta(params);
  const auto worst = std::max_element(t.pairs.begin(), t.pairs.end(),
                                      [](const GrowthPair& a, const GrowthPair& b) { return a.theta < b.theta; });
  auto rep = detail::make_report("oscillation", worst->theta, bound, 0.0);
  rep.metadata = {{"worst_r", worst->r}, {"theta_emp", worst->theta}, {"theta_bound", bound}, {"params", params}};
  if (worst->theta > 0.0 && worst->theta < 1.0)
    rep.metadata["C_calibrated"] = calibrate_C(worst->theta, params.n, params.kappa0);
  return rep;
}

/// osc(φ(h); B_r) against osc(φ(h); ∂B_r) with h = max(u, 0). The sphere is
/// the annulus of width `shell` (default one spacing). A radius passes if
/// the gap is within 4·spacing·max|∇φ(h)| over the ball.
inline EstimateReport check_monotone_osc(const ScalarField& u, const LogBarrier& barrier, Point x0,
                                         const std::vector<double>& radii, double shell = 0.0) {
  const Grid& g = u.grid();
  if (radii.empty()) throw std::invalid_argument("check_monotone_osc: no radii");
  if (shell <= 0.0) shell = g.spacing();
  const ScalarField v =
      detail::barrier_near(cutoff_h(u), barrier, x0, *std::max_element(radii.begin(), radii.end()));
  const GradientField grad = discrete_gradient(v);
  std::vector<double> gaps, allow;
  double worst = 0.0;
  for (double r : radii) {
    detail::check_window(g, x0, r);
    const double gap = std::abs(osc_on_ball(v, x0, r) - osc_on_sphere(v, x0, r, shell));
    double gmax = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (g.active(k) && norm(g.position(k) - x0) <= r) gmax = std::max(gmax, grad.magnitude(k));
    const double a = 4 * g.spacing() * gmax;
    gaps.push_back(gap);
    allow.push_back(a);
    worst = std::max(worst, a > 0.0 ? gap / a : (gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
  }
  // lhs is the largest gap in units of its allowance.
  auto rep = detail::make_report("monotone", worst, 1.0, 0.0);
  rep.metadata = {{"radii", radii}, {"gaps", gaps}, {"allowances", allow}, {"shell", shell},
                  {"x0", x0}, {"barrier", detail::barrier_json(barrier)}};
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization

inline void to_json(nlohmann::json& j, const GrowthTable& t) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : t.pairs) pairs.push_back({{"r", p.r}, {"M_r", p.M_r}, {"M_4r", p.M_4r}, {"theta", p.theta}});
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  j = {{"anchor", t.anchor},   {"radii", t.radii},           {"M_values", t.M_values},
       {"pairs", pairs},       {"theta_emp", t.theta_emp()}, {"alpha_fit", num(t.alpha_fit)},
       {"alpha_floor", num(t.alpha_floor)}, {"positive", t.positive}};
}

inline void to_json(nlohmann::json& j, const EstimateReport& r) {
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  j = {{"name", r.name},   {"lhs", num(r.lhs)},     {"rhs", num(r.rhs)},           {"slack", num(r.slack)},
       {"tolerance", num(r.tolerance)}, {"passed", r.passed}, {"metadata", r.metadata}};
}

/// Flat CSV: check, r, lhs, rhs, slack, passed.
inline void write_reports_csv(const std::vector<EstimateReport>& reports, std::ostream& os) {
  os << "check,r,lhs,rhs,slack,passed\n";
  char buf[256];
  for (const auto& r : reports) {
    const double radius = r.metadata.contains("r") ? r.metadata["r"].get<double>()
                                                   : std::numeric_limits<double>::quiet_NaN();
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%d\n", r.name.c_str(), radius, r.lhs, r.rhs, r.slack,
                  r.passed ? 1 : 0);
    os << buf;
  }
}

}  // namespace plgrowth
