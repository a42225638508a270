#pragma once

// Closed-form quantities of the growth estimate: the logarithmic barrier,
// the admissibility conditions for convex maps, the contraction factor θ,
// the growth exponent α and the dyadic iteration.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include <json.hpp>

namespace plgrowth {

struct BoundParams {
  int n = 2;
  double kappa0 = 0.5;
  double C = 1.0;

  void validate() const {
    if (n < 2) throw std::invalid_argument("BoundParams: n must be >= 2");
    if (!(kappa0 > 0.0 && kappa0 <= 1.0))
      throw std::invalid_argument("BoundParams: kappa0 must lie in (0, 1]");
    if (!(C > 0.0) || !std::isfinite(C)) throw std::invalid_argument("BoundParams: C must be positive");
  }
};

/// φ(t) = -log((M4r - t + ε) / (M4r + ε)) on I = (-∞, M4r].
class LogBarrier {
 public:
  LogBarrier(double M4r, double eps) : M4r_(M4r), eps_(eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("LogBarrier: eps must be positive");
    if (!std::isfinite(M4r)) throw std::invalid_argument("LogBarrier: M4r must be finite");
  }

  double M4r() const { return M4r_; }
  double eps() const { return eps_; }

  double operator()(double t) const {
    require_in_interval(t);
    // log1p keeps φ(0) = 0 exact and φ accurate for small t.
    return -std::log1p(-t / (M4r_ + eps_));
  }

  /// (φ'(t), φ''(t)); φ'' = φ'^2 for this family.
  std::pair<double, double> derivatives(double t) const {
    require_in_interval(t);
    const double d1 = 1.0 / (M4r_ - t + eps_);
    return {d1, d1 * d1};
  }

  double sup_derivative() const { return 1.0 / eps_; }

 private:
  void require_in_interval(double t) const {
    if (!(t <= M4r_)) throw std::domain_error("LogBarrier: argument outside (-inf, M4r]");
  }

  double M4r_;
  double eps_;
};

inline double barrier_eval(const LogBarrier& b, double t) { return b(t); }
inline std::pair<double, double> barrier_derivatives(const LogBarrier& b, double t) {
  return b.derivatives(t);
}

struct ConditionReport {
  bool c1_smooth = false;
  double c2_ratio_max = 0.0;
  double c3_min_derivative = 0.0;
  double c4_sup_derivative = 0.0;
  bool passed = false;
};

inline constexpr std::size_t kDefaultConditionSamples = 10000;

/// Checks the four barrier conditions on an equispaced sample of [lo, hi]
/// (endpoints included). `map(t)` returns the pair (φ'(t), φ''(t)).
template <class Map>
ConditionReport check_conditions(const Map& map, double lo, double hi,
                                 std::size_t samples = kDefaultConditionSamples) {
  if (samples < 2) throw std::invalid_argument("check_conditions: need at least 2 samples");
  if (!(lo < hi)) throw std::invalid_argument("check_conditions: need lo < hi");
  ConditionReport rep;
  rep.c1_smooth = true;
  rep.c2_ratio_max = -std::numeric_limits<double>::infinity();
  rep.c3_min_derivative = std::numeric_limits<double>::infinity();
  rep.c4_sup_derivative = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = (k + 1 == samples) ? hi : lo + (hi - lo) * static_cast<double>(k) /
                                                     static_cast<double>(samples - 1);
    const auto [m1, m2] = map(t);
    const double d1 = m1;
    const double d2 = m2;
    if (!std::isfinite(d1) || !std::isfinite(d2))
      throw std::domain_error("check_conditions: non-finite derivative");
    const double ratio = d2 > 0.0 ? d1 * d1 / d2
                                  : (d1 == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    rep.c2_ratio_max = std::max(rep.c2_ratio_max, ratio);
    rep.c3_min_derivative = std::min(rep.c3_min_derivative, d1);
    rep.c4_sup_derivative = std::max(rep.c4_sup_derivative, d1);
    if (d2 < 0.0) rep.c1_smooth = false;  // not convex on the sample
  }
  rep.passed = rep.c1_smooth && rep.c2_ratio_max <= 1.0 + 1e-12 && rep.c3_min_derivative > 0.0 &&
               std::isfinite(rep.c4_sup_derivative);
  return rep;
}

inline ConditionReport check_conditions(const LogBarrier& b, double lo, double hi,
                                        std::size_t samples = kDefaultConditionSamples) {
  return check_conditions([&](double t) { return b.derivatives(t); }, lo, hi, samples);
}

/// θ = 1 - exp(-C κ0^{1/n}).
inline double theta(const BoundParams& p) {
  p.validate();
  return -std::expm1(-p.C * std::pow(p.kappa0, 1.0 / p.n));
}

/// α = -log_4 θ.
inline double alpha(const BoundParams& p) { return -std::log(theta(p)) / std::log(4.0); }

struct GrowthLevel {
  double radius = 0.0;
  double lower_bound = 0.0;
};

/// Iterates M(4r) >= M(r)/θ: entry ν holds (4^ν r, θ^{-ν} M_r).
inline std::vector<GrowthLevel> iterate_growth(double theta_value, double M_r, double r, int levels) {
  if (!(theta_value > 0.0 && theta_value < 1.0))
    throw std::invalid_argument("iterate_growth: theta must lie in (0, 1)");
  if (!(M_r > 0.0)) throw std::invalid_argument("iterate_growth: M_r must be positive");
  if (!(r > 0.0)) throw std::invalid_argument("iterate_growth: r must be positive");
  if (levels < 1) throw std::invalid_argument("iterate_growth: need at least one level");
  std::vector<GrowthLevel> out;
  out.reserve(static_cast<std::size_t>(levels));
  for (int nu = 1; nu <= levels; ++nu)
    out.push_back({std::pow(4.0, nu) * r, std::pow(theta_value, -nu) * M_r});
  return out;
}

/// Inverts θ = 1 - exp(-C κ0^{1/n}) for C at an observed θ.
inline double calibrate_C(double theta_emp, int n, double kappa0) {
  if (!(theta_emp > 0.0 && theta_emp < 1.0))
    throw std::invalid_argument("calibrate_C: theta must lie in (0, 1)");
  if (n < 2) throw std::invalid_argument("calibrate_C: n must be >= 2");
  if (!(kappa0 > 0.0 && kappa0 <= 1.0)) throw std::invalid_argument("calibrate_C: kappa0 must lie in (0, 1]");
  return -std::log1p(-theta_emp) / std::pow(kappa0, 1.0 / n);
}

inline void to_json(nlohmann::json& j, const BoundParams& p) {
  j = {{"n", p.n}, {"kappa0", p.kappa0}, {"c", p.C}};
}
inline void from_json(const nlohmann::json& j, BoundParams& p) {
  p.n = j.value("n", 2);
  p.kappa0 = j.at("kappa0").get<double>();
  p.C = j.contains("c") ? j.at("c").get<double>() : j.value("C", 1.0);
}

inline void to_json(nlohmann::json& j, const ConditionReport& r) {
  j = {{"c1_smooth", r.c1_smooth},
       {"c2_ratio_max", r.c2_ratio_max},
       {"c3_min_derivative", r.c3_min_derivative},
       {"c4_sup_derivative", r.c4_sup_derivative},
       {"passed", r.passed}};
}

}  // namespace plgrowth
