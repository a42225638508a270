#pragma once

// Unbounded convex planar domains: half-planes, sectors and finite
// intersections of half-planes, plus the boundary density ratio
// |D ∩ B(x0,r)| / |B(x0,r)| and its supremum over radii.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace plgrowth {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend Point operator*(Point a, double s) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point, Point) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline Point perp(Point a) { return {-a.y, a.x}; }
inline Point unit_vector(double angle) { return {std::cos(angle), std::sin(angle)}; }

/// Open half-plane {p : normal·p > offset}, normal of unit length pointing into D.
struct HalfPlane {
  Point normal;
  double offset = 0.0;

  double signed_distance(Point p) const { return dot(normal, p) - offset; }
};

/// Open circular sector with vertex, bisector angle and opening in (0, π].
struct Sector {
  Point vertex;
  double bisector = 0.0;
  double opening = std::numbers::pi / 2;

  // The two supporting half-planes through the vertex.
  std::vector<HalfPlane> half_planes() const {
    const double upper = bisector + opening / 2;
    const double lower = bisector - opening / 2;
    const Point n1{std::sin(upper), -std::cos(upper)};
    const Point n2{-std::sin(lower), std::cos(lower)};
    return {{n1, dot(n1, vertex)}, {n2, dot(n2, vertex)}};
  }
};

struct ConvexIntersection {
  std::vector<HalfPlane> half_planes;
};

struct BallSpec {
  Point center;
  double radius = 1.0;

  BallSpec() = default;
  BallSpec(Point c, double r) : center(c), radius(r) {
    if (!(r > 0.0)) throw std::invalid_argument("BallSpec: radius must be positive");
  }
  bool contains(Point p) const { return norm(p - center) < radius; }
};

namespace detail {

inline double wrap_angle(double a) {
  constexpr double two_pi = 2 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

// Directions d with n·d >= 0 (strict when `strict`) for all normals, probed at
// the endpoints of the admissible half-circles and at the midpoints between
// consecutive endpoints. Returns every admissible probe.
inline std::vector<Point> cone_directions(const std::vector<HalfPlane>& hps, bool strict) {
  std::vector<double> ends;
  for (const auto& hp : hps) {
    const double a = std::atan2(hp.normal.y, hp.normal.x);
    ends.push_back(wrap_angle(a - std::numbers::pi / 2));
    ends.push_back(wrap_angle(a + std::numbers::pi / 2));
  }
  std::sort(ends.begin(), ends.end());
  std::vector<double> probes = ends;
  for (std::size_t k = 0; k < ends.size(); ++k) {
    const double a = ends[k];
    double b = (k + 1 < ends.size()) ? ends[k + 1] : ends[0] + 2 * std::numbers::pi;
    probes.push_back(0.5 * (a + b));
  }
  std::vector<Point> ok;
  for (double a : probes) {
    const Point d = unit_vector(a);
    bool good = true;
    for (const auto& hp : hps) {
      const double s = dot(hp.normal, d);
      if (strict ? !(s > 1e-12) : (s < -1e-12)) {
        good = false;
        break;
      }
    }
    if (good) ok.push_back(d);
  }
  return ok;
}

// Euclidean distance from p to the closed convex set ∩ {n·x >= c}.
inline double distance_to_polygon(const std::vector<HalfPlane>& hps, Point p) {
  auto in_closure = [&](Point q) {
    for (const auto& hp : hps)
      if (hp.signed_distance(q) < -1e-12 * (1.0 + norm(q))) return false;
    return true;
  };
  if (in_closure(p)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& hp : hps) {
    const Point q = p - hp.signed_distance(p) * hp.normal;
    if (in_closure(q)) best = std::min(best, norm(p - q));
  }
  for (std::size_t i = 0; i < hps.size(); ++i) {
    for (std::size_t j = i + 1; j < hps.size(); ++j) {
      const auto& a = hps[i];
      const auto& b = hps[j];
      const double det = a.normal.x * b.normal.y - a.normal.y * b.normal.x;
      if (std::abs(det) < 1e-14) continue;
      const Point q{(a.offset * b.normal.y - a.normal.y * b.offset) / det,
                    (a.normal.x * b.offset - a.offset * b.normal.x) / det};
      if (in_closure(q)) best = std::min(best, norm(p - q));
    }
  }
  return best;
}

}  // namespace detail

/// An unbounded convex planar domain together with a boundary anchor x0.
/// Construction validates convexity, unboundedness, non-empty interior and
/// that the anchor lies on ∂D within 1e-12.
class DomainSpec {
 public:
  using Kind = std::variant<HalfPlane, Sector, ConvexIntersection>;

  static constexpr double anchor_tolerance = 1e-12;

  static DomainSpec half_plane(Point normal, double offset, Point anchor) {
    return DomainSpec(HalfPlane{normal, offset}, anchor);
  }
  static DomainSpec sector(Point vertex, double bisector, double opening, Point anchor) {
    return DomainSpec(Sector{vertex, bisector, opening}, anchor);
  }
  static DomainSpec sector(Point vertex, double bisector, double opening) {
    return sector(vertex, bisector, opening, vertex);
  }
  static DomainSpec intersection(std::vector<HalfPlane> hps, Point anchor) {
    return DomainSpec(ConvexIntersection{std::move(hps)}, anchor);
  }

  DomainSpec(Kind kind, Point anchor) : kind_(std::move(kind)), anchor_(anchor) {
    normalize_and_validate();
  }

  const Kind& kind() const { return kind_; }
  Point anchor() const { return anchor_; }
  std::string kind_name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, HalfPlane>) return "half_plane";
          else if constexpr (std::is_same_v<T, Sector>) return "sector";
          else return "convex_intersection";
        },
        kind_);
  }

  const std::vector<HalfPlane>& half_planes() const { return half_planes_; }

  /// Positive inside D. Exact Euclidean distance to ∂D for points in the
  /// closure; minus the distance to D for points outside.
  double signed_distance(Point p) const {
    double inside = std::numeric_limits<double>::infinity();
    for (const auto& hp : half_planes_) inside = std::min(inside, hp.signed_distance(p));
    if (inside >= 0.0) return inside;
    return -detail::distance_to_polygon(half_planes_, p);
  }

  /// Inward unit direction used to orient benchmarks (sector bisector,
  /// half-plane normal, or the mean of the intersection's normals).
  Point inward_direction() const {
    return std::visit(
        [&](const auto& k) -> Point {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, HalfPlane>) return k.normal;
          else if constexpr (std::is_same_v<T, Sector>) return unit_vector(k.bisector);
          else {
            Point s{};
            for (const auto& hp : k.half_planes) s = s + hp.normal;
            const double n = norm(s);
            return n > 1e-12 ? (1.0 / n) * s : k.half_planes.front().normal;
          }
        },
        kind_);
  }

 private:
  void normalize_and_validate() {
    std::visit(
        [&](auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, HalfPlane>) {
            normalize(k);
            half_planes_ = {k};
          } else if constexpr (std::is_same_v<T, Sector>) {
            if (!(k.opening > 0.0 && k.opening < 2 * std::numbers::pi))
              throw std::invalid_argument("sector opening must lie in (0, 2π)");
            if (k.opening > std::numbers::pi + 1e-15)
              throw std::invalid_argument("sector opening above π is not convex");
            half_planes_ = k.half_planes();
          } else {
            if (k.half_planes.empty())
              throw std::invalid_argument("convex_intersection needs at least one half-plane");
            for (auto& hp : k.half_planes) normalize(hp);
            half_planes_ = k.half_planes;
          }
        },
        kind_);

    if (detail::cone_directions(half_planes_, false).empty())
      throw std::invalid_argument("domain is bounded");

    for (const auto& hp : half_planes_)
      if (hp.signed_distance(anchor_) < -anchor_tolerance)
        throw std::invalid_argument("anchor lies outside the domain");
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& hp : half_planes_) gap = std::min(gap, hp.signed_distance(anchor_));
    if (gap > anchor_tolerance) throw std::invalid_argument("anchor is not on the boundary");

    // Interior is non-empty iff the tangent cone at the anchor has interior.
    std::vector<HalfPlane> active;
    for (const auto& hp : half_planes_)
      if (std::abs(hp.signed_distance(anchor_)) <= anchor_tolerance) active.push_back(hp);
    if (detail::cone_directions(active, true).empty())
      throw std::invalid_argument("domain has empty interior");
  }

  static void normalize(HalfPlane& hp) {
    const double n = norm(hp.normal);
    if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("half-plane normal is zero");
    hp.normal = (1.0 / n) * hp.normal;
    hp.offset /= n;
  }

  Kind kind_;
  Point anchor_;
  std::vector<HalfPlane> half_planes_;
};

/// True iff p lies in the open set D.
inline bool contains(const DomainSpec& domain, Point p) {
  if (const auto* s = std::get_if<Sector>(&domain.kind())) {
    const Point d = p - s->vertex;
    if (d == Point{}) return false;
    return std::abs(detail::wrap_angle(std::atan2(d.y, d.x) - s->bisector)) < s->opening / 2;
  }
  for (const auto& hp : domain.half_planes())
    if (!(hp.signed_distance(p) > 0.0)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Density ratio

/// Seed of the Cranley–Patterson shifts applied to the Halton points.
inline constexpr std::uint64_t kQmcSeed = 0x5eed2011ULL;
inline constexpr std::size_t kQmcSamples = 1u << 18;
inline constexpr std::size_t kQmcReplicates = 16;

struct DensityEstimate {
  double value = 0.0;
  double std_error = 0.0;
  bool analytic = false;
};

struct Kappa0Estimate {
  double value = 0.0;
  double std_error = 0.0;
  bool analytic = false;
  bool lower_estimate = false;  // finite max over radii, not the true supremum
};

namespace detail {

inline double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

inline double sampled_density(const DomainSpec& domain, Point x0, double r, std::size_t samples,
                              double& std_error) {
  std::mt19937_64 rng(kQmcSeed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t per = std::max<std::size_t>(1, samples / kQmcReplicates);
  std::vector<double> reps;
  for (std::size_t rep = 0; rep < kQmcReplicates; ++rep) {
    const double s1 = unif(rng);
    const double s2 = unif(rng);
    std::size_t hits = 0;
    for (std::size_t i = 1; i <= per; ++i) {
      const double u = std::fmod(radical_inverse(i, 2) + s1, 1.0);
      const double v = std::fmod(radical_inverse(i, 3) + s2, 1.0);
      const double rho = r * std::sqrt(u);
      const double phi = 2 * std::numbers::pi * v;
      if (contains(domain, x0 + Point{rho * std::cos(phi), rho * std::sin(phi)})) ++hits;
    }
    reps.push_back(static_cast<double>(hits) / static_cast<double>(per));
  }
  double mean = 0.0;
  for (double v : reps) mean += v;
  mean /= static_cast<double>(reps.size());
  double var = 0.0;
  for (double v : reps) var += (v - mean) * (v - mean);
  var /= static_cast<double>(reps.size() - 1);
  std_error = std::sqrt(var / static_cast<double>(reps.size()));
  return mean;
}

inline bool analytic_density(const DomainSpec& domain, Point x0, double& value) {
  if (std::holds_alternative<HalfPlane>(domain.kind())) {
    value = 0.5;  // x0 on the boundary line
    return true;
  }
  if (const auto* s = std::get_if<Sector>(&domain.kind())) {
    if (norm(x0 - s->vertex) <= DomainSpec::anchor_tolerance) {
      value = s->opening / (2 * std::numbers::pi);
      return true;
    }
  }
  return false;
}

inline void check_on_boundary(const DomainSpec& domain, Point x0) {
  if (std::abs(domain.signed_distance(x0)) > DomainSpec::anchor_tolerance)
    throw std::invalid_argument("x0 must lie on the domain boundary");
}

}  // namespace detail

/// |D ∩ B(x0,r)| / |B(x0,r)| for x0 on ∂D. Closed form for half-planes and
/// for sectors with vertex x0, randomized quasi-Monte Carlo otherwise.
inline DensityEstimate density_ratio(const DomainSpec& domain, Point x0, double r,
                                     std::size_t samples = kQmcSamples) {
  if (!(r > 0.0)) throw std::invalid_argument("density_ratio: radius must be positive");
  detail::check_on_boundary(domain, x0);
  DensityEstimate out;
  if (detail::analytic_density(domain, x0, out.value)) {
    out.analytic = true;
    return out;
  }
  out.value = detail::sampled_density(domain, x0, r, samples, out.std_error);
  return out;
}

/// sup_r of the density ratio. Exact where the ratio is r-independent,
/// otherwise the maximum over the supplied radii flagged as a lower estimate.
inline Kappa0Estimate kappa0(const DomainSpec& domain, Point x0, const std::vector<double>& radii,
                             std::size_t samples = kQmcSamples) {
  if (radii.empty()) throw std::invalid_argument("kappa0: radii list is empty");
  for (double r : radii)
    if (!(r > 0.0)) throw std::invalid_argument("kappa0: radii must be positive");
  detail::check_on_boundary(domain, x0);
  Kappa0Estimate out;
  if (detail::analytic_density(domain, x0, out.value)) {
    out.analytic = true;
    return out;
  }
  out.lower_estimate = true;
  out.value = -1.0;
  for (double r : radii) {
    const auto d = density_ratio(domain, x0, r, samples);
    if (d.value > out.value) {
      out.value = d.value;
      out.std_error = d.std_error;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const Point& p) { j = nlohmann::json::array({p.x, p.y}); }
inline void from_json(const nlohmann::json& j, Point& p) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("point must be [x, y]");
  p = {j.at(0).get<double>(), j.at(1).get<double>()};
}

inline void to_json(nlohmann::json& j, const HalfPlane& hp) {
  j = {{"normal", hp.normal}, {"offset", hp.offset}};
}
inline void from_json(const nlohmann::json& j, HalfPlane& hp) {
  hp.normal = j.at("normal").get<Point>();
  hp.offset = j.value("offset", 0.0);
}

inline void to_json(nlohmann::json& j, const DomainSpec& d) {
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, HalfPlane>) {
          j = {{"kind", "half_plane"}, {"normal", k.normal}, {"offset", k.offset}};
        } else if constexpr (std::is_same_v<T, Sector>) {
          j = {{"kind", "sector"},
               {"vertex", k.vertex},
               {"bisector", k.bisector},
               {"opening", k.opening}};
        } else {
          j = {{"kind", "convex_intersection"}, {"half_planes", k.half_planes}};
        }
      },
      d.kind());
  j["anchor"] = d.anchor();
}

inline DomainSpec domain_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "half_plane") {
    const auto normal = j.at("normal").get<Point>();
    const double offset = j.value("offset", 0.0);
    Point anchor;
    if (j.contains("anchor")) {
      anchor = j.at("anchor").get<Point>();
    } else {
      const double n = norm(normal);
      anchor = (offset / (n * n)) * normal;
    }
    return DomainSpec::half_plane(normal, offset, anchor);
  }
  if (kind == "sector") {
    const auto vertex = j.value("vertex", Point{});
    const Point anchor = j.contains("anchor") ? j.at("anchor").get<Point>() : vertex;
    return DomainSpec::sector(vertex, j.at("bisector").get<double>(),
                              j.at("opening").get<double>(), anchor);
  }
  if (kind == "convex_intersection") {
    return DomainSpec::intersection(j.at("half_planes").get<std::vector<HalfPlane>>(),
                                    j.at("anchor").get<Point>());
  }
  throw std::invalid_argument("unknown domain kind '" + kind + "'");
}

}  // namespace plgrowth
