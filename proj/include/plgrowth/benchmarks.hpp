#pragma once

// Named boundary-data benchmarks. Every benchmark vanishes on ∂D and is
// non-negative in D, matching the hypotheses of the growth theorem.
//
//   linear           inward_direction · (x - x0)
//   aronsson         Aronsson's function in the frame of a π/2 sector
//   harmonic_sector  ρ^{π/ω} cos(π φ / ω) in the frame of a sector (ω = opening)
//   zero_lateral_bump  0 on ∂D ∩ B_R, a cos² bump on the outer arc

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include "grid.hpp"
#include "infsolve.hpp"

namespace plgrowth {

enum class Benchmark { Linear, Aronsson, HarmonicSector, ZeroLateralBump };

inline Benchmark benchmark_from_string(const std::string& s) {
  if (s == "linear") return Benchmark::Linear;
  if (s == "aronsson") return Benchmark::Aronsson;
  if (s == "harmonic_sector") return Benchmark::HarmonicSector;
  if (s == "zero_lateral_bump") return Benchmark::ZeroLateralBump;
  throw std::invalid_argument("unknown benchmark '" + s + "'");
}

inline const char* to_string(Benchmark b) {
  switch (b) {
    case Benchmark::Linear: return "linear";
    case Benchmark::Aronsson: return "aronsson";
    case Benchmark::HarmonicSector: return "harmonic_sector";
    case Benchmark::ZeroLateralBump: return "zero_lateral_bump";
  }
  return "?";
}

namespace detail {

// Coordinates relative to the sector vertex, rotated so the bisector is +x.
inline Point sector_frame(const Sector& s, Point p) {
  const Point q = p - s.vertex;
  const Point e = unit_vector(s.bisector);
  return {dot(q, e), dot(q, perp(e))};
}

}  // namespace detail

/// Throws if the benchmark is not defined on this domain.
inline void check_benchmark_compatible(const DomainSpec& d, Benchmark b) {
  const auto* s = std::get_if<Sector>(&d.kind());
  switch (b) {
    case Benchmark::Linear:
    case Benchmark::ZeroLateralBump:
      return;
    case Benchmark::Aronsson:
      if (!s || std::abs(s->opening - std::numbers::pi / 2) > 1e-12)
        throw std::invalid_argument("benchmark 'aronsson' needs a sector of opening π/2");
      return;
    case Benchmark::HarmonicSector:
      if (!s) throw std::invalid_argument("benchmark 'harmonic_sector' needs a sector domain");
      return;
  }
}

/// Closed-form solution of the benchmark, if one exists. Aronsson is
/// ∞-harmonic, harmonic_sector is harmonic (p = 2), linear solves every p.
inline std::optional<std::function<double(Point)>> benchmark_exact(const DomainSpec& d, Benchmark b) {
  check_benchmark_compatible(d, b);
  switch (b) {
    case Benchmark::Linear: {
      const Point n = d.inward_direction();
      const Point a = d.anchor();
      return [n, a](Point p) { return exact_linear(p - a, n); };
    }
    case Benchmark::Aronsson: {
      const Sector s = std::get<Sector>(d.kind());
      return [s](Point p) { return exact_aronsson(detail::sector_frame(s, p)); };
    }
    case Benchmark::HarmonicSector: {
      const Sector s = std::get<Sector>(d.kind());
      return [s](Point p) {
        const Point q = detail::sector_frame(s, p);
        const double k = std::numbers::pi / s.opening;
        return std::pow(norm(q), k) * std::cos(k * std::atan2(q.y, q.x));
      };
    }
    case Benchmark::ZeroLateralBump:
      return std::nullopt;
  }
  return std::nullopt;
}

/// Boundary data on the grid: exact values at lateral and outer-arc nodes
/// (or the bump construction), zero elsewhere.
inline ScalarField benchmark_boundary(const GridPtr& grid, const DomainSpec& d, Benchmark b) {
  ScalarField out(grid);
  const auto exact = benchmark_exact(d, b);
  const Point x0 = grid->x0();
  const Point dir = d.inward_direction();
  double width = std::numbers::pi / 8;
  if (const auto* s = std::get_if<Sector>(&d.kind())) width = s->opening / 4;
  if (std::holds_alternative<HalfPlane>(d.kind())) width = std::numbers::pi / 4;
  for (std::size_t k = 0; k < grid->size(); ++k) {
    const NodeClass c = grid->node_class(k);
    if (!is_boundary(c)) continue;
    const Point p = grid->position(k);
    if (exact) {
      out[k] = (*exact)(p);
    } else if (c == NodeClass::OuterArc) {
      const Point q = p - x0;
      const double phi = std::atan2(dot(q, perp(dir)), dot(q, dir));
      const double c2 = std::cos(0.5 * std::numbers::pi * phi / width);
      out[k] = std::abs(phi) < width ? c2 * c2 : 0.0;
    }
  }
  return out;
}

}  // namespace plgrowth
