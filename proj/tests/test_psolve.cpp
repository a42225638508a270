#include <cmath>
#include <numbers>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <gtest/gtest.h>

#include <plgrowth/benchmarks.hpp>
#include <plgrowth/psolve.hpp>

using namespace plgrowth;
using std::numbers::pi;

namespace {

DomainSpec upper() { return DomainSpec::half_plane({0, 1}, 0.0, {0, 0}); }

// Independent oracle: assemble and solve the 5-point Laplacian directly.
ScalarField five_point_solve(const ScalarField& bd) {
  const Grid& g = bd.grid();
  std::vector<int> idx(g.size(), -1);
  int n = 0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.node_class(k) == NodeClass::Interior) idx[k] = n++;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const int r = idx[g.index(i, j)];
      if (r < 0) continue;
      trip.emplace_back(r, r, 4.0);
      for (auto [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
        const std::size_t k = g.index(i + di, j + dj);
        if (idx[k] >= 0) trip.emplace_back(r, idx[k], -1.0);
        else b[r] += bd[k];
      }
    }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
  const Eigen::VectorXd x = lu.solve(b);
  ScalarField out = bd;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (idx[k] >= 0) out[k] = x[idx[k]];
  return out;
}

bool in_range(const ScalarField& u, const ScalarField& bd) {
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t k = 0; k < bd.grid().size(); ++k)
    if (is_boundary(bd.grid().node_class(k))) lo = std::min(lo, bd[k]), hi = std::max(hi, bd[k]);
  for (std::size_t k = 0; k < u.grid().size(); ++k)
    if (u.grid().active(k) && (u[k] < lo - 1e-10 || u[k] > hi + 1e-10)) return false;
  return true;
}

}  // namespace

TEST(PSolve, LinearDataEveryP) {
  const GridPtr g = build_grid(upper(), {0, 0}, 1.0, 1.0 / 32);
  const ScalarField bd = benchmark_boundary(g, upper(), Benchmark::Linear);
  const ScalarField exact = ScalarField::sample(g, [](Point p) { return p.y; });
  for (double p : {2.0, 3.0, 6.0, 16.0}) {
    PSolveConfig cfg;
    cfg.p = p;
    const auto res = solve_p_harmonic(bd, cfg);
    EXPECT_TRUE(res.stats.converged) << p;
    EXPECT_LE(sup_distance(res.field, exact), 1e-8) << p;
  }
}

TEST(PSolve, P2MatchesFivePointOracle) {
  const DomainSpec d = DomainSpec::sector({0, 0}, pi / 2, 2 * pi / 3);
  const GridPtr g = build_grid(d, {0, 0}, 1.0, 1.0 / 40);
  const ScalarField bd = benchmark_boundary(g, d, Benchmark::ZeroLateralBump);
  const auto res = solve_p_harmonic(bd, PSolveConfig{});
  ASSERT_TRUE(res.stats.converged);
  EXPECT_LE(sup_distance(res.field, five_point_solve(bd)), 1e-8);
}

TEST(PSolve, HarmonicSectorData) {
  const DomainSpec d = DomainSpec::sector({0, 0}, pi / 4, pi / 2);
  const GridPtr g = build_grid(d, {0, 0}, 1.0, 1.0 / 64);
  const auto res = solve_p_harmonic(benchmark_boundary(g, d, Benchmark::HarmonicSector), PSolveConfig{});
  // 2xy is a quadratic, so the 5-point scheme reproduces it.
  EXPECT_LE(sup_distance(res.field, ScalarField::sample(g, [](Point p) { return 2 * p.x * p.y; })), 1e-10);
}

TEST(PSolve, StripIsAffine) {
  // Strip 0 < y < 1/4 with data 4y: the solution is affine for every p.
  const DomainSpec d = DomainSpec::intersection({{{0, 1}, 0}, {{0, -1}, -0.25}}, {0, 0});
  const GridPtr g = build_grid(d, {0, 0}, 1.0, 1.0 / 64);
  ScalarField bd(g);
  for (std::size_t k = 0; k < g->size(); ++k)
    if (is_boundary(g->node_class(k))) bd[k] = 4 * g->position(k).y;
  const ScalarField exact = ScalarField::sample(g, [](Point p) { return 4 * p.y; });
  for (double p : {2.0, 5.0, 12.0}) {
    PSolveConfig cfg;
    cfg.p = p;
    EXPECT_LE(sup_distance(solve_p_harmonic(bd, cfg).field, exact), 1e-8) << p;
  }
}

TEST(PSolve, EnergyNeverIncreasesAndRangeHolds) {
  const DomainSpec d = DomainSpec::sector({0, 0}, 0.0, pi / 2);
  const GridPtr g = build_grid(d, {0, 0}, 1.0, 1.0 / 32);
  const ScalarField bd = benchmark_boundary(g, d, Benchmark::Aronsson);
  for (double p : {4.0, 10.0}) {
    PSolveConfig cfg;
    cfg.p = p;
    const auto res = solve_p_harmonic(bd, cfg);
    EXPECT_TRUE(res.stats.converged);
    const auto& E = res.stats.log_energy_history;
    for (std::size_t k = 1; k < E.size(); ++k) EXPECT_LE(E[k], E[k - 1] + 1e-12 * std::abs(E[k - 1]));
    EXPECT_TRUE(in_range(res.field, bd));
  }
}

TEST(PSolve, Comparison) {
  const DomainSpec d = DomainSpec::sector({0, 0}, 0.0, pi / 2);
  const GridPtr g = build_grid(d, {0, 0}, 1.0, 1.0 / 32);
  const ScalarField lower = benchmark_boundary(g, d, Benchmark::ZeroLateralBump);
  ScalarField upper_data = lower;
  for (std::size_t k = 0; k < g->size(); ++k)
    if (g->node_class(k) == NodeClass::OuterArc) upper_data[k] += 0.3 * std::max(0.0, g->position(k).y);
  PSolveConfig cfg;
  cfg.p = 4;
  const auto a = solve_p_harmonic(lower, cfg);
  const auto b = solve_p_harmonic(upper_data, cfg);
  for (std::size_t k = 0; k < g->size(); ++k) EXPECT_LE(a.field[k], b.field[k] + 1e-9);
}

TEST(PSolve, RegularizationHalvingIsBenign) {
  const DomainSpec d = DomainSpec::sector({0, 0}, 0.0, pi / 2);
  const GridPtr g = build_grid(d, {0, 0}, 1.0, 1.0 / 32);
  const ScalarField bd = benchmark_boundary(g, d, Benchmark::Aronsson);
  PSolveConfig a;
  a.p = 8;
  a.continuation = {2, 4, 8};
  PSolveConfig b = a;
  b.reg = 0.5 * g->spacing() * g->spacing();
  const auto ra = p_continuation(bd, a);
  const auto rb = p_continuation(bd, b);
  EXPECT_LE(sup_distance(ra.field, rb.field), 1e-4 * bd.sup_norm());
}

TEST(PSolve, RerunIsBitIdentical) {
  const DomainSpec d = DomainSpec::sector({0, 0}, 0.0, pi / 2);
  const GridPtr g = build_grid(d, {0, 0}, 1.0, 1.0 / 32);
  const ScalarField bd = benchmark_boundary(g, d, Benchmark::Aronsson);
  PSolveConfig cfg;
  cfg.p = 6;
  EXPECT_EQ(solve_p_harmonic(bd, cfg).field.values(), solve_p_harmonic(bd, cfg).field.values());
}

TEST(PContinuation, LinearDiffsVanish) {
  const GridPtr g = build_grid(upper(), {0, 0}, 1.0, 1.0 / 32);
  PSolveConfig cfg;
  cfg.p = 16;
  cfg.continuation = {2, 4, 8, 16};
  const auto res = p_continuation(benchmark_boundary(g, upper(), Benchmark::Linear), cfg);
  ASSERT_EQ(res.diffs.size(), 3u);
  for (double d : res.diffs) EXPECT_LE(d, 1e-8);
  EXPECT_FALSE(res.failed_stage);
  EXPECT_EQ(res.stage_fields.size(), 4u);
}

TEST(PContinuation, SingleStage) {
  const GridPtr g = build_grid(upper(), {0, 0}, 1.0, 1.0 / 16);
  PSolveConfig cfg;
  cfg.continuation = {2};
  const auto res = p_continuation(benchmark_boundary(g, upper(), Benchmark::ZeroLateralBump), cfg);
  EXPECT_TRUE(res.diffs.empty());
  EXPECT_EQ(res.field.values(), solve_p_harmonic(benchmark_boundary(g, upper(), Benchmark::ZeroLateralBump),
                                                 PSolveConfig{})
                                    .field.values());
}

TEST(PSolveConfig, Validation) {
  PSolveConfig c;
  c.p = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = PSolveConfig{};
  c.p = 8;
  c.continuation = {2, 8, 4};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.continuation = {2, 4};
  EXPECT_THROW(c.validate(), std::invalid_argument);  // must end at p
  c.continuation = {2, 4, 8};
  EXPECT_NO_THROW(c.validate());
  EXPECT_THROW(psolve_config_from_json({{"p", 4}, {"tol", -1.0}}), std::invalid_argument);
  const PSolveConfig r = psolve_config_from_json(to_json(c));
  EXPECT_EQ(r.continuation, c.continuation);
  EXPECT_FALSE(r.reg);
}

TEST(PSolve, RejectsNonFiniteBoundaryData) {
  const GridPtr g = build_grid(upper(), {0, 0}, 1.0, 1.0 / 16);
  ScalarField bd(g);
  for (std::size_t k = 0; k < g->size(); ++k)
    if (is_boundary(g->node_class(k))) {
      bd[k] = NAN;
      break;
    }
  EXPECT_THROW(solve_p_harmonic(bd, PSolveConfig{}), std::invalid_argument);
}
