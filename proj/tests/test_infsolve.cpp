#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <plgrowth/benchmarks.hpp>
#include <plgrowth/infsolve.hpp>

using namespace plgrowth;
using std::numbers::pi;

namespace {

DomainSpec upper() { return DomainSpec::half_plane({0, 1}, 0.0, {0, 0}); }

InfConfig coarse() {
  InfConfig c;
  c.tol = 1e-9;
  return c;
}

}  // namespace

TEST(InfSolve, LinearData) {
  const GridPtr g = build_grid(upper(), {0, 0}, 1.0, 1.0 / 32);
  const auto res = solve_inf_harmonic(benchmark_boundary(g, upper(), Benchmark::Linear), coarse());
  EXPECT_TRUE(res.stats.converged);
  EXPECT_LE(sup_distance(res.field, ScalarField::sample(g, [](Point p) { return p.y; })), 1e-7);
}

TEST(InfSolve, ConeData) {
  // Vertex below the window; |x - z| is inf-harmonic in the half-plane.
  const Point z{0.1, -1.5};
  for (double h : {1.0 / 16, 1.0 / 32}) {
    const GridPtr g = build_grid(upper(), {0, 0}, 1.0, h);
    ScalarField bd(g);
    for (std::size_t k = 0; k < g->size(); ++k)
      if (is_boundary(g->node_class(k))) bd[k] = norm(g->position(k) - z);
    const auto res = solve_inf_harmonic(bd, coarse());
    ASSERT_TRUE(res.stats.converged);
    EXPECT_LE(sup_distance(res.field, ScalarField::sample(g, [&](Point p) { return norm(p - z); })), h) << h;
  }
}

TEST(InfSolve, FixedPointIndependentOfStart) {
  const DomainSpec d = DomainSpec::sector({0, 0}, 0.0, pi / 2);
  const GridPtr g = build_grid(d, {0, 0}, 1.0, 1.0 / 24);
  const ScalarField bd = benchmark_boundary(g, d, Benchmark::Aronsson);
  InfConfig cfg = coarse();
  cfg.tol = 1e-11;
  const auto harmonic = solve_p_harmonic(bd, PSolveConfig{});
  const auto warm = solve_inf_harmonic(bd, cfg, &harmonic.field);
  const ScalarField zero(g);
  const auto cold = solve_inf_harmonic(bd, cfg, &zero);
  ASSERT_TRUE(warm.stats.converged && cold.stats.converged);
  EXPECT_LE(sup_distance(warm.field, cold.field), 1e-8);
}

TEST(InfSolve, JacobiUpdatesDoNotGrow) {
  const DomainSpec d = DomainSpec::sector({0, 0}, 0.0, pi / 2);
  const GridPtr g = build_grid(d, {0, 0}, 1.0, 1.0 / 16);
  InfConfig cfg = coarse();
  cfg.mode = SweepMode::Jacobi;
  const auto res = solve_inf_harmonic(benchmark_boundary(g, d, Benchmark::Aronsson), cfg);
  EXPECT_TRUE(res.stats.converged);
  const auto& u = res.stats.update_history;
  for (std::size_t k = 2; k < u.size(); ++k) EXPECT_LE(u[k], u[k - 1] * (1 + 1e-12) + 1e-15) << k;
}

TEST(InfSolve, JacobiThreadsAgree) {
  const DomainSpec d = DomainSpec::sector({0, 0}, 0.0, pi / 2);
  const GridPtr g = build_grid(d, {0, 0}, 1.0, 1.0 / 16);
  InfConfig a = coarse();
  a.mode = SweepMode::Jacobi;
  InfConfig b = a;
  b.threads = 3;
  const ScalarField bd = benchmark_boundary(g, d, Benchmark::Aronsson);
  EXPECT_EQ(solve_inf_harmonic(bd, a).field.values(), solve_inf_harmonic(bd, b).field.values());
}

TEST(InfSolve, Comparison) {
  const DomainSpec d = DomainSpec::sector({0, 0}, 0.0, pi / 2);
  const GridPtr g = build_grid(d, {0, 0}, 1.0, 1.0 / 24);
  const ScalarField g1 = benchmark_boundary(g, d, Benchmark::ZeroLateralBump);
  ScalarField g2 = benchmark_boundary(g, d, Benchmark::Aronsson);
  for (std::size_t k = 0; k < g->size(); ++k) g2[k] = std::max(g2[k], g1[k]);
  const auto a = solve_inf_harmonic(g1, coarse());
  const auto b = solve_inf_harmonic(g2, coarse());
  for (std::size_t k = 0; k < g->size(); ++k) EXPECT_LE(a.field[k], b.field[k] + 1e-9);
}

TEST(InfSolve, AronssonWithinTwoPercent) {
  const DomainSpec d = DomainSpec::sector({0, 0}, 0.0, pi / 2);
  const GridPtr g = build_grid(d, {0, 0}, 1.0, 1.0 / 64);
  const ScalarField bd = benchmark_boundary(g, d, Benchmark::Aronsson);
  const auto res = solve_inf_harmonic(bd, InfConfig{});
  ASSERT_TRUE(res.stats.converged);
  const ScalarField exact = ScalarField::sample(g, exact_aronsson);
  EXPECT_LE(sup_distance(res.field, exact), 0.02 * exact.sup_norm());
}

TEST(InfSolve, RerunIsBitIdentical) {
  const DomainSpec d = DomainSpec::sector({0, 0}, 0.0, pi / 2);
  const GridPtr g = build_grid(d, {0, 0}, 1.0, 1.0 / 16);
  const ScalarField bd = benchmark_boundary(g, d, Benchmark::Aronsson);
  EXPECT_EQ(solve_inf_harmonic(bd, coarse()).field.values(), solve_inf_harmonic(bd, coarse()).field.values());
}

TEST(InfSolve, MaxIterReportsNonConvergence) {
  const DomainSpec d = DomainSpec::sector({0, 0}, 0.0, pi / 2);
  const GridPtr g = build_grid(d, {0, 0}, 1.0, 1.0 / 16);
  InfConfig cfg;
  cfg.max_iter = 3;
  const auto res = solve_inf_harmonic(benchmark_boundary(g, d, Benchmark::Aronsson), cfg);
  EXPECT_FALSE(res.stats.converged);
  EXPECT_EQ(res.stats.iterations, 3);
}

TEST(ExactAronsson, Values) {
  EXPECT_DOUBLE_EQ(exact_aronsson({1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(exact_aronsson({1, 1}), 0.0);
  EXPECT_NEAR(exact_aronsson({8, 1}), 15.0, 1e-12);
}

TEST(ResidualInfLaplacian, Oracles) {
  const DomainSpec full = DomainSpec::half_plane({0, 1}, -10.0, {0, -10});
  const GridPtr g = build_grid(full, {0, 0}, 1.0, 1.0 / 32);
  const ScalarField lin = residual_inf_laplacian(ScalarField::sample(g, [](Point p) { return p.y; }));
  for (double v : lin.values()) EXPECT_NEAR(v, 0.0, 1e-9);
  const ScalarField quad =
      residual_inf_laplacian(ScalarField::sample(g, [](Point p) { return p.x * p.x + p.y * p.y; }));
  const std::size_t k = g->index(40, 44);
  const Point p = g->position(k);
  EXPECT_NEAR(quad[k], 8 * (p.x * p.x + p.y * p.y), 1e-9);
}

TEST(ResidualInfLaplacian, AronssonShrinksWithSpacing) {
  const DomainSpec full = DomainSpec::half_plane({0, 1}, -10.0, {0, -10});
  double prev = INFINITY;
  for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
    const GridPtr g = build_grid(full, {0, 0}, 1.0, h);
    const ScalarField r = residual_inf_laplacian(ScalarField::sample(g, exact_aronsson));
    double worst = 0.0;
    for (std::size_t k = 0; k < g->size(); ++k) {
      const Point p = g->position(k);
      if (std::abs(p.x) >= 0.1 && std::abs(p.y) >= 0.1 && norm(p) < 0.9) worst = std::max(worst, std::abs(r[k]));
    }
    EXPECT_LT(worst, prev);
    prev = worst;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(InfConfig, Validation) {
  InfConfig c;
  c.stencil_radius = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.stencil_radius = 9;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(inf_config_from_json({{"mode", "sor"}}), std::invalid_argument);
  const InfConfig r = inf_config_from_json({{"mode", "jacobi"}, {"stencil_radius", 2}});
  EXPECT_EQ(r.mode, SweepMode::Jacobi);
  EXPECT_EQ(inf_config_from_json(to_json(r)).stencil_radius, 2);
}
