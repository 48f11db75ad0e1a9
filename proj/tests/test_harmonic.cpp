#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "mcrt/brownian.hpp"
#include "mcrt/harmonic.hpp"
#include "mcrt/map.hpp"
#include "mcrt/rng.hpp"

using namespace mcrt;

namespace {

MatedCrtMap path3() { return map_from_edges(3, {{0, 1, 1, Side::Consecutive}, {1, 2, 1, Side::Consecutive}}); }

MatedCrtMap star(std::uint32_t leaves) {
  std::vector<Edge> e;
  for (std::uint32_t k = 1; k <= leaves; ++k) e.push_back({0, k, 1, Side::L});
  return map_from_edges(leaves + 1, e);
}

std::vector<double> dense_solve(const MatedCrtMap& m, const std::vector<std::uint8_t>& bd, const std::vector<double>& g) {
  const std::size_t n = m.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t v = 0; v < n; ++v) {
    const auto i = static_cast<Eigen::Index>(v);
    if (bd[v]) {
      a(i, i) = 1.0;
      b(i) = g[v];
      continue;
    }
    for (const auto& nb : m.neighbors(v)) {
      a(i, i) += nb.mult;
      a(i, static_cast<Eigen::Index>(nb.v)) -= nb.mult;
    }
  }
  const Eigen::VectorXd x = a.fullPivLu().solve(b);
  return {x.data(), x.data() + n};
}

}  // namespace

TEST(Laplacian, AnnihilatesConstants) {
  const auto m = build_map(sample_disk_excursion(std::sqrt(2.0), 0.01, 1.0, 1.0, 1));
  const std::vector<double> c(m.size(), 3.5);
  for (double x : laplacian_apply(m, c)) EXPECT_EQ(x, 0.0);
}

TEST(Laplacian, SingleEdge) {
  const auto m = map_from_edges(2, {{0, 1, 1, Side::Consecutive}});
  const std::vector<double> v{1.0, 0.0};
  EXPECT_EQ(laplacian_apply(m, v), (std::vector<double>{1.0, -1.0}));
}

TEST(Laplacian, DoubleEdgeCountsTwice) {
  const auto m = map_from_edges(2, {{0, 1, 2, Side::Both}});
  const std::vector<double> v{1.0, 0.0};
  EXPECT_EQ(laplacian_apply(m, v), (std::vector<double>{2.0, -2.0}));
}

TEST(Laplacian, LengthMismatch) {
  const std::vector<double> v{1.0};
  EXPECT_THROW(laplacian_apply(path3(), v), DomainError);
}

TEST(SolveDirichlet, ConstantDataNeedsNoIterations) {
  const auto m = build_map(sample_disk_excursion(std::sqrt(2.0), 0.01, 1.0, 1.0, 2));
  const std::vector<double> vals(m.boundary_order.size(), -0.75);
  const auto f = solve_dirichlet(m, m.boundary_order, vals);
  EXPECT_EQ(f.iterations, 0u);
  EXPECT_TRUE(f.converged);
  for (double x : f.values) EXPECT_EQ(x, -0.75);
}

TEST(SolveDirichlet, PathMidpoint) {
  const std::vector<std::uint32_t> set{0, 2};
  const std::vector<double> vals{0.0, 1.0};
  const auto f = solve_dirichlet(path3(), set, vals);
  EXPECT_NEAR(f.values[1], 0.5, 1e-12);
  EXPECT_EQ(f.values[0], 0.0);
  EXPECT_EQ(f.values[2], 1.0);
}

TEST(SolveDirichlet, MatchesDenseSolveOnRandomMaps) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto m = build_map(sample_sphere_excursion(std::sqrt(2.0), 1.0 / 199.0, seed));
    ASSERT_LE(m.size(), 200u);
    Rng rng(seed, 99);
    std::vector<std::uint8_t> bd(m.size(), 0);
    std::vector<double> g(m.size(), 0.0), vals;
    std::vector<std::uint32_t> set;
    for (std::size_t v = 0; v < m.size(); ++v)
      if (v == 0 || rng.uniform() < 0.1) {
        bd[v] = 1;
        g[v] = rng.uniform();
        set.push_back(static_cast<std::uint32_t>(v));
        vals.push_back(g[v]);
      }
    SolverOptions opt;
    opt.tol = 1e-12;
    const auto f = solve_dirichlet(m, set, vals, opt);
    const auto exact = dense_solve(m, bd, g);
    double err = 0.0;
    for (std::size_t v = 0; v < m.size(); ++v) err = std::max(err, std::abs(f.values[v] - exact[v]));
    EXPECT_LE(err, 1e-8) << seed;
    EXPECT_LE(mean_value_residual(m, f.values, f.boundary_mask), 1e-8);
  }
}

TEST(SolveDirichlet, IterationCapFlagsNonConvergence) {
  const auto m = build_map(sample_disk_excursion(std::sqrt(2.0), 1e-3, 1.0, 1.0, 3));
  std::vector<double> vals(m.boundary_order.size(), 0.0);
  vals.back() = 1.0;
  SolverOptions opt;
  opt.max_iter = 1;
  const auto f = solve_dirichlet(m, m.boundary_order, vals, opt);
  EXPECT_FALSE(f.converged);
  EXPECT_EQ(f.iterations, 1u);
  EXPECT_GT(f.residual_inf_norm, opt.tol);
}

TEST(SolveDirichlet, UnreachableComponentIsStructuralError) {
  const auto m = map_from_edges(4, {{0, 1, 1, Side::Consecutive}, {2, 3, 1, Side::Consecutive}});
  const std::vector<std::uint32_t> set{0};
  const std::vector<double> vals{1.0};
  EXPECT_THROW(solve_dirichlet(m, set, vals), StructuralError);
}

TEST(SolveDirichlet, EmptyBoundaryRejected) {
  EXPECT_THROW(solve_dirichlet(path3(), {}, {}), DomainError);
}

TEST(SolveDirichlet, DomainRestriction) {
  // 0 - 1 - 2 - 3 with 3 outside the domain: 2 has only neighbour 1 inside
  const auto m = map_from_edges(4, {{0, 1, 1, Side::Consecutive}, {1, 2, 1, Side::Consecutive},
                                    {2, 3, 1, Side::Consecutive}});
  const std::vector<std::uint8_t> domain{1, 1, 1, 0};
  const std::vector<std::uint32_t> set{0};
  const std::vector<double> vals{2.0};
  SolverOptions opt;
  opt.domain = domain;
  const auto f = solve_dirichlet(m, set, vals, opt);
  EXPECT_NEAR(f.values[1], 2.0, 1e-12);
  EXPECT_NEAR(f.values[2], 2.0, 1e-12);
}

TEST(Hitting, PathRootInTheMiddle) {
  const std::vector<std::uint32_t> order{0, 2};
  const auto h = hitting_probabilities(path3(), 1, order);
  EXPECT_NEAR(h.exit_mass[0], 0.5, 1e-12);
  EXPECT_NEAR(h.exit_mass[1], 0.5, 1e-12);
  EXPECT_NEAR(h.cumulative[0], 0.5, 1e-12);
  EXPECT_EQ(h.cumulative[1], 1.0);
}

TEST(Hitting, StarIsUniform) {
  const std::uint32_t leaves = 7;
  std::vector<std::uint32_t> order;
  for (std::uint32_t k = 1; k <= leaves; ++k) order.push_back(k);
  const auto h = hitting_probabilities(star(leaves), 0, order);
  for (double p : h.exit_mass) EXPECT_NEAR(p, 1.0 / leaves, 1e-12);
}

TEST(Hitting, RootOnBoundaryRejected) {
  const std::vector<std::uint32_t> order{0, 2};
  EXPECT_THROW(hitting_probabilities(path3(), 0, order), DomainError);
}

TEST(Hitting, DiskMassesSumToOne) {
  const auto m = build_map(sample_disk_excursion(std::sqrt(2.0), 1e-3, 1.0, 1.0, 4));
  const auto h = hitting_probabilities(m, static_cast<std::uint32_t>(m.size() / 2), m.boundary_order);
  double total = 0.0;
  for (double p : h.exit_mass) {
    EXPECT_GE(p, 0.0);
    total += p;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_TRUE(std::is_sorted(h.cumulative.begin(), h.cumulative.end()));
}
