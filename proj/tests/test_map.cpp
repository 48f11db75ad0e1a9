#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mcrt/brownian.hpp"
#include "mcrt/map.hpp"

using namespace mcrt;

namespace {

BrownianPath hand_path(std::vector<double> l, std::vector<double> r, Topology topo = Topology::Plane) {
  BrownianPath p;
  p.step = 1.0;
  p.topology = topo;
  p.L = std::move(l);
  p.R = std::move(r);
  p.total_time = static_cast<double>(p.L.size() - 1);
  p.seed = 1;
  return p;
}

BrownianPath random_path(Topology topo, std::uint64_t seed) {
  switch (topo) {
    case Topology::Disk:
      return sample_disk_excursion(std::sqrt(2.0), 1.0 / 300.0, 1.0, 1.0, seed);
    case Topology::Sphere:
      return sample_sphere_excursion(std::sqrt(2.0), 1.0 / 300.0, seed);
    default:
      return sample_plane(1.1, 0.01, -1.5, 1.5, seed);
  }
}

std::vector<Edge> sorted(std::vector<Edge> e) {
  std::sort(e.begin(), e.end());
  return e;
}

}  // namespace

TEST(BuildMap, TwoVerticesSingleEdge) {
  const auto m = build_map(hand_path({0.3, -1.0}, {2.0, 0.5}));
  ASSERT_EQ(m.size(), 2u);
  const auto e = m.edges();
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0].u, 0u);
  EXPECT_EQ(e[0].v, 1u);
  EXPECT_EQ(e[0].mult, 1);
}

TEST(BuildMap, ConsecutiveVerticesAlwaysAdjacent) {
  for (auto topo : {Topology::Plane, Topology::Sphere, Topology::Disk}) {
    const auto m = build_map(random_path(topo, 3));
    for (std::size_t v = 0; v + 1 < m.size(); ++v) EXPECT_GE(m.multiplicity(v, v + 1), 1) << v;
  }
}

TEST(BuildMap, ConstantPathIsCompleteUnderGridRule) {
  const std::size_t n = 7;
  const auto p = hand_path(std::vector<double>(n, 0.5), std::vector<double>(n, -0.25));
  const auto m = build_map(p, AdjacencyRule::GridInclusive);
  EXPECT_EQ(m.edges().size(), n * (n - 1) / 2);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 2; v < n; ++v) EXPECT_EQ(m.multiplicity(u, v), 2);
  EXPECT_EQ(sorted(build_map(p, AdjacencyRule::GridInclusive).edges()),
            sorted(brute_force_adjacency(p, AdjacencyRule::GridInclusive)));
}

TEST(BuildMap, StrictlyDecreasingPathIsAPathGraph) {
  const auto p = hand_path({4, 3, 2, 1, 0}, {4, 3, 2, 1, 0});
  for (auto rule : {AdjacencyRule::CellDip, AdjacencyRule::GridInclusive}) {
    const auto e = brute_force_adjacency(p, rule);
    ASSERT_EQ(e.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_EQ(e[i].u, i);
      EXPECT_EQ(e[i].v, i + 1);
      EXPECT_EQ(e[i].side, Side::Consecutive);
    }
    EXPECT_EQ(sorted(build_map(p, rule).edges()), e);
  }
}

TEST(BuildMap, HandEvaluatedFiveVertexPath) {
  // cell minima of L: 1, 1, 2, 2.5, 0.5; R is increasing and adds no arcs.
  // Vertex 4 sees 1 and 2 over the hump; 1-3 and 0-2 are blocked. 0-4 is a
  // tie at L[0] = 1: an edge on the grid, but cell 1 dips below it.
  const auto p = hand_path({1.0, 2.0, 3.0, 2.5, 0.5}, {0, 1, 2, 3, 4});
  std::vector<Edge> expect = {{0, 1, 1, Side::Consecutive}, {1, 2, 1, Side::Consecutive}, {1, 4, 1, Side::L},
                              {2, 3, 1, Side::Consecutive}, {2, 4, 1, Side::L},           {3, 4, 1, Side::Consecutive}};
  EXPECT_EQ(sorted(build_map(p).edges()), expect);
  EXPECT_EQ(sorted(brute_force_adjacency(p)), expect);
  expect.push_back({0, 4, 1, Side::L});
  expect = sorted(expect);
  EXPECT_EQ(sorted(build_map(p, AdjacencyRule::GridInclusive).edges()), expect);
  EXPECT_EQ(sorted(brute_force_adjacency(p, AdjacencyRule::GridInclusive)), expect);
}

TEST(BuildMap, MatchesOracleOnRandomPaths) {
  for (auto topo : {Topology::Plane, Topology::Sphere, Topology::Disk})
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      const auto p = random_path(topo, seed);
      ASSERT_LE(p.size(), 500u);
      EXPECT_EQ(sorted(build_map(p).edges()), sorted(brute_force_adjacency(p))) << to_string(topo) << " " << seed;
    }
}

TEST(BuildMap, MatchesOracleUnderGridRule) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto p = random_path(Topology::Plane, seed);
    EXPECT_EQ(sorted(build_map(p, AdjacencyRule::GridInclusive).edges()),
              sorted(brute_force_adjacency(p, AdjacencyRule::GridInclusive)));
  }
}

TEST(BuildMap, DoubleEdgesCarryBothSides) {
  const auto m = build_map(random_path(Topology::Sphere, 5));
  std::size_t doubles = 0;
  for (const auto& e : m.edges()) {
    EXPECT_NE(e.u, e.v);
    if (e.mult == 2) {
      EXPECT_EQ(e.side, Side::Both);
      ++doubles;
    }
  }
  EXPECT_GT(doubles, 0u);
}

TEST(BuildMap, Deterministic) {
  const auto p = random_path(Topology::Disk, 8);
  EXPECT_EQ(build_map(p).adjacency, build_map(p).adjacency);
}

TEST(BruteForce, SizeGuard) {
  const auto p = sample_plane(1.0, 1e-4, -0.3, 0.3, 1);
  ASSERT_GT(p.size(), kBruteForceLimit);
  EXPECT_THROW(brute_force_adjacency(p), SizeError);
}

TEST(BoundaryVertices, DecreasingLGivesFinalVertexOnly) {
  const auto p = hand_path({4, 3, 2, 1, 0}, {0, 1, 1, 1, 0}, Topology::Disk);
  EXPECT_EQ(boundary_vertices(p), (std::vector<std::uint32_t>{4}));
}

TEST(BoundaryVertices, IncreasingLGivesEveryVertex) {
  const auto p = hand_path({0, 1, 2, 3, 4}, {0, 1, 1, 1, 0}, Topology::Disk);
  EXPECT_EQ(boundary_vertices(p), (std::vector<std::uint32_t>{0, 1, 2, 3, 4}));
}

TEST(BoundaryVertices, WrongTopologyRejected) {
  EXPECT_THROW(boundary_vertices(random_path(Topology::Sphere, 1)), DomainError);
}

TEST(BoundaryVertices, DirectEvaluationOnRandomDiskPaths) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto p = random_path(Topology::Disk, seed);
    const auto lv = detail::path_levels(p, AdjacencyRule::CellDip).l;
    std::vector<std::uint32_t> expect;
    for (std::size_t i = 0; i < p.size(); ++i) {
      detail::Level inf{p.L[i], 0.0};
      for (std::size_t j = i + 1; j < p.size(); ++j) inf = std::min(inf, lv.cell[j]);
      if (lv.cell[i] <= inf) expect.push_back(static_cast<std::uint32_t>(i));
    }
    const auto got = boundary_vertices(p);
    EXPECT_EQ(got, expect) << seed;
    ASSERT_FALSE(got.empty());
    EXPECT_EQ(got.back(), p.size() - 1);
    EXPECT_EQ(build_map(p).boundary_order, got);
  }
}

TEST(DegreeHistogram, TwoVertexMap) {
  const auto h = degree_histogram(build_map(hand_path({0, 1}, {0, 1})));
  ASSERT_GE(h.size(), 2u);
  EXPECT_EQ(h[1], 2u);
}

TEST(DegreeHistogram, HandshakeAndTotal) {
  const auto m = build_map(random_path(Topology::Disk, 4));
  const auto h = degree_histogram(m);
  std::size_t total = 0, sum = 0;
  for (std::size_t d = 0; d < h.size(); ++d) {
    total += h[d];
    sum += d * h[d];
  }
  EXPECT_EQ(total, m.size());
  EXPECT_EQ(sum, 2 * m.edge_count());
}

TEST(BoundaryMask, FlagsBoundaryOrder) {
  const auto m = build_map(random_path(Topology::Disk, 2));
  const auto mask = boundary_mask(m);
  std::size_t flagged = std::accumulate(mask.begin(), mask.end(), std::size_t{0});
  EXPECT_EQ(flagged, m.boundary_order.size());
  for (auto b : m.boundary_order) EXPECT_TRUE(mask[b]);
}

TEST(MapFromEdges, BuildsSortedCsr) {
  const auto m = map_from_edges(3, {{1, 2, 2, Side::Both}, {0, 1, 1, Side::Consecutive}});
  EXPECT_EQ(m.degree(1), 3u);
  EXPECT_EQ(m.multiplicity(2, 1), 2);
  EXPECT_EQ(m.multiplicity(0, 2), 0);
  EXPECT_EQ(m.edge_count(), 3u);
}
