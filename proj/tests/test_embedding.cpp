#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "mcrt/brownian.hpp"
#include "mcrt/embedding.hpp"
#include "mcrt/map.hpp"

using namespace mcrt;

namespace {

BrownianPath disk(double eps, std::uint64_t seed) { return sample_disk_excursion(std::sqrt(2.0), eps, 1.0, 1.0, seed); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// Flood fill of the window interior from the root, written independently of
// window_region: repeated relaxation until nothing changes.
std::vector<std::uint8_t> flood(const MatedCrtMap& m, std::size_t lo, std::size_t hi, std::size_t root) {
  const std::size_t n = m.size();
  std::vector<std::uint8_t> edge(n, 0), in(n, 0);
  for (std::size_t v = lo; v <= hi; ++v)
    for (const auto& nb : m.neighbors(v))
      if (nb.v < lo || nb.v > hi) edge[v] = 1;
  if (edge[root]) return in;
  in[root] = 1;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t v = lo; v <= hi; ++v)
      if (!in[v] && !edge[v])
        for (const auto& nb : m.neighbors(v))
          if (in[nb.v]) {
            in[v] = 1;
            changed = true;
            break;
          }
  }
  return in;
}

}  // namespace

TEST(EmbedDisk, FourVertexToyByHand) {
  // cells of L: 0, 0, 2, 1 -> boundary {0, 1, 3}; edges 0-1, 1-2, 2-3, 1-3 (double), 0-3 (R)
  BrownianPath p;
  p.step = 1.0;
  p.topology = Topology::Disk;
  p.L = {0.0, 2.0, 3.0, 1.0};
  p.R = {0.0, 1.0, 1.0, 0.0};
  p.total_time = 3.0;
  p.boundary_length = 1.0;
  p.seed = 1;
  const auto m = build_map(p);
  ASSERT_EQ(m.boundary_order, (std::vector<std::uint32_t>{0, 1, 3}));
  EXPECT_EQ(m.multiplicity(1, 3), 2);
  EXPECT_EQ(m.multiplicity(0, 3), 1);
  const auto e = embed_disk(m, p, 5);
  EXPECT_EQ(e.root, 2u);
  // the walk from 2 exits at 1 or 3 with probability 1/2 each
  ASSERT_EQ(e.boundary_p.size(), 3u);
  EXPECT_NEAR(e.boundary_p[0], 0.0, 1e-12);
  EXPECT_NEAR(e.boundary_p[1], 0.5, 1e-12);
  EXPECT_NEAR(std::abs(e.positions[0] - Point{1.0, 0.0}), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(e.positions[1] - Point{-1.0, 0.0}), 0.0, 1e-12);
  EXPECT_EQ(e.positions[3], Point(1.0, 0.0));
  EXPECT_NEAR(std::abs(e.positions[2]), 0.0, 1e-12);
}

TEST(EmbedDisk, BoundaryOnCircleCounterclockwiseAnchorAtOne) {
  const auto p = disk(1e-3, 2);
  const auto m = build_map(p);
  const auto e = embed_disk(m, p, 2);
  EXPECT_EQ(e.positions[e.boundary_order.back()], Point(1.0, 0.0));
  double prev = -1.0;
  for (std::size_t j = 0; j < e.boundary_order.size(); ++j) {
    const Point z = e.positions[e.boundary_order[j]];
    EXPECT_NEAR(std::abs(z), 1.0, 1e-12);
    EXPECT_GE(e.boundary_p[j], prev);
    prev = e.boundary_p[j];
    if (j + 1 < e.boundary_order.size()) {
      double a = std::arg(z);
      if (a < 0) a += 2.0 * std::numbers::pi;
      EXPECT_NEAR(a, 2.0 * std::numbers::pi * e.boundary_p[j], 1e-9);
    } else {
      EXPECT_EQ(z, Point(1.0, 0.0));
    }
  }
  for (std::size_t v = 0; v < m.size(); ++v) {
    if (!e.on_boundary[v]) {
      EXPECT_LT(std::abs(e.positions[v]), 1.0);
    }
  }
  EXPECT_LE(e.residual, 1e-8);
  EXPECT_TRUE(e.converged);
  EXPECT_EQ(e.embedded_count(), m.size());
}

TEST(EmbedDisk, Deterministic) {
  const auto p = disk(1e-3, 3);
  const auto m = build_map(p);
  EXPECT_EQ(embed_disk(m, p, 7).positions, embed_disk(m, p, 7).positions);
}

TEST(EmbedDisk, WrongTopologyRejected) {
  const auto p = sample_sphere_excursion(std::sqrt(2.0), 1e-2, 1);
  EXPECT_THROW(embed_disk(build_map(p), p, 1), DomainError);
}

TEST(EmbedPlane, PinsExact) {
  int embedded = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto p = sample_plane(std::sqrt(2.0), 1e-3, -4.0, 4.0, seed);
    const auto m = build_map(p);
    try {
      const auto e = embed_plane(m, p, 2.0);
      const auto root = plane_root_index(p);
      EXPECT_EQ(e.root, root);
      EXPECT_EQ(e.positions[root], Point(0.0, 0.0));
      EXPECT_EQ(e.positions[root + 1000], Point(1.0, 0.0));
      EXPECT_LE(e.residual, 1e-8);
      ++embedded;
    } catch (const DomainError& err) {
      EXPECT_NE(std::string(err.what()).find("horizon too small"), std::string::npos);
    }
  }
  EXPECT_GT(embedded, 0);
}

TEST(EmbedPlane, WindowMustContainHorizon) {
  const auto p = sample_plane(std::sqrt(2.0), 1e-2, -1.0, 1.0, 1);
  EXPECT_THROW(embed_plane(build_map(p), p, 2.0), DomainError);
}

TEST(EmbedPlane, ComponentMatchesFloodFill) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto p = sample_plane(1.2, 0.01, -2.4, 2.4, seed);
    ASSERT_LE(p.size(), 500u);
    const auto m = build_map(p);
    std::size_t lo = 0, hi = m.size() - 1;
    while (p.time(lo) < -1.2) ++lo;
    while (p.time(hi) > 1.2) --hi;
    const auto root = plane_root_index(p);
    const auto r = detail::window_region(m, lo, hi, static_cast<std::uint32_t>(root));
    const auto expect = flood(m, lo, hi, root);
    if (r.interior.empty()) continue;
    EXPECT_EQ(r.interior, expect) << seed;
  }
}

TEST(EmbedPlane, EmbeddedFractionGrowsAsStepShrinks) {
  // fraction of the window's inner vertices that land in V
  std::vector<double> med;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    std::vector<double> frac;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto p = sample_plane(std::sqrt(2.0), eps, -2.0, 2.0, seed);
      const auto m = build_map(p);
      std::size_t lo = 0, hi = m.size() - 1;
      while (p.time(lo) < -1.0) ++lo;
      while (p.time(hi) > 1.0) --hi;
      const auto r = detail::window_region(m, lo, hi, static_cast<std::uint32_t>(plane_root_index(p)));
      std::size_t inner = 0, in_v = 0;
      for (std::size_t v = lo; v <= hi; ++v) {
        bool edge = false;
        for (const auto& nb : m.neighbors(v)) edge = edge || nb.v < lo || nb.v > hi;
        if (edge) continue;
        ++inner;
        if (!r.interior.empty() && r.interior[v]) ++in_v;
      }
      frac.push_back(static_cast<double>(in_v) / static_cast<double>(inner));
    }
    med.push_back(median(frac));
  }
  EXPECT_LT(med[0], med[1]);
  EXPECT_LT(med[1], med[2]);
}

TEST(EmbedSphere, PinsAndCircle) {
  const auto p = sample_sphere_excursion(std::sqrt(2.0), 1e-3, 4);
  const auto m = build_map(p);
  const auto e = embed_sphere(m, p, 0.05, 4);
  EXPECT_EQ(e.positions[e.root], Point(0.0, 0.0));
  ASSERT_EQ(e.marks.size(), 2u);
  EXPECT_EQ(e.positions[e.marks[0]], Point(1.0, 0.0));
  EXPECT_EQ(e.marks[1], 1u);
  for (auto b : e.boundary_order) EXPECT_NEAR(std::abs((e.positions[b] - e.shift) / e.scale), 1.0, 1e-9);
  EXPECT_LE(e.residual, 1e-8);
}

TEST(EmbedSphere, DeltaPreconditions) {
  const auto p = sample_sphere_excursion(std::sqrt(2.0), 1e-2, 1);
  const auto m = build_map(p);
  EXPECT_THROW(embed_sphere(m, p, 0.3, 1), DomainError);
  EXPECT_THROW(embed_sphere(m, p, 0.015, 1), DomainError);
}

TEST(EmbedSphere, WindowUsuallyNonempty) {
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto p = sample_sphere_excursion(std::sqrt(2.0), 1e-4, seed);
    const auto m = build_map(p);
    std::size_t lo = 0, hi = m.size() - 1;
    while (p.time(lo) < 0.05) ++lo;
    while (p.time(hi) > 0.95) --hi;
    // V nonempty: some vertex of the window has all neighbours inside it
    for (std::size_t v = lo; v <= hi; ++v) {
      bool inner = true;
      for (const auto& nb : m.neighbors(v)) inner = inner && nb.v >= lo && nb.v <= hi;
      if (inner) {
        ++ok;
        break;
      }
    }
  }
  EXPECT_GE(ok, 19);
}

TEST(VertexMeasure, UnitMassInsideDisk) {
  const auto p = disk(1e-3, 5);
  const auto m = build_map(p);
  const auto mu = vertex_measure(embed_disk(m, p, 5));
  double total = 0.0;
  for (const auto& w : mu) {
    total += w.mass;
    EXPECT_LE(std::abs(w.z), 1.0 + 1e-12);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(mu.size(), m.size());
}

TEST(SpaceFilling, VisitsEachVertexOnceAlongEdges) {
  const auto p = disk(1e-3, 6);
  const auto m = build_map(p);
  const auto e = embed_disk(m, p, 6);
  const auto c = space_filling_polyline(e);
  ASSERT_EQ(c.points.size(), m.size());
  for (std::size_t v = 0; v < m.size(); ++v) EXPECT_EQ(c.points[v], e.positions[v]);
  for (std::size_t v = 0; v + 1 < m.size(); ++v) EXPECT_GE(m.multiplicity(v, v + 1), 1);
  EXPECT_TRUE(std::is_sorted(c.times.begin(), c.times.end()));
}

TEST(SpaceFilling, MaxJumpShrinksWithN) {
  std::vector<double> med;
  for (double eps : {1e-3, 1e-4, 1e-5}) {
    std::vector<double> jumps;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto p = disk(eps, seed);
      const auto c = space_filling_polyline(embed_disk(build_map(p), p, seed));
      double j = 0.0;
      for (std::size_t i = 1; i < c.points.size(); ++i) j = std::max(j, std::abs(c.points[i] - c.points[i - 1]));
      jumps.push_back(j);
    }
    med.push_back(median(jumps));
  }
  EXPECT_GT(med[0], med[1]);
  EXPECT_GT(med[1], med[2]);
}

TEST(Prokhorov, IdenticalMeasuresAreAtDistanceZero) {
  const auto p = disk(1e-3, 7);
  const auto mu = vertex_measure(embed_disk(build_map(p), p, 7));
  EXPECT_EQ(prokhorov_proxy(mu, mu), 0.0);
}

TEST(Prokhorov, DistinctPointMassesWithinUnitRange) {
  const std::vector<WeightedPoint> a{{{0.0, 0.0}, 1.0}}, b{{{0.9, 0.0}, 1.0}};
  const double d = prokhorov_proxy(a, b);
  EXPECT_GT(d, 0.0);
  EXPECT_LE(d, 1.0);
}

TEST(Prokhorov, ShrinksWhenMassesApproach) {
  const std::vector<WeightedPoint> a{{{0.0, 0.0}, 0.5}, {{1.0, 1.0}, 0.5}};
  const std::vector<WeightedPoint> near{{{0.02, 0.0}, 0.5}, {{1.0, 1.0}, 0.5}};
  const std::vector<WeightedPoint> far{{{0.3, 0.0}, 0.5}, {{1.0, 1.0}, 0.5}};
  EXPECT_LT(prokhorov_proxy(a, near), prokhorov_proxy(a, far));
}
