#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "mcrt/brownian.hpp"
#include "mcrt/error.hpp"

namespace mcrt {

// Which adjacency condition produced an edge. Both means a double edge
// (multiplicity 2); Consecutive is the shared boundary line of adjacent cells.
enum class Side : std::uint8_t { L = 0, R = 1, Both = 2, Consecutive = 3 };

inline const char* to_string(Side s) {
  switch (s) {
    case Side::L: return "L";
    case Side::R: return "R";
    case Side::Both: return "Both";
    case Side::Consecutive: return "Consecutive";
  }
  return "?";
}

struct Edge {
  std::uint32_t u = 0;  // u < v
  std::uint32_t v = 0;
  std::uint8_t mult = 1;
  Side side = Side::Consecutive;

  auto operator<=>(const Edge&) const = default;
};

struct Neighbor {
  std::uint32_t v = 0;
  std::uint8_t mult = 1;
  Side side = Side::Consecutive;

  bool operator==(const Neighbor&) const = default;
};

// Multigraph in CSR form. Neighbor lists are sorted by index; a double edge
// is one entry with mult = 2.
struct MatedCrtMap {
  Topology topology = Topology::Plane;
  double step = 0.0;
  std::vector<double> vertex_times;
  std::vector<std::uint64_t> offsets{0};
  std::vector<Neighbor> adjacency;
  std::vector<std::uint32_t> boundary_order;  // disk only

  std::size_t size() const { return offsets.size() - 1; }

  std::span<const Neighbor> neighbors(std::size_t v) const {
    return {adjacency.data() + offsets[v], adjacency.data() + offsets[v + 1]};
  }

  // Degree counting multiplicity.
  std::size_t degree(std::size_t v) const {
    std::size_t d = 0;
    for (const auto& nb : neighbors(v)) d += nb.mult;
    return d;
  }

  // Number of edges counting multiplicity.
  std::size_t edge_count() const {
    std::size_t twice = 0;
    for (const auto& nb : adjacency) twice += nb.mult;
    return twice / 2;
  }

  std::uint8_t multiplicity(std::size_t u, std::size_t v) const {
    auto nb = neighbors(u);
    auto it = std::lower_bound(nb.begin(), nb.end(), v, [](const Neighbor& a, std::size_t x) { return a.v < x; });
    return (it != nb.end() && it->v == v) ? it->mult : 0;
  }

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(adjacency.size() / 2);
    for (std::size_t u = 0; u < size(); ++u)
      for (const auto& nb : neighbors(u))
        if (nb.v > u) out.push_back({static_cast<std::uint32_t>(u), nb.v, nb.mult, nb.side});
    return out;
  }
};

// CSR map from an edge list (u != v); times default to the vertex index.
inline MatedCrtMap map_from_edges(std::size_t n, std::vector<Edge> edges, Topology topology = Topology::Plane) {
  MatedCrtMap m;
  m.topology = topology;
  m.step = 1.0;
  m.vertex_times.resize(n);
  for (std::size_t i = 0; i < n; ++i) m.vertex_times[i] = static_cast<double>(i);
  std::vector<std::uint64_t> deg(n, 0);
  for (auto& e : edges) {
    if (e.u == e.v) throw DomainError("self-loop in edge list");
    if (e.u > e.v) std::swap(e.u, e.v);
    if (e.v >= n) throw DomainError("edge endpoint out of range");
    ++deg[e.u];
    ++deg[e.v];
  }
  m.offsets.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) m.offsets[i + 1] = m.offsets[i] + deg[i];
  m.adjacency.resize(m.offsets[n]);
  std::vector<std::uint64_t> fill(m.offsets.begin(), m.offsets.end() - 1);
  for (const auto& e : edges) {
    m.adjacency[fill[e.u]++] = {e.v, e.mult, e.side};
    m.adjacency[fill[e.v]++] = {e.u, e.mult, e.side};
  }
  for (std::size_t i = 0; i < n; ++i)
    std::sort(m.adjacency.begin() + static_cast<std::ptrdiff_t>(m.offsets[i]),
              m.adjacency.begin() + static_cast<std::ptrdiff_t>(m.offsets[i + 1]),
              [](const Neighbor& a, const Neighbor& b) { return a.v < b.v; });
  return m;
}

// How interval infima are discretized.
//  CellDip: every cell's infimum lies strictly inside the cell, a random
//    infinitesimal amount below the smaller endpoint; the infimum over
//    [x1, x2 - eps] is the minimum of the cell infima strictly between.
//    Equal grid values (two cells sharing a minimising endpoint) are
//    resolved the way the continuous path resolves them, and the map is a
//    triangulation.
//  GridInclusive: infima are plain minima over the grid points of the closed
//    interval, compared with <= exactly as printed. Shared endpoints produce
//    ties, so the map is generally not planar under the arc drawing.
enum class AdjacencyRule : std::uint8_t { CellDip = 0, GridInclusive = 1 };

namespace detail {

// Totally ordered value with an infinitesimal tie-break (smaller depth = lower).
struct Level {
  double value;
  double depth;
  auto operator<=>(const Level&) const = default;
};

inline constexpr Level kTop{std::numeric_limits<double>::infinity(), 0.0};

struct CoordinateLevels {
  std::vector<Level> cell;     // infimum of the coordinate over each vertex's cell
  std::vector<Level> between;  // sequence whose range-min is the interval infimum
  std::size_t offset = 0;      // interval for pair (i,j) is between[i + offset .. j - 1]
};

inline std::vector<double> cell_depths(std::size_t n, std::uint64_t seed, std::uint64_t stream_id) {
  std::vector<double> d(n, 0.0);
  Rng rng(seed, stream_id);
  for (std::size_t k = 1; k < n; ++k) d[k] = -(1.0 - rng.uniform());  // in [-1, 0)
  return d;
}

// Paths conditioned to stay nonnegative touch 0 only at forced endpoints; a
// cell whose smaller endpoint is such a zero attains its infimum there.
inline CoordinateLevels levels(const std::vector<double>& x, AdjacencyRule rule, const std::vector<double>& depth,
                               bool nonnegative) {
  CoordinateLevels c;
  const std::size_t n = x.size();
  c.cell.resize(n);
  if (n == 0) return c;
  if (rule == AdjacencyRule::GridInclusive) {
    c.cell[0] = {x[0], 0.0};
    for (std::size_t i = 1; i < n; ++i) c.cell[i] = {std::min(x[i - 1], x[i]), 0.0};
    c.between.resize(n);
    for (std::size_t i = 0; i < n; ++i) c.between[i] = {x[i], 0.0};
    c.offset = 0;
  } else {
    // the first vertex's cell is the single point x_0
    c.cell[0] = {x[0], 0.0};
    for (std::size_t i = 1; i < n; ++i) {
      const double v = std::min(x[i - 1], x[i]);
      c.cell[i] = {v, (nonnegative && v == 0.0) ? 0.0 : depth[i]};
    }
    c.between = c.cell;
    c.offset = 1;
  }
  return c;
}

// Monotone-stack sweep for one coordinate. For each j, emits every i <= j-2
// with max(cell_i, cell_j) <= min between[i+offset .. j-1], in decreasing i.
class InfimumSweep {
 public:
  explicit InfimumSweep(CoordinateLevels lv) : lv_(std::move(lv)) {}

  // Advance to vertex j (called with j = 0, 1, 2, ...).
  void advance(std::uint32_t j, std::vector<std::uint32_t>& out) {
    out.clear();
    if (j >= 2) stack_.push_back({j - 2, lv_.cell[j - 2], lv_.offset == 0 ? lv_.between[j - 2] : kTop});
    if (j >= 1 && !stack_.empty()) {
      const Level last = lv_.between[j - 1];
      stack_.back().gapmin = std::min(stack_.back().gapmin, last);
      // an entry leaves for good once a later level drops strictly below its cell level
      while (!stack_.empty() && stack_.back().m > last) {
        const Level g = stack_.back().gapmin;
        stack_.pop_back();
        if (!stack_.empty()) stack_.back().gapmin = std::min(stack_.back().gapmin, g);
      }
    }
    const Level mj = lv_.cell[j];
    Level running = kTop;
    for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) {
      running = std::min(running, it->gapmin);
      if (!(mj <= running)) break;
      out.push_back(it->idx);
    }
  }

 private:
  struct Entry {
    std::uint32_t idx;
    Level m;
    Level gapmin;  // min of between over this entry's stretch up to the next entry (top: up to j-1)
  };
  CoordinateLevels lv_;
  std::vector<Entry> stack_;
};

inline void require_path(const BrownianPath& path) {
  if (path.size() < 2) throw DomainError("path must have at least 2 grid points");
  if (path.L.size() != path.R.size()) throw DomainError("L and R lengths differ");
  if (path.size() > std::numeric_limits<std::uint32_t>::max()) throw SizeError("path too long for 32-bit vertex ids");
}

struct PathLevels {
  CoordinateLevels l, r;
};

inline PathLevels path_levels(const BrownianPath& path, AdjacencyRule rule) {
  std::vector<double> dl, dr;
  if (rule == AdjacencyRule::CellDip) {
    dl = cell_depths(path.size(), path.seed, stream::kTieBreakL);
    dr = cell_depths(path.size(), path.seed, stream::kTieBreakR);
  }
  const bool nonneg = path.topology != Topology::Plane;
  return {levels(path.L, rule, dl, nonneg), levels(path.R, rule, dr, nonneg)};
}

}  // namespace detail

// Disk boundary: vertices whose cell infimum of L is <= inf of L over [x, a],
// in increasing time order (equivalently increasing future-infimum level).
inline std::vector<std::uint32_t> boundary_vertices(const BrownianPath& path,
                                                    AdjacencyRule rule = AdjacencyRule::CellDip) {
  if (path.topology != Topology::Disk) throw DomainError("boundary_vertices requires disk topology");
  detail::require_path(path);
  const auto lv = detail::path_levels(path, rule).l;
  const std::size_t n = path.size();
  // inf over [x_i, a]: the point x_i together with cells i+1..n-1
  std::vector<detail::Level> suffix(n);
  suffix[n - 1] = {path.L[n - 1], 0.0};
  for (std::size_t i = n - 1; i-- > 0;) {
    const detail::Level here{path.L[i], 0.0};
    const detail::Level next_cell = rule == AdjacencyRule::CellDip ? lv.cell[i + 1] : detail::Level{path.L[i + 1], 0.0};
    suffix[i] = std::min({here, next_cell, suffix[i + 1]});
  }
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (lv.cell[i] <= suffix[i]) out.push_back(static_cast<std::uint32_t>(i));
  return out;
}

// Linear-time construction: one monotone-stack sweep per coordinate, merged
// per right endpoint. Work is O(n + #edges).
inline MatedCrtMap build_map(const BrownianPath& path, AdjacencyRule rule = AdjacencyRule::CellDip) {
  detail::require_path(path);
  const auto n = static_cast<std::uint32_t>(path.size());
  auto lv = detail::path_levels(path, rule);
  detail::InfimumSweep sweep_l(std::move(lv.l)), sweep_r(std::move(lv.r));
  std::vector<std::uint32_t> lp, rp;
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n) * 3);
  std::vector<std::uint64_t> deg(n, 0);
  for (std::uint32_t j = 0; j < n; ++j) {
    sweep_l.advance(j, lp);
    sweep_r.advance(j, rp);
    // both lists are decreasing in i; merge
    std::size_t a = 0, b = 0;
    while (a < lp.size() || b < rp.size()) {
      Edge e{0, j, 1, Side::L};
      if (b == rp.size() || (a < lp.size() && lp[a] > rp[b])) {
        e.u = lp[a++];
      } else if (a == lp.size() || rp[b] > lp[a]) {
        e.u = rp[b++];
        e.side = Side::R;
      } else {
        e.u = lp[a];
        e.mult = 2;
        e.side = Side::Both;
        ++a;
        ++b;
      }
      edges.push_back(e);
      ++deg[e.u];
      ++deg[j];
    }
    if (j >= 1) {
      edges.push_back({j - 1, j, 1, Side::Consecutive});
      ++deg[j - 1];
      ++deg[j];
    }
  }

  MatedCrtMap m;
  m.topology = path.topology;
  m.step = path.step;
  m.vertex_times.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) m.vertex_times[i] = path.time(i);
  m.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  for (std::uint32_t i = 0; i < n; ++i) m.offsets[i + 1] = m.offsets[i] + deg[i];
  m.adjacency.resize(m.offsets[n]);
  // Edges arrive grouped by increasing v; within a group u decreases except
  // for the trailing consecutive edge. Lower neighbours of v are written in
  // reverse so each list ends up sorted.
  std::vector<std::uint64_t> lower_end(n), upper_fill(n);
  std::vector<std::uint64_t> lower_count(n, 0);
  for (const auto& e : edges) ++lower_count[e.v];
  for (std::uint32_t i = 0; i < n; ++i) {
    lower_end[i] = m.offsets[i] + lower_count[i];
    upper_fill[i] = lower_end[i];
  }
  std::size_t k = 0;
  while (k < edges.size()) {
    const std::uint32_t v = edges[k].v;
    std::size_t g = k;
    while (g < edges.size() && edges[g].v == v) ++g;
    // group [k, g): consecutive edge (largest u) last, others decreasing u
    std::uint64_t pos = m.offsets[v];
    if (g > k && edges[g - 1].side == Side::Consecutive) {
      // consecutive partner v-1 is the largest lower neighbour
      m.adjacency[lower_end[v] - 1] = {edges[g - 1].u, 1, Side::Consecutive};
      for (std::size_t t = g - 1; t-- > k;) m.adjacency[pos++] = {edges[t].u, edges[t].mult, edges[t].side};
    } else {
      for (std::size_t t = g; t-- > k;) m.adjacency[pos++] = {edges[t].u, edges[t].mult, edges[t].side};
    }
    for (std::size_t t = k; t < g; ++t) {
      const auto& e = edges[t];
      m.adjacency[upper_fill[e.u]++] = {v, e.mult, e.side};
    }
    k = g;
  }
  if (path.topology == Topology::Disk) m.boundary_order = boundary_vertices(path, rule);
  return m;
}

inline constexpr std::size_t kBruteForceLimit = 5000;

// Direct O(n^2) evaluation of the adjacency rule; sorted by (u, v).
inline std::vector<Edge> brute_force_adjacency(const BrownianPath& path,
                                               AdjacencyRule rule = AdjacencyRule::CellDip) {
  detail::require_path(path);
  const std::size_t n = path.size();
  if (n > kBruteForceLimit)
    throw SizeError("brute_force_adjacency limited to n <= " + std::to_string(kBruteForceLimit) + ", got " +
                    std::to_string(n));
  const auto lv = detail::path_levels(path, rule);
  std::vector<Edge> out;
  for (std::size_t i = 0; i < n; ++i) {
    // running infimum over the levels strictly between i and j
    detail::Level inf_l = detail::kTop, inf_r = detail::kTop;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1) {
        out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), 1, Side::Consecutive});
        for (std::size_t k = i + lv.l.offset; k <= i; ++k) {
          inf_l = std::min(inf_l, lv.l.between[k]);
          inf_r = std::min(inf_r, lv.r.between[k]);
        }
        continue;
      }
      inf_l = std::min(inf_l, lv.l.between[j - 1]);
      inf_r = std::min(inf_r, lv.r.between[j - 1]);
      const bool l = std::max(lv.l.cell[i], lv.l.cell[j]) <= inf_l;
      const bool r = std::max(lv.r.cell[i], lv.r.cell[j]) <= inf_r;
      const auto u = static_cast<std::uint32_t>(i), v = static_cast<std::uint32_t>(j);
      if (l && r)
        out.push_back({u, v, 2, Side::Both});
      else if (l)
        out.push_back({u, v, 1, Side::L});
      else if (r)
        out.push_back({u, v, 1, Side::R});
    }
  }
  return out;
}

// counts[d] = number of vertices of degree d (with multiplicity).
inline std::vector<std::size_t> degree_histogram(const MatedCrtMap& map) {
  std::vector<std::size_t> counts;
  for (std::size_t v = 0; v < map.size(); ++v) {
    const std::size_t d = map.degree(v);
    if (d >= counts.size()) counts.resize(d + 1, 0);
    ++counts[d];
  }
  return counts;
}

inline std::vector<std::uint8_t> boundary_mask(const MatedCrtMap& map) {
  std::vector<std::uint8_t> mask(map.size(), 0);
  for (auto b : map.boundary_order) mask[b] = 1;
  return mask;
}

}  // namespace mcrt
