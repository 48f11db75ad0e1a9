#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mcrt/brownian.hpp"
#include "mcrt/curve.hpp"
#include "mcrt/error.hpp"
#include "mcrt/faces.hpp"
#include "mcrt/harmonic.hpp"
#include "mcrt/map.hpp"
#include "mcrt/rng.hpp"

namespace mcrt {

inline constexpr std::uint32_t kNoVertex = std::numeric_limits<std::uint32_t>::max();
inline constexpr int kMarkRetries = 100;

struct TutteEmbedding {
  Topology topology = Topology::Disk;
  std::vector<Point> positions;                // NaN outside the embedded subset
  std::uint32_t root = kNoVertex;              // walk start for the disk, pinned to 0 otherwise
  std::vector<std::uint32_t> marks;            // plane: {1-mark}; sphere: {x~, eps}
  Point scale{1.0, 0.0}, shift{0.0, 0.0};      // normalisation z -> scale * z + shift
  std::vector<std::uint8_t> embedded;          // V (all vertices for the disk)
  std::vector<std::uint8_t> on_boundary;       // boundary cycle of V
  std::vector<std::uint32_t> boundary_order;   // counterclockwise, anchor last (placed at 1)
  std::vector<double> boundary_p;              // cumulative exit probabilities
  double residual = 0.0;                       // mean-value residual, worst coordinate
  std::size_t solver_iterations = 0;
  bool converged = true;

  std::size_t embedded_count() const {
    return static_cast<std::size_t>(std::count(embedded.begin(), embedded.end(), std::uint8_t{1}));
  }
};

namespace detail {

inline Point nan_point() {
  const double q = std::numeric_limits<double>::quiet_NaN();
  return {q, q};
}

// Circle placement + harmonic extension on the domain.
inline void tutte_core(const MatedCrtMap& map, TutteEmbedding& emb, std::uint32_t walk_root,
                       std::span<const std::uint8_t> walk_domain, const SolverOptions& base) {
  SolverOptions hit_opt = base;
  hit_opt.domain = walk_domain;
  const auto hit = hitting_probabilities(map, walk_root, emb.boundary_order, hit_opt);
  emb.boundary_p = hit.cumulative;
  std::vector<double> re(emb.boundary_order.size()), im(emb.boundary_order.size());
  for (std::size_t j = 0; j < emb.boundary_order.size(); ++j) {
    const double a = 2.0 * std::numbers::pi * emb.boundary_p[j];
    re[j] = std::cos(a);
    im[j] = std::sin(a);
  }
  // the anchor sits at p = 1
  re.back() = 1.0;
  im.back() = 0.0;
  SolverOptions opt = base;
  opt.domain = emb.embedded;
  const auto fx = solve_dirichlet(map, emb.boundary_order, re, opt);
  const auto fy = solve_dirichlet(map, emb.boundary_order, im, opt);
  emb.positions.assign(map.size(), nan_point());
  for (std::size_t v = 0; v < map.size(); ++v)
    if (emb.embedded[v]) emb.positions[v] = {fx.values[v], fy.values[v]};
  emb.on_boundary.assign(map.size(), 0);
  for (auto b : emb.boundary_order) emb.on_boundary[b] = 1;
  emb.residual = std::max(mean_value_residual(map, fx.values, emb.on_boundary, emb.embedded),
                          mean_value_residual(map, fy.values, emb.on_boundary, emb.embedded));
  emb.solver_iterations = hit.psi.iterations + fx.iterations + fy.iterations;
  emb.converged = hit.psi.converged && fx.converged && fy.converged;
}

inline void apply_normalisation(TutteEmbedding& emb, std::uint32_t zero, std::uint32_t one) {
  const Point p0 = emb.positions[zero], p1 = emb.positions[one];
  if (p0 == p1) throw StructuralError("normalisation: pinned vertices share a position");
  emb.scale = 1.0 / (p1 - p0);
  emb.shift = -emb.scale * p0;
  for (std::size_t v = 0; v < emb.positions.size(); ++v)
    if (emb.embedded[v]) emb.positions[v] = emb.scale * (emb.positions[v] - p0);
  // rounding aside the affine image already satisfies these
  emb.positions[zero] = {0.0, 0.0};
  emb.positions[one] = {1.0, 0.0};
}

// Mean-value residual of the current positions, worst coordinate.
inline double position_residual(const MatedCrtMap& map, const TutteEmbedding& emb) {
  std::vector<double> re(map.size(), 0.0), im(map.size(), 0.0);
  for (std::size_t v = 0; v < map.size(); ++v)
    if (emb.embedded[v]) {
      re[v] = emb.positions[v].real();
      im[v] = emb.positions[v].imag();
    }
  return std::max(mean_value_residual(map, re, emb.on_boundary, emb.embedded),
                  mean_value_residual(map, im, emb.on_boundary, emb.embedded));
}

// Normalisation magnifies the solver residual by |scale|. Polish the
// harmonic extension in the final coordinates, warm-started from the scaled
// solution, then re-pin with the resulting near-identity affine map.
inline void refine_normalised(const MatedCrtMap& map, TutteEmbedding& emb, std::uint32_t zero, std::uint32_t one,
                              const SolverOptions& base) {
  const std::size_t n = map.size();
  std::vector<double> x0(n, 0.0), y0(n, 0.0), bx, by;
  for (std::size_t v = 0; v < n; ++v)
    if (emb.embedded[v]) {
      x0[v] = emb.positions[v].real();
      y0[v] = emb.positions[v].imag();
    }
  for (auto b : emb.boundary_order) {
    bx.push_back(x0[b]);
    by.push_back(y0[b]);
  }
  SolverOptions opt = base;
  opt.domain = emb.embedded;
  opt.initial = x0;
  const auto fx = solve_dirichlet(map, emb.boundary_order, bx, opt);
  opt.initial = y0;
  const auto fy = solve_dirichlet(map, emb.boundary_order, by, opt);
  for (std::size_t v = 0; v < n; ++v)
    if (emb.embedded[v]) emb.positions[v] = {fx.values[v], fy.values[v]};
  const Point p0 = emb.positions[zero], p1 = emb.positions[one];
  const Point a = 1.0 / (p1 - p0);
  for (std::size_t v = 0; v < n; ++v)
    if (emb.embedded[v]) emb.positions[v] = a * (emb.positions[v] - p0);
  emb.scale *= a;
  emb.shift = a * (emb.shift - p0);
  emb.positions[zero] = {0.0, 0.0};
  emb.positions[one] = {1.0, 0.0};
  emb.solver_iterations += fx.iterations + fy.iterations;
  emb.converged = emb.converged && fx.converged && fy.converged;
}

// Plane and sphere: harmonic extension on the unit circle, affine pinning,
// and a polish in the pinned coordinates when the map magnifies.
inline void tutte_normalised(const MatedCrtMap& map, TutteEmbedding& emb, std::uint32_t walk_root,
                             std::span<const std::uint8_t> walk_domain, std::uint32_t zero, std::uint32_t one,
                             const SolverOptions& opt) {
  tutte_core(map, emb, walk_root, walk_domain, opt);
  apply_normalisation(emb, zero, one);
  if (std::abs(emb.scale) > 1.0) refine_normalised(map, emb, zero, one, opt);
  emb.residual = position_residual(map, emb);
}

struct Region {
  std::vector<std::uint8_t> interior;  // the component containing the root
  std::vector<std::uint8_t> boundary;  // vertices of the window boundary adjacent to it
  std::vector<std::uint8_t> domain;    // union
};

// Window [lo, hi] of vertex indices; component of window minus its boundary
// containing root, plus the adjacent boundary vertices.
inline Region window_region(const MatedCrtMap& map, std::size_t lo, std::size_t hi, std::uint32_t root) {
  const std::size_t n = map.size();
  auto in_window = [&](std::size_t v) { return v >= lo && v <= hi; };
  std::vector<std::uint8_t> edge_of_window(n, 0);
  for (std::size_t v = lo; v <= hi; ++v)
    for (const auto& nb : map.neighbors(v))
      if (!in_window(nb.v)) {
        edge_of_window[v] = 1;
        break;
      }
  Region r;
  r.interior.assign(n, 0);
  r.boundary.assign(n, 0);
  if (!in_window(root) || edge_of_window[root]) return r;
  std::vector<std::uint32_t> queue{root};
  r.interior[root] = 1;
  for (std::size_t h = 0; h < queue.size(); ++h)
    for (const auto& nb : map.neighbors(queue[h])) {
      if (!in_window(nb.v)) continue;
      if (edge_of_window[nb.v]) {
        r.boundary[nb.v] = 1;
      } else if (!r.interior[nb.v]) {
        r.interior[nb.v] = 1;
        queue.push_back(nb.v);
      }
    }
  r.domain.resize(n);
  for (std::size_t v = 0; v < n; ++v) r.domain[v] = r.interior[v] | r.boundary[v];
  return r;
}

}  // namespace detail

// Cyclic order of the region boundary: walk the boundary of the union of faces
// that touch the interior, with the region on the same side as the disk's
// inner faces, so that chronological disk boundaries run counterclockwise.
// The cycle through the chronologically last boundary vertex is used; it is
// rotated so that vertex comes last. Boundary vertices missed by that cycle
// (pinched pockets) are inserted before the anchor in time order.
inline std::vector<std::uint32_t> region_boundary_cycle(const FaceTracing& ft, std::span<const std::uint8_t> interior,
                                                        std::span<const std::uint8_t> boundary) {
  const std::size_t darts = ft.dart_tail.size();
  std::vector<std::uint8_t> face_in(ft.faces.size(), 0);
  for (std::size_t f = 0; f < ft.faces.size(); ++f)
    for (auto v : ft.faces[f])
      if (interior[v]) {
        face_in[f] = 1;
        break;
      }
  auto is_edge = [&](std::size_t d) { return face_in[ft.dart_face[d]] && !face_in[ft.dart_face[d ^ 1U]]; };
  std::vector<std::uint32_t> pos(darts);
  for (std::size_t v = 0; v + 1 < ft.rotation_offsets.size(); ++v)
    for (auto i = ft.rotation_offsets[v]; i < ft.rotation_offsets[v + 1]; ++i)
      pos[ft.rotation[i]] = static_cast<std::uint32_t>(i - ft.rotation_offsets[v]);
  auto cw = [&](std::size_t d) {
    const auto v = ft.dart_tail[d];
    const auto deg = ft.rotation_offsets[v + 1] - ft.rotation_offsets[v];
    return static_cast<std::size_t>(ft.rotation[ft.rotation_offsets[v] + (pos[d] + deg - 1) % deg]);
  };
  std::uint32_t anchor = kNoVertex;
  for (std::size_t v = 0; v < boundary.size(); ++v)
    if (boundary[v]) anchor = static_cast<std::uint32_t>(v);
  if (anchor == kNoVertex) return {};

  std::size_t start = darts;
  for (auto i = ft.rotation_offsets[anchor]; i < ft.rotation_offsets[anchor + 1]; ++i)
    if (is_edge(ft.rotation[i])) {
      start = ft.rotation[i];
      break;
    }
  std::vector<std::uint32_t> walk;
  if (start < darts) {
    std::size_t d = start, guard = 0;
    do {
      walk.push_back(ft.dart_tail[d]);
      std::size_t e = cw(d ^ 1U);
      while (!is_edge(e)) {
        e = cw(e);
        if (++guard > 4 * darts) throw InvariantViolation("region boundary walk did not close");
      }
      d = e;
      if (++guard > 4 * darts) throw InvariantViolation("region boundary walk did not close");
    } while (d != start);
  }
  // Disk convention (inner faces on the walk's side) gives decreasing time
  // along the walk; reverse to run counterclockwise in chronological sense.
  std::reverse(walk.begin(), walk.end());
  std::vector<std::uint8_t> seen(boundary.size(), 0);
  std::vector<std::uint32_t> out;
  // walk is cyclic; begin right after the anchor
  const auto at = std::find(walk.begin(), walk.end(), anchor);
  std::rotate(walk.begin(), at, walk.end());
  for (std::size_t k = 1; k < walk.size(); ++k) {
    const auto v = walk[k];
    if (boundary[v] && !seen[v] && v != anchor) {
      seen[v] = 1;
      out.push_back(v);
    }
  }
  for (std::size_t v = 0; v < boundary.size(); ++v)
    if (boundary[v] && !seen[v] && v != anchor) out.push_back(static_cast<std::uint32_t>(v));
  out.push_back(anchor);
  return out;
}

// Disk: root from a uniform time, boundary in chronological order on the circle.
inline TutteEmbedding embed_disk(const MatedCrtMap& map, const BrownianPath& path, std::uint64_t seed,
                                 const SolverOptions& opt = {}) {
  if (map.topology != Topology::Disk || path.topology != Topology::Disk)
    throw DomainError("embed_disk requires disk topology");
  if (map.size() != path.size()) throw DomainError("embed_disk: map and path sizes differ");
  TutteEmbedding emb;
  emb.topology = Topology::Disk;
  emb.boundary_order = map.boundary_order;
  const auto mask = boundary_mask(map);
  Rng rng(seed, stream::kRoot);
  for (int attempt = 0; attempt < kMarkRetries && emb.root == kNoVertex; ++attempt) {
    const double t = path.start_time + rng.uniform() * path.total_time;
    const auto x = static_cast<std::uint32_t>(path.cell_of(t));
    if (!mask[x]) emb.root = x;
  }
  if (emb.root == kNoVertex) throw SamplingError("embed_disk: root kept landing on the boundary", kMarkRetries);
  emb.embedded.assign(map.size(), 1);
  detail::tutte_core(map, emb, emb.root, {}, opt);
  return emb;
}

// Plane: window [-N, N] around the root cell at time eps*theta; pinned so the
// root maps to 0 and the vertex floor(1/eps) cells later maps to 1.
inline TutteEmbedding embed_plane(const MatedCrtMap& map, const BrownianPath& path, double horizon,
                                  const SolverOptions& opt = {}) {
  if (map.topology != Topology::Plane || path.topology != Topology::Plane)
    throw DomainError("embed_plane requires plane topology");
  if (map.size() != path.size()) throw DomainError("embed_plane: map and path sizes differ");
  if (!(horizon > 0.0)) throw DomainError("embed_plane: horizon must be positive");
  const std::size_t n = map.size();
  if (path.time(0) > -horizon || path.time(n - 1) < horizon)
    throw DomainError("embed_plane: sampled window does not contain [-N, N]");
  std::size_t lo = 0, hi = n - 1;
  while (path.time(lo) < -horizon) ++lo;
  while (path.time(hi) > horizon) --hi;
  const auto root = static_cast<std::uint32_t>(plane_root_index(path));
  const auto one = static_cast<std::uint32_t>(root + static_cast<std::size_t>(std::floor(1.0 / path.step)));
  auto region = detail::window_region(map, lo, hi, root);
  for (std::size_t v = root; v <= one; ++v)
    if (v >= n || region.domain.empty() || !region.domain[v])
      throw DomainError("embed_plane: horizon too small, [0, 1] is not inside the embedded component");

  TutteEmbedding emb;
  emb.topology = Topology::Plane;
  emb.root = root;
  emb.marks = {one};
  emb.embedded = region.domain;
  const auto ft = rotation_system_and_faces(map);
  emb.boundary_order = region_boundary_cycle(ft, region.interior, region.boundary);
  detail::tutte_normalised(map, emb, root, region.domain, root, one, opt);
  return emb;
}

// Sphere: window [delta, 1 - delta]; marks from two uniform times; the
// boundary law is that of the walk from the vertex at time eps.
inline TutteEmbedding embed_sphere(const MatedCrtMap& map, const BrownianPath& path, double delta, std::uint64_t seed,
                                   const SolverOptions& opt = {}) {
  if (map.topology != Topology::Sphere || path.topology != Topology::Sphere)
    throw DomainError("embed_sphere requires sphere topology");
  if (map.size() != path.size()) throw DomainError("embed_sphere: map and path sizes differ");
  if (!(delta > 0.0 && delta < 0.25)) throw DomainError("embed_sphere: delta must lie in (0, 1/4)");
  const std::size_t n = map.size();
  if (!(delta > 2.0 * path.step)) throw DomainError("embed_sphere: delta must exceed two grid steps");
  std::size_t lo = 0, hi = n - 1;
  while (path.time(lo) < delta - 1e-12) ++lo;
  while (path.time(hi) > 1.0 - delta + 1e-12) --hi;

  Rng rng(seed, stream::kRoot);
  Rng rng_mark(seed, stream::kMark);
  detail::Region region;
  std::uint32_t x = kNoVertex, x2 = kNoVertex;
  for (int attempt = 0; attempt < kMarkRetries; ++attempt) {
    const auto a = static_cast<std::uint32_t>(path.cell_of(path.start_time + rng.uniform() * path.total_time));
    const auto b = static_cast<std::uint32_t>(path.cell_of(path.start_time + rng_mark.uniform() * path.total_time));
    if (a == b) continue;
    region = detail::window_region(map, lo, hi, a);
    if (region.domain.empty() || !region.interior[a] || !region.domain[b]) continue;
    x = a;
    x2 = b;
    break;
  }
  if (x == kNoVertex) throw SamplingError("embed_sphere: marks kept falling outside the embedded component", kMarkRetries);

  TutteEmbedding emb;
  emb.topology = Topology::Sphere;
  emb.root = x;
  emb.marks = {x2, 1};
  emb.embedded = region.domain;
  const auto ft = rotation_system_and_faces(map);
  emb.boundary_order = region_boundary_cycle(ft, region.interior, region.boundary);
  std::vector<std::uint8_t> outside(n, 1);
  for (std::size_t v = 0; v < n; ++v)
    if (region.interior[v]) outside[v] = 0;
  detail::tutte_normalised(map, emb, 1, outside, x, x2, opt);
  return emb;
}

// Mass 1/n on each embedded vertex.
inline std::vector<WeightedPoint> vertex_measure(const TutteEmbedding& emb) {
  const std::size_t k = emb.embedded_count();
  std::vector<WeightedPoint> out;
  out.reserve(k);
  for (std::size_t v = 0; v < emb.positions.size(); ++v)
    if (emb.embedded[v]) out.push_back({emb.positions[v], 1.0 / static_cast<double>(k)});
  return out;
}

// Embedded vertices in time order, stamped index / size.
inline EmbeddedCurve space_filling_polyline(const TutteEmbedding& emb) {
  EmbeddedCurve c;
  c.kind = CurveKind::SpaceFilling;
  const double n = static_cast<double>(emb.positions.size());
  for (std::size_t v = 0; v < emb.positions.size(); ++v)
    if (emb.embedded[v]) {
      c.points.push_back(emb.positions[v]);
      c.times.push_back(static_cast<double>(v) / n);
    }
  return c;
}

struct ProkhorovOptions {
  int box_levels = 8;    // dyadic boxes of side 2^-k for k = 0..box_levels
  int grid_levels = 10;  // fine grid 2^grid_levels per side, used to grow boxes
  int bisection_steps = 40;
};

// Upper-bound proxy for the Prokhorov distance: the smallest r with
// mu1(B) <= mu2(B^{+r}) + r and mu2(B) <= mu1(B^{+r}) + r for every dyadic
// box B of the common bounding square, where B^{+r} is B grown by r on each
// side (rounded outward to the fine grid). Feasibility is monotone in r, so r
// is found by bisection.
inline double prokhorov_proxy(std::span<const WeightedPoint> mu1, std::span<const WeightedPoint> mu2,
                              const ProkhorovOptions& opt = {}) {
  if (mu1.empty() || mu2.empty()) throw DomainError("prokhorov_proxy: empty measure");
  if (opt.box_levels > opt.grid_levels) throw DomainError("prokhorov_proxy: box levels exceed grid levels");
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  for (auto s : {mu1, mu2})
    for (const auto& p : s) {
      if (!std::isfinite(p.z.real()) || !std::isfinite(p.z.imag())) throw DomainError("prokhorov_proxy: non-finite point");
      x0 = std::min(x0, p.z.real());
      x1 = std::max(x1, p.z.real());
      y0 = std::min(y0, p.z.imag());
      y1 = std::max(y1, p.z.imag());
    }
  const double side = std::max({x1 - x0, y1 - y0, 1e-12}) * (1.0 + 1e-9);
  const int g = 1 << opt.grid_levels;
  const double h = side / g;
  const auto w = static_cast<std::size_t>(g + 1);
  auto grid = [&](std::span<const WeightedPoint> s) {
    std::vector<double> c(w * w, 0.0);
    for (const auto& p : s) {
      const int i = std::min(g - 1, static_cast<int>((p.z.real() - x0) / h));
      const int j = std::min(g - 1, static_cast<int>((p.z.imag() - y0) / h));
      c[static_cast<std::size_t>(i + 1) * w + static_cast<std::size_t>(j + 1)] += p.mass;
    }
    for (std::size_t i = 1; i < w; ++i)
      for (std::size_t j = 1; j < w; ++j) c[i * w + j] += c[(i - 1) * w + j] + c[i * w + j - 1] - c[(i - 1) * w + j - 1];
    return c;
  };
  const auto c1 = grid(mu1), c2 = grid(mu2);
  // mass in fine cells [i0, i1) x [j0, j1), clamped to the grid
  auto box = [&](const std::vector<double>& c, int i0, int i1, int j0, int j1) {
    const auto a0 = static_cast<std::size_t>(std::max(i0, 0)), a1 = static_cast<std::size_t>(std::min(i1, g));
    const auto b0 = static_cast<std::size_t>(std::max(j0, 0)), b1 = static_cast<std::size_t>(std::min(j1, g));
    return c[a1 * w + b1] - c[a0 * w + b1] - c[a1 * w + b0] + c[a0 * w + b0];
  };
  auto worst_excess = [&](int grow) {
    double worst = 0.0;
    for (int lev = 0; lev <= opt.box_levels; ++lev) {
      const int cells = 1 << lev, width = g / cells;
      for (int a = 0; a < cells; ++a)
        for (int b = 0; b < cells; ++b) {
          const int i0 = a * width, i1 = i0 + width, j0 = b * width, j1 = j0 + width;
          const double m1 = box(c1, i0, i1, j0, j1), m2 = box(c2, i0, i1, j0, j1);
          if (m1 == 0.0 && m2 == 0.0) continue;
          const double g1 = box(c1, i0 - grow, i1 + grow, j0 - grow, j1 + grow);
          const double g2 = box(c2, i0 - grow, i1 + grow, j0 - grow, j1 + grow);
          worst = std::max({worst, m1 - g2, m2 - g1});
        }
    }
    return worst;
  };
  auto feasible = [&](double r) { return worst_excess(static_cast<int>(std::ceil(r / h - 1e-12))) <= r; };
  if (worst_excess(0) <= 1e-12) return 0.0;
  double lo = 0.0, hi = 1.0;
  if (!feasible(hi)) return 1.0;
  for (int k = 0; k < opt.bisection_steps; ++k) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace mcrt
