#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "mcrt/brownian.hpp"
#include "mcrt/curve.hpp"
#include "mcrt/embedding.hpp"
#include "mcrt/error.hpp"
#include "mcrt/faces.hpp"
#include "mcrt/map.hpp"

namespace mcrt {

// Sum over unoriented edges, with multiplicity, of |f(x) - f(y)|^2.
inline double dirichlet_energy(const MatedCrtMap& map, std::span<const double> f) {
  if (f.size() != map.size()) throw DomainError("dirichlet_energy: length mismatch");
  double e = 0.0;
  for (std::size_t x = 0; x < map.size(); ++x)
    for (const auto& nb : map.neighbors(x))
      if (nb.v > x) e += nb.mult * (f[x] - f[nb.v]) * (f[x] - f[nb.v]);
  return e;
}

inline double dirichlet_energy(const MatedCrtMap& map, std::span<const Point> f) {
  if (f.size() != map.size()) throw DomainError("dirichlet_energy: length mismatch");
  double e = 0.0;
  for (std::size_t x = 0; x < map.size(); ++x)
    for (const auto& nb : map.neighbors(x))
      if (nb.v > x) e += nb.mult * std::norm(f[x] - f[nb.v]);
  return e;
}

struct TailFit {
  double c0 = 0.0;  // exp(intercept)
  double c1 = 0.0;  // -slope
  double r2 = 0.0;
  std::size_t k_min = 0, k_max = 0;
};

struct TailFitOptions {
  std::size_t k_min = 5;
  std::size_t min_tail = 30;
  std::size_t min_samples = 10'000;
};

// Least-squares line through (k, log P[deg > k]) for k from k_min up to the
// largest k whose tail still holds min_tail samples.
inline TailFit degree_tail_fit(std::span<const std::size_t> histogram, const TailFitOptions& opt = {}) {
  std::size_t total = 0;
  for (auto c : histogram) total += c;
  if (total < opt.min_samples)
    throw StatisticsError("degree_tail_fit: " + std::to_string(total) + " samples, need " +
                          std::to_string(opt.min_samples));
  // tail[k] = #{deg > k}
  std::vector<std::size_t> tail(histogram.size() + 1, 0);
  for (std::size_t k = histogram.size(); k-- > 0;) tail[k] = tail[k + 1] + (k + 1 < histogram.size() ? histogram[k + 1] : 0);
  std::vector<double> xs, ys;
  for (std::size_t k = opt.k_min; k < tail.size() && tail[k] >= opt.min_tail; ++k) {
    xs.push_back(static_cast<double>(k));
    ys.push_back(std::log(static_cast<double>(tail[k]) / static_cast<double>(total)));
  }
  if (xs.size() < 3) throw StatisticsError("degree_tail_fit: degenerate tail, fewer than 3 support points");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  TailFit fit;
  const double slope = sxy / sxx;
  fit.c1 = -slope;
  fit.c0 = std::exp(my - slope * mx);
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.k_min = static_cast<std::size_t>(xs.front());
  fit.k_max = static_cast<std::size_t>(xs.back());
  return fit;
}

// Mean degree over vertices outside the mask (empty mask: all vertices).
inline double mean_interior_degree(const MatedCrtMap& map, std::span<const std::uint8_t> boundary = {}) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t v = 0; v < map.size(); ++v) {
    if (!boundary.empty() && boundary[v]) continue;
    sum += static_cast<double>(map.degree(v));
    ++count;
  }
  if (count == 0) throw StatisticsError("mean_interior_degree: no interior vertices");
  return sum / static_cast<double>(count);
}

struct FaceDiameter {
  double max_diameter = 0.0;
  std::size_t skipped = 0;  // faces touching a vertex without a position
};

inline FaceDiameter max_face_diameter(std::span<const Point> positions, const std::vector<std::vector<std::uint32_t>>& faces,
                                      std::size_t skip_face = static_cast<std::size_t>(-1)) {
  FaceDiameter out;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    if (f == skip_face) continue;
    const auto& face = faces[f];
    bool ok = true;
    for (auto v : face)
      if (v >= positions.size() || !std::isfinite(positions[v].real()) || !std::isfinite(positions[v].imag())) {
        ok = false;
        break;
      }
    if (!ok) {
      ++out.skipped;
      continue;
    }
    for (std::size_t i = 0; i < face.size(); ++i)
      for (std::size_t j = i + 1; j < face.size(); ++j)
        out.max_diameter = std::max(out.max_diameter, std::abs(positions[face[i]] - positions[face[j]]));
  }
  return out;
}

// Disk embedding face sizes, the unbounded face excluded.
inline FaceDiameter max_face_diameter(const TutteEmbedding& emb, const FaceTracing& ft) {
  return max_face_diameter(emb.positions, ft.faces, ft.outer_face);
}

// Prokhorov proxy between the vertex measures of disk embeddings built at two
// resolutions of the same excursion (fine path given; coarse = every k-th point).
inline double two_scale_consistency(const BrownianPath& fine, double eps_fine, double eps_coarse, std::uint64_t seed,
                                    const SolverOptions& opt = {}) {
  if (fine.topology != Topology::Disk) throw DomainError("two_scale_consistency requires a disk path");
  if (std::abs(fine.step - eps_fine) > 1e-9 * eps_fine)
    throw DomainError("two_scale_consistency: eps_fine does not match the path step");
  const double ratio = eps_coarse / eps_fine;
  const auto k = static_cast<std::size_t>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(k)) > 1e-9 || !(k == 1 || k == 2 || k == 4 || k == 8))
    throw DomainError("two_scale_consistency: eps_coarse / eps_fine must be 1, 2, 4 or 8");
  if (k == 1) return 0.0;
  const auto coarse = coarsen(fine, k);
  const auto mf = build_map(fine);
  const auto mc = build_map(coarse);
  const auto ef = embed_disk(mf, fine, seed, opt);
  const auto ec = embed_disk(mc, coarse, seed, opt);
  const auto a = vertex_measure(ef);
  const auto b = vertex_measure(ec);
  return prokhorov_proxy(a, b);
}

struct DiagnosticsReport {
  std::size_t vertices = 0, edges = 0, boundary = 0;
  long long euler_characteristic = 0;
  std::size_t non_triangular_faces = 0;
  double mean_interior_degree = 0.0;
  std::optional<TailFit> tail;
  std::map<std::string, double> energies;
  std::vector<double> max_face_diameters;
  std::vector<double> prokhorov;
  std::map<std::string, bool> pass;

  bool all_passed() const {
    return std::all_of(pass.begin(), pass.end(), [](const auto& kv) { return kv.second; });
  }
};

inline nlohmann::json to_json(const DiagnosticsReport& r) {
  nlohmann::json j;
  j["map"] = {{"vertices", r.vertices}, {"edges", r.edges}, {"boundary", r.boundary}};
  j["euler_characteristic"] = r.euler_characteristic;
  j["non_triangular_faces"] = r.non_triangular_faces;
  j["mean_interior_degree"] = r.mean_interior_degree;
  if (r.tail)
    j["degree_tail"] = {{"c0", r.tail->c0}, {"c1", r.tail->c1}, {"r2", r.tail->r2},
                        {"k_min", r.tail->k_min}, {"k_max", r.tail->k_max}};
  j["energies"] = r.energies;
  j["max_face_diameters"] = r.max_face_diameters;
  j["prokhorov_proxy"] = r.prokhorov;
  j["pass"] = r.pass;
  j["all_passed"] = r.all_passed();
  return j;
}

// Map-level checks; embedding-dependent fields are filled by the caller.
inline DiagnosticsReport diagnose_map(const MatedCrtMap& map) {
  DiagnosticsReport r;
  r.vertices = map.size();
  r.edges = map.edge_count();
  r.boundary = map.boundary_order.size();
  const auto ft = rotation_system_and_faces(map);
  r.euler_characteristic = ft.euler_characteristic;
  r.non_triangular_faces = ft.non_triangular_inner_faces();
  const auto mask = boundary_mask(map);
  r.mean_interior_degree = mean_interior_degree(map, mask);
  try {
    r.tail = degree_tail_fit(degree_histogram(map));
  } catch (const StatisticsError&) {
    r.tail.reset();
  }
  r.pass["euler"] = r.euler_characteristic == 2;
  r.pass["triangular_faces"] = r.non_triangular_faces == 0;
  if (r.tail) r.pass["degree_tail"] = r.tail->c1 > 0.0 && r.tail->r2 >= 0.9;
  return r;
}

}  // namespace mcrt
