#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcrt/map.hpp"

namespace mcrt {

// Planar structure of a mated-CRT map: vertices on the real line in time
// order, consecutive vertices joined by line segments, L-edges drawn as arcs
// above the line and R-edges as arcs below. A double edge contributes one arc
// on each side. Darts come in pairs: dart 2k runs low->high index, 2k+1 back.
struct FaceTracing {
  std::vector<std::uint32_t> dart_tail;
  std::vector<std::uint32_t> dart_head;
  std::vector<std::uint64_t> rotation_offsets;  // CSR over vertices
  std::vector<std::uint32_t> rotation;          // darts leaving v, counterclockwise from east
  std::vector<std::uint32_t> dart_face;
  std::vector<std::vector<std::uint32_t>> faces;  // vertex cycles (dart tails in order)
  std::size_t outer_face = 0;
  std::size_t self_loops = 0;
  long long euler_characteristic = 0;

  std::size_t vertex_count() const { return rotation_offsets.size() - 1; }
  std::size_t edge_count() const { return dart_tail.size() / 2; }

  // Faces other than the outer one whose boundary walk has length != 3.
  std::size_t non_triangular_inner_faces() const {
    std::size_t bad = 0;
    for (std::size_t f = 0; f < faces.size(); ++f)
      if (f != outer_face && faces[f].size() != 3) ++bad;
    return bad;
  }
};

class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline FaceTracing rotation_system_and_faces(const MatedCrtMap& map) {
  const std::size_t n = map.size();
  FaceTracing ft;
  enum Arc : std::uint8_t { Segment, Above, Below };
  std::vector<Arc> dart_arc;
  for (std::size_t u = 0; u < n; ++u) {
    for (const auto& nb : map.neighbors(u)) {
      if (nb.v == u) {
        ++ft.self_loops;
        continue;
      }
      if (nb.v < u) continue;
      auto add = [&](Arc a) {
        ft.dart_tail.push_back(static_cast<std::uint32_t>(u));
        ft.dart_head.push_back(nb.v);
        ft.dart_tail.push_back(nb.v);
        ft.dart_head.push_back(static_cast<std::uint32_t>(u));
        dart_arc.push_back(a);
        dart_arc.push_back(a);
      };
      switch (nb.side) {
        case Side::Consecutive:
          if (nb.v != u + 1) throw InvariantViolation("consecutive edge between non-adjacent grid vertices");
          for (int k = 0; k < nb.mult; ++k) add(Segment);
          break;
        case Side::L:
          for (int k = 0; k < nb.mult; ++k) add(Above);
          break;
        case Side::R:
          for (int k = 0; k < nb.mult; ++k) add(Below);
          break;
        case Side::Both:
          if (nb.mult != 2) throw InvariantViolation("double edge without multiplicity 2");
          add(Above);
          add(Below);
          break;
      }
    }
  }
  if (ft.self_loops) throw InvariantViolation("self-loop in mated-CRT map");

  // counterclockwise from east: segment to v+1, arcs above to the right
  // (inner first), arcs above to the left (outer first), segment to v-1,
  // arcs below to the left (inner first), arcs below to the right (outer first)
  const std::size_t darts = ft.dart_tail.size();
  struct Key {
    std::uint32_t dart;
    int sector;
    long long order;
  };
  std::vector<std::uint64_t> count(n + 1, 0);
  for (std::size_t d = 0; d < darts; ++d) ++count[ft.dart_tail[d] + 1];
  for (std::size_t v = 0; v < n; ++v) count[v + 1] += count[v];
  ft.rotation_offsets = count;
  std::vector<Key> keys(darts);
  std::vector<std::uint64_t> fill(count.begin(), count.end() - 1);
  for (std::size_t d = 0; d < darts; ++d) {
    const long long v = ft.dart_tail[d], w = ft.dart_head[d];
    Key k{static_cast<std::uint32_t>(d), 0, 0};
    switch (dart_arc[d]) {
      case Segment: k.sector = w > v ? 0 : 3; break;
      case Above:
        k.sector = w > v ? 1 : 2;
        k.order = w;  // ascending target in both upper sectors
        break;
      case Below:
        k.sector = w < v ? 4 : 5;
        k.order = -w;  // descending target in both lower sectors
        break;
    }
    keys[fill[v]++] = k;
  }
  ft.rotation.resize(darts);
  std::vector<std::uint32_t> pos(darts);
  for (std::size_t v = 0; v < n; ++v) {
    auto b = keys.begin() + static_cast<std::ptrdiff_t>(ft.rotation_offsets[v]);
    auto e = keys.begin() + static_cast<std::ptrdiff_t>(ft.rotation_offsets[v + 1]);
    std::sort(b, e, [](const Key& x, const Key& y) {
      return x.sector != y.sector ? x.sector < y.sector : x.order < y.order;
    });
    for (auto it = b; it != e; ++it) {
      const auto idx = static_cast<std::size_t>(it - keys.begin());
      ft.rotation[idx] = it->dart;
      pos[it->dart] = static_cast<std::uint32_t>(idx - ft.rotation_offsets[v]);
    }
  }

  // Faces: after traversing d = (a->b), leave b by the dart immediately
  // clockwise of (b->a). The face of dart x contains the corner between x and
  // its counterclockwise successor at tail(x).
  constexpr auto kUnset = static_cast<std::uint32_t>(-1);
  ft.dart_face.assign(darts, kUnset);
  for (std::size_t start = 0; start < darts; ++start) {
    if (ft.dart_face[start] != kUnset) continue;
    const auto f = static_cast<std::uint32_t>(ft.faces.size());
    ft.faces.emplace_back();
    std::size_t d = start;
    std::size_t guard = 0;
    do {
      if (ft.dart_face[d] != kUnset) throw InvariantViolation("face walk re-entered a traced dart");
      ft.dart_face[d] = f;
      ft.faces.back().push_back(ft.dart_tail[d]);
      const std::size_t back = d ^ 1U;
      const std::uint32_t b = ft.dart_head[d];
      const std::uint64_t deg = ft.rotation_offsets[b + 1] - ft.rotation_offsets[b];
      const std::uint64_t p = pos[back];
      d = ft.rotation[ft.rotation_offsets[b] + (p + deg - 1) % deg];
      if (++guard > darts) throw InvariantViolation("face walk did not close");
    } while (d != start);
  }

  // The unbounded face holds the westward corner at vertex 0: between its last
  // upper-half dart and its first lower-half dart.
  if (n > 0 && ft.rotation_offsets[1] > 0) {
    std::size_t upper = 0;
    for (std::uint64_t i = ft.rotation_offsets[0]; i < ft.rotation_offsets[1]; ++i)
      if (dart_arc[ft.rotation[i]] != Below) ++upper;
    const std::uint64_t deg = ft.rotation_offsets[1];
    const std::uint64_t idx = upper == 0 ? deg - 1 : upper - 1;
    ft.outer_face = ft.dart_face[ft.rotation[idx]];
  }
  ft.euler_characteristic = static_cast<long long>(n) - static_cast<long long>(ft.edge_count()) +
                            static_cast<long long>(ft.faces.size());
  return ft;
}

}  // namespace mcrt
