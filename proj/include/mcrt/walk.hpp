#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcrt/curve.hpp"
#include "mcrt/embedding.hpp"
#include "mcrt/error.hpp"
#include "mcrt/map.hpp"
#include "mcrt/parallel.hpp"
#include "mcrt/rng.hpp"

namespace mcrt {

inline constexpr std::uint64_t kDefaultWalkCap = 100'000'000;

struct StopRule {
  enum class Kind { Boundary, StepCount, ExitRadius };
  Kind kind = Kind::StepCount;
  std::size_t steps = 0;                      // StepCount
  std::span<const std::uint8_t> boundary{};   // Boundary: stop on entering a flagged vertex
  std::span<const Point> positions{};         // ExitRadius: stop once |position| >= radius
  double radius = 0.0;
  std::size_t limit = 0;  // Boundary / ExitRadius: also stop after this many steps (0: no limit)

  static StopRule at_boundary(std::span<const std::uint8_t> mask) {
    StopRule s;
    s.kind = Kind::Boundary;
    s.boundary = mask;
    return s;
  }
  static StopRule after(std::size_t n) {
    StopRule s;
    s.kind = Kind::StepCount;
    s.steps = n;
    return s;
  }
  static StopRule exit_radius(std::span<const Point> pos, double r) {
    StopRule s;
    s.kind = Kind::ExitRadius;
    s.positions = pos;
    s.radius = r;
    return s;
  }
};

// Flattened transition table: each neighbour repeated by multiplicity, so a
// uniform slot is a step with probability mult/deg.
class Walker {
 public:
  explicit Walker(const MatedCrtMap& map) : offsets_(map.size() + 1, 0) {
    for (std::size_t v = 0; v < map.size(); ++v) offsets_[v + 1] = offsets_[v] + map.degree(v);
    slots_.reserve(offsets_.back());
    for (std::size_t v = 0; v < map.size(); ++v)
      for (const auto& nb : map.neighbors(v))
        for (int k = 0; k < nb.mult; ++k) slots_.push_back(nb.v);
  }

  std::size_t size() const { return offsets_.size() - 1; }

  std::uint32_t step(std::uint32_t v, Rng& rng) const {
    const std::uint64_t deg = offsets_[v + 1] - offsets_[v];
    if (deg == 0) throw StructuralError("walk reached an isolated vertex");
    return slots_[offsets_[v] + rng.below(deg)];
  }

  bool stopped(const StopRule& rule, std::uint32_t v, std::size_t taken) const {
    if (rule.limit && taken >= rule.limit) return true;
    switch (rule.kind) {
      case StopRule::Kind::Boundary: return rule.boundary[v] != 0;
      case StopRule::Kind::StepCount: return taken >= rule.steps;
      case StopRule::Kind::ExitRadius: return std::abs(rule.positions[v]) >= rule.radius;
    }
    return true;
  }

  void check(const StopRule& rule, std::uint32_t start) const {
    if (start >= size()) throw DomainError("walk: start vertex out of range");
    if (rule.kind == StopRule::Kind::Boundary && rule.boundary.size() != size())
      throw DomainError("walk: boundary mask length mismatch");
    if (rule.kind == StopRule::Kind::ExitRadius) {
      if (rule.positions.size() != size()) throw DomainError("walk: positions length mismatch");
      if (!(rule.radius > 0.0)) throw DomainError("walk: exit radius must be positive");
    }
  }

  // Full trajectory including the start.
  std::vector<std::uint32_t> run(std::uint32_t start, const StopRule& rule, Rng& rng,
                                 std::uint64_t cap = kDefaultWalkCap) const {
    check(rule, start);
    std::vector<std::uint32_t> path{start};
    std::uint32_t v = start;
    while (!stopped(rule, v, path.size() - 1)) {
      if (path.size() - 1 >= cap) throw BudgetError("walk exceeded " + std::to_string(cap) + " steps");
      v = step(v, rng);
      path.push_back(v);
    }
    return path;
  }

  // Only the final vertex; no trajectory is stored.
  std::uint32_t endpoint(std::uint32_t start, const StopRule& rule, Rng& rng, std::uint64_t cap = kDefaultWalkCap) const {
    std::uint32_t v = start;
    std::uint64_t taken = 0;
    while (!stopped(rule, v, taken)) {
      if (taken >= cap) throw BudgetError("walk exceeded " + std::to_string(cap) + " steps");
      v = step(v, rng);
      ++taken;
    }
    return v;
  }

 private:
  std::vector<std::uint64_t> offsets_;
  std::vector<std::uint32_t> slots_;
};

inline std::vector<std::uint32_t> simulate_walk(const MatedCrtMap& map, std::uint32_t start, const StopRule& rule,
                                                std::uint64_t seed, std::uint64_t cap = kDefaultWalkCap) {
  Walker w(map);
  Rng rng(seed, stream::kWalk);
  return w.run(start, rule, rng, cap);
}

// Final vertices of `walks` independent walks; walk k uses stream kWalk + k,
// so the result does not depend on the thread count.
inline std::vector<std::uint32_t> walk_endpoints(const MatedCrtMap& map, std::uint32_t start, const StopRule& rule,
                                                 std::size_t walks, std::uint64_t seed,
                                                 std::uint64_t cap = kDefaultWalkCap, unsigned workers = worker_count()) {
  Walker w(map);
  w.check(rule, start);
  std::vector<std::uint32_t> out(walks);
  std::vector<std::string> failure(std::max(1u, workers));
  parallel_blocks(
      walks,
      [&](unsigned worker, std::size_t b, std::size_t e) {
        try {
          for (std::size_t k = b; k < e; ++k) {
            Rng rng(seed, stream::kWalk + k);
            out[k] = w.endpoint(start, rule, rng, cap);
          }
        } catch (const std::exception& ex) {
          failure[worker] = ex.what();
        }
      },
      workers);
  for (const auto& f : failure)
    if (!f.empty()) throw BudgetError(f);
  return out;
}

inline EmbeddedCurve embed_walk(std::span<const std::uint32_t> walk, const TutteEmbedding& emb) {
  EmbeddedCurve c;
  c.kind = CurveKind::Walk;
  c.points.reserve(walk.size());
  c.times.reserve(walk.size());
  for (std::size_t k = 0; k < walk.size(); ++k) {
    const auto v = walk[k];
    if (v >= emb.positions.size() || !emb.embedded[v])
      throw DomainError("embed_walk: vertex " + std::to_string(v) + " is not embedded");
    c.points.push_back(emb.positions[v]);
    c.times.push_back(static_cast<double>(k));
  }
  return c;
}

// Every k-th point plus the last one.
inline EmbeddedCurve decimate(const EmbeddedCurve& c, std::size_t k) {
  if (k == 0) throw DomainError("decimate: factor must be positive");
  EmbeddedCurve out;
  out.kind = c.kind;
  for (std::size_t i = 0; i < c.size(); i += k) {
    out.points.push_back(c.points[i]);
    out.times.push_back(c.times[i]);
  }
  if (c.size() && (c.size() - 1) % k != 0) {
    out.points.push_back(c.points.back());
    out.times.push_back(c.times.back());
  }
  return out;
}

// Planar Brownian motion sampled at `steps` increments, variance sigma2 per
// coordinate per step.
inline EmbeddedCurve brownian_curve(std::size_t steps, double sigma2, std::uint64_t seed, Point start = {0.0, 0.0}) {
  if (!(sigma2 >= 0.0)) throw DomainError("brownian_curve: variance must be nonnegative");
  EmbeddedCurve c;
  c.kind = CurveKind::Brownian;
  Rng rng(seed, stream::kPath);
  const double s = std::sqrt(sigma2);
  Point z = start;
  c.points.push_back(z);
  c.times.push_back(0.0);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double dx = s * rng.normal();
    const double dy = s * rng.normal();
    z += Point{dx, dy};
    c.points.push_back(z);
    c.times.push_back(static_cast<double>(k));
  }
  return c;
}

// Mean squared increment per coordinate.
inline double per_step_variance(const EmbeddedCurve& c) {
  if (c.size() < 2) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) acc += std::norm(c.points[i] - c.points[i - 1]);
  return acc / (2.0 * static_cast<double>(c.size() - 1));
}

inline constexpr std::size_t kFrechetGuard = 100'000'000;

// Discrete Frechet distance between the vertex sequences: the infimum over
// monotone couplings of the largest matched distance.
inline double cmp_distance(const EmbeddedCurve& a, const EmbeddedCurve& b, std::size_t guard = kFrechetGuard) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0 || m == 0) throw DomainError("cmp_distance: empty curve");
  if (n > guard / m) throw SizeError("cmp_distance: " + std::to_string(n) + " x " + std::to_string(m) + " exceeds guard");
  std::vector<double> row(m);
  for (std::size_t i = 0; i < n; ++i) {
    double diag = 0.0;  // row[j-1] of the previous row
    for (std::size_t j = 0; j < m; ++j) {
      const double d = std::abs(a.points[i] - b.points[j]);
      double best;
      if (i == 0 && j == 0)
        best = 0.0;
      else if (i == 0)
        best = row[j - 1];
      else if (j == 0)
        best = row[0];
      else
        best = std::min({diag, row[j], row[j - 1]});
      diag = row[j];
      row[j] = std::max(d, best);
    }
  }
  return row[m - 1];
}

namespace detail {

// Prefix of the curve up to its first exit from the open ball B_r(0): kept
// vertex count and the interpolated exit point (if it exits).
struct Stopped {
  std::size_t kept = 1;
  std::optional<Point> exit;
};

inline Stopped stop_at_radius(const EmbeddedCurve& c, double r) {
  Stopped s;
  if (std::abs(c.points[0]) >= r) return s;  // starts outside: the single start point
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (std::abs(c.points[i]) >= r) {
      const Point p = c.points[i - 1], q = c.points[i];
      // solve |p + t (q - p)| = r for t in (0, 1]
      const Point d = q - p;
      const double A = std::norm(d), B = 2.0 * (p.real() * d.real() + p.imag() * d.imag()), C = std::norm(p) - r * r;
      const double t = std::clamp((-B + std::sqrt(std::max(0.0, B * B - 4 * A * C))) / (2 * A), 0.0, 1.0);
      s.kept = i;
      s.exit = p + t * d;
      return s;
    }
  }
  s.kept = c.size();
  return s;
}

}  // namespace detail

inline constexpr std::size_t kLocTableGuard = 16'000'000;

// Local variant: integral over r >= 1 of exp(-r) * min(1, d(curves stopped on
// leaving B_r(0))), trapezoid rule on r_grid (which must start at 1 and
// increase) plus the tail exp(-r_last) * min(1, d at r_last).
inline double cmp_distance_loc(const EmbeddedCurve& a, const EmbeddedCurve& b, std::span<const double> r_grid,
                               std::size_t guard = kLocTableGuard) {
  if (r_grid.empty()) throw DomainError("cmp_distance_loc: empty r grid");
  if (a.size() == 0 || b.size() == 0) throw DomainError("cmp_distance_loc: empty curve");
  for (std::size_t k = 1; k < r_grid.size(); ++k)
    if (!(r_grid[k] > r_grid[k - 1])) throw DomainError("cmp_distance_loc: r grid must increase");
  if (r_grid[0] < 1.0) throw DomainError("cmp_distance_loc: r grid must start at or above 1");
  const std::size_t n = a.size(), m = b.size();
  if (n > guard / m) throw SizeError("cmp_distance_loc: " + std::to_string(n) + " x " + std::to_string(m) + " exceeds guard");
  // full coupling table on the original vertices
  std::vector<double> dp(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double d = std::abs(a.points[i] - b.points[j]);
      double best;
      if (i == 0 && j == 0)
        best = 0.0;
      else if (i == 0)
        best = dp[j - 1];
      else if (j == 0)
        best = dp[(i - 1) * m];
      else
        best = std::min({dp[(i - 1) * m + j - 1], dp[(i - 1) * m + j], dp[i * m + j - 1]});
      dp[i * m + j] = std::max(d, best);
    }
  auto at = [&](std::size_t i, std::size_t j) { return dp[i * m + j]; };
  // Frechet distance of (a[0..ka) + ea) against (b[0..kb) + eb).
  std::vector<double> col, rowv;
  auto stopped_distance = [&](const detail::Stopped& sa, const detail::Stopped& sb) {
    const std::size_t ka = sa.kept, kb = sb.kept;
    if (!sa.exit && !sb.exit) return at(ka - 1, kb - 1);
    // column: prefixes of a's kept vertices against all of b's stopped curve
    col.assign(ka, 0.0);
    if (sb.exit) {
      for (std::size_t i = 0; i < ka; ++i) {
        const double d = std::abs(a.points[i] - *sb.exit);
        const double best = i == 0 ? at(0, kb - 1) : std::min({at(i - 1, kb - 1), col[i - 1], at(i, kb - 1)});
        col[i] = std::max(d, best);
      }
    }
    rowv.assign(kb, 0.0);
    if (sa.exit) {
      for (std::size_t j = 0; j < kb; ++j) {
        const double d = std::abs(*sa.exit - b.points[j]);
        const double best = j == 0 ? at(ka - 1, 0) : std::min({at(ka - 1, j - 1), rowv[j - 1], at(ka - 1, j)});
        rowv[j] = std::max(d, best);
      }
    }
    if (sa.exit && sb.exit) {
      const double d = std::abs(*sa.exit - *sb.exit);
      return std::max(d, std::min({at(ka - 1, kb - 1), col[ka - 1], rowv[kb - 1]}));
    }
    return sb.exit ? col[ka - 1] : rowv[kb - 1];
  };
  std::vector<double> f(r_grid.size());
  for (std::size_t k = 0; k < r_grid.size(); ++k) {
    const auto sa = detail::stop_at_radius(a, r_grid[k]);
    const auto sb = detail::stop_at_radius(b, r_grid[k]);
    f[k] = std::min(1.0, stopped_distance(sa, sb));
  }
  double total = 0.0;
  for (std::size_t k = 1; k < r_grid.size(); ++k) {
    const double h = r_grid[k] - r_grid[k - 1];
    total += 0.5 * h * (std::exp(-r_grid[k - 1]) * f[k - 1] + std::exp(-r_grid[k]) * f[k]);
  }
  total += std::exp(-r_grid.back()) * f.back();
  return total;
}

// Uniform grid from 1 to just past the larger curve radius (at least 2).
inline std::vector<double> default_r_grid(const EmbeddedCurve& a, const EmbeddedCurve& b, std::size_t points = 200) {
  double reach = 2.0;
  for (const auto* c : {&a, &b})
    for (const auto& p : c->points) reach = std::max(reach, std::abs(p) * 1.01);
  std::vector<double> g(std::max<std::size_t>(points, 2));
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = 1.0 + (reach - 1.0) * k / (g.size() - 1);
  return g;
}

// Harmonic measure from z (|z| < 1) of the arc {e^{it} : 0 <= t <= theta}.
inline double poisson_cdf(Point z, double theta) {
  if (!(std::abs(z) < 1.0)) throw DomainError("poisson_cdf: point must lie inside the unit disk");
  if (theta <= 0.0) return 0.0;
  if (theta >= 2.0 * std::numbers::pi) return 1.0;
  const Point w = (std::polar(1.0, theta) - z) / (Point{1.0, 0.0} - z);
  double ang = std::arg(w);
  if (ang < 0.0) ang += 2.0 * std::numbers::pi;
  return std::clamp((2.0 * ang - theta) / (2.0 * std::numbers::pi), 0.0, 1.0);
}

// KS distance on the circle, minimised over the choice of cut point: with
// D = F_emp - F evaluated around the circle, the statistic is
// min over attained s of max(max D - s, s - min D).
inline double circle_ks(std::span<const double> diffs) {
  if (diffs.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(diffs.begin(), diffs.end());
  double best = std::numeric_limits<double>::infinity();
  for (double s : diffs) best = std::min(best, std::max(*hi - s, s - *lo));
  return best;
}

// Circle KS between angle samples (radians) and a continuous CDF on [0, 2pi).
template <typename Cdf>
double circle_ks_samples(std::vector<double> angles, Cdf&& cdf) {
  if (angles.empty()) throw DomainError("circle_ks_samples: no samples");
  for (auto& a : angles) {
    a = std::fmod(a, 2.0 * std::numbers::pi);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
  }
  std::sort(angles.begin(), angles.end());
  const double n = static_cast<double>(angles.size());
  std::vector<double> d;
  d.reserve(2 * angles.size() + 1);
  d.push_back(0.0);
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double f = cdf(angles[i]);
    d.push_back(static_cast<double>(i) / n - f);      // just before the jump
    d.push_back(static_cast<double>(i + 1) / n - f);  // just after
  }
  return circle_ks(d);
}

// Circle KS between an empirical and a model distribution on the same cyclically
// ordered atoms (model given as cumulative probabilities).
inline double circle_ks_discrete(std::span<const double> empirical_cumulative, std::span<const double> model_cumulative) {
  if (empirical_cumulative.size() != model_cumulative.size()) throw DomainError("circle_ks_discrete: length mismatch");
  std::vector<double> d(empirical_cumulative.size() + 1, 0.0);
  for (std::size_t j = 0; j < empirical_cumulative.size(); ++j) d[j + 1] = empirical_cumulative[j] - model_cumulative[j];
  return circle_ks(d);
}

struct ExitLawResult {
  double ks_statistic = 0.0;
  std::vector<double> angles;  // exit angles in [0, 2pi)
  Point start_position;
};

// Quenched exit law of the walk from start versus harmonic measure from the
// embedded start point.
inline ExitLawResult exit_law_vs_harmonic_measure(const MatedCrtMap& map, const TutteEmbedding& emb, std::uint32_t start,
                                                  std::size_t walks, std::uint64_t seed,
                                                  std::uint64_t cap = kDefaultWalkCap) {
  if (emb.topology != Topology::Disk) throw DomainError("exit_law_vs_harmonic_measure requires a disk embedding");
  if (start >= map.size() || emb.on_boundary[start]) throw DomainError("exit_law_vs_harmonic_measure: start must be interior");
  ExitLawResult res;
  res.start_position = emb.positions[start];
  const auto ends = walk_endpoints(map, start, StopRule::at_boundary(emb.on_boundary), walks, seed, cap);
  res.angles.reserve(ends.size());
  for (auto v : ends) {
    double a = std::arg(emb.positions[v]);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    res.angles.push_back(a);
  }
  const Point z = res.start_position;
  res.ks_statistic = circle_ks_samples(res.angles, [z](double t) { return poisson_cdf(z, t); });
  return res;
}

struct TwoSampleKs {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Kolmogorov tail Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0, sign = 1.0, prev = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = sign * 2.0 * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) <= 1e-10 * std::abs(sum) || std::abs(term) <= 1e-12 * prev) return std::clamp(sum, 0.0, 1.0);
    sign = -sign;
    prev = std::abs(term);
  }
  return 1.0;  // series failed to converge: lambda tiny
}

// Two-sample KS with the asymptotic p-value (effective-size correction).
inline TwoSampleKs ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw StatisticsError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_q((en + 0.12 + 0.11 / en) * d)};
}

}  // namespace mcrt
