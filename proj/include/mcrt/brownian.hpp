#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "mcrt/error.hpp"
#include "mcrt/parallel.hpp"
#include "mcrt/rng.hpp"

namespace mcrt {

enum class Topology : std::uint8_t { Plane = 0, Sphere = 1, Disk = 2 };

inline const char* to_string(Topology t) {
  switch (t) {
    case Topology::Plane: return "plane";
    case Topology::Sphere: return "sphere";
    case Topology::Disk: return "disk";
  }
  return "?";
}

// Discretized correlated pair (L,R) sampled at grid times
// start_time + i*step, i = 0..size()-1. Every grid point is a vertex of the
// associated map.
struct BrownianPath {
  double gamma = std::numbers::sqrt2;
  double step = 0.0;
  Topology topology = Topology::Plane;
  std::vector<double> L;
  std::vector<double> R;
  double total_time = 0.0;       // a (disk), 1 (sphere), window length (plane)
  double boundary_length = 0.0;  // l, disk only
  double index_shift = 0.0;      // theta, plane only
  double start_time = 0.0;       // time of grid index 0
  std::uint64_t seed = 0;

  std::size_t size() const { return L.size(); }
  double time(std::size_t i) const { return start_time + static_cast<double>(i) * step; }

  // Grid index containing time t in its cell (x - step, x]; clamped.
  std::size_t cell_of(double t) const {
    double k = std::ceil((t - start_time) / step - 1e-12);
    if (!(k > 0)) return 0;
    return std::min(size() - 1, static_cast<std::size_t>(k));
  }

  bool operator==(const BrownianPath&) const = default;
};

inline double floor_tolerance(double step) { return 1e-8 * std::sqrt(step); }

// Increment correlation -cos(pi*gamma^2/4).
inline double correlation(double gamma) {
  if (!(gamma > 0.0 && gamma < 2.0))
    throw DomainError("gamma must lie in the open interval (0,2), got " + std::to_string(gamma));
  return -std::cos(std::numbers::pi * gamma * gamma / 4.0);
}

// Lower-triangular Cholesky factor of [[1,c],[c,1]], stored row-major
// {a00, a01, a10, a11} with a01 = 0.
inline std::array<double, 4> covariance_factor(double gamma) {
  const double c = correlation(gamma);
  return {1.0, 0.0, c, std::sqrt(std::max(0.0, 1.0 - c * c))};
}

namespace detail {

struct Increment {
  double dl, dr;
};

inline Increment colored(Rng& rng, const std::array<double, 4>& a, double scale) {
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  return {scale * a[0] * z1, scale * (a[2] * z1 + a[3] * z2)};
}

inline void require_positive_step(double step) {
  if (!(step > 0.0) || !std::isfinite(step))
    throw DomainError("step must be positive and finite, got " + std::to_string(step));
}

// Exact discrete Gaussian bridge: forward walk, then subtract the linear
// interpolant of the terminal error. Endpoints are set exactly.
inline void gaussian_bridge(Rng& rng, const std::array<double, 4>& a, double step, std::size_t n_steps,
                            double end_l, double end_r, std::vector<double>& L, std::vector<double>& R) {
  L.assign(n_steps + 1, 0.0);
  R.assign(n_steps + 1, 0.0);
  const double scale = std::sqrt(step);
  for (std::size_t i = 1; i <= n_steps; ++i) {
    auto inc = colored(rng, a, scale);
    L[i] = L[i - 1] + inc.dl;
    R[i] = R[i - 1] + inc.dr;
  }
  const double el = L[n_steps] - end_l;
  const double er = R[n_steps] - end_r;
  const double inv = 1.0 / static_cast<double>(n_steps);
  for (std::size_t i = 1; i < n_steps; ++i) {
    const double f = static_cast<double>(i) * inv;
    L[i] -= f * el;
    R[i] -= f * er;
  }
  L[n_steps] = end_l;
  R[n_steps] = end_r;
}

// |3D Brownian bridge from 0 to (end,0,0)| over n_steps steps of size step:
// a BES(3) bridge, i.e. 1D Brownian motion conditioned to stay positive.
inline void bessel3_bridge(Rng& rng, double step, std::size_t n_steps, double end, std::vector<double>& out) {
  std::array<std::vector<double>, 3> c;
  const double scale = std::sqrt(step);
  for (auto& v : c) v.assign(n_steps + 1, 0.0);
  for (std::size_t i = 1; i <= n_steps; ++i)
    for (int d = 0; d < 3; ++d) c[d][i] = c[d][i - 1] + scale * rng.normal();
  const double inv = 1.0 / static_cast<double>(n_steps);
  const std::array<double, 3> target{end, 0.0, 0.0};
  std::array<double, 3> err;
  for (int d = 0; d < 3; ++d) err[d] = c[d][n_steps] - target[d];
  out.assign(n_steps + 1, 0.0);
  for (std::size_t i = 1; i < n_steps; ++i) {
    const double f = static_cast<double>(i) * inv;
    double s = 0.0;
    for (int d = 0; d < 3; ++d) {
      const double x = c[d][i] - f * err[d];
      s += x * x;
    }
    out[i] = std::sqrt(s);
  }
  out[n_steps] = end;
}

inline std::size_t steps_for(double horizon, double step) {
  const double k = std::ceil(horizon / step - 1e-9);
  if (!(k >= 1.0) || k > 1e9) throw DomainError("horizon/step ratio out of range");
  return static_cast<std::size_t>(k);
}

}  // namespace detail

// Two-sided correlated walk on eps*Z + eps*theta restricted to the cells
// meeting [t_min, t_max]; the grid point eps*theta is anchored at (0,0).
inline BrownianPath sample_plane(double gamma, double step, double t_min, double t_max, std::uint64_t seed) {
  detail::require_positive_step(step);
  const auto a = covariance_factor(gamma);
  if (!(t_min < 0.0 && 0.0 < t_max)) throw DomainError("plane window must satisfy t_min < 0 < t_max");
  Rng theta_rng(seed, stream::kTheta);
  const double theta = theta_rng.uniform();
  const double shift = step * theta;
  // vertices x with (x - step, x] meeting the window, i.e. x in [t_min, t_max + step)
  const auto k_min = static_cast<long long>(std::ceil((t_min - shift) / step));
  const auto k_max = static_cast<long long>(std::ceil((t_max + step - shift) / step)) - 1;
  if (k_max - k_min + 1 < 2) throw DomainError("plane window holds fewer than two grid points");

  BrownianPath p;
  p.gamma = gamma;
  p.step = step;
  p.topology = Topology::Plane;
  p.total_time = t_max - t_min;
  p.index_shift = theta;
  p.start_time = shift + static_cast<double>(k_min) * step;
  p.seed = seed;
  const auto n = static_cast<std::size_t>(k_max - k_min + 1);
  p.L.assign(n, 0.0);
  p.R.assign(n, 0.0);
  Rng rng(seed, stream::kPath);
  const double scale = std::sqrt(step);
  for (std::size_t i = 1; i < n; ++i) {
    auto inc = detail::colored(rng, a, scale);
    p.L[i] = p.L[i - 1] + inc.dl;
    p.R[i] = p.R[i - 1] + inc.dr;
  }
  const auto root = static_cast<std::size_t>(-k_min);
  const double l0 = p.L[root], r0 = p.R[root];
  for (std::size_t i = 0; i < n; ++i) {
    p.L[i] -= l0;
    p.R[i] -= r0;
  }
  return p;
}

// Index of the plane root eps*theta in a plane path.
inline std::size_t plane_root_index(const BrownianPath& p) {
  return static_cast<std::size_t>(std::llround((p.index_shift * p.step - p.start_time) / p.step));
}

enum class ExcursionMethod {
  Auto,       // Bessel when the coordinates are independent, else Rejection
  Rejection,  // exact discrete Gaussian bridge conditioned by rejection
  Bessel,     // BES(3) bridges; requires independent coordinates (gamma = sqrt 2)
};

struct ExcursionOptions {
  ExcursionMethod method = ExcursionMethod::Auto;
  std::uint64_t max_attempts = 10'000'000;
  unsigned workers = 0;  // 0: worker_count()
};

namespace detail {

inline bool independent_coordinates(double gamma) { return std::abs(gamma * gamma - 2.0) < 1e-12; }

inline bool above_floor(const std::vector<double>& v, double tol) {
  for (double x : v)
    if (x < -tol) return false;
  return true;
}

// First accepted attempt by lowest attempt id, scanned in fixed-size rounds
// so the outcome does not depend on the worker count.
inline BrownianPath conditioned_by_rejection(BrownianPath p, std::size_t n_steps, double end_l, double end_r,
                                             const ExcursionOptions& opt) {
  const auto a = covariance_factor(p.gamma);
  const double tol = floor_tolerance(p.step);
  const unsigned workers = opt.workers ? opt.workers : worker_count();
  const std::uint64_t round = std::max<std::uint64_t>(64, 16ULL * workers);
  for (std::uint64_t base = 0; base < opt.max_attempts; base += round) {
    const std::uint64_t count = std::min(round, opt.max_attempts - base);
    std::atomic<std::uint64_t> best{std::numeric_limits<std::uint64_t>::max()};
    parallel_blocks(
        count,
        [&](unsigned, std::size_t b, std::size_t e) {
          std::vector<double> L, R;
          for (std::size_t k = b; k < e; ++k) {
            const std::uint64_t id = base + k;
            if (id > best.load()) return;
            Rng rng(p.seed, stream::kRejection + id);
            gaussian_bridge(rng, a, p.step, n_steps, end_l, end_r, L, R);
            if (above_floor(L, tol) && above_floor(R, tol)) {
              std::uint64_t cur = best.load();
              while (id < cur && !best.compare_exchange_weak(cur, id)) {
              }
              return;
            }
          }
        },
        workers);
    const std::uint64_t id = best.load();
    if (id != std::numeric_limits<std::uint64_t>::max()) {
      Rng rng(p.seed, stream::kRejection + id);
      gaussian_bridge(rng, a, p.step, n_steps, end_l, end_r, p.L, p.R);
      return p;
    }
  }
  throw SamplingError("rejection budget exhausted after " + std::to_string(opt.max_attempts) +
                          " attempts (gamma=" + std::to_string(p.gamma) + ", step=" + std::to_string(p.step) + ")",
                      opt.max_attempts);
}

inline BrownianPath conditioned_excursion(BrownianPath p, std::size_t n_steps, double end_l, const ExcursionOptions& opt) {
  ExcursionMethod m = opt.method;
  if (m == ExcursionMethod::Auto)
    m = independent_coordinates(p.gamma) ? ExcursionMethod::Bessel : ExcursionMethod::Rejection;
  if (m == ExcursionMethod::Bessel) {
    if (!independent_coordinates(p.gamma))
      throw DomainError("Bessel excursion sampler requires gamma = sqrt(2) (independent coordinates)");
    Rng rng(p.seed, stream::kPath);
    bessel3_bridge(rng, p.step, n_steps, end_l, p.L);
    bessel3_bridge(rng, p.step, n_steps, 0.0, p.R);
    return p;
  }
  return conditioned_by_rejection(std::move(p), n_steps, end_l, 0.0, opt);
}

}  // namespace detail

// Pair of correlated excursions on [0,1] from (0,0) to (0,0), both
// coordinates >= -floor_tolerance(step). The step is rounded down so that
// 1/step is an integer.
inline BrownianPath sample_sphere_excursion(double gamma, double step, std::uint64_t seed,
                                            const ExcursionOptions& opt = {}) {
  detail::require_positive_step(step);
  correlation(gamma);
  if (step > 1e-2) throw DomainError("sphere excursion requires step <= 1e-2");
  const std::size_t n_steps = detail::steps_for(1.0, step);
  BrownianPath p;
  p.gamma = gamma;
  p.step = 1.0 / static_cast<double>(n_steps);
  p.topology = Topology::Sphere;
  p.total_time = 1.0;
  p.seed = seed;
  return detail::conditioned_excursion(std::move(p), n_steps, 0.0, opt);
}

// Correlated path on [0, area] from (0,0) to (boundary,0) conditioned to stay
// in the closed first quadrant (up to floor_tolerance).
inline BrownianPath sample_disk_excursion(double gamma, double step, double area, double boundary, std::uint64_t seed,
                                          const ExcursionOptions& opt = {}) {
  detail::require_positive_step(step);
  correlation(gamma);
  if (!(area > 0.0)) throw DomainError("disk area must be positive");
  if (!(boundary > 0.0)) throw DomainError("disk boundary length must be positive");
  const std::size_t n_steps = detail::steps_for(area, step);
  BrownianPath p;
  p.gamma = gamma;
  p.step = area / static_cast<double>(n_steps);
  p.topology = Topology::Disk;
  p.total_time = area;
  p.boundary_length = boundary;
  p.seed = seed;
  return detail::conditioned_excursion(std::move(p), n_steps, boundary, opt);
}

// Unconditioned discrete bridge (0,0) -> (end_l, end_r) over n_steps steps.
inline BrownianPath sample_bridge(double gamma, double step, std::size_t n_steps, double end_l, double end_r,
                                  std::uint64_t seed, std::uint64_t stream_id = stream::kPath) {
  detail::require_positive_step(step);
  BrownianPath p;
  p.gamma = gamma;
  p.step = step;
  p.topology = Topology::Disk;
  p.total_time = step * static_cast<double>(n_steps);
  p.boundary_length = end_l;
  p.seed = seed;
  Rng rng(seed, stream_id);
  detail::gaussian_bridge(rng, covariance_factor(gamma), step, n_steps, end_l, end_r, p.L, p.R);
  return p;
}

// Fraction of unconditioned sphere bridges (n = 1/step steps) that satisfy the
// floor constraint; trials use streams [first_stream, first_stream + trials).
inline double rejection_acceptance_rate(double gamma, double step, std::uint64_t trials, std::uint64_t seed,
                                        std::uint64_t first_stream = stream::kRejection) {
  const auto a = covariance_factor(gamma);
  const std::size_t n_steps = detail::steps_for(1.0, step);
  const double h = 1.0 / static_cast<double>(n_steps);
  const double tol = floor_tolerance(h);
  std::vector<double> L, R;
  std::uint64_t hits = 0;
  for (std::uint64_t k = 0; k < trials; ++k) {
    Rng rng(seed, first_stream + k);
    detail::gaussian_bridge(rng, a, h, n_steps, 0.0, 0.0, L, R);
    if (detail::above_floor(L, tol) && detail::above_floor(R, tol)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

// Keep every factor-th grid point (coarser step, same underlying path).
inline BrownianPath coarsen(const BrownianPath& p, std::size_t factor) {
  if (factor == 0) throw DomainError("coarsening factor must be positive");
  if (factor == 1) return p;
  if (p.topology != Topology::Plane && (p.size() - 1) % factor != 0)
    throw DomainError("coarsening factor must divide the number of steps");
  BrownianPath q = p;
  q.step = p.step * static_cast<double>(factor);
  q.L.clear();
  q.R.clear();
  for (std::size_t i = 0; i < p.size(); i += factor) {
    q.L.push_back(p.L[i]);
    q.R.push_back(p.R[i]);
  }
  return q;
}

}  // namespace mcrt
