#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mcrt/error.hpp"
#include "mcrt/map.hpp"

namespace mcrt {

// (Lv)(x) = sum over neighbours y of mult(x,y) * (v(x) - v(y)).
inline std::vector<double> laplacian_apply(const MatedCrtMap& map, std::span<const double> v) {
  if (v.size() != map.size())
    throw DomainError("laplacian_apply: vector length " + std::to_string(v.size()) + " != " +
                      std::to_string(map.size()));
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t x = 0; x < map.size(); ++x) {
    double acc = 0.0;
    for (const auto& nb : map.neighbors(x)) acc += nb.mult * (v[x] - v[nb.v]);
    out[x] = acc;
  }
  return out;
}

struct HarmonicField {
  std::vector<double> values;
  std::vector<std::uint8_t> boundary_mask;
  double residual_inf_norm = 0.0;  // max over interior of |(L u)(x)|, unnormalised
  std::size_t iterations = 0;
  bool converged = true;
};

struct SolverOptions {
  double tol = 1e-10;
  std::size_t max_iter = 0;  // 0: 20 * sqrt(#unknowns)
  bool jacobi = true;
  // Optional restriction: vertices with domain[v] == 0 are ignored entirely.
  std::span<const std::uint8_t> domain{};
  // Optional starting values for every vertex (default: mean boundary value).
  std::span<const double> initial{};
};

namespace detail {

inline std::size_t default_max_iter(std::size_t unknowns) {
  return std::max<std::size_t>(20, static_cast<std::size_t>(20.0 * std::sqrt(static_cast<double>(unknowns))));
}

}  // namespace detail

// Conjugate gradients on the interior block of the Laplacian with Dirichlet
// data on boundary_set. Residuals are measured in the infinity norm.
inline HarmonicField solve_dirichlet(const MatedCrtMap& map, std::span<const std::uint32_t> boundary_set,
                                     std::span<const double> boundary_values, const SolverOptions& opt = {}) {
  const std::size_t n = map.size();
  if (boundary_set.empty()) throw DomainError("solve_dirichlet: empty boundary set");
  if (boundary_set.size() != boundary_values.size())
    throw DomainError("solve_dirichlet: boundary set and values differ in length");
  if (!opt.domain.empty() && opt.domain.size() != n) throw DomainError("solve_dirichlet: domain mask length mismatch");
  if (!opt.initial.empty() && opt.initial.size() != n) throw DomainError("solve_dirichlet: initial guess length mismatch");
  auto active = [&](std::size_t v) { return opt.domain.empty() || opt.domain[v] != 0; };

  HarmonicField f;
  f.values.assign(n, 0.0);
  f.boundary_mask.assign(n, 0);
  double mean = 0.0;
  for (std::size_t k = 0; k < boundary_set.size(); ++k) {
    const auto b = boundary_set[k];
    if (b >= n) throw DomainError("solve_dirichlet: boundary vertex out of range");
    if (!active(b)) throw DomainError("solve_dirichlet: boundary vertex outside the domain");
    f.boundary_mask[b] = 1;
    f.values[b] = boundary_values[k];
    mean += boundary_values[k];
  }
  mean /= static_cast<double>(boundary_set.size());

  // interior unknowns, and a reachability check from the boundary
  std::vector<std::uint32_t> interior;
  std::vector<std::uint32_t> slot(n, std::numeric_limits<std::uint32_t>::max());
  for (std::size_t v = 0; v < n; ++v)
    if (active(v) && !f.boundary_mask[v]) {
      slot[v] = static_cast<std::uint32_t>(interior.size());
      interior.push_back(static_cast<std::uint32_t>(v));
    }
  {
    std::vector<std::uint8_t> seen(f.boundary_mask);
    std::vector<std::uint32_t> queue(boundary_set.begin(), boundary_set.end());
    std::size_t reached = 0;
    for (std::size_t h = 0; h < queue.size(); ++h)
      for (const auto& nb : map.neighbors(queue[h]))
        if (active(nb.v) && !seen[nb.v]) {
          seen[nb.v] = 1;
          ++reached;
          queue.push_back(nb.v);
        }
    if (reached != interior.size())
      throw StructuralError("solve_dirichlet: " + std::to_string(interior.size() - reached) +
                            " interior vertices have no path to the boundary");
  }
  const std::size_t m = interior.size();
  if (m == 0) return f;

  // A u = b with A the interior Laplacian block; b collects boundary terms.
  // The off-diagonal part is stored compactly as (column, weight) rows.
  std::vector<double> diag(m, 0.0), rhs(m, 0.0);
  std::vector<std::uint64_t> row_start(m + 1, 0);
  std::vector<std::uint32_t> col;
  std::vector<double> weight;
  for (std::size_t k = 0; k < m; ++k) {
    for (const auto& nb : map.neighbors(interior[k])) {
      if (!active(nb.v)) continue;
      diag[k] += nb.mult;
      if (f.boundary_mask[nb.v]) {
        rhs[k] += nb.mult * f.values[nb.v];
      } else {
        col.push_back(slot[nb.v]);
        weight.push_back(nb.mult);
      }
    }
    row_start[k + 1] = col.size();
  }
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t k = 0; k < m; ++k) {
      double acc = diag[k] * x[k];
      for (auto e = row_start[k]; e < row_start[k + 1]; ++e) acc -= weight[e] * x[col[e]];
      y[k] = acc;
    }
  };
  auto inf_norm = [](const std::vector<double>& x) {
    double r = 0.0;
    for (double e : x) r = std::max(r, std::abs(e));
    return r;
  };

  std::vector<double> u(m, mean), r(m), z(m), p(m), q(m);
  if (!opt.initial.empty())
    for (std::size_t k = 0; k < m; ++k) u[k] = opt.initial[interior[k]];
  auto true_residual = [&] {
    apply(u, q);
    for (std::size_t k = 0; k < m; ++k) r[k] = rhs[k] - q[k];
    return inf_norm(r);
  };
  const std::size_t max_iter = opt.max_iter ? opt.max_iter : detail::default_max_iter(m);
  double res = true_residual();
  std::size_t it = 0;
  auto precondition = [&] {
    for (std::size_t k = 0; k < m; ++k) z[k] = opt.jacobi ? r[k] / diag[k] : r[k];
  };
  precondition();
  p = z;
  double rz = 0.0;
  for (std::size_t k = 0; k < m; ++k) rz += r[k] * z[k];
  constexpr std::size_t kRefresh = 50;  // recompute the true residual to stop drift
  while (res > opt.tol && it < max_iter) {
    apply(p, q);
    double pq = 0.0;
    for (std::size_t k = 0; k < m; ++k) pq += p[k] * q[k];
    if (!(pq > 0.0)) break;
    const double alpha = rz / pq;
    for (std::size_t k = 0; k < m; ++k) {
      u[k] += alpha * p[k];
      r[k] -= alpha * q[k];
    }
    ++it;
    res = (it % kRefresh == 0) ? true_residual() : inf_norm(r);
    if (res <= opt.tol) {
      res = true_residual();
      if (res <= opt.tol) break;
    }
    precondition();
    double rz_new = 0.0;
    for (std::size_t k = 0; k < m; ++k) rz_new += r[k] * z[k];
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < m; ++k) p[k] = z[k] + beta * p[k];
  }
  res = true_residual();
  for (std::size_t k = 0; k < m; ++k) f.values[interior[k]] = u[k];
  f.residual_inf_norm = res;
  f.iterations = it;
  f.converged = res <= opt.tol;
  return f;
}

// Largest |u(x) - weighted mean of neighbours| over vertices not in the mask
// (restricted to the domain when one is given).
inline double mean_value_residual(const MatedCrtMap& map, std::span<const double> u,
                                  std::span<const std::uint8_t> boundary_mask,
                                  std::span<const std::uint8_t> domain = {}) {
  double worst = 0.0;
  for (std::size_t x = 0; x < map.size(); ++x) {
    if (boundary_mask[x] || (!domain.empty() && !domain[x])) continue;
    double acc = 0.0, w = 0.0;
    for (const auto& nb : map.neighbors(x)) {
      acc += nb.mult * u[nb.v];
      w += nb.mult;
    }
    if (w > 0.0) worst = std::max(worst, std::abs(u[x] - acc / w));
  }
  return worst;
}

struct HittingResult {
  std::vector<double> exit_mass;   // per entry of boundary_order
  std::vector<double> cumulative;  // p(y_j), last entry exactly 1
  HarmonicField psi;               // 1 at the root, 0 on the boundary
};

// Exit distribution of simple random walk from root on the boundary. By
// reversibility the mass leaving through boundary edge (u, y) is proportional
// to psi(u) * mult(u, y).
inline HittingResult hitting_probabilities(const MatedCrtMap& map, std::uint32_t root,
                                           std::span<const std::uint32_t> boundary_order,
                                           const SolverOptions& opt = {}) {
  if (boundary_order.empty()) throw DomainError("hitting_probabilities: empty boundary");
  if (root >= map.size()) throw DomainError("hitting_probabilities: root out of range");
  if (std::find(boundary_order.begin(), boundary_order.end(), root) != boundary_order.end())
    throw DomainError("hitting_probabilities: root lies on the boundary");
  std::vector<std::uint32_t> set(boundary_order.begin(), boundary_order.end());
  std::vector<double> vals(set.size(), 0.0);
  set.push_back(root);
  vals.push_back(1.0);

  HittingResult h;
  h.psi = solve_dirichlet(map, set, vals, opt);
  std::vector<std::uint8_t> is_bdry(map.size(), 0);
  for (auto b : boundary_order) is_bdry[b] = 1;
  h.exit_mass.assign(boundary_order.size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < boundary_order.size(); ++j) {
    double acc = 0.0;
    for (const auto& nb : map.neighbors(boundary_order[j])) {
      if (is_bdry[nb.v] || (!opt.domain.empty() && !opt.domain[nb.v])) continue;
      acc += std::clamp(h.psi.values[nb.v], 0.0, 1.0) * nb.mult;  // psi is a probability; drop solver round-off
    }
    h.exit_mass[j] = acc;
    total += acc;
  }
  if (!(total > 0.0)) throw StructuralError("hitting_probabilities: root does not reach the boundary");
  h.cumulative.resize(boundary_order.size());
  double run = 0.0;
  for (std::size_t j = 0; j < boundary_order.size(); ++j) {
    h.exit_mass[j] /= total;
    run += h.exit_mass[j];
    h.cumulative[j] = run;
  }
  h.cumulative.back() = 1.0;
  return h;
}

}  // namespace mcrt
