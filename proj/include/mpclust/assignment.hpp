#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "mpclust/distance.hpp"
#include "mpclust/errors.hpp"
#include "mpclust/primitives.hpp"

namespace mpclust {

constexpr double kMassTol = 1e-9;

// Fractional center set: y_p is the opening of point p.
struct FractionalSolution {
  std::vector<double> y;

  double mass() const { return std::accumulate(y.begin(), y.end(), 0.0); }
};

// Sparse fractional assignment; row p holds (q, x_pq) with x_pq > 0.
struct Assignment {
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;

  double row_sum(std::size_t p) const {
    double s = 0.0;
    for (const auto& [q, v] : rows[p]) s += v;
    return s;
  }

  // sigma(x) = sum over p,q of x_pq * dist^z(p,q).
  double sigma(const DistanceOracle& oracle) const {
    double s = 0.0;
    for (std::size_t p = 0; p < rows.size(); ++p)
      for (const auto& [q, v] : rows[p]) s += v * oracle.powz(p, q);
    return s;
  }
};

// (C1) every row carries at least one unit; (C2) x_pq <= y_q.
inline bool is_feasible(const Assignment& x, const FractionalSolution& y, double tol = 1e-7) {
  for (std::size_t p = 0; p < x.rows.size(); ++p) {
    if (x.row_sum(p) < 1.0 - tol) return false;
    for (const auto& [q, v] : x.rows[p])
      if (v > y.y[q] + tol) return false;
  }
  return true;
}

struct CostReport {
  double total = 0.0;
  std::vector<double> per_point;
  double estimated_total = 0.0;
  std::vector<double> estimated_per_point;
  double gamma = 1.0;
};

// Per-point greedy fill over targets sorted by (dist^z, id). The constraints
// are independent per point, so this attains cost(y).
inline Assignment optimal_assignment(const DistanceOracle& oracle, const FractionalSolution& y) {
  const std::size_t n = oracle.size();
  if (y.y.size() != n) throw parameter_error("optimal_assignment: y size mismatch");
  if (y.mass() < 1.0 - kMassTol)
    throw infeasible_error("optimal_assignment: total opening mass below 1");
  Assignment x;
  x.rows.resize(n);
  std::vector<std::size_t> order(n);
  for (std::size_t p = 0; p < n; ++p) {
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> dz(n);
    for (std::size_t q = 0; q < n; ++q) dz[q] = oracle.powz(p, q);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (dz[a] != dz[b]) return dz[a] < dz[b];
      return a < b;
    });
    double remaining = 1.0;
    for (std::size_t q : order) {
      if (remaining <= 0.0) break;
      double take = std::min(remaining, y.y[q]);
      if (take > 0.0) {
        x.rows[p].emplace_back(q, take);
        remaining -= take;
      }
    }
    if (remaining > kMassTol)
      throw infeasible_error("optimal_assignment: could not place unit mass");
  }
  return x;
}

inline double point_cost(const DistanceOracle& oracle, std::size_t p,
                         const FractionalSolution& y) {
  const std::size_t n = oracle.size();
  std::vector<std::pair<double, std::size_t>> order(n);
  for (std::size_t q = 0; q < n; ++q) order[q] = {oracle.powz(p, q), q};
  std::sort(order.begin(), order.end());
  double remaining = 1.0, cost = 0.0;
  for (const auto& [dz, q] : order) {
    if (remaining <= 0.0) break;
    double take = std::min(remaining, y.y[q]);
    cost += take * dz;
    remaining -= take;
  }
  if (remaining > kMassTol) throw infeasible_error("point_cost: total opening mass below 1");
  return cost;
}

inline CostReport clustering_cost(const DistanceOracle& oracle, const FractionalSolution& y) {
  Assignment x = optimal_assignment(oracle, y);
  CostReport r;
  r.per_point.resize(oracle.size(), 0.0);
  for (std::size_t p = 0; p < oracle.size(); ++p) {
    double c = 0.0;
    for (const auto& [q, v] : x.rows[p]) c += v * oracle.powz(p, q);
    r.per_point[p] = c;
    r.total += c;
  }
  return r;
}

// Integral center set cost: sum of dist^z to the nearest center.
inline double center_set_cost(const DistanceOracle& oracle, const std::vector<std::size_t>& c) {
  if (c.empty()) throw parameter_error("center_set_cost: empty center set");
  double total = 0.0;
  for (std::size_t p = 0; p < oracle.size(); ++p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t q : c) best = std::min(best, oracle.powz(p, q));
    total += best;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Level-set cost estimation. For each point, nested neighborhoods
// A^(l)_p with {d <= G^(l-1)} <= A^(l)_p <= {d <= G^l} yield
// tilde_cost(p,y) = sum_l (s^l_p - s^(l-1)_p) * G^(l z), which sandwiches the
// true cost within [cost, G^(2z) cost]. Exact backends use A = {d <= G^l}.

inline int level_count_L(const DistanceOracle& oracle, double gamma) {
  double maxd = max_pairwise_dist(oracle);
  int L = std::max(1, static_cast<int>(std::ceil(std::log(std::max(maxd, 1.0)) /
                                                 std::log(gamma))) +
                          1);
  while (ipow(gamma, L) < maxd) ++L;
  return L;
}

inline CostReport estimate_costs(const DistanceOracle& oracle, const FractionalSolution& y,
                                 double gamma, const PrimitiveBackend& backend) {
  const std::size_t n = oracle.size();
  if (y.y.size() != n) throw parameter_error("estimate_costs: y size mismatch");
  if (!(gamma > 1.0)) throw parameter_error("estimate_costs: Gamma must exceed 1");
  if (y.mass() < 1.0 - kMassTol)
    throw infeasible_error("estimate_costs: total opening mass below 1");
  if (!is_normalized(oracle))
    throw precondition_error("estimate_costs: dataset is not normalized (min dist < 2)");

  const int L = level_count_L(oracle, gamma);
  CostReport r;
  r.gamma = gamma;
  r.estimated_per_point.assign(n, 0.0);

  std::vector<double> prev(n);  // s^(l-1)
  for (std::size_t p = 0; p < n; ++p) prev[p] = std::min(y.y[p], 1.0);
  for (int ell = 1; ell <= L; ++ell) {
    // Exact choice A^(l) = {d <= G^l}; slack-injected backends draw the
    // radius inside [G^(l-1), G^l], which stays within the required band.
    double tau = backend.slack_active() ? ipow(gamma, ell - 1) : ipow(gamma, ell);
    std::vector<double> sums = range_sum(oracle, y.y, tau, backend);
    double weight = ipow(gamma, ell);
    weight = ipow(weight, oracle.z());
    for (std::size_t p = 0; p < n; ++p) {
      double s = std::min(sums[p], 1.0);
      if (s < prev[p]) s = prev[p];  // nested sets; guard float noise
      r.estimated_per_point[p] += (s - prev[p]) * weight;
      prev[p] = s;
    }
  }
  for (double v : r.estimated_per_point) r.estimated_total += v;
  return r;
}

}  // namespace mpclust
