#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mpclust/assignment.hpp"
#include "mpclust/distance.hpp"
#include "mpclust/errors.hpp"
#include "mpclust/simplex.hpp"

namespace mpclust {

// Ground truth at desk scale: exact integral optimum by enumeration and
// fractional optima by LP. Every derived expectation in the test suite comes
// from one of these.
struct OracleResult {
  double value = 0.0;
  std::vector<std::size_t> witness_centers;
  std::vector<double> witness_y;
  std::string method;
};

namespace detail {

inline double binomial_guard(std::size_t n, std::size_t k) {
  double c = 1.0;
  for (std::size_t i = 0; i < k; ++i) c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
  return c;
}

}  // namespace detail

// OPT over all center sets of size <= k (attained at size exactly min(k, n)
// since adding centers never hurts).
inline OracleResult brute_opt_integral(const DistanceOracle& oracle, std::size_t k) {
  const std::size_t n = oracle.size();
  if (k < 1 || k > n) throw parameter_error("brute_opt_integral: k out of range");
  const std::size_t m = std::min(k, n);
  if (detail::binomial_guard(n, m) > 1e7)
    throw guard_error("brute_opt_integral: combination guard exceeded");

  OracleResult res;
  res.method = "enumeration";
  res.value = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(m);
  for (std::size_t i = 0; i < m; ++i) idx[i] = i;
  for (;;) {
    double cost = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c : idx) best = std::min(best, oracle.powz(p, c));
      cost += best;
      if (cost >= res.value) break;
    }
    if (cost < res.value) {
      res.value = cost;
      res.witness_centers = idx;
    }
    // next combination
    std::size_t i = m;
    while (i > 0 && idx[i - 1] == n - m + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < m; ++j) idx[j] = idx[j - 1] + 1;
  }
  return res;
}

namespace detail {

// Shared LP body: min  lambda * sum_p y_p + sum x_pq d^z(p,q)
//                 s.t. (L1) sum_q x_pq >= 1, (L2) x_pq <= y_q, vars >= 0,
// plus optionally the clustering mass row sum_p y_p = k with lambda = 0.
inline LpProblem facility_lp(const DistanceOracle& oracle, double lambda, bool mass_row,
                             double k) {
  const std::size_t n = oracle.size();
  LpProblem lp;
  lp.num_vars = static_cast<int>(n + n * n);
  lp.objective.assign(lp.num_vars, 0.0);
  for (std::size_t q = 0; q < n; ++q) lp.objective[q] = lambda;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) lp.objective[n + p * n + q] = oracle.powz(p, q);

  for (std::size_t p = 0; p < n; ++p) {
    LpRow row{std::vector<double>(lp.num_vars, 0.0), '>', 1.0};
    for (std::size_t q = 0; q < n; ++q) row.a[n + p * n + q] = 1.0;
    lp.rows.push_back(std::move(row));
  }
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) {
      LpRow row{std::vector<double>(lp.num_vars, 0.0), '<', 0.0};
      row.a[n + p * n + q] = 1.0;
      row.a[q] = -1.0;
      lp.rows.push_back(std::move(row));
    }
  if (mass_row) {
    LpRow row{std::vector<double>(lp.num_vars, 0.0), '=', k};
    for (std::size_t q = 0; q < n; ++q) row.a[q] = 1.0;
    lp.rows.push_back(std::move(row));
  }
  return lp;
}

}  // namespace detail

// Optimal value of Fractional Power-z Facility Location at opening cost
// lambda (constraint ||y||_1 >= 1 is implied by (L1)+(L2)).
inline OracleResult lp_opt_fractional_fl(const DistanceOracle& oracle, double lambda) {
  const std::size_t n = oracle.size();
  if (n > 12) throw guard_error("lp_opt_fractional_fl: dense LP guard (n <= 12)");
  if (!(lambda > 0.0)) throw parameter_error("lp_opt_fractional_fl: lambda must be positive");
  LpProblem lp = detail::facility_lp(oracle, lambda, false, 0.0);
  LpSolution s = solve_lp(lp);
  OracleResult res;
  res.method = "lp";
  res.value = s.value;
  res.witness_y.assign(s.x.begin(), s.x.begin() + n);
  return res;
}

// Optimal value of Fractional (k,z)-Clustering (mass exactly k).
inline OracleResult lp_opt_fractional_clustering(const DistanceOracle& oracle, std::size_t k) {
  const std::size_t n = oracle.size();
  if (n > 12) throw guard_error("lp_opt_fractional_clustering: dense LP guard (n <= 12)");
  if (k < 1 || k > n) throw parameter_error("lp_opt_fractional_clustering: k out of range");
  LpProblem lp = detail::facility_lp(oracle, 0.0, true, static_cast<double>(k));
  LpSolution s = solve_lp(lp);
  OracleResult res;
  res.method = "lp";
  res.value = s.value;
  res.witness_y.assign(s.x.begin(), s.x.begin() + n);
  return res;
}

// Feasibility of a dual vector v for (D1): sum_p [v_p - d^z(p,q)]^+ <= lambda.
inline bool dual_feasible(const DistanceOracle& oracle, const std::vector<double>& v,
                          double lambda, double tol = 1e-7) {
  for (std::size_t q = 0; q < oracle.size(); ++q) {
    double s = 0.0;
    for (std::size_t p = 0; p < oracle.size(); ++p)
      s += std::max(0.0, v[p] - oracle.powz(p, q));
    if (s > lambda + tol) return false;
  }
  return true;
}

}  // namespace mpclust
