#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mpclust/assignment.hpp"
#include "mpclust/distance.hpp"
#include "mpclust/errors.hpp"
#include "mpclust/fractional.hpp"
#include "mpclust/primitives.hpp"

namespace mpclust {

using CenterSet = std::vector<std::size_t>;

// Integer weights produced by sparsification; total weight equals n.
struct WeightFunction {
  std::vector<long long> w;

  std::vector<std::size_t> support() const {
    std::vector<std::size_t> s;
    for (std::size_t p = 0; p < w.size(); ++p)
      if (w[p] > 0) s.push_back(p);
    return s;
  }
  long long total() const {
    long long t = 0;
    for (long long v : w) t += v;
    return t;
  }
};

struct SparsifyTrace {
  int L = 0;
  std::vector<double> taus;
  std::vector<std::vector<std::size_t>> levels;    // P_l
  std::vector<std::vector<std::size_t>> filtered;  // Q_l
  std::vector<std::vector<std::size_t>> ruling;    // R_l
  std::vector<std::vector<std::size_t>> picks;     // ANN target per point, aligned with levels
};

// Step 1: sparsify to a well-separated weighted set. Points are partitioned
// by their estimated cost, each level is thinned to a ruling set after
// dropping points close to lower levels, and every point then adds unit
// weight to its approximate nearest ruling-set neighbor at its own or a
// lower level.
inline std::pair<WeightFunction, SparsifyTrace> sparsify(const DistanceOracle& oracle,
                                                         const FractionalSolution& y,
                                                         const CostReport& costs, double gamma,
                                                         const PrimitiveBackend& backend) {
  (void)y;
  const std::size_t n = oracle.size();
  if (costs.estimated_per_point.size() != n)
    throw parameter_error("sparsify: cost report lacks per-point estimates");
  if (std::fabs(costs.gamma - gamma) > 1e-12)
    throw parameter_error("sparsify: Gamma differs from the one used for cost estimation");
  if (!is_normalized(oracle)) throw precondition_error("sparsify: dataset is not normalized");

  const int z = oracle.z();
  const double nd = static_cast<double>(n);
  SparsifyTrace trace;

  // Level thresholds (2G)^(l z) / n.
  double max_est = 0.0;
  for (double v : costs.estimated_per_point) max_est = std::max(max_est, v);
  int L = 0;
  while (ipow(ipow(2.0 * gamma, L), z) / nd < max_est) ++L;
  trace.L = L;
  trace.levels.assign(L + 1, {});
  for (std::size_t p = 0; p < n; ++p) {
    double v = costs.estimated_per_point[p];
    int ell = 0;
    while (v > ipow(ipow(2.0 * gamma, ell), z) / nd) ++ell;
    trace.levels[ell].push_back(p);
  }

  trace.taus.resize(L + 1);
  trace.filtered.assign(L + 1, {});
  trace.ruling.assign(L + 1, {});
  std::vector<double> lower_indicator(n, 0.0);
  const double n_inv_z = std::pow(nd, -1.0 / z);
  for (int ell = 0; ell <= L; ++ell) {
    double tau = 4.0 * gamma * ipow(2.0 * gamma, ell) * n_inv_z;
    trace.taus[ell] = tau;
    if (ell > 0 && !trace.levels[ell].empty()) {
      std::vector<double> b = range_sum(oracle, lower_indicator, tau, backend);
      for (std::size_t p : trace.levels[ell])
        if (b[p] > 0.0) trace.filtered[ell].push_back(p);
    }
    std::vector<std::size_t> candidates;
    std::set_difference(trace.levels[ell].begin(), trace.levels[ell].end(),
                        trace.filtered[ell].begin(), trace.filtered[ell].end(),
                        std::back_inserter(candidates));
    if (!candidates.empty()) trace.ruling[ell] = ruling_set(oracle, candidates, tau, backend);
    for (std::size_t p : trace.levels[ell]) lower_indicator[p] = 1.0;
  }

  WeightFunction w;
  w.w.assign(n, 0);
  trace.picks.assign(L + 1, {});
  std::vector<std::size_t> targets;
  for (int ell = 0; ell <= L; ++ell) {
    targets.insert(targets.end(), trace.ruling[ell].begin(), trace.ruling[ell].end());
    if (trace.levels[ell].empty()) continue;
    if (targets.empty()) throw error("sparsify: no ruling-set target available for a level");
    trace.picks[ell] = ann(oracle, trace.levels[ell], targets, backend);
    for (std::size_t t : trace.picks[ell]) ++w.w[t];
  }
  return {std::move(w), std::move(trace)};
}

// Partially rounded solution in {0, 1/2, 1}^P, plus the 1/2-lower-bounded
// intermediate from stage 1 (mass-preserving transfers onto the support).
struct PartialSolution {
  std::vector<double> y_tilde;
  std::vector<double> y_lower;              // after stage 1: 0 off-support, >= 1/2 on it
  std::vector<std::size_t> sorted_support;  // decreasing w(p) * hat_dist(p)^z
  std::vector<double> hat_dist;             // aligned with sorted_support
  std::size_t m = 0;                        // |supp(w)|
};

// Step 2: move mass from zero-weight points onto their approximate nearest
// support point (every support point then carries at least 1/2), then open
// the top min(2k-m, m) support points fully and the rest half.
inline PartialSolution partial_round(const DistanceOracle& oracle, const FractionalSolution& y,
                                     const WeightFunction& w, std::size_t k, double gamma,
                                     const PrimitiveBackend& backend) {
  (void)gamma;
  const std::size_t n = oracle.size();
  if (std::fabs(y.mass() - static_cast<double>(k)) > 1e-6)
    throw parameter_error("partial_round: ||y||_1 must equal k");
  std::vector<std::size_t> supp = w.support();
  const std::size_t m = supp.size();
  if (m == 0) throw parameter_error("partial_round: empty support");
  if (m > 2 * k) throw error("partial_round: support larger than 2k, weight function invalid");

  PartialSolution out;
  out.m = m;
  out.y_tilde = y.y;

  // Stage 1: every zero-weight point moves its opening onto its approximate
  // nearest support point; the intermediate is 1/2-lower bounded on the
  // support and keeps the total mass.
  std::vector<std::size_t> non_supp;
  for (std::size_t p = 0; p < n; ++p)
    if (w.w[p] == 0) non_supp.push_back(p);
  if (!non_supp.empty()) {
    std::vector<std::size_t> target = ann(oracle, non_supp, supp, backend);
    for (std::size_t i = 0; i < non_supp.size(); ++i) {
      out.y_tilde[target[i]] += out.y_tilde[non_supp[i]];
      out.y_tilde[non_supp[i]] = 0.0;
    }
  }
  out.y_lower = out.y_tilde;

  // Stage 2: hat distances, sort, open.
  std::vector<double> hd(m, 0.0);
  if (m >= 2) {
    std::vector<std::size_t> nn = ann_excluding_self(oracle, supp, backend);
    for (std::size_t i = 0; i < m; ++i) hd[i] = oracle.dist(supp[i], nn[i]);
  }
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  const int z = oracle.z();
  std::vector<double> key(m);
  for (std::size_t i = 0; i < m; ++i)
    key[i] = static_cast<double>(w.w[supp[i]]) * ipow(hd[i], z);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (key[a] != key[b]) return key[a] > key[b];
    return supp[a] < supp[b];
  });

  std::size_t full = 0;
  if (2 * k > m) full = std::min(2 * k - m, m);
  out.sorted_support.resize(m);
  out.hat_dist.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.sorted_support[i] = supp[order[i]];
    out.hat_dist[i] = hd[order[i]];
    out.y_tilde[supp[order[i]]] = i < full ? 1.0 : 0.5;
  }
  return out;
}

// Monotone approximate nearest neighbors over a set H (|H| >= 2):
// h(p) in H \ {p}, dist(p, h(p)) <= Gamma * dist(p, H \ {p}), and following
// h never increases the distance: dist(h(p), h(h(p))) <= dist(p, h(p)).
inline std::vector<std::size_t> monotone_ann(const DistanceOracle& oracle,
                                             const std::vector<std::size_t>& h_set, double gamma,
                                             const PrimitiveBackend& backend) {
  (void)gamma;
  if (h_set.size() < 2) throw parameter_error("monotone_ann: need at least two points");
  const std::size_t m = h_set.size();
  std::vector<std::size_t> tilde = ann_excluding_self(oracle, h_set, backend);
  std::vector<std::size_t> pos(oracle.size(), static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < m; ++i) pos[h_set[i]] = i;

  std::vector<std::vector<std::size_t>> candidates(m);
  for (std::size_t i = 0; i < m; ++i) {
    candidates[i].push_back(tilde[i]);
    candidates[pos[tilde[i]]].push_back(h_set[i]);  // reverse edges
  }
  std::vector<std::size_t> h(m);
  for (std::size_t i = 0; i < m; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = candidates[i].front();
    for (std::size_t q : candidates[i]) {
      double d = oracle.dist(h_set[i], q);
      if (d < best || (d == best && q < arg)) {
        best = d;
        arg = q;
      }
    }
    h[i] = arg;
  }
  return h;
}

struct FinalRoundTrace {
  std::vector<std::size_t> fully_open;                 // F
  std::vector<std::size_t> half_open;                  // H
  std::vector<std::size_t> h;                          // aligned with half_open
  int L = 0;
  std::vector<std::vector<std::size_t>> h_levels;      // H_l
  std::vector<std::vector<std::size_t>> h_pruned;      // H'_l
  std::vector<std::vector<std::size_t>> ruling;        // R_l
};

// Step 3: keep the fully open centers, then thin the half-open centers with
// leveled ruling sets (level = magnitude of dist(p, h(p))), keeping only
// non-isolated centers per level.
inline std::pair<CenterSet, FinalRoundTrace> final_round(const DistanceOracle& oracle,
                                                         const PartialSolution& partial,
                                                         std::size_t k, double gamma,
                                                         const PrimitiveBackend& backend) {
  if (!is_normalized(oracle)) throw precondition_error("final_round: dataset is not normalized");
  FinalRoundTrace trace;
  for (std::size_t p = 0; p < partial.y_tilde.size(); ++p) {
    if (partial.y_tilde[p] == 1.0) trace.fully_open.push_back(p);
    if (partial.y_tilde[p] == 0.5) trace.half_open.push_back(p);
  }
  CenterSet c = trace.fully_open;
  if (!trace.half_open.empty()) {
    if (trace.half_open.size() < 2)
      throw error("final_round: a single half-open center cannot occur");
    trace.h = monotone_ann(oracle, trace.half_open, gamma, backend);

    const std::size_t hm = trace.half_open.size();
    std::vector<int> level(hm);
    int max_level = 1;
    for (std::size_t i = 0; i < hm; ++i) {
      double d = oracle.dist(trace.half_open[i], trace.h[i]);
      level[i] = std::max(1, static_cast<int>(std::ceil(std::log2(d) - 1e-12)));
      max_level = std::max(max_level, level[i]);
    }
    trace.L = max_level;
    trace.h_levels.assign(max_level + 1, {});
    trace.h_pruned.assign(max_level + 1, {});
    trace.ruling.assign(max_level + 1, {});
    std::vector<int> level_of(oracle.size(), -1);
    for (std::size_t i = 0; i < hm; ++i) {
      trace.h_levels[level[i]].push_back(trace.half_open[i]);
      level_of[trace.half_open[i]] = level[i];
    }
    // non-isolated: h(p) in the same level, or p is some same-level h-target
    std::vector<char> targeted(oracle.size(), 0);
    for (std::size_t i = 0; i < hm; ++i)
      if (level_of[trace.h[i]] == level[i]) targeted[trace.h[i]] = 1;
    for (int ell = 1; ell <= max_level; ++ell) {
      for (std::size_t i = 0; i < hm; ++i) {
        if (level[i] != ell) continue;
        std::size_t p = trace.half_open[i];
        if (level_of[trace.h[i]] == ell || targeted[p])
          trace.h_pruned[ell].push_back(p);
      }
      if (!trace.h_pruned[ell].empty()) {
        trace.ruling[ell] =
            ruling_set(oracle, trace.h_pruned[ell], ipow(2.0, ell + 2), backend);
        c.insert(c.end(), trace.ruling[ell].begin(), trace.ruling[ell].end());
      }
    }
  }
  std::sort(c.begin(), c.end());
  if (c.size() > k) throw error("final_round: size bound |C| <= k violated");
  return {std::move(c), std::move(trace)};
}

struct RoundResult {
  CenterSet centers;
  CostReport costs;  // estimates used by sparsify
  SparsifyTrace sparsify_trace;
  PartialSolution partial;
  FinalRoundTrace final_trace;
};

// Full rounding chain: cost estimation, sparsify, partial round, final round.
inline RoundResult round_pipeline(const DistanceOracle& oracle, const FractionalSolution& y,
                                  std::size_t k, double gamma, const PrimitiveBackend& backend) {
  const std::size_t n = oracle.size();
  if (std::fabs(y.mass() - static_cast<double>(k)) > 1e-6)
    throw parameter_error("round_pipeline: ||y||_1 must equal k");
  RoundResult res;
  if (k >= n) {  // every point may open; the fractional solution is all-ones
    res.centers.resize(n);
    for (std::size_t p = 0; p < n; ++p) res.centers[p] = p;
    return res;
  }
  res.costs = estimate_costs(oracle, y, gamma, backend);
  auto [w, st] = sparsify(oracle, y, res.costs, gamma, backend);
  res.sparsify_trace = std::move(st);
  res.partial = partial_round(oracle, y, w, k, gamma, backend);
  auto [c, ft] = final_round(oracle, res.partial, k, gamma, backend);
  res.centers = std::move(c);
  res.final_trace = std::move(ft);
  return res;
}

struct SolveResult {
  CenterSet centers;
  double cost = 0.0;  // in the input oracle's units
  std::size_t k = 0;
  int z = 1;
  double gamma = 1.0;
  double normalize_scale = 1.0;
  SweepTrace sweep;
  RoundResult rounding;
};

// End-to-end solver: normalize, lambda-sweep to a fractional solution with
// mass k, round to at most k centers. Accepts a raw oracle and reports the
// cost in its units.
inline SolveResult solve_kz(const DistanceOracle& oracle, std::size_t k, double gamma,
                            const PrimitiveBackend& backend, std::uint64_t seed = 1) {
  const std::size_t n = oracle.size();
  if (k < 1 || k > n) throw parameter_error("solve_kz: k out of range");
  SolveResult res;
  res.k = k;
  res.z = oracle.z();
  res.gamma = gamma;

  if (k == n) {
    res.centers.resize(n);
    for (std::size_t p = 0; p < n; ++p) res.centers[p] = p;
    res.cost = 0.0;
    return res;
  }
  if (k == 1) {
    auto [y, cost] = sample_k1(oracle, 0, seed);
    for (std::size_t p = 0; p < n; ++p)
      if (y.y[p] == 1.0) res.centers.push_back(p);
    res.cost = cost;
    return res;
  }

  double mind = min_pairwise_dist(oracle.base());
  if (!(mind > 0.0)) throw degenerate_error("solve_kz: duplicate points");
  double scale = 2.0 / mind;
  DistanceOracle normalized =
      std::fabs(mind - 2.0) <= 1e-12 ? oracle : oracle_scaled(oracle, scale);
  res.normalize_scale = scale;

  auto [y, sweep] = fractional_kz(normalized, k, gamma, backend);
  res.sweep = std::move(sweep);
  res.rounding = round_pipeline(normalized, y, k, gamma, backend);
  res.centers = res.rounding.centers;
  res.cost = center_set_cost(oracle, res.centers);
  return res;
}

}  // namespace mpclust
