#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mpclust/assignment.hpp"
#include "mpclust/distance.hpp"
#include "mpclust/errors.hpp"
#include "mpclust/mp_facility.hpp"
#include "mpclust/primitives.hpp"
#include "mpclust/reduce.hpp"
#include "mpclust/rng.hpp"

namespace mpclust {

// Everything the lambda sweep decided, for reporting and regression tests.
struct SweepTrace {
  int L = 0;
  std::vector<double> lambdas;  // lambda_l = 2^(l z)
  std::vector<double> masses;   // ||y^(l)||_1
  int ell_star = 0;
  double alpha = 1.0;
};

// Opening costs lambda_l = 2^(l z) for l in 0..L; L is the smallest value
// with 2^(L z) > 2 n (max dist)^z, which forces ||y^(L)||_1 <= 2.
inline int sweep_level_count(const DistanceOracle& oracle) {
  const int z = oracle.z();
  double bound = 2.0 * static_cast<double>(oracle.size()) *
                 ipow(std::max(max_pairwise_dist(oracle), 1.0), z);
  int L = 1;
  while (ipow(2.0, L * z) <= bound) ++L;
  return L;
}

// Picks the smallest l* with mass[l*] <= k <= mass[l*-1] and the blend
// weight alpha with alpha*mass[l*-1] + (1-alpha)*mass[l*] = k.
inline std::pair<int, double> select_blend(const std::vector<double>& masses, std::size_t k) {
  const double kd = static_cast<double>(k);
  int ell_star = -1;
  for (std::size_t ell = 1; ell < masses.size(); ++ell) {
    if (masses[ell] <= kd + kMassTol && masses[ell - 1] >= kd - kMassTol) {
      ell_star = static_cast<int>(ell);
      break;
    }
  }
  if (ell_star < 0) throw error("lambda sweep: no bracketing index found");
  double m_lo = masses[ell_star];      // <= k
  double m_hi = masses[ell_star - 1];  // >= k
  double denom = m_hi - m_lo;
  double alpha = denom < 1e-12 ? 1.0 : std::clamp((kd - m_lo) / denom, 0.0, 1.0);
  return {ell_star, alpha};
}

// Algorithm: run the level-variant MP solver across the lambda grid, find the
// bracketing index l* with ||y^(l*-1)||_1 >= k >= ||y^(l*)||_1, and blend the
// two solutions so the total mass is exactly k. Masses use the canonical
// tree sum so the distributed rendition is bit-identical.
inline std::pair<FractionalSolution, SweepTrace> fractional_kz(const DistanceOracle& oracle,
                                                               std::size_t k, double gamma,
                                                               const PrimitiveBackend& backend) {
  const std::size_t n = oracle.size();
  if (k < 2) throw parameter_error("fractional_kz: k must be >= 2 (k = 1 uses sample_k1)");
  if (k > n) throw parameter_error("fractional_kz: k exceeds the number of points");
  if (!is_normalized(oracle))
    throw precondition_error("fractional_kz: dataset is not normalized (min dist < 2)");

  const int z = oracle.z();
  SweepTrace trace;
  trace.L = sweep_level_count(oracle);

  LevelProfile lp = level_profile(oracle, gamma, backend);

  std::vector<FractionalSolution> ys;
  ys.reserve(trace.L + 1);
  ys.push_back(FractionalSolution{std::vector<double>(n, 1.0)});
  trace.lambdas.push_back(1.0);
  trace.masses.push_back(canonical_tree_sum(ys[0].y));
  for (int ell = 1; ell <= trace.L; ++ell) {
    double lambda = ipow(2.0, ell * z);
    ys.push_back(radii_from_levels(lp, z, lambda));
    trace.lambdas.push_back(lambda);
    trace.masses.push_back(canonical_tree_sum(ys[ell].y));
  }

  auto [ell_star, alpha] = select_blend(trace.masses, k);
  trace.ell_star = ell_star;
  trace.alpha = alpha;

  FractionalSolution y;
  y.y.resize(n);
  const auto& hi = ys[ell_star - 1].y;
  const auto& lo = ys[ell_star].y;
  for (std::size_t p = 0; p < n; ++p)
    y.y[p] = trace.alpha * hi[p] + (1.0 - trace.alpha) * lo[p];
  return {std::move(y), std::move(trace)};
}

// k = 1: uniform candidate centers, keep the best. The returned cost is the
// exact clustering cost of the chosen singleton.
inline std::pair<FractionalSolution, double> sample_k1(const DistanceOracle& oracle,
                                                       int repeats, std::uint64_t seed) {
  const std::size_t n = oracle.size();
  if (n == 0) throw parameter_error("sample_k1: empty dataset");
  if (repeats <= 0)
    repeats = static_cast<int>(std::ceil(3.0 * std::log(std::max<double>(2.0, n)))) + 1;
  Rng rng(hash_combine(seed, 0x5A3E11ULL));
  double best_cost = std::numeric_limits<double>::infinity();
  std::size_t best_center = 0;
  std::vector<double> costs(n);
  for (int t = 0; t < repeats; ++t) {
    std::size_t c = n == 1 ? 0 : static_cast<std::size_t>(rng.next_below(n));
    for (std::size_t p = 0; p < n; ++p) costs[p] = oracle.powz(p, c);
    double cost = canonical_tree_sum(costs);  // matches the distributed converge
    if (cost < best_cost || (cost == best_cost && c < best_center)) {
      best_cost = cost;
      best_center = c;
    }
  }
  FractionalSolution y;
  y.y.assign(n, 0.0);
  y.y[best_center] = 1.0;
  return {std::move(y), best_cost};
}

struct ValueEstimate {
  double eta = 0.0;
  double alpha_scale = 1.0;
  std::size_t k = 0;
  int z = 1;
  double gamma = 1.0;
  std::vector<double> per_point;  // tilde-cost per point, normalized units
  SweepTrace trace;
  double normalize_scale = 1.0;
};

// Estimate of the optimal (k,z)-clustering value. Accepts a raw (possibly
// unnormalized) oracle; the estimate is reported in the input's units, so
// scaling every distance by c scales eta by c^z.
inline ValueEstimate estimate_opt_value(const DistanceOracle& oracle, std::size_t k, double gamma,
                                        const PrimitiveBackend& backend, std::uint64_t seed = 1,
                                        double alpha_scale = 0.0) {
  const std::size_t n = oracle.size();
  if (k < 1 || k > n) throw parameter_error("estimate_opt_value: k out of range");
  const int z = oracle.z();

  ValueEstimate est;
  est.k = k;
  est.z = z;
  est.gamma = gamma;

  if (k == n) {  // every point open: OPT = 0 and the estimate is exact
    est.alpha_scale = 1.0;
    est.eta = 0.0;
    est.per_point.assign(n, 0.0);
    return est;
  }

  if (k == 1) {
    auto [y, cost] = sample_k1(oracle, 0, seed);
    est.alpha_scale = 1.0;  // a singleton's exact cost already upper-bounds OPT
    est.eta = cost;
    return est;
  }

  // Normalize, sweep, estimate, then map back to input units.
  double scale = 1.0;
  DistanceOracle normalized = oracle;
  double mind = min_pairwise_dist(oracle.base());
  if (!(mind > 0.0)) throw degenerate_error("estimate_opt_value: duplicate points");
  if (std::fabs(mind - 2.0) > 1e-12) {
    scale = 2.0 / mind;
    normalized = oracle_scaled(oracle, scale);
  }
  est.normalize_scale = scale;

  auto [y, trace] = fractional_kz(normalized, k, gamma, backend);
  est.trace = std::move(trace);
  CostReport costs = estimate_costs(normalized, y, gamma, backend);
  est.alpha_scale = alpha_scale > 0.0 ? alpha_scale : ipow(2.0, 2 * z);
  est.per_point = costs.estimated_per_point;
  est.eta = est.alpha_scale * costs.estimated_total / ipow(scale, z);
  return est;
}

}  // namespace mpclust
