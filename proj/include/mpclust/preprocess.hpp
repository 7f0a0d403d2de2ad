#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "mpclust/dataset.hpp"
#include "mpclust/distance.hpp"
#include "mpclust/errors.hpp"
#include "mpclust/rng.hpp"

namespace mpclust {

// Record of the aspect-ratio reduction map, enough to invert it and to audit
// the bound it promises.
struct PreprocessTrace {
  std::vector<double> coordinate_values;      // sorted distinct input coordinates
  std::vector<double> h_images;               // h applied to each of them
  double eta_pre = 0.0;                       // coarse OPT estimate
  double beta_est = 0.0;                      // declared poly(n) factor of eta_pre
  double alpha_prime = 0.0;                   // gap-collapse threshold factor
  double net_step = 0.0;                      // grid side of the snapping nets
  double net_offset_unit = 0.0;               // per-index net offset
  double aspect_ratio_before = 0.0;
  double aspect_ratio_after = 0.0;
  double aspect_bound = 0.0;                  // numeric bound asserted on every run
  std::vector<std::pair<std::size_t, std::vector<double>>> mapping;  // id -> f(p)
};

// Farthest-point (Gonzalez) k-center heuristic value: max distance from any
// point to the greedily chosen centers.
inline double gonzalez_kcenter_value(const Dataset& data, std::size_t k) {
  const std::size_t n = data.size();
  std::vector<double> dist_to_centers(n, std::numeric_limits<double>::infinity());
  std::size_t next = 0;
  double radius = 0.0;
  for (std::size_t i = 0; i < std::min(k, n); ++i) {
    std::size_t c = next;
    radius = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      dist_to_centers[p] = std::min(dist_to_centers[p], data.euclidean(p, c));
      if (dist_to_centers[p] > radius) {
        radius = dist_to_centers[p];
        next = p;
      }
    }
  }
  return radius;
}

// Aspect-ratio reduction: collapse gaps larger than (alpha' * eta)^(1/z) in
// every coordinate, then snap each point to its own slightly offset grid.
// The output admits any alpha-approximate solution to be pulled back at a
// 2^O(z) factor, and its aspect ratio is polynomially bounded (the concrete
// bound is recorded and asserted numerically).
inline std::pair<Dataset, PreprocessTrace> reduce_aspect_ratio(const Dataset& data, std::size_t k,
                                                               int z, double alpha = 1.0) {
  const std::size_t n = data.size();
  const int d = data.dim();
  if (n < 2) throw precondition_error("reduce_aspect_ratio: need at least 2 points");
  if (k < 1 || k > n) throw parameter_error("reduce_aspect_ratio: k out of range");
  if (alpha < 1.0) throw parameter_error("reduce_aspect_ratio: alpha must be >= 1");

  PreprocessTrace trace;
  double kcenter = gonzalez_kcenter_value(data, k);
  if (!(kcenter > 0.0))
    throw degenerate_error("reduce_aspect_ratio: k centers already cover the dataset (OPT = 0)");
  const double nd = static_cast<double>(n);
  trace.eta_pre = nd * ipow(kcenter, z);
  trace.beta_est = nd * nd * ipow(4.0, z);
  trace.alpha_prime = ipow(4.0, z) * alpha;

  PairwiseExtremes before = pairwise_extremes(data);
  trace.aspect_ratio_before = before.max_dist / std::max(before.min_dist, 1e-300);

  // Sorted distinct coordinate values and the gap-collapsing map h.
  std::vector<double> t(data.coords());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  const double gap_cap = std::pow(trace.alpha_prime * trace.eta_pre, 1.0 / z);
  std::vector<double> h(t.size());
  if (!t.empty()) h[0] = t[0];
  for (std::size_t i = 1; i < t.size(); ++i)
    h[i] = h[i - 1] + std::min(t[i] - t[i - 1], gap_cap);
  trace.coordinate_values = t;
  trace.h_images = h;

  std::map<double, double> hmap;
  for (std::size_t i = 0; i < t.size(); ++i) hmap[t[i]] = h[i];

  // Net snapping: grid side eta^(1/z) / (n sqrt(d) beta^(1/z)), per-index
  // offset with divisor n^4 (the proofs only need "sufficiently small", and
  // n^4 keeps the arithmetic inside double precision).
  const double root_d = std::sqrt(static_cast<double>(d));
  trace.net_step =
      std::pow(trace.eta_pre, 1.0 / z) / (nd * root_d * std::pow(trace.beta_est, 1.0 / z));
  trace.net_offset_unit = trace.net_step / (nd * nd * nd * nd);

  std::vector<double> out;
  out.reserve(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    double offset = trace.net_offset_unit * static_cast<double>(i + 1);
    std::vector<double> fp(d);
    for (int j = 0; j < d; ++j) {
      double g = hmap[data.coord(i, j)];
      fp[j] = std::round((g - offset) / trace.net_step) * trace.net_step + offset;
    }
    trace.mapping.push_back({i, fp});
    out.insert(out.end(), fp.begin(), fp.end());
  }
  Dataset fd(std::move(out), d);

  PairwiseExtremes after = pairwise_extremes(fd);
  if (!(after.min_dist > 0.0))
    throw error("reduce_aspect_ratio: net snapping collapsed two points");
  trace.aspect_ratio_after = after.max_dist / after.min_dist;

  // Numeric bound: max distance <= sqrt(d) * (m * gap_cap + 2 net_step),
  // min distance >= net_offset_unit.
  double m = static_cast<double>(t.size());
  trace.aspect_bound =
      root_d * (m * gap_cap + 2.0 * trace.net_step) / trace.net_offset_unit;
  if (trace.aspect_ratio_after > trace.aspect_bound)
    throw error("reduce_aspect_ratio: output exceeded its aspect-ratio bound");
  return {std::move(fd), std::move(trace)};
}

// Gaussian random projection to target_dim, scaled by 1/sqrt(target_dim).
// seed < 0 with target_dim == dim is the identity debug mode.
inline Dataset jl_project(const Dataset& data, int target_dim, long long seed) {
  if (target_dim < 1) throw parameter_error("jl_project: target_dim must be >= 1");
  const int d = data.dim();
  const std::size_t n = data.size();
  if (seed < 0) {
    if (target_dim != d)
      throw parameter_error("jl_project: identity debug mode needs target_dim == dim");
    return data;
  }
  Rng rng(hash_combine(static_cast<std::uint64_t>(seed), 0x11D2ULL));
  std::vector<double> g(static_cast<std::size_t>(target_dim) * d);
  for (double& v : g) v = rng.next_gaussian();
  const double s = 1.0 / std::sqrt(static_cast<double>(target_dim));
  std::vector<double> out(n * target_dim, 0.0);
  for (std::size_t p = 0; p < n; ++p)
    for (int i = 0; i < target_dim; ++i) {
      double acc = 0.0;
      for (int j = 0; j < d; ++j) acc += g[static_cast<std::size_t>(i) * d + j] * data.coord(p, j);
      out[p * target_dim + i] = s * acc;
    }
  return Dataset(std::move(out), target_dim);
}

}  // namespace mpclust
