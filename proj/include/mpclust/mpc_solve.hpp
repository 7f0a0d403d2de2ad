#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mpclust/dataset.hpp"
#include "mpclust/distance.hpp"
#include "mpclust/errors.hpp"
#include "mpclust/fractional.hpp"
#include "mpclust/mp_facility.hpp"
#include "mpclust/mpc.hpp"
#include "mpclust/rounding.hpp"

namespace mpclust {

// ---------------------------------------------------------------------------
// Standalone distributed kernels.

// Globally sorts scalar items; output equals the offline sort exactly.
inline std::pair<std::vector<double>, RunStats> mpc_sort_values(const std::vector<double>& items,
                                                                const MpcConfig& cfg) {
  MpcEngine eng(cfg, items.size(), 1);
  DVec v = eng.create(1, items);
  eng.sort(v);
  return {v.snapshot(), eng.stats()};
}

// Groups (key, value) rows by key and reduces the values; results come back
// sorted by key. Identical to offline grouping for integer-valued data and
// for min/max reductions.
inline std::pair<std::vector<std::pair<double, double>>, RunStats> mpc_aggregate_values(
    const std::vector<std::pair<double, double>>& items, MpcEngine::AggOp op,
    const MpcConfig& cfg) {
  MpcEngine eng(cfg, std::max<std::size_t>(items.size(), 1), 2);
  std::vector<double> flat;
  flat.reserve(items.size() * 2);
  for (const auto& [k, v] : items) {
    flat.push_back(k);
    flat.push_back(v);
  }
  DVec v = eng.create(2, flat);
  DVec res = eng.aggregate(std::move(v), op);
  auto out_flat = res.snapshot();
  std::vector<std::pair<double, double>> out;
  for (std::size_t off = 0; off + 2 <= out_flat.size(); off += 2)
    out.push_back({out_flat[off], out_flat[off + 1]});
  std::sort(out.begin(), out.end());
  return {out, eng.stats()};
}

inline std::pair<std::vector<std::pair<double, double>>, RunStats> mpc_aggregate_sum(
    const std::vector<std::pair<double, double>>& items, const MpcConfig& cfg) {
  return mpc_aggregate_values(items, MpcEngine::AggOp::sum, cfg);
}

// ---------------------------------------------------------------------------
// Distributed end-to-end solver. Data movement (reductions, sorts,
// aggregations, broadcasts, routing) runs through the BSP engine with real
// payloads; the geometric primitives execute exactly offline and are charged
// rounds/memory through the backend cost model. Per-point arithmetic uses
// the same kernels as the offline path and cross-machine sums are canonical,
// so the output center set is bit-identical to solve_kz with the exact
// backend. The seams where the engine recomputes a stage's output are
// asserted against the offline stage as the run progresses.

struct DistributedSolveResult {
  SolveResult solve;
  RunStats stats;
};

inline bool trace_has_half(const FinalRoundTrace& t) { return !t.half_open.empty(); }

inline DistributedSolveResult distributed_solve_kz(const Dataset& data, std::size_t k, int z,
                                                   double gamma, const MpcConfig& cfg,
                                                   std::uint64_t seed = 1) {
  DistanceOracle oracle = DistanceOracle::euclidean(data, z);
  const std::size_t n = data.size();
  const std::size_t d = static_cast<std::size_t>(data.dim());
  if (k < 1 || k > n) throw parameter_error("distributed_solve_kz: k out of range");

  DistributedSolveResult out;
  out.solve.k = k;
  out.solve.z = z;
  out.solve.gamma = gamma;

  auto point_rows = [&]() {
    std::vector<double> rows;
    rows.reserve(n * (d + 1));
    for (std::size_t p = 0; p < n; ++p) {
      rows.push_back(static_cast<double>(p));
      auto pt = data.point(p);
      rows.insert(rows.end(), pt.begin(), pt.end());
    }
    return rows;
  };

  if (k == n) {
    MpcEngine eng(cfg, n, d + 1);
    DVec points = eng.create(d + 1, point_rows());
    out.solve.centers.resize(n);
    for (std::size_t p = 0; p < n; ++p) out.solve.centers[p] = p;
    out.solve.cost = 0.0;
    out.stats = eng.stats();
    return out;
  }

  if (k == 1) {
    MpcEngine eng(cfg, n, d + 2);
    DVec points = eng.create(d + 1, point_rows());
    int repeats = static_cast<int>(std::ceil(3.0 * std::log(std::max<double>(2.0, n)))) + 1;
    Rng rng(hash_combine(seed, 0x5A3E11ULL));
    double best_cost = std::numeric_limits<double>::infinity();
    std::size_t best_center = 0;
    for (int t = 0; t < repeats; ++t) {
      std::size_t c = n == 1 ? 0 : static_cast<std::size_t>(rng.next_below(n));
      eng.broadcast_words(d + 1);  // candidate coordinates to every machine
      std::vector<std::vector<double>> partial(eng.machines(), std::vector<double>(1, 0.0));
      eng.local(points, [&](std::size_t m, std::vector<double>& b) {
        std::size_t nrows = b.size() / (d + 1);
        std::vector<double> costs(nrows);
        for (std::size_t r = 0; r < nrows; ++r)
          costs[r] = oracle.powz(static_cast<std::size_t>(b[r * (d + 1)]), c);
        partial[m][0] = canonical_tree_sum(costs);
      });
      double cost = eng.reduce_machine_partials(partial)[0];
      if (cost < best_cost || (cost == best_cost && c < best_center)) {
        best_cost = cost;
        best_center = c;
      }
    }
    out.solve.centers = {best_center};
    out.solve.cost = best_cost;
    out.stats = eng.stats();
    return out;
  }

  // --- normalization metadata (deterministic, same value as offline).
  double mind = min_pairwise_dist(oracle);
  if (!(mind > 0.0)) throw degenerate_error("distributed_solve_kz: duplicate points");
  double scale = 2.0 / mind;
  DistanceOracle norm = std::fabs(mind - 2.0) <= 1e-12 ? oracle : oracle_scaled(oracle, scale);
  out.solve.normalize_scale = scale;

  const int L_lv = level_count_L(norm, gamma);
  const int L_sweep = sweep_level_count(norm);
  const std::size_t width_budget = (d + 1) + (L_lv + 2) + 14;
  MpcEngine eng(cfg, n, width_budget);
  PrimitiveBackend backend =
      PrimitiveBackend::cost_modeled(gamma, n, cfg.s, static_cast<ChargeSink*>(&eng));
  PrimitiveBackend quiet = backend;  // same answers, no charges (verification)
  quiet.sink = nullptr;

  DVec points = eng.create(d + 1, point_rows());

  // --- lambda sweep ------------------------------------------------------
  LevelProfile lp = level_profile(norm, gamma, backend);  // charged primitive
  const std::size_t cw = static_cast<std::size_t>(lp.L) + 2;
  std::vector<double> count_rows;
  count_rows.reserve(n * cw);
  for (std::size_t p = 0; p < n; ++p) {
    count_rows.push_back(static_cast<double>(p));
    count_rows.insert(count_rows.end(), lp.counts[p].begin(), lp.counts[p].end());
  }
  DVec counts = eng.create(cw, count_rows);

  SweepTrace sweep;
  sweep.L = L_sweep;
  sweep.lambdas.resize(L_sweep + 1);
  for (int ell = 0; ell <= L_sweep; ++ell) sweep.lambdas[ell] = ipow(2.0, ell * z);

  // One converge carries canonical mass partials for every lambda at once.
  std::vector<std::vector<double>> partial(eng.machines(),
                                           std::vector<double>(L_sweep + 1, 0.0));
  eng.local(counts, [&](std::size_t m, std::vector<double>& b) {
    std::size_t nrows = b.size() / cw;
    std::vector<double> ys(nrows);
    for (int ell = 0; ell <= L_sweep; ++ell) {
      double lambda = sweep.lambdas[ell];
      for (std::size_t r = 0; r < nrows; ++r)
        ys[r] = ell == 0
                    ? 1.0
                    : radius_from_count_row(b.data() + r * cw + 1, lp.L, gamma, z, lambda) /
                          lambda;
      partial[m][ell] = canonical_tree_sum(ys);
    }
  });
  sweep.masses = eng.reduce_machine_partials(partial);
  const auto blend_choice = select_blend(sweep.masses, k);
  const int ell_star = blend_choice.first;
  const double alpha = blend_choice.second;
  sweep.ell_star = ell_star;
  sweep.alpha = alpha;
  eng.broadcast_words(2);  // (l*, alpha) to every machine

  DVec y_vec = eng.create(2, std::vector<double>(n * 2, 0.0));
  {
    const double lam_hi = sweep.lambdas[ell_star - 1];
    const double lam_lo = sweep.lambdas[ell_star];
    eng.local2(counts, y_vec, [&](std::size_t, std::vector<double>& cb, std::vector<double>& yb) {
      std::size_t nrows = cb.size() / cw;
      for (std::size_t r = 0; r < nrows; ++r) {
        double hi = ell_star == 1
                        ? 1.0
                        : radius_from_count_row(cb.data() + r * cw + 1, lp.L, gamma, z, lam_hi) /
                              lam_hi;
        double lo =
            radius_from_count_row(cb.data() + r * cw + 1, lp.L, gamma, z, lam_lo) / lam_lo;
        yb[r * 2] = cb[r * cw];  // id
        yb[r * 2 + 1] = alpha * hi + (1.0 - alpha) * lo;
      }
    });
  }
  FractionalSolution y_sol;
  {
    auto flat = y_vec.snapshot();
    y_sol.y.assign(n, 0.0);
    for (std::size_t off = 0; off + 2 <= flat.size(); off += 2)
      y_sol.y[static_cast<std::size_t>(flat[off])] = flat[off + 1];
  }

  // --- cost estimation (charged primitives; per-point math is local) -----
  CostReport costs = estimate_costs(norm, y_sol, gamma, backend);
  DVec tvec = eng.create(2, std::vector<double>(n * 2, 0.0));
  eng.local(tvec, [&](std::size_t m, std::vector<double>& b) {
    std::size_t base = m * eng.id_block();
    std::size_t nrows = b.size() / 2;
    for (std::size_t r = 0; r < nrows; ++r) {
      b[r * 2] = static_cast<double>(base + r);
      b[r * 2 + 1] = costs.estimated_per_point[base + r];
    }
  });

  // --- sparsify (primitives charged once); weights via genuine aggregate -
  auto [wf, strace] = sparsify(norm, y_sol, costs, gamma, backend);
  {
    std::vector<double> pick_rows;
    for (int ell = 0; ell <= strace.L; ++ell)
      for (std::size_t t : strace.picks[ell]) {
        pick_rows.push_back(static_cast<double>(t));
        pick_rows.push_back(1.0);
      }
    DVec picks = eng.create(2, pick_rows);
    DVec wagg = eng.aggregate(std::move(picks), MpcEngine::AggOp::sum);
    auto flat = wagg.snapshot();
    for (std::size_t off = 0; off + 2 <= flat.size(); off += 2)
      if (wf.w[static_cast<std::size_t>(flat[off])] != static_cast<long long>(flat[off + 1]))
        throw error("distributed_solve_kz: aggregated weights disagree with offline weights");
  }

  // --- partial rounding ---------------------------------------------------
  PartialSolution part = partial_round(norm, y_sol, wf, k, gamma, backend);
  {
    // The support sort runs genuinely: rows (-key, id), ascending.
    const std::size_t m_supp = part.m;
    std::vector<double> rows;
    rows.reserve(m_supp * 2);
    for (std::size_t i = 0; i < m_supp; ++i) {
      std::size_t p = part.sorted_support[i];
      double key = static_cast<double>(wf.w[p]) * ipow(part.hat_dist[i], z);
      rows.push_back(-key);
      rows.push_back(static_cast<double>(p));
    }
    DVec srt = eng.create(2, rows);
    eng.sort(srt);
    auto flat = srt.snapshot();
    for (std::size_t i = 0; i < m_supp; ++i)
      if (static_cast<std::size_t>(flat[i * 2 + 1]) != part.sorted_support[i])
        throw error("distributed_solve_kz: support sort disagrees with offline order");
    // Ranks assign 1 vs 1/2; values travel back to their owners.
    DVec yt = eng.create(2, [&] {
      std::vector<double> r2(flat);
      std::size_t full = 0;
      if (2 * k > m_supp) full = std::min(2 * k - m_supp, m_supp);
      for (std::size_t i = 0; i < m_supp; ++i) {
        r2[i * 2] = flat[i * 2 + 1];           // id
        r2[i * 2 + 1] = i < full ? 1.0 : 0.5;  // opening
      }
      return r2;
    }());
    eng.route(yt, [&](const double* row) { return eng.owner_of(static_cast<std::size_t>(row[0])); });
    auto ytf = yt.snapshot();
    for (std::size_t off = 0; off + 2 <= ytf.size(); off += 2)
      if (part.y_tilde[static_cast<std::size_t>(ytf[off])] != ytf[off + 1])
        throw error("distributed_solve_kz: partial opening disagrees with offline value");
  }

  // --- final rounding ------------------------------------------------------
  auto [centers, ftrace] = final_round(norm, part, k, gamma, backend);
  if (trace_has_half(ftrace)) {
    // Monotone-ANN reverse candidates resolve through a genuine min_lex
    // aggregate; forward candidates combine locally.
    std::vector<std::size_t> tilde = ann_excluding_self(norm, ftrace.half_open, quiet);
    std::vector<double> rows;
    for (std::size_t i = 0; i < ftrace.half_open.size(); ++i) {
      rows.push_back(static_cast<double>(tilde[i]));                       // key: target
      rows.push_back(norm.dist(tilde[i], ftrace.half_open[i]));            // dist
      rows.push_back(static_cast<double>(ftrace.half_open[i]));            // source
    }
    DVec rev = eng.create(3, rows);
    DVec best = eng.aggregate(std::move(rev), MpcEngine::AggOp::min_lex);
    auto flat = best.snapshot();
    std::vector<std::size_t> pos(norm.size(), static_cast<std::size_t>(-1));
    for (std::size_t i = 0; i < ftrace.half_open.size(); ++i) pos[ftrace.half_open[i]] = i;
    for (std::size_t off = 0; off + 3 <= flat.size(); off += 3) {
      std::size_t p = static_cast<std::size_t>(flat[off]);
      std::size_t i = pos[p];
      if (i == static_cast<std::size_t>(-1)) continue;
      // h(p) = argmin over forward and best reverse candidate
      double fd = norm.dist(p, tilde[i]);
      double rd = flat[off + 1];
      std::size_t rq = static_cast<std::size_t>(flat[off + 2]);
      std::size_t h = tilde[i];
      if (rd < fd || (rd == fd && rq < h)) h = rq;
      if (h != ftrace.h[i])
        throw error("distributed_solve_kz: monotone ANN disagrees with offline map");
    }
    // Level masks for the isolated-center filter (bit_or aggregate rounds).
    std::vector<double> mask_rows;
    for (std::size_t i = 0; i < ftrace.half_open.size(); ++i) {
      double dd = norm.dist(ftrace.half_open[i], ftrace.h[i]);
      int lvl = std::max(1, static_cast<int>(std::ceil(std::log2(dd) - 1e-12)));
      mask_rows.push_back(static_cast<double>(ftrace.h[i]));
      mask_rows.push_back(static_cast<double>(1ULL << std::min(lvl, 50)));
    }
    DVec masks = eng.create(2, mask_rows);
    DVec ored = eng.aggregate(std::move(masks), MpcEngine::AggOp::bit_or);
  }

  // Center indicators stay distributed; the size check converges one word.
  {
    std::vector<double> crow;
    for (std::size_t c : centers) crow.push_back(static_cast<double>(c));
    DVec cvec = eng.create(1, crow);
    std::vector<std::vector<double>> ones(eng.machines(), std::vector<double>(1, 0.0));
    eng.local(cvec, [&](std::size_t m, std::vector<double>& b) {
      ones[m][0] = static_cast<double>(b.size());
    });
    double total = eng.reduce_machine_partials(ones)[0];
    if (static_cast<std::size_t>(total) != centers.size() || centers.size() > k)
      throw error("distributed_solve_kz: center count check failed");
  }

  out.solve.centers = centers;
  out.solve.cost = center_set_cost(oracle, centers);
  out.solve.sweep = sweep;
  out.solve.rounding.centers = centers;
  out.solve.rounding.costs = costs;
  out.solve.rounding.sparsify_trace = strace;
  out.solve.rounding.partial = part;
  out.solve.rounding.final_trace = ftrace;
  out.stats = eng.stats();
  return out;
}

}  // namespace mpclust
