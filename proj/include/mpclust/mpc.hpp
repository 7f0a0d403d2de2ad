#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "mpclust/errors.hpp"
#include "mpclust/primitives.hpp"
#include "mpclust/reduce.hpp"

namespace mpclust {

// Bulk-synchronous machine model: machine_count machines, each with s words
// of local memory; per round every machine may send and receive at most s
// words. Messages are delivered only at round boundaries.
struct MpcConfig {
  std::size_t s = 64;
  std::size_t machine_count = 0;  // 0 = sized from the input
  std::uint64_t seed = 0;
};

struct RunStats {
  long long supersteps = 0;
  std::size_t peak_local = 0;
  long long base_memory_words = 0;
  std::vector<PrimitiveCharge> charges;

  long long charged_rounds() const {
    long long r = 0;
    for (const auto& c : charges) r += c.rounds;
    return r;
  }
  long long charged_memory() const {
    long long m = 0;
    for (const auto& c : charges) m += c.memory_words;
    return m;
  }
  // Rounds = genuinely simulated supersteps plus rounds charged by the
  // cost-modeled geometric primitives.
  long long rounds() const { return supersteps + charged_rounds(); }
  long long total_memory() const { return base_memory_words + charged_memory(); }
};

class MpcEngine;

// Distributed collection of fixed-width rows of doubles. Rows sit in global
// positions; machine m holds positions [m*block, (m+1)*block) for the
// collection's block size (a power of two, so canonical tree sums align with
// machine boundaries).
class DVec {
 public:
  DVec() = default;
  DVec(const DVec&) = delete;
  DVec& operator=(const DVec&) = delete;
  inline DVec(DVec&& o) noexcept;
  inline DVec& operator=(DVec&& o) noexcept;
  inline ~DVec();

  std::size_t width() const { return width_; }
  std::size_t block() const { return block_; }
  std::size_t rows() const {
    std::size_t r = 0;
    for (const auto& b : blocks_) r += b.size();
    return r / std::max<std::size_t>(width_, 1);
  }
  std::size_t words_on(std::size_t machine) const { return blocks_[machine].size(); }

  // Free read-out for reports and tests; not an algorithm step.
  std::vector<double> snapshot() const {
    std::vector<double> out;
    for (const auto& b : blocks_) out.insert(out.end(), b.begin(), b.end());
    return out;
  }

 private:
  friend class MpcEngine;
  MpcEngine* eng_ = nullptr;
  std::size_t width_ = 0;
  std::size_t block_ = 1;
  std::vector<std::vector<double>> blocks_;  // per-machine flat words
};

class MpcEngine : public ChargeSink {
 public:
  // n_ids: number of id-keyed rows the pipeline stores; width_budget: total
  // width of collections resident simultaneously.
  MpcEngine(const MpcConfig& cfg, std::size_t n_ids, std::size_t width_budget) : cfg_(cfg) {
    if (n_ids == 0) n_ids = 1;
    if (width_budget == 0) width_budget = 1;
    if (cfg_.s < polylog_floor(n_ids))
      throw capacity_error("mpc: local memory below the polylog floor for this input");
    if (cfg_.machine_count == 0) {
      std::size_t rows_per = std::max<std::size_t>(1, cfg_.s / (2 * width_budget));
      id_block_ = floor_pow2(rows_per);
      machine_count_ = (n_ids + id_block_ - 1) / id_block_;
      if (id_block_ * width_budget > cfg_.s)
        throw capacity_error("mpc: local memory cannot hold one row of every live collection");
    } else {
      machine_count_ = cfg_.machine_count;
      std::size_t rows_per = (n_ids + machine_count_ - 1) / machine_count_;
      id_block_ = ceil_pow2(rows_per);
      if (id_block_ * width_budget > cfg_.s)
        throw capacity_error("mpc: machine_count * s cannot hold the input");
    }
    machine_count_ = std::max<std::size_t>(machine_count_, 1);
    stats_.base_memory_words = static_cast<long long>(machine_count_ * cfg_.s);
  }

  static std::size_t polylog_floor(std::size_t n) {
    std::size_t lg = 1;
    while ((1ULL << lg) < n) ++lg;
    return std::max<std::size_t>(4, lg);
  }

  std::size_t machines() const { return machine_count_; }
  std::size_t s() const { return cfg_.s; }
  std::size_t id_block() const { return id_block_; }
  std::size_t owner_of(std::size_t id) const {
    return std::min(id / id_block_, machine_count_ - 1);
  }
  const RunStats& stats() const { return stats_; }
  void on_charge(const PrimitiveCharge& c) override { stats_.charges.push_back(c); }

  // -------------------------------------------------------------------
  // Collections

  // Places rows block-by-block (inputs arrive distributed; no rounds).
  DVec create(std::size_t width, const std::vector<double>& flat_rows,
              std::size_t block_rows = 0) {
    if (width == 0) throw parameter_error("mpc create: width must be positive");
    if (flat_rows.size() % width != 0) throw parameter_error("mpc create: ragged rows");
    DVec v;
    v.eng_ = this;
    v.width_ = width;
    v.block_ = block_rows == 0 ? id_block_ : ceil_pow2(block_rows);
    v.blocks_.assign(machine_count_, {});
    std::size_t nrows = flat_rows.size() / width;
    if (nrows > machine_count_ * v.block_)
      throw capacity_error("mpc create: collection does not fit the machines");
    for (std::size_t r = 0; r < nrows; ++r) {
      std::size_t m = std::min(r / v.block_, machine_count_ - 1);
      v.blocks_[m].insert(v.blocks_[m].end(), flat_rows.begin() + r * width,
                          flat_rows.begin() + (r + 1) * width);
    }
    live_.push_back(&v);
    refresh_residency();
    return v;
  }

  // Local computation on each machine's rows: free (no communication).
  void local(DVec& v, const std::function<void(std::size_t, std::vector<double>&)>& fn) {
    for (std::size_t m = 0; m < machine_count_; ++m) fn(m, v.blocks_[m]);
    refresh_residency();
  }

  // Local computation over two co-located collections (same block layout).
  void local2(DVec& a, DVec& b,
              const std::function<void(std::size_t, std::vector<double>&, std::vector<double>&)>&
                  fn) {
    if (a.block_ != b.block_)
      throw parameter_error("mpc local2: collections are not co-located");
    for (std::size_t m = 0; m < machine_count_; ++m) fn(m, a.blocks_[m], b.blocks_[m]);
    refresh_residency();
  }

  // -------------------------------------------------------------------
  // Reductions / broadcast

  double reduce_sum(const DVec& v, std::size_t col) {
    return reduce_sum_cols(v, std::vector<std::size_t>{col})[0];
  }

  // Canonical tree sums over columns, physically converged to machine 0 and
  // broadcast back. Equal to canonical_tree_sum of the flat column whenever
  // the collection still has its aligned block layout.
  std::vector<double> reduce_sum_cols(const DVec& v, const std::vector<std::size_t>& cols) {
    const std::size_t payload = cols.size();
    std::vector<std::vector<double>> partial(machine_count_, std::vector<double>(payload, 0.0));
    for (std::size_t m = 0; m < machine_count_; ++m) {
      std::size_t nrows = v.blocks_[m].size() / v.width_;
      std::vector<double> tmp(nrows);
      for (std::size_t ci = 0; ci < payload; ++ci) {
        for (std::size_t r = 0; r < nrows; ++r) tmp[r] = v.blocks_[m][r * v.width_ + cols[ci]];
        partial[m][ci] = canonical_tree_sum(tmp);
      }
    }
    return reduce_machine_partials(partial);
  }

  // Combines one partial vector per machine with the canonical pairwise
  // tree (padding with exact zeros), converging to machine 0 and
  // broadcasting the result back.
  std::vector<double> reduce_machine_partials(std::vector<std::vector<double>> partial) {
    const std::size_t payload = partial.empty() ? 0 : partial[0].size();
    const std::size_t mpad = ceil_pow2(machine_count_);
    const std::size_t hop = 1ULL << fanin_log2(payload);
    std::size_t stride = 1;
    while (stride < mpad) {
      std::size_t h = std::min<std::size_t>(hop, std::max<std::size_t>(2, mpad / stride));
      Queue q(machine_count_);
      for (std::size_t g = 0; g < machine_count_; g += stride * h)
        for (std::size_t j = 1; j < h; ++j) {
          std::size_t src = g + j * stride;
          if (src < machine_count_) q[src].push_back({static_cast<int>(g), partial[src]});
        }
      flush(q, nullptr);
      for (std::size_t g = 0; g < machine_count_; g += stride * h) {
        std::vector<std::vector<double>> vals;
        for (std::size_t j = 0; j < h; ++j) {
          std::size_t src = g + j * stride;
          vals.push_back(src < machine_count_ ? partial[src]
                                              : std::vector<double>(payload, 0.0));
        }
        while (vals.size() > 1) {  // pairwise halving = canonical combine
          std::vector<std::vector<double>> nxt;
          for (std::size_t j = 0; j + 1 < vals.size(); j += 2) {
            std::vector<double> c(payload);
            for (std::size_t ci = 0; ci < payload; ++ci) c[ci] = vals[j][ci] + vals[j + 1][ci];
            nxt.push_back(std::move(c));
          }
          if (vals.size() % 2 == 1) nxt.push_back(vals.back());
          vals.swap(nxt);
        }
        partial[g] = vals[0];
      }
      stride *= h;
    }
    broadcast_words(payload);
    return partial[0];
  }

  // Rounds for machine 0 broadcasting `payload` words to all machines.
  void broadcast_words(std::size_t payload) {
    if (machine_count_ <= 1) return;
    const std::size_t hop = 1ULL << fanin_log2(payload);
    std::size_t span = ceil_pow2(machine_count_);
    while (span > 1) {
      std::size_t h = std::min<std::size_t>(hop, span);
      std::size_t stride = span / h;
      Queue q(machine_count_);
      for (std::size_t g = 0; g < machine_count_; g += span)
        for (std::size_t j = 1; j < h; ++j) {
          std::size_t dst = g + j * stride;
          if (dst < machine_count_)
            q[g].push_back({static_cast<int>(dst), std::vector<double>(payload, 0.0)});
        }
      flush(q, nullptr);
      span = stride;
    }
  }

  // -------------------------------------------------------------------
  // Data movement

  // Sends every row to dest(row); rows arrive in (source machine, queue)
  // order, deterministically.
  void route(DVec& v, const std::function<std::size_t(const double*)>& dest) {
    const std::size_t w = v.width_;
    Queue q(machine_count_);
    for (std::size_t m = 0; m < machine_count_; ++m) {
      auto& b = v.blocks_[m];
      std::size_t nrows = b.size() / w;
      for (std::size_t r = 0; r < nrows; ++r) {
        std::size_t d = dest(b.data() + r * w);
        if (d >= machine_count_) throw capacity_error("mpc route: destination out of range");
        q[m].push_back({static_cast<int>(d),
                        std::vector<double>(b.begin() + r * w, b.begin() + (r + 1) * w)});
      }
      b.clear();
    }
    std::vector<std::vector<double>> inbox(machine_count_);
    flush(q, [&](std::size_t dst, const std::vector<double>& pay) {
      inbox[dst].insert(inbox[dst].end(), pay.begin(), pay.end());
    });
    for (std::size_t m = 0; m < machine_count_; ++m) v.blocks_[m] = std::move(inbox[m]);
    refresh_residency();
  }

  // Restores the aligned block layout (order-preserving): one prefix scan
  // plus one routing pass. No rounds when the layout is already aligned.
  void rebalance(DVec& v, std::size_t target_block = 0) {
    if (target_block == 0) target_block = v.block_;
    target_block = ceil_pow2(target_block);
    {
      std::size_t total = v.rows();
      bool aligned = true;
      for (std::size_t m = 0; m < machine_count_ && aligned; ++m) {
        std::size_t expect =
            std::min(target_block, total - std::min(total, m * target_block));
        if (v.blocks_[m].size() / v.width_ != expect) aligned = false;
      }
      if (aligned) {
        v.block_ = target_block;
        return;
      }
    }
    std::vector<double> counts(machine_count_);
    for (std::size_t m = 0; m < machine_count_; ++m)
      counts[m] = static_cast<double>(v.blocks_[m].size() / v.width_);
    std::vector<double> prefix = scan_exclusive(counts);
    const std::size_t w = v.width_;
    Queue q(machine_count_);
    std::vector<std::vector<std::pair<std::size_t, std::vector<double>>>> tagged(machine_count_);
    for (std::size_t m = 0; m < machine_count_; ++m) {
      auto& b = v.blocks_[m];
      std::size_t nrows = b.size() / w;
      for (std::size_t r = 0; r < nrows; ++r) {
        std::size_t gpos = static_cast<std::size_t>(prefix[m]) + r;
        std::size_t d = std::min(gpos / target_block, machine_count_ - 1);
        std::vector<double> pay;
        pay.reserve(w + 1);
        pay.push_back(static_cast<double>(gpos));
        pay.insert(pay.end(), b.begin() + r * w, b.begin() + (r + 1) * w);
        q[m].push_back({static_cast<int>(d), std::move(pay)});
      }
      b.clear();
    }
    flush(q, [&](std::size_t dst, const std::vector<double>& pay) {
      tagged[dst].push_back({static_cast<std::size_t>(pay[0]),
                             std::vector<double>(pay.begin() + 1, pay.end())});
    });
    for (std::size_t m = 0; m < machine_count_; ++m) {
      std::sort(tagged[m].begin(), tagged[m].end(),
                [](const auto& x, const auto& y) { return x.first < y.first; });
      auto& b = v.blocks_[m];
      for (auto& [g, row] : tagged[m]) b.insert(b.end(), row.begin(), row.end());
    }
    v.block_ = target_block;
    refresh_residency();
  }

  // -------------------------------------------------------------------
  // Sorting: hierarchical sample sort with three-way bucketing (rows equal
  // to a splitter form finished buckets, so recursion always shrinks). Rows
  // compare lexicographically over the full width. Sibling spans of one
  // recursion level run in lockstep and share supersteps.
  void sort(DVec& v) {
    const std::size_t w = v.width_;
    local(v, [&](std::size_t, std::vector<double>& b) { sort_rows(b, w); });
    const std::size_t total = v.rows();
    if (total <= 1) return;
    const std::size_t cap = v.block_;
    if (total > cap * machine_count_)
      throw capacity_error("mpc sort: collection does not fit the machines");
    rebalance(v, cap);

    struct Span {
      std::size_t lo, hi;  // global row positions [lo, hi)
    };
    const std::size_t c = sample_count();
    std::vector<Span> frontier{{0, total}};
    int guard = 0;
    while (true) {
      std::vector<Span> active;
      for (const Span& sp : frontier)
        if (sp.hi - sp.lo >= 2 && machine_at(sp.lo, cap) != machine_at(sp.hi - 1, cap))
          active.push_back(sp);
      if (active.empty()) break;
      if (++guard > 64) throw capacity_error("mpc sort: recursion guard exceeded");

      // Phase A: all spans converge their samples in lockstep; leaders merge
      // and down-sample to c rows per tree level.
      const std::size_t nspans = active.size();
      std::vector<std::size_t> mlo(nspans), mhi(nspans), stride(nspans, 1);
      std::vector<std::map<std::size_t, std::vector<std::vector<double>>>> samp(nspans);
      const std::size_t fan = std::max<std::size_t>(
          2, cfg_.s / std::max<std::size_t>(2 * c * w, 1));
      for (std::size_t si = 0; si < nspans; ++si) {
        mlo[si] = machine_at(active[si].lo, cap);
        mhi[si] = machine_at(active[si].hi - 1, cap);
        for (std::size_t m = mlo[si]; m <= mhi[si]; ++m) {
          std::vector<std::vector<double>> rows;
          for_rows_in_span(v, active[si], cap, m,
                           [&](const std::vector<double>& row) { rows.push_back(row); });
          std::sort(rows.begin(), rows.end());
          if (!rows.empty()) samp[si][m] = pick_evenly(rows, c);
        }
      }
      bool any_level = true;
      while (any_level) {
        any_level = false;
        Queue q(machine_count_);
        std::vector<std::vector<std::pair<std::size_t, std::vector<double>>>> received(nspans);
        for (std::size_t si = 0; si < nspans; ++si) {
          if (mlo[si] + stride[si] > mhi[si]) continue;
          any_level = true;
          for (std::size_t g = mlo[si]; g <= mhi[si]; g += stride[si] * fan)
            for (std::size_t j = 1; j < fan; ++j) {
              std::size_t src = g + j * stride[si];
              if (src > mhi[si]) break;
              auto it = samp[si].find(src);
              if (it == samp[si].end()) continue;
              std::vector<double> pay;
              pay.push_back(static_cast<double>(si));
              pay.push_back(static_cast<double>(g));
              for (auto& row : it->second) pay.insert(pay.end(), row.begin(), row.end());
              q[src].push_back({static_cast<int>(g), std::move(pay)});
              samp[si].erase(it);
            }
        }
        if (!any_level) break;
        flush(q, [&](std::size_t, const std::vector<double>& pay) {
          std::size_t si = static_cast<std::size_t>(pay[0]);
          received[si].push_back(
              {static_cast<std::size_t>(pay[1]), std::vector<double>(pay.begin() + 2, pay.end())});
        });
        for (std::size_t si = 0; si < nspans; ++si) {
          if (mlo[si] + stride[si] > mhi[si]) continue;
          for (auto& [dst, pay] : received[si]) {
            auto& agg = samp[si][dst];
            for (std::size_t off = 0; off + w <= pay.size(); off += w)
              agg.emplace_back(pay.begin() + off, pay.begin() + off + w);
          }
          for (auto& [m, rows] : samp[si]) {
            std::sort(rows.begin(), rows.end());
            if (rows.size() > c) rows = pick_evenly(rows, c);
          }
          stride[si] *= fan;
        }
      }

      // Phase B/C rounds shared by the whole frontier: splitter broadcast,
      // the counts converge, and the prefix/base scan all run in parallel
      // across spans on disjoint-or-shared machines within the same
      // supersteps.
      std::size_t max_span = 1;
      for (std::size_t si = 0; si < nspans; ++si)
        max_span = std::max(max_span, mhi[si] - mlo[si] + 1);
      tree_rounds(max_span, c * w);
      tree_rounds(max_span, 2 * c + 1);
      tree_rounds(max_span, 2 * (2 * c + 1));

      // Exchange: one shared superstep batch for every span's rows.
      std::vector<Span> next;
      Queue q(machine_count_);
      std::vector<char> touched(machine_count_, 0);
      for (std::size_t si = 0; si < nspans; ++si) {
        const Span& sp = active[si];
        auto splitters =
            samp[si].count(mlo[si]) ? samp[si][mlo[si]] : std::vector<std::vector<double>>{};
        std::sort(splitters.begin(), splitters.end());
        splitters.erase(std::unique(splitters.begin(), splitters.end()), splitters.end());
        const std::size_t nbuckets = 2 * splitters.size() + 1;
        auto bucket_of = [&](const std::vector<double>& row) -> std::size_t {
          std::size_t b =
              std::lower_bound(splitters.begin(), splitters.end(), row) - splitters.begin();
          if (b < splitters.size() && splitters[b] == row) return 2 * b + 1;  // equality
          return 2 * b;
        };
        const std::size_t span_machines = mhi[si] - mlo[si] + 1;
        std::vector<std::vector<std::size_t>> cnt(span_machines,
                                                  std::vector<std::size_t>(nbuckets, 0));
        for (std::size_t m = mlo[si]; m <= mhi[si]; ++m)
          for_rows_in_span(v, sp, cap, m, [&](const std::vector<double>& row) {
            ++cnt[m - mlo[si]][bucket_of(row)];
          });
        std::vector<std::size_t> bucket_total(nbuckets, 0);
        for (const auto& cm : cnt)
          for (std::size_t b = 0; b < nbuckets; ++b) bucket_total[b] += cm[b];
        std::vector<std::size_t> bucket_base(nbuckets, sp.lo);
        for (std::size_t b = 1; b < nbuckets; ++b)
          bucket_base[b] = bucket_base[b - 1] + bucket_total[b - 1];
        std::vector<std::size_t> running(nbuckets, 0);
        for (std::size_t m = mlo[si]; m <= mhi[si]; ++m) {
          std::vector<std::size_t> pos(nbuckets);
          for (std::size_t b = 0; b < nbuckets; ++b) {
            pos[b] = bucket_base[b] + running[b];
            running[b] += cnt[m - mlo[si]][b];
          }
          for_rows_in_span(v, sp, cap, m, [&](const std::vector<double>& row) {
            std::size_t gpos = pos[bucket_of(row)]++;
            std::vector<double> pay;
            pay.reserve(w + 1);
            pay.push_back(static_cast<double>(gpos));
            pay.insert(pay.end(), row.begin(), row.end());
            q[m].push_back({static_cast<int>(machine_at(gpos, cap)), std::move(pay)});
          });
        }
        for (std::size_t m = mlo[si]; m <= mhi[si]; ++m) touched[m] = 1;
        for (std::size_t b = 0; b < nbuckets; b += 2) {  // even = strict buckets
          if (bucket_total[b] >= 2) {
            Span ch{bucket_base[b], bucket_base[b] + bucket_total[b]};
            if (ch.hi - ch.lo < sp.hi - sp.lo)
              next.push_back(ch);
            else
              throw error("mpc sort: bucketing made no progress");
          }
        }
      }
      // One combined clearing pass: removing a span's rows shifts storage
      // indices, so implied positions must be evaluated once for all spans.
      for (std::size_t m = 0; m < machine_count_; ++m) {
        if (!touched[m]) continue;
        auto& b = v.blocks_[m];
        std::size_t base = m * cap;
        std::vector<double> keep;
        std::size_t nrows = b.size() / w;
        for (std::size_t r = 0; r < nrows; ++r) {
          std::size_t g = base + r;
          bool inside = false;
          for (std::size_t si = 0; si < nspans && !inside; ++si)
            inside = g >= active[si].lo && g < active[si].hi;
          if (!inside) keep.insert(keep.end(), b.begin() + r * w, b.begin() + (r + 1) * w);
        }
        b = std::move(keep);
      }
      refresh_residency();
      std::vector<std::vector<std::pair<std::size_t, std::vector<double>>>> arrived(
          machine_count_);
      flush(q, [&](std::size_t dst, const std::vector<double>& pay) {
        arrived[dst].push_back(
            {static_cast<std::size_t>(pay[0]), std::vector<double>(pay.begin() + 1, pay.end())});
      });
      for (std::size_t m = 0; m < machine_count_; ++m) {
        std::sort(arrived[m].begin(), arrived[m].end(),
                  [](const auto& x, const auto& y) { return x.first < y.first; });
        for (auto& [g, row] : arrived[m]) insert_row_at(v, g, cap, row);
      }
      // Value order equals position order (buckets are ordered value
      // intervals), so a per-machine value sort restores position layout.
      for (std::size_t m = 0; m < machine_count_; ++m)
        if (touched[m]) sort_rows(v.blocks_[m], w);
      refresh_residency();
      frontier = std::move(next);
    }
    for (std::size_t m = 0; m < machine_count_; ++m) sort_rows(v.blocks_[m], w);
    verify_sorted(v);
  }

  enum class AggOp { sum, min_lex, max, bit_or };

  // Groups rows by the first column and reduces the remaining columns.
  // Output rows (key, reduced...) are delivered to owner_of(key). The input
  // is consumed. min_lex keeps the lexicographically smallest value tuple.
  DVec aggregate(DVec v, AggOp op) {
    sort(v);
    const std::size_t w = v.width_;
    // Segmented reduction: local groups, boundary summaries up a tree.
    tree_rounds(machine_count_, 2 * w + 2);
    std::map<double, std::vector<double>> groups;
    auto flat = v.snapshot();
    for (std::size_t off = 0; off + w <= flat.size(); off += w) {
      double key = flat[off];
      auto it = groups.find(key);
      if (it == groups.end())
        groups.emplace(key,
                       std::vector<double>(flat.begin() + off + 1, flat.begin() + off + w));
      else
        combine(it->second, flat.data() + off + 1, w - 1, op);
    }
    std::vector<double> out;
    for (auto& [k, vals] : groups) {
      out.push_back(k);
      out.insert(out.end(), vals.begin(), vals.end());
    }
    DVec res = create(w, out);
    route(res, [&](const double* row) { return owner_of(static_cast<std::size_t>(row[0])); });
    local(res, [&](std::size_t, std::vector<double>& b) { sort_rows(b, w); });
    return res;
  }

 private:
  friend class DVec;
  using Frame = std::pair<int, std::vector<double>>;
  using Queue = std::vector<std::vector<Frame>>;

  static std::size_t floor_pow2(std::size_t x) {
    std::size_t p = 1;
    while (p * 2 <= x) p *= 2;
    return p;
  }
  static std::size_t ceil_pow2(std::size_t x) {
    std::size_t p = 1;
    while (p < x) p *= 2;
    return p;
  }
  std::size_t fanin_log2(std::size_t payload) const {
    std::size_t budget =
        std::max<std::size_t>(2, cfg_.s / (2 * std::max<std::size_t>(payload, 1)));
    std::size_t a = 1;
    while ((1ULL << (a + 1)) <= budget) ++a;
    return a;
  }
  std::size_t sample_count() const {
    double r = std::sqrt(static_cast<double>(cfg_.s) / 2.0);
    return std::min<std::size_t>(16, std::max<std::size_t>(2, static_cast<std::size_t>(r)));
  }
  std::size_t machine_at(std::size_t row, std::size_t cap) const {
    return std::min(row / cap, machine_count_ - 1);
  }

  static void sort_rows(std::vector<double>& b, std::size_t w) {
    std::size_t nrows = b.size() / w;
    std::vector<std::vector<double>> rows(nrows);
    for (std::size_t r = 0; r < nrows; ++r)
      rows[r].assign(b.begin() + r * w, b.begin() + (r + 1) * w);
    std::sort(rows.begin(), rows.end());
    b.clear();
    for (auto& row : rows) b.insert(b.end(), row.begin(), row.end());
  }

  template <typename Fn>
  void for_rows_in_span(const DVec& v, const auto& sp, std::size_t cap, std::size_t m,
                        Fn&& fn) const {
    const auto& b = v.blocks_[m];
    const std::size_t w = v.width_;
    std::size_t base = m * cap;
    std::size_t nrows = b.size() / w;
    for (std::size_t r = 0; r < nrows; ++r) {
      std::size_t g = base + r;
      if (g >= sp.lo && g < sp.hi)
        fn(std::vector<double>(b.begin() + r * w, b.begin() + (r + 1) * w));
    }
  }

  void clear_span(DVec& v, const auto& sp, std::size_t cap) {
    const std::size_t w = v.width_;
    for (std::size_t m = machine_at(sp.lo, cap); m <= machine_at(sp.hi - 1, cap); ++m) {
      auto& b = v.blocks_[m];
      std::size_t base = m * cap;
      std::vector<double> keep;
      std::size_t nrows = b.size() / w;
      for (std::size_t r = 0; r < nrows; ++r) {
        std::size_t g = base + r;
        if (g < sp.lo || g >= sp.hi)
          keep.insert(keep.end(), b.begin() + r * w, b.begin() + (r + 1) * w);
      }
      b = std::move(keep);
    }
    refresh_residency();
  }

  void insert_row_at(DVec& v, std::size_t gpos, std::size_t cap, const std::vector<double>& row) {
    auto& b = v.blocks_[machine_at(gpos, cap)];
    b.insert(b.end(), row.begin(), row.end());
  }

  static std::vector<std::vector<double>> pick_evenly(
      const std::vector<std::vector<double>>& rows, std::size_t c) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 1; i <= c; ++i) {
      std::size_t idx = std::min(rows.size() - 1, i * rows.size() / (c + 1));
      out.push_back(rows[idx]);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  static void combine(std::vector<double>& acc, const double* vals, std::size_t n, AggOp op) {
    if (op == AggOp::min_lex) {
      if (std::lexicographical_compare(vals, vals + n, acc.data(), acc.data() + n))
        acc.assign(vals, vals + n);
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      switch (op) {
        case AggOp::sum:
          acc[i] += vals[i];
          break;
        case AggOp::max:
          acc[i] = std::max(acc[i], vals[i]);
          break;
        case AggOp::bit_or:
          acc[i] = static_cast<double>(static_cast<std::uint64_t>(acc[i]) |
                                       static_cast<std::uint64_t>(vals[i]));
          break;
        case AggOp::min_lex:
          break;
      }
    }
  }

  // Rounds of a converge or broadcast tree over m machines with `payload`
  // words per edge; extra waves when a node's receive volume exceeds s.
  void tree_rounds(std::size_t m, std::size_t payload) {
    if (m <= 1) return;
    const std::size_t f = 1ULL << fanin_log2(payload);
    std::size_t levels = 0, span = 1;
    while (span < m) {
      span *= f;
      ++levels;
    }
    std::size_t waves = ((f - 1) * std::max<std::size_t>(payload, 1) + cfg_.s - 1) / cfg_.s;
    stats_.supersteps += static_cast<long long>(levels * std::max<std::size_t>(1, waves));
  }

  std::vector<double> scan_exclusive(const std::vector<double>& counts) {
    tree_rounds(machine_count_, 2);  // up
    tree_rounds(machine_count_, 2);  // down
    std::vector<double> prefix(machine_count_, 0.0);
    double acc = 0.0;
    for (std::size_t m = 0; m < machine_count_; ++m) {
      prefix[m] = acc;
      acc += counts[m];
    }
    return prefix;
  }

  // Delivers queued frames wave by wave under the per-round send/receive
  // caps; every wave is one superstep.
  void flush(Queue& q, const std::function<void(std::size_t, const std::vector<double>&)>& sink) {
    for (auto& perm : q)
      for (auto& fr : perm)
        if (fr.second.size() > cfg_.s)
          throw capacity_error("mpc: a single message exceeds local memory");
    bool pending = false;
    for (auto& perm : q)
      if (!perm.empty()) pending = true;
    while (pending) {
      std::vector<std::size_t> send_budget(machine_count_, cfg_.s);
      std::vector<std::size_t> recv_budget(machine_count_, cfg_.s);
      bool any = false;
      for (std::size_t m = 0; m < machine_count_; ++m) {
        auto& perm = q[m];
        std::size_t consumed = 0;
        for (auto& fr : perm) {
          std::size_t words = std::max<std::size_t>(fr.second.size(), 1);
          if (words <= send_budget[m] &&
              words <= recv_budget[static_cast<std::size_t>(fr.first)]) {
            send_budget[m] -= words;
            recv_budget[static_cast<std::size_t>(fr.first)] -= words;
            if (sink) sink(static_cast<std::size_t>(fr.first), fr.second);
            ++consumed;
            any = true;
          } else {
            break;  // FIFO per machine
          }
        }
        perm.erase(perm.begin(), perm.begin() + consumed);
      }
      ++stats_.supersteps;
      if (!any) throw capacity_error("mpc: message flow stalled");
      pending = false;
      for (auto& perm : q)
        if (!perm.empty()) pending = true;
    }
  }

  void verify_sorted(const DVec& v) {
    auto flat = v.snapshot();
    const std::size_t w = v.width_;
    for (std::size_t off = w; off + w <= flat.size(); off += w)
      if (std::lexicographical_compare(flat.begin() + off, flat.begin() + off + w,
                                       flat.begin() + off - w, flat.begin() + off))
        throw error("mpc sort: output not globally sorted");
  }

  void refresh_residency() {
    for (std::size_t m = 0; m < machine_count_; ++m) {
      std::size_t words = 0;
      for (const DVec* v : live_)
        if (v) words += v->words_on(m);
      stats_.peak_local = std::max(stats_.peak_local, words);
      if (words > cfg_.s) throw capacity_error("mpc: local memory exceeded on a machine");
    }
  }

  void unregister(DVec* v) {
    for (auto& p : live_)
      if (p == v) p = nullptr;
  }
  void reregister(DVec* from, DVec* to) {
    for (auto& p : live_)
      if (p == from) p = to;
  }

  MpcConfig cfg_;
  std::size_t machine_count_ = 1;
  std::size_t id_block_ = 1;
  RunStats stats_;
  std::vector<DVec*> live_;
};

inline DVec::DVec(DVec&& o) noexcept {
  eng_ = o.eng_;
  width_ = o.width_;
  block_ = o.block_;
  blocks_ = std::move(o.blocks_);
  if (eng_) eng_->reregister(&o, this);
  o.eng_ = nullptr;
}

inline DVec& DVec::operator=(DVec&& o) noexcept {
  if (this == &o) return *this;
  if (eng_) eng_->unregister(this);
  eng_ = o.eng_;
  width_ = o.width_;
  block_ = o.block_;
  blocks_ = std::move(o.blocks_);
  if (eng_) eng_->reregister(&o, this);
  o.eng_ = nullptr;
  return *this;
}

inline DVec::~DVec() {
  if (eng_) eng_->unregister(this);
  eng_ = nullptr;
}

}  // namespace mpclust
