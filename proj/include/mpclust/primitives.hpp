#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "mpclust/distance.hpp"
#include "mpclust/errors.hpp"
#include "mpclust/rng.hpp"

namespace mpclust {

// One cost-model charge for an external geometric primitive.
struct PrimitiveCharge {
  std::string primitive;
  long long rounds = 0;
  long long memory_words = 0;
};

struct ChargeSink {
  virtual ~ChargeSink() = default;
  virtual void on_charge(const PrimitiveCharge&) = 0;
};

struct CostModelEntry {
  double rounds_coeff = 1.0;  // rounds = ceil(coeff * max(1, log_s n))
  double mem_coeff = 1.0;     // memory = ceil(coeff * n * (log2 n + 1))
};

// The three pluggable operations of the rounding pipeline: metric ruling
// sets, slack range sums, and Gamma-ANN. The exact backend answers queries
// exactly (effective slack 1, ruling-set stretch 1) while still satisfying
// any requested Gamma >= 1. The cost-modeled backend computes the same
// answers offline but charges declared rounds/memory per invocation, and can
// optionally inject deterministic slack into range sums and ANN picks.
struct PrimitiveBackend {
  enum class Mode { exact, cost_modeled };

  Mode mode = Mode::exact;
  double alpha_r = 1.0;  // ruling-set stretch; the greedy construction gives 1
  double gamma = 1.0;    // slack bound the caller is promised
  bool inject_slack = false;
  std::uint64_t slack_seed = 0;
  std::map<std::string, CostModelEntry> cost_model;
  ChargeSink* sink = nullptr;
  std::size_t ctx_n = 0;  // instance size for the charge formula
  std::size_t ctx_s = 0;  // local memory for the charge formula

  static PrimitiveBackend exact(double gamma = 1.0) {
    PrimitiveBackend b;
    b.mode = Mode::exact;
    b.gamma = std::max(1.0, gamma);
    return b;
  }

  static PrimitiveBackend cost_modeled(double gamma, std::size_t n, std::size_t s,
                                       ChargeSink* sink = nullptr) {
    PrimitiveBackend b;
    b.mode = Mode::cost_modeled;
    b.gamma = std::max(1.0, gamma);
    b.ctx_n = n;
    b.ctx_s = s;
    b.sink = sink;
    b.cost_model = {{"ruling_set", {}}, {"range_sum", {}}, {"ann", {}}};
    return b;
  }

  bool slack_active() const { return mode == Mode::cost_modeled && inject_slack && gamma > 1.0; }

  void charge(const std::string& name) const {
    if (mode != Mode::cost_modeled || sink == nullptr) return;
    CostModelEntry e;
    auto it = cost_model.find(name);
    if (it != cost_model.end()) e = it->second;
    double logs = 1.0;
    if (ctx_n > 1 && ctx_s > 1)
      logs = std::max(1.0, std::log(static_cast<double>(ctx_n)) /
                               std::log(static_cast<double>(ctx_s)));
    PrimitiveCharge c;
    c.primitive = name;
    c.rounds = static_cast<long long>(std::ceil(e.rounds_coeff * logs));
    double n = static_cast<double>(std::max<std::size_t>(ctx_n, 1));
    c.memory_words = static_cast<long long>(std::ceil(e.mem_coeff * n * (std::log2(n) + 1.0)));
    sink->on_charge(c);
  }
};

// ---------------------------------------------------------------------------
// (O1) metric ruling set: greedy maximal tau-separated subset, ids ascending.
// Output satisfies separation >= tau and coverage <= alpha_r * tau with
// alpha_r = 1 (every skipped point is within tau of an earlier pick).

inline std::vector<std::size_t> ruling_set(const DistanceOracle& oracle,
                                           const std::vector<std::size_t>& q_set, double tau,
                                           const PrimitiveBackend& backend) {
  if (!(tau > 0.0)) throw parameter_error("ruling_set: tau must be positive");
  backend.charge("ruling_set");
  std::vector<std::size_t> q = q_set;
  std::sort(q.begin(), q.end());
  std::vector<std::size_t> r;
  for (std::size_t p : q) {
    bool separated = true;
    for (std::size_t c : r)
      if (oracle.dist(p, c) < tau) {
        separated = false;
        break;
      }
    if (separated) r.push_back(p);
  }
#ifndef NDEBUG
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = i + 1; j < r.size(); ++j)
      if (oracle.dist(r[i], r[j]) < tau) throw error("ruling_set: separation violated");
#endif
  return r;
}

inline bool verify_ruling_set(const DistanceOracle& oracle, const std::vector<std::size_t>& q_set,
                              const std::vector<std::size_t>& r, double tau, double alpha_r) {
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = i + 1; j < r.size(); ++j)
      if (oracle.dist(r[i], r[j]) < tau * (1.0 - 1e-12)) return false;
  for (std::size_t p : q_set) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c : r) best = std::min(best, oracle.dist(p, c));
    if (r.empty() || best > alpha_r * tau * (1.0 + 1e-12)) return false;
  }
  return !(r.empty() && !q_set.empty());
}

// ---------------------------------------------------------------------------
// (O2) slack range sum: s_p between the tau-ball sum and the Gamma*tau-ball
// sum. The exact backend returns the tau-ball sum; slack injection draws a
// deterministic per-point radius in [tau, Gamma*tau].

inline std::vector<double> range_sum(const DistanceOracle& oracle,
                                     const std::vector<double>& values, double tau,
                                     const PrimitiveBackend& backend) {
  if (!(tau > 0.0)) throw parameter_error("range_sum: tau must be positive");
  if (values.size() != oracle.size()) throw parameter_error("range_sum: values size mismatch");
  backend.charge("range_sum");
  const std::size_t n = oracle.size();
  std::vector<double> out(n, 0.0);
  std::uint64_t tau_bits;
  static_assert(sizeof(double) == sizeof(std::uint64_t));
  std::memcpy(&tau_bits, &tau, sizeof(tau));
  for (std::size_t p = 0; p < n; ++p) {
    double radius = tau;
    if (backend.slack_active()) {
      double u = u01(hash_combine(backend.slack_seed, hash_combine(p + 1, tau_bits)));
      radius = tau * std::pow(backend.gamma, u);
    }
    double s = 0.0;
    for (std::size_t q = 0; q < n; ++q)
      if (oracle.dist(p, q) <= radius) s += values[q];
    out[p] = s;
  }
  return out;
}

// ---------------------------------------------------------------------------
// (O3) Gamma-ANN: for each query, a target within Gamma times the true
// nearest-neighbor distance. Exact backend: true nearest neighbor, ties to
// the smallest id. Slack injection picks deterministically among all
// Gamma-approximate candidates (stable within a run).

inline std::vector<std::size_t> ann(const DistanceOracle& oracle,
                                    const std::vector<std::size_t>& queries,
                                    const std::vector<std::size_t>& targets,
                                    const PrimitiveBackend& backend) {
  if (targets.empty()) throw parameter_error("ann: target set must be nonempty");
  backend.charge("ann");
  std::vector<std::size_t> out;
  out.reserve(queries.size());
  for (std::size_t p : queries) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = targets.front();
    for (std::size_t q : targets) {
      double d = oracle.dist(p, q);
      if (d < best || (d == best && q < arg)) {
        best = d;
        arg = q;
      }
    }
    if (backend.slack_active()) {
      double bound = backend.gamma * best;
      std::uint64_t best_h = ~0ULL;
      std::size_t pick = arg;
      for (std::size_t q : targets)
        if (oracle.dist(p, q) <= bound) {
          std::uint64_t h = hash_combine(backend.slack_seed, hash_combine(p + 1, q + 1));
          if (h < best_h) {
            best_h = h;
            pick = q;
          }
        }
      arg = pick;
    }
    out.push_back(arg);
  }
  return out;
}

// ANN over a set where each member queries the set minus itself. One charge
// for the whole batch. Requires |s| >= 2.
inline std::vector<std::size_t> ann_excluding_self(const DistanceOracle& oracle,
                                                   const std::vector<std::size_t>& s,
                                                   const PrimitiveBackend& backend) {
  if (s.size() < 2) throw parameter_error("ann_excluding_self: need at least two points");
  backend.charge("ann");
  std::vector<std::size_t> out;
  out.reserve(s.size());
  for (std::size_t p : s) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = p;
    for (std::size_t q : s) {
      if (q == p) continue;
      double d = oracle.dist(p, q);
      if (d < best || (d == best && q < arg)) {
        best = d;
        arg = q;
      }
    }
    if (backend.slack_active()) {
      double bound = backend.gamma * best;
      std::uint64_t best_h = ~0ULL;
      std::size_t pick = arg;
      for (std::size_t q : s) {
        if (q == p) continue;
        if (oracle.dist(p, q) <= bound) {
          std::uint64_t h = hash_combine(backend.slack_seed, hash_combine(p + 1, q + 1));
          if (h < best_h) {
            best_h = h;
            pick = q;
          }
        }
      }
      arg = pick;
    }
    out.push_back(arg);
  }
  return out;
}

}  // namespace mpclust
