#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <set>

#include "mpclust/oracles.hpp"
#include "mpclust/rounding.hpp"

using namespace mpclust;

namespace {

FractionalSolution sweep_solution(const DistanceOracle& o, std::size_t k, double gamma,
                                  const PrimitiveBackend& backend) {
  return fractional_kz(o, k, gamma, backend).first;
}

// Property (1a): well-separatedness of the weighted support against true
// per-point costs.
void check_separation(const DistanceOracle& o, const FractionalSolution& y,
                      const WeightFunction& w, double gamma) {
  CostReport exact = clustering_cost(o, y);
  auto supp = w.support();
  const int z = o.z();
  for (std::size_t i = 0; i < supp.size(); ++i)
    for (std::size_t j = i + 1; j < supp.size(); ++j) {
      double lhs = o.dist(supp[i], supp[j]);
      double rhs = 4.0 * gamma *
                   std::pow(std::max(exact.per_point[supp[i]], exact.per_point[supp[j]]),
                            1.0 / z);
      INFO("pair " << supp[i] << "," << supp[j]);
      CHECK(lhs >= rhs * (1 - 1e-9));
    }
}

}  // namespace

TEST_CASE("sparsify: weights cover every point exactly once") {
  auto backend = PrimitiveBackend::exact(8.0);
  SECTION("separations beyond every threshold keep each point its own atom") {
    // All estimated costs at level 0 and pairwise distances above tau_0:
    // every level-0 point survives into the ruling set.
    Dataset d = make_dataset_1d({0.0, 100.0, 200.0, 300.0});
    auto o = DistanceOracle::euclidean(d, 1);
    FractionalSolution y{std::vector<double>(4, 0.5)};  // only documented input
    CostReport costs;
    costs.gamma = 8.0;
    costs.estimated_per_point.assign(4, 0.2);  // <= 1/n = 0.25: level 0
    auto [w, trace] = sparsify(o, y, costs, 8.0, backend);
    CHECK(w.total() == 4);
    for (long long v : w.w) CHECK(v == 1);
    CHECK(trace.ruling[0].size() == 4);
  }
  SECTION("a tight cluster in one level merges onto one support point") {
    // Cluster of 6 points with diameter 10 sharing one level whose tau
    // exceeds the diameter; a lone far point sits at level 0.
    std::vector<double> xs{0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 100000.0};
    Dataset d(std::move(xs), 1);
    auto o = DistanceOracle::euclidean(d, 1);
    FractionalSolution y{std::vector<double>(7, 2.0 / 7.0)};
    CostReport costs;
    costs.gamma = 8.0;
    costs.estimated_per_point.assign(7, 40.0);  // cluster level: tau >> 10
    costs.estimated_per_point[6] = 0.1;         // far point at level 0
    auto [w, trace] = sparsify(o, y, costs, 8.0, backend);
    CHECK(w.total() == 7);
    std::size_t cluster_support = 0;
    for (std::size_t p = 0; p < 6; ++p)
      if (w.w[p] > 0) ++cluster_support;
    CHECK(cluster_support == 1);
    CHECK(w.w[6] == 1);  // the far point stands alone
  }
  SECTION("gamma mismatch is rejected") {
    Dataset d = make_dataset_1d({0.0, 2.0, 4.0});
    auto o = DistanceOracle::euclidean(d, 1);
    auto y = sweep_solution(o, 2, 8.0, backend);
    CostReport costs = estimate_costs(o, y, 8.0, backend);
    CHECK_THROWS_AS(sparsify(o, y, costs, 4.0, backend), parameter_error);
  }
}

TEST_CASE("sparsify separation property on random instances") {
  auto backend = PrimitiveBackend::exact(8.0);
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    std::size_t n = 4 + seed % 17;
    std::size_t k = 2 + seed % 3;
    if (k >= n) continue;
    int z = 1 + static_cast<int>(seed % 2);
    auto nr = normalize_dataset(gen_uniform_cube(n, 2, seed + 401));
    auto o = DistanceOracle::euclidean(nr.data, z);
    auto y = sweep_solution(o, k, 8.0, backend);
    CostReport costs = estimate_costs(o, y, 8.0, backend);
    auto [w, trace] = sparsify(o, y, costs, 8.0, backend);
    CHECK(w.total() == static_cast<long long>(n));
    check_separation(o, y, w, 8.0);
    for (int ell = 0; ell <= trace.L; ++ell)
      if (!trace.ruling[ell].empty()) {
        std::vector<std::size_t> candidates;
        std::set_difference(trace.levels[ell].begin(), trace.levels[ell].end(),
                            trace.filtered[ell].begin(), trace.filtered[ell].end(),
                            std::back_inserter(candidates));
        CHECK(verify_ruling_set(o, candidates, trace.ruling[ell], trace.taus[ell], 1.0));
      }
  }
}

TEST_CASE("partial rounding shapes") {
  auto backend = PrimitiveBackend::exact(8.0);
  SECTION("m = 2 support points with k = 2: both fully open") {
    Dataset d = make_dataset_1d({0.0, 1000.0});
    auto o = DistanceOracle::euclidean(d, 1);
    FractionalSolution y{{1.0, 1.0}};
    WeightFunction w;
    w.w = {1, 1};
    PartialSolution ps = partial_round(o, y, w, 2, 8.0, backend);
    CHECK(ps.y_tilde == std::vector<double>{1.0, 1.0});
  }
  SECTION("m = 2k support points: all half open") {
    Dataset d = make_dataset_1d({0.0, 1000.0, 2000.0, 3000.0});
    auto o = DistanceOracle::euclidean(d, 1);
    FractionalSolution y{{0.5, 0.5, 0.5, 0.5}};
    WeightFunction w;
    w.w = {1, 1, 1, 1};
    PartialSolution ps = partial_round(o, y, w, 2, 8.0, backend);
    for (double v : ps.y_tilde) CHECK(v == 0.5);
  }
  SECTION("mass must equal k") {
    Dataset d = make_dataset_1d({0.0, 1000.0});
    auto o = DistanceOracle::euclidean(d, 1);
    FractionalSolution y{{1.0, 0.5}};
    WeightFunction w;
    w.w = {1, 1};
    CHECK_THROWS_AS(partial_round(o, y, w, 2, 8.0, backend), parameter_error);
  }
}

TEST_CASE("partial rounding invariants on random pipelines") {
  auto backend = PrimitiveBackend::exact(8.0);
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    std::size_t n = 4 + seed % 17;
    std::size_t k = 2 + seed % 3;
    if (k >= n) continue;
    int z = 1 + static_cast<int>(seed % 2);
    auto nr = normalize_dataset(gen_uniform_cube(n, 2, seed + 733));
    auto o = DistanceOracle::euclidean(nr.data, z);
    auto y = sweep_solution(o, k, 8.0, backend);
    CostReport costs = estimate_costs(o, y, 8.0, backend);
    auto [w, strace] = sparsify(o, y, costs, 8.0, backend);
    PartialSolution ps = partial_round(o, y, w, k, 8.0, backend);
    // (2a) mass never grows past k
    double mass = 0.0;
    for (double v : ps.y_tilde) mass += v;
    CHECK(mass <= static_cast<double>(k) + 1e-9);
    // (2b) openings live exactly on the support, in {1/2, 1}
    for (std::size_t p = 0; p < n; ++p) {
      if (w.w[p] == 0) CHECK(ps.y_tilde[p] == 0.0);
      if (w.w[p] > 0) CHECK((ps.y_tilde[p] == 0.5 || ps.y_tilde[p] == 1.0));
    }
    // the number of half-open centers is even
    std::size_t half = 0;
    for (double v : ps.y_tilde)
      if (v == 0.5) ++half;
    CHECK(half % 2 == 0);

    // stage-1 intermediate: mass-preserving and 1/2-lower bounded on the
    // support, making the support at most 2k
    double lower_mass = 0.0;
    for (double v : ps.y_lower) lower_mass += v;
    CHECK(lower_mass == Catch::Approx(static_cast<double>(k)).epsilon(1e-9));
    for (std::size_t p = 0; p < n; ++p) {
      if (w.w[p] > 0)
        CHECK(ps.y_lower[p] >= 0.5 - 1e-9);
      else
        CHECK(ps.y_lower[p] == 0.0);
    }
    CHECK(ps.m <= 2 * k);

    // every point already has half a unit of opening within squared-cost
    // radius 2*cost(p, y) of itself
    CostReport exact2 = clustering_cost(o, y);
    for (std::size_t p = 0; p < n; ++p) {
      double mass_near = 0.0;
      for (std::size_t q = 0; q < n; ++q)
        if (o.powz(p, q) <= 2.0 * exact2.per_point[p] + 1e-12) mass_near += y.y[q];
      CHECK(mass_near >= 0.5 - 1e-9);
    }
  }
}

TEST_CASE("monotone ANN") {
  auto backend = PrimitiveBackend::exact(8.0);
  SECTION("two points map to each other") {
    Dataset d = make_dataset_1d({0.0, 5.0});
    auto o = DistanceOracle::euclidean(d, 1);
    auto h = monotone_ann(o, {0, 1}, 8.0, backend);
    CHECK(h == std::vector<std::size_t>{1, 0});
  }
  SECTION("1-D {0, 1, 3}") {
    Dataset d = make_dataset_1d({0.0, 1.0, 3.0});
    auto o = DistanceOracle::euclidean(d, 1);
    auto h = monotone_ann(o, {0, 1, 2}, 8.0, backend);
    CHECK(h[0] == 1);
    CHECK(h[1] == 0);
    CHECK(h[2] == 1);
    CHECK(o.dist(2, h[2]) >= o.dist(1, h[1]) - 1e-12);
    CHECK_THROWS_AS(monotone_ann(o, {0}, 8.0, backend), parameter_error);
  }
  SECTION("both claimed properties hold on random instances") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      std::size_t n = 2 + seed % 12;
      Dataset d = gen_uniform_cube(n, 2, seed + 577);
      auto o = DistanceOracle::euclidean(d, 1);
      std::vector<std::size_t> hset;
      for (std::size_t i = 0; i < n; ++i) hset.push_back(i);
      auto h = monotone_ann(o, hset, 8.0, backend);
      std::vector<std::size_t> pos(n);
      for (std::size_t i = 0; i < n; ++i) pos[hset[i]] = i;
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(h[i] != hset[i]);
        double dn = std::numeric_limits<double>::infinity();
        for (std::size_t q : hset)
          if (q != hset[i]) dn = std::min(dn, o.dist(hset[i], q));
        CHECK(o.dist(hset[i], h[i]) <= 1.0 * dn + 1e-12);  // exact backend: true NN distance
        CHECK(o.dist(hset[i], h[i]) >= o.dist(h[i], h[pos[h[i]]]) - 1e-12);  // monotone
      }
    }
  }
}

TEST_CASE("final rounding") {
  auto backend = PrimitiveBackend::exact(8.0);
  SECTION("no half-open centers: C = F") {
    Dataset d = make_dataset_1d({0.0, 1000.0});
    auto o = DistanceOracle::euclidean(d, 1);
    PartialSolution ps;
    ps.y_tilde = {1.0, 1.0};
    ps.m = 2;
    auto [c, trace] = final_round(o, ps, 2, 8.0, backend);
    CHECK(c == CenterSet{0, 1});
  }
  SECTION("two half-open centers at distance 2 merge into one") {
    Dataset d = make_dataset_1d({0.0, 2.0});
    auto o = DistanceOracle::euclidean(d, 1);
    PartialSolution ps;
    ps.y_tilde = {0.5, 0.5};
    ps.m = 2;
    auto [c, trace] = final_round(o, ps, 1, 8.0, backend);
    REQUIRE(c.size() == 1);
    CHECK(c[0] == 0);
  }
}

TEST_CASE("full pipeline: size bound and oracle ratios") {
  auto backend = PrimitiveBackend::exact(8.0);
  SECTION("1-D {0,1,10}: finite ratio against OPT = 1") {
    Dataset d = make_dataset_1d({0.0, 1.0, 10.0});
    for (int z : {1, 2}) {
      auto o = DistanceOracle::euclidean(d, z);
      SolveResult res = solve_kz(o, 2, 8.0, backend);
      CHECK(res.centers.size() <= 2);
      auto opt = brute_opt_integral(o, 2);
      CHECK(opt.value == Catch::Approx(1.0));
      CHECK(res.cost >= opt.value - 1e-12);
      CHECK(std::isfinite(res.cost / opt.value));
    }
  }
  SECTION("k = n returns everything at cost zero") {
    Dataset d = gen_uniform_cube(6, 2, 3);
    auto o = DistanceOracle::euclidean(d, 1);
    SolveResult res = solve_kz(o, 6, 8.0, backend);
    CHECK(res.centers.size() == 6);
    CHECK(res.cost == 0.0);
  }
  SECTION("k = 1 routes through sampling") {
    Dataset d = make_dataset_1d({0.0, 1.0, 10.0});
    auto o = DistanceOracle::euclidean(d, 1);
    SolveResult res = solve_kz(o, 1, 8.0, backend, 3);
    CHECK(res.centers.size() == 1);
    CHECK(res.cost >= 10.0 - 1e-12);  // best singleton costs 10
  }
  SECTION("|C| <= k over random pipelines") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      std::size_t n = 4 + seed % 17;
      std::size_t k = 2 + seed % 4;
      if (k >= n) continue;
      int z = 1 + static_cast<int>(seed % 2);
      Dataset d = gen_uniform_cube(n, 2, seed + 901);
      auto o = DistanceOracle::euclidean(d, z);
      SolveResult res = solve_kz(o, k, 8.0, backend, seed);
      CHECK(res.centers.size() <= k);
      CHECK(!res.centers.empty());
      std::set<std::size_t> uniq(res.centers.begin(), res.centers.end());
      CHECK(uniq.size() == res.centers.size());
      CHECK(std::isfinite(res.cost));
    }
  }
  SECTION("slack-injected backends keep every exact contract") {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
      std::size_t n = 5 + seed % 12;
      std::size_t k = 2 + seed % 3;
      if (k >= n) continue;
      int z = 1 + static_cast<int>(seed % 2);
      Dataset d = gen_uniform_cube(n, 2, seed + 3333);
      auto o = DistanceOracle::euclidean(d, z);
      PrimitiveBackend slack = PrimitiveBackend::cost_modeled(8.0, n, 128, nullptr);
      slack.inject_slack = true;
      slack.slack_seed = seed;
      SolveResult res = solve_kz(o, k, 8.0, slack, seed);
      CHECK(res.centers.size() <= k);
      CHECK(std::isfinite(res.cost));
      // separation (1a) against true costs still holds for the slacked run
      auto nr = normalize_dataset(d);
      auto on = DistanceOracle::euclidean(nr.data, z);
      auto [y, sweep] = fractional_kz(on, k, 8.0, slack);
      CostReport costs = estimate_costs(on, y, 8.0, slack);
      auto [w, st] = sparsify(on, y, costs, 8.0, slack);
      CHECK(w.total() == static_cast<long long>(n));
      check_separation(on, y, w, 8.0);
      PartialSolution ps = partial_round(on, y, w, k, 8.0, slack);
      double mass = 0.0;
      for (double v : ps.y_tilde) mass += v;
      CHECK(mass <= static_cast<double>(k) + 1e-9);
    }
  }
  SECTION("solving through an explicit distance matrix") {
    // the same geometry expressed as a matrix oracle gives a valid solution
    Dataset d = gen_uniform_cube(8, 2, 21);
    auto eo = DistanceOracle::euclidean(d, 1);
    std::vector<double> m(8 * 8);
    for (std::size_t p = 0; p < 8; ++p)
      for (std::size_t q = 0; q < 8; ++q) m[p * 8 + q] = eo.dist(p, q);
    auto mo = DistanceOracle::matrix(std::move(m), 8, 1);
    SolveResult res = solve_kz(mo, 3, 8.0, PrimitiveBackend::exact(8.0), 4);
    CHECK(res.centers.size() <= 3);
    auto opt = brute_opt_integral(mo, 3);
    CHECK(res.cost >= opt.value - 1e-9);
    CHECK(std::isfinite(res.cost));
  }
  SECTION("tie-heavy grid and line datasets solve deterministically") {
    for (std::size_t n : {9ul, 12ul}) {
      Dataset g = gen_grid(n, 2);
      auto og = DistanceOracle::euclidean(g, 1);
      SolveResult a = solve_kz(og, 3, 8.0, PrimitiveBackend::exact(8.0), 2);
      SolveResult b = solve_kz(og, 3, 8.0, PrimitiveBackend::exact(8.0), 2);
      CHECK(a.centers == b.centers);
      CHECK(a.cost == b.cost);
      CHECK(a.centers.size() <= 3);
      auto opt = brute_opt_integral(og, 3);
      CHECK(a.cost >= opt.value - 1e-9);
    }
    Dataset line = gen_line(12);
    auto ol = DistanceOracle::euclidean(line, 2);
    SolveResult res = solve_kz(ol, 3, 8.0, PrimitiveBackend::exact(8.0), 2);
    CHECK(res.centers.size() <= 3);
    auto opt = brute_opt_integral(ol, 3);
    CHECK(res.cost >= opt.value - 1e-9);
  }
  SECTION("planted gaussian mixtures are recovered within a finite ratio") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      Dataset d = gen_gaussian_mixture(12, 2, 3, seed + 61);
      auto o = DistanceOracle::euclidean(d, 2);
      SolveResult res = solve_kz(o, 3, 8.0, PrimitiveBackend::exact(8.0), seed);
      auto opt = brute_opt_integral(o, 3);
      CHECK(res.centers.size() <= 3);
      if (opt.value > 1e-12) CHECK(std::isfinite(res.cost / opt.value));
      CHECK(res.cost >= opt.value - 1e-9);
    }
  }
  SECTION("duplicate points surface as a degenerate-dataset error") {
    Dataset dup = make_dataset_1d({1.0, 1.0, 5.0});
    auto o = DistanceOracle::euclidean(dup, 1);
    CHECK_THROWS_AS(solve_kz(o, 2, 8.0, PrimitiveBackend::exact(8.0)), degenerate_error);
  }
  SECTION("an integral fractional input is reproduced within a finite ratio") {
    Dataset d = gen_uniform_cube(10, 2, 17);
    auto nr = normalize_dataset(d);
    auto o = DistanceOracle::euclidean(nr.data, 1);
    FractionalSolution y{std::vector<double>(10, 0.0)};
    y.y[2] = y.y[7] = 1.0;
    RoundResult rr = round_pipeline(o, y, 2, 8.0, backend);
    CHECK(rr.centers.size() <= 2);
    double base = clustering_cost(o, y).total;
    CHECK(center_set_cost(o, rr.centers) >= 0.0);
    CHECK(std::isfinite(center_set_cost(o, rr.centers) / std::max(base, 1e-30)));
  }
}
