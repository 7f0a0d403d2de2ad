#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <map>

#include "mpclust/fractional.hpp"
#include "mpclust/oracles.hpp"

using namespace mpclust;

TEST_CASE("lambda sweep trivial instances") {
  auto backend = PrimitiveBackend::exact(2.0);
  SECTION("k = n returns the all-ones solution") {
    auto nr = normalize_dataset(gen_uniform_cube(5, 2, 1));
    auto o = DistanceOracle::euclidean(nr.data, 1);
    auto [y, trace] = fractional_kz(o, 5, 2.0, backend);
    for (double v : y.y) CHECK(v == Catch::Approx(1.0));
    CHECK(clustering_cost(o, y).total == 0.0);
  }
  SECTION("two far points, k = 2") {
    Dataset d = make_dataset_1d({0.0, 100.0});
    auto o = DistanceOracle::euclidean(d, 1);
    auto [y, trace] = fractional_kz(o, 2, 2.0, backend);
    CHECK(y.y[0] == Catch::Approx(1.0));
    CHECK(y.y[1] == Catch::Approx(1.0));
    CHECK(clustering_cost(o, y).total == 0.0);
  }
  SECTION("parameter validation") {
    Dataset d = make_dataset_1d({0.0, 2.0});
    auto o = DistanceOracle::euclidean(d, 1);
    CHECK_THROWS_AS(fractional_kz(o, 1, 2.0, backend), parameter_error);
    CHECK_THROWS_AS(fractional_kz(o, 3, 2.0, backend), parameter_error);
    Dataset tight = make_dataset_1d({0.0, 0.5, 1.0});
    auto ot = DistanceOracle::euclidean(tight, 1);
    CHECK_THROWS_AS(fractional_kz(ot, 2, 2.0, backend), precondition_error);
  }
}

TEST_CASE("sweep contract: mass k, trailing mass <= 2, feasible blends") {
  auto backend = PrimitiveBackend::exact(2.0);
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    std::size_t n = 4 + seed % 7;
    std::size_t k = 2 + seed % 3;
    int z = 1 + static_cast<int>(seed % 2);
    auto nr = normalize_dataset(gen_uniform_cube(n, 2, seed + 211));
    auto o = DistanceOracle::euclidean(nr.data, z);
    auto [y, trace] = fractional_kz(o, k, 2.0, backend);
    CHECK(std::fabs(y.mass() - static_cast<double>(k)) <= 1e-9);
    CHECK(trace.masses.front() == Catch::Approx(static_cast<double>(n)));
    CHECK(trace.masses.back() <= 2.0 + 1e-9);  // Fact B.2 for this L
    CHECK(trace.ell_star >= 1);
    CHECK(trace.masses[trace.ell_star] <= k + 1e-9);
    CHECK(trace.masses[trace.ell_star - 1] >= k - 1e-9);

    // Blending the two bracketing solutions' optimal assignments stays
    // feasible for the blended opening vector.
    LevelProfile lp = level_profile(o, 2.0, backend);
    FractionalSolution hi = trace.ell_star == 1
                                ? FractionalSolution{std::vector<double>(n, 1.0)}
                                : radii_from_levels(lp, z, trace.lambdas[trace.ell_star - 1]);
    FractionalSolution lo = radii_from_levels(lp, z, trace.lambdas[trace.ell_star]);
    Assignment xh = optimal_assignment(o, hi);
    Assignment xl = optimal_assignment(o, lo);
    Assignment blend;
    blend.rows.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
      std::map<std::size_t, double> row;
      for (const auto& [q, v] : xh.rows[p]) row[q] += trace.alpha * v;
      for (const auto& [q, v] : xl.rows[p]) row[q] += (1.0 - trace.alpha) * v;
      for (const auto& [q, v] : row) blend.rows[p].emplace_back(q, v);
    }
    CHECK(is_feasible(blend, y));
  }
}

TEST_CASE("Fact B.1: at lambda = 1 the all-ones solution is FL-optimal") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    std::size_t n = 2 + seed % 7;  // n <= 8 for the LP oracle
    auto nr = normalize_dataset(gen_uniform_cube(n, 2, seed + 307));
    auto o = DistanceOracle::euclidean(nr.data, 1 + static_cast<int>(seed % 2));
    auto lp = lp_opt_fractional_fl(o, 1.0);
    CHECK(lp.value == Catch::Approx(static_cast<double>(n)).epsilon(1e-7));
  }
}

TEST_CASE("sample_k1 picks a singleton with its exact cost") {
  SECTION("n = 1") {
    Dataset d = make_dataset_1d({42.0});
    auto o = DistanceOracle::euclidean(d, 2);
    auto [y, cost] = sample_k1(o, 0, 5);
    CHECK(y.y == std::vector<double>{1.0});
    CHECK(cost == 0.0);
  }
  SECTION("symmetric pair: cost 10 either way") {
    Dataset d = make_dataset_1d({0.0, 10.0});
    auto o = DistanceOracle::euclidean(d, 1);
    auto [y, cost] = sample_k1(o, 0, 5);
    CHECK(cost == Catch::Approx(10.0));
  }
  SECTION("cost ratio against the k = 1 oracle stays finite and small") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
      std::size_t n = 3 + seed % 10;
      Dataset d = gen_uniform_cube(n, 2, seed + 83);
      auto o = DistanceOracle::euclidean(d, 1 + static_cast<int>(seed % 2));
      auto [y, cost] = sample_k1(o, 0, seed);
      auto opt = brute_opt_integral(o, 1);
      CHECK(cost >= opt.value - 1e-12);
      if (opt.value > 0) CHECK(cost / opt.value <= ipow(2.0, 2 * o.z()) + 1.0);
    }
  }
}

TEST_CASE("value estimation") {
  auto backend = PrimitiveBackend::exact(2.0);
  SECTION("n = k distinct points: eta = 0") {
    Dataset d = make_dataset_1d({0.0, 2.0, 4.0});
    auto o = DistanceOracle::euclidean(d, 1);
    ValueEstimate est = estimate_opt_value(o, 3, 2.0, backend);
    CHECK(est.eta == 0.0);
  }
  SECTION("OPT <= eta on random fixtures") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      std::size_t n = 4 + seed % 7;
      std::size_t k = 2 + seed % 2;
      Dataset d = gen_uniform_cube(n, 2, seed + 907);
      auto o = DistanceOracle::euclidean(d, 1);
      ValueEstimate est = estimate_opt_value(o, k, 2.0, backend, seed);
      auto opt = brute_opt_integral(o, k);
      CHECK(est.eta >= opt.value * (1 - 1e-9));
    }
  }
  SECTION("doubling every coordinate scales eta by exactly 2^z") {
    for (int z : {1, 2}) {
      Dataset d = gen_uniform_cube(8, 2, 5);
      std::vector<double> doubled = d.coords();
      for (double& v : doubled) v *= 2.0;
      Dataset d2(std::move(doubled), 2);
      auto o = DistanceOracle::euclidean(d, z);
      auto o2 = DistanceOracle::euclidean(d2, z);
      ValueEstimate a = estimate_opt_value(o, 3, 2.0, backend, 9);
      ValueEstimate b = estimate_opt_value(o2, 3, 2.0, backend, 9);
      CHECK(b.eta == Catch::Approx(ipow(2.0, z) * a.eta).epsilon(1e-12));
    }
  }
}

TEST_CASE("canonical tree sum agrees with plain summation") {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    std::size_t n = 1 + rng.next_below(300);
    std::vector<double> v(n);
    double plain = 0.0;
    for (double& x : v) {
      x = rng.next_u01();
      plain += x;
    }
    CHECK(canonical_tree_sum(v) == Catch::Approx(plain).epsilon(1e-12));
  }
  CHECK(canonical_tree_sum(std::vector<double>{}) == 0.0);
}
