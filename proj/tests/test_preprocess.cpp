#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "mpclust/oracles.hpp"
#include "mpclust/preprocess.hpp"

using namespace mpclust;

TEST_CASE("aspect-ratio reduction basics") {
  SECTION("small-aspect datasets only move by net snapping") {
    Dataset d = make_dataset_1d({0.0, 1.0, 3.0});
    auto [fd, trace] = reduce_aspect_ratio(d, 2, 1);
    // h is the identity when every coordinate gap is below the cap
    for (std::size_t i = 0; i < trace.coordinate_values.size(); ++i)
      CHECK(trace.h_images[i] == Catch::Approx(trace.coordinate_values[i]));
    double snap = 2.0 * trace.net_step;
    for (std::size_t p = 0; p < 3; ++p)
      for (std::size_t q = p + 1; q < 3; ++q)
        CHECK(std::fabs(fd.euclidean(p, q) - d.euclidean(p, q)) <= snap + 1e-12);
  }
  SECTION("1-D {0, 1, 1e9} collapses the huge gap") {
    Dataset d = make_dataset_1d({0.0, 1.0, 1e9});
    double before = pairwise_extremes(d).max_dist / pairwise_extremes(d).min_dist;
    auto [fd, trace] = reduce_aspect_ratio(d, 2, 1);
    CHECK(trace.aspect_ratio_before == Catch::Approx(before));
    CHECK(trace.aspect_ratio_after < trace.aspect_ratio_before);
    CHECK(trace.aspect_ratio_after <= trace.aspect_bound);
    CHECK(std::isfinite(trace.aspect_bound));
  }
  SECTION("degenerate and invalid inputs") {
    CHECK_THROWS_AS(reduce_aspect_ratio(make_dataset_1d({1.0, 1.0}), 2, 1), degenerate_error);
    CHECK_THROWS_AS(reduce_aspect_ratio(make_dataset_1d({0.0, 1.0}), 3, 1), parameter_error);
  }
}

TEST_CASE("the map is injective and recorded for inversion") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::size_t n = 4 + seed % 7;
    Dataset d = gen_uniform_cube(n, 2, seed + 67);
    auto [fd, trace] = reduce_aspect_ratio(d, 2, 1 + static_cast<int>(seed % 2));
    REQUIRE(trace.mapping.size() == n);
    auto e = pairwise_extremes(fd);
    CHECK(e.min_dist > 0.0);  // injectivity
    CHECK(trace.aspect_ratio_after <= trace.aspect_bound);
  }
}

TEST_CASE("pullback: the optimum survives within a constant factor") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::size_t n = 5 + seed % 6;
    std::size_t k = 2 + seed % 2;
    int z = 1 + static_cast<int>(seed % 2);
    Dataset d = gen_uniform_cube(n, 2, seed + 3001);
    // widen one point to stress the gap collapsing
    std::vector<double> coords = d.coords();
    coords[0] += 50.0 * static_cast<double>(seed % 3);
    Dataset stretched(std::move(coords), 2);
    auto [fd, trace] = reduce_aspect_ratio(stretched, k, z);
    auto o_before = DistanceOracle::euclidean(stretched, z);
    auto o_after = DistanceOracle::euclidean(fd, z);
    auto opt_before = brute_opt_integral(o_before, k);
    auto opt_after = brute_opt_integral(o_after, k);
    // both directions within the documented 2^O(z) envelope (empirical:
    // a generous fixed factor at this scale)
    double f = ipow(2.0, 3 * z);
    CHECK(opt_after.value <= f * opt_before.value + 1e-9);
    // pulling back the optimum on f(P) stays comparable on P
    double pulled = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c : opt_after.witness_centers)
        best = std::min(best, o_before.powz(p, c));
      pulled += best;
    }
    CHECK(pulled <= f * std::max(opt_before.value, 1e-12) + 1e-9);
  }
}

TEST_CASE("jl projection") {
  SECTION("identity debug mode") {
    Dataset d = gen_uniform_cube(10, 5, 2);
    Dataset p = jl_project(d, 5, -1);
    CHECK(p.coords() == d.coords());
    CHECK_THROWS_AS(jl_project(d, 3, -1), parameter_error);
    CHECK_THROWS_AS(jl_project(d, 0, 1), parameter_error);
  }
  SECTION("pairwise distortion stays in [0.5, 2] for a mild reduction") {
    Dataset d = gen_uniform_cube(100, 50, 11);
    Dataset p = jl_project(d, 64, 11);
    REQUIRE(p.dim() == 64);
    for (std::size_t a = 0; a < d.size(); ++a)
      for (std::size_t b = a + 1; b < d.size(); ++b) {
        double r = p.euclidean(a, b) / d.euclidean(a, b);
        CHECK(r >= 0.5);
        CHECK(r <= 2.0);
      }
  }
  SECTION("deterministic per seed; single point is preserved trivially") {
    Dataset d = gen_uniform_cube(5, 4, 3);
    Dataset a = jl_project(d, 3, 7);
    Dataset b = jl_project(d, 3, 7);
    CHECK(a.coords() == b.coords());
    Dataset one({1.0, 2.0, 3.0, 4.0}, 4);
    Dataset po = jl_project(one, 2, 9);
    CHECK(po.size() == 1);
  }
}
