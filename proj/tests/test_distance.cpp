#include <catch2/catch_amalgamated.hpp>

#include "mpclust/dataset.hpp"
#include "mpclust/distance.hpp"

using namespace mpclust;

TEST_CASE("powz closed forms") {
  Dataset d1 = make_dataset_1d({0.0, 3.0});
  auto o2 = DistanceOracle::euclidean(d1, 2);
  CHECK(o2.powz(0, 0) == 0.0);
  CHECK(o2.powz(0, 1) == Catch::Approx(9.0));

  Dataset d2({0.0, 0.0, 3.0, 4.0}, 2);
  auto o1 = DistanceOracle::euclidean(d2, 1);
  CHECK(o1.powz(0, 1) == Catch::Approx(5.0));
  CHECK_THROWS_AS(o1.powz(0, 5), parameter_error);
}

TEST_CASE("generalized triangle inequality over z in 1..4") {
  for (int z = 1; z <= 4; ++z) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      Dataset d = gen_uniform_cube(9, 2, seed);
      auto o = DistanceOracle::euclidean(d, z);
      double f = ipow(2.0, z - 1);
      for (std::size_t p = 0; p < d.size(); ++p)
        for (std::size_t q = 0; q < d.size(); ++q)
          for (std::size_t t = 0; t < d.size(); ++t)
            CHECK(o.powz(p, q) <= f * (o.powz(p, t) + o.powz(t, q)) + 1e-12);
    }
  }
}

TEST_CASE("distorted oracle stays inside the [1, Gamma^2] band per ordered pair") {
  Dataset d = gen_uniform_cube(10, 2, 3);
  auto base = DistanceOracle::euclidean(d, 1);

  auto same = DistanceOracle::distorted(base, 1.0, 99);
  for (std::size_t p = 0; p < d.size(); ++p)
    for (std::size_t q = 0; q < d.size(); ++q) CHECK(same.dist(p, q) == base.dist(p, q));

  for (double gamma : {2.0, 4.0}) {
    auto dist = DistanceOracle::distorted(base, gamma, 7);
    auto dist_log = DistanceOracle::distorted(base, gamma, 7, true);
    for (std::size_t p = 0; p < d.size(); ++p)
      for (std::size_t q = 0; q < d.size(); ++q) {
        if (p == q) {
          CHECK(dist.dist(p, q) == 0.0);
          continue;
        }
        double ratio = dist.dist(p, q) / base.dist(p, q);
        CHECK(ratio >= 1.0 - 1e-12);
        CHECK(ratio <= gamma * gamma + 1e-12);
        double ratio_log = dist_log.dist(p, q) / base.dist(p, q);
        CHECK(ratio_log >= 1.0 - 1e-12);
        CHECK(ratio_log <= gamma * gamma + 1e-12);
      }
  }
}

TEST_CASE("distortion is deterministic per seed and asymmetric in general") {
  Dataset d = gen_uniform_cube(8, 2, 5);
  auto base = DistanceOracle::euclidean(d, 2);
  auto a = DistanceOracle::distorted(base, 2.0, 11);
  auto b = DistanceOracle::distorted(base, 2.0, 11);
  bool asym = false;
  for (std::size_t p = 0; p < d.size(); ++p)
    for (std::size_t q = 0; q < d.size(); ++q) {
      CHECK(a.dist(p, q) == b.dist(p, q));
      if (a.dist(p, q) != a.dist(q, p)) asym = true;
    }
  CHECK(asym);
  CHECK_THROWS_AS(DistanceOracle::distorted(base, 0.5, 1), parameter_error);
  CHECK_THROWS_AS(DistanceOracle::distorted(a, 2.0, 1), parameter_error);
}

TEST_CASE("matrix oracle validates its input") {
  std::vector<double> good{0, 1, 1, 0};
  auto o = DistanceOracle::matrix(good, 2, 1);
  CHECK(o.dist(0, 1) == 1.0);
  CHECK_THROWS_AS(DistanceOracle::matrix({0, 1, 2, 0}, 2, 1), parameter_error);  // asymmetric
  CHECK_THROWS_AS(DistanceOracle::matrix({1, 1, 1, 0}, 2, 1), parameter_error);  // diagonal
  // triangle violation: d(0,2) = 10 > d(0,1) + d(1,2) = 2
  std::vector<double> bad{0, 1, 10, 1, 0, 1, 10, 1, 0};
  CHECK_THROWS_AS(DistanceOracle::matrix(bad, 3, 1), parameter_error);
}

TEST_CASE("oracle_scaled multiplies every distance") {
  Dataset d = gen_uniform_cube(6, 2, 9);
  auto o = DistanceOracle::euclidean(d, 2);
  auto o3 = oracle_scaled(o, 3.0);
  for (std::size_t p = 0; p < d.size(); ++p)
    for (std::size_t q = 0; q < d.size(); ++q)
      CHECK(o3.dist(p, q) == Catch::Approx(3.0 * o.dist(p, q)));
}
