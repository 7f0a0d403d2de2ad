#include <catch2/catch_amalgamated.hpp>
#include <cstdio>

#include "mpclust/dataset.hpp"

using namespace mpclust;

TEST_CASE("normalize scales the minimum pairwise distance to 2") {
  auto r = normalize_dataset(make_dataset_1d({0.0, 1.0}));
  CHECK(r.data.coord(0, 0) == 0.0);
  CHECK(r.data.coord(1, 0) == 2.0);
  CHECK(r.aspect_ratio == Catch::Approx(1.0));

  auto r2 = normalize_dataset(make_dataset_1d({0.0, 2.0, 6.0}));
  CHECK(r2.scale == Catch::Approx(1.0));
  CHECK(r2.data.coord(2, 0) == Catch::Approx(6.0));
  CHECK(r2.aspect_ratio == Catch::Approx(3.0));
}

TEST_CASE("normalize rejects duplicate-only datasets") {
  CHECK_THROWS_AS(normalize_dataset(make_dataset_1d({0.0, 0.0})), degenerate_error);
  CHECK_THROWS_AS(normalize_dataset(make_dataset_1d({5.0})), precondition_error);
}

TEST_CASE("normalized minimum distance is exactly 2 on random data") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Dataset d = gen_uniform_cube(8, 3, seed);
    auto r = normalize_dataset(d);
    auto e = pairwise_extremes(r.data);
    CHECK(e.min_dist == Catch::Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("csv round trip") {
  Dataset d = gen_uniform_cube(7, 3, 42);
  std::string path = "tmp_roundtrip.csv";
  save_csv(d, path);
  Dataset back = load_csv(path);
  REQUIRE(back.size() == d.size());
  REQUIRE(back.dim() == d.dim());
  for (std::size_t i = 0; i < d.size(); ++i)
    for (int j = 0; j < d.dim(); ++j) CHECK(back.coord(i, j) == Catch::Approx(d.coord(i, j)));
  std::remove(path.c_str());
}

TEST_CASE("generators are seed-deterministic") {
  Dataset a = gen_uniform_cube(20, 2, 7);
  Dataset b = gen_uniform_cube(20, 2, 7);
  CHECK(a.coords() == b.coords());
  Dataset c = gen_gaussian_mixture(20, 2, 3, 7);
  Dataset e = gen_gaussian_mixture(20, 2, 3, 7);
  CHECK(c.coords() == e.coords());
  CHECK(gen_line(3).size() == 3);
  CHECK(gen_grid(9, 2).size() == 9);
}
