#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mpclust/errors.hpp"
#include "mpclust/rng.hpp"

namespace mpclust {

// An n-point dataset in R^d. Points are dense rows indexed 0..n-1.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<double> coords, int dim) : coords_(std::move(coords)), dim_(dim) {
    if (dim_ <= 0) throw parameter_error("Dataset: dim must be positive");
    if (coords_.size() % static_cast<std::size_t>(dim_) != 0)
      throw parameter_error("Dataset: coordinate count not divisible by dim");
  }

  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  int dim() const { return dim_; }
  bool empty() const { return coords_.empty(); }

  std::span<const double> point(std::size_t i) const {
    if (i >= size()) throw parameter_error("Dataset: point id out of range");
    return {coords_.data() + i * dim_, static_cast<std::size_t>(dim_)};
  }

  double coord(std::size_t i, int j) const { return coords_[i * dim_ + j]; }

  void push_back(std::span<const double> p) {
    if (dim_ == 0) dim_ = static_cast<int>(p.size());
    if (static_cast<int>(p.size()) != dim_)
      throw parameter_error("Dataset: inconsistent point dimension");
    coords_.insert(coords_.end(), p.begin(), p.end());
  }

  const std::vector<double>& coords() const { return coords_; }
  std::vector<double>& coords() { return coords_; }

  double euclidean(std::size_t p, std::size_t q) const {
    double s = 0.0;
    const double* a = coords_.data() + p * dim_;
    const double* b = coords_.data() + q * dim_;
    for (int j = 0; j < dim_; ++j) {
      double t = a[j] - b[j];
      s += t * t;
    }
    return std::sqrt(s);
  }

 private:
  std::vector<double> coords_;
  int dim_ = 0;
};

inline Dataset make_dataset_1d(std::initializer_list<double> xs) {
  std::vector<double> c(xs);
  return Dataset(std::move(c), 1);
}

struct PairwiseExtremes {
  double min_dist = std::numeric_limits<double>::infinity();
  double max_dist = 0.0;
};

inline PairwiseExtremes pairwise_extremes(const Dataset& d) {
  PairwiseExtremes e;
  const std::size_t n = d.size();
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p + 1; q < n; ++q) {
      double v = d.euclidean(p, q);
      e.min_dist = std::min(e.min_dist, v);
      e.max_dist = std::max(e.max_dist, v);
    }
  return e;
}

struct NormalizeResult {
  Dataset data;
  double scale = 1.0;       // multiplier applied to every coordinate
  double aspect_ratio = 1.0;  // max/min pairwise distance of the output
};

// Rescales so the minimum pairwise distance is exactly 2 (the convention the
// solvers assume). Throws degenerate_error when all points coincide; the
// caller must treat that as an OPT = 0 instance.
inline NormalizeResult normalize_dataset(const Dataset& d) {
  if (d.size() < 2) throw precondition_error("normalize_dataset: need at least 2 points");
  PairwiseExtremes e = pairwise_extremes(d);
  if (!(e.min_dist > 0.0))
    throw degenerate_error("normalize_dataset: dataset contains duplicate points");
  NormalizeResult r;
  r.scale = 2.0 / e.min_dist;
  r.aspect_ratio = e.max_dist / e.min_dist;
  std::vector<double> c = d.coords();
  for (double& v : c) v *= r.scale;
  r.data = Dataset(std::move(c), d.dim());
  return r;
}

// ---------------------------------------------------------------------------
// File formats: CSV (one point per row) and JSON array-of-arrays.

inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("load_csv: cannot open " + path);
  Dataset d;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw io_error("load_csv: bad number '" + cell + "' in " + path);
      }
    }
    d.push_back(row);
  }
  if (d.empty()) throw io_error("load_csv: no points in " + path);
  return d;
}

inline void save_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("save_csv: cannot open " + path);
  out.precision(17);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (int j = 0; j < d.dim(); ++j) {
      if (j) out << ',';
      out << d.coord(i, j);
    }
    out << '\n';
  }
}

// Square CSV of pairwise distances for the matrix oracle.
inline std::vector<double> load_matrix_csv(const std::string& path, std::size_t& n_out) {
  std::ifstream in(path);
  if (!in) throw io_error("load_matrix_csv: cannot open " + path);
  std::vector<double> m;
  std::size_t rows = 0, cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      m.push_back(std::stod(cell));
      ++c;
    }
    if (rows == 0) cols = c;
    if (c != cols) throw io_error("load_matrix_csv: ragged rows in " + path);
    ++rows;
  }
  if (rows != cols) throw io_error("load_matrix_csv: matrix is not square in " + path);
  n_out = rows;
  return m;
}

// ---------------------------------------------------------------------------
// Synthetic generators (seed-deterministic).

inline Dataset gen_line(std::size_t n) {
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = static_cast<double>(i);
  return Dataset(std::move(c), 1);
}

inline Dataset gen_grid(std::size_t n, int dim) {
  // First n points of the integer grid enumerated row-major.
  std::size_t side = 1;
  while (static_cast<std::size_t>(std::pow(static_cast<double>(side), dim)) < n) ++side;
  std::vector<double> c;
  c.reserve(n * dim);
  std::vector<std::size_t> idx(dim, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) c.push_back(static_cast<double>(idx[j]));
    for (int j = dim - 1; j >= 0; --j) {
      if (++idx[j] < side) break;
      idx[j] = 0;
    }
  }
  return Dataset(std::move(c), dim);
}

inline Dataset gen_uniform_cube(std::size_t n, int dim, std::uint64_t seed) {
  Rng rng(hash_combine(seed, 0xC0BEULL));
  std::vector<double> c(n * dim);
  for (double& v : c) v = rng.next_u01();
  return Dataset(std::move(c), dim);
}

inline Dataset gen_gaussian_mixture(std::size_t n, int dim, int k, std::uint64_t seed,
                                    double spread = 0.05) {
  if (k < 1) throw parameter_error("gen_gaussian_mixture: k must be >= 1");
  Rng rng(hash_combine(seed, 0x6A55ULL));
  std::vector<std::vector<double>> centers(k, std::vector<double>(dim));
  for (auto& ctr : centers)
    for (double& v : ctr) v = rng.next_u01();
  std::vector<double> c;
  c.reserve(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ctr = centers[i % k];
    for (int j = 0; j < dim; ++j) c.push_back(ctr[j] + spread * rng.next_gaussian());
  }
  return Dataset(std::move(c), dim);
}

}  // namespace mpclust
