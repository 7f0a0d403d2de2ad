#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "mpclust/dataset.hpp"
#include "mpclust/errors.hpp"
#include "mpclust/rng.hpp"

namespace mpclust {

inline double ipow(double base, int e) {
  double r = 1.0;
  while (e > 0) {
    if (e & 1) r *= base;
    base *= base;
    e >>= 1;
  }
  return r;
}

enum class OracleKind { euclidean, matrix, distorted };

// Immutable distance oracle over point ids 0..n-1. Three kinds:
//  - euclidean: l2 over a stored dataset;
//  - matrix: explicit symmetric distance matrix;
//  - distorted: a base oracle with an independent per-ordered-pair
//    multiplier in [1, Gamma^2]. Not symmetric in general.
// All kinds are safe for concurrent reads.
class DistanceOracle {
 public:
  static DistanceOracle euclidean(Dataset d, int z) {
    DistanceOracle o;
    o.kind_ = OracleKind::euclidean;
    o.z_ = check_z(z);
    o.n_ = d.size();
    o.data_ = std::make_shared<Dataset>(std::move(d));
    return o;
  }

  static DistanceOracle matrix(std::vector<double> m, std::size_t n, int z,
                               bool check_triangle = true) {
    if (m.size() != n * n) throw parameter_error("matrix oracle: size mismatch");
    for (std::size_t p = 0; p < n; ++p) {
      if (m[p * n + p] != 0.0) throw parameter_error("matrix oracle: nonzero diagonal");
      for (std::size_t q = 0; q < n; ++q) {
        if (m[p * n + q] < 0.0) throw parameter_error("matrix oracle: negative distance");
        if (m[p * n + q] != m[q * n + p]) throw parameter_error("matrix oracle: not symmetric");
      }
    }
    if (check_triangle && n <= 256) {
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q)
          for (std::size_t t = 0; t < n; ++t)
            if (m[p * n + q] > m[p * n + t] + m[t * n + q] + 1e-12)
              throw parameter_error("matrix oracle: triangle inequality violated");
    }
    DistanceOracle o;
    o.kind_ = OracleKind::matrix;
    o.z_ = check_z(z);
    o.n_ = n;
    o.matrix_ = std::make_shared<std::vector<double>>(std::move(m));
    return o;
  }

  // Deterministic distortion dist <= d~ <= Gamma^2 * dist, drawn per ordered
  // pair; d~(p,q) and d~(q,p) are independent.
  static DistanceOracle distorted(const DistanceOracle& base, double gamma, std::uint64_t seed,
                                  bool log_uniform = false) {
    if (base.kind_ == OracleKind::distorted)
      throw parameter_error("distort: base oracle must be undistorted");
    if (gamma < 1.0) throw parameter_error("distort: Gamma must be >= 1");
    DistanceOracle o;
    o.kind_ = OracleKind::distorted;
    o.z_ = base.z_;
    o.n_ = base.n_;
    o.base_ = std::make_shared<DistanceOracle>(base);
    o.gamma_ = gamma;
    o.seed_ = seed;
    o.log_uniform_ = log_uniform;
    return o;
  }

  std::size_t size() const { return n_; }
  int z() const { return z_; }
  OracleKind kind() const { return kind_; }
  double gamma() const { return gamma_; }
  bool is_distorted() const { return kind_ == OracleKind::distorted; }

  // Dataset backing a euclidean oracle (or the base of a distortion of one).
  const Dataset* dataset() const {
    if (kind_ == OracleKind::euclidean) return data_.get();
    if (kind_ == OracleKind::distorted) return base_->dataset();
    return nullptr;
  }

  // Undistorted view: *this for exact kinds, the base for distorted kind.
  const DistanceOracle& base() const {
    return kind_ == OracleKind::distorted ? *base_ : *this;
  }

  double dist(std::size_t p, std::size_t q) const {
    check_ids(p, q);
    switch (kind_) {
      case OracleKind::euclidean:
        return data_->euclidean(p, q);
      case OracleKind::matrix:
        return (*matrix_)[p * n_ + q];
      case OracleKind::distorted: {
        if (p == q) return 0.0;
        return base_->dist(p, q) * multiplier(p, q);
      }
    }
    return 0.0;
  }

  // dist(p,q)^z under this oracle's kind.
  double powz(std::size_t p, std::size_t q) const { return ipow(dist(p, q), z_); }

 private:
  static int check_z(int z) {
    if (z < 1) throw parameter_error("oracle: z must be >= 1");
    return z;
  }
  void check_ids(std::size_t p, std::size_t q) const {
    if (p >= n_ || q >= n_) throw parameter_error("oracle: point id out of range");
  }
  double multiplier(std::size_t p, std::size_t q) const {
    std::uint64_t h = hash_combine(seed_, hash_combine(p + 1, q + 1));
    double u = u01(h);
    double g2 = gamma_ * gamma_;
    return log_uniform_ ? std::pow(g2, u) : 1.0 + (g2 - 1.0) * u;
  }

  OracleKind kind_ = OracleKind::euclidean;
  int z_ = 1;
  std::size_t n_ = 0;
  std::shared_ptr<const Dataset> data_;
  std::shared_ptr<const std::vector<double>> matrix_;
  std::shared_ptr<const DistanceOracle> base_;
  double gamma_ = 1.0;
  std::uint64_t seed_ = 0;
  bool log_uniform_ = false;
};

inline double powz_dist(const DistanceOracle& o, std::size_t p, std::size_t q) {
  return o.powz(p, q);
}

// Same-kind oracle with every distance multiplied by c. Distorted oracles
// keep their seed, so the per-pair multipliers are unchanged.
inline DistanceOracle oracle_scaled(const DistanceOracle& o, double c) {
  if (!(c > 0.0)) throw parameter_error("oracle_scaled: scale must be positive");
  switch (o.kind()) {
    case OracleKind::euclidean: {
      Dataset d = *o.dataset();
      for (double& v : d.coords()) v *= c;
      return DistanceOracle::euclidean(std::move(d), o.z());
    }
    case OracleKind::matrix: {
      std::vector<double> m;
      m.reserve(o.size() * o.size());
      for (std::size_t p = 0; p < o.size(); ++p)
        for (std::size_t q = 0; q < o.size(); ++q) m.push_back(c * o.dist(p, q));
      return DistanceOracle::matrix(std::move(m), o.size(), o.z(), false);
    }
    case OracleKind::distorted:
      throw parameter_error("oracle_scaled: scale the base oracle, then re-distort");
  }
  throw parameter_error("oracle_scaled: unknown kind");
}

inline double max_pairwise_dist(const DistanceOracle& o) {
  double m = 0.0;
  for (std::size_t p = 0; p < o.size(); ++p)
    for (std::size_t q = p + 1; q < o.size(); ++q) m = std::max(m, o.dist(p, q));
  return m;
}

inline double min_pairwise_dist(const DistanceOracle& o) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < o.size(); ++p)
    for (std::size_t q = p + 1; q < o.size(); ++q) m = std::min(m, o.dist(p, q));
  return m;
}

// min pairwise distance >= 2 is the normalization every solver assumes.
inline bool is_normalized(const DistanceOracle& o, double tol = 1e-9) {
  if (o.size() < 2) return true;
  return min_pairwise_dist(o.base()) >= 2.0 - tol;
}

}  // namespace mpclust
