#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mpclust/assignment.hpp"
#include "mpclust/distance.hpp"
#include "mpclust/errors.hpp"
#include "mpclust/primitives.hpp"

namespace mpclust {

struct SolverParams {
  int z = 1;
  double lambda = 1.0;
  double beta = 0.25;
  double gamma = 1.0;

  void validate() const {
    if (z < 1) throw parameter_error("SolverParams: z must be >= 1");
    if (!(lambda > 0.0)) throw parameter_error("SolverParams: lambda must be positive");
    if (!(beta > 0.0 && beta < 1.0)) throw parameter_error("SolverParams: beta must lie in (0,1)");
    if (gamma < 1.0) throw parameter_error("SolverParams: Gamma must be >= 1");
  }
};

struct DerivedConstants {
  static double beta_star(int z) { return ipow(0.5, z + 1); }
  static double gamma_star(int z) { return ipow(2.0, 2 * z * z + z); }
  static double beta_robust(int z, double gamma) {
    return beta_star(z) / ipow(gamma * gamma, z);
  }
};

// Vector of radii r_p solving sum_q [r_p - beta * dist^z(p,q)]^+ = lambda.
struct RadiusProfile {
  double beta = 0.0;
  double lambda = 0.0;
  std::vector<double> radii;

  // Residual of the defining equation at point p.
  double residual(const DistanceOracle& oracle, std::size_t p) const {
    double s = 0.0;
    for (std::size_t q = 0; q < oracle.size(); ++q)
      s += std::max(0.0, radii[p] - beta * oracle.powz(p, q));
    return s - lambda;
  }
};

namespace detail {

// Exact root of r -> sum_i m_i * [r - b_i]^+ = lambda over sorted weighted
// breakpoints. The function is continuous, increasing past the first
// breakpoint, and the root is unique.
inline double solve_piecewise_root(std::vector<std::pair<double, double>>& breakpoints,
                                   double lambda) {
  std::sort(breakpoints.begin(), breakpoints.end());
  double active = 0.0;  // total multiplicity of breakpoints <= current segment
  double weighted = 0.0;  // sum of m_i * b_i over active breakpoints
  const std::size_t m = breakpoints.size();
  for (std::size_t i = 0; i < m; ++i) {
    active += breakpoints[i].second;
    weighted += breakpoints[i].second * breakpoints[i].first;
    double next = (i + 1 < m) ? breakpoints[i + 1].first
                              : std::numeric_limits<double>::infinity();
    double candidate = (lambda + weighted) / active;
    if (candidate <= next) return candidate;
  }
  return (lambda + weighted) / active;
}

}  // namespace detail

// Root of Eq. sum_q [r - beta*dist^z(p,q)]^+ = lambda for one point, solved
// exactly over sorted breakpoints (no iterative root finding).
inline double solve_radius(const DistanceOracle& oracle, std::size_t p,
                           const SolverParams& params) {
  params.validate();
  if (params.z != oracle.z())
    throw parameter_error("solve_radius: params.z differs from oracle z");
  std::vector<std::pair<double, double>> b;
  b.reserve(oracle.size());
  for (std::size_t q = 0; q < oracle.size(); ++q)
    b.emplace_back(params.beta * oracle.powz(p, q), 1.0);
  return detail::solve_piecewise_root(b, params.lambda);
}

// Radius profile at an arbitrary scale factor beta > 0 (the structural
// inequalities quantify over all beta > 0, not only (0,1)).
inline RadiusProfile radius_profile_any_beta(const DistanceOracle& oracle, double beta,
                                             double lambda) {
  if (!(beta > 0.0)) throw parameter_error("radius_profile: beta must be positive");
  if (!(lambda > 0.0)) throw parameter_error("radius_profile: lambda must be positive");
  RadiusProfile prof;
  prof.beta = beta;
  prof.lambda = lambda;
  prof.radii.resize(oracle.size());
  std::vector<std::pair<double, double>> b(oracle.size());
  for (std::size_t p = 0; p < oracle.size(); ++p) {
    for (std::size_t q = 0; q < oracle.size(); ++q)
      b[q] = {beta * oracle.powz(p, q), 1.0};
    prof.radii[p] = detail::solve_piecewise_root(b, lambda);
  }
  return prof;
}

// MP_beta: open every point p with amount r_p / lambda.
inline std::pair<FractionalSolution, RadiusProfile> mp_beta(const DistanceOracle& oracle,
                                                            const SolverParams& params) {
  params.validate();
  if (params.z != oracle.z())
    throw parameter_error("mp_beta: params.z differs from oracle z");
  RadiusProfile prof = radius_profile_any_beta(oracle, params.beta, params.lambda);
  FractionalSolution y;
  y.y.resize(prof.radii.size());
  for (std::size_t p = 0; p < prof.radii.size(); ++p) y.y[p] = prof.radii[p] / params.lambda;
  return {std::move(y), std::move(prof)};
}

// Per-point per-level neighborhood sizes |A^(l)_p| for l in [0..L].
struct LevelProfile {
  int L = 0;
  double gamma = 1.0;
  std::vector<std::vector<double>> counts;  // counts[p][l]
};

// Nested level sets with {d <= G^(l-1)} <= A^(l)_p <= {d <= G^l}; the exact
// backend takes the upper end.
inline LevelProfile level_profile(const DistanceOracle& oracle, double gamma,
                                  const PrimitiveBackend& backend) {
  if (!(gamma > 1.0)) throw parameter_error("level_profile: Gamma must exceed 1");
  const std::size_t n = oracle.size();
  LevelProfile lp;
  lp.gamma = gamma;
  // Slack-injected backends answer with radii in [G^(l-1), G^l]; one extra
  // level keeps the guarantee that the top level covers everything.
  lp.L = level_count_L(oracle, gamma) + (backend.slack_active() ? 1 : 0);
  lp.counts.assign(n, std::vector<double>(lp.L + 1, 0.0));
  std::vector<double> ones(n, 1.0);
  for (std::size_t p = 0; p < n; ++p) lp.counts[p][0] = 1.0;  // A^(0)_p = {p}
  for (int ell = 1; ell <= lp.L; ++ell) {
    double tau = backend.slack_active() ? ipow(gamma, ell - 1) : ipow(gamma, ell);
    std::vector<double> c = range_sum(oracle, ones, tau, backend);
    for (std::size_t p = 0; p < n; ++p)
      lp.counts[p][ell] = std::max(c[p], lp.counts[p][ell - 1]);
  }
  // A^(L)_p = P must hold for the chosen L.
  for (std::size_t p = 0; p < n; ++p)
    if (lp.counts[p][lp.L] != static_cast<double>(n))
      throw error("level_profile: top level does not cover the dataset");
  return lp;
}

// Per-point radius of the level-count equation; the kernel shared by the
// offline solver and the simulator's local computation.
inline double radius_from_count_row(const double* counts, int L, double gamma, int z,
                                    double lambda) {
  const double beta = DerivedConstants::beta_robust(z, gamma);
  std::vector<std::pair<double, double>> b;
  b.emplace_back(0.0, 1.0);  // the point itself, level 0
  for (int ell = 1; ell <= L; ++ell) {
    double mult = counts[ell] - counts[ell - 1];
    if (mult > 0.0) b.emplace_back(beta * ipow(ipow(gamma, ell), z), mult);
  }
  return detail::solve_piecewise_root(b, lambda);
}

// Radii solved against level counts only (the per-point equation of the
// MPC-implementable variant). Level counts do not depend on lambda, so the
// lambda-sweep reuses one profile for every opening cost.
inline FractionalSolution radii_from_levels(const LevelProfile& lp, int z, double lambda) {
  const std::size_t n = lp.counts.size();
  FractionalSolution y;
  y.y.resize(n);
  for (std::size_t p = 0; p < n; ++p)
    y.y[p] = radius_from_count_row(lp.counts[p].data(), lp.L, lp.gamma, z, lambda) / lambda;
  return y;
}

// MPC-implementable variant of MP_beta: the radius is solved against level
// counts only, which is MP_beta run on the implied distorted distance
// d~(p,q) = Gamma^l. Uses beta = beta_robust(z, Gamma) regardless of
// params.beta. Requires a normalized dataset so that A^(0)_p = {p}.
inline std::pair<FractionalSolution, LevelProfile> mp_level_variant(
    const DistanceOracle& oracle, const SolverParams& params, const PrimitiveBackend& backend) {
  if (params.z != oracle.z())
    throw parameter_error("mp_level_variant: params.z differs from oracle z");
  if (!(params.lambda > 0.0)) throw parameter_error("mp_level_variant: lambda must be positive");
  if (!(params.gamma > 1.0))
    throw parameter_error("mp_level_variant: Gamma must exceed 1 for level sets");
  if (!is_normalized(oracle))
    throw precondition_error("mp_level_variant: dataset is not normalized (min dist < 2)");

  LevelProfile lp = level_profile(oracle, params.gamma, backend);
  FractionalSolution y = radii_from_levels(lp, params.z, params.lambda);
  return {std::move(y), std::move(lp)};
}

// The canonical (possibly infeasible) assignment x_pq = (1/lambda) *
// [r_p - beta*dist^z(p,q)]^+. Row sums are exactly 1 by the defining
// equation; for z >= 2 the capacity constraint x_pq <= y_q can fail.
inline Assignment infeasible_assignment(const DistanceOracle& oracle, const RadiusProfile& prof) {
  Assignment x;
  const std::size_t n = oracle.size();
  x.rows.resize(n);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) {
      double v = (prof.radii[p] - prof.beta * oracle.powz(p, q)) / prof.lambda;
      if (v > 0.0) x.rows[p].emplace_back(q, v);
    }
  return x;
}

// ---------------------------------------------------------------------------
// Structural property checks. Each check evaluates one inequality of the
// radius vector exactly as stated, reporting pass/fail plus the worst slack
// (positive slack = margin, negative = violation).

struct PropertyCheck {
  std::string name;
  bool pass = true;
  double worst_slack = std::numeric_limits<double>::infinity();
  std::string note;

  PropertyCheck() = default;
  explicit PropertyCheck(std::string n) : name(std::move(n)) {}

  void record(double slack, double rel_tol_scale) {
    worst_slack = std::min(worst_slack, slack);
    if (slack < -rel_tol_scale) pass = false;
  }
};

struct PropertyReport {
  std::vector<PropertyCheck> checks;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  const PropertyCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

namespace detail {

inline std::vector<std::size_t> ball(const DistanceOracle& oracle, std::size_t p, double beta,
                                     double radius) {
  std::vector<std::size_t> out;
  for (std::size_t q = 0; q < oracle.size(); ++q)
    if (beta * oracle.powz(p, q) <= radius) out.push_back(q);
  return out;
}

}  // namespace detail

// Runs the full battery at every scale in `scales` (each in (0,1)):
//  (a) ball-size bound        |B_p(r)| <= lambda / (r_p - r)
//  (b) beta-monotonicity      (b'/b) r^(b) <= r^(b') <= r^(b)
//  (c) location smoothness    r^(b)_p <= r^(2^{z-1} b)_q + 2^{z-1} b d^z(p,q)
//                                     <= 2^{z-1} (r^(b)_q + b d^z(p,q))
//  (d) additive smoothness    with the ball/ring correction term
//  (e) local density          sum_{q in B_p(g* r_p)} r_q >= lambda
//  (f) scale-doubling bound   r_p + sum_q x_pq * b d^z <= r^(2b)_p
// plus the defining-equation residual.
inline PropertyReport check_structural_properties(const DistanceOracle& oracle,
                                                  const SolverParams& params,
                                                  const std::vector<double>& scales) {
  if (oracle.is_distorted())
    throw parameter_error("check_structural_properties: requires an undistorted oracle");
  const int z = oracle.z();
  const double lambda = params.lambda;
  const std::size_t n = oracle.size();
  const double pow2z1 = ipow(2.0, z - 1);
  const double gstar = DerivedConstants::gamma_star(z);

  PropertyReport rep;
  PropertyCheck residual("eq1-residual");
  PropertyCheck a("ball-size");
  PropertyCheck bmono("beta-monotone");
  PropertyCheck cloc("location-smooth");
  PropertyCheck dadd("additive-smooth");
  PropertyCheck edens("local-density");
  PropertyCheck fdbl("scale-double");

  std::vector<RadiusProfile> profs;
  for (double beta : scales) profs.push_back(radius_profile_any_beta(oracle, beta, lambda));

  for (std::size_t si = 0; si < scales.size(); ++si) {
    const double beta = scales[si];
    const RadiusProfile& prof = profs[si];

    for (std::size_t p = 0; p < n; ++p)
      residual.record(1e-9 * lambda - std::fabs(prof.residual(oracle, p)), 0.0);

    // (a) at r in {r_p/4, r_p/2, 3 r_p/4}
    for (std::size_t p = 0; p < n; ++p) {
      double rp = prof.radii[p];
      for (double frac : {0.25, 0.5, 0.75}) {
        double r = frac * rp;
        if (!(r > 0.0 && r < rp)) continue;
        double lhs = static_cast<double>(detail::ball(oracle, p, beta, r).size());
        double rhs = lambda / (rp - r);
        a.record(rhs - lhs, 1e-9 * std::max(1.0, rhs));
      }
    }

    // (b) against every smaller scale in the list
    for (std::size_t sj = 0; sj < scales.size(); ++sj) {
      if (scales[sj] >= beta) continue;  // need beta >= beta'
      double bp = scales[sj];
      for (std::size_t p = 0; p < n; ++p) {
        double lhs = (bp / beta) * prof.radii[p];
        double mid = profs[sj].radii[p];
        bmono.record(mid - lhs, 1e-9 * std::max(1.0, std::fabs(mid)));
        bmono.record(prof.radii[p] - mid, 1e-9 * std::max(1.0, prof.radii[p]));
      }
    }

    // (c) both inequalities; the middle term needs the profile at 2^{z-1}b.
    {
      double bmid = pow2z1 * beta;
      bool mid_ok = bmid < 1.0;
      RadiusProfile prof_mid;
      if (mid_ok) prof_mid = radius_profile_any_beta(oracle, bmid, lambda);
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q) {
          double dz = oracle.powz(p, q);
          double outer = pow2z1 * (prof.radii[q] + beta * dz);
          cloc.record(outer - prof.radii[p], 1e-9 * std::max(1.0, outer));
          if (mid_ok) {
            double mid = prof_mid.radii[q] + pow2z1 * beta * dz;
            cloc.record(mid - prof.radii[p], 1e-9 * std::max(1.0, mid));
            cloc.record(outer - mid, 1e-9 * std::max(1.0, outer));
          }
        }
      if (!mid_ok)
        cloc.note = "middle term skipped where 2^{z-1}beta >= 1";
    }

    // (d) additive smoothness with the ball/ring correction
    for (std::size_t q = 0; q < n; ++q) {
      double rq = prof.radii[q];
      auto ball_half = detail::ball(oracle, q, beta, rq / 2.0);
      double corr = 0.0;
      for (std::size_t t : ball_half) corr += (pow2z1 - 1.0) * beta * oracle.powz(t, q);
      for (std::size_t t = 0; t < n; ++t) {
        double bd = beta * oracle.powz(t, q);
        if (bd > rq / 2.0 && bd <= rq) corr += rq - bd;  // ring term
      }
      corr /= static_cast<double>(ball_half.size());
      for (std::size_t p = 0; p < n; ++p) {
        double rhs = rq + pow2z1 * beta * oracle.powz(p, q) + corr;
        dadd.record(rhs - prof.radii[p], 1e-9 * std::max(1.0, rhs));
      }
    }

    // (e) local density with gamma* = 2^{2z^2+z}
    for (std::size_t p = 0; p < n; ++p) {
      double sum = 0.0;
      for (std::size_t q : detail::ball(oracle, p, beta, gstar * prof.radii[p]))
        sum += prof.radii[q];
      edens.record(sum - lambda, 1e-9 * std::max(1.0, lambda));
    }

    // (f) r_p + sum_q x_pq * beta * d^z(p,q) <= r^(2beta)_p
    {
      RadiusProfile prof2 = radius_profile_any_beta(oracle, 2.0 * beta, lambda);
      for (std::size_t p = 0; p < n; ++p) {
        double acc = prof.radii[p];
        for (std::size_t q = 0; q < n; ++q) {
          double bd = beta * oracle.powz(p, q);
          double x = std::max(0.0, prof.radii[p] - bd) / lambda;
          acc += x * bd;
        }
        fdbl.record(prof2.radii[p] - acc, 1e-9 * std::max(1.0, prof2.radii[p]));
      }
    }
  }

  rep.checks = {residual, a, bmono, cloc, dadd, edens, fdbl};
  return rep;
}

}  // namespace mpclust
