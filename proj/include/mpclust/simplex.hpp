#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "mpclust/errors.hpp"

namespace mpclust {

// Dense two-phase tableau simplex with Bland's rule. Small by design: the
// oracles only ever feed it instances with a few hundred variables.
struct LpRow {
  std::vector<double> a;
  char rel;  // '<' (<=), '>' (>=), '=' (==)
  double rhs;
};

struct LpProblem {
  int num_vars = 0;
  std::vector<double> objective;  // minimized
  std::vector<LpRow> rows;
};

struct LpSolution {
  double value = 0.0;
  std::vector<double> x;
};

namespace detail {

inline int bland_entering(const std::vector<double>& red, int allowed_cols, double tol) {
  for (int j = 0; j < allowed_cols; ++j)
    if (red[j] < -tol) return j;
  return -1;
}

}  // namespace detail

inline LpSolution solve_lp(const LpProblem& prob, double tol = 1e-9,
                           long long max_iters = 2'000'000) {
  const int n = prob.num_vars;
  const int m = static_cast<int>(prob.rows.size());

  // Normalize to nonnegative right-hand sides.
  std::vector<LpRow> rows = prob.rows;
  for (auto& r : rows) {
    if (static_cast<int>(r.a.size()) != n) throw parameter_error("solve_lp: row width mismatch");
    if (r.rhs < 0.0) {
      for (double& v : r.a) v = -v;
      r.rhs = -r.rhs;
      if (r.rel == '<')
        r.rel = '>';
      else if (r.rel == '>')
        r.rel = '<';
    }
  }

  int num_slack = 0, num_art = 0;
  for (const auto& r : rows) {
    if (r.rel == '<' || r.rel == '>') ++num_slack;
    if (r.rel == '>' || r.rel == '=') ++num_art;
  }
  const int cols = n + num_slack + num_art;  // structural | slack/surplus | artificial
  const int art_base = n + num_slack;

  std::vector<std::vector<double>> t(m, std::vector<double>(cols + 1, 0.0));
  std::vector<int> basis(m, -1);
  {
    int s = n, a = art_base;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) t[i][j] = rows[i].a[j];
      t[i][cols] = rows[i].rhs;
      if (rows[i].rel == '<') {
        t[i][s] = 1.0;
        basis[i] = s++;
      } else if (rows[i].rel == '>') {
        t[i][s] = -1.0;
        ++s;
        t[i][a] = 1.0;
        basis[i] = a++;
      } else {
        t[i][a] = 1.0;
        basis[i] = a++;
      }
    }
  }

  auto pivot = [&](int pr, int pc) {
    double piv = t[pr][pc];
    for (int j = 0; j <= cols; ++j) t[pr][j] /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == pr) continue;
      double f = t[i][pc];
      if (f == 0.0) continue;
      for (int j = 0; j <= cols; ++j) t[i][j] -= f * t[pr][j];
    }
    basis[pr] = pc;
  };

  // Reduced costs for objective vector c over the current basis.
  auto reduced = [&](const std::vector<double>& c, std::vector<double>& red, double& value) {
    red.assign(cols, 0.0);
    value = 0.0;
    for (int j = 0; j < cols; ++j) red[j] = j < static_cast<int>(c.size()) ? c[j] : 0.0;
    for (int i = 0; i < m; ++i) {
      double cb = basis[i] < static_cast<int>(c.size()) ? c[basis[i]] : 0.0;
      if (cb == 0.0) continue;
      value += cb * t[i][cols];
      for (int j = 0; j < cols; ++j) red[j] -= cb * t[i][j];
    }
  };

  auto run = [&](const std::vector<double>& c, int allowed_cols) {
    std::vector<double> red;
    double value = 0.0;
    long long iters = 0;
    for (;;) {
      reduced(c, red, value);
      int pc = detail::bland_entering(red, allowed_cols, tol);
      if (pc < 0) return value;
      int pr = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        if (t[i][pc] > tol) {
          double ratio = t[i][cols] / t[i][pc];
          if (ratio < best - tol || (ratio < best + tol && (pr < 0 || basis[i] < basis[pr]))) {
            best = ratio;
            pr = i;
          }
        }
      }
      if (pr < 0) throw guard_error("solve_lp: unbounded");
      pivot(pr, pc);
      if (++iters > max_iters) throw guard_error("solve_lp: iteration cap exceeded");
    }
  };

  // Phase 1.
  if (num_art > 0) {
    std::vector<double> c1(cols, 0.0);
    for (int j = art_base; j < cols; ++j) c1[j] = 1.0;
    double v1 = run(c1, cols);
    if (v1 > 1e-7) throw guard_error("solve_lp: infeasible");
    // Drive remaining artificials out of the basis where possible.
    for (int i = 0; i < m; ++i) {
      if (basis[i] >= art_base) {
        int pc = -1;
        for (int j = 0; j < art_base; ++j)
          if (std::fabs(t[i][j]) > tol) {
            pc = j;
            break;
          }
        if (pc >= 0) pivot(i, pc);
        // else: redundant row; the artificial stays basic at value 0 and is
        // never allowed to re-enter below.
      }
    }
  }

  // Phase 2 (artificial columns excluded from entering).
  std::vector<double> c2(prob.objective);
  c2.resize(cols, 0.0);
  double v2 = run(c2, art_base);

  LpSolution sol;
  sol.value = v2;
  sol.x.assign(n, 0.0);
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) sol.x[basis[i]] = t[i][cols];
  return sol;
}

}  // namespace mpclust
