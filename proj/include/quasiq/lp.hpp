#pragma once
// Dense two-phase revised simplex for small linear programs:
//
//   minimize c.x  subject to  A x = b,  x >= 0
//
// Phase 1 drives a full artificial basis to zero (declaring infeasibility if
// it cannot).  Artificials still basic at zero after phase 1 are not forced
// out by a separate pass: the phase-2 ratio test lets a parked artificial
// leave on a pivot of either sign, and artificials on redundant rows -- whose
// tableau row is zero across every original column -- simply stay parked,
// which is harmless.  Pricing is Dantzig's rule, switching to Bland's rule
// during long degenerate streaks so cycling terminates; the basis inverse is
// refactored periodically to bound drift.  Designed for the cutting-plane
// solver: few rows (one normalization row plus accumulated spectral cuts),
// up to ~10^4 columns.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace quasiq {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
  LpStatus status = LpStatus::iteration_limit;
  std::vector<double> x;  // primal solution over the original columns
  double objective = 0.0;
  std::size_t iterations = 0;
};

namespace detail {

/// Rebuild the dense inverse of the current basis matrix by Gauss-Jordan
/// elimination with partial pivoting.  Returns false (leaving binv untouched)
/// when the basis is numerically singular, so callers can fall back to the
/// incrementally updated inverse.
inline bool refactor_basis_inverse(const std::vector<std::vector<double>>& a,
                                   std::size_t n_orig,
                                   const std::vector<std::size_t>& basis,
                                   std::vector<std::vector<double>>& binv) {
  const std::size_t m = basis.size();
  std::vector<std::vector<double>> work(m, std::vector<double>(2 * m, 0.0));
  double scale = 1.0;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = basis[i];
      work[r][i] = (j < n_orig) ? a[r][j] : (j - n_orig == r ? 1.0 : 0.0);
      scale = std::max(scale, std::abs(work[r][i]));
    }
    work[r][m + r] = 1.0;
  }
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < m; ++r)
      if (std::abs(work[r][col]) > std::abs(work[piv][col])) piv = r;
    if (std::abs(work[piv][col]) < 1e-13 * scale) return false;
    std::swap(work[col], work[piv]);
    const double inv = 1.0 / work[col][col];
    for (std::size_t j = 0; j < 2 * m; ++j) work[col][j] *= inv;
    for (std::size_t r = 0; r < m; ++r) {
      if (r == col) continue;
      const double f = work[r][col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < 2 * m; ++j) work[r][j] -= f * work[col][j];
    }
  }
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t i = 0; i < m; ++i) binv[r][i] = work[r][m + i];
  return true;
}

}  // namespace detail

/// Solve min c.x s.t. A x = b, x >= 0.  Row count and column count are taken
/// from b and c; every row of a must have c.size() entries.
inline LpResult solve_lp(const std::vector<std::vector<double>>& a,
                         const std::vector<double>& b, const std::vector<double>& c,
                         std::size_t max_iterations = 0) {
  const std::size_t m = b.size();
  const std::size_t n = c.size();
  if (a.size() != m) throw std::invalid_argument("solve_lp: row count mismatch");
  for (const auto& row : a)
    if (row.size() != n) throw std::invalid_argument("solve_lp: row length mismatch");
  if (max_iterations == 0) max_iterations = 200 * (n + m + 10);

  constexpr double kPivotTol = 1e-9;
  constexpr double kCostTol = 1e-9;

  LpResult out;
  if (m == 0) {
    // No constraints: optimum is 0 at x = 0 unless some cost is negative.
    for (std::size_t j = 0; j < n; ++j)
      if (c[j] < -kCostTol) {
        out.status = LpStatus::unbounded;
        return out;
      }
    out.status = LpStatus::optimal;
    out.x.assign(n, 0.0);
    out.objective = 0.0;
    return out;
  }

  // Work on a sign-normalized copy of (A, b) so b >= 0.
  std::vector<std::vector<double>> rows(a);
  std::vector<double> rhs(b);
  for (std::size_t r = 0; r < m; ++r)
    if (rhs[r] < 0.0) {
      rhs[r] = -rhs[r];
      for (auto& v : rows[r]) v = -v;
    }
  double b_scale = 1.0;
  for (double v : rhs) b_scale = std::max(b_scale, std::abs(v));

  // Column j of the extended matrix [A | I]; artificials live at n..n+m-1.
  const auto column_entry = [&](std::size_t j, std::size_t r) -> double {
    return (j < n) ? rows[r][j] : (j - n == r ? 1.0 : 0.0);
  };

  std::vector<std::size_t> basis(m);
  std::vector<char> in_basis(n + m, 0);
  for (std::size_t r = 0; r < m; ++r) {
    basis[r] = n + r;
    in_basis[n + r] = 1;
  }
  std::vector<std::vector<double>> binv(m, std::vector<double>(m, 0.0));
  for (std::size_t r = 0; r < m; ++r) binv[r][r] = 1.0;
  std::vector<double> xb(rhs);

  const auto refresh_xb = [&]() {
    for (std::size_t r = 0; r < m; ++r) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += binv[r][i] * rhs[i];
      xb[r] = std::max(0.0, s);
    }
  };

  std::vector<double> y(m), w(m);
  std::size_t iterations = 0;
  std::size_t since_refactor = 0;

  // One simplex phase: returns true when it reached phase-optimality, false
  // on the iteration limit; sets *unbounded when a ray was found.
  const auto run_phase = [&](const std::vector<double>& cost, bool allow_artificials,
                             bool* unbounded) -> bool {
    *unbounded = false;
    std::size_t degenerate_streak = 0;
    while (true) {
      if (iterations >= max_iterations) return false;
      // y = c_B B^{-1}
      for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t r = 0; r < m; ++r) s += cost[basis[r]] * binv[r][i];
        y[i] = s;
      }
      // Pricing.
      const bool bland = degenerate_streak > 100;
      std::size_t enter = SIZE_MAX;
      double best = -kCostTol;
      const std::size_t limit = allow_artificials ? n + m : n;
      for (std::size_t j = 0; j < limit; ++j) {
        if (in_basis[j]) continue;
        double d = cost[j];
        for (std::size_t r = 0; r < m; ++r) d -= y[r] * column_entry(j, r);
        if (d < -kCostTol) {
          if (bland) {
            enter = j;
            break;
          }
          if (d < best) {
            best = d;
            enter = j;
          }
        }
      }
      if (enter == SIZE_MAX) return true;  // phase optimal

      // Direction w = B^{-1} A_enter.
      for (std::size_t r = 0; r < m; ++r) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += binv[r][i] * column_entry(enter, i);
        w[r] = s;
      }
      // Ratio test.  In phase 2 a basic artificial parked at (numerical)
      // zero may leave on a pivot of either sign; that is how leftover
      // artificials exit the basis.  Ties go to the largest pivot magnitude
      // for stability, or to the smallest basis index under Bland's rule.
      std::size_t leave = SIZE_MAX;
      double ratio = std::numeric_limits<double>::infinity();
      double leave_mag = 0.0;
      for (std::size_t r = 0; r < m; ++r) {
        double t = 0.0;
        double mag = 0.0;
        if (w[r] > kPivotTol) {
          t = std::max(0.0, xb[r]) / w[r];
          mag = w[r];
        } else if (!allow_artificials && basis[r] >= n && w[r] < -kPivotTol &&
                   xb[r] <= 1e-7 * b_scale) {
          t = 0.0;
          mag = -w[r];
        } else {
          continue;
        }
        bool take = false;
        if (leave == SIZE_MAX || t < ratio - 1e-12)
          take = true;
        else if (t < ratio + 1e-12)
          take = bland ? basis[r] < basis[leave] : mag > leave_mag;
        if (take) {
          ratio = std::min(t, ratio);
          leave = r;
          leave_mag = mag;
        }
      }
      if (leave == SIZE_MAX) {
        *unbounded = true;
        return true;
      }
      degenerate_streak = (ratio <= 1e-12) ? degenerate_streak + 1 : 0;

      // Pivot: update the inverse and the basic solution.
      const double piv = w[leave];
      for (std::size_t i = 0; i < m; ++i) binv[leave][i] /= piv;
      for (std::size_t r = 0; r < m; ++r) {
        if (r == leave || w[r] == 0.0) continue;
        const double f = w[r];
        for (std::size_t i = 0; i < m; ++i) binv[r][i] -= f * binv[leave][i];
      }
      for (std::size_t r = 0; r < m; ++r)
        if (r != leave) xb[r] = std::max(0.0, xb[r] - ratio * w[r]);
      xb[leave] = ratio;
      in_basis[basis[leave]] = 0;
      in_basis[enter] = 1;
      basis[leave] = enter;
      ++iterations;

      if (++since_refactor >= 500) {
        // Clear accumulated error; on a numerically singular basis keep the
        // incrementally updated inverse, which is what got us here.
        if (detail::refactor_basis_inverse(rows, n, basis, binv)) refresh_xb();
        since_refactor = 0;
      }
    }
  };

  // ---- Phase 1: minimize the sum of artificials.
  std::vector<double> cost1(n + m, 0.0);
  for (std::size_t j = n; j < n + m; ++j) cost1[j] = 1.0;
  bool unbounded = false;
  if (!run_phase(cost1, true, &unbounded)) {
    out.iterations = iterations;
    return out;  // iteration limit
  }
  double art_sum = 0.0;
  for (std::size_t r = 0; r < m; ++r)
    if (basis[r] >= n) art_sum += xb[r];
  if (art_sum > 1e-8 * b_scale) {
    out.status = LpStatus::infeasible;
    out.iterations = iterations;
    return out;
  }
  // Hand phase 2 a freshly factored inverse when the basis allows it.
  if (detail::refactor_basis_inverse(rows, n, basis, binv)) refresh_xb();
  since_refactor = 0;

  // ---- Phase 2: original costs; artificials are barred from entering.
  std::vector<double> cost2(n + m, 0.0);
  for (std::size_t j = 0; j < n; ++j) cost2[j] = c[j];
  if (!run_phase(cost2, false, &unbounded)) {
    out.iterations = iterations;
    return out;  // iteration limit
  }
  if (unbounded) {
    out.status = LpStatus::unbounded;
    out.iterations = iterations;
    return out;
  }

  out.status = LpStatus::optimal;
  out.x.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    if (basis[r] < n) out.x[basis[r]] = std::max(0.0, xb[r]);
  out.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) out.objective += c[j] * out.x[j];
  out.iterations = iterations;
  return out;
}

namespace detail {

/// Incremental simplex for the cutting-plane structure
///
///   minimize c.mu   s.t.  sum_i mu_i = 1,   g_r.mu - s_r = 0,   mu, s >= 0,
///
/// where cut rows arrive one at a time and columns never change otherwise.
/// A new cut row extends the basis with its own slack column (a bordered
/// update of the basis inverse, no refactorization); if the slack lands
/// negative -- the cut is violated by the current vertex -- dual simplex
/// pivots restore feasibility while keeping the reduced costs nonnegative,
/// so re-optimization after each batch of cuts costs a handful of pivots
/// instead of a cold two-phase solve.
class CutPlaneSimplex {
 public:
  CutPlaneSimplex(std::vector<double> cost, std::size_t max_rows)
      : c_(std::move(cost)), nkeys_(c_.size()), max_rows_(max_rows) {
    if (nkeys_ == 0) throw std::invalid_argument("CutPlaneSimplex: no columns");
    // Single-row bootstrap: the best key column is an optimal basis for
    // min c.mu subject to sum mu = 1 alone.
    std::size_t best = 0;
    for (std::size_t i = 1; i < nkeys_; ++i)
      if (c_[i] < c_[best]) best = i;
    basis_.push_back(best);
    in_basis_.assign(nkeys_, 0);
    in_basis_[best] = 1;
    binv_.assign(1, std::vector<double>(1, 1.0));
    xb_.assign(1, 1.0);
  }

  std::size_t rows() const { return 1 + cuts_.size(); }
  std::size_t cut_count() const { return cuts_.size(); }
  bool at_capacity() const { return rows() >= max_rows_; }

  /// Append the row g.mu - s = 0.  Returns false when the row budget is
  /// exhausted.  The current solution stays valid; call solve() afterwards.
  bool add_cut(const std::vector<double>& g) {
    if (at_capacity()) return false;
    const std::size_t m = rows();
    // Bordered inverse update: new bottom row of B^{-1} is (u^T B^{-1} | -1)
    // where u holds the new row's coefficients on the old basic columns.
    std::vector<double> u(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = basis_[i];
      u[i] = j < nkeys_ ? g[j] : 0.0;  // old slacks vanish on the new row
    }
    std::vector<double> bottom(m + 1, 0.0);
    double value = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t r = 0; r < m; ++r) s += u[r] * binv_[r][i];
      bottom[i] = s;
      value += s * rhs(i);
    }
    bottom[m] = -1.0;
    for (std::size_t r = 0; r < m; ++r) binv_[r].push_back(0.0);
    binv_.push_back(std::move(bottom));
    cuts_.push_back(g);
    const std::size_t slack = nkeys_ + cuts_.size() - 1;
    basis_.push_back(slack);
    in_basis(slack) = 1;
    xb_.push_back(value);
    return true;
  }

  /// Restore feasibility (dual simplex) and re-optimize (primal simplex).
  LpStatus solve() {
    const std::size_t cap = 400 * (rows() + 20);
    std::size_t pivots = 0;
    if (!dual_restore(&pivots, cap)) return LpStatus::infeasible;
    return primal_optimize(&pivots, cap) ? LpStatus::optimal : LpStatus::iteration_limit;
  }

  double objective() const {
    double v = 0.0;
    for (std::size_t r = 0; r < rows(); ++r)
      if (basis_[r] < nkeys_) v += c_[basis_[r]] * std::max(0.0, xb_[r]);
    return v;
  }

  /// Primal weights over the key columns.
  std::vector<double> x() const {
    std::vector<double> out(nkeys_, 0.0);
    for (std::size_t r = 0; r < rows(); ++r)
      if (basis_[r] < nkeys_) out[basis_[r]] = std::max(0.0, xb_[r]);
    return out;
  }

 private:
  static constexpr double kPivotTol = 1e-9;
  static constexpr double kCostTol = 1e-9;
  static constexpr double kFeasTol = 1e-9;

  double rhs(std::size_t r) const { return r == 0 ? 1.0 : 0.0; }
  std::size_t ncols() const { return nkeys_ + cuts_.size(); }

  double column_entry(std::size_t j, std::size_t r) const {
    if (j < nkeys_) return r == 0 ? 1.0 : cuts_[r - 1][j];
    return (j - nkeys_ == r - 1) ? -1.0 : 0.0;  // slack of cut r-1
  }

  void compute_w(std::size_t enter, std::vector<double>& w) const {
    const std::size_t m = rows();
    w.assign(m, 0.0);
    if (enter < nkeys_) {
      for (std::size_t r = 0; r < m; ++r) {
        double s = binv_[r][0];
        for (std::size_t i = 1; i < m; ++i) s += binv_[r][i] * cuts_[i - 1][enter];
        w[r] = s;
      }
    } else {
      const std::size_t rr = enter - nkeys_ + 1;
      for (std::size_t r = 0; r < m; ++r) w[r] = -binv_[r][rr];
    }
  }

  void pivot(std::size_t enter, std::size_t leave, const std::vector<double>& w,
             double ratio) {
    const std::size_t m = rows();
    const double piv = w[leave];
    for (std::size_t i = 0; i < m; ++i) binv_[leave][i] /= piv;
    for (std::size_t r = 0; r < m; ++r) {
      if (r == leave || w[r] == 0.0) continue;
      const double f = w[r];
      for (std::size_t i = 0; i < m; ++i) binv_[r][i] -= f * binv_[leave][i];
    }
    for (std::size_t r = 0; r < m; ++r)
      if (r != leave) xb_[r] -= ratio * w[r];
    xb_[leave] = ratio;
    in_basis(basis_[leave]) = 0;
    in_basis(enter) = 1;
    basis_[leave] = enter;
    if (++since_refactor_ >= 200) refactor();
  }

  char& in_basis(std::size_t j) {
    if (j >= in_basis_.size()) in_basis_.resize(j + 1, 0);
    return in_basis_[j];
  }

  void refactor() {
    since_refactor_ = 0;
    const std::size_t m = rows();
    std::vector<std::vector<double>> work(m, std::vector<double>(2 * m, 0.0));
    double scale = 1.0;
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t i = 0; i < m; ++i) {
        work[r][i] = column_entry(basis_[i], r);
        scale = std::max(scale, std::abs(work[r][i]));
      }
      work[r][m + r] = 1.0;
    }
    for (std::size_t col = 0; col < m; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < m; ++r)
        if (std::abs(work[r][col]) > std::abs(work[piv][col])) piv = r;
      if (std::abs(work[piv][col]) < 1e-13 * scale) return;  // keep incremental
      std::swap(work[col], work[piv]);
      const double inv = 1.0 / work[col][col];
      for (std::size_t j = 0; j < 2 * m; ++j) work[col][j] *= inv;
      for (std::size_t r = 0; r < m; ++r) {
        if (r == col) continue;
        const double f = work[r][col];
        if (f == 0.0) continue;
        for (std::size_t j = 0; j < 2 * m; ++j) work[r][j] -= f * work[col][j];
      }
    }
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t i = 0; i < m; ++i) binv_[r][i] = work[r][m + i];
    for (std::size_t r = 0; r < m; ++r) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += binv_[r][i] * rhs(i);
      xb_[r] = s;
    }
  }

  void compute_duals(std::vector<double>& y) const {
    const std::size_t m = rows();
    y.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t r = 0; r < m; ++r) {
        const std::size_t j = basis_[r];
        if (j < nkeys_) s += c_[j] * binv_[r][i];
      }
      y[i] = s;
    }
  }

  double reduced_cost(std::size_t j, const std::vector<double>& y) const {
    double d = j < nkeys_ ? c_[j] : 0.0;
    const std::size_t m = rows();
    if (j < nkeys_) {
      d -= y[0];
      for (std::size_t r = 1; r < m; ++r) d -= y[r] * cuts_[r - 1][j];
    } else {
      d += y[j - nkeys_ + 1];
    }
    return d;
  }

  /// Dual simplex: drive negative basic values out while keeping reduced
  /// costs nonnegative.  Returns false when a violated row admits no
  /// entering column, i.e. the row system is infeasible.
  bool dual_restore(std::size_t* pivots, std::size_t cap) {
    std::vector<double> y, w;
    while (*pivots < cap) {
      const std::size_t m = rows();
      std::size_t leave = SIZE_MAX;
      double most_neg = -kFeasTol;
      for (std::size_t r = 0; r < m; ++r)
        if (xb_[r] < most_neg) {
          most_neg = xb_[r];
          leave = r;
        }
      if (leave == SIZE_MAX) return true;  // primal feasible

      compute_duals(y);
      // Row leave of B^{-1} A over nonbasic columns, and the dual ratio test.
      std::size_t enter = SIZE_MAX;
      double best_ratio = 0.0;
      for (std::size_t j = 0; j < ncols(); ++j) {
        if (j < in_basis_.size() && in_basis_[j]) continue;
        double zj;
        if (j < nkeys_) {
          zj = binv_[leave][0];
          for (std::size_t r = 1; r < m; ++r) zj += binv_[leave][r] * cuts_[r - 1][j];
        } else {
          zj = -binv_[leave][j - nkeys_ + 1];
        }
        if (zj >= -kPivotTol) continue;
        const double d = std::max(0.0, reduced_cost(j, y));
        const double ratio = d / (-zj);
        if (enter == SIZE_MAX || ratio < best_ratio - 1e-12 ||
            (ratio < best_ratio + 1e-12 && j < enter)) {
          enter = j;
          best_ratio = ratio;
        }
      }
      if (enter == SIZE_MAX) return false;  // infeasible row system

      compute_w(enter, w);
      const double t = xb_[leave] / w[leave];  // both negative: t > 0
      pivot(enter, leave, w, t);
      ++*pivots;
    }
    return true;  // hit the cap; primal pass will report iteration-limit
  }

  bool primal_optimize(std::size_t* pivots, std::size_t cap) {
    std::vector<double> y, w;
    std::size_t degenerate_streak = 0;
    bool bland = false;
    while (*pivots < cap) {
      compute_duals(y);
      if (degenerate_streak > 100) bland = true;  // sticky anti-cycling
      std::size_t enter = SIZE_MAX;
      double best = -kCostTol;
      for (std::size_t j = 0; j < ncols(); ++j) {
        if (j < in_basis_.size() && in_basis_[j]) continue;
        const double d = reduced_cost(j, y);
        if (d < -kCostTol) {
          if (bland) {
            enter = j;
            break;
          }
          if (d < best) {
            best = d;
            enter = j;
          }
        }
      }
      if (enter == SIZE_MAX) return true;  // optimal

      compute_w(enter, w);
      const std::size_t m = rows();
      std::size_t leave = SIZE_MAX;
      double ratio = 0.0;
      double leave_mag = 0.0;
      for (std::size_t r = 0; r < m; ++r) {
        if (w[r] <= kPivotTol) continue;
        const double t = std::max(0.0, xb_[r]) / w[r];
        bool take = false;
        if (leave == SIZE_MAX || t < ratio - 1e-12)
          take = true;
        else if (t < ratio + 1e-12)
          take = bland ? basis_[r] < basis_[leave] : w[r] > leave_mag;
        if (take) {
          ratio = leave == SIZE_MAX ? t : std::min(t, ratio);
          leave = r;
          leave_mag = w[r];
        }
      }
      if (leave == SIZE_MAX)
        throw std::runtime_error("CutPlaneSimplex: unbounded on a bounded polytope");
      degenerate_streak = ratio <= 1e-12 ? degenerate_streak + 1 : 0;
      pivot(enter, leave, w, ratio);
      ++*pivots;
    }
    return false;
  }

  std::vector<double> c_;
  std::size_t nkeys_;
  std::size_t max_rows_;
  std::vector<std::vector<double>> cuts_;   // cut row coefficients over keys
  std::vector<std::size_t> basis_;          // basic column per row
  std::vector<char> in_basis_;
  std::vector<std::vector<double>> binv_;   // row-major basis inverse
  std::vector<double> xb_;                  // basic solution values
  std::size_t since_refactor_ = 0;
};

}  // namespace detail

}  // namespace quasiq
