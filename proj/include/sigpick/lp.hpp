#pragma once

// Dense two-phase simplex for the small feasibility/optimisation problems that
// show up in triangulation validation and in the test oracles.
//
//   maximize c.x  subject to  A x = b,  x >= 0

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "sigpick/linalg.hpp"

namespace sigpick::lp {

enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Result {
  Status status = Status::infeasible;
  double value = 0.0;
  Vec x;
};

namespace detail {

class Tableau {
 public:
  Tableau(Matrix a, Vec b, std::vector<std::size_t> basis)
      : a_(std::move(a)), b_(std::move(b)), basis_(std::move(basis)) {}

  // Runs the simplex on objective `c` (one entry per column). `allowed`
  // marks the columns that may enter the basis.
  Status run(const Vec& c, const std::vector<char>& allowed, double tol, std::size_t max_iter) {
    const std::size_t m = a_.rows();
    const std::size_t n = a_.cols();
    std::size_t stall = 0;
    double last = objective(c);
    for (std::size_t it = 0; it < max_iter; ++it) {
      // Duals y = c_B B^{-1} are implicit: the tableau is kept in canonical
      // form, so reduced cost is c_j - sum_i c_{B_i} a_ij.
      const bool bland = stall > 50;
      std::size_t enter = n;
      double best = tol;
      for (std::size_t j = 0; j < n; ++j) {
        if (!allowed[j] || is_basic_[j]) continue;
        double rc = c[j];
        for (std::size_t i = 0; i < m; ++i) rc -= c[basis_[i]] * a_(i, j);
        if (rc > best) {
          best = rc;
          enter = j;
          if (bland) break;
        }
      }
      if (enter == n) return Status::optimal;
      std::size_t leave = m;
      double ratio = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m; ++i) {
        const double aij = a_(i, enter);
        if (aij > tol) {
          const double r = b_[i] / aij;
          if (r < ratio - 1e-15 || (r <= ratio + 1e-15 && leave < m && basis_[i] < basis_[leave])) {
            ratio = r;
            leave = i;
          }
        }
      }
      if (leave == m) return Status::unbounded;
      pivot(leave, enter);
      const double now = objective(c);
      stall = (now > last + tol) ? 0 : stall + 1;
      last = now;
    }
    return Status::iteration_limit;
  }

  void pivot(std::size_t row, std::size_t col) {
    const std::size_t m = a_.rows();
    const std::size_t n = a_.cols();
    const double p = a_(row, col);
    for (std::size_t j = 0; j < n; ++j) a_(row, j) /= p;
    b_[row] /= p;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == row) continue;
      const double f = a_(i, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) a_(i, j) -= f * a_(row, j);
      b_[i] -= f * b_[row];
      if (std::abs(b_[i]) < 1e-15) b_[i] = 0.0;
    }
    is_basic_[basis_[row]] = 0;
    basis_[row] = col;
    is_basic_[col] = 1;
  }

  void init_flags() {
    is_basic_.assign(a_.cols(), 0);
    for (std::size_t j : basis_) is_basic_[j] = 1;
  }

  double objective(const Vec& c) const {
    double s = 0.0;
    for (std::size_t i = 0; i < basis_.size(); ++i) s += c[basis_[i]] * b_[i];
    return s;
  }

  Matrix& a() { return a_; }
  Vec& b() { return b_; }
  std::vector<std::size_t>& basis() { return basis_; }

 private:
  Matrix a_;
  Vec b_;
  std::vector<std::size_t> basis_;
  std::vector<char> is_basic_;
};

inline Result extract(Tableau& t, const Vec& c, std::size_t n, Status s) {
  Result r;
  r.status = s;
  r.x.assign(n, 0.0);
  for (std::size_t i = 0; i < t.basis().size(); ++i)
    if (t.basis()[i] < n) r.x[t.basis()[i]] = t.b()[i];
  r.value = 0.0;
  for (std::size_t j = 0; j < n; ++j) r.value += c[j] * r.x[j];
  return r;
}

}  // namespace detail

/// Solves the LP. When `start_basis` is given it must index a feasible basis
/// of A (B^{-1} b >= 0); phase one is then skipped.
inline Result maximize(const Vec& c, const Matrix& a, const Vec& b,
                       std::optional<std::vector<std::size_t>> start_basis = std::nullopt,
                       double tol = 1e-11, std::size_t max_iter = 100000) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();

  if (start_basis) {
    Matrix basis_mat(m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < m; ++k) basis_mat(i, k) = a(i, (*start_basis)[k]);
    auto inv = inverse(basis_mat);
    if (inv) {
      Matrix ta(m, n);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < m; ++k) {
          const double f = (*inv)(i, k);
          if (f == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) ta(i, j) += f * a(k, j);
        }
      Vec tb = (*inv) * b;
      bool feasible = true;
      for (double v : tb) feasible = feasible && v >= -tol;
      if (feasible) {
        for (double& v : tb) v = std::max(v, 0.0);
        detail::Tableau t(std::move(ta), std::move(tb), *start_basis);
        t.init_flags();
        std::vector<char> allowed(n, 1);
        const Status s = t.run(c, allowed, tol, max_iter);
        return detail::extract(t, c, n, s);
      }
    }
  }

  // Phase one: artificial variable per row.
  Matrix ta(m, n + m);
  Vec tb = b;
  for (std::size_t i = 0; i < m; ++i) {
    const double sign = b[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) ta(i, j) = sign * a(i, j);
    ta(i, n + i) = 1.0;
    tb[i] *= sign;
  }
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) basis[i] = n + i;
  detail::Tableau t(std::move(ta), std::move(tb), std::move(basis));
  t.init_flags();

  Vec phase1(n + m, 0.0);
  for (std::size_t i = 0; i < m; ++i) phase1[n + i] = -1.0;
  std::vector<char> allowed(n + m, 1);
  Status s = t.run(phase1, allowed, tol, max_iter);
  if (s == Status::iteration_limit) return Result{s, 0.0, {}};
  if (t.objective(phase1) < -1e-9) return Result{Status::infeasible, 0.0, {}};

  // Drive artificials out of the basis where possible; rows where that is
  // impossible are redundant and their artificial stays pinned at zero.
  for (std::size_t i = 0; i < m; ++i) {
    if (t.basis()[i] < n) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(t.a()(i, j)) > 1e-9) {
        bool basic = false;
        for (std::size_t k : t.basis()) basic = basic || k == j;
        if (!basic) {
          t.pivot(i, j);
          break;
        }
      }
    }
  }
  for (std::size_t j = n; j < n + m; ++j) allowed[j] = 0;
  Vec phase2(n + m, 0.0);
  for (std::size_t j = 0; j < n; ++j) phase2[j] = c[j];
  s = t.run(phase2, allowed, tol, max_iter);
  return detail::extract(t, c, n, s);
}

}  // namespace sigpick::lp
