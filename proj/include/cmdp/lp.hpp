// Copyright 2026 The cmdp-lsvi Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense two-phase primal simplex for small standard-form linear programs:
//
//     maximize  c^T x   subject to  A x = b,  x >= 0.
//
// Meant for problems with a few thousand columns at most; the full tableau
// is kept in memory.

#pragma once

#include "cmdp/linalg.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace cmdp {

struct LinearProgram {
    Matrix A;  // m x n equality constraints
    Vector b;  // m
    Vector c;  // n, maximized
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    Vector x;
    double objective = 0.0;
    double phase_one_residual = 0.0;
    long iterations = 0;
};

struct SimplexOptions {
    double pivot_tolerance = 1e-9;
    double optimality_tolerance = 1e-10;
    double feasibility_tolerance = 1e-8;
    double infeasibility_threshold = 1e-6;  // phase-one residual above this => infeasible
    long max_iterations = 1'000'000;
    long stall_limit = 50;  // degenerate pivots before switching to Bland's rule
};

namespace detail {

/**
 * Tableau with rows 0..m-1 for constraints and row m for the reduced costs of
 * the objective being maximized. Column `cols` is the right-hand side.
 */
class SimplexTableau {
  public:
    SimplexTableau(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_((rows + 1) * (cols + 1), 0.0), basis_(rows, 0) {}

    double& at(std::size_t r, std::size_t c) { return data_[r * (cols_ + 1) + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * (cols_ + 1) + c]; }
    double& rhs(std::size_t r) { return at(r, cols_); }
    double& cost(std::size_t c) { return at(rows_, c); }
    double objective() const { return at(rows_, cols_); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::vector<std::size_t>& basis() { return basis_; }

    void pivot(std::size_t pr, std::size_t pc) {
        const double inv = 1.0 / at(pr, pc);
        for (std::size_t c = 0; c <= cols_; ++c) at(pr, c) *= inv;
        at(pr, pc) = 1.0;
        for (std::size_t r = 0; r <= rows_; ++r) {
            if (r == pr) continue;
            const double f = at(r, pc);
            if (f == 0.0) continue;
            double* row = &data_[r * (cols_ + 1)];
            const double* prow = &data_[pr * (cols_ + 1)];
            for (std::size_t c = 0; c <= cols_; ++c) row[c] -= f * prow[c];
            row[pc] = 0.0;
        }
        basis_[pr] = pc;
    }

    /// Removes a constraint row (used for redundant rows after phase one).
    void drop_row(std::size_t r) {
        const std::size_t w = cols_ + 1;
        data_.erase(data_.begin() + static_cast<std::ptrdiff_t>(r * w),
                    data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * w));
        basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
        --rows_;
    }

  private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
    std::vector<std::size_t> basis_;
};

/// Maximizes the objective held in the cost row; `allowed[c]` masks columns
/// that may enter. Reduced costs are stored as c_j - z_j (enter when > 0).
inline LpStatus run_simplex(SimplexTableau& t, const std::vector<bool>& allowed,
                            const SimplexOptions& opt, long& iterations) {
    long stall = 0;
    double last_objective = -std::numeric_limits<double>::infinity();
    while (true) {
        if (iterations >= opt.max_iterations) return LpStatus::iteration_limit;
        const bool bland = stall >= opt.stall_limit;
        std::size_t enter = t.cols();
        double best = opt.optimality_tolerance;
        for (std::size_t c = 0; c < t.cols(); ++c) {
            if (!allowed[c]) continue;
            const double rc = t.cost(c);
            if (rc > best) {
                enter = c;
                if (bland) break;
                best = rc;
            }
        }
        if (enter == t.cols()) return LpStatus::optimal;

        std::size_t leave = t.rows();
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < t.rows(); ++r) {
            const double a = t.at(r, enter);
            if (a <= opt.pivot_tolerance) continue;
            const double ratio = std::max(t.rhs(r), 0.0) / a;
            if (ratio < best_ratio - 1e-12 ||
                (ratio <= best_ratio + 1e-12 && leave < t.rows() && t.basis()[r] < t.basis()[leave])) {
                best_ratio = ratio;
                leave = r;
            }
        }
        if (leave == t.rows()) return LpStatus::unbounded;
        t.pivot(leave, enter);
        ++iterations;
        const double obj = -t.objective();
        if (obj > last_objective + 1e-12) {
            stall = 0;
            last_objective = obj;
        } else {
            ++stall;
        }
    }
}

}  // namespace detail

/**
 * Two-phase simplex. Phase one minimizes the sum of artificial variables;
 * the problem is declared infeasible when that sum stays above
 * `infeasibility_threshold`. Artificials left in the basis at zero level are
 * pivoted out, or their rows dropped as redundant, before phase two.
 */
inline LpSolution solve_standard_form(const LinearProgram& lp, const SimplexOptions& opt = {}) {
    const auto m = static_cast<std::size_t>(lp.A.rows());
    const auto n = static_cast<std::size_t>(lp.A.cols());
    if (static_cast<std::size_t>(lp.b.size()) != m || static_cast<std::size_t>(lp.c.size()) != n)
        throw std::invalid_argument("solve_standard_form: inconsistent dimensions");

    detail::SimplexTableau t(m, n + m);
    for (std::size_t r = 0; r < m; ++r) {
        const double sign = lp.b[static_cast<Eigen::Index>(r)] < 0.0 ? -1.0 : 1.0;
        for (std::size_t c = 0; c < n; ++c)
            t.at(r, c) = sign * lp.A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        t.at(r, n + r) = 1.0;
        t.rhs(r) = sign * lp.b[static_cast<Eigen::Index>(r)];
        t.basis()[r] = n + r;
    }
    // Phase one: maximize -sum(artificials). Reduced costs c_j - z_j with
    // artificials basic are sum of column entries over rows.
    for (std::size_t c = 0; c < n; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < m; ++r) s += t.at(r, c);
        t.cost(c) = s;
    }
    double rhs_sum = 0.0;
    for (std::size_t r = 0; r < m; ++r) rhs_sum += t.rhs(r);
    t.at(m, n + m) = rhs_sum;  // holds -(objective) = sum of artificials

    LpSolution sol;
    std::vector<bool> allowed(n + m, true);
    const LpStatus p1 = detail::run_simplex(t, allowed, opt, sol.iterations);
    if (p1 == LpStatus::iteration_limit) {
        sol.status = p1;
        return sol;
    }
    double residual = 0.0;
    for (std::size_t r = 0; r < t.rows(); ++r)
        if (t.basis()[r] >= n) residual += std::max(t.rhs(r), 0.0);
    sol.phase_one_residual = residual;
    if (residual > opt.infeasibility_threshold) {
        sol.status = LpStatus::infeasible;
        return sol;
    }

    // Drive zero-level artificials out of the basis.
    for (std::size_t r = 0; r < t.rows();) {
        if (t.basis()[r] < n) {
            ++r;
            continue;
        }
        std::size_t col = n;
        double best = opt.pivot_tolerance;
        for (std::size_t c = 0; c < n; ++c) {
            if (std::abs(t.at(r, c)) > best) {
                best = std::abs(t.at(r, c));
                col = c;
            }
        }
        if (col < n) {
            t.pivot(r, col);
            ++r;
        } else {
            t.drop_row(r);
        }
    }

    // Phase two objective row: c_j - c_B^T B^{-1} A_j.
    for (std::size_t c = 0; c <= n + m; ++c) t.at(t.rows(), c) = 0.0;
    for (std::size_t c = 0; c < n; ++c) t.cost(c) = lp.c[static_cast<Eigen::Index>(c)];
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const double cb = lp.c[static_cast<Eigen::Index>(t.basis()[r])];
        if (cb == 0.0) continue;
        for (std::size_t c = 0; c <= n + m; ++c) t.at(t.rows(), c) -= cb * t.at(r, c);
    }
    for (std::size_t c = n; c < n + m; ++c) allowed[c] = false;

    const LpStatus p2 = detail::run_simplex(t, allowed, opt, sol.iterations);
    sol.status = p2;
    if (p2 != LpStatus::optimal) return sol;

    sol.x = Vector::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < t.rows(); ++r)
        sol.x[static_cast<Eigen::Index>(t.basis()[r])] = std::max(t.rhs(r), 0.0);
    sol.objective = lp.c.dot(sol.x);
    return sol;
}

}  // namespace cmdp
