// Copyright 2026 The objectiveqm Authors
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

/**
 * @file    lp_feasibility.hpp
 * @brief   Dense phase-1 simplex for {x ≥ 0 : Ax = b}.
 *
 * Bland's rule for both the entering and the leaving variable, so the method
 * terminates on degenerate problems. Sizes of interest are a few dozen rows
 * and a few hundred columns.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "objectiveqm/error.hpp"

namespace objectiveqm {

struct FeasibilityProblem {
    std::size_t variables = 0;
    std::vector<std::vector<double>> rows;  // equality constraint coefficients
    std::vector<double> rhs;

    void add_row(std::vector<double> coefficients, double value) {
        rows.push_back(std::move(coefficients));
        rhs.push_back(value);
    }
};

enum class LpStatus { Feasible, Infeasible };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;          // feasible point when status == Feasible
    double phase1_objective = 0.0;  // sum of artificial variables at the phase-1 optimum
    std::size_t pivots = 0;

    bool feasible() const noexcept {
        return status == LpStatus::Feasible;
    }
};

struct LpTolerances {
    double pivot = 1e-10;
    double feasibility = 1e-9;
    double infeasibility = 1e-7;  // phase-1 objectives in (feasibility, infeasibility] are ambiguous
};

/// |Ax - b|∞.
inline double residual_inf_norm(const FeasibilityProblem &problem, const std::vector<double> &x) {
    double worst = 0.0;
    for (std::size_t i = 0; i < problem.rows.size(); ++i) {
        double s = -problem.rhs[i];
        for (std::size_t j = 0; j < problem.variables; ++j) {
            s += problem.rows[i][j] * x[j];
        }
        worst = std::max(worst, std::abs(s));
    }
    return worst;
}

inline LpResult lp_feasibility(const FeasibilityProblem &problem, const LpTolerances &tol = {}) {
    const std::size_t m = problem.rows.size();
    const std::size_t n = problem.variables;
    require(problem.rhs.size() == m, ErrorKind::InvalidInput, "right-hand side length differs from row count");
    for (std::size_t i = 0; i < m; ++i) {
        require(problem.rows[i].size() == n, ErrorKind::InvalidInput, "constraint row length differs from variable count");
        require(std::isfinite(problem.rhs[i]), ErrorKind::InvalidInput, "non-finite right-hand side");
        for (double a : problem.rows[i]) {
            require(std::isfinite(a), ErrorKind::InvalidInput, "non-finite constraint coefficient");
        }
    }

    LpResult result;
    if (m == 0) {
        result.status = LpStatus::Feasible;
        result.x.assign(n, 0.0);
        return result;
    }

    // Tableau [A | I | b] with rows sign-normalized so that b ≥ 0; artificials start basic.
    const std::size_t cols = n + m + 1;
    const std::size_t rhs_col = n + m;
    std::vector<double> t(m * cols, 0.0);
    auto at = [&](std::size_t i, std::size_t j) -> double & { return t[i * cols + j]; };
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double sign = problem.rhs[i] < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            at(i, j) = sign * problem.rows[i][j];
        }
        at(i, n + i) = 1.0;
        at(i, rhs_col) = sign * problem.rhs[i];
        basis[i] = n + i;
    }
    // Reduced costs of the phase-1 objective (sum of artificials).
    std::vector<double> cost(cols, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            cost[j] -= at(i, j);
        }
        cost[rhs_col] -= at(i, rhs_col);
    }

    const std::size_t max_pivots = 100 * (n + m) + 1000;
    while (true) {
        std::size_t enter = cols;
        for (std::size_t j = 0; j < n + m; ++j) {
            if (cost[j] < -tol.pivot) {
                enter = j;
                break;
            }
        }
        if (enter == cols) {
            break;
        }
        std::size_t leave = m;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
            const double a = at(i, enter);
            if (a <= tol.pivot) {
                continue;
            }
            const double ratio = at(i, rhs_col) / a;
            if (ratio < best_ratio - 1e-15 ||
                (std::abs(ratio - best_ratio) <= 1e-15 && leave < m && basis[i] < basis[leave])) {
                best_ratio = ratio;
                leave = i;
            }
        }
        // Phase-1 objective is bounded below by 0, so an unbounded direction cannot occur.
        require(leave < m, ErrorKind::InvariantViolation, "phase-1 simplex found an unbounded direction");

        const double pivot = at(leave, enter);
        for (std::size_t j = 0; j < cols; ++j) {
            at(leave, j) /= pivot;
        }
        for (std::size_t i = 0; i < m; ++i) {
            if (i == leave) {
                continue;
            }
            const double f = at(i, enter);
            if (f == 0.0) {
                continue;
            }
            for (std::size_t j = 0; j < cols; ++j) {
                at(i, j) -= f * at(leave, j);
            }
            at(i, enter) = 0.0;
        }
        const double f = cost[enter];
        for (std::size_t j = 0; j < cols; ++j) {
            cost[j] -= f * at(leave, j);
        }
        cost[enter] = 0.0;
        basis[leave] = enter;
        require(++result.pivots <= max_pivots, ErrorKind::NumericallyAmbiguous, "simplex pivot limit exceeded");
    }

    result.phase1_objective = std::max(0.0, -cost[rhs_col]);
    if (result.phase1_objective > tol.infeasibility) {
        result.status = LpStatus::Infeasible;
        return result;
    }
    if (result.phase1_objective > tol.feasibility) {
        fail(ErrorKind::NumericallyAmbiguous,
             "phase-1 objective " + std::to_string(result.phase1_objective) + " is between the tolerances");
    }
    result.x.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        if (basis[i] < n) {
            result.x[basis[i]] = std::max(0.0, at(i, rhs_col));
        }
    }
    const double residual = residual_inf_norm(problem, result.x);
    require(residual <= tol.feasibility, ErrorKind::NumericallyAmbiguous,
            "feasible basis has residual " + std::to_string(residual));
    result.status = LpStatus::Feasible;
    return result;
}

}  // namespace objectiveqm
