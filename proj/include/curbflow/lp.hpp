#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string_view>

namespace curbflow {

// min c'x  s.t.  a_eq x = b_eq,  a_ub x <= b_ub,  x >= 0.
struct LpProblem {
    Eigen::VectorXd c;
    Eigen::MatrixXd a_eq;
    Eigen::VectorXd b_eq;
    Eigen::MatrixXd a_ub;
    Eigen::VectorXd b_ub;

    std::size_t vars() const { return static_cast<std::size_t>(c.size()); }
    void validate() const;
};

enum class LpStatus { optimal, infeasible, unbounded };

std::string_view to_string(LpStatus s);

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    Eigen::VectorXd x;
    double objective = 0.0;
    Eigen::VectorXd dual_eq; // multipliers of the equality rows
    Eigen::VectorXd dual_ub; // multipliers of the inequality rows (<= 0)
    std::size_t iterations = 0;
};

struct LpOptions {
    double tol = 1e-9;
    std::size_t max_iterations = 100000;
    std::size_t refactor_every = 50;
    bool dump_tableau = false; // basis trace at debug log level
};

// Two-phase revised simplex with Bland's rule. An optimal result is checked
// for primal feasibility and dual sign before it is returned; a numerically
// singular basis raises NumericalError with a condition estimate.
LpSolution solve_lp(const LpProblem& problem, const LpOptions& options = {});

} // namespace curbflow
