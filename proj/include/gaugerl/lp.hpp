#pragma once

#include <Eigen/Dense>

#include "gaugerl/tolerances.hpp"

namespace gaugerl {

/// Dense linear program: maximize objective . x subject to
///   ineq_lhs * x <= ineq_rhs,
///   eq_lhs * x == eq_rhs        (optional, zero rows when absent),
///   lower <= x <= upper         (optional, size 0 or n; +-inf entries allowed).
struct LpProblem {
    Eigen::VectorXd objective;
    Eigen::MatrixXd ineq_lhs;
    Eigen::VectorXd ineq_rhs;
    Eigen::MatrixXd eq_lhs;
    Eigen::VectorXd eq_rhs;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    int num_vars() const { return static_cast<int>(objective.size()); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    double value = 0.0;
    Eigen::VectorXd point;
};

/// Two-phase dense simplex. Optimal results are self-checked: the returned
/// point is primal feasible within tols.lp_feasibility and the duality gap /
/// KKT residual is within tols.lp_optimality, otherwise NumericalFailure is
/// thrown rather than returning a wrong Optimal.
LpSolution solve_lp(const LpProblem& p, const Tolerances& tols = default_tols());

}  // namespace gaugerl
