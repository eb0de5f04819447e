#include "gaugerl/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "gaugerl/errors.hpp"

namespace gaugerl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotEps = 1e-9;

// Assembled row set A x <= b after folding in bounds and equality pairs.
struct RowSet {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
};

RowSet assemble_rows(const LpProblem& p) {
    const int n = p.num_vars();
    const int r_ineq = static_cast<int>(p.ineq_rhs.size());
    const int r_eq = static_cast<int>(p.eq_rhs.size());

    if (p.ineq_lhs.rows() != r_ineq || (r_ineq > 0 && p.ineq_lhs.cols() != n))
        throw DimensionMismatch("inequality block");
    if (p.eq_lhs.rows() != r_eq || (r_eq > 0 && p.eq_lhs.cols() != n))
        throw DimensionMismatch("equality block");
    if (p.lower.size() != 0 && p.lower.size() != n) throw DimensionMismatch("lower bounds");
    if (p.upper.size() != 0 && p.upper.size() != n) throw DimensionMismatch("upper bounds");
    if (!p.objective.allFinite()) throw InvalidInput("objective has non-finite entries");
    if (r_ineq > 0 && (!p.ineq_lhs.allFinite() || !p.ineq_rhs.allFinite()))
        throw InvalidInput("inequality block has non-finite entries");
    if (r_eq > 0 && (!p.eq_lhs.allFinite() || !p.eq_rhs.allFinite()))
        throw InvalidInput("equality block has non-finite entries");

    int extra = 0;
    for (int j = 0; j < p.lower.size(); ++j)
        if (p.lower[j] > -kInf) ++extra;
    for (int j = 0; j < p.upper.size(); ++j)
        if (p.upper[j] < kInf) ++extra;

    RowSet rs;
    rs.A.resize(r_ineq + 2 * r_eq + extra, n);
    rs.b.resize(rs.A.rows());
    int k = 0;
    for (int i = 0; i < r_ineq; ++i, ++k) {
        rs.A.row(k) = p.ineq_lhs.row(i);
        rs.b[k] = p.ineq_rhs[i];
    }
    for (int i = 0; i < r_eq; ++i) {
        rs.A.row(k) = p.eq_lhs.row(i);
        rs.b[k] = p.eq_rhs[i];
        ++k;
        rs.A.row(k) = -p.eq_lhs.row(i);
        rs.b[k] = -p.eq_rhs[i];
        ++k;
    }
    for (int j = 0; j < p.upper.size(); ++j) {
        if (p.upper[j] < kInf) {
            rs.A.row(k).setZero();
            rs.A(k, j) = 1.0;
            rs.b[k] = p.upper[j];
            ++k;
        }
    }
    for (int j = 0; j < p.lower.size(); ++j) {
        if (p.lower[j] > -kInf) {
            rs.A.row(k).setZero();
            rs.A(k, j) = -1.0;
            rs.b[k] = -p.lower[j];
            ++k;
        }
    }
    return rs;
}

// Tableau simplex over maximize d.z, M z = q (q >= 0), z >= 0.
// T is (rows+1) x (cols+1); last row holds reduced costs, last column rhs.
class Tableau {
public:
    Tableau(Eigen::MatrixXd T, std::vector<int> basis)
        : T_(std::move(T)), basis_(std::move(basis)) {}

    int rows() const { return static_cast<int>(T_.rows()) - 1; }
    int cols() const { return static_cast<int>(T_.cols()) - 1; }

    // Installs objective d (size cols) and re-zeroes reduced costs of basic columns.
    void set_objective(const Eigen::VectorXd& d) {
        const int R = rows();
        T_.row(R).head(cols()) = -d.transpose();
        T_(R, cols()) = 0.0;
        for (int i = 0; i < R; ++i) {
            const double coef = T_(R, basis_[i]);
            if (coef != 0.0) T_.row(R) -= coef * T_.row(i);
        }
    }

    // Columns >= limit are barred from entering (phase-2 artificial lockout).
    // Returns true when optimal, false when unbounded.
    bool run(int enter_limit, long& iters, long max_iters) {
        const int R = rows();
        const long bland_after = 50 + 10L * (R + cols());
        while (true) {
            if (iters++ > max_iters) throw NumericalFailure("simplex iteration limit");
            const bool bland = iters > bland_after;
            int enter = -1;
            double best = -kPivotEps;
            for (int j = 0; j < enter_limit; ++j) {
                const double rc = T_(R, j);
                if (rc < best) {
                    enter = j;
                    if (bland) break;
                    best = rc;
                }
                if (bland && enter >= 0) break;
            }
            if (enter < 0) return true;  // optimal

            int leave = -1;
            double best_ratio = kInf;
            for (int i = 0; i < R; ++i) {
                const double a = T_(i, enter);
                if (a > kPivotEps) {
                    const double ratio = T_(i, cols()) / a;
                    if (ratio < best_ratio - 1e-12 ||
                        (ratio < best_ratio + 1e-12 && leave >= 0 && basis_[i] < basis_[leave])) {
                        best_ratio = ratio;
                        leave = i;
                    }
                }
            }
            if (leave < 0) return false;  // unbounded
            pivot(leave, enter);
        }
    }

    void pivot(int row, int col) {
        T_.row(row) /= T_(row, col);
        for (int i = 0; i < static_cast<int>(T_.rows()); ++i) {
            if (i == row) continue;
            const double f = T_(i, col);
            if (f != 0.0) T_.row(i) -= f * T_.row(row);
        }
        basis_[row] = col;
    }

    double rhs(int i) const { return T_(i, cols()); }
    double reduced_cost(int j) const { return T_(rows(), j); }
    const std::vector<int>& basis() const { return basis_; }

    // Pivots artificial variables out of the basis where possible.
    void evict_artificials(int first_artificial) {
        for (int i = 0; i < rows(); ++i) {
            if (basis_[i] < first_artificial) continue;
            for (int j = 0; j < first_artificial; ++j) {
                if (std::abs(T_(i, j)) > kPivotEps) {
                    pivot(i, j);
                    break;
                }
            }
        }
    }

private:
    Eigen::MatrixXd T_;
    std::vector<int> basis_;
};

}  // namespace

LpSolution solve_lp(const LpProblem& p, const Tolerances& tols) {
    const int n = p.num_vars();
    if (n == 0) throw InvalidInput("LP with no variables");
    const RowSet rs = assemble_rows(p);
    const int R = static_cast<int>(rs.A.rows());

    // Standard form over z = [x+; x-; slacks; artificials].
    std::vector<int> art_rows;
    for (int i = 0; i < R; ++i)
        if (rs.b[i] < 0.0) art_rows.push_back(i);
    const int n_art = static_cast<int>(art_rows.size());
    const int n_slack = R;
    const int first_slack = 2 * n;
    const int first_art = first_slack + n_slack;
    const int C = first_art + n_art;

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(R + 1, C + 1);
    std::vector<int> basis(R, -1);
    {
        int a = 0;
        for (int i = 0; i < R; ++i) {
            const double s = rs.b[i] < 0.0 ? -1.0 : 1.0;
            T.block(i, 0, 1, n) = s * rs.A.row(i);
            T.block(i, n, 1, n) = -s * rs.A.row(i);
            T(i, first_slack + i) = s;
            T(i, C) = s * rs.b[i];
            if (s < 0.0) {
                T(i, first_art + a) = 1.0;
                basis[i] = first_art + a;
                ++a;
            } else {
                basis[i] = first_slack + i;
            }
        }
    }

    Tableau tab(std::move(T), std::move(basis));
    long iters = 0;
    const long max_iters = 1000000;

    if (n_art > 0) {
        Eigen::VectorXd d1 = Eigen::VectorXd::Zero(C);
        d1.tail(n_art).setConstant(-1.0);
        tab.set_objective(d1);
        if (!tab.run(C, iters, max_iters)) throw NumericalFailure("phase-1 unbounded");
        double art_sum = 0.0;
        for (int i = 0; i < R; ++i)
            if (tab.basis()[i] >= first_art) art_sum += tab.rhs(i);
        if (art_sum > 1e-8) return LpSolution{LpStatus::Infeasible, 0.0, Eigen::VectorXd()};
        tab.evict_artificials(first_art);
    }

    // The tableau maximizes, so install -objective to minimize.
    Eigen::VectorXd d2 = Eigen::VectorXd::Zero(C);
    d2.head(n) = -p.objective;
    d2.segment(n, n) = p.objective;
    tab.set_objective(d2);
    if (!tab.run(first_art, iters, max_iters))
        return LpSolution{LpStatus::Unbounded, -kInf, Eigen::VectorXd()};

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < R; ++i) {
        const int col = tab.basis()[i];
        if (col < n)
            x[col] += tab.rhs(i);
        else if (col < 2 * n)
            x[col - n] -= tab.rhs(i);
    }

    // Self-check: primal feasibility, dual feasibility, duality gap. The
    // dual multiplier of row i is the reduced cost of its slack column, and
    // for the maximized form y.b equals -min value at the optimum.
    const Eigen::VectorXd resid = rs.A * x - rs.b;
    if (resid.size() > 0 && resid.maxCoeff() > tols.lp_feasibility)
        throw NumericalFailure("simplex returned an infeasible point");
    double ydotb = 0.0;
    for (int i = 0; i < R; ++i) {
        const double y = tab.reduced_cost(first_slack + i);
        if (y < -tols.lp_optimality) throw NumericalFailure("dual infeasibility at optimum");
        ydotb += y * rs.b[i];
    }
    for (int j = 0; j < 2 * n; ++j)
        if (tab.reduced_cost(j) < -tols.lp_optimality)
            throw NumericalFailure("negative reduced cost at optimum");
    const double value = p.objective.dot(x);
    const double scale = 1.0 + std::abs(value) + std::abs(ydotb);
    if (std::abs(ydotb + value) > tols.lp_optimality * scale)
        throw NumericalFailure("duality gap at optimum");

    return LpSolution{LpStatus::Optimal, value, std::move(x)};
}

}  // namespace gaugerl
