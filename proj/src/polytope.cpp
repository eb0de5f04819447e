#include "gaugerl/polytope.hpp"

#include <cmath>

#include "gaugerl/errors.hpp"

namespace gaugerl {

HPolytope HPolytope::symmetric(const Eigen::MatrixXd& V, const Eigen::VectorXd& bar) {
    if (V.rows() != bar.size()) throw DimensionMismatch("symmetric polytope rows");
    HPolytope P;
    P.F.resize(2 * V.rows(), V.cols());
    P.F << V, -V;
    P.g.resize(2 * bar.size());
    P.g << bar, bar;
    return P;
}

HPolytope HPolytope::box(const Eigen::VectorXd& half_widths) {
    const int n = static_cast<int>(half_widths.size());
    return symmetric(Eigen::MatrixXd::Identity(n, n), half_widths);
}

HPolytope HPolytope::unit_box(int n) { return box(Eigen::VectorXd::Ones(n)); }

void HPolytope::validate_basic() const {
    if (F.rows() != g.size()) throw DimensionMismatch("polytope F/g rows");
    if (!F.allFinite() || !g.allFinite()) throw InvalidInput("polytope has non-finite entries");
    for (int i = 0; i < F.rows(); ++i)
        if (F.row(i).cwiseAbs().maxCoeff() == 0.0) throw InvalidInput("polytope has an all-zero row");
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> split_symmetric(const HPolytope& P) {
    const int r2 = P.rows();
    if (r2 % 2 != 0) throw InvalidInput("symmetric split: odd row count");
    const int r = r2 / 2;
    if ((P.F.topRows(r) + P.F.bottomRows(r)).cwiseAbs().maxCoeff() > 1e-12 ||
        (P.g.head(r) - P.g.tail(r)).cwiseAbs().maxCoeff() > 1e-12)
        throw InvalidInput("polytope is not in [V; -V] symmetric layout");
    return {P.F.topRows(r), P.g.head(r)};
}

bool contains(const HPolytope& P, const Eigen::VectorXd& x, double tol) {
    if (x.size() != P.dim()) throw DimensionMismatch("contains: point dimension");
    return ((P.F * x - P.g).array() <= tol).all();
}

bool is_cset(const HPolytope& P, const Tolerances& tols) {
    if (P.g.size() == 0) return false;
    if (P.g.minCoeff() <= tols.strict_interior) return false;
    const int n = P.dim();
    LpProblem lp;
    lp.ineq_lhs = P.F;
    lp.ineq_rhs = P.g;
    for (int j = 0; j < n; ++j) {
        for (double s : {1.0, -1.0}) {
            lp.objective = Eigen::VectorXd::Zero(n);
            lp.objective[j] = s;
            const LpSolution sol = solve_lp(lp, tols);
            if (sol.status == LpStatus::Unbounded) return false;
            if (sol.status == LpStatus::Infeasible) return false;  // cannot happen with 0 in P
        }
    }
    return true;
}

GaugeValue gauge_function(const HPolytope& Q, const Eigen::VectorXd& v) {
    if (v.size() != Q.dim()) throw DimensionMismatch("gauge: vector dimension");
    if (Q.g.size() == 0 || Q.g.minCoeff() <= 0.0) throw NotACSet("gauge requires g > 0");
    const Eigen::VectorXd ratios = (Q.F * v).cwiseQuotient(Q.g);
    GaugeValue out;
    out.active_row = 0;
    double best = ratios[0];
    for (int i = 1; i < ratios.size(); ++i) {
        if (ratios[i] > best) {
            best = ratios[i];
            out.active_row = i;
        }
    }
    out.value = best > 0.0 ? best : 0.0;
    return out;
}

Eigen::VectorXd gauge_map(const Eigen::VectorXd& v, const HPolytope& Q) {
    const double vinf = v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0;
    if (vinf > 1.0 + 1e-9) throw InvalidInput("gauge_map: |v|_inf > 1");
    if (vinf == 0.0) return Eigen::VectorXd::Zero(Q.dim());
    const GaugeValue gv = gauge_function(Q, v);
    if (gv.value <= 0.0) throw NotACSet("gauge_map: direction with zero gauge (unbounded set)");
    return (vinf / gv.value) * v;
}

Eigen::VectorXd gauge_map_general(const Eigen::VectorXd& v, const HPolytope& P, const HPolytope& Q) {
    if (v.size() != P.dim() || P.dim() != Q.dim()) throw DimensionMismatch("gauge_map_general");
    if (v.cwiseAbs().maxCoeff() == 0.0) return Eigen::VectorXd::Zero(Q.dim());
    const GaugeValue gp = gauge_function(P, v);
    const GaugeValue gq = gauge_function(Q, v);
    if (gq.value <= 0.0) throw NotACSet("gauge_map_general: zero gauge in target");
    return (gp.value / gq.value) * v;
}

namespace {

Eigen::MatrixXd jacobian_branch(const Eigen::VectorXd& v, const HPolytope& Q, int a, double sigma,
                                int active) {
    // G(v) = (sigma v_a / rho(v)) v on the selected branch, rho = F_i.v / g_i.
    const int m = static_cast<int>(v.size());
    const Eigen::VectorXd fg = Q.F.row(active).transpose() / Q.g[active];
    const double rho = fg.dot(v);
    if (rho <= 0.0) throw NotACSet("gauge jacobian: nonpositive active ratio");
    const double scale = sigma * v[a] / rho;
    Eigen::VectorXd grad_scale = -(sigma * v[a] / (rho * rho)) * fg;
    grad_scale[a] += sigma / rho;
    Eigen::MatrixXd J = scale * Eigen::MatrixXd::Identity(m, m);
    J.noalias() += v * grad_scale.transpose();
    return J;
}

}  // namespace

Eigen::MatrixXd gauge_map_jacobian(const Eigen::VectorXd& v, const HPolytope& Q) {
    if (v.size() != Q.dim()) throw DimensionMismatch("gauge_map_jacobian");
    if (Q.g.size() == 0 || Q.g.minCoeff() <= 0.0) throw NotACSet("gauge jacobian requires g > 0");
    int a = 0;
    double best = std::abs(v[0]);
    for (int j = 1; j < v.size(); ++j) {
        const double aj = std::abs(v[j]);
        if (aj > best) {
            best = aj;
            a = j;
        }
    }
    if (best == 0.0) throw ZeroInput("gauge_map_jacobian at v = 0");
    const double sigma = v[a] > 0.0 ? 1.0 : -1.0;
    const int active = gauge_function(Q, v).active_row;
    return jacobian_branch(v, Q, a, sigma, active);
}

Eigen::MatrixXd gauge_map_jacobian_at_zero(const HPolytope& Q) {
    const int m = Q.dim();
    if (Q.g.size() == 0 || Q.g.minCoeff() <= 0.0) throw NotACSet("gauge jacobian requires g > 0");
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(m);
    e0[0] = 1.0;
    const int active = gauge_function(Q, e0).active_row;
    const Eigen::VectorXd fg = Q.F.row(active).transpose() / Q.g[active];
    const double rho = fg[0];
    if (rho <= 0.0) throw NotACSet("gauge jacobian at zero: nonpositive active ratio");
    Eigen::MatrixXd J = (1.0 / rho) * Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd grad = -fg / (rho * rho);
    grad[0] += 1.0 / rho;
    J.row(0) += grad.transpose();
    return J;
}

double support(const HPolytope& P, const Eigen::VectorXd& a, const Tolerances& tols) {
    if (a.size() != P.dim()) throw DimensionMismatch("support direction");
    LpProblem lp;
    lp.objective = -a;  // solve_lp minimizes
    lp.ineq_lhs = P.F;
    lp.ineq_rhs = P.g;
    const LpSolution sol = solve_lp(lp, tols);
    if (sol.status == LpStatus::Unbounded)
        throw NumericalFailure("support: polytope unbounded in direction");
    if (sol.status == LpStatus::Infeasible) throw NumericalFailure("support: empty polytope");
    return -sol.value;
}

HPolytope translate(const HPolytope& P, const Eigen::VectorXd& c) {
    if (c.size() != P.dim()) throw DimensionMismatch("translate offset");
    return HPolytope{P.F, P.g - P.F * c};
}

HPolytope scale(const HPolytope& P, double lambda) {
    if (!(lambda > 0.0)) throw InvalidInput("scale factor must be positive");
    return HPolytope{P.F, lambda * P.g};
}

double violation(const HPolytope& P, const Eigen::VectorXd& x) {
    if (x.size() != P.dim()) throw DimensionMismatch("violation: point dimension");
    return (P.F * x - P.g).cwiseMax(0.0).sum();
}

}  // namespace gaugerl
