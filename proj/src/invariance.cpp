#include "gaugerl/invariance.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>

#include "gaugerl/errors.hpp"
#include "gaugerl/lp.hpp"

namespace gaugerl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void SafetySystem::validate(const Tolerances& tols) const {
    if (A.rows() != A.cols()) throw DimensionMismatch("A must be square");
    if (B.rows() != A.rows()) throw DimensionMismatch("B row count must match A");
    if (E.rows() != A.rows()) throw DimensionMismatch("E row count must match A");
    if (U.dim() != m()) throw DimensionMismatch("U dimension must match B columns");
    if (D.dim() != p()) throw DimensionMismatch("D dimension must match E columns");
    if (X.dim() != n()) throw DimensionMismatch("X dimension must match A");
    if (!A.allFinite() || !B.allFinite() || !E.allFinite())
        throw InvalidInput("system matrices must be finite");
    if (!is_cset(U, tols)) throw NotACSet("U is not a C-set");
    if (!is_cset(D, tols)) throw NotACSet("D is not a C-set");
    if (!is_cset(X, tols)) throw NotACSet("X is not a C-set");
}

std::pair<VectorXd, VectorXd> tighten(const RciCertificate& cert, const SafetySystem& sys,
                                      const Tolerances& tols) {
    const int r = cert.r();
    VectorXd lo(r), hi(r);
    for (int i = 0; i < r; ++i) {
        const VectorXd a = sys.E.transpose() * cert.Vs.row(i).transpose();
        hi[i] = support(sys.D, a, tols);
        lo[i] = -support(sys.D, -a, tols);
    }
    return {lo, hi};
}

RciCertificate make_certificate(const SafetySystem& sys, const MatrixXd& Vs,
                                const VectorXd& s_bar, const MatrixXd& K,
                                const Tolerances& tols) {
    if (Vs.cols() != sys.n()) throw DimensionMismatch("Vs column count must match state dimension");
    if (s_bar.size() != Vs.rows()) throw DimensionMismatch("s_bar length must match Vs rows");
    if (K.rows() != sys.m() || K.cols() != sys.n())
        throw DimensionMismatch("K must be m x n");
    if (s_bar.size() == 0 || s_bar.minCoeff() <= 0.0)
        throw NotACSet("certificate offsets must be strictly positive");
    RciCertificate cert;
    cert.Vs = Vs;
    cert.s_bar = s_bar;
    cert.K = K;
    std::tie(cert.tighten_lo, cert.tighten_hi) = tighten(cert, sys, tols);
    return cert;
}

HPolytope safe_action_set(const RciCertificate& cert, const SafetySystem& sys,
                          const VectorXd& x, const Tolerances&) {
    if (x.size() != sys.n()) throw DimensionMismatch("state dimension mismatch");
    const int r = cert.r();
    const int m = sys.m();
    const MatrixXd VsB = cert.Vs * sys.B;
    const VectorXd VsAx = cert.Vs * (sys.A * x);

    HPolytope omega;
    omega.F.resize(sys.U.rows() + 2 * r, m);
    omega.g.resize(sys.U.rows() + 2 * r);
    omega.F.topRows(sys.U.rows()) = sys.U.F;
    omega.g.head(sys.U.rows()) = sys.U.g;
    omega.F.middleRows(sys.U.rows(), r) = VsB;
    omega.g.segment(sys.U.rows(), r) = cert.s_bar - cert.tighten_hi - VsAx;
    omega.F.bottomRows(r) = -VsB;
    omega.g.tail(r) = cert.s_bar + cert.tighten_lo + VsAx;
    return omega;
}

HPolytope shifted_safe_action_set(const RciCertificate& cert, const SafetySystem& sys,
                                  const VectorXd& x, const Tolerances& tols) {
    return translate(safe_action_set(cert, sys, x, tols), cert.K * x);
}

VerificationReport verify_certificate(const RciCertificate& cert, const SafetySystem& sys,
                                      const Tolerances& tols, ExecMode mode) {
    sys.validate(tols);
    if (cert.Vs.cols() != sys.n() || cert.K.rows() != sys.m() || cert.K.cols() != sys.n())
        throw DimensionMismatch("certificate dimensions do not match system");
    if (cert.tighten_lo.size() != cert.r() || cert.tighten_hi.size() != cert.r())
        throw DimensionMismatch("tightening vectors must match certificate rows");

    const HPolytope S = cert.S();
    const MatrixXd Acl = sys.A + sys.B * cert.K;
    const int inv_rows = S.rows();
    const int saf_rows = sys.X.rows();
    const int ctl_rows = sys.U.rows();
    const int total = inv_rows + saf_rows + ctl_rows;

    VerificationReport rep;
    rep.rows.resize(total);
    std::vector<std::string> errors(total);

    for_each_index(mode, total, [&](int idx) {
        try {
            CheckRow row;
            if (idx < inv_rows) {
                const VectorXd f = S.F.row(idx).transpose();
                const double reach = support(S, Acl.transpose() * f, tols);
                const double dist = support(sys.D, sys.E.transpose() * f, tols);
                row.check = "invariance";
                row.row = idx;
                row.slack = S.g[idx] - reach - dist;
            } else if (idx < inv_rows + saf_rows) {
                const int j = idx - inv_rows;
                const VectorXd f = sys.X.F.row(j).transpose();
                row.check = "safety";
                row.row = j;
                row.slack = sys.X.g[j] - support(S, f, tols);
            } else {
                const int k = idx - inv_rows - saf_rows;
                const VectorXd h = sys.U.F.row(k).transpose();
                row.check = "control";
                row.row = k;
                row.slack = sys.U.g[k] - support(S, cert.K.transpose() * h, tols);
            }
            rep.rows[idx] = row;
        } catch (const std::exception& e) {
            errors[idx] = e.what();
        }
    });

    for (int i = 0; i < total; ++i)
        if (!errors[i].empty())
            throw NumericalFailure("certificate check row " + std::to_string(i) + ": " + errors[i]);

    rep.min_slack = std::numeric_limits<double>::infinity();
    for (const auto& row : rep.rows) rep.min_slack = std::min(rep.min_slack, row.slack);
    rep.valid = rep.min_slack >= -tols.invariance;
    return rep;
}

namespace {

// Half-row representation of a symmetric polytope {|rows_i . x| <= offs_i}.
struct HalfRows {
    std::vector<VectorXd> rows;
    std::vector<double> offs;

    HPolytope expand() const {
        const int r = static_cast<int>(rows.size());
        const int n = static_cast<int>(rows.front().size());
        HPolytope P;
        P.F.resize(2 * r, n);
        P.g.resize(2 * r);
        for (int i = 0; i < r; ++i) {
            P.F.row(i) = rows[i].transpose();
            P.F.row(r + i) = -rows[i].transpose();
            P.g[i] = offs[i];
            P.g[r + i] = offs[i];
        }
        return P;
    }
};

// Normalizes to unit inf-norm; returns false for a (near-)zero row, which is
// vacuous when its offset is positive.
bool normalize_row(VectorXd& v, double& c) {
    const double scale = v.lpNorm<Eigen::Infinity>();
    if (scale < 1e-14) {
        if (c < 0.0) throw EmptyInterior("zero row with negative offset");
        return false;
    }
    v /= scale;
    c /= scale;
    return true;
}

bool same_direction(const VectorXd& a, const VectorXd& b) {
    return (a - b).lpNorm<Eigen::Infinity>() < 1e-9 || (a + b).lpNorm<Eigen::Infinity>() < 1e-9;
}

// Adds a normalized row unless a matching direction already exists, in which
// case the tighter offset wins.
void absorb_row(HalfRows& hr, const VectorXd& v, double c) {
    for (size_t i = 0; i < hr.rows.size(); ++i) {
        if (same_direction(hr.rows[i], v)) {
            hr.offs[i] = std::min(hr.offs[i], c);
            return;
        }
    }
    hr.rows.push_back(v);
    hr.offs.push_back(c);
}

// Drops rows implied by the others. A row is redundant when maximizing it
// over the remaining rows stays within its own offset.
void prune_redundant(HalfRows& hr, const Tolerances& tols) {
    for (size_t i = 0; i < hr.rows.size();) {
        if (hr.rows.size() <= 1) break;
        HalfRows rest;
        for (size_t j = 0; j < hr.rows.size(); ++j) {
            if (j == i) continue;
            rest.rows.push_back(hr.rows[j]);
            rest.offs.push_back(hr.offs[j]);
        }
        bool redundant = false;
        try {
            redundant = support(rest.expand(), hr.rows[i], tols) <= hr.offs[i] + 1e-10;
        } catch (const NumericalFailure&) {
            redundant = false;  // unbounded without this row: keep it
        }
        if (redundant) {
            hr.rows.erase(hr.rows.begin() + static_cast<long>(i));
            hr.offs.erase(hr.offs.begin() + static_cast<long>(i));
        } else {
            ++i;
        }
    }
}

}  // namespace

HPolytope max_rpi_for_gain(const SafetySystem& sys, const MatrixXd& K, int max_iter,
                           double tol, const Tolerances& tols) {
    sys.validate(tols);
    if (K.rows() != sys.m() || K.cols() != sys.n()) throw DimensionMismatch("K must be m x n");
    const MatrixXd Acl = sys.A + sys.B * K;
    if (spectral_radius(Acl) >= 1.0 - 1e-12)
        throw NotConverged("closed loop is not Schur stable");

    const auto [Vx, xbar] = split_symmetric(sys.X);
    const auto [Vu, ubar] = split_symmetric(sys.U);
    split_symmetric(sys.D);  // symmetry required for the half-row iteration

    HalfRows hr;
    for (int i = 0; i < Vx.rows(); ++i) {
        VectorXd v = Vx.row(i).transpose();
        double c = xbar[i];
        if (normalize_row(v, c)) absorb_row(hr, v, c);
    }
    const MatrixXd VuK = Vu * K;
    for (int i = 0; i < VuK.rows(); ++i) {
        VectorXd v = VuK.row(i).transpose();
        double c = ubar[i];
        if (normalize_row(v, c)) absorb_row(hr, v, c);
    }
    if (hr.rows.empty()) throw InvalidInput("state constraints produced no rows");
    for (double c : hr.offs)
        if (c <= tols.strict_interior) throw EmptyInterior("initial set has empty interior");

    for (int iter = 0; iter < max_iter; ++iter) {
        const HPolytope S = hr.expand();
        std::vector<VectorXd> new_rows;
        std::vector<double> new_offs;
        for (size_t i = 0; i < hr.rows.size(); ++i) {
            VectorXd v = Acl.transpose() * hr.rows[i];
            double c = hr.offs[i] - support(sys.D, sys.E.transpose() * hr.rows[i], tols);
            if (!normalize_row(v, c)) continue;
            if (c <= tols.strict_interior)
                throw EmptyInterior("disturbance tightening emptied the set");
            if (support(S, v, tols) <= c + tol) continue;
            new_rows.push_back(v);
            new_offs.push_back(c);
        }
        if (new_rows.empty()) {
            prune_redundant(hr, tols);
            return hr.expand();
        }
        for (size_t i = 0; i < new_rows.size(); ++i) absorb_row(hr, new_rows[i], new_offs[i]);
        prune_redundant(hr, tols);
    }
    throw NotConverged("invariant set iteration did not reach a fixed point");
}

double inscribed_inf_ball_radius(const HPolytope& P, const Tolerances& tols) {
    P.validate_basic();
    const int n = P.dim();
    const int r = P.rows();
    // Variables (center, radius); maximize radius subject to
    // F center + radius * ||F_i||_1 <= g rowwise.
    LpProblem prob;
    prob.objective = VectorXd::Zero(n + 1);
    prob.objective[n] = -1.0;
    prob.ineq_lhs.resize(r, n + 1);
    prob.ineq_lhs.leftCols(n) = P.F;
    for (int i = 0; i < r; ++i) prob.ineq_lhs(i, n) = P.F.row(i).lpNorm<1>();
    prob.ineq_rhs = P.g;
    prob.lower = VectorXd::Constant(n + 1, -std::numeric_limits<double>::infinity());
    prob.lower[n] = 0.0;
    prob.upper = VectorXd::Constant(n + 1, std::numeric_limits<double>::infinity());
    const LpSolution sol = solve_lp(prob, tols);
    if (sol.status == LpStatus::Infeasible) throw EmptyInterior("polytope is empty");
    if (sol.status == LpStatus::Unbounded)
        throw NumericalFailure("inscribed ball radius is unbounded");
    return sol.point[n];
}

RciCertificate gain_search(const SafetySystem& sys, const std::vector<MatrixXd>& candidates,
                           int max_iter, double tol, const Tolerances& tols) {
    sys.validate(tols);
    if (candidates.empty()) throw InvalidInput("no candidate gains supplied");

    bool found = false;
    RciCertificate best;
    double best_score = -std::numeric_limits<double>::infinity();
    std::ostringstream failures;

    for (size_t idx = 0; idx < candidates.size(); ++idx) {
        try {
            const HPolytope S = max_rpi_for_gain(sys, candidates[idx], max_iter, tol, tols);
            const auto [Vs, s_bar] = split_symmetric(S);
            RciCertificate cert = make_certificate(sys, Vs, s_bar, candidates[idx], tols);
            const VerificationReport rep = verify_certificate(cert, sys, tols, ExecMode::Serial);
            if (!rep.valid) {
                failures << "candidate " << idx << ": verification slack " << rep.min_slack << "; ";
                continue;
            }
            const double score = inscribed_inf_ball_radius(S, tols);
            if (score > best_score) {
                best_score = score;
                best = cert;
                found = true;
            }
        } catch (const Error& e) {
            failures << "candidate " << idx << ": " << e.what() << "; ";
        }
    }
    if (!found) throw NoValidGain("no candidate gain admits a certificate: " + failures.str());
    return best;
}

MatrixXd dare_gain(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R,
                   double discount) {
    const int n = static_cast<int>(A.rows());
    const int m = static_cast<int>(B.cols());
    if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != m ||
        R.cols() != m)
        throw DimensionMismatch("dare_gain matrix dimensions inconsistent");
    if (discount <= 0.0 || discount > 1.0) throw InvalidInput("discount must be in (0, 1]");

    MatrixXd P = Q;
    const int max_iter = 10000;
    for (int it = 0; it < max_iter; ++it) {
        const MatrixXd BtP = B.transpose() * P;
        const MatrixXd Gm = R + discount * BtP * B;
        const Eigen::LDLT<MatrixXd> ldlt(Gm);
        if (ldlt.info() != Eigen::Success) return MatrixXd();
        const MatrixXd Kt = ldlt.solve(discount * BtP * A);  // -K
        const MatrixXd Pn =
            Q + discount * A.transpose() * P * A - discount * A.transpose() * BtP.transpose() * Kt;
        if (!Pn.allFinite()) return MatrixXd();
        const double diff = (Pn - P).lpNorm<Eigen::Infinity>();
        P = Pn;
        if (diff <= 1e-12 * std::max(1.0, P.lpNorm<Eigen::Infinity>())) {
            const MatrixXd BtP2 = B.transpose() * P;
            const Eigen::LDLT<MatrixXd> ldlt2(R + discount * BtP2 * B);
            if (ldlt2.info() != Eigen::Success) return MatrixXd();
            return -ldlt2.solve(discount * BtP2 * A);
        }
    }
    return MatrixXd();
}

double spectral_radius(const MatrixXd& M) {
    if (M.rows() != M.cols()) throw DimensionMismatch("spectral radius needs a square matrix");
    const Eigen::EigenSolver<MatrixXd> es(M, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace gaugerl
