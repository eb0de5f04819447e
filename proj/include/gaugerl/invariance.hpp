#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "gaugerl/parallel.hpp"
#include "gaugerl/polytope.hpp"
#include "gaugerl/tolerances.hpp"

namespace gaugerl {

/// x+ = A x + B u + E d with u in U, d in D and state constraints X.
struct SafetySystem {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd E;
    HPolytope U;
    HPolytope D;
    HPolytope X;

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
    int p() const { return static_cast<int>(E.cols()); }

    /// Dimension consistency plus boundedness of U, D, X and 0 in D.
    void validate(const Tolerances& tols = default_tols()) const;
};

/// A symmetric invariant polytope S = {-s_bar <= Vs x <= s_bar} with its
/// linear gain K and the per-row disturbance tightenings over D.
struct RciCertificate {
    Eigen::MatrixXd Vs;         // r x n
    Eigen::VectorXd s_bar;      // r, > 0
    Eigen::MatrixXd K;          // m x n
    Eigen::VectorXd tighten_lo; // r, min_d Vs_i . E d
    Eigen::VectorXd tighten_hi; // r, max_d Vs_i . E d

    int r() const { return static_cast<int>(Vs.rows()); }
    HPolytope S() const { return HPolytope::symmetric(Vs, s_bar); }
};

/// Per-row extrema of Vs_i . E d over D: (tighten_lo, tighten_hi).
std::pair<Eigen::VectorXd, Eigen::VectorXd> tighten(const RciCertificate& cert,
                                                    const SafetySystem& sys,
                                                    const Tolerances& tols = default_tols());

/// Builds a certificate from (Vs, s_bar, K), computing the tightenings.
RciCertificate make_certificate(const SafetySystem& sys, const Eigen::MatrixXd& Vs,
                                const Eigen::VectorXd& s_bar, const Eigen::MatrixXd& K,
                                const Tolerances& tols = default_tols());

/// Safe action set at x: inputs that keep the successor state in S for every
/// disturbance in D. Rows are [U; +Vs B; -Vs B] with tightened offsets.
HPolytope safe_action_set(const RciCertificate& cert, const SafetySystem& sys,
                          const Eigen::VectorXd& x, const Tolerances& tols = default_tols());

/// The safe action set recentered on the linear policy's action Kx.
HPolytope shifted_safe_action_set(const RciCertificate& cert, const SafetySystem& sys,
                                  const Eigen::VectorXd& x, const Tolerances& tols = default_tols());

struct CheckRow {
    std::string check;  // "invariance" | "safety" | "control"
    int row = 0;
    double slack = 0.0;  // rhs minus worst-case lhs; valid iff >= -tols.invariance
};

struct VerificationReport {
    bool valid = false;
    double min_slack = 0.0;
    std::vector<CheckRow> rows;
};

/// Checks (A+BK)S (+) ED subset S, S subset X, KS subset U by per-row
/// support-function LPs. Rows are independent; Parallel mode fans them out.
VerificationReport verify_certificate(const RciCertificate& cert, const SafetySystem& sys,
                                      const Tolerances& tols = default_tols(),
                                      ExecMode mode = ExecMode::Parallel);

/// Maximal robust positively invariant subset of X under u = Kx, computed by
/// the fixed-point iteration S_{k+1} = S_k intersect {x : (A+BK)x in S_k (-) ED}
/// starting from S_0 = X intersect {x : Kx in U}. Requires A+BK Schur-stable
/// and symmetric U, D, X. Returns the expanded [V; -V] polytope.
HPolytope max_rpi_for_gain(const SafetySystem& sys, const Eigen::MatrixXd& K, int max_iter,
                           double tol, const Tolerances& tols = default_tols());

/// Radius of the largest inf-norm ball inscribed in P (center free), by LP.
double inscribed_inf_ball_radius(const HPolytope& P, const Tolerances& tols = default_tols());

/// Runs max_rpi_for_gain per candidate gain, verifies each result, and
/// returns the certificate with the largest inscribed inf-norm ball.
RciCertificate gain_search(const SafetySystem& sys, const std::vector<Eigen::MatrixXd>& candidates,
                           int max_iter = 500, double tol = 1e-9,
                           const Tolerances& tols = default_tols());

/// Discounted Riccati gain for x+ = Ax + Bu with stage cost x.Qx + u.Ru;
/// returns K with u = Kx. Empty matrix when the iteration diverges.
Eigen::MatrixXd dare_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                          const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                          double discount = 1.0);

double spectral_radius(const Eigen::MatrixXd& M);

}  // namespace gaugerl
