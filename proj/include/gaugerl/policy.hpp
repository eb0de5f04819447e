#pragma once

#include <Eigen/Dense>

#include "gaugerl/invariance.hpp"
#include "gaugerl/nn.hpp"
#include "gaugerl/polytope.hpp"

namespace gaugerl {

inline Eigen::VectorXd act_linear(const Eigen::MatrixXd& K, const Eigen::VectorXd& x) {
    return K * x;
}

/// Half-widths of an axis-aligned symmetric box in [I; -I] layout; throws
/// NonBoxInputSet for anything else.
Eigen::VectorXd box_half_widths(const HPolytope& U);

/// Soft-bounded policy: the network's unit-cube output scaled to the input
/// box. Requires a ScaledSigmoid head so the bound is structural.
Eigen::VectorXd act_penalty(const Mlp& net, const Eigen::VectorXd& ubar, const Eigen::VectorXd& x);

/// Safe policy around a verified invariant-set certificate. Every call maps
/// the virtual action v (|v|_inf <= 1) through the gauge map onto the safe
/// action set at x, recentred on the linear action Kx, so the result keeps
/// the successor state inside the certified set for every disturbance.
///
/// The certificate is trusted here; run verify_certificate first.
class SafePolicy {
public:
    SafePolicy(RciCertificate cert, SafetySystem sys, Tolerances tols = default_tols());

    /// u = gauge_map(v, shifted safe set) + Kx. Exactly act_linear(K, x) when
    /// v = 0 or when the shifted set's interior is thinner than interior_eps.
    /// Throws StateOutsideS when x is not in the certified set.
    Eigen::VectorXd act_safe(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const;

    /// Jacobian of act_safe wrt v on the branch act_safe used (zero in the
    /// linear-fallback band, the first-axis branch at v = 0).
    Eigen::MatrixXd act_safe_backward(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const;

    /// The feasible set for v's image: the safe action set at x recentred on
    /// Kx (rows constant across states, offsets refreshed per state).
    HPolytope shifted_set(const Eigen::VectorXd& x) const;

    const RciCertificate& certificate() const { return cert_; }
    const SafetySystem& system() const { return sys_; }
    const HPolytope& invariant_set() const { return S_; }

private:
    Eigen::VectorXd offsets(const Eigen::VectorXd& x) const;

    RciCertificate cert_;
    SafetySystem sys_;
    Tolerances tols_;
    HPolytope S_;
    Eigen::MatrixXd rows_;       // [U.F; VsB; -VsB] with u-independent rows removed
    Eigen::VectorXd row_norms_;  // inf norms of rows_
    Eigen::MatrixXd uk_;         // U.F K
    Eigen::MatrixXd vs_acl_;     // Vs (A + BK)
    std::vector<int> keep_hi_, keep_lo_;  // kept certificate-row indices
};

}  // namespace gaugerl
