#pragma once

#include <Eigen/Dense>
#include <utility>

#include "gaugerl/lp.hpp"
#include "gaugerl/tolerances.hpp"

namespace gaugerl {

/// Halfspace polytope { x : F x <= g }. Symmetric sets {-b <= V y <= b} are
/// stored expanded as F = [V; -V], g = [b; b].
struct HPolytope {
    Eigen::MatrixXd F;
    Eigen::VectorXd g;

    int dim() const { return static_cast<int>(F.cols()); }
    int rows() const { return static_cast<int>(F.rows()); }

    static HPolytope symmetric(const Eigen::MatrixXd& V, const Eigen::VectorXd& bar);
    static HPolytope box(const Eigen::VectorXd& half_widths);
    static HPolytope unit_box(int n);

    /// Structural sanity: finite entries, no all-zero rows, consistent sizes.
    void validate_basic() const;
};

/// Splits an expanded symmetric polytope back into (V, bar). Requires the
/// exact [V; -V], [bar; bar] layout produced by HPolytope::symmetric.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> split_symmetric(const HPolytope& P);

struct GaugeValue {
    double value = 0.0;
    int active_row = 0;  // maximizing constraint, ties broken by lowest index
};

bool contains(const HPolytope& P, const Eigen::VectorXd& x, double tol);

/// True iff P is bounded (finite support in +-each coordinate direction) and
/// the origin is strictly interior (g_i > tols.strict_interior for all i).
bool is_cset(const HPolytope& P, const Tolerances& tols = default_tols());

/// gamma_Q(v) = max(0, max_i F_i.v / g_i). Throws NotACSet when any g_i <= 0;
/// boundedness of Q is the caller's contract (checked by is_cset where the
/// surrounding machinery requires it, never inside this hot path).
GaugeValue gauge_function(const HPolytope& Q, const Eigen::VectorXd& v);

/// G(v|Q) = (|v|_inf / gamma_Q(v)) v, with G(0) = 0. Requires |v|_inf <= 1.
Eigen::VectorXd gauge_map(const Eigen::VectorXd& v, const HPolytope& Q);

/// G(v|P,Q) = (gamma_P(v) / gamma_Q(v)) v, the P -> Q bijection.
Eigen::VectorXd gauge_map_general(const Eigen::VectorXd& v, const HPolytope& P, const HPolytope& Q);

/// Jacobian of the smooth branch selected by the tie-broken active rows of
/// both the inf-norm and the gauge. Throws ZeroInput at v = 0.
Eigen::MatrixXd gauge_map_jacobian(const Eigen::VectorXd& v, const HPolytope& Q);

/// Jacobian assigned to the v = 0 branch: the linear branch active under an
/// infinitesimal perturbation along the first coordinate axis.
Eigen::MatrixXd gauge_map_jacobian_at_zero(const HPolytope& Q);

/// h_P(a) = max_{x in P} a.x via solve_lp. Throws on empty or unbounded P.
double support(const HPolytope& P, const Eigen::VectorXd& a, const Tolerances& tols = default_tols());

/// { x : x + c in P } = P - c, realized as {F, g - F c}.
HPolytope translate(const HPolytope& P, const Eigen::VectorXd& c);

/// P scaled about the origin by lambda > 0.
HPolytope scale(const HPolytope& P, double lambda);

/// Total constraint violation: sum of max(0, F_i x - g_i) over all rows.
double violation(const HPolytope& P, const Eigen::VectorXd& x);

}  // namespace gaugerl
