#include "gaugerl/policy.hpp"

#include <cmath>

#include "gaugerl/errors.hpp"

namespace gaugerl {

Eigen::VectorXd box_half_widths(const HPolytope& U) {
    const int m = U.dim();
    if (U.rows() != 2 * m) throw NonBoxInputSet("input set is not an axis box");
    if (!U.F.topRows(m).isIdentity(0.0) || !(-U.F.bottomRows(m)).isIdentity(0.0))
        throw NonBoxInputSet("input set is not an axis box");
    if (U.g.head(m) != U.g.tail(m)) throw NonBoxInputSet("input box is not symmetric");
    if (U.g.minCoeff() <= 0.0) throw NonBoxInputSet("input box has empty interior");
    return U.g.head(m);
}

Eigen::VectorXd act_penalty(const Mlp& net, const Eigen::VectorXd& ubar, const Eigen::VectorXd& x) {
    if (net.config().head != Head::ScaledSigmoid)
        throw InvalidInput("penalty policy needs a ScaledSigmoid head");
    if (net.config().out != ubar.size()) throw DimensionMismatch("ubar vs network output");
    if (net.config().in != x.size()) throw DimensionMismatch("state vs network input");
    return ubar.cwiseProduct(net.forward(x));
}

SafePolicy::SafePolicy(RciCertificate cert, SafetySystem sys, Tolerances tols)
    : cert_(std::move(cert)), sys_(std::move(sys)), tols_(tols) {
    sys_.validate(tols_);
    const int n = sys_.n();
    const int m = sys_.m();
    const int r = cert_.r();
    if (cert_.Vs.cols() != n) throw DimensionMismatch("certificate rows vs state dimension");
    if (cert_.K.rows() != m || cert_.K.cols() != n) throw DimensionMismatch("gain shape");
    if (cert_.s_bar.size() != r || cert_.tighten_hi.size() != r || cert_.tighten_lo.size() != r)
        throw DimensionMismatch("certificate offsets");
    S_ = cert_.S();

    const Eigen::MatrixXd vsb = cert_.Vs * sys_.B;
    vs_acl_ = cert_.Vs * (sys_.A + sys_.B * cert_.K);
    uk_ = sys_.U.F * cert_.K;

    // Certificate rows with Vs_i B = 0 constrain the state only; they are
    // checked per call, not handed to the gauge map.
    for (int i = 0; i < r; ++i) {
        if (vsb.row(i).cwiseAbs().maxCoeff() > 1e-12) {
            keep_hi_.push_back(i);
            keep_lo_.push_back(i);
        }
    }
    const int nu = sys_.U.rows();
    const int nk = static_cast<int>(keep_hi_.size());
    rows_.resize(nu + 2 * nk, m);
    rows_.topRows(nu) = sys_.U.F;
    for (int j = 0; j < nk; ++j) {
        rows_.row(nu + j) = vsb.row(keep_hi_[j]);
        rows_.row(nu + nk + j) = -vsb.row(keep_lo_[j]);
    }
    row_norms_.resize(rows_.rows());
    for (int i = 0; i < rows_.rows(); ++i) row_norms_(i) = rows_.row(i).cwiseAbs().maxCoeff();
}

Eigen::VectorXd SafePolicy::offsets(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd w = vs_acl_ * x;
    const Eigen::VectorXd hi = cert_.s_bar - cert_.tighten_hi - w;
    const Eigen::VectorXd lo = cert_.s_bar + cert_.tighten_lo + w;
    for (int i = 0; i < cert_.r(); ++i) {
        if (std::min(hi(i), lo(i)) < -tols_.membership)
            throw CertificateInvalid("state admits no safe action");
    }
    const int nu = sys_.U.rows();
    const int nk = static_cast<int>(keep_hi_.size());
    Eigen::VectorXd g(nu + 2 * nk);
    g.head(nu) = sys_.U.g - uk_ * x;
    for (int j = 0; j < nk; ++j) {
        g(nu + j) = hi(keep_hi_[j]);
        g(nu + nk + j) = lo(keep_lo_[j]);
    }
    return g;
}

HPolytope SafePolicy::shifted_set(const Eigen::VectorXd& x) const {
    if (x.size() != sys_.n()) throw DimensionMismatch("state dimension");
    return HPolytope{rows_, offsets(x)};
}

Eigen::VectorXd SafePolicy::act_safe(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const {
    if (x.size() != sys_.n()) throw DimensionMismatch("state dimension");
    if (v.size() != sys_.m()) throw DimensionMismatch("virtual action dimension");
    if (v.cwiseAbs().maxCoeff() > 1.0 + 1e-9)
        throw InvalidInput("virtual action outside the unit cube");
    if (!contains(S_, x, tols_.membership)) throw StateOutsideS("state left the certified set");
    if ((v.array() == 0.0).all()) return act_linear(cert_.K, x);

    const Eigen::VectorXd g = offsets(x);
    if ((g.array() / row_norms_.array()).minCoeff() <= tols_.interior_eps)
        return act_linear(cert_.K, x);
    return gauge_map(v, HPolytope{rows_, g}) + cert_.K * x;
}

Eigen::MatrixXd SafePolicy::act_safe_backward(const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& v) const {
    if (x.size() != sys_.n()) throw DimensionMismatch("state dimension");
    if (v.size() != sys_.m()) throw DimensionMismatch("virtual action dimension");
    if (v.cwiseAbs().maxCoeff() > 1.0 + 1e-9)
        throw InvalidInput("virtual action outside the unit cube");
    if (!contains(S_, x, tols_.membership)) throw StateOutsideS("state left the certified set");

    const Eigen::VectorXd g = offsets(x);
    if ((g.array() / row_norms_.array()).minCoeff() <= tols_.interior_eps)
        return Eigen::MatrixXd::Zero(sys_.m(), sys_.m());
    const HPolytope omega{rows_, g};
    if ((v.array() == 0.0).all()) return gauge_map_jacobian_at_zero(omega);
    return gauge_map_jacobian(v, omega);
}

}  // namespace gaugerl
