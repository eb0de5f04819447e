#include "gaugerl/nn.hpp"

#include <cmath>

#include "gaugerl/errors.hpp"

namespace gaugerl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Mlp::Mlp(const MlpConfig& cfg, Rng& rng) : cfg_(cfg) {
    if (cfg.in <= 0 || cfg.out <= 0) throw InvalidInput("network needs positive widths");
    for (int h : cfg.hidden)
        if (h <= 0) throw InvalidInput("network needs positive widths");
    if (cfg.head == Head::ScaledSigmoid && cfg.head_steepness <= 0.0)
        throw InvalidInput("head steepness must be positive");

    std::vector<int> widths{cfg.in};
    widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
    widths.push_back(cfg.out);

    for (size_t l = 0; l + 1 < widths.size(); ++l) {
        Layer layer;
        layer.W.resize(widths[l + 1], widths[l]);
        layer.b = VectorXd::Zero(widths[l + 1]);
        const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
        const double scale = (l + 2 == widths.size()) ? 0.01 : 1.0;
        for (int i = 0; i < layer.W.rows(); ++i)
            for (int j = 0; j < layer.W.cols(); ++j)
                layer.W(i, j) = scale * rng.uniform(-bound, bound);
        layers_.push_back(std::move(layer));
    }
}

VectorXd Mlp::forward(const VectorXd& x) const { return forward_batch(x); }

MatrixXd Mlp::forward_batch(const MatrixXd& X) const {
    BatchCache cache;
    return forward_batch(X, cache);
}

MatrixXd Mlp::forward_batch(const MatrixXd& X, BatchCache& cache) const {
    if (X.rows() != cfg_.in) throw DimensionMismatch("network input rows");
    cache.acts.clear();
    cache.acts.reserve(layers_.size() + 1);
    cache.acts.push_back(X);
    MatrixXd A = X;
    for (size_t l = 0; l < layers_.size(); ++l) {
        MatrixXd Z = (layers_[l].W * A).colwise() + layers_[l].b;
        if (l + 1 < layers_.size()) {
            A = Z.cwiseMax(0.0);
        } else if (cfg_.head == Head::ScaledSigmoid) {
            A = (0.5 * cfg_.head_steepness * Z.array()).tanh().matrix();
        } else {
            A = std::move(Z);
        }
        cache.acts.push_back(A);
    }
    return cache.acts.back();
}

MatrixXd Mlp::backward_batch(const BatchCache& cache, const MatrixXd& dout,
                             std::vector<Layer>& grads) const {
    if (cache.acts.size() != layers_.size() + 1)
        throw InvalidInput("backward without a matching forward cache");
    if (grads.size() != layers_.size()) throw DimensionMismatch("gradient buffer layout");

    MatrixXd dZ;
    const MatrixXd& y = cache.acts.back();
    if (cfg_.head == Head::ScaledSigmoid) {
        // dy/dz = s (1 - y^2) / 2
        dZ = (dout.array() * (0.5 * cfg_.head_steepness * (1.0 - y.array().square()))).matrix();
    } else {
        dZ = dout;
    }

    for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
        grads[static_cast<size_t>(l)].W = dZ * cache.acts[static_cast<size_t>(l)].transpose();
        grads[static_cast<size_t>(l)].b = dZ.rowwise().sum();
        if (l == 0) return layers_[0].W.transpose() * dZ;
        const MatrixXd dA = layers_[static_cast<size_t>(l)].W.transpose() * dZ;
        // ReLU subgradient: slope 0 at the kink
        dZ = ((cache.acts[static_cast<size_t>(l)].array() > 0.0).cast<double>() * dA.array())
                 .matrix();
    }
    return {};
}

std::vector<Layer> Mlp::zero_grads() const {
    std::vector<Layer> g;
    g.reserve(layers_.size());
    for (const auto& layer : layers_)
        g.push_back({MatrixXd::Zero(layer.W.rows(), layer.W.cols()),
                     VectorXd::Zero(layer.b.size())});
    return g;
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (lr <= 0.0) throw InvalidInput("learning rate must be positive");
}

void Adam::step(std::vector<Layer>& params, const std::vector<Layer>& grads) {
    if (params.size() != grads.size()) throw DimensionMismatch("optimizer parameter layout");
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.push_back({MatrixXd::Zero(p.W.rows(), p.W.cols()), VectorXd::Zero(p.b.size())});
            v_.push_back({MatrixXd::Zero(p.W.rows(), p.W.cols()), VectorXd::Zero(p.b.size())});
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t l = 0; l < params.size(); ++l) {
        m_[l].W = beta1_ * m_[l].W + (1.0 - beta1_) * grads[l].W;
        m_[l].b = beta1_ * m_[l].b + (1.0 - beta1_) * grads[l].b;
        v_[l].W.array() =
            beta2_ * v_[l].W.array() + (1.0 - beta2_) * grads[l].W.array().square();
        v_[l].b.array() =
            beta2_ * v_[l].b.array() + (1.0 - beta2_) * grads[l].b.array().square();
        params[l].W.array() -=
            lr_ * (m_[l].W.array() / bc1) / ((v_[l].W.array() / bc2).sqrt() + eps_);
        params[l].b.array() -=
            lr_ * (m_[l].b.array() / bc1) / ((v_[l].b.array() / bc2).sqrt() + eps_);
    }
}

void soft_update(Mlp& target, const Mlp& online, double rho) {
    if (rho < 0.0 || rho > 1.0) throw InvalidInput("soft update rate must lie in [0, 1]");
    auto& tl = target.layers();
    const auto& ol = online.layers();
    if (tl.size() != ol.size()) throw DimensionMismatch("network layouts differ");
    for (size_t l = 0; l < tl.size(); ++l) {
        tl[l].W = (1.0 - rho) * tl[l].W + rho * ol[l].W;
        tl[l].b = (1.0 - rho) * tl[l].b + rho * ol[l].b;
    }
}

}  // namespace gaugerl
