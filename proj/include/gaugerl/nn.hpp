#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gaugerl/rng.hpp"

namespace gaugerl {

struct Layer {
    Eigen::MatrixXd W;
    Eigen::VectorXd b;
};

/// Output nonlinearity. ScaledSigmoid is 2*sigmoid(s*z) - 1: magnitude never
/// exceeds 1 (saturation rounds to exactly 1 in doubles), so downstream gauge
/// maps always receive an admissible input.
enum class Head { Identity, ScaledSigmoid };

struct MlpConfig {
    int in = 0;
    std::vector<int> hidden;
    int out = 0;
    Head head = Head::Identity;
    double head_steepness = 1.0;
};

/// Fully connected ReLU network, batched over columns. Hidden layers use
/// uniform fan-in init; the output layer is shrunk so initial outputs sit
/// near zero.
class Mlp {
public:
    Mlp(const MlpConfig& cfg, Rng& rng);

    /// Activations kept per layer for the backward pass.
    struct BatchCache {
        std::vector<Eigen::MatrixXd> acts;  // acts[0] = input, acts.back() = output
    };

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& X) const;
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& X, BatchCache& cache) const;

    /// Backpropagates dL/doutput (columns = samples), writes parameter
    /// gradients (summed over the batch), and returns dL/dinput.
    Eigen::MatrixXd backward_batch(const BatchCache& cache, const Eigen::MatrixXd& dout,
                                   std::vector<Layer>& grads) const;

    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }
    const MlpConfig& config() const { return cfg_; }

    std::vector<Layer> zero_grads() const;

private:
    MlpConfig cfg_;
    std::vector<Layer> layers_;
};

/// Adam with bias correction; one optimizer instance per network.
class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(std::vector<Layer>& params, const std::vector<Layer>& grads);

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Layer> m_, v_;
};

/// target <- (1 - rho) target + rho online.
void soft_update(Mlp& target, const Mlp& online, double rho);

}  // namespace gaugerl
