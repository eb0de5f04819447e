#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gaugerl/invariance.hpp"
#include "gaugerl/nn.hpp"
#include "gaugerl/parallel.hpp"
#include "gaugerl/plant.hpp"
#include "gaugerl/policy.hpp"

namespace gaugerl {

enum class PolicyKind { Safe, Penalty };

/// One step of experience. `cost` is the signal the learner regresses on: the
/// raw stage cost for safe runs, stage cost + lambda * violation for penalty
/// runs. `done` marks time-limit truncation only; TD targets bootstrap
/// through it because the task itself never terminates.
struct Transition {
    Eigen::VectorXd x;
    Eigen::VectorXd u;
    Eigen::VectorXd x_next;
    double cost = 0.0;
    double violation = 0.0;
    bool done = false;
};

/// FIFO ring at capacity; uniform batches without replacement.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);
    void push(Transition t);
    std::vector<const Transition*> sample(std::size_t batch, Rng& rng) const;
    std::size_t size() const { return store_.size(); }
    std::size_t capacity() const { return capacity_; }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> store_;
};

struct Batch {
    Eigen::MatrixXd x;       // n x B
    Eigen::MatrixXd u;       // m x B
    Eigen::MatrixXd x_next;  // n x B
    Eigen::VectorXd cost;
    int size() const { return static_cast<int>(cost.size()); }
};

Batch make_batch(const std::vector<const Transition*>& sample);

struct TrainConfig {
    int episodes = 200;
    int steps_per_episode = 100;
    int batch = 64;
    std::size_t buffer_capacity = 100000;
    double gamma = 0.99;
    double target_rate = 0.005;
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    double noise_sigma = 0.1;  // initial exploration scale, decayed linearly
    double noise_floor = 0.0;  // scale at the last step
    int warmup = 1000;         // transitions collected before updates begin
    double lambda = 10.0;      // violation weight in the penalty baseline's cost
    std::vector<int> hidden = {256, 256};
    double head_steepness = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Closed-loop task: plant, stage cost, disturbance mixing, initial-state
/// set, and how many leading coordinates count as angles in the metrics.
struct Environment {
    SafetySystem sys;
    CostWeights weights;
    double alpha = 0.8;
    HPolytope x0_set;
    int angle_dims = 0;
};

/// Deterministic actor plus the map from network output to plant input:
/// for Safe, u = gauge-filtered action around the certificate's gain; for
/// Penalty, u = box half-widths * network output. The filter is borrowed,
/// not owned, and must outlive the actor.
class ActorModel {
public:
    ActorModel(Mlp net, const SafePolicy* filter);
    ActorModel(Mlp net, Eigen::VectorXd ubar);

    PolicyKind kind() const { return kind_; }
    Mlp& net() { return net_; }
    const Mlp& net() const { return net_; }

    Eigen::VectorXd act(const Eigen::VectorXd& x) const;
    /// Exploration: Gaussian noise in the network's output space, clipped so
    /// the perturbed output is still admissible for the downstream map.
    Eigen::VectorXd act_explore(const Eigen::VectorXd& x, double sigma, Rng& rng) const;

    /// Network output at x (the virtual action for Safe, the unit action for
    /// Penalty).
    Eigen::VectorXd raw(const Eigen::VectorXd& x) const { return net_.forward(x); }
    /// Plant input for a given network output.
    Eigen::VectorXd lift(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
    /// Chain rule dL/du -> dL/dy through the output map at (x, y).
    Eigen::VectorXd pull_back(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& du) const;

private:
    PolicyKind kind_;
    Mlp net_;
    const SafePolicy* filter_ = nullptr;
    Eigen::VectorXd ubar_;
};

/// TD targets cost + gamma * Q'(x', pi'(x')) (cost semantics, bootstrapping
/// through truncation).
Eigen::VectorXd td_targets(const ActorModel& target_actor, const Mlp& target_critic,
                           const Batch& b, double gamma);

/// Mean squared TD error and its parameter gradients; no optimizer step.
double critic_loss_and_grads(const Mlp& critic, const Batch& b, const Eigen::VectorXd& targets,
                             std::vector<Layer>& grads);

/// One Adam step on the critic; returns the pre-step loss.
double critic_update(Mlp& critic, Adam& opt, const Batch& b, const Eigen::VectorXd& targets);

/// Mean Q(x, pi(x)) and its actor-parameter gradients, flowing through the
/// critic's input and the actor's output map; no optimizer step.
double actor_loss_and_grads(const ActorModel& actor, const Mlp& critic, const Batch& b,
                            std::vector<Layer>& grads);

/// One Adam step on the actor network; returns the pre-step loss.
double actor_update(ActorModel& actor, Adam& opt, const Mlp& critic, const Batch& b);

struct EpisodeRow {
    int episode = 0;
    double accum_cost = 0.0;
    double max_angle_dev = 0.0;
    int violations = 0;
    double wallclock_s = 0.0;
};

struct TrainingReport {
    PolicyKind kind = PolicyKind::Safe;
    std::vector<EpisodeRow> rows;
    std::optional<Mlp> actor;
    double total_wallclock_s = 0.0;
};

/// Runs the training loop. Safe runs require a certificate that passes
/// verify_certificate (CertificateInvalid otherwise) and assert every visited
/// state stays in the certified set. Nonfinite losses or states abort with
/// TrainingAborted. Metric rows are deterministic given the seed, apart from
/// the wallclock column.
TrainingReport train(const Environment& env, PolicyKind kind, const TrainConfig& cfg,
                     const std::optional<RciCertificate>& cert = std::nullopt);

struct NamedPolicy {
    std::string name;
    PolicyFn act;
};

struct EvalEpisode {
    double accum_cost = 0.0;
    double max_angle_dev = 0.0;
    int violations = 0;
};

struct EvalReport {
    std::vector<std::string> names;
    std::vector<std::vector<EvalEpisode>> per_policy;  // [policy][episode]
};

/// Paired evaluation: every policy sees bitwise-identical initial states and
/// disturbance sequences per episode index. Episodes fan out across workers
/// in Parallel mode; policies must be safe to call concurrently.
EvalReport evaluate(const Environment& env, const std::vector<NamedPolicy>& policies,
                    int n_episodes, int steps, std::uint64_t seed,
                    ExecMode mode = ExecMode::Parallel);

}  // namespace gaugerl
