#include "gaugerl/ddpg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <unordered_set>
#include <utility>

#include "gaugerl/errors.hpp"

namespace gaugerl {

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double clamp_unit(double v) { return v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw InvalidInput("replay capacity must be positive");
    store_.reserve(capacity_);
}

void ReplayBuffer::push(Transition t) {
    if (store_.size() < capacity_) {
        store_.push_back(std::move(t));
        return;
    }
    store_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
    if (store_.empty()) throw InvalidInput("sampling from an empty replay buffer");
    const std::size_t n = store_.size();
    std::vector<const Transition*> out;
    if (batch >= n) {
        out.reserve(n);
        for (const auto& t : store_) out.push_back(&t);
        return out;
    }
    out.reserve(batch);
    if (batch * 2 > n) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (std::size_t i = 0; i < batch; ++i) {
            std::swap(idx[i], idx[i + rng.below(n - i)]);
            out.push_back(&store_[idx[i]]);
        }
        return out;
    }
    std::unordered_set<std::size_t> seen;
    while (out.size() < batch) {
        const std::size_t i = rng.below(n);
        if (seen.insert(i).second) out.push_back(&store_[i]);
    }
    return out;
}

Batch make_batch(const std::vector<const Transition*>& sample) {
    if (sample.empty()) throw InvalidInput("empty batch");
    const int B = static_cast<int>(sample.size());
    const int n = static_cast<int>(sample[0]->x.size());
    const int m = static_cast<int>(sample[0]->u.size());
    Batch b;
    b.x.resize(n, B);
    b.u.resize(m, B);
    b.x_next.resize(n, B);
    b.cost.resize(B);
    for (int i = 0; i < B; ++i) {
        const Transition& t = *sample[i];
        if (t.x.size() != n || t.u.size() != m || t.x_next.size() != n)
            throw DimensionMismatch("ragged transitions in batch");
        b.x.col(i) = t.x;
        b.u.col(i) = t.u;
        b.x_next.col(i) = t.x_next;
        b.cost(i) = t.cost;
    }
    return b;
}

void TrainConfig::validate() const {
    if (episodes < 1) throw InvalidInput("episodes must be >= 1");
    if (steps_per_episode < 1) throw InvalidInput("steps_per_episode must be >= 1");
    if (batch < 1) throw InvalidInput("batch must be >= 1");
    if (buffer_capacity < static_cast<std::size_t>(batch))
        throw InvalidInput("buffer must hold at least one batch");
    if (!(gamma > 0.0) || gamma > 1.0) throw InvalidInput("gamma must lie in (0, 1]");
    if (target_rate < 0.0 || target_rate > 1.0) throw InvalidInput("target_rate must lie in [0, 1]");
    if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw InvalidInput("learning rates must be positive");
    if (noise_sigma < 0.0 || noise_floor < 0.0) throw InvalidInput("noise scales must be >= 0");
    if (warmup < 0) throw InvalidInput("warmup must be >= 0");
    if (lambda < 0.0) throw InvalidInput("lambda must be >= 0");
    if (hidden.empty()) throw InvalidInput("at least one hidden layer");
    for (int h : hidden)
        if (h < 1) throw InvalidInput("hidden widths must be positive");
    if (!(head_steepness > 0.0)) throw InvalidInput("head_steepness must be positive");
}

ActorModel::ActorModel(Mlp net, const SafePolicy* filter)
    : kind_(PolicyKind::Safe), net_(std::move(net)), filter_(filter) {
    if (filter_ == nullptr) throw InvalidInput("safe actor needs a filter");
    if (net_.config().head != Head::ScaledSigmoid)
        throw InvalidInput("safe actor needs a ScaledSigmoid head");
    if (net_.config().in != filter_->system().n() || net_.config().out != filter_->system().m())
        throw DimensionMismatch("actor network vs system");
}

ActorModel::ActorModel(Mlp net, Eigen::VectorXd ubar)
    : kind_(PolicyKind::Penalty), net_(std::move(net)), ubar_(std::move(ubar)) {
    if (net_.config().head != Head::ScaledSigmoid)
        throw InvalidInput("penalty actor needs a ScaledSigmoid head");
    if (net_.config().out != ubar_.size()) throw DimensionMismatch("actor network vs input box");
    if (ubar_.size() == 0 || ubar_.minCoeff() <= 0.0)
        throw InvalidInput("input box half-widths must be positive");
}

Eigen::VectorXd ActorModel::lift(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    if (kind_ == PolicyKind::Safe) return filter_->act_safe(x, y);
    return ubar_.cwiseProduct(y);
}

Eigen::VectorXd ActorModel::act(const Eigen::VectorXd& x) const { return lift(x, net_.forward(x)); }

Eigen::VectorXd ActorModel::act_explore(const Eigen::VectorXd& x, double sigma, Rng& rng) const {
    Eigen::VectorXd y = net_.forward(x);
    for (int i = 0; i < y.size(); ++i) y(i) = clamp_unit(y(i) + sigma * rng.normal());
    return lift(x, y);
}

Eigen::VectorXd ActorModel::pull_back(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& du) const {
    if (kind_ == PolicyKind::Safe)
        return filter_->act_safe_backward(x, y).transpose() * du;
    return ubar_.cwiseProduct(du);
}

Eigen::VectorXd td_targets(const ActorModel& target_actor, const Mlp& target_critic,
                           const Batch& b, double gamma) {
    const int B = b.size();
    const int n = static_cast<int>(b.x.rows());
    const int m = static_cast<int>(b.u.rows());
    const Eigen::MatrixXd Y = target_actor.net().forward_batch(b.x_next);
    Eigen::MatrixXd Z(n + m, B);
    Z.topRows(n) = b.x_next;
    for (int i = 0; i < B; ++i) Z.col(i).tail(m) = target_actor.lift(b.x_next.col(i), Y.col(i));
    const Eigen::MatrixXd Q = target_critic.forward_batch(Z);
    return b.cost + gamma * Q.row(0).transpose();
}

double critic_loss_and_grads(const Mlp& critic, const Batch& b, const Eigen::VectorXd& targets,
                             std::vector<Layer>& grads) {
    const int B = b.size();
    if (targets.size() != B) throw DimensionMismatch("targets vs batch");
    const int n = static_cast<int>(b.x.rows());
    const int m = static_cast<int>(b.u.rows());
    Eigen::MatrixXd Z(n + m, B);
    Z.topRows(n) = b.x;
    Z.bottomRows(m) = b.u;
    Mlp::BatchCache cache;
    const Eigen::MatrixXd Q = critic.forward_batch(Z, cache);
    const Eigen::VectorXd diff = Q.row(0).transpose() - targets;
    const double loss = diff.squaredNorm() / B;
    const Eigen::MatrixXd dout = (2.0 / B) * diff.transpose();
    grads = critic.zero_grads();
    critic.backward_batch(cache, dout, grads);
    return loss;
}

double critic_update(Mlp& critic, Adam& opt, const Batch& b, const Eigen::VectorXd& targets) {
    std::vector<Layer> grads;
    const double loss = critic_loss_and_grads(critic, b, targets, grads);
    opt.step(critic.layers(), grads);
    return loss;
}

double actor_loss_and_grads(const ActorModel& actor, const Mlp& critic, const Batch& b,
                            std::vector<Layer>& grads) {
    const int B = b.size();
    const int n = static_cast<int>(b.x.rows());
    const int m = static_cast<int>(b.u.rows());
    Mlp::BatchCache acache;
    const Eigen::MatrixXd Y = actor.net().forward_batch(b.x, acache);
    Eigen::MatrixXd Z(n + m, B);
    Z.topRows(n) = b.x;
    for (int i = 0; i < B; ++i) Z.col(i).tail(m) = actor.lift(b.x.col(i), Y.col(i));
    Mlp::BatchCache ccache;
    const Eigen::MatrixXd Q = critic.forward_batch(Z, ccache);
    const double loss = Q.row(0).mean();

    const Eigen::MatrixXd dout = Eigen::MatrixXd::Constant(1, B, 1.0 / B);
    std::vector<Layer> cgrads = critic.zero_grads();
    const Eigen::MatrixXd dZ = critic.backward_batch(ccache, dout, cgrads);
    Eigen::MatrixXd dY(m, B);
    for (int i = 0; i < B; ++i)
        dY.col(i) = actor.pull_back(b.x.col(i), Y.col(i), dZ.col(i).tail(m));
    grads = actor.net().zero_grads();
    actor.net().backward_batch(acache, dY, grads);
    return loss;
}

double actor_update(ActorModel& actor, Adam& opt, const Mlp& critic, const Batch& b) {
    std::vector<Layer> grads;
    const double loss = actor_loss_and_grads(actor, critic, b, grads);
    opt.step(actor.net().layers(), grads);
    return loss;
}

TrainingReport train(const Environment& env, PolicyKind kind, const TrainConfig& cfg,
                     const std::optional<RciCertificate>& cert) {
    cfg.validate();
    const Tolerances tols = default_tols();
    env.sys.validate(tols);
    if (env.x0_set.dim() != env.sys.n()) throw DimensionMismatch("initial-state set vs system");
    if (env.angle_dims < 0 || env.angle_dims > env.sys.n())
        throw InvalidInput("angle_dims out of range");

    const int n = env.sys.n();
    const int m = env.sys.m();

    std::optional<SafePolicy> filter;
    HPolytope S;
    Eigen::VectorXd ubar;
    if (kind == PolicyKind::Safe) {
        if (!cert) throw CertificateInvalid("safe training needs a certificate");
        if (!verify_certificate(*cert, env.sys, tols).valid)
            throw CertificateInvalid("certificate failed verification");
        filter.emplace(*cert, env.sys, tols);
        S = cert->S();
    } else {
        ubar = box_half_widths(env.sys.U);
    }

    MlpConfig acfg;
    acfg.in = n;
    acfg.hidden = cfg.hidden;
    acfg.out = m;
    acfg.head = Head::ScaledSigmoid;
    acfg.head_steepness = cfg.head_steepness;
    MlpConfig ccfg;
    ccfg.in = n + m;
    ccfg.hidden = cfg.hidden;
    ccfg.out = 1;
    ccfg.head = Head::Identity;

    Rng arng(substream_seed(cfg.seed, kStreamWeights, 0));
    Rng crng(substream_seed(cfg.seed, kStreamWeights, 1));
    ActorModel actor = kind == PolicyKind::Safe ? ActorModel(Mlp(acfg, arng), &*filter)
                                                : ActorModel(Mlp(acfg, arng), ubar);
    Mlp critic(ccfg, crng);
    ActorModel target_actor = actor;
    Mlp target_critic = critic;
    Adam aopt(cfg.actor_lr);
    Adam copt(cfg.critic_lr);

    ReplayBuffer buffer(cfg.buffer_capacity);
    Rng replay_rng(substream_seed(cfg.seed, kStreamReplay));
    const PolytopeSampler x0s(env.x0_set);
    const DisturbanceModel dm(env.alpha, env.sys.D);

    const long total_steps = static_cast<long>(cfg.episodes) * cfg.steps_per_episode;
    long step_count = 0;

    TrainingReport rep;
    rep.kind = kind;
    const auto run_t0 = std::chrono::steady_clock::now();

    auto leading_max = [&](const Eigen::VectorXd& x) {
        return env.angle_dims == 0 ? 0.0 : x.head(env.angle_dims).cwiseAbs().maxCoeff();
    };

    for (int ep = 0; ep < cfg.episodes; ++ep) {
        Rng rx(substream_seed(cfg.seed, kStreamX0, static_cast<std::uint64_t>(ep)));
        Rng rd(substream_seed(cfg.seed, kStreamDisturbance, static_cast<std::uint64_t>(ep)));
        Rng re(substream_seed(cfg.seed, kStreamExploration, static_cast<std::uint64_t>(ep)));
        Eigen::VectorXd x = x0s(rx);
        Eigen::VectorXd d = dm.init(rd);

        EpisodeRow row;
        row.episode = ep;
        row.max_angle_dev = leading_max(x);
        const auto ep_t0 = std::chrono::steady_clock::now();

        for (int t = 0; t < cfg.steps_per_episode; ++t, ++step_count) {
            const double frac =
                total_steps > 1 ? static_cast<double>(step_count) / (total_steps - 1) : 0.0;
            const double sigma = cfg.noise_sigma + (cfg.noise_floor - cfg.noise_sigma) * frac;

            const Eigen::VectorXd u = actor.act_explore(x, sigma, re);
            const double cost = stage_cost(x, u, env.weights);
            const Eigen::VectorXd x1 = env.sys.A * x + env.sys.B * u + env.sys.E * d;
            if (!x1.allFinite())
                throw TrainingAborted("state diverged at episode " + std::to_string(ep));
            const double viol = violation(env.sys.X, x1);
            if (kind == PolicyKind::Safe && !contains(S, x1, 1e-8))
                throw CertificateInvalid("visited state left the certified set during training");

            Transition tr;
            tr.x = x;
            tr.u = u;
            tr.x_next = x1;
            tr.cost = cost + (kind == PolicyKind::Penalty ? cfg.lambda * viol : 0.0);
            tr.violation = viol;
            tr.done = t + 1 == cfg.steps_per_episode;
            buffer.push(std::move(tr));

            row.accum_cost += cost;
            if (viol > 1e-8) ++row.violations;
            row.max_angle_dev = std::max(row.max_angle_dev, leading_max(x1));
            d = dm.step(d, rd);
            x = x1;

            if (buffer.size() >= static_cast<std::size_t>(std::max(cfg.warmup, cfg.batch))) {
                const Batch batch = make_batch(buffer.sample(cfg.batch, replay_rng));
                const Eigen::VectorXd y = td_targets(target_actor, target_critic, batch, cfg.gamma);
                const double closs = critic_update(critic, copt, batch, y);
                const double aloss = actor_update(actor, aopt, critic, batch);
                if (!std::isfinite(closs) || !std::isfinite(aloss))
                    throw TrainingAborted("nonfinite loss at episode " + std::to_string(ep) +
                                          ", step " + std::to_string(t));
                soft_update(target_critic, critic, cfg.target_rate);
                soft_update(target_actor.net(), actor.net(), cfg.target_rate);
            }
        }
        row.wallclock_s = seconds_since(ep_t0);
        rep.rows.push_back(row);
    }

    rep.actor = actor.net();
    rep.total_wallclock_s = seconds_since(run_t0);
    return rep;
}

EvalReport evaluate(const Environment& env, const std::vector<NamedPolicy>& policies,
                    int n_episodes, int steps, std::uint64_t seed, ExecMode mode) {
    if (policies.empty()) throw InvalidInput("no policies to evaluate");
    if (n_episodes < 1 || steps < 1) throw InvalidInput("episodes and steps must be >= 1");
    const PolytopeSampler x0s(env.x0_set);
    const DisturbanceModel dm(env.alpha, env.sys.D);

    EvalReport rep;
    rep.per_policy.assign(policies.size(), std::vector<EvalEpisode>(n_episodes));
    for (const auto& p : policies) rep.names.push_back(p.name);

    const int total = static_cast<int>(policies.size()) * n_episodes;
    std::vector<std::exception_ptr> failures(total);
    for_each_index(mode, total, [&](int i) {
        const int p = i / n_episodes;
        const int ep = i % n_episodes;
        try {
            const Trajectory tr = rollout(env.sys, env.weights, dm, x0s, policies[p].act, steps,
                                          seed, static_cast<std::uint64_t>(ep));
            EvalEpisode& e = rep.per_policy[p][ep];
            e.accum_cost = tr.accum_cost();
            e.max_angle_dev = tr.max_abs_over(env.angle_dims);
            e.violations = tr.violation_count(1e-8);
        } catch (...) {
            failures[i] = std::current_exception();
        }
    });
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);
    return rep;
}

}  // namespace gaugerl
