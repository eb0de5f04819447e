#include "cli.hpp"

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "gaugerl/errors.hpp"
#include "gaugerl/io.hpp"
#include "gaugerl/policy.hpp"

namespace gaugerl {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Json train_config_to_json(const TrainConfig& c) {
    return Json{{"episodes", c.episodes},
                {"steps_per_episode", c.steps_per_episode},
                {"batch", c.batch},
                {"buffer_capacity", c.buffer_capacity},
                {"gamma", c.gamma},
                {"target_rate", c.target_rate},
                {"actor_lr", c.actor_lr},
                {"critic_lr", c.critic_lr},
                {"noise_sigma", c.noise_sigma},
                {"noise_floor", c.noise_floor},
                {"warmup", c.warmup},
                {"lambda", c.lambda},
                {"hidden", c.hidden},
                {"head_steepness", c.head_steepness},
                {"seed", c.seed}};
}

void apply_config_json(TrainConfig& c, const Json& j) {
    if (!j.is_object()) throw InvalidInput("training config must be a JSON object");
    c.episodes = j.value("episodes", c.episodes);
    c.steps_per_episode = j.value("steps_per_episode", c.steps_per_episode);
    c.batch = j.value("batch", c.batch);
    c.buffer_capacity = j.value("buffer_capacity", c.buffer_capacity);
    c.gamma = j.value("gamma", c.gamma);
    c.target_rate = j.value("target_rate", c.target_rate);
    c.actor_lr = j.value("actor_lr", c.actor_lr);
    c.critic_lr = j.value("critic_lr", c.critic_lr);
    c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
    c.noise_floor = j.value("noise_floor", c.noise_floor);
    c.warmup = j.value("warmup", c.warmup);
    c.lambda = j.value("lambda", c.lambda);
    if (j.contains("hidden")) c.hidden = j.at("hidden").get<std::vector<int>>();
    c.head_steepness = j.value("head_steepness", c.head_steepness);
    c.seed = j.value("seed", c.seed);
}

struct LoadedCase {
    CaseSpec spec;
    Json raw;
};

LoadedCase load_case(const std::string& path) {
    LoadedCase lc;
    lc.raw = load_json_file(path);
    lc.spec = case_from_json(lc.raw);
    lc.spec.sys.validate();
    return lc;
}

struct LoadedCert {
    RciCertificate cert;
    Json raw;
};

LoadedCert load_cert(const std::string& path, const SafetySystem& sys) {
    LoadedCert lc;
    lc.raw = load_json_file(path);
    lc.cert = certificate_from_json(lc.raw, sys);
    return lc;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw InvalidInput("cannot create output directory '" + dir + "'");
}

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

Mlp zero_actor(int n, int m) {
    MlpConfig cfg;
    cfg.in = n;
    cfg.hidden = {8};
    cfg.out = m;
    cfg.head = Head::ScaledSigmoid;
    Rng rng(0);
    Mlp net(cfg, rng);
    for (Layer& l : net.layers()) {
        l.W.setZero();
        l.b.setZero();
    }
    return net;
}

Mlp load_actor(const std::string& path, int n, int m) {
    const Mlp net = checkpoint_from_json(load_json_file(path));
    if (net.config().in != n || net.config().out != m)
        throw InvalidInput("checkpoint dimensions do not match the case");
    return net;
}

/// Owns the filter and actor models referenced by the policy closures.
struct PolicySet {
    std::shared_ptr<SafePolicy> filter;
    std::vector<NamedPolicy> policies;
};

PolicySet build_policies(const std::vector<std::string>& tokens, const CaseSpec& spec,
                         const RciCertificate& cert, const std::string& actor_path,
                         const std::string& penalty_actor_path) {
    PolicySet ps;
    ps.filter = std::make_shared<SafePolicy>(cert, spec.sys);
    std::map<std::string, int> seen;
    for (const std::string& tok : tokens) {
        std::string name = tok;
        if (int k = ++seen[tok]; k > 1) name += "_" + std::to_string(k);
        if (tok == "linear") {
            const MatrixXd K = cert.K;
            ps.policies.push_back({name, [K](const VectorXd& x) { return act_linear(K, x); }});
        } else if (tok == "safe") {
            Mlp net = actor_path.empty() ? zero_actor(spec.sys.n(), spec.sys.m())
                                         : load_actor(actor_path, spec.sys.n(), spec.sys.m());
            auto actor = std::make_shared<ActorModel>(std::move(net), ps.filter.get());
            auto filter = ps.filter;
            ps.policies.push_back(
                {name, [actor, filter](const VectorXd& x) { return actor->act(x); }});
        } else if (tok == "penalty") {
            if (penalty_actor_path.empty())
                throw InvalidInput("penalty policy requires --penalty-actor");
            Mlp net = load_actor(penalty_actor_path, spec.sys.n(), spec.sys.m());
            auto actor =
                std::make_shared<ActorModel>(std::move(net), box_half_widths(spec.sys.U));
            ps.policies.push_back({name, [actor](const VectorXd& x) { return actor->act(x); }});
        } else {
            throw InvalidInput("unknown policy '" + tok + "'");
        }
    }
    return ps;
}

Environment make_env(const CaseSpec& spec, const RciCertificate& cert) {
    Environment env;
    env.sys = spec.sys;
    env.weights = spec.weights;
    env.alpha = spec.alpha;
    env.x0_set = scale(cert.S(), 0.5);
    env.angle_dims = spec.angle_dims;
    return env;
}

void write_columns_csv(const std::string& path, const std::string& index_name,
                       const std::vector<std::string>& names,
                       const std::vector<std::vector<double>>& cols, const std::string& hash) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    out << "# config_hash=" << hash << "\n" << index_name;
    for (const auto& n : names) out << ", " << n;
    out << "\n";
    const std::size_t rows = cols.empty() ? 0 : cols[0].size();
    for (std::size_t t = 0; t < rows; ++t) {
        out << t;
        for (const auto& col : cols) out << ", " << format_double(col[t]);
        out << "\n";
    }
}

int cmd_synth(const std::string& case_path, const std::string& out_dir, int max_iter) {
    const LoadedCase lc = load_case(case_path);
    const SafetySystem& sys = lc.spec.sys;
    const int n = sys.n(), m = sys.m();

    const MatrixXd Q = MatrixXd(lc.spec.weights.q_diag.asDiagonal());
    const MatrixXd R = lc.spec.weights.r * MatrixXd::Identity(m, m);
    std::vector<MatrixXd> cands;
    auto push_unique = [&](const MatrixXd& K) {
        if (!K.size()) return;
        for (const MatrixXd& J : cands)
            if ((J - K).cwiseAbs().maxCoeff() < 1e-9) return;
        cands.push_back(K);
    };
    for (double rs : {0.1, 1.0, 10.0}) push_unique(dare_gain(sys.A, sys.B, Q, rs * R));
    push_unique(MatrixXd::Zero(m, n));
    std::printf("synth: %zu gain candidates on n=%d m=%d\n", cands.size(), n, m);

    const RciCertificate cert = gain_search(sys, cands, max_iter, 1e-9);
    const VerificationReport rep = verify_certificate(cert, sys);
    const double ball = inscribed_inf_ball_radius(cert.S());

    const Json echo{{"command", "synth"}, {"case", lc.raw}, {"max_iter", max_iter},
                    {"r_scales", Json::array({0.1, 1.0, 10.0})}};
    const std::string hash = config_hash(echo);

    ensure_dir(out_dir);
    const Json meta{{"config_hash", hash}, {"ball_radius", ball}, {"rows", cert.r()},
                    {"candidates", cands.size()}};
    save_json_file(join(out_dir, "certificate.json"), certificate_to_json(cert, meta));

    double worst_inv = 1e300, worst_safe = 1e300, worst_ctrl = 1e300;
    for (const CheckRow& r : rep.rows) {
        double& slot = r.check == "invariance" ? worst_inv
                       : r.check == "safety"   ? worst_safe
                                               : worst_ctrl;
        slot = std::min(slot, r.slack);
    }
    const Json report{{"command", "synth"},       {"config", echo},
                      {"config_hash", hash},      {"valid", rep.valid},
                      {"min_slack", rep.min_slack}, {"rows", cert.r()},
                      {"ball_radius", ball},      {"worst_invariance_slack", worst_inv},
                      {"worst_safety_slack", worst_safe}, {"worst_control_slack", worst_ctrl}};
    save_json_file(join(out_dir, "synth_report.json"), report);

    std::printf("synth: certificate rows=%d ball=%.4g min_slack=%.3g valid=%s\n", cert.r(), ball,
                rep.min_slack, rep.valid ? "yes" : "no");
    return rep.valid ? 0 : 4;
}

int cmd_verify(const std::string& case_path, const std::string& cert_path,
               const std::string& out_path) {
    const LoadedCase lc = load_case(case_path);
    const LoadedCert cc = load_cert(cert_path, lc.spec.sys);
    const VerificationReport rep = verify_certificate(cc.cert, lc.spec.sys);

    double worst[3] = {1e300, 1e300, 1e300};
    const char* names[3] = {"invariance", "safety", "control"};
    for (const CheckRow& r : rep.rows)
        for (int k = 0; k < 3; ++k)
            if (r.check == names[k]) worst[k] = std::min(worst[k], r.slack);
    for (int k = 0; k < 3; ++k)
        std::printf("verify: %-10s worst slack = %.6e\n", names[k], worst[k]);
    if (!rep.valid) {
        for (const CheckRow& r : rep.rows)
            if (r.slack < -default_tols().invariance)
                std::printf("verify: VIOLATED %s row %d slack %.6e\n", r.check.c_str(), r.row,
                            r.slack);
    }
    std::printf("verify: %s (min slack %.6e over %zu checks)\n",
                rep.valid ? "certificate valid" : "certificate INVALID", rep.min_slack,
                rep.rows.size());

    if (!out_path.empty()) {
        const Json echo{{"command", "verify"}, {"case", lc.raw}, {"certificate", cc.raw}};
        Json rows = Json::array();
        for (const CheckRow& r : rep.rows)
            rows.push_back({{"check", r.check}, {"row", r.row}, {"slack", r.slack}});
        save_json_file(out_path, Json{{"command", "verify"},
                                      {"config", echo},
                                      {"config_hash", config_hash(echo)},
                                      {"valid", rep.valid},
                                      {"min_slack", rep.min_slack},
                                      {"checks", rows}});
    }
    return rep.valid ? 0 : 4;
}

int cmd_train(const std::string& case_path, const std::string& cert_path,
              const std::string& out_dir, const std::string& policy, const TrainConfig& cfg) {
    const LoadedCase lc = load_case(case_path);
    const LoadedCert cc = load_cert(cert_path, lc.spec.sys);
    const PolicyKind kind = policy == "penalty" ? PolicyKind::Penalty : PolicyKind::Safe;
    const Environment env = make_env(lc.spec, cc.cert);

    const Json echo{{"command", "train"},
                    {"policy", policy},
                    {"case", lc.raw},
                    {"certificate", cc.raw},
                    {"train", train_config_to_json(cfg)}};
    const std::string hash = config_hash(echo);

    ensure_dir(out_dir);
    std::printf("train: %s policy, %d episodes x %d steps, seed %llu\n", policy.c_str(),
                cfg.episodes, cfg.steps_per_episode, (unsigned long long)cfg.seed);
    const TrainingReport rep = train(env, kind, cfg, cc.cert);

    write_metrics_csv(join(out_dir, "metrics_" + policy + ".csv"), rep.rows, hash);
    if (rep.actor)
        save_json_file(join(out_dir, "checkpoint_" + policy + ".json"),
                       checkpoint_to_json(*rep.actor, cfg.seed));

    int total_viol = 0;
    for (const EpisodeRow& r : rep.rows) total_viol += r.violations;
    const Json summary{{"command", "train"},
                       {"policy", policy},
                       {"config", echo},
                       {"config_hash", hash},
                       {"seed", cfg.seed},
                       {"episodes", (int)rep.rows.size()},
                       {"final_cost", rep.rows.empty() ? 0.0 : rep.rows.back().accum_cost},
                       {"total_violations", total_viol},
                       {"total_wallclock_s", rep.total_wallclock_s}};
    save_json_file(join(out_dir, "summary_" + policy + ".json"), summary);
    std::printf("train: done in %.1fs, final episode cost %.6g, violations %d\n",
                rep.total_wallclock_s, rep.rows.empty() ? 0.0 : rep.rows.back().accum_cost,
                total_viol);
    return 0;
}

int cmd_eval(const std::string& case_path, const std::string& cert_path,
             const std::string& out_dir, std::vector<std::string> tokens,
             const std::string& actor_path, const std::string& penalty_actor_path, bool paired,
             int episodes, int steps, std::uint64_t seed) {
    const LoadedCase lc = load_case(case_path);
    const LoadedCert cc = load_cert(cert_path, lc.spec.sys);
    const VerificationReport vrep = verify_certificate(cc.cert, lc.spec.sys);
    if (!vrep.valid) {
        std::fprintf(stderr, "error: certificate fails verification (min slack %.3e)\n",
                     vrep.min_slack);
        return 4;
    }

    if (tokens.empty()) {
        tokens = {"linear", "safe"};
        if (!penalty_actor_path.empty()) tokens.push_back("penalty");
    }
    const PolicySet ps = build_policies(tokens, lc.spec, cc.cert, actor_path, penalty_actor_path);
    const Environment env = make_env(lc.spec, cc.cert);

    Json echo{{"command", "eval"},    {"case", lc.raw},   {"certificate", cc.raw},
              {"policies", tokens},   {"episodes", episodes}, {"steps", steps},
              {"seed", seed},         {"paired", paired}};
    echo["actor_hash"] =
        actor_path.empty() ? Json() : Json(config_hash(load_json_file(actor_path)));
    echo["penalty_actor_hash"] = penalty_actor_path.empty()
                                     ? Json()
                                     : Json(config_hash(load_json_file(penalty_actor_path)));
    const std::string hash = config_hash(echo);

    ensure_dir(out_dir);
    std::printf("eval: %zu policies x %d episodes x %d steps, seed %llu\n", ps.policies.size(),
                episodes, steps, (unsigned long long)seed);
    const EvalReport rep = evaluate(env, ps.policies, episodes, steps, seed);

    std::vector<std::vector<double>> costs(rep.names.size()), angles(rep.names.size());
    for (std::size_t p = 0; p < rep.names.size(); ++p)
        for (const EvalEpisode& e : rep.per_policy[p]) {
            costs[p].push_back(e.accum_cost);
            angles[p].push_back(e.max_angle_dev);
        }
    write_columns_csv(join(out_dir, "fig3_costs.csv"), "episode", rep.names, costs, hash);
    write_columns_csv(join(out_dir, "fig4_max_angle.csv"), "episode", rep.names, angles, hash);

    // Per-step angle envelope: replays the same (seed, episode) streams the
    // evaluation used, so the trace matches the aggregates above.
    const PolytopeSampler x0s(env.x0_set);
    const DisturbanceModel dm(env.alpha, env.sys.D);
    std::vector<std::vector<double>> steps_max(ps.policies.size(),
                                               std::vector<double>(steps + 1, 0.0));
    for (std::size_t p = 0; p < ps.policies.size(); ++p)
        for (int ep = 0; ep < episodes; ++ep) {
            const Trajectory tr = rollout(env.sys, env.weights, dm, x0s, ps.policies[p].act,
                                          steps, seed, (std::uint64_t)ep);
            for (int t = 0; t <= steps; ++t) {
                const double a =
                    tr.xs.row(t).head(env.angle_dims).cwiseAbs().maxCoeff();
                steps_max[p][t] = std::max(steps_max[p][t], a);
            }
        }
    write_columns_csv(join(out_dir, "fig5_angle_steps.csv"), "t", rep.names, steps_max, hash);

    Json pol_stats = Json::array();
    std::vector<double> means(rep.names.size(), 0.0);
    std::vector<int> viols(rep.names.size(), 0);
    for (std::size_t p = 0; p < rep.names.size(); ++p) {
        double mean = 0.0, worst_angle = 0.0;
        int v = 0;
        for (const EvalEpisode& e : rep.per_policy[p]) {
            mean += e.accum_cost;
            v += e.violations;
            worst_angle = std::max(worst_angle, e.max_angle_dev);
        }
        mean /= episodes;
        means[p] = mean;
        viols[p] = v;
        pol_stats.push_back({{"name", rep.names[p]},
                             {"mean_cost", mean},
                             {"total_violations", v},
                             {"worst_max_angle", worst_angle}});
        std::printf("eval: %-10s mean cost %.6g, violations %d, worst |angle| %.4g\n",
                    rep.names[p].c_str(), mean, v, worst_angle);
    }

    Json paired_stats = Json::array();
    if (paired) {
        int lin = -1;
        for (std::size_t p = 0; p < tokens.size(); ++p)
            if (tokens[p] == "linear" && lin < 0) lin = (int)p;
        if (lin < 0) throw InvalidInput("--paired needs a linear policy in --policies");
        for (std::size_t p = 0; p < rep.names.size(); ++p) {
            if ((int)p == lin) continue;
            double mean_diff = 0.0;
            std::vector<double> diffs(episodes);
            for (int e = 0; e < episodes; ++e) {
                diffs[e] = rep.per_policy[p][e].accum_cost - rep.per_policy[lin][e].accum_cost;
                mean_diff += diffs[e];
            }
            mean_diff /= episodes;
            double var = 0.0;
            for (double d : diffs) var += (d - mean_diff) * (d - mean_diff);
            const double se = episodes > 1 ? std::sqrt(var / (episodes - 1.0) / episodes) : 0.0;
            const bool better = mean_diff < 0.0 && -mean_diff > 2.0 * se;
            paired_stats.push_back({{"name", rep.names[p]},
                                    {"vs", rep.names[lin]},
                                    {"mean_diff", mean_diff},
                                    {"se_diff", se},
                                    {"significantly_better", better}});
            std::printf("eval: %s vs %s, mean cost diff %.6g (se %.3g)%s\n",
                        rep.names[p].c_str(), rep.names[lin].c_str(), mean_diff, se,
                        better ? ", significantly better" : "");
        }
    }

    save_json_file(join(out_dir, "eval_report.json"), Json{{"command", "eval"},
                                                           {"config", echo},
                                                           {"config_hash", hash},
                                                           {"episodes", episodes},
                                                           {"steps", steps},
                                                           {"policies", pol_stats},
                                                           {"paired", paired_stats}});
    return 0;
}

int cmd_rollout(const std::string& case_path, const std::string& cert_path,
                const std::string& out_file, const std::string& policy,
                const std::string& actor_path, int steps, std::uint64_t episode,
                std::uint64_t seed) {
    const LoadedCase lc = load_case(case_path);
    const LoadedCert cc = load_cert(cert_path, lc.spec.sys);
    const PolicySet ps = build_policies({policy}, lc.spec, cc.cert,
                                        policy == "safe" ? actor_path : "",
                                        policy == "penalty" ? actor_path : "");
    const Environment env = make_env(lc.spec, cc.cert);

    Json echo{{"command", "rollout"}, {"case", lc.raw},     {"certificate", cc.raw},
              {"policy", policy},     {"episode", episode}, {"steps", steps},
              {"seed", seed}};
    echo["actor_hash"] =
        actor_path.empty() ? Json() : Json(config_hash(load_json_file(actor_path)));
    const std::string hash = config_hash(echo);

    const PolytopeSampler x0s(env.x0_set);
    const DisturbanceModel dm(env.alpha, env.sys.D);
    const Trajectory tr =
        rollout(env.sys, env.weights, dm, x0s, ps.policies[0].act, steps, seed, episode);
    if (const auto dir = std::filesystem::path(out_file).parent_path(); !dir.empty())
        ensure_dir(dir.string());
    write_trajectory_csv(out_file, tr, hash);
    std::printf("rollout: %s policy, %d steps, cost %.6g, violations %d -> %s\n", policy.c_str(),
                steps, tr.accum_cost(), tr.violation_count(1e-8), out_file.c_str());
    return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Safe reinforcement learning for frequency regulation"};
    app.require_subcommand(1);

    std::string case_path, cert_path, out_path, config_path;
    std::string policy = "safe", actor_path, penalty_actor_path;
    std::vector<std::string> policy_tokens;
    std::uint64_t seed = 0, episode = 0;
    int episodes = 100, steps = 100, max_iter = 500;
    bool paired = false;
    TrainConfig cfg;

    CLI::App* synth = app.add_subcommand("synth", "Synthesize an invariant-set certificate");
    synth->add_option("--case", case_path, "case JSON file")->required();
    synth->add_option("--out", out_path, "output directory")->required();
    synth->add_option("--max-iter", max_iter, "invariant-set iteration cap");
    synth->add_option("--seed", seed, "unused; accepted for uniformity");

    CLI::App* verify = app.add_subcommand("verify", "Verify a certificate against a case");
    verify->add_option("--case", case_path, "case JSON file")->required();
    verify->add_option("--cert", cert_path, "certificate JSON file")->required();
    verify->add_option("--out", out_path, "optional JSON report path");

    CLI::App* train = app.add_subcommand("train", "Train a policy");
    train->add_option("--case", case_path, "case JSON file")->required();
    train->add_option("--cert", cert_path, "certificate JSON file")->required();
    train->add_option("--out", out_path, "output directory")->required();
    train->add_option("--policy", policy, "safe | penalty")
        ->check(CLI::IsMember({"safe", "penalty"}));
    train->add_option("--config", config_path, "training config JSON overrides");
    train->add_option("--seed", seed, "run seed");
    train->add_option("--episodes", cfg.episodes, "training episodes");
    train->add_option("--steps", cfg.steps_per_episode, "steps per episode");
    train->add_option("--batch", cfg.batch, "minibatch size");
    train->add_option("--warmup", cfg.warmup, "transitions before updates");
    train->add_option("--actor-lr", cfg.actor_lr, "actor learning rate");
    train->add_option("--critic-lr", cfg.critic_lr, "critic learning rate");
    train->add_option("--sigma", cfg.noise_sigma, "initial exploration scale");
    train->add_option("--sigma-floor", cfg.noise_floor, "final exploration scale");
    train->add_option("--lambda", cfg.lambda, "penalty weight (penalty runs)");
    train->add_option("--hidden", cfg.hidden, "hidden layer widths")->delimiter(',');

    CLI::App* eval = app.add_subcommand("eval", "Paired evaluation of policies");
    eval->add_option("--case", case_path, "case JSON file")->required();
    eval->add_option("--cert", cert_path, "certificate JSON file")->required();
    eval->add_option("--out", out_path, "output directory")->required();
    eval->add_option("--policies", policy_tokens, "policies: linear,safe,penalty")
        ->delimiter(',');
    eval->add_option("--actor", actor_path, "safe-policy checkpoint (default: zero network)");
    eval->add_option("--penalty-actor", penalty_actor_path, "penalty-policy checkpoint");
    eval->add_flag("--paired", paired, "report paired cost differences vs linear");
    eval->add_option("--episodes", episodes, "evaluation episodes");
    eval->add_option("--steps", steps, "steps per episode");
    eval->add_option("--seed", seed, "evaluation seed");

    CLI::App* roll = app.add_subcommand("rollout", "Roll one episode to a trajectory CSV");
    roll->add_option("--case", case_path, "case JSON file")->required();
    roll->add_option("--cert", cert_path, "certificate JSON file")->required();
    roll->add_option("--out", out_path, "output CSV path")->required();
    roll->add_option("--policy", policy, "linear | safe | penalty")
        ->check(CLI::IsMember({"linear", "safe", "penalty"}));
    roll->add_option("--actor", actor_path, "checkpoint for safe/penalty policies");
    roll->add_option("--steps", steps, "episode length");
    roll->add_option("--episode", episode, "episode index (stream selector)");
    roll->add_option("--seed", seed, "run seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const bool in_synth = synth->parsed();
    try {
        if (in_synth) return cmd_synth(case_path, out_path, max_iter);
        if (verify->parsed()) return cmd_verify(case_path, cert_path, out_path);
        if (train->parsed()) {
            if (!config_path.empty()) {
                TrainConfig merged;
                apply_config_json(merged, load_json_file(config_path));
                // explicit flags win over the config file
                if (train->count("--episodes")) merged.episodes = cfg.episodes;
                if (train->count("--steps")) merged.steps_per_episode = cfg.steps_per_episode;
                if (train->count("--batch")) merged.batch = cfg.batch;
                if (train->count("--warmup")) merged.warmup = cfg.warmup;
                if (train->count("--actor-lr")) merged.actor_lr = cfg.actor_lr;
                if (train->count("--critic-lr")) merged.critic_lr = cfg.critic_lr;
                if (train->count("--sigma")) merged.noise_sigma = cfg.noise_sigma;
                if (train->count("--sigma-floor")) merged.noise_floor = cfg.noise_floor;
                if (train->count("--lambda")) merged.lambda = cfg.lambda;
                if (train->count("--hidden")) merged.hidden = cfg.hidden;
                cfg = merged;
            }
            if (train->count("--seed")) cfg.seed = seed;
            cfg.validate();
            return cmd_train(case_path, cert_path, out_path, policy, cfg);
        }
        if (eval->parsed())
            return cmd_eval(case_path, cert_path, out_path, policy_tokens, actor_path,
                            penalty_actor_path, paired, episodes, steps, seed);
        if (roll->parsed())
            return cmd_rollout(case_path, cert_path, out_path, policy, actor_path, steps, episode,
                               seed);
    } catch (const CertificateInvalid& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const TrainingAborted& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 5;
    } catch (const NoValidGain& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const NotConverged& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return in_synth ? 3 : 1;
    } catch (const EmptyInterior& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return in_synth ? 3 : 1;
    } catch (const DisconnectedNetwork& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const SingularInertia& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const NonBoxInputSet& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const DimensionMismatch& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const NotACSet& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const InvalidInput& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

}  // namespace gaugerl
