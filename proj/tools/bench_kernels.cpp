// Latency and throughput probes for the hot kernels: the safety filter's
// closed-form action map, certificate verification, and paired evaluation.
// Usage: bench_kernels [case.json [certificate.json]]; defaults target the
// bundled 9-bus case after `gaugerl synth` has produced its certificate.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "gaugerl/io.hpp"
#include "gaugerl/policy.hpp"

using namespace gaugerl;
using Clock = std::chrono::steady_clock;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

RciCertificate synth_default(const SafetySystem& sys, const CostWeights& w) {
    const MatrixXd Q = MatrixXd(w.q_diag.asDiagonal());
    const MatrixXd R = w.r * MatrixXd::Identity(sys.m(), sys.m());
    std::vector<MatrixXd> cands;
    for (double rs : {0.1, 1.0, 10.0}) {
        MatrixXd K = dare_gain(sys.A, sys.B, Q, rs * R);
        if (K.size()) cands.push_back(K);
    }
    cands.push_back(MatrixXd::Zero(sys.m(), sys.n()));
    return gain_search(sys, cands);
}

}  // namespace

int main(int argc, char** argv) {
    const std::string case_path = argc > 1 ? argv[1] : "cases/ieee9.json";
    const CaseSpec spec = case_from_json(load_json_file(case_path));
    const SafetySystem& sys = spec.sys;

    RciCertificate cert;
    if (argc > 2) {
        cert = certificate_from_json(load_json_file(argv[2]), sys);
    } else {
        const auto t0 = Clock::now();
        cert = synth_default(sys, spec.weights);
        std::printf("synth: %.1f ms (certificate rows %d)\n", ms_since(t0), cert.r());
    }

    const SafePolicy filter(cert, sys);
    const PolytopeSampler sample(scale(cert.S(), 0.5));
    Rng rng(17);

    const int warm = 1000, reps = 20000;
    std::vector<VectorXd> xs(reps), vs(reps);
    for (int i = 0; i < reps; ++i) {
        xs[i] = sample(rng);
        vs[i] = VectorXd::NullaryExpr(sys.m(), [&](Eigen::Index) { return rng.uniform(-1, 1); });
    }
    VectorXd sink = VectorXd::Zero(sys.m());
    for (int i = 0; i < warm; ++i) sink += filter.act_safe(xs[i % reps], vs[i % reps]);

    std::vector<double> lat(reps);
    for (int i = 0; i < reps; ++i) {
        const auto t0 = Clock::now();
        sink += filter.act_safe(xs[i], vs[i]);
        lat[i] = std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
    }
    std::sort(lat.begin(), lat.end());
    std::printf("act_safe (n=%d, m=%d, %d certificate rows): median %.2f us, p99 %.2f us, max %.2f us\n",
                sys.n(), sys.m(), cert.r(), lat[reps / 2], lat[reps * 99 / 100], lat.back());

    for (const ExecMode mode : {ExecMode::Serial, ExecMode::Parallel}) {
        const char* tag = mode == ExecMode::Serial ? "serial  " : "parallel";
        const auto t0 = Clock::now();
        int runs = 0;
        while (ms_since(t0) < 500.0) {
            verify_certificate(cert, sys, default_tols(), mode);
            ++runs;
        }
        std::printf("verify_certificate %s: %.2f ms/run (%d runs)\n", tag,
                    ms_since(t0) / runs, runs);
    }

    Environment env;
    env.sys = sys;
    env.weights = spec.weights;
    env.alpha = spec.alpha;
    env.x0_set = scale(cert.S(), 0.5);
    env.angle_dims = spec.angle_dims;
    const MatrixXd K = cert.K;
    std::vector<NamedPolicy> pols{
        {"linear", [K](const VectorXd& x) { return act_linear(K, x); }},
        {"safe_zero", [&filter, m = sys.m()](const VectorXd& x) {
             return filter.act_safe(x, VectorXd::Zero(m));
         }}};
    for (const ExecMode mode : {ExecMode::Serial, ExecMode::Parallel}) {
        const char* tag = mode == ExecMode::Serial ? "serial  " : "parallel";
        const auto t0 = Clock::now();
        evaluate(env, pols, 50, 100, 7, mode);
        std::printf("evaluate %s: %.1f ms (2 policies x 50 episodes x 100 steps)\n", tag,
                    ms_since(t0));
    }

    std::printf("checksum %.6g\n", sink.sum());
    return 0;
}
