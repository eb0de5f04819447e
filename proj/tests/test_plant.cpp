#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "gaugerl/errors.hpp"
#include "gaugerl/plant.hpp"
#include "oracles.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace gaugerl;

namespace {

// Star-delta oracle: eliminates buses one at a time instead of the block
// Schur complement the library uses. `keep` lists matrix indices to retain,
// in the desired output order.
MatrixXd eliminate_one_by_one(MatrixXd L, const std::vector<int>& keep) {
    std::vector<int> alive(L.rows());
    for (int i = 0; i < L.rows(); ++i) alive[i] = i;
    const auto is_kept = [&](int orig) {
        for (int k : keep)
            if (k == orig) return true;
        return false;
    };

    bool removed = true;
    while (removed) {
        removed = false;
        for (size_t pos = 0; pos < alive.size(); ++pos) {
            if (is_kept(alive[pos])) continue;
            const int k = static_cast<int>(pos);
            const int nn = static_cast<int>(L.rows());
            MatrixXd Ln(nn - 1, nn - 1);
            std::vector<int> next_alive;
            int r = 0;
            for (int i = 0; i < nn; ++i) {
                if (i == k) continue;
                next_alive.push_back(alive[i]);
                int c = 0;
                for (int j = 0; j < nn; ++j) {
                    if (j == k) continue;
                    Ln(r, c) = L(i, j) - L(i, k) * L(k, j) / L(k, k);
                    ++c;
                }
                ++r;
            }
            L = Ln;
            alive = next_alive;
            removed = true;
            break;
        }
    }

    MatrixXd out(keep.size(), keep.size());
    const auto pos_of = [&](int orig) {
        for (size_t i = 0; i < alive.size(); ++i)
            if (alive[i] == orig) return static_cast<int>(i);
        throw std::runtime_error("oracle lost a kept bus");
    };
    for (size_t i = 0; i < keep.size(); ++i)
        for (size_t j = 0; j < keep.size(); ++j) out(i, j) = L(pos_of(keep[i]), pos_of(keep[j]));
    return out;
}

GridCase two_gen_series() {
    GridCase gc;
    gc.generators = {{1, 2.0, 0.5}, {2, 1.0, 0.3}};
    gc.lines = {{1, 3, 2.0}, {3, 2, 4.0}};
    gc.inverters = {{3, 0.5}};
    gc.loads = {{3, 0.1}};
    return gc;
}

GridCase mesh_case() {
    GridCase gc;
    gc.generators = {{4, 3.0, 0.4}, {2, 1.5, 0.2}};  // listed out of bus order
    gc.lines = {{4, 1, 2.0}, {1, 3, 1.5}, {3, 2, 1.0}, {1, 5, 0.8}, {5, 2, 1.2}};
    gc.inverters = {{1, 0.4}, {2, 0.3}};
    gc.loads = {{5, 0.05}, {3, 0.08}};
    return gc;
}

}  // namespace

TEST_CASE("single line between generators gives the textbook stiffness") {
    GridCase gc;
    gc.generators = {{1, 1.0, 0.1}, {2, 1.0, 0.1}};
    gc.lines = {{1, 2, 3.0}};
    gc.inverters = {{1, 0.5}};
    gc.loads = {{2, 0.1}};
    const MatrixXd K = dc_stiffness(gc);
    MatrixXd expect(2, 2);
    expect << 3.0, -3.0, -3.0, 3.0;
    CHECK((K - expect).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("series reduction combines susceptances like series admittances") {
    const MatrixXd K = dc_stiffness(two_gen_series());
    const double beff = 2.0 * 4.0 / (2.0 + 4.0);
    MatrixXd expect(2, 2);
    expect << beff, -beff, -beff, beff;
    CHECK((K - expect).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("block reduction matches one-at-a-time elimination") {
    const GridCase gc = mesh_case();
    const MatrixXd K = dc_stiffness(gc);

    // Buses sorted by id: 1,2,3,4,5 -> indices 0..4. Generators listed at
    // buses 4 then 2, so keep indices {3, 1} in that order.
    MatrixXd L = MatrixXd::Zero(5, 5);
    const auto add = [&](int a, int b, double s) {
        L(a, a) += s;
        L(b, b) += s;
        L(a, b) -= s;
        L(b, a) -= s;
    };
    add(3, 0, 2.0);
    add(0, 2, 1.5);
    add(2, 1, 1.0);
    add(0, 4, 0.8);
    add(4, 1, 1.2);

    const MatrixXd expect = eliminate_one_by_one(L, {3, 1});
    CHECK((K - expect).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("injection map spreads interior injections onto generators") {
    const GridCase gc = two_gen_series();
    const MatrixXd T = injection_map(gc, {3});
    // closer (stiffer) generator takes the larger share
    CHECK(std::abs(T(0, 0) - 2.0 / 6.0) < 1e-12);
    CHECK(std::abs(T(1, 0) - 4.0 / 6.0) < 1e-12);

    const MatrixXd Tg = injection_map(gc, {2, 1});
    CHECK((Tg.col(0) - Eigen::Vector2d(0.0, 1.0)).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((Tg.col(1) - Eigen::Vector2d(1.0, 0.0)).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("injection columns are nonnegative and sum to one") {
    const GridCase gc = mesh_case();
    const MatrixXd T = injection_map(gc, {1, 3, 5, 2});
    for (int j = 0; j < T.cols(); ++j) {
        CHECK(T.col(j).minCoeff() >= -1e-12);
        CHECK(std::abs(T.col(j).sum() - 1.0) < 1e-10);
    }
}

TEST_CASE("disconnected networks are rejected") {
    GridCase gc;
    gc.generators = {{1, 1.0, 0.1}, {4, 1.0, 0.1}};
    gc.lines = {{1, 2, 1.0}, {3, 4, 1.0}};  // two islands
    gc.inverters = {{2, 0.5}};
    gc.loads = {{3, 0.1}};
    CHECK_THROWS_AS(dc_stiffness(gc), DisconnectedNetwork);
    CHECK_THROWS_AS(build_dynamics(gc), DisconnectedNetwork);
}

TEST_CASE("nonpositive inertia is rejected") {
    GridCase gc = two_gen_series();
    gc.generators[1].inertia = 0.0;
    CHECK_THROWS_AS(build_dynamics(gc), SingularInertia);
}

TEST_CASE("discrete blocks follow the forward-Euler layout") {
    GridCase gc = mesh_case();
    gc.tau = 0.05;
    const PlantModel pm = build_dynamics(gc);
    const int ng = pm.ngen;
    REQUIRE(ng == 2);

    CHECK((pm.sys.A.topLeftCorner(ng, ng) - MatrixXd::Identity(ng, ng)).lpNorm<Eigen::Infinity>() ==
          0.0);
    CHECK((pm.sys.A.topRightCorner(ng, ng) - 0.05 * MatrixXd::Identity(ng, ng))
              .lpNorm<Eigen::Infinity>() < 1e-15);
    // frequency rows: -tau * Minv * stiffness
    MatrixXd minv = MatrixXd::Zero(ng, ng);
    minv(0, 0) = 1.0 / 3.0;
    minv(1, 1) = 1.0 / 1.5;
    CHECK((pm.sys.A.bottomLeftCorner(ng, ng) + 0.05 * minv * pm.stiffness)
              .lpNorm<Eigen::Infinity>() < 1e-14);
    CHECK((pm.sys.B.topRows(ng)).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((pm.sys.E.topRows(ng)).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(pm.sys.E.bottomRows(ng).maxCoeff() <= 0.0);  // load increase decelerates

    GridCase lit = gc;
    lit.unscaled_input_blocks = true;
    const PlantModel pl = build_dynamics(lit);
    CHECK((pl.sys.B - pm.sys.B / 0.05).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((pl.sys.E - pm.sys.E / 0.05).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("Euler discretization error shrinks linearly in the step") {
    const GridCase gc = mesh_case();
    const PlantModel pm = build_dynamics(gc);
    const auto err = [&](double tau) {
        const MatrixXd Ad = MatrixXd::Identity(4, 4) + tau * pm.a_cont;
        return (Ad - oracles::expm(pm.a_cont * tau)).lpNorm<Eigen::Infinity>() / tau;
    };
    CHECK(err(0.005) < err(0.05) / 5.0);
}

TEST_CASE("AR disturbance stays inside its set with the right statistics") {
    const HPolytope D = HPolytope::box(Eigen::Vector2d(0.1, 0.2));
    const DisturbanceModel dm(0.8, D);
    Rng rng(substream_seed(3, kStreamDisturbance, 0));
    VectorXd d = dm.init(rng);
    const int N = 20000;
    double mean0 = 0.0, auto_num = 0.0, auto_den = 0.0;
    double prev = d[0];
    for (int t = 0; t < N; ++t) {
        CHECK(contains(D, d, 0.0));
        mean0 += d[0];
        if (t > 0) {
            auto_num += prev * d[0];
        }
        auto_den += d[0] * d[0];
        prev = d[0];
        d = dm.step(d, rng);
    }
    mean0 /= N;
    CHECK(std::abs(mean0) < 5e-3);
    CHECK(std::abs(auto_num / auto_den - 0.8) < 0.05);
}

TEST_CASE("polytope sampler covers its box and respects membership") {
    const HPolytope B = HPolytope::box(Eigen::Vector2d(0.5, 1.0));
    const PolytopeSampler sampler(B);
    Rng rng(substream_seed(3, kStreamX0, 1));
    double max0 = -1e30, min0 = 1e30;
    for (int t = 0; t < 2000; ++t) {
        const VectorXd x = sampler(rng);
        CHECK(contains(B, x, 0.0));
        max0 = std::max(max0, x[0]);
        min0 = std::min(min0, x[0]);
    }
    CHECK(max0 > 0.45);
    CHECK(min0 < -0.45);

    // non-box target: diamond inscribed in the unit square
    MatrixXd F(4, 2);
    F << 1, 1, 1, -1, -1, 1, -1, -1;
    const HPolytope diamond{F, VectorXd::Ones(4)};
    const PolytopeSampler ds(diamond);
    for (int t = 0; t < 500; ++t) CHECK(contains(diamond, ds(rng), 0.0));
}

TEST_CASE("stage cost is the weighted quadratic") {
    CostWeights w;
    w.q_diag = Eigen::Vector2d(3.0, 4.0);
    w.r = 2.0;
    VectorXd x(2); x << 1.0, 2.0;
    VectorXd u(1); u << 0.5;
    CHECK(std::abs(stage_cost(x, u, w) - (3.0 + 16.0 + 0.5)) < 1e-15);
}

TEST_CASE("rollout is reproducible and internally consistent") {
    const GridCase gc = mesh_case();
    const PlantModel pm = build_dynamics(gc);
    const CostWeights w = cost_weights(gc);
    const DisturbanceModel dm(gc.alpha, pm.sys.D);
    const PolytopeSampler x0(scale(pm.sys.X, 0.25));
    const PolicyFn zero = [&](const VectorXd&) { return VectorXd::Zero(pm.sys.m()); };

    const Trajectory a = rollout(pm.sys, w, dm, x0, zero, 50, 99, 7);
    const Trajectory b = rollout(pm.sys, w, dm, x0, zero, 50, 99, 7);
    CHECK((a.xs - b.xs).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((a.ds - b.ds).lpNorm<Eigen::Infinity>() == 0.0);

    const Trajectory c = rollout(pm.sys, w, dm, x0, zero, 50, 99, 8);
    CHECK((a.xs - c.xs).lpNorm<Eigen::Infinity>() > 0.0);

    for (int t = 0; t < 50; ++t) {
        const VectorXd x = a.xs.row(t).transpose();
        const VectorXd u = a.us.row(t).transpose();
        const VectorXd d = a.ds.row(t).transpose();
        CHECK(std::abs(a.costs[t] - stage_cost(x, u, w)) < 1e-15);
        const VectorXd xn = pm.sys.A * x + pm.sys.B * u + pm.sys.E * d;
        CHECK((a.xs.row(t + 1).transpose() - xn).lpNorm<Eigen::Infinity>() < 1e-14);
        CHECK(std::abs(a.violations[t] - violation(pm.sys.X, xn)) < 1e-15);
    }
    CHECK(a.accum_cost() == a.costs.sum());
    CHECK(a.max_abs_over(2) <= a.xs.cwiseAbs().maxCoeff());
}
