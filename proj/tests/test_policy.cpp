#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "gaugerl/errors.hpp"
#include "gaugerl/invariance.hpp"
#include "gaugerl/plant.hpp"
#include "gaugerl/policy.hpp"
#include "gaugerl/rng.hpp"
#include "oracles.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace gaugerl;

namespace {

SafetySystem scalar_system() {
    SafetySystem sys;
    sys.A = MatrixXd::Constant(1, 1, 1.2);
    sys.B = MatrixXd::Constant(1, 1, 1.0);
    sys.E = MatrixXd::Constant(1, 1, 1.0);
    sys.U = HPolytope::box(VectorXd::Constant(1, 0.4));
    sys.D = HPolytope::box(VectorXd::Constant(1, 0.1));
    sys.X = HPolytope::box(VectorXd::Constant(1, 1.0));
    return sys;
}

RciCertificate scalar_certificate(const SafetySystem& sys) {
    return make_certificate(sys, MatrixXd::Identity(1, 1), VectorXd::Constant(1, 0.8),
                            MatrixXd::Constant(1, 1, -0.5));
}

SafetySystem double_integrator() {
    SafetySystem sys;
    sys.A.resize(2, 2);
    sys.A << 1.0, 0.1, 0.0, 1.0;
    sys.B.resize(2, 1);
    sys.B << 0.005, 0.1;
    sys.E.resize(2, 1);
    sys.E << 0.0, 0.1;
    sys.U = HPolytope::box(VectorXd::Constant(1, 1.0));
    sys.D = HPolytope::box(VectorXd::Constant(1, 0.1));
    sys.X = HPolytope::box(VectorXd::Constant(2, 1.0));
    return sys;
}

RciCertificate integrator_certificate(const SafetySystem& sys) {
    const MatrixXd K =
        dare_gain(sys.A, sys.B, MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 1));
    REQUIRE(K.size() == 2);
    const HPolytope S = max_rpi_for_gain(sys, K, 500, 1e-9);
    const auto [V, sbar] = split_symmetric(S);
    RciCertificate cert = make_certificate(sys, V, sbar, K);
    REQUIRE(verify_certificate(cert, sys).valid);
    return cert;
}

SafetySystem rotation_system(double contraction, double angle, double dbar) {
    SafetySystem sys;
    const double c = std::cos(angle), s = std::sin(angle);
    sys.A.resize(2, 2);
    sys.A << c, -s, s, c;
    sys.A *= contraction;
    sys.B = MatrixXd::Zero(2, 1);
    sys.E = MatrixXd::Identity(2, 2);
    sys.U = HPolytope::box(VectorXd::Constant(1, 1.0));
    sys.D = HPolytope::box(VectorXd::Constant(2, dbar));
    sys.X = HPolytope::unit_box(2);
    return sys;
}

VectorXd random_unit_cube(int m, Rng& rng, bool allow_corner) {
    VectorXd v(m);
    for (int i = 0; i < m; ++i) v(i) = rng.uniform(-1.0, 1.0);
    if (allow_corner)
        for (int i = 0; i < m; ++i) v(i) = v(i) >= 0.0 ? 1.0 : -1.0;
    return v;
}

// Rejects points where the gauge-map branch could switch under an FD probe:
// the largest |v_j| and the largest constraint ratio must both be isolated.
bool branch_is_isolated(const HPolytope& Q, const VectorXd& v) {
    VectorXd av = v.cwiseAbs();
    double a1 = -1.0, a2 = -1.0;
    for (int i = 0; i < av.size(); ++i) {
        if (av(i) > a1) {
            a2 = a1;
            a1 = av(i);
        } else if (av(i) > a2) {
            a2 = av(i);
        }
    }
    if (av.size() > 1 && a1 - a2 < 1e-3) return false;
    VectorXd ratios = (Q.F * v).cwiseQuotient(Q.g);
    double r1 = -1e300, r2 = -1e300;
    for (int i = 0; i < ratios.size(); ++i) {
        if (ratios(i) > r1) {
            r2 = r1;
            r1 = ratios(i);
        } else if (ratios(i) > r2) {
            r2 = ratios(i);
        }
    }
    return r1 - r2 > 1e-3;
}

}  // namespace

TEST_CASE("scalar safe actions match the hand-computed window") {
    const auto sys = scalar_system();
    const auto cert = scalar_certificate(sys);
    REQUIRE(verify_certificate(cert, sys).valid);
    const SafePolicy pol(cert, sys);

    const VectorXd x = VectorXd::Constant(1, 0.5);
    // Safe inputs at x = 0.5 form [-0.4, 0.1]; Kx = -0.25 sits inside.
    CHECK(pol.act_safe(x, VectorXd::Constant(1, 1.0))(0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(pol.act_safe(x, VectorXd::Constant(1, -1.0))(0) == doctest::Approx(-0.4).epsilon(1e-12));
    CHECK(pol.act_safe(x, VectorXd::Constant(1, 0.5))(0) == doctest::Approx(-0.075).epsilon(1e-12));
    CHECK(pol.act_safe(x, VectorXd::Zero(1))(0) == -0.25);

    const HPolytope omega = pol.shifted_set(x);
    CHECK(contains(omega, VectorXd::Zero(1), 1e-12));
    CHECK(support(omega, VectorXd::Constant(1, 1.0)) == doctest::Approx(0.35));
    CHECK(support(omega, VectorXd::Constant(1, -1.0)) == doctest::Approx(0.15));
}

TEST_CASE("shifted set agrees with the reference constructor") {
    const auto sys = double_integrator();
    const auto cert = integrator_certificate(sys);
    const SafePolicy pol(cert, sys);
    PolytopeSampler sample(cert.S());
    Rng rng(7);
    for (int t = 0; t < 50; ++t) {
        const VectorXd x = sample(rng);
        const HPolytope mine = pol.shifted_set(x);
        const HPolytope ref = shifted_safe_action_set(cert, sys, x);
        for (int k = 0; k < 20; ++k) {
            const VectorXd v = random_unit_cube(1, rng, false);
            if (v.cwiseAbs().maxCoeff() < 1e-6) continue;
            CHECK(gauge_function(mine, v).value ==
                  doctest::Approx(gauge_function(ref, v).value).epsilon(1e-10));
        }
    }
}

TEST_CASE("actions stay safe by construction") {
    Rng rng(11);
    long trials_done = 0;

    auto run_trials = [&](const SafetySystem& sys, const RciCertificate& cert, int trials) {
        const SafePolicy pol(cert, sys);
        const HPolytope S = cert.S();
        PolytopeSampler sample(S);
        const auto dverts = oracles::enumerate_vertices(sys.D);
        REQUIRE(!dverts.empty());
        int fallbacks = 0;
        for (int t = 0; t < trials; ++t) {
            const VectorXd x = sample(rng);
            const VectorXd v = random_unit_cube(sys.m(), rng, t % 7 == 0);
            const VectorXd u = pol.act_safe(x, v);
            if ((u - act_linear(cert.K, x)).cwiseAbs().maxCoeff() == 0.0) ++fallbacks;
            REQUIRE(contains(sys.U, u, 1e-9));
            const VectorXd base = sys.A * x + sys.B * u;
            for (const auto& d : dverts) REQUIRE(contains(S, base + sys.E * d, 1e-8));
            ++trials_done;
        }
        // The sampler draws interior points, so the gauge branch must carry
        // most of the load; the fallback band is measure-zero up to eps.
        CHECK(fallbacks < trials / 10);
    };

    const auto ssys = scalar_system();
    run_trials(ssys, scalar_certificate(ssys), 50000);
    const auto dsys = double_integrator();
    run_trials(dsys, integrator_certificate(dsys), 50000);
    CHECK(trials_done == 100000);
}

TEST_CASE("zero virtual action recovers the linear policy bitwise") {
    const auto sys = double_integrator();
    const auto cert = integrator_certificate(sys);
    const SafePolicy pol(cert, sys);
    PolytopeSampler sample(cert.S());
    Rng rng(23);
    const VectorXd zero = VectorXd::Zero(1);
    for (int t = 0; t < 10000; ++t) {
        const VectorXd x = sample(rng);
        const VectorXd u = pol.act_safe(x, zero);
        const VectorXd ulin = act_linear(cert.K, x);
        REQUIRE(u.size() == ulin.size());
        for (int i = 0; i < u.size(); ++i) REQUIRE(u(i) == ulin(i));
    }
}

TEST_CASE("input-independent certificate rows are dropped but still checked") {
    const auto sys = double_integrator();
    const auto cert = integrator_certificate(sys);

    // Append a row orthogonal to B: 0.1*0.005 - 0.005*0.1 vanishes exactly.
    MatrixXd V2(cert.Vs.rows() + 1, 2);
    V2.topRows(cert.Vs.rows()) = cert.Vs;
    V2.row(V2.rows() - 1) << 0.1, -0.005;
    VectorXd s2(cert.s_bar.size() + 1);
    s2.head(cert.s_bar.size()) = cert.s_bar;
    s2(s2.size() - 1) = 2.0;  // loose: the new row never binds inside X
    const RciCertificate aug = make_certificate(sys, V2, s2, cert.K);
    REQUIRE(verify_certificate(aug, sys).valid);

    const SafePolicy base(cert, sys);
    const SafePolicy wide(aug, sys);
    CHECK(wide.shifted_set(VectorXd::Zero(2)).rows() ==
          base.shifted_set(VectorXd::Zero(2)).rows());

    PolytopeSampler sample(aug.S());
    Rng rng(31);
    for (int t = 0; t < 200; ++t) {
        const VectorXd x = sample(rng);
        const VectorXd v = random_unit_cube(1, rng, false);
        CHECK((wide.act_safe(x, v) - base.act_safe(x, v)).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("input-free system reduces to the plain gauge map on U") {
    const auto sys = rotation_system(0.9, 0.5, 0.02);
    const HPolytope S = max_rpi_for_gain(sys, MatrixXd::Zero(1, 2), 500, 1e-9);
    const auto [V, sbar] = split_symmetric(S);
    const RciCertificate cert = make_certificate(sys, V, sbar, MatrixXd::Zero(1, 2));
    REQUIRE(verify_certificate(cert, sys).valid);
    const SafePolicy pol(cert, sys);

    PolytopeSampler sample(cert.S());
    Rng rng(37);
    for (int t = 0; t < 100; ++t) {
        const VectorXd x = sample(rng);
        const VectorXd v = random_unit_cube(1, rng, t % 5 == 0);
        // B = 0 drops every certificate row; U is the unit box, so the gauge
        // map is the identity and Kx = 0.
        CHECK((pol.act_safe(x, v) - v).cwiseAbs().maxCoeff() <= 1e-12);
    }
    const VectorXd u0 = pol.act_safe(sample(rng), VectorXd::Zero(1));
    CHECK(u0(0) == 0.0);
}

TEST_CASE("tight certificate falls back to the linear action at the boundary") {
    SafetySystem sys = scalar_system();
    sys.D = HPolytope::box(VectorXd::Constant(1, 0.24));
    const RciCertificate cert = make_certificate(sys, MatrixXd::Identity(1, 1),
                                                 VectorXd::Constant(1, 0.8),
                                                 MatrixXd::Constant(1, 1, -0.5));
    const auto rep = verify_certificate(cert, sys);
    REQUIRE(rep.valid);
    CHECK(rep.min_slack == doctest::Approx(0.0).epsilon(1e-12));

    const SafePolicy pol(cert, sys);
    const VectorXd v = VectorXd::Constant(1, 0.7);

    // At x = 0.8 the shifted set degenerates to the point {0}.
    const VectorXd xb = VectorXd::Constant(1, 0.8);
    CHECK(pol.act_safe(xb, v)(0) == act_linear(cert.K, xb)(0));
    CHECK(pol.act_safe_backward(xb, v).cwiseAbs().maxCoeff() == 0.0);

    // Just inside the band the fallback still rules.
    const VectorXd xn = VectorXd::Constant(1, 0.8 * (1.0 - 1e-9));
    CHECK(pol.act_safe(xn, v)(0) == act_linear(cert.K, xn)(0));

    // Deep inside the set the gauge branch is live again.
    const VectorXd xi = VectorXd::Constant(1, 0.4);
    CHECK(pol.act_safe(xi, v)(0) != act_linear(cert.K, xi)(0));
    CHECK(pol.act_safe_backward(xi, v).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("act_safe rejects bad inputs") {
    const auto sys = scalar_system();
    const SafePolicy pol(scalar_certificate(sys), sys);
    CHECK_THROWS_AS(pol.act_safe(VectorXd::Constant(1, 0.9), VectorXd::Zero(1)), StateOutsideS);
    CHECK_THROWS_AS(pol.act_safe(VectorXd::Constant(1, 0.5), VectorXd::Constant(1, 1.1)),
                    InvalidInput);
    CHECK_THROWS_AS(pol.act_safe(VectorXd::Zero(2), VectorXd::Zero(1)), DimensionMismatch);
    CHECK_THROWS_AS(pol.act_safe(VectorXd::Zero(1), VectorXd::Zero(2)), DimensionMismatch);
    CHECK_THROWS_AS(pol.act_safe_backward(VectorXd::Constant(1, 0.9), VectorXd::Zero(1)),
                    StateOutsideS);
}

TEST_CASE("act_safe_backward matches finite differences off tie points") {
    const auto sys = double_integrator();
    const auto cert = integrator_certificate(sys);
    const SafePolicy pol(cert, sys);
    PolytopeSampler sample(cert.S());
    Rng rng(41);
    const double h = 1e-6;
    int checked = 0;
    for (int t = 0; t < 500 && checked < 60; ++t) {
        const VectorXd x = sample(rng);
        VectorXd v = random_unit_cube(1, rng, false) * 0.9;
        if (v.cwiseAbs().maxCoeff() < 1e-3) continue;
        const HPolytope omega = pol.shifted_set(x);
        if ((omega.g.array() / omega.F.cwiseAbs().rowwise().maxCoeff().array()).minCoeff() <
            1e-4)
            continue;
        if (!branch_is_isolated(omega, v)) continue;

        const MatrixXd J = pol.act_safe_backward(x, v);
        for (int j = 0; j < v.size(); ++j) {
            VectorXd vp = v, vm = v;
            vp(j) += h;
            vm(j) -= h;
            const VectorXd col = (pol.act_safe(x, vp) - pol.act_safe(x, vm)) / (2.0 * h);
            const double scale = std::max(1.0, col.cwiseAbs().maxCoeff());
            CHECK((J.col(j) - col).cwiseAbs().maxCoeff() <= 1e-5 * scale);
        }
        // Positive homogeneity: J(v) v equals the mapped offset from Kx.
        const VectorXd G = pol.act_safe(x, v) - act_linear(cert.K, x);
        CHECK((J * v - G).cwiseAbs().maxCoeff() <= 1e-9);
        ++checked;
    }
    CHECK(checked >= 50);
}

TEST_CASE("backward at zero matches the one-sided directional derivative") {
    const auto sys = double_integrator();
    const auto cert = integrator_certificate(sys);
    const SafePolicy pol(cert, sys);
    PolytopeSampler sample(cert.S());
    Rng rng(43);
    const double h = 1e-7;
    int checked = 0;
    for (int t = 0; t < 100 && checked < 20; ++t) {
        const VectorXd x = sample(rng);
        const HPolytope omega = pol.shifted_set(x);
        if ((omega.g.array() / omega.F.cwiseAbs().rowwise().maxCoeff().array()).minCoeff() <
            1e-4)
            continue;
        const MatrixXd J0 = pol.act_safe_backward(x, VectorXd::Zero(1));
        VectorXd e0 = VectorXd::Zero(1);
        e0(0) = h;
        const VectorXd col =
            (pol.act_safe(x, e0) - pol.act_safe(x, VectorXd::Zero(1))) / h;
        const double scale = std::max(1.0, col.cwiseAbs().maxCoeff());
        CHECK((J0.col(0) - col).cwiseAbs().maxCoeff() <= 1e-4 * scale);
        ++checked;
    }
    CHECK(checked >= 20);
}

TEST_CASE("closed loop never leaves the certified set") {
    const auto sys = double_integrator();
    const auto cert = integrator_certificate(sys);
    const SafePolicy pol(cert, sys);
    const HPolytope S = cert.S();
    PolytopeSampler sample(S);
    const auto dverts = oracles::enumerate_vertices(sys.D);
    Rng rng(53);
    for (int run = 0; run < 20; ++run) {
        VectorXd x = sample(rng);
        for (int t = 0; t < 400; ++t) {
            const VectorXd v = random_unit_cube(1, rng, t % 7 == 0);
            const VectorXd u = pol.act_safe(x, v);
            const VectorXd d = dverts[rng.below(dverts.size())];
            x = sys.A * x + sys.B * u + sys.E * d;
            REQUIRE(contains(S, x, 1e-8));
            REQUIRE(violation(sys.X, x) <= 1e-8);
        }
    }
}

TEST_CASE("rollout with a random network policy stays violation-free") {
    const auto sys = double_integrator();
    const auto cert = integrator_certificate(sys);
    const SafePolicy pol(cert, sys);

    Rng wrng(substream_seed(99, kStreamWeights));
    MlpConfig cfg;
    cfg.in = 2;
    cfg.hidden = {32, 32};
    cfg.out = 1;
    cfg.head = Head::ScaledSigmoid;
    cfg.head_steepness = 2.0;
    const Mlp psi(cfg, wrng);

    CostWeights w;
    w.q_diag = VectorXd::Ones(2);
    w.r = 1.0;
    const DisturbanceModel dm(0.8, sys.D);
    PolytopeSampler sample(cert.S());

    PolicyFn policy = [&](const VectorXd& x) { return pol.act_safe(x, psi.forward(x)); };
    for (int ep = 0; ep < 20; ++ep) {
        const Trajectory traj = rollout(sys, w, dm, sample, policy, 100, 99, ep);
        CHECK(traj.violation_count(1e-8) == 0);
    }
}

TEST_CASE("penalty policy scales the unit head into the input box") {
    Rng rng(61);
    MlpConfig cfg;
    cfg.in = 2;
    cfg.hidden = {16};
    cfg.out = 2;
    cfg.head = Head::ScaledSigmoid;
    cfg.head_steepness = 2.0;
    const Mlp net(cfg, rng);

    VectorXd ubar(2);
    ubar << 0.3, 2.0;
    for (int t = 0; t < 200; ++t) {
        VectorXd x(2);
        x << rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0);
        const VectorXd u = act_penalty(net, ubar, x);
        CHECK(std::abs(u(0)) <= 0.3);
        CHECK(std::abs(u(1)) <= 2.0);
        CHECK((u - ubar.cwiseProduct(net.forward(x))).cwiseAbs().maxCoeff() == 0.0);
    }

    MlpConfig bad = cfg;
    bad.head = Head::Identity;
    const Mlp raw(bad, rng);
    CHECK_THROWS_AS(act_penalty(raw, ubar, VectorXd::Zero(2)), InvalidInput);
}

TEST_CASE("box half-widths demand an exact symmetric axis box") {
    const VectorXd hw = (VectorXd(3) << 0.5, 1.5, 2.0).finished();
    CHECK(box_half_widths(HPolytope::box(hw)) == hw);

    HPolytope diamond;
    diamond.F.resize(4, 2);
    diamond.F << 1, 1, 1, -1, -1, 1, -1, -1;
    diamond.g = VectorXd::Ones(4);
    CHECK_THROWS_AS(box_half_widths(diamond), NonBoxInputSet);

    HPolytope lopsided;
    lopsided.F.resize(4, 2);
    lopsided.F << 1, 0, 0, 1, -1, 0, 0, -1;
    lopsided.g = (VectorXd(4) << 1.0, 2.0, 1.0, 3.0).finished();
    CHECK_THROWS_AS(box_half_widths(lopsided), NonBoxInputSet);
}
