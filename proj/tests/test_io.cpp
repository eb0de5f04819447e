#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gaugerl/errors.hpp"
#include "gaugerl/io.hpp"
#include "gaugerl/rng.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace gaugerl;

namespace {

MatrixXd random_matrix(int r, int c, Rng& rng) {
    MatrixXd M(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) M(i, j) = rng.uniform(-3.0, 3.0);
    return M;
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

GridCase two_gen_case() {
    GridCase gc;
    gc.generators = {{1, 0.2, 0.3}, {2, 0.15, 0.25}};
    gc.lines = {{1, 3, 2.0}, {3, 2, 4.0}};
    gc.inverters = {{3, 0.1}};
    gc.loads = {{3, 0.05}};
    return gc;
}

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("matrices and vectors survive a JSON round trip bitwise") {
    Rng rng(1);
    const MatrixXd M = random_matrix(4, 3, rng);
    const Json j = Json::parse(matrix_to_json(M).dump());
    CHECK(matrix_from_json(j) == M);

    VectorXd v(5);
    v << 0.1, -0.0, 1.0 / 3.0, 1e-300, 1e300;
    const Json jv = Json::parse(vector_to_json(v).dump());
    const VectorXd w = vector_from_json(jv);
    for (int i = 0; i < v.size(); ++i) CHECK(w(i) == v(i));
}

TEST_CASE("malformed matrix JSON is rejected") {
    CHECK_THROWS_AS(matrix_from_json(Json::parse("[]")), InvalidInput);
    CHECK_THROWS_AS(matrix_from_json(Json::parse("[[1,2],[3]]")), InvalidInput);
    CHECK_THROWS_AS(matrix_from_json(Json::parse("[[1,\"x\"]]")), InvalidInput);
    CHECK_THROWS_AS(vector_from_json(Json::parse("[]")), InvalidInput);
    CHECK_THROWS_AS(polytope_from_json(Json::parse("{\"F\": [[1,0]]}")), InvalidInput);
    CHECK_THROWS_AS(polytope_from_json(Json::parse("{\"F\": [[1,0]], \"g\": [1, 2]}")),
                    InvalidInput);
}

TEST_CASE("system and certificate round trips preserve every matrix") {
    const SafetySystem sys = double_integrator();
    const SafetySystem back = system_from_json(Json::parse(system_to_json(sys).dump()));
    CHECK(back.A == sys.A);
    CHECK(back.B == sys.B);
    CHECK(back.E == sys.E);
    CHECK(back.U.F == sys.U.F);
    CHECK(back.D.g == sys.D.g);
    CHECK(back.X.g == sys.X.g);

    const MatrixXd K =
        dare_gain(sys.A, sys.B, MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 1));
    const HPolytope S = max_rpi_for_gain(sys, K, 500, 1e-9);
    const auto [V, sbar] = split_symmetric(S);
    const RciCertificate cert = make_certificate(sys, V, sbar, K);

    const Json cj = Json::parse(certificate_to_json(cert, Json{{"source", "test"}}).dump());
    CHECK(cj.at("meta").at("source") == "test");
    const RciCertificate back_cert = certificate_from_json(cj, sys);
    CHECK(back_cert.Vs == cert.Vs);
    CHECK(back_cert.s_bar == cert.s_bar);
    CHECK(back_cert.K == cert.K);
    CHECK(back_cert.tighten_hi == cert.tighten_hi);
    CHECK(back_cert.tighten_lo == cert.tighten_lo);
    CHECK(verify_certificate(back_cert, sys).valid);
}

TEST_CASE("grid cases rebuild identical dynamics after a round trip") {
    const GridCase gc = two_gen_case();
    const GridCase back = grid_case_from_json(Json::parse(grid_case_to_json(gc).dump()));
    const PlantModel a = build_dynamics(gc);
    const PlantModel b = build_dynamics(back);
    CHECK(a.sys.A == b.sys.A);
    CHECK(a.sys.B == b.sys.B);
    CHECK(a.sys.E == b.sys.E);
    CHECK(a.sys.X.g == b.sys.X.g);
    CHECK(back.unscaled_input_blocks == false);
}

TEST_CASE("case loader accepts raw systems and grid descriptions") {
    Json raw;
    raw["system"] = system_to_json(double_integrator());
    raw["q_diag"] = Json::array({1.0, 1.0});
    raw["r"] = 1.0;
    raw["alpha"] = 0.7;
    raw["angle_dims"] = 1;
    const CaseSpec rc = case_from_json(raw);
    CHECK(rc.sys.A == double_integrator().A);
    CHECK(rc.alpha == 0.7);
    CHECK(rc.angle_dims == 1);
    CHECK(!rc.grid.has_value());

    const CaseSpec gc = case_from_json(grid_case_to_json(two_gen_case()));
    const PlantModel pm = build_dynamics(two_gen_case());
    CHECK(gc.sys.A == pm.sys.A);
    CHECK(gc.angle_dims == 2);
    CHECK(gc.grid.has_value());
    CHECK(gc.weights.q_diag.size() == 4);

    raw.erase("q_diag");
    CHECK_THROWS_AS(case_from_json(raw), InvalidInput);
}

TEST_CASE("checkpoints restore the network bitwise") {
    MlpConfig cfg;
    cfg.in = 3;
    cfg.hidden = {8, 4};
    cfg.out = 2;
    cfg.head = Head::ScaledSigmoid;
    cfg.head_steepness = 2.0;
    Rng rng(7);
    const Mlp net(cfg, rng);

    const Json j = Json::parse(checkpoint_to_json(net, 12345).dump());
    CHECK(checkpoint_seed(j) == 12345);
    const Mlp back = checkpoint_from_json(j);
    REQUIRE(back.layers().size() == net.layers().size());
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        CHECK(back.layers()[l].W == net.layers()[l].W);
        CHECK(back.layers()[l].b == net.layers()[l].b);
    }
    VectorXd x(3);
    x << 0.2, -0.5, 1.4;
    CHECK(back.forward(x) == net.forward(x));

    Json bad = j;
    bad["version"] = 2;
    CHECK_THROWS_AS(checkpoint_from_json(bad), InvalidInput);
    bad = j;
    bad["hidden"] = Json::array({8});
    CHECK_THROWS_AS(checkpoint_from_json(bad), InvalidInput);
}

TEST_CASE("config hash is stable and sensitive") {
    Json a{{"seed", 1}, {"episodes", 200}};
    Json b{{"episodes", 200}, {"seed", 1}};  // same object, different insertion order
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    Json c = a;
    c["seed"] = 2;
    CHECK(config_hash(c) != config_hash(a));
}

TEST_CASE("double formatting round-trips exactly") {
    for (double v : {0.1, -0.0, 1.0 / 3.0, 1e-300, 1e300, 3.141592653589793}) {
        const std::string s = format_double(v);
        const double back = std::strtod(s.c_str(), nullptr);
        CHECK(back == v);
        CHECK(std::signbit(back) == std::signbit(v));
    }
}

TEST_CASE("csv writers emit the pinned headers and identical bytes on rerun") {
    const SafetySystem sys = double_integrator();
    CostWeights w;
    w.q_diag = VectorXd::Ones(2);
    w.r = 1.0;
    const DisturbanceModel dm(0.8, sys.D);
    const PolytopeSampler x0(scale(sys.X, 0.3));
    const MatrixXd K = MatrixXd::Zero(1, 2);
    const PolicyFn pol = [&](const VectorXd& x) { return act_linear(K, x); };
    const Trajectory traj = rollout(sys, w, dm, x0, pol, 5, 3, 0);

    const std::string path = tmp_path("gaugerl_traj_test.csv");
    write_trajectory_csv(path, traj, "deadbeefdeadbeef");
    const std::string text = slurp(path);
    std::istringstream lines(text);
    std::string l0, l1;
    std::getline(lines, l0);
    std::getline(lines, l1);
    CHECK(l0 == "# config_hash=deadbeefdeadbeef");
    CHECK(l1 == "t, x_1, x_2, u_1, d_1, cost, violation");
    int rows = 0;
    for (std::string line; std::getline(lines, line);) ++rows;
    CHECK(rows == 5);

    write_trajectory_csv(path, traj, "deadbeefdeadbeef");
    CHECK(slurp(path) == text);
    std::filesystem::remove(path);

    std::vector<EpisodeRow> mrows(2);
    mrows[0] = {0, 1.5, 0.05, 0, 0.25};
    mrows[1] = {1, 1.25, 0.04, 2, 0.26};
    const std::string mpath = tmp_path("gaugerl_metrics_test.csv");
    write_metrics_csv(mpath, mrows, "0123456789abcdef");
    const std::string mtext = slurp(mpath);
    std::istringstream mlines(mtext);
    std::getline(mlines, l0);
    std::getline(mlines, l1);
    CHECK(l0 == "# config_hash=0123456789abcdef");
    CHECK(l1 == "episode, accum_cost, max_angle_dev, violations, wallclock_s");
    std::filesystem::remove(mpath);
}

TEST_CASE("json file io round-trips and rejects garbage") {
    const std::string path = tmp_path("gaugerl_io_test.json");
    const Json j{{"a", 1}, {"b", Json::array({1.5, 2.5})}};
    save_json_file(path, j);
    CHECK(load_json_file(path) == j);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_json_file("/nonexistent/nope.json"), InvalidInput);
    std::ofstream(path) << "{not json";
    CHECK_THROWS_AS(load_json_file(path), InvalidInput);
    std::filesystem::remove(path);
}
