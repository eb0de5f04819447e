#include "gaugerl/io.hpp"

#include <cstdio>
#include <fstream>

#include "gaugerl/errors.hpp"

namespace gaugerl {

namespace {

const Json& need(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key))
        throw InvalidInput(std::string("missing field '") + key + "'");
    return j.at(key);
}

double need_number(const Json& j, const char* key) {
    const Json& v = need(j, key);
    if (!v.is_number()) throw InvalidInput(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

int need_int(const Json& j, const char* key) {
    const Json& v = need(j, key);
    if (!v.is_number_integer())
        throw InvalidInput(std::string("field '") + key + "' must be an integer");
    return v.get<int>();
}

}  // namespace

Json matrix_to_json(const Eigen::MatrixXd& M) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
    if (!j.is_array() || j.empty()) throw InvalidInput("matrix must be a nonempty array of rows");
    const std::size_t cols = j.at(0).is_array() ? j.at(0).size() : 0;
    if (cols == 0) throw InvalidInput("matrix rows must be nonempty arrays");
    Eigen::MatrixXd M(j.size(), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Json& row = j.at(i);
        if (!row.is_array() || row.size() != cols) throw InvalidInput("ragged matrix rows");
        for (std::size_t c = 0; c < cols; ++c) {
            if (!row.at(c).is_number()) throw InvalidInput("matrix entries must be numbers");
            M(i, c) = row.at(c).get<double>();
        }
    }
    return M;
}

Json vector_to_json(const Eigen::VectorXd& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd vector_from_json(const Json& j) {
    if (!j.is_array() || j.empty()) throw InvalidInput("vector must be a nonempty array");
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j.at(i).is_number()) throw InvalidInput("vector entries must be numbers");
        v(i) = j.at(i).get<double>();
    }
    return v;
}

Json polytope_to_json(const HPolytope& P) {
    return Json{{"F", matrix_to_json(P.F)}, {"g", vector_to_json(P.g)}};
}

HPolytope polytope_from_json(const Json& j) {
    HPolytope P;
    P.F = matrix_from_json(need(j, "F"));
    P.g = vector_from_json(need(j, "g"));
    if (P.F.rows() != P.g.size()) throw InvalidInput("polytope F rows vs g length");
    return P;
}

Json system_to_json(const SafetySystem& sys) {
    return Json{{"A", matrix_to_json(sys.A)}, {"B", matrix_to_json(sys.B)},
                {"E", matrix_to_json(sys.E)}, {"U", polytope_to_json(sys.U)},
                {"D", polytope_to_json(sys.D)}, {"X", polytope_to_json(sys.X)}};
}

SafetySystem system_from_json(const Json& j) {
    SafetySystem sys;
    sys.A = matrix_from_json(need(j, "A"));
    sys.B = matrix_from_json(need(j, "B"));
    sys.E = matrix_from_json(need(j, "E"));
    sys.U = polytope_from_json(need(j, "U"));
    sys.D = polytope_from_json(need(j, "D"));
    sys.X = polytope_from_json(need(j, "X"));
    return sys;
}

Json certificate_to_json(const RciCertificate& cert, const Json& meta) {
    return Json{{"Vs", matrix_to_json(cert.Vs)},
                {"s_bar", vector_to_json(cert.s_bar)},
                {"K", matrix_to_json(cert.K)},
                {"meta", meta}};
}

RciCertificate certificate_from_json(const Json& j, const SafetySystem& sys,
                                     const Tolerances& tols) {
    const Eigen::MatrixXd Vs = matrix_from_json(need(j, "Vs"));
    const Eigen::VectorXd s_bar = vector_from_json(need(j, "s_bar"));
    const Eigen::MatrixXd K = matrix_from_json(need(j, "K"));
    return make_certificate(sys, Vs, s_bar, K, tols);
}

Json grid_case_to_json(const GridCase& gc) {
    Json gens = Json::array();
    for (const auto& g : gc.generators)
        gens.push_back({{"bus", g.bus}, {"inertia", g.inertia}, {"damping", g.damping}});
    Json lines = Json::array();
    for (const auto& l : gc.lines)
        lines.push_back({{"from", l.from}, {"to", l.to}, {"susceptance", l.susceptance}});
    Json inverters = Json::array();
    for (const auto& d : gc.inverters) inverters.push_back({{"bus", d.bus}, {"bound", d.bound}});
    Json loads = Json::array();
    for (const auto& d : gc.loads) loads.push_back({{"bus", d.bus}, {"bound", d.bound}});
    return Json{{"generators", gens},
                {"lines", lines},
                {"inverters", inverters},
                {"loads", loads},
                {"tau", gc.tau},
                {"alpha", gc.alpha},
                {"angle_max", gc.angle_max},
                {"freq_max", gc.freq_max},
                {"q_angle", gc.q_angle},
                {"q_freq", gc.q_freq},
                {"r_input", gc.r_input},
                {"unscaled_input_blocks", gc.unscaled_input_blocks}};
}

GridCase grid_case_from_json(const Json& j) {
    GridCase gc;
    for (const Json& g : need(j, "generators")) {
        Generator gen;
        gen.bus = need_int(g, "bus");
        gen.inertia = need_number(g, "inertia");
        gen.damping = need_number(g, "damping");
        gc.generators.push_back(gen);
    }
    for (const Json& l : need(j, "lines")) {
        Line line;
        line.from = need_int(l, "from");
        line.to = need_int(l, "to");
        line.susceptance = need_number(l, "susceptance");
        gc.lines.push_back(line);
    }
    for (const Json& d : need(j, "inverters")) {
        Device dev;
        dev.bus = need_int(d, "bus");
        dev.bound = need_number(d, "bound");
        gc.inverters.push_back(dev);
    }
    for (const Json& d : need(j, "loads")) {
        Device dev;
        dev.bus = need_int(d, "bus");
        dev.bound = need_number(d, "bound");
        gc.loads.push_back(dev);
    }
    gc.tau = need_number(j, "tau");
    gc.alpha = need_number(j, "alpha");
    gc.angle_max = need_number(j, "angle_max");
    gc.freq_max = need_number(j, "freq_max");
    gc.q_angle = need_number(j, "q_angle");
    gc.q_freq = need_number(j, "q_freq");
    gc.r_input = need_number(j, "r_input");
    gc.unscaled_input_blocks = j.value("unscaled_input_blocks", false);
    return gc;
}

CaseSpec case_from_json(const Json& j) {
    CaseSpec spec;
    if (j.contains("system")) {
        spec.sys = system_from_json(need(j, "system"));
        spec.weights.q_diag = vector_from_json(need(j, "q_diag"));
        spec.weights.r = need_number(j, "r");
        spec.alpha = need_number(j, "alpha");
        spec.angle_dims = j.value("angle_dims", 0);
        if (spec.weights.q_diag.size() != spec.sys.A.rows())
            throw InvalidInput("q_diag length vs state dimension");
        return spec;
    }
    const GridCase gc = grid_case_from_json(j);
    const PlantModel pm = build_dynamics(gc);
    spec.sys = pm.sys;
    spec.weights = cost_weights(gc);
    spec.alpha = gc.alpha;
    spec.angle_dims = pm.ngen;
    spec.grid = gc;
    return spec;
}

Json checkpoint_to_json(const Mlp& net, std::uint64_t seed) {
    const MlpConfig& cfg = net.config();
    Json layers = Json::array();
    for (const Layer& l : net.layers()) {
        Json flat = Json::array();
        for (Eigen::Index r = 0; r < l.W.rows(); ++r)
            for (Eigen::Index c = 0; c < l.W.cols(); ++c) flat.push_back(l.W(r, c));
        layers.push_back({{"rows", l.W.rows()},
                          {"cols", l.W.cols()},
                          {"W", std::move(flat)},
                          {"b", vector_to_json(l.b)}});
    }
    return Json{{"version", 1},
                {"in", cfg.in},
                {"hidden", cfg.hidden},
                {"out", cfg.out},
                {"head", cfg.head == Head::ScaledSigmoid ? "scaled_sigmoid" : "identity"},
                {"head_steepness", cfg.head_steepness},
                {"layers", std::move(layers)},
                {"seed", seed}};
}

Mlp checkpoint_from_json(const Json& j) {
    if (need_int(j, "version") != 1) throw InvalidInput("unknown checkpoint version");
    MlpConfig cfg;
    cfg.in = need_int(j, "in");
    cfg.out = need_int(j, "out");
    for (const Json& h : need(j, "hidden")) cfg.hidden.push_back(h.get<int>());
    const std::string head = need(j, "head").get<std::string>();
    if (head == "scaled_sigmoid")
        cfg.head = Head::ScaledSigmoid;
    else if (head == "identity")
        cfg.head = Head::Identity;
    else
        throw InvalidInput("unknown head '" + head + "'");
    cfg.head_steepness = need_number(j, "head_steepness");

    Rng rng(0);
    Mlp net(cfg, rng);
    const Json& layers = need(j, "layers");
    if (layers.size() != net.layers().size()) throw InvalidInput("checkpoint layer count");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const Json& jl = layers.at(l);
        Layer& layer = net.layers()[l];
        const int rows = need_int(jl, "rows");
        const int cols = need_int(jl, "cols");
        if (rows != layer.W.rows() || cols != layer.W.cols())
            throw InvalidInput("checkpoint layer shape");
        const Json& flat = need(jl, "W");
        if (static_cast<Eigen::Index>(flat.size()) != layer.W.size())
            throw InvalidInput("checkpoint weight count");
        std::size_t k = 0;
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) layer.W(r, c) = flat.at(k++).get<double>();
        const Eigen::VectorXd b = vector_from_json(need(jl, "b"));
        if (b.size() != layer.b.size()) throw InvalidInput("checkpoint bias length");
        layer.b = b;
    }
    return net;
}

std::uint64_t checkpoint_seed(const Json& j) {
    return need(j, "seed").get<std::uint64_t>();
}

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw InvalidInput("malformed JSON in '" + path + "'");
    return j;
}

void save_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string config_hash(const Json& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(config.dump())));
    return buf;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::string& hash) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    const int n = static_cast<int>(traj.xs.cols());
    const int m = static_cast<int>(traj.us.cols());
    const int p = static_cast<int>(traj.ds.cols());
    out << "# config_hash=" << hash << "\n";
    out << "t";
    for (int i = 1; i <= n; ++i) out << ", x_" << i;
    for (int i = 1; i <= m; ++i) out << ", u_" << i;
    for (int i = 1; i <= p; ++i) out << ", d_" << i;
    out << ", cost, violation\n";
    for (Eigen::Index t = 0; t < traj.us.rows(); ++t) {
        out << t;
        for (int i = 0; i < n; ++i) out << ", " << format_double(traj.xs(t, i));
        for (int i = 0; i < m; ++i) out << ", " << format_double(traj.us(t, i));
        for (int i = 0; i < p; ++i) out << ", " << format_double(traj.ds(t, i));
        out << ", " << format_double(traj.costs(t)) << ", " << format_double(traj.violations(t))
            << "\n";
    }
}

void write_metrics_csv(const std::string& path, const std::vector<EpisodeRow>& rows,
                       const std::string& hash) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    out << "# config_hash=" << hash << "\n";
    out << "episode, accum_cost, max_angle_dev, violations, wallclock_s\n";
    for (const EpisodeRow& r : rows) {
        out << r.episode << ", " << format_double(r.accum_cost) << ", "
            << format_double(r.max_angle_dev) << ", " << r.violations << ", "
            << format_double(r.wallclock_s) << "\n";
    }
}

}  // namespace gaugerl
