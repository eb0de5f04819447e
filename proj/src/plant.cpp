#include "gaugerl/plant.hpp"

#include <algorithm>
#include <map>
#include <vector>

#include "gaugerl/errors.hpp"

namespace gaugerl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct BusIndex {
    std::map<int, int> id_to_idx;
    std::vector<int> ids;

    int at(int bus) const {
        const auto it = id_to_idx.find(bus);
        if (it == id_to_idx.end()) throw InvalidInput("unknown bus id " + std::to_string(bus));
        return it->second;
    }
};

BusIndex index_buses(const GridCase& gc) {
    std::map<int, int> m;
    const auto touch = [&](int bus) { m.emplace(bus, 0); };
    for (const auto& g : gc.generators) touch(g.bus);
    for (const auto& l : gc.lines) {
        touch(l.from);
        touch(l.to);
    }
    for (const auto& d : gc.inverters) touch(d.bus);
    for (const auto& d : gc.loads) touch(d.bus);

    BusIndex bi;
    for (auto& [bus, idx] : m) {
        idx = static_cast<int>(bi.ids.size());
        bi.ids.push_back(bus);
    }
    bi.id_to_idx = std::move(m);
    return bi;
}

MatrixXd susceptance_laplacian(const GridCase& gc, const BusIndex& bi) {
    const int nb = static_cast<int>(bi.ids.size());
    MatrixXd L = MatrixXd::Zero(nb, nb);
    for (const auto& l : gc.lines) {
        if (l.susceptance <= 0.0) throw InvalidInput("line susceptance must be positive");
        if (l.from == l.to) throw InvalidInput("line endpoints must differ");
        const int i = bi.at(l.from), j = bi.at(l.to);
        L(i, i) += l.susceptance;
        L(j, j) += l.susceptance;
        L(i, j) -= l.susceptance;
        L(j, i) -= l.susceptance;
    }
    return L;
}

void check_connected(const GridCase& gc, const BusIndex& bi) {
    const int nb = static_cast<int>(bi.ids.size());
    if (nb <= 1) return;
    std::vector<std::vector<int>> adj(nb);
    for (const auto& l : gc.lines) {
        adj[bi.at(l.from)].push_back(bi.at(l.to));
        adj[bi.at(l.to)].push_back(bi.at(l.from));
    }
    std::vector<char> seen(nb, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w : adj[v]) {
            if (!seen[w]) {
                seen[w] = 1;
                stack.push_back(w);
            }
        }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
        throw DisconnectedNetwork("network graph is not connected");
}

// Generator bus indices (in listed order) and the remaining bus indices.
std::pair<std::vector<int>, std::vector<int>> partition_buses(const GridCase& gc,
                                                              const BusIndex& bi) {
    if (gc.generators.empty()) throw InvalidInput("at least one generator is required");
    std::vector<char> is_gen(bi.ids.size(), 0);
    std::vector<int> gen_idx;
    for (const auto& g : gc.generators) {
        const int i = bi.at(g.bus);
        if (is_gen[i]) throw InvalidInput("duplicate generator bus " + std::to_string(g.bus));
        is_gen[i] = 1;
        gen_idx.push_back(i);
    }
    std::vector<int> other_idx;
    for (int i = 0; i < static_cast<int>(bi.ids.size()); ++i)
        if (!is_gen[i]) other_idx.push_back(i);
    return {gen_idx, other_idx};
}

MatrixXd pick(const MatrixXd& M, const std::vector<int>& rows, const std::vector<int>& cols) {
    MatrixXd out(rows.size(), cols.size());
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < cols.size(); ++j) out(i, j) = M(rows[i], cols[j]);
    return out;
}

}  // namespace

MatrixXd dc_stiffness(const GridCase& gc) {
    const BusIndex bi = index_buses(gc);
    check_connected(gc, bi);
    const MatrixXd L = susceptance_laplacian(gc, bi);
    const auto [gen_idx, other_idx] = partition_buses(gc, bi);

    const MatrixXd Lgg = pick(L, gen_idx, gen_idx);
    if (other_idx.empty()) return Lgg;
    const MatrixXd Lgo = pick(L, gen_idx, other_idx);
    const MatrixXd Loo = pick(L, other_idx, other_idx);
    const Eigen::LDLT<MatrixXd> ldlt(Loo);
    if (ldlt.info() != Eigen::Success)
        throw NumericalFailure("interior-bus block is not factorizable");
    return Lgg - Lgo * ldlt.solve(Lgo.transpose());
}

MatrixXd injection_map(const GridCase& gc, const std::vector<int>& buses) {
    const BusIndex bi = index_buses(gc);
    check_connected(gc, bi);
    const MatrixXd L = susceptance_laplacian(gc, bi);
    const auto [gen_idx, other_idx] = partition_buses(gc, bi);
    const int ngen = static_cast<int>(gen_idx.size());

    std::map<int, int> gen_pos, other_pos;
    for (int i = 0; i < ngen; ++i) gen_pos[gen_idx[i]] = i;
    for (int j = 0; j < static_cast<int>(other_idx.size()); ++j) other_pos[other_idx[j]] = j;

    // Spread factors from interior buses onto generator buses.
    MatrixXd spread;
    if (!other_idx.empty()) {
        const MatrixXd Lgo = pick(L, gen_idx, other_idx);
        const Eigen::LDLT<MatrixXd> ldlt(pick(L, other_idx, other_idx));
        if (ldlt.info() != Eigen::Success)
            throw NumericalFailure("interior-bus block is not factorizable");
        spread = -Lgo * ldlt.solve(MatrixXd::Identity(other_idx.size(), other_idx.size()));
    }

    MatrixXd T = MatrixXd::Zero(ngen, buses.size());
    for (size_t k = 0; k < buses.size(); ++k) {
        const int idx = bi.at(buses[k]);
        if (const auto it = gen_pos.find(idx); it != gen_pos.end())
            T(it->second, static_cast<int>(k)) = 1.0;
        else
            T.col(static_cast<int>(k)) = spread.col(other_pos.at(idx));
    }
    return T;
}

PlantModel build_dynamics(const GridCase& gc) {
    const int ngen = static_cast<int>(gc.generators.size());
    if (ngen == 0) throw InvalidInput("at least one generator is required");
    if (gc.inverters.empty()) throw InvalidInput("at least one inverter is required");
    if (gc.loads.empty()) throw InvalidInput("at least one load is required");
    if (!(gc.tau > 0.0)) throw InvalidInput("step tau must be positive");
    if (!(gc.angle_max > 0.0) || !(gc.freq_max > 0.0))
        throw InvalidInput("state bounds must be positive");
    for (const auto& g : gc.generators) {
        if (g.inertia <= 0.0) throw SingularInertia("generator inertia must be positive");
        if (g.damping < 0.0) throw InvalidInput("generator damping must be nonnegative");
    }

    PlantModel pm;
    pm.ngen = ngen;
    pm.stiffness = dc_stiffness(gc);

    std::vector<int> inv_buses, load_buses;
    VectorXd ubar(gc.inverters.size()), dbar(gc.loads.size());
    for (size_t i = 0; i < gc.inverters.size(); ++i) {
        if (gc.inverters[i].bound <= 0.0) throw InvalidInput("inverter bound must be positive");
        inv_buses.push_back(gc.inverters[i].bus);
        ubar[static_cast<int>(i)] = gc.inverters[i].bound;
    }
    for (size_t i = 0; i < gc.loads.size(); ++i) {
        if (gc.loads[i].bound <= 0.0) throw InvalidInput("load bound must be positive");
        load_buses.push_back(gc.loads[i].bus);
        dbar[static_cast<int>(i)] = gc.loads[i].bound;
    }
    pm.input_map = injection_map(gc, inv_buses);
    pm.load_map = -injection_map(gc, load_buses);  // positive d is extra load

    VectorXd minv(ngen), damp(ngen);
    for (int i = 0; i < ngen; ++i) {
        minv[i] = 1.0 / gc.generators[i].inertia;
        damp[i] = gc.generators[i].damping;
    }

    const int n = 2 * ngen;
    pm.a_cont = MatrixXd::Zero(n, n);
    pm.a_cont.topRightCorner(ngen, ngen) = MatrixXd::Identity(ngen, ngen);
    pm.a_cont.bottomLeftCorner(ngen, ngen) = -(minv.asDiagonal() * pm.stiffness);
    pm.a_cont.bottomRightCorner(ngen, ngen) = (-minv.cwiseProduct(damp)).asDiagonal();

    SafetySystem sys;
    sys.A = MatrixXd::Identity(n, n) + gc.tau * pm.a_cont;
    const double in_scale = gc.unscaled_input_blocks ? 1.0 : gc.tau;
    sys.B = MatrixXd::Zero(n, pm.input_map.cols());
    sys.B.bottomRows(ngen) = in_scale * minv.asDiagonal() * pm.input_map;
    sys.E = MatrixXd::Zero(n, pm.load_map.cols());
    sys.E.bottomRows(ngen) = in_scale * minv.asDiagonal() * pm.load_map;
    sys.U = HPolytope::box(ubar);
    sys.D = HPolytope::box(dbar);
    VectorXd xbar(n);
    xbar.head(ngen).setConstant(gc.angle_max);
    xbar.tail(ngen).setConstant(gc.freq_max);
    sys.X = HPolytope::box(xbar);
    pm.sys = std::move(sys);
    return pm;
}

CostWeights cost_weights(const GridCase& gc) {
    const int ngen = static_cast<int>(gc.generators.size());
    CostWeights w;
    w.q_diag.resize(2 * ngen);
    w.q_diag.head(ngen).setConstant(gc.q_angle);
    w.q_diag.tail(ngen).setConstant(gc.q_freq);
    w.r = gc.r_input;
    return w;
}

double stage_cost(const VectorXd& x, const VectorXd& u, const CostWeights& w) {
    if (x.size() != w.q_diag.size()) throw DimensionMismatch("stage cost state dimension");
    return x.cwiseProduct(w.q_diag).dot(x) + w.r * u.squaredNorm();
}

PolytopeSampler::PolytopeSampler(HPolytope P, const Tolerances& tols) : set_(std::move(P)) {
    set_.validate_basic();
    const int n = set_.dim();
    lo_.resize(n);
    hi_.resize(n);
    VectorXd e = VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
        e[j] = 1.0;
        hi_[j] = support(set_, e, tols);
        lo_[j] = -support(set_, -e, tols);
        e[j] = 0.0;
    }
}

VectorXd PolytopeSampler::operator()(Rng& rng) const {
    const int n = set_.dim();
    VectorXd x(n);
    for (int tries = 0; tries < 100000; ++tries) {
        for (int j = 0; j < n; ++j) x[j] = rng.uniform(lo_[j], hi_[j]);
        if (contains(set_, x, 0.0)) return x;
    }
    throw NumericalFailure("polytope sampler: acceptance rate too low");
}

DisturbanceModel::DisturbanceModel(double alpha, const HPolytope& D, const Tolerances& tols)
    : alpha_(alpha), sampler_(D, tols) {
    if (alpha < 0.0 || alpha > 1.0) throw InvalidInput("AR coefficient must lie in [0, 1]");
}

VectorXd DisturbanceModel::init(Rng& rng) const { return sampler_(rng); }

VectorXd DisturbanceModel::step(const VectorXd& d, Rng& rng) const {
    if (d.size() != dim()) throw DimensionMismatch("disturbance dimension");
    return alpha_ * d + (1.0 - alpha_) * sampler_(rng);
}

int Trajectory::violation_count(double tol) const {
    int count = 0;
    for (int t = 0; t < violations.size(); ++t)
        if (violations[t] > tol) ++count;
    return count;
}

double Trajectory::max_abs_over(int k) const {
    if (k <= 0) return 0.0;
    if (k > xs.cols()) k = static_cast<int>(xs.cols());
    return xs.leftCols(k).cwiseAbs().maxCoeff();
}

Trajectory rollout(const SafetySystem& sys, const CostWeights& w, const DisturbanceModel& dm,
                   const PolytopeSampler& x0, const PolicyFn& policy, int steps,
                   std::uint64_t seed, std::uint64_t episode) {
    if (steps < 1) throw InvalidInput("rollout needs at least one step");
    Rng rx(substream_seed(seed, kStreamX0, episode));
    Rng rd(substream_seed(seed, kStreamDisturbance, episode));

    const int n = sys.n(), m = sys.m(), p = sys.p();
    Trajectory tr;
    tr.xs.resize(steps + 1, n);
    tr.us.resize(steps, m);
    tr.ds.resize(steps, p);
    tr.costs.resize(steps);
    tr.violations.resize(steps);

    VectorXd x = x0(rx);
    VectorXd d = dm.init(rd);
    tr.xs.row(0) = x.transpose();
    for (int t = 0; t < steps; ++t) {
        const VectorXd u = policy(x);
        if (u.size() != m) throw DimensionMismatch("policy action dimension");
        tr.costs[t] = stage_cost(x, u, w);
        const VectorXd xn = sys.A * x + sys.B * u + sys.E * d;
        tr.us.row(t) = u.transpose();
        tr.ds.row(t) = d.transpose();
        tr.violations[t] = violation(sys.X, xn);
        tr.xs.row(t + 1) = xn.transpose();
        x = xn;
        d = dm.step(d, rd);
    }
    return tr;
}

}  // namespace gaugerl
