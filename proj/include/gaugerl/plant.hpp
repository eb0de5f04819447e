#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "gaugerl/invariance.hpp"
#include "gaugerl/polytope.hpp"
#include "gaugerl/rng.hpp"

namespace gaugerl {

struct Generator {
    int bus = 0;
    double inertia = 0.0;
    double damping = 0.0;
};

struct Line {
    int from = 0;
    int to = 0;
    double susceptance = 0.0;
};

/// Inverter (input) or aggregate load (disturbance) attached to a bus, with
/// its symmetric power bound.
struct Device {
    int bus = 0;
    double bound = 0.0;
};

/// Network description: generator swing parameters, branch susceptances, and
/// inverter/load placements. Angles and frequencies are deviations from the
/// synchronous operating point in per-unit.
struct GridCase {
    std::vector<Generator> generators;
    std::vector<Line> lines;
    std::vector<Device> inverters;
    std::vector<Device> loads;
    double tau = 0.05;        // integration step
    double alpha = 0.8;       // disturbance AR coefficient
    double angle_max = 0.1;   // |rotor angle deviation| bound
    double freq_max = 0.5;    // |frequency deviation| bound
    double q_angle = 1000.0;  // stage-cost weights
    double q_freq = 10.0;
    double r_input = 5.0;
    bool unscaled_input_blocks = false;  // drop the tau factor on B and E
};

/// DC stiffness of the network reduced onto the generator buses: the Schur
/// complement of the susceptance Laplacian after eliminating every
/// non-generator bus. Throws DisconnectedNetwork when the graph is not
/// connected.
Eigen::MatrixXd dc_stiffness(const GridCase& gc);

/// Distribution of injections at the given buses onto generator buses after
/// network reduction. A generator bus contributes a unit column; other buses
/// spread by the reduced-network factors (nonnegative, columns sum to one).
Eigen::MatrixXd injection_map(const GridCase& gc, const std::vector<int>& buses);

/// Discrete-time swing model and its constraint sets. State is
/// x = [angles; frequencies], forward-Euler step tau.
struct PlantModel {
    SafetySystem sys;
    Eigen::MatrixXd a_cont;      // continuous-time state matrix
    Eigen::MatrixXd stiffness;   // reduced DC stiffness
    Eigen::MatrixXd input_map;   // inverter injections onto generators
    Eigen::MatrixXd load_map;    // load injections (shipped with negative sign)
    int ngen = 0;
};

PlantModel build_dynamics(const GridCase& gc);

struct CostWeights {
    Eigen::VectorXd q_diag;
    double r = 0.0;
};

CostWeights cost_weights(const GridCase& gc);

double stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const CostWeights& w);

/// Uniform sampler over a bounded polytope: rejection from the bounding box,
/// which is computed once up front by support LPs.
class PolytopeSampler {
public:
    explicit PolytopeSampler(HPolytope P, const Tolerances& tols = default_tols());
    Eigen::VectorXd operator()(Rng& rng) const;
    const HPolytope& set() const { return set_; }

private:
    HPolytope set_;
    Eigen::VectorXd lo_, hi_;
};

/// First-order autoregressive disturbance d+ = alpha d + (1 - alpha) xi with
/// xi uniform on D; convexity keeps every d inside D.
class DisturbanceModel {
public:
    DisturbanceModel(double alpha, const HPolytope& D, const Tolerances& tols = default_tols());
    Eigen::VectorXd init(Rng& rng) const;
    Eigen::VectorXd step(const Eigen::VectorXd& d, Rng& rng) const;
    int dim() const { return sampler_.set().dim(); }

private:
    double alpha_;
    PolytopeSampler sampler_;
};

using PolicyFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// One closed-loop episode. Row t of us/ds acted on state row t of xs; the
/// violation entry for step t measures the successor state, so a terminal
/// breach is never lost.
struct Trajectory {
    Eigen::MatrixXd xs;  // (steps + 1) x n
    Eigen::MatrixXd us;  // steps x m
    Eigen::MatrixXd ds;  // steps x p
    Eigen::VectorXd costs;
    Eigen::VectorXd violations;

    double accum_cost() const { return costs.sum(); }
    int violation_count(double tol) const;
    /// Largest |x_i| over the trajectory for coordinates [0, k).
    double max_abs_over(int k) const;
};

/// Rolls one episode with reproducible per-episode streams for the initial
/// state and the disturbance sequence, so different policies under the same
/// (seed, episode) face identical conditions.
Trajectory rollout(const SafetySystem& sys, const CostWeights& w, const DisturbanceModel& dm,
                   const PolytopeSampler& x0, const PolicyFn& policy, int steps,
                   std::uint64_t seed, std::uint64_t episode);

}  // namespace gaugerl
