#pragma once

#include <json.hpp>
#include <optional>
#include <string>

#include "gaugerl/ddpg.hpp"
#include "gaugerl/invariance.hpp"
#include "gaugerl/nn.hpp"
#include "gaugerl/plant.hpp"
#include "gaugerl/polytope.hpp"

namespace gaugerl {

using Json = nlohmann::json;

Json matrix_to_json(const Eigen::MatrixXd& M);  // row-major nested arrays
Eigen::MatrixXd matrix_from_json(const Json& j);
Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);

// Polytopes travel as {"F": [[...]], "g": [...]}.
Json polytope_to_json(const HPolytope& P);
HPolytope polytope_from_json(const Json& j);

// Systems travel as {"A","B","E","U","D","X"}.
Json system_to_json(const SafetySystem& sys);
SafetySystem system_from_json(const Json& j);

// Certificates travel as {"Vs","s_bar","K","meta"}; the loader recomputes the
// disturbance tightenings against the given system.
Json certificate_to_json(const RciCertificate& cert, const Json& meta);
RciCertificate certificate_from_json(const Json& j, const SafetySystem& sys,
                                     const Tolerances& tols = default_tols());

Json grid_case_to_json(const GridCase& gc);
GridCase grid_case_from_json(const Json& j);

/// A runnable case: either a grid description (dynamics built from the swing
/// model) or a raw {"system", "q_diag", "r", "alpha", "angle_dims"} bundle.
struct CaseSpec {
    SafetySystem sys;
    CostWeights weights;
    double alpha = 0.8;
    int angle_dims = 0;
    std::optional<GridCase> grid;
};

CaseSpec case_from_json(const Json& j);

// Network checkpoints: architecture, flat row-major weights, seed of the run
// that produced them.
Json checkpoint_to_json(const Mlp& net, std::uint64_t seed);
Mlp checkpoint_from_json(const Json& j);
std::uint64_t checkpoint_seed(const Json& j);

Json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const Json& j);

/// FNV-1a over the canonical dump; hex string used as the provenance header.
std::uint64_t fnv1a(const std::string& s);
std::string config_hash(const Json& config);

/// Round-trip-exact decimal rendering of a double.
std::string format_double(double v);

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::string& hash);
void write_metrics_csv(const std::string& path, const std::vector<EpisodeRow>& rows,
                       const std::string& hash);

}  // namespace gaugerl
