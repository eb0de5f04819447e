#pragma once

namespace gaugerl {

/// All numeric tolerances used across the library, kept in one record so a
/// run's tolerance set can be echoed into reports and certificates.
struct Tolerances {
    double lp_feasibility = 1e-9;   // A x <= b + lp_feasibility on returned points
    double lp_optimality = 1e-8;    // duality gap / KKT residual bound
    double strict_interior = 1e-9;  // g_i > strict_interior for C-set origin check
    double membership = 1e-9;       // default polytope containment slack
    double invariance = 1e-9;       // certificate slack threshold (valid iff slack >= -invariance)
    double rpi_fixed_point = 1e-9;  // set-equality tolerance in the invariant-set iteration
    double interior_eps = 1e-7;     // relative margin for "strictly interior" states
};

inline const Tolerances& default_tols() {
    static const Tolerances t{};
    return t;
}

}  // namespace gaugerl
