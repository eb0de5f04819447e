#pragma once

// Independent reference implementations used only by tests. Everything here
// is deliberately brute-force: vertex enumeration over row subsets, bisection
// on the membership predicate, central finite differences, and a Taylor-based
// matrix exponential. None of it shares code with the library under test.

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "gaugerl/polytope.hpp"
#include "gaugerl/rng.hpp"

namespace oracles {

/// All vertices of a bounded polytope, by solving every n-row subsystem and
/// keeping feasible, deduplicated solutions. Exponential; test-sized inputs only.
std::vector<Eigen::VectorXd> enumerate_vertices(const gaugerl::HPolytope& P, double feas_tol = 1e-8);

/// min c.x over P via the vertex list (bounded LPs attain their optimum at a vertex).
double vertex_min(const gaugerl::HPolytope& P, const Eigen::VectorXd& c, double feas_tol = 1e-8);

/// max a.x over P via the vertex list.
double vertex_support(const gaugerl::HPolytope& P, const Eigen::VectorXd& a, double feas_tol = 1e-8);

/// Gauge of v wrt Q by bisection on the membership predicate v/t in Q.
double bisect_gauge(const gaugerl::HPolytope& Q, const Eigen::VectorXd& v);

/// Central-difference Jacobian of f at x.
Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double h = 1e-6);

/// Central-difference gradient of a scalar function.
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double h = 1e-6);

/// Random bounded C-set: a generous box plus extra random halfspaces through
/// positive offsets, so the origin stays strictly interior.
gaugerl::HPolytope random_cset(gaugerl::Rng& rng, int dim, int extra_rows, double box_radius = 3.0);

/// Random symmetric C-set in [V; -V] layout.
gaugerl::HPolytope random_symmetric_cset(gaugerl::Rng& rng, int dim, int extra_rows,
                                         double box_radius = 3.0);

/// Matrix exponential by scaling and squaring with a Taylor series.
Eigen::MatrixXd expm(const Eigen::MatrixXd& A);

}  // namespace oracles
