#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "mflq/grid.hpp"
#include "mflq/matrix_path.hpp"

namespace mflq {

enum class OdeMethod { rk4, euler };
enum class Direction { forward, backward };

using MatrixField = std::function<Eigen::MatrixXd(double, const Eigen::MatrixXd&)>;

// Fixed-step integration of dS/dt = rhs(t, S) over the grid. The boundary
// node (0 for forward, steps for backward) holds `boundary_value` exactly as
// given. Throws BlowUpError naming `context` if a non-finite entry appears.
// The returned path carries rhs samples at every node for Hermite evaluation.
MatrixPath integrate_matrix_ode(const MatrixField& rhs, int boundary_node,
                                const Eigen::MatrixXd& boundary_value, Direction direction,
                                const TimeGrid& grid, OdeMethod method = OdeMethod::rk4,
                                const std::string& context = "ode");

// (I + S H)^-1 etc. via partial-pivot LU; throws SingularityError when the
// reciprocal condition estimate drops below 1e-12.
Eigen::MatrixXd robust_inverse(const Eigen::MatrixXd& m, const std::string& context, double t);

} // namespace mflq
