#include "mflq/integrate.hpp"

#include <vector>

#include "mflq/errors.hpp"

namespace mflq {

namespace {

Eigen::MatrixXd rk4_step(const MatrixField& rhs, double t, const Eigen::MatrixXd& y, double h,
                         const Eigen::MatrixXd& k1) {
    const Eigen::MatrixXd k2 = rhs(t + 0.5 * h, y + (0.5 * h) * k1);
    const Eigen::MatrixXd k3 = rhs(t + 0.5 * h, y + (0.5 * h) * k2);
    const Eigen::MatrixXd k4 = rhs(t + h, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

} // namespace

MatrixPath integrate_matrix_ode(const MatrixField& rhs, int boundary_node,
                                const Eigen::MatrixXd& boundary_value, Direction direction,
                                const TimeGrid& grid, OdeMethod method,
                                const std::string& context) {
    const int n_nodes = grid.nodes();
    if (direction == Direction::forward && boundary_node != 0)
        throw std::invalid_argument(context + ": forward integration needs boundary at node 0");
    if (direction == Direction::backward && boundary_node != grid.steps)
        throw std::invalid_argument(context + ": backward integration needs boundary at node T");

    std::vector<Eigen::MatrixXd> values(static_cast<size_t>(n_nodes));
    std::vector<Eigen::MatrixXd> slopes(static_cast<size_t>(n_nodes));
    values[static_cast<size_t>(boundary_node)] = boundary_value;

    const double h = (direction == Direction::forward) ? grid.dt() : -grid.dt();
    const int step_dir = (direction == Direction::forward) ? 1 : -1;

    int i = boundary_node;
    for (int done = 0; done < grid.steps; ++done, i += step_dir) {
        const double t = grid.node(i);
        const Eigen::MatrixXd& y = values[static_cast<size_t>(i)];
        const Eigen::MatrixXd k1 = rhs(t, y);
        slopes[static_cast<size_t>(i)] = k1;
        Eigen::MatrixXd next = (method == OdeMethod::rk4) ? rk4_step(rhs, t, y, h, k1)
                                                          : Eigen::MatrixXd(y + h * k1);
        if (!next.allFinite()) throw BlowUpError(context, grid.node(i + step_dir));
        values[static_cast<size_t>(i + step_dir)] = std::move(next);
    }
    // Slope at the far end, for interpolation on the last interval.
    slopes[static_cast<size_t>(i)] = rhs(grid.node(i), values[static_cast<size_t>(i)]);

    return MatrixPath(grid, std::move(values), std::move(slopes));
}

Eigen::MatrixXd robust_inverse(const Eigen::MatrixXd& m, const std::string& context, double t) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    if (!(lu.rcond() > 1e-12)) throw SingularityError(context, t);
    return lu.inverse();
}

} // namespace mflq
