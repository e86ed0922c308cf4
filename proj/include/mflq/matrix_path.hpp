#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mflq/grid.hpp"

namespace mflq {

// A matrix-valued function of time sampled on the grid nodes. Vector paths
// are stored as n x 1 matrices. When node derivatives are present, eval()
// interpolates with a cubic Hermite polynomial per interval (O(dt^4) error),
// which keeps composed RK4 pipelines at full order when one equation's
// solution feeds another's right-hand side at stage times.
class MatrixPath {
public:
    MatrixPath() = default;

    MatrixPath(TimeGrid grid, std::vector<Eigen::MatrixXd> values,
               std::vector<Eigen::MatrixXd> derivatives = {})
        : grid_(grid), values_(std::move(values)), derivs_(std::move(derivatives)) {
        if (static_cast<int>(values_.size()) != grid_.nodes())
            throw std::invalid_argument("MatrixPath: value count != node count");
        if (!derivs_.empty() && derivs_.size() != values_.size())
            throw std::invalid_argument("MatrixPath: derivative count != node count");
    }

    static MatrixPath constant(const TimeGrid& grid, const Eigen::MatrixXd& v) {
        std::vector<Eigen::MatrixXd> vals(static_cast<size_t>(grid.nodes()), v);
        std::vector<Eigen::MatrixXd> ders(static_cast<size_t>(grid.nodes()),
                                          Eigen::MatrixXd::Zero(v.rows(), v.cols()));
        return MatrixPath(grid, std::move(vals), std::move(ders));
    }

    const TimeGrid& grid() const { return grid_; }
    int nodes() const { return grid_.nodes(); }
    Eigen::Index rows() const { return values_.empty() ? 0 : values_[0].rows(); }
    Eigen::Index cols() const { return values_.empty() ? 0 : values_[0].cols(); }

    const Eigen::MatrixXd& value(int i) const { return values_[static_cast<size_t>(i)]; }
    Eigen::MatrixXd& value(int i) { return values_[static_cast<size_t>(i)]; }
    const Eigen::MatrixXd& derivative(int i) const { return derivs_[static_cast<size_t>(i)]; }
    bool has_derivatives() const { return !derivs_.empty(); }
    const std::vector<Eigen::MatrixXd>& values() const { return values_; }

    const Eigen::MatrixXd& front() const { return values_.front(); }
    const Eigen::MatrixXd& back() const { return values_.back(); }

    // Cubic Hermite evaluation; exact at nodes, clamped to [0, T].
    Eigen::MatrixXd eval(double t) const {
        const double T = grid_.horizon;
        if (t <= 0.0) return values_.front();
        if (t >= T) return values_.back();
        const double pos = t / grid_.dt();
        int i = static_cast<int>(pos);
        if (i >= grid_.steps) i = grid_.steps - 1;
        const double t0 = grid_.node(i);
        const double t1 = grid_.node(i + 1);
        const double h = t1 - t0;
        const double s = (t - t0) / h;
        if (s <= 0.0) return values_[static_cast<size_t>(i)];
        if (s >= 1.0) return values_[static_cast<size_t>(i) + 1];
        if (derivs_.empty()) {
            // Linear fallback for algebraically assembled paths.
            return (1.0 - s) * values_[static_cast<size_t>(i)] +
                   s * values_[static_cast<size_t>(i) + 1];
        }
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1;
        const double h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2;
        const double h11 = s3 - s2;
        return h00 * values_[static_cast<size_t>(i)] + h10 * h * derivs_[static_cast<size_t>(i)] +
               h01 * values_[static_cast<size_t>(i) + 1] +
               h11 * h * derivs_[static_cast<size_t>(i) + 1];
    }

private:
    TimeGrid grid_;
    std::vector<Eigen::MatrixXd> values_;
    std::vector<Eigen::MatrixXd> derivs_;
};

} // namespace mflq
