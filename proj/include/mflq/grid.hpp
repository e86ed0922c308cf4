#pragma once

#include <stdexcept>

namespace mflq {

// Uniform grid on [0, T] with steps+1 nodes.
struct TimeGrid {
    double horizon = 1.0;
    int steps = 1;

    TimeGrid() = default;
    TimeGrid(double T, int n_steps) : horizon(T), steps(n_steps) {
        if (!(T > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be > 0");
        if (n_steps < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
    }

    double dt() const { return horizon / steps; }
    int nodes() const { return steps + 1; }
    // node(steps) == horizon exactly: i/steps evaluates to 1.0.
    double node(int i) const { return horizon * (static_cast<double>(i) / steps); }

    bool operator==(const TimeGrid& o) const {
        return horizon == o.horizon && steps == o.steps;
    }
};

} // namespace mflq
