#pragma once

#include <stdexcept>
#include <string>

namespace mflq {

// Structural problems (wrong shapes, malformed input). Distinct from
// assumption failures, which are reported through ValidationReport.
class DimensionError : public std::invalid_argument {
public:
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite value produced during integration; carries the first bad time.
class BlowUpError : public SolverError {
public:
    BlowUpError(const std::string& context, double t)
        : SolverError(context + ": non-finite value at t=" + std::to_string(t)), time(t) {}
    double time;
};

// A matrix required by a decoupling relation is numerically singular.
class SingularityError : public SolverError {
public:
    SingularityError(const std::string& context, double t)
        : SolverError(context + ": singular matrix at t=" + std::to_string(t)), time(t) {}
    double time;
};

class UnsupportedError : public SolverError {
public:
    explicit UnsupportedError(const std::string& what) : SolverError(what) {}
};

} // namespace mflq
