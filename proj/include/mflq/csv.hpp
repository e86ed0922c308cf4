#pragma once

#include <string>

#include "mflq/bsde.hpp"
#include "mflq/pathsim.hpp"
#include "mflq/verify.hpp"

namespace mflq {

// All floats serialized with 17 significant digits so re-parsing is lossless
// and byte comparisons across runs are meaningful.
std::string format_double(double v);

void write_riccati_csv(const std::string& path, const RiccatiBundle& bundle,
                       const TimeGrid& grid);
void write_phi_csv(const std::string& path, const AffineBsdeSolution& sol,
                   const TimeGrid& grid);
void write_paths_csv(const std::string& path, const Ensemble& ensemble);
void write_costs_csv(const std::string& path, const CostReport& costs);
void write_sweep_csv(const std::string& path, const SweepReport& report);

} // namespace mflq
