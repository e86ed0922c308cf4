#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "mflq/pathsim.hpp"

namespace mflq {

// Malformed configuration (bad JSON, wrong shapes, unknown keys, invariant
// violations). CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct RunConfig {
    ModelParams model;
    int steps = 1000;
    Mode mode = Mode::game;
    std::uint64_t seed = 12345;
    int replications = 1;
    std::string output_dir = "out";
    OdeMethod integrator = OdeMethod::rk4;
    PhatVariant phat = PhatVariant::derived;
    bool emit_svg = false;

    TimeGrid grid() const { return TimeGrid(model.horizon, steps); }
    SimOptions sim_options() const {
        SimOptions o;
        o.integrator = integrator;
        o.phat = phat;
        return o;
    }
};

// Parses the JSON document. Matrices are nested arrays, vectors flat arrays,
// scalars are promoted to 1x1 / length-1. Unknown keys are rejected.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// FNV-1a over the raw config bytes; recorded in each run manifest.
std::uint64_t fnv1a64(const std::string& bytes);

struct ManifestInfo {
    std::string command;
    std::string config_hash; // fnv1a64 hex of the config bytes
    const RunConfig* config = nullptr;
};

// manifest.json in the output directory: version, config hash, flag values.
// Deliberately timestamp-free so reruns are byte-identical.
void write_manifest(const std::string& path, const ManifestInfo& info);

const char* mode_name(Mode m);
const char* integrator_name(OdeMethod m);
const char* phat_name(PhatVariant v);

} // namespace mflq
