#include "mflq/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "mflq/errors.hpp"

namespace mflq {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) fail(where + ": unknown key '" + it.key() + "'");
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& name) {
    if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
    if (!j.is_array() || j.empty()) fail(name + ": expected number or array");
    if (j[0].is_number()) { // flat array -> column vector
        Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), 1);
        for (size_t i = 0; i < j.size(); ++i) {
            if (!j[i].is_number()) fail(name + ": mixed array entries");
            m(static_cast<Eigen::Index>(i), 0) = j[i].get<double>();
        }
        return m;
    }
    const size_t rows = j.size();
    const size_t cols = j[0].size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols) fail(name + ": ragged rows");
        for (size_t k = 0; k < cols; ++k) {
            if (!j[i][k].is_number()) fail(name + ": non-numeric entry");
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                j[i][k].get<double>();
        }
    }
    return m;
}

Eigen::MatrixXd matrix_or(const json& obj, const std::string& key, Eigen::Index rows,
                          Eigen::Index cols) {
    if (!obj.contains(key)) return Eigen::MatrixXd::Zero(rows, cols);
    Eigen::MatrixXd m = parse_matrix(obj.at(key), "model." + key);
    if (m.size() == 1 && rows == cols && rows != 1)
        return m(0, 0) * Eigen::MatrixXd::Identity(rows, cols); // scalar means v * I
    return m;
}

Eigen::VectorXd vector_or(const json& obj, const std::string& key, Eigen::Index n) {
    if (!obj.contains(key)) return Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd m = parse_matrix(obj.at(key), "model." + key);
    if (m.cols() != 1) fail("model." + key + ": expected a vector");
    if (m.rows() == 1 && n != 1) return Eigen::VectorXd::Constant(n, m(0, 0));
    return m.col(0);
}

ModelParams parse_model(const json& jm) {
    static const std::set<std::string> keys = {
        "n", "r", "N", "T", "A", "B", "C", "f", "Q", "R", "H", "G",
        "Gamma1", "eta1", "Gamma0", "eta0", "terminal", "schedule"};
    reject_unknown(jm, keys, "model");
    if (jm.contains("schedule"))
        fail("model.schedule: piecewise coefficient tables are reserved for a future version");
    for (const char* req : {"T", "N", "A", "B", "Q", "R"})
        if (!jm.contains(req)) fail(std::string("model.") + req + ": required key missing");

    ModelParams p;
    p.A = parse_matrix(jm.at("A"), "model.A");
    p.n = static_cast<int>(p.A.rows());
    p.B = parse_matrix(jm.at("B"), "model.B");
    p.r = static_cast<int>(p.B.cols());
    if (jm.contains("n") && jm.at("n").get<int>() != p.n)
        fail("model.n inconsistent with shape of A");
    if (jm.contains("r") && jm.at("r").get<int>() != p.r)
        fail("model.r inconsistent with shape of B");
    if (!jm.at("N").is_number_integer() || jm.at("N").get<int>() < 1)
        fail("model.N: must be an integer >= 1");
    p.num_agents = jm.at("N").get<int>();
    p.horizon = jm.at("T").get<double>();
    if (!(p.horizon > 0)) fail("model.T: must be > 0");

    const Eigen::Index n = p.n;
    p.C = matrix_or(jm, "C", n, n);
    p.f = vector_or(jm, "f", n);
    p.Q = parse_matrix(jm.at("Q"), "model.Q");
    p.R = parse_matrix(jm.at("R"), "model.R");
    p.H = matrix_or(jm, "H", n, n);
    p.G = matrix_or(jm, "G", n, n);
    p.Gamma1 = matrix_or(jm, "Gamma1", n, n);
    p.eta1 = vector_or(jm, "eta1", n);
    p.Gamma0 = matrix_or(jm, "Gamma0", n, n);
    p.eta0 = vector_or(jm, "eta0", n);

    if (jm.contains("terminal")) {
        const json& jt = jm.at("terminal");
        reject_unknown(jt, {"alpha", "c"}, "model.terminal");
        p.terminal.alpha = vector_or(jt, "alpha", n);
        p.terminal.c = vector_or(jt, "c", n);
    } else {
        p.terminal.alpha = Eigen::VectorXd::Zero(n);
        p.terminal.c = Eigen::VectorXd::Zero(n);
    }

    try {
        check_dimensions(p);
    } catch (const DimensionError& e) {
        fail(e.what());
    }
    return p;
}

} // namespace

RunConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        fail(std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) fail("config: top level must be an object");
    reject_unknown(doc,
                   {"model", "grid", "mode", "seed", "replications", "output_dir", "flags"},
                   "config");
    if (!doc.contains("model")) fail("config.model: required key missing");

    RunConfig cfg;
    cfg.model = parse_model(doc.at("model"));

    if (doc.contains("grid")) {
        reject_unknown(doc.at("grid"), {"steps"}, "grid");
        if (doc.at("grid").contains("steps")) cfg.steps = doc.at("grid").at("steps").get<int>();
    }
    if (cfg.steps < 10) fail("grid.steps: must be >= 10");

    if (doc.contains("mode")) {
        const std::string m = doc.at("mode").get<std::string>();
        if (m == "game")
            cfg.mode = Mode::game;
        else if (m == "social")
            cfg.mode = Mode::social;
        else
            fail("mode: expected 'game' or 'social'");
    }
    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("replications")) {
        cfg.replications = doc.at("replications").get<int>();
        if (cfg.replications < 1) fail("replications: must be >= 1");
    }
    if (doc.contains("output_dir")) cfg.output_dir = doc.at("output_dir").get<std::string>();

    if (doc.contains("flags")) {
        const json& jf = doc.at("flags");
        reject_unknown(jf, {"integrator", "phat_variant", "emit_svg"}, "flags");
        if (jf.contains("integrator")) {
            const std::string v = jf.at("integrator").get<std::string>();
            if (v == "rk4")
                cfg.integrator = OdeMethod::rk4;
            else if (v == "euler")
                cfg.integrator = OdeMethod::euler;
            else
                fail("flags.integrator: expected 'rk4' or 'euler'");
        }
        if (jf.contains("phat_variant")) {
            const std::string v = jf.at("phat_variant").get<std::string>();
            if (v == "derived")
                cfg.phat = PhatVariant::derived;
            else if (v == "printed")
                cfg.phat = PhatVariant::printed;
            else
                fail("flags.phat_variant: expected 'derived' or 'printed'");
        }
        if (jf.contains("emit_svg")) cfg.emit_svg = jf.at("emit_svg").get<bool>();
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot read config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void write_manifest(const std::string& path, const ManifestInfo& info) {
    nlohmann::json j;
    j["command"] = info.command;
    j["version"] = MFLQ_VERSION;
    j["config_hash"] = info.config_hash;
    if (info.config) {
        const RunConfig& c = *info.config;
        j["mode"] = mode_name(c.mode);
        j["seed"] = c.seed;
        j["steps"] = c.steps;
        j["replications"] = c.replications;
        j["integrator"] = integrator_name(c.integrator);
        j["phat_variant"] = phat_name(c.phat);
        j["emit_svg"] = c.emit_svg;
        j["n"] = c.model.n;
        j["r"] = c.model.r;
        j["N"] = c.model.num_agents;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

const char* mode_name(Mode m) { return m == Mode::game ? "game" : "social"; }
const char* integrator_name(OdeMethod m) { return m == OdeMethod::rk4 ? "rk4" : "euler"; }
const char* phat_name(PhatVariant v) {
    return v == PhatVariant::derived ? "derived" : "printed";
}

} // namespace mflq
