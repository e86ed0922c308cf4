// Command-line front end: validate | riccati | simulate | sweep | reproduce-paper.
// Exit codes: 0 ok, 1 domain failure, 2 usage or config parse failure.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mflq/config.hpp"
#include "mflq/csv.hpp"
#include "mflq/errors.hpp"
#include "mflq/svg.hpp"

namespace fs = std::filesystem;
using namespace mflq;

namespace {

struct CliOverrides {
    std::string config_path;
    std::string mode;
    std::string integrator;
    std::string phat;
    std::string out;
    std::uint64_t seed = 0;
    int steps = 0;
    bool svg = false;
    bool has_seed = false, has_steps = false;
};

void add_common_flags(CLI::App* cmd, CliOverrides& ov, bool config_required) {
    auto* copt = cmd->add_option("--config", ov.config_path, "JSON configuration file");
    if (config_required) copt->required();
    cmd->add_option("--mode", ov.mode, "game|social")->check(CLI::IsMember({"game", "social"}));
    cmd->add_option("--seed", ov.seed, "RNG seed")->each([&ov](const std::string&) {
        ov.has_seed = true;
    });
    cmd->add_option("--steps", ov.steps, "time steps")->each([&ov](const std::string&) {
        ov.has_steps = true;
    });
    cmd->add_flag("--svg", ov.svg, "emit SVG figures");
    cmd->add_option("--integrator", ov.integrator, "rk4|euler")
        ->check(CLI::IsMember({"rk4", "euler"}));
    cmd->add_option("--phat-variant", ov.phat, "derived|printed")
        ->check(CLI::IsMember({"derived", "printed"}));
    cmd->add_option("--out", ov.out, "output directory");
}

RunConfig resolve_config(const CliOverrides& ov, std::string& config_bytes) {
    RunConfig cfg;
    if (!ov.config_path.empty()) {
        std::ifstream in(ov.config_path, std::ios::binary);
        if (!in) throw ConfigError("cannot read config file: " + ov.config_path);
        std::ostringstream ss;
        ss << in.rdbuf();
        config_bytes = ss.str();
        cfg = parse_config(config_bytes);
    } else {
        cfg.model = reference_params();
        config_bytes = "builtin:reference";
    }
    if (!ov.mode.empty()) cfg.mode = ov.mode == "game" ? Mode::game : Mode::social;
    if (ov.has_seed) cfg.seed = ov.seed;
    if (ov.has_steps) {
        if (ov.steps < 10) throw ConfigError("--steps must be >= 10");
        cfg.steps = ov.steps;
    }
    if (ov.svg) cfg.emit_svg = true;
    if (!ov.integrator.empty())
        cfg.integrator = ov.integrator == "rk4" ? OdeMethod::rk4 : OdeMethod::euler;
    if (!ov.phat.empty())
        cfg.phat = ov.phat == "derived" ? PhatVariant::derived : PhatVariant::printed;
    if (!ov.out.empty()) cfg.output_dir = ov.out;
    return cfg;
}

std::string hash_hex(const std::string& bytes) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

void emit_manifest(const RunConfig& cfg, const std::string& command,
                   const std::string& config_bytes) {
    fs::create_directories(cfg.output_dir);
    ManifestInfo info;
    info.command = command;
    info.config_hash = hash_hex(config_bytes);
    info.config = &cfg;
    write_manifest((fs::path(cfg.output_dir) / "manifest.json").string(), info);
}

void print_report(const ValidationReport& rep) {
    for (const auto& c : rep.checks)
        std::cout << (c.passed ? "[ok]   " : "[FAIL] ") << c.name
                  << (c.detail.empty() ? "" : "  (" + c.detail + ")") << "\n";
    std::cout << (rep.passed ? "validation passed" : "validation failed") << "\n";
}

int cmd_validate(const RunConfig& cfg, const std::string& config_bytes) {
    emit_manifest(cfg, "validate", config_bytes);
    const ValidationReport rep = cfg.mode == Mode::game ? validate_game_params(cfg.model)
                                                        : validate_social_params(cfg.model);
    print_report(rep);
    return rep.passed ? 0 : 1;
}

void plot_riccati(const RiccatiBundle& bundle, const TimeGrid& grid, const fs::path& file) {
    std::vector<double> t(static_cast<size_t>(grid.nodes()));
    for (int i = 0; i < grid.nodes(); ++i) t[static_cast<size_t>(i)] = grid.node(i);
    svg::LinePlot plot("Riccati solutions");
    auto series = [&](const char* name, const MatrixPath& path) {
        std::vector<double> y(t.size());
        for (int i = 0; i < grid.nodes(); ++i) y[static_cast<size_t>(i)] = path.value(i)(0, 0);
        plot.add_series(name, t, y);
    };
    series("Sigma", bundle.sigma);
    series("K", bundle.k);
    series("Pi", bundle.pi);
    series("M", bundle.m);
    plot.write(file.string());
}

void plot_agent_field(const Ensemble& ens, const char* title,
                      const Eigen::MatrixXd AgentPath::*field, const fs::path& file) {
    const TimeGrid& grid = ens.solution->grid;
    std::vector<double> t(static_cast<size_t>(grid.nodes()));
    for (int i = 0; i < grid.nodes(); ++i) t[static_cast<size_t>(i)] = grid.node(i);
    svg::LinePlot plot(title);
    plot.set_legend_limit(5);
    for (const AgentPath& ap : ens.agents) {
        std::vector<double> y(t.size());
        for (int i = 0; i < grid.nodes(); ++i)
            y[static_cast<size_t>(i)] = (ap.*field)(0, i);
        plot.add_series("agent " + std::to_string(ap.k), t, y);
    }
    plot.write(file.string());
}

int cmd_riccati(const RunConfig& cfg, const std::string& config_bytes,
                bool write_run_manifest = true) {
    if (write_run_manifest) emit_manifest(cfg, "riccati", config_bytes);
    const TimeGrid grid = cfg.grid();
    const RiccatiBundle bundle = cfg.mode == Mode::game
                                     ? build_game_riccatis(cfg.model, grid, cfg.integrator)
                                     : build_social_riccatis(cfg.model, grid, cfg.integrator);
    const fs::path out(cfg.output_dir);
    write_riccati_csv((out / "riccati.csv").string(), bundle, grid);
    if (cfg.emit_svg && cfg.model.n == 1) plot_riccati(bundle, grid, out / "riccati.svg");
    std::cout << "riccati.csv written to " << cfg.output_dir << "\n";
    return 0;
}

int cmd_simulate(const RunConfig& cfg, const std::string& config_bytes,
                 bool write_run_manifest = true) {
    if (write_run_manifest) emit_manifest(cfg, "simulate", config_bytes);
    const TimeGrid grid = cfg.grid();
    const Ensemble ens =
        simulate_population(cfg.model, cfg.mode, cfg.seed, grid, cfg.sim_options());
    const fs::path out(cfg.output_dir);
    write_paths_csv((out / "paths.csv").string(), ens);
    write_phi_csv((out / "phi.csv").string(), ens.solution->phi, grid);
    CostReport costs;
    costs.agent_costs = ens.agent_costs;
    costs.social_cost = ens.social_cost;
    costs.dt = grid.dt();
    write_costs_csv((out / "costs.csv").string(), costs);

    double residual_max = 0.0;
    for (const AgentPath& ap : ens.agents)
        residual_max = std::max(residual_max, decoupling_residual(ap, *ens.solution).sup_abs);
    std::cout << "J_soc " << format_double(ens.social_cost) << "\n";
    std::cout << "decoupling_residual_max " << format_double(residual_max) << "\n";

    if (cfg.replications > 1) {
        double mean_soc = ens.social_cost;
        for (int rep = 1; rep < cfg.replications; ++rep) {
            const std::uint64_t rep_seed =
                rng::stream_key(cfg.seed, static_cast<std::uint64_t>(rep));
            mean_soc +=
                simulate_population(cfg.model, cfg.mode, rep_seed, grid, cfg.sim_options())
                    .social_cost;
        }
        std::cout << "J_soc_mean_over_replications "
                  << format_double(mean_soc / cfg.replications) << "\n";
    }

    if (cfg.emit_svg && cfg.model.n == 1 && cfg.model.r == 1) {
        plot_agent_field(ens, "zeta paths", &AgentPath::zeta, out / "zeta.svg");
        plot_agent_field(ens, "optimal state paths", &AgentPath::x, out / "x.svg");
        plot_agent_field(ens, "optimal control paths", &AgentPath::u, out / "u.svg");
    }
    return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::string& config_bytes, std::vector<int> Ns,
              int paths) {
    emit_manifest(cfg, "sweep", config_bytes);
    if (Ns.empty()) Ns = {10, 30, 100, 300, 1000};
    const SweepReport report =
        convergence_sweep(cfg.model, Ns, cfg.grid(), paths, cfg.seed, cfg.sim_options());
    write_sweep_csv((fs::path(cfg.output_dir) / "sweep.csv").string(), report);
    for (const SweepMetricFit& fit : report.fits)
        std::cout << "slope " << fit.name << " " << format_double(fit.slope) << " (r2 "
                  << format_double(fit.r2) << ")\n";
    return 0;
}

int cmd_reproduce(RunConfig cfg) {
    // Built-in reference configuration; Euler stepping for figure-faithful
    // curves unless the integrator was overridden.
    cfg.emit_svg = true;
    const std::string config_bytes = "builtin:reference";
    emit_manifest(cfg, "reproduce-paper", config_bytes);
    int rc = cmd_riccati(cfg, config_bytes, false);
    if (rc != 0) return rc;
    return cmd_simulate(cfg, config_bytes, false);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized strategies for linear-quadratic mean-field games and teams "
                 "with backward dynamics"};
    app.require_subcommand(1);

    CliOverrides ov;
    std::vector<int> sweep_ns;
    int sweep_paths = 256;

    CLI::App* validate = app.add_subcommand("validate", "check model assumptions");
    add_common_flags(validate, ov, true);
    CLI::App* riccati = app.add_subcommand("riccati", "integrate the Riccati systems");
    add_common_flags(riccati, ov, true);
    CLI::App* simulate = app.add_subcommand("simulate", "simulate the N-agent ensemble");
    add_common_flags(simulate, ov, true);
    CLI::App* sweep = app.add_subcommand("sweep", "finite-vs-limit convergence sweep");
    add_common_flags(sweep, ov, true);
    sweep->add_option("--N", sweep_ns, "population ladder (default 10,30,100,300,1000)")
        ->delimiter(',');
    sweep->add_option("--paths", sweep_paths, "Monte-Carlo paths per population size");
    CLI::App* reproduce =
        app.add_subcommand("reproduce-paper", "regenerate the bundled reference example");
    add_common_flags(reproduce, ov, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        std::string config_bytes;
        if (reproduce->parsed()) {
            CliOverrides rov = ov;
            if (rov.integrator.empty()) rov.integrator = "euler";
            if (rov.out.empty()) rov.out = "reproduction";
            RunConfig cfg = resolve_config(rov, config_bytes);
            return cmd_reproduce(cfg);
        }
        const RunConfig cfg = resolve_config(ov, config_bytes);
        if (validate->parsed()) return cmd_validate(cfg, config_bytes);
        if (riccati->parsed()) return cmd_riccati(cfg, config_bytes);
        if (simulate->parsed()) return cmd_simulate(cfg, config_bytes);
        if (sweep->parsed()) return cmd_sweep(cfg, config_bytes, sweep_ns, sweep_paths);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DimensionError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
