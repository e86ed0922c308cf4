// Drives the installed CLI binary end to end through std::system.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "support/check.hpp"

namespace fs = std::filesystem;

namespace {

const char* kRefConfig = R"({
  "model": {
    "T": 1.0, "N": 30,
    "A": 0.1, "B": 2, "C": 1, "Q": 1, "R": 5, "H": 1, "G": 2,
    "Gamma1": 0.5, "eta1": 1, "Gamma0": 0.5, "eta0": 1,
    "terminal": {"alpha": 1, "c": 0}
  },
  "grid": {"steps": 200},
  "mode": "game",
  "seed": 12345
})";

fs::path g_dir;

int run(const std::string& args, const std::string& capture = "") {
    std::string cmd = std::string(MFLQ_CLI_PATH) + " " + args;
    if (!capture.empty()) cmd += " >" + capture + " 2>&1";
    const int status = std::system(cmd.c_str());
    return status == -1 ? -1 : ((status >> 8) & 0xff);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    out << body;
}

void validate_exit_codes() {
    const fs::path cfg = g_dir / "ref.json";
    write_file(cfg, kRefConfig);

    CHECK(run("validate --config " + cfg.string() + " --out " + (g_dir / "v1").string()) == 0);

    const fs::path log = g_dir / "social.log";
    CHECK(run("validate --config " + cfg.string() + " --mode social --out " +
              (g_dir / "v2").string(),
              log.string()) == 1);
    const std::string out = slurp(log);
    CHECK_MSG(out.find("Q_Gamma") != std::string::npos, "social failure names Q_Gamma");

    write_file(g_dir / "broken.json", "{ not json");
    CHECK(run("validate --config " + (g_dir / "broken.json").string()) == 2);

    // Config invariant violations are usage errors.
    write_file(g_dir / "badsteps.json",
               std::string(kRefConfig).replace(std::string(kRefConfig).find("200"), 3, "5"));
    CHECK(run("validate --config " + (g_dir / "badsteps.json").string()) == 2);

    CHECK(run("validate --config " + cfg.string() + " --definitely-not-a-flag") == 2);
    CHECK(run("") == 2); // missing subcommand

    // Manifests are written by every subcommand.
    CHECK(fs::exists(g_dir / "v1" / "manifest.json"));
}

void riccati_outputs() {
    const fs::path cfg = g_dir / "ref.json";
    const fs::path out1 = g_dir / "r200";
    CHECK(run("riccati --config " + cfg.string() + " --out " + out1.string(),
              (g_dir / "r.log").string()) == 0);
    const std::string csv = slurp(out1 / "riccati.csv");
    CHECK(csv.rfind("t,Sigma_00,K_00,Pi_00,M_00\n", 0) == 0);

    // Terminal row: t=1 with Sigma = K = 0 exactly.
    const size_t last = csv.rfind("\n1,");
    CHECK_MSG(last != std::string::npos, "terminal row present");
    CHECK(csv.compare(last, 7, "\n1,0,0,") == 0);

    // Boundary values agree between resolutions: Sigma(T), K(T) are pinned
    // zeros and Pi(0), M(0) are closed-form starts, so those fields print
    // identically at steps=200 and steps=1000.
    const fs::path out2 = g_dir / "r1000";
    CHECK(run("riccati --config " + cfg.string() + " --steps 1000 --out " + out2.string(),
              (g_dir / "r2.log").string()) == 0);
    const std::string csv2 = slurp(out2 / "riccati.csv");
    auto split = [](const std::string& row) {
        std::vector<std::string> cells;
        std::istringstream ss(row);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        return cells;
    };
    auto first_row = [](const std::string& s) {
        const size_t a = s.find('\n') + 1;
        return s.substr(a, s.find('\n', a) - a);
    };
    auto last_row = [](const std::string& s) {
        const size_t a = s.rfind('\n', s.size() - 2) + 1;
        return s.substr(a, s.size() - 1 - a);
    };
    const std::vector<std::string> f200 = split(first_row(csv));
    const std::vector<std::string> f1000 = split(first_row(csv2));
    const std::vector<std::string> l200 = split(last_row(csv));
    const std::vector<std::string> l1000 = split(last_row(csv2));
    CHECK(f200[3] == f1000[3] && f200[4] == f1000[4]); // Pi(0), M(0)
    CHECK(l200[1] == "0" && l1000[1] == "0");          // Sigma(T)
    CHECK(l200[2] == "0" && l1000[2] == "0");          // K(T)

    // Zero weights: Pi and M columns identically zero.
    std::string zcfg = kRefConfig;
    zcfg.replace(zcfg.find("\"Q\": 1"), 6, "\"Q\": 0");
    zcfg.replace(zcfg.find("\"G\": 2"), 6, "\"G\": 0");
    write_file(g_dir / "zero.json", zcfg);
    const fs::path out3 = g_dir / "rzero";
    CHECK(run("riccati --config " + (g_dir / "zero.json").string() + " --out " + out3.string(),
              (g_dir / "r3.log").string()) == 0);
    std::istringstream rows(slurp(out3 / "riccati.csv"));
    std::string line;
    std::getline(rows, line); // header
    while (std::getline(rows, line)) {
        const size_t c1 = line.rfind(',');
        const size_t c2 = line.rfind(',', c1 - 1);
        CHECK(line.substr(c2 + 1) == "0,0");
    }
}

void simulate_outputs() {
    const fs::path cfg = g_dir / "ref.json";
    const fs::path out1 = g_dir / "s1";
    const fs::path out2 = g_dir / "s2";
    CHECK(run("simulate --config " + cfg.string() + " --out " + out1.string(),
              (g_dir / "s1.log").string()) == 0);
    CHECK(run("simulate --config " + cfg.string() + " --out " + out2.string(),
              (g_dir / "s2.log").string()) == 0);

    // Same seed, two runs: byte-identical artifacts.
    CHECK(slurp(out1 / "paths.csv") == slurp(out2 / "paths.csv"));
    CHECK(slurp(out1 / "costs.csv") == slurp(out2 / "costs.csv"));
    CHECK(slurp(out1 / "phi.csv") == slurp(out2 / "phi.csv"));

    // Thread count does not change the bytes.
    const fs::path out4 = g_dir / "s4";
    const int rc = std::system(("MFLQ_THREADS=4 " + std::string(MFLQ_CLI_PATH) +
                                " simulate --config " + cfg.string() + " --out " +
                                out4.string() + " >/dev/null 2>&1")
                                   .c_str());
    CHECK(((rc >> 8) & 0xff) == 0);
    CHECK(slurp(out1 / "paths.csv") == slurp(out4 / "paths.csv"));

    // Terminal identity in the emitted table: x(T) equals W(T) per agent.
    std::istringstream rows(slurp(out1 / "paths.csv"));
    std::string line;
    std::getline(rows, line);
    CHECK(line == "agent,t,W_0,phi_0,zeta_0,phat_0,x_0,z_0,u_0");
    int terminal_rows = 0;
    while (std::getline(rows, line)) {
        std::istringstream cells(line);
        std::string agent, t, w, phi, zeta, phat, x;
        std::getline(cells, agent, ',');
        std::getline(cells, t, ',');
        std::getline(cells, w, ',');
        std::getline(cells, phi, ',');
        std::getline(cells, zeta, ',');
        std::getline(cells, phat, ',');
        std::getline(cells, x, ',');
        if (t == "1") {
            ++terminal_rows;
            CHECK_MSG(w == x, "x(T) == W(T) for agent " + agent);
        }
    }
    CHECK(terminal_rows == 30);

    // costs.csv carries one row per agent plus the social total.
    const std::string costs = slurp(out1 / "costs.csv");
    CHECK(costs.rfind("agent,J_k\n", 0) == 0);
    CHECK(costs.find("\nJ_soc,") != std::string::npos);
}

void sweep_requires_decoupled_z() {
    // Social-valid data but C != 0: the limit comparison refuses.
    std::string ccfg = kRefConfig;
    ccfg.replace(ccfg.find("\"Gamma1\": 0.5"), 13, "\"Gamma1\": -0.5");
    ccfg.replace(ccfg.find("\"Gamma0\": 0.5"), 13, "\"Gamma0\": -0.5");
    ccfg.replace(ccfg.find("\"mode\": \"game\""), 14, "\"mode\": \"social\"");
    write_file(g_dir / "social_c.json", ccfg);
    const fs::path log = g_dir / "sweep.log";
    CHECK(run("sweep --config " + (g_dir / "social_c.json").string() + " --out " +
              (g_dir / "w").string(),
              log.string()) == 1);
    CHECK(slurp(log).find("requires C=0") != std::string::npos);

    std::string scfg = ccfg;
    scfg.replace(scfg.find("\"C\": 1"), 6, "\"C\": 0");
    write_file(g_dir / "social.json", scfg);
    const fs::path out = g_dir / "wok";
    CHECK(run("sweep --config " + (g_dir / "social.json").string() + " --N 10,30,100,300" +
              " --paths 32 --out " + out.string(),
              (g_dir / "w2.log").string()) == 0);
    const std::string sweep = slurp(out / "sweep.csv");
    CHECK(sweep.rfind("N,metric_name,value\n", 0) == 0);
    CHECK(sweep.find("\n300,x_l2sq,") != std::string::npos);
    CHECK(slurp(g_dir / "w2.log").find("slope sigma_sup") != std::string::npos);
}

void reproduce_runs_and_is_deterministic() {
    const fs::path out1 = g_dir / "rep1";
    const fs::path out2 = g_dir / "rep2";
    CHECK(run("reproduce-paper --steps 200 --out " + out1.string(),
              (g_dir / "rep.log").string()) == 0);
    CHECK(run("reproduce-paper --steps 200 --out " + out2.string(),
              (g_dir / "rep2.log").string()) == 0);
    for (const char* f : {"riccati.csv", "paths.csv", "costs.csv", "phi.csv", "manifest.json",
                          "riccati.svg", "zeta.svg", "x.svg", "u.svg"}) {
        CHECK_MSG(fs::exists(out1 / f), std::string("missing ") + f);
        CHECK_MSG(slurp(out1 / f) == slurp(out2 / f), std::string("nondeterministic ") + f);
    }
    const std::string manifest = slurp(out1 / "manifest.json");
    CHECK(manifest.find("\"command\": \"reproduce-paper\"") != std::string::npos);
    CHECK(manifest.find("\"integrator\": \"euler\"") != std::string::npos);
    CHECK(manifest.find("\"config_hash\"") != std::string::npos);
}

void run_all() {
    g_dir = fs::temp_directory_path() / "mflq_cli_test";
    fs::remove_all(g_dir);
    fs::create_directories(g_dir);
    validate_exit_codes();
    riccati_outputs();
    simulate_outputs();
    sweep_requires_decoupled_z();
    reproduce_runs_and_is_deterministic();
    fs::remove_all(g_dir);
}

} // namespace

TEST_MAIN("cli")
