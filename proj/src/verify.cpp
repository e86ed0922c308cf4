#include "mflq/verify.hpp"

#include <algorithm>
#include <cmath>

#include "mflq/errors.hpp"
#include "mflq/parallel.hpp"

namespace mflq {

namespace {

double quad_form(const Eigen::MatrixXd& w, const Eigen::VectorXd& v) {
    return v.dot(w * v);
}

} // namespace

double path_cost(const ModelParams& p, const Eigen::MatrixXd& x, const Eigen::MatrixXd& u,
                 const Eigen::MatrixXd& z, const Eigen::MatrixXd& xbar, double dt) {
    const int n_nodes = static_cast<int>(x.cols());
    double integral = 0.0;
    for (int i = 0; i < n_nodes; ++i) {
        const Eigen::VectorXd tracking = x.col(i) - p.Gamma1 * xbar.col(i) - p.eta1;
        const double running = quad_form(p.Q, tracking) + quad_form(p.R, u.col(i)) +
                               quad_form(p.H, z.col(i));
        const double w = (i == 0 || i == n_nodes - 1) ? 0.5 : 1.0;
        integral += w * running;
    }
    integral *= dt;
    const Eigen::VectorXd initial = x.col(0) - p.Gamma0 * xbar.col(0) - p.eta0;
    return 0.5 * (integral + quad_form(p.G, initial));
}

CostReport evaluate_costs(const Ensemble& ensemble, const ModelParams& p) {
    CostReport rep;
    rep.dt = ensemble.solution->grid.dt();
    rep.agent_costs.reserve(ensemble.agents.size());
    for (const AgentPath& ap : ensemble.agents) {
        const double j = path_cost(p, ap.x, ap.u, ap.z, ensemble.xbar, rep.dt);
        // Sum of squared seminorms; anything below roundoff means bad inputs.
        if (j < -1e-12) throw SolverError("negative agent cost " + std::to_string(j));
        rep.agent_costs.push_back(j);
        rep.social_cost += j;
    }
    return rep;
}

double stationarity_residual(const AgentPath& agent, const ModelParams& p) {
    double sup = 0.0;
    for (int i = 0; i < agent.phat.cols(); ++i) {
        const Eigen::VectorXd r = p.B.transpose() * agent.phat.col(i) + p.R * agent.u.col(i);
        sup = std::max(sup, r.norm());
    }
    return sup;
}

double alt_control_residual(const AgentPath& agent, const Solution& sol) {
    double sup = 0.0;
    for (int i = 0; i < agent.x.cols(); ++i) {
        const NodeCoefficients& nc = sol.nodes[static_cast<size_t>(i)];
        const Eigen::VectorXd alt =
            -sol.r_inv_bt * (nc.pi * agent.x.col(i) + (nc.m - nc.pi) * nc.Ex + agent.zeta.col(i));
        sup = std::max(sup, (agent.u.col(i) - alt).norm());
    }
    return sup;
}

DecouplingResidual decoupling_residual(const AgentPath& agent, const Solution& sol) {
    DecouplingResidual out;
    for (int i = 0; i < agent.x.cols(); ++i) {
        const NodeCoefficients& nc = sol.nodes[static_cast<size_t>(i)];
        const Eigen::VectorXd expected =
            nc.pi * (agent.x.col(i) - nc.Ex) + nc.m * nc.Ex + agent.zeta.col(i);
        out.sup_abs = std::max(out.sup_abs, (agent.phat.col(i) - expected).norm());
        out.sup_phat = std::max(out.sup_phat, agent.phat.col(i).norm());
    }
    return out;
}

ResidualStats fbsde_residual(const AgentPath& agent, const Solution& sol) {
    const ModelParams& p = sol.params;
    const double dt = sol.grid.dt();
    ResidualStats stats;
    double sum_sq = 0.0;
    const int steps = sol.grid.steps;
    for (int i = 0; i < steps; ++i) {
        const double dw = agent.W(i + 1) - agent.W(i);
        const Eigen::VectorXd drift =
            p.A * agent.x.col(i) + p.B * agent.u.col(i) + p.C * agent.z.col(i) + p.f;
        const Eigen::VectorXd res =
            agent.x.col(i + 1) - agent.x.col(i) - drift * dt - agent.z.col(i) * dw;
        const double norm = res.norm();
        stats.max_abs = std::max(stats.max_abs, norm);
        sum_sq += norm * norm;
    }
    stats.rms = std::sqrt(sum_sq / steps);
    return stats;
}

GapTable optimality_gap(const ModelParams& p, Mode mode, const PerturbationFunction& v,
                        const std::vector<double>& epsilons, const TimeGrid& grid,
                        std::uint64_t seed, int replications, const SimOptions& options) {
    if (epsilons.empty()) throw std::invalid_argument("optimality_gap: no epsilons");
    if (replications < 1) throw std::invalid_argument("optimality_gap: replications >= 1");

    // Deterministic perturbed-state response, shared by all replications:
    // d(Dx)/dt = A Dx + B v, Dx(T) = 0, integrated backward.
    const MatrixField dx_rhs = [&](double t, const Eigen::MatrixXd& dx) -> Eigen::MatrixXd {
        return p.A * dx + p.B * v(t);
    };
    const MatrixPath delta_x =
        integrate_matrix_ode(dx_rhs, grid.steps, Eigen::VectorXd::Zero(p.n),
                             Direction::backward, grid, options.integrator, "Delta x");

    const int n_nodes = grid.nodes();
    Eigen::MatrixXd dx_mat(p.n, n_nodes);
    Eigen::MatrixXd v_mat(p.r, n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
        dx_mat.col(i) = delta_x.value(i);
        v_mat.col(i) = v(grid.node(i));
    }

    GapTable table;
    table.epsilons = epsilons;
    table.replications = replications;
    table.delta_j.assign(epsilons.size(), 0.0);

    // One deterministic solve; each replication only redraws the agent paths.
    // The per-agent cost changes are identically distributed (exchangeable
    // agents), so the table is averaged over replications and over which
    // agent receives the perturbation.
    const Solution sol = build_solution(p, mode, grid, options);
    const double inv_n = 1.0 / static_cast<double>(p.num_agents);
    std::vector<std::vector<double>> partial(
        static_cast<size_t>(replications), std::vector<double>(epsilons.size(), 0.0));
    parallel_for(
        replications,
        [&](int rep) {
            const std::uint64_t rep_seed =
                rng::stream_key(seed, static_cast<std::uint64_t>(rep));
            std::vector<AgentPath> agents(static_cast<size_t>(p.num_agents));
            Eigen::MatrixXd xbar = Eigen::MatrixXd::Zero(p.n, grid.nodes());
            for (int k = 0; k < p.num_agents; ++k) {
                agents[static_cast<size_t>(k)] = simulate_agent(sol, {rep_seed, k});
                xbar += agents[static_cast<size_t>(k)].x;
            }
            xbar *= inv_n;
            for (const AgentPath& agent : agents) {
                const double base = path_cost(p, agent.x, agent.u, agent.z, xbar, grid.dt());
                for (size_t e = 0; e < epsilons.size(); ++e) {
                    const double eps = epsilons[e];
                    const double perturbed =
                        path_cost(p, agent.x + eps * dx_mat, agent.u + eps * v_mat, agent.z,
                                  xbar + (eps * inv_n) * dx_mat, grid.dt());
                    partial[static_cast<size_t>(rep)][e] += perturbed - base;
                }
            }
        },
        options.threads);
    for (int rep = 0; rep < replications; ++rep)
        for (size_t e = 0; e < epsilons.size(); ++e)
            table.delta_j[e] += partial[static_cast<size_t>(rep)][e];
    for (double& dj : table.delta_j) dj /= static_cast<double>(replications) * p.num_agents;

    // Least squares for dJ = l e + q e^2.
    double s11 = 0, s12 = 0, s22 = 0, r1 = 0, r2 = 0;
    for (size_t e = 0; e < epsilons.size(); ++e) {
        const double x1 = epsilons[e], x2 = epsilons[e] * epsilons[e];
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        r1 += x1 * table.delta_j[e];
        r2 += x2 * table.delta_j[e];
    }
    const double det = s11 * s22 - s12 * s12;
    table.linear_coef = (r1 * s22 - r2 * s12) / det;
    table.quad_coef = (s11 * r2 - s12 * r1) / det;

    double res_sq = 0.0, data_sq = 0.0;
    for (size_t e = 0; e < epsilons.size(); ++e) {
        const double fit = table.linear_coef * epsilons[e] +
                           table.quad_coef * epsilons[e] * epsilons[e];
        res_sq += (table.delta_j[e] - fit) * (table.delta_j[e] - fit);
        data_sq += table.delta_j[e] * table.delta_j[e];
    }
    table.fit_residual_rel = data_sq > 0 ? std::sqrt(res_sq / data_sq) : std::sqrt(res_sq);
    return table;
}

SweepMetricFit fit_loglog(const std::string& name, const std::vector<double>& keys,
                          const std::vector<double>& values, double floor) {
    SweepMetricFit fit;
    fit.name = name;
    std::vector<double> lx, ly;
    for (size_t i = 0; i < keys.size(); ++i) {
        if (values[i] > floor) {
            lx.push_back(std::log(keys[i]));
            ly.push_back(std::log(values[i]));
        }
    }
    const size_t m = lx.size();
    if (m < 2) return fit;
    double mx = 0, my = 0;
    for (size_t i = 0; i < m; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

SweepReport convergence_sweep(const ModelParams& p, const std::vector<int>& populations,
                              const TimeGrid& grid, int paths, std::uint64_t seed,
                              const SimOptions& options) {
    if (populations.size() < 4)
        throw std::invalid_argument("convergence_sweep: need at least 4 population sizes");
    for (size_t i = 1; i < populations.size(); ++i)
        if (populations[i] <= populations[i - 1])
            throw std::invalid_argument("convergence_sweep: populations must increase");
    if (paths < 2) throw std::invalid_argument("convergence_sweep: need >= 2 paths");

    const Solution limit = build_limit_solution(p, grid, options);
    const double dt = grid.dt();
    const double sqdt = std::sqrt(dt);

    SweepReport report;
    report.paths = paths;

    for (int N : populations) {
        ModelParams pn = p;
        pn.num_agents = N;
        const Solution finite = build_solution(pn, Mode::social, grid, options);

        SweepEntry entry;
        entry.population = N;
        for (int i = 0; i < grid.nodes(); ++i) {
            entry.sigma_sup = std::max(
                entry.sigma_sup, (finite.bundle.sigma.value(i) - limit.bundle.sigma.value(i)).norm());
            entry.pi_sup = std::max(
                entry.pi_sup, (finite.bundle.pi.value(i) - limit.bundle.pi.value(i)).norm());
        }

        // Common random numbers: path j reuses stream (seed, j) for every N.
        std::vector<SweepEntry> partials(static_cast<size_t>(paths));
        parallel_for(
            paths,
            [&](int j) {
                const std::uint64_t key = rng::stream_key(RngStreamSpec{seed, j});
                std::vector<double> increments(static_cast<size_t>(grid.steps));
                for (int i = 0; i < grid.steps; ++i)
                    increments[static_cast<size_t>(i)] = sqdt * rng::normal_at(key, 0, i);
                const AgentPath fine = simulate_agent_with_increments(finite, increments, j);
                const AgentPath lim = simulate_agent_with_increments(limit, increments, j);
                SweepEntry& acc = partials[static_cast<size_t>(j)];
                for (int i = 0; i < grid.nodes(); ++i) {
                    const double w = (i == 0 || i == grid.steps) ? 0.5 : 1.0;
                    acc.phi_l2sq += w * (fine.phi.col(i) - lim.phi.col(i)).squaredNorm();
                    acc.beta_l2sq += w * (fine.beta.col(i) - lim.beta.col(i)).squaredNorm();
                    acc.zeta_l2sq += w * (fine.zeta.col(i) - lim.zeta.col(i)).squaredNorm();
                    acc.x_l2sq += w * (fine.x.col(i) - lim.x.col(i)).squaredNorm();
                }
            },
            options.threads);
        for (const SweepEntry& acc : partials) {
            entry.phi_l2sq += acc.phi_l2sq;
            entry.beta_l2sq += acc.beta_l2sq;
            entry.zeta_l2sq += acc.zeta_l2sq;
            entry.x_l2sq += acc.x_l2sq;
        }
        const double scale = dt / paths;
        entry.phi_l2sq *= scale;
        entry.beta_l2sq *= scale;
        entry.zeta_l2sq *= scale;
        entry.x_l2sq *= scale;
        report.entries.push_back(entry);
    }

    std::vector<double> ns;
    for (int N : populations) ns.push_back(static_cast<double>(N));
    auto collect = [&](const std::string& name, auto member) {
        std::vector<double> vals;
        for (const SweepEntry& e : report.entries) vals.push_back(e.*member);
        report.fits.push_back(fit_loglog(name, ns, vals));
    };
    collect("sigma_sup", &SweepEntry::sigma_sup);
    collect("pi_sup", &SweepEntry::pi_sup);
    collect("phi_l2sq", &SweepEntry::phi_l2sq);
    collect("beta_l2sq", &SweepEntry::beta_l2sq);
    collect("zeta_l2sq", &SweepEntry::zeta_l2sq);
    collect("x_l2sq", &SweepEntry::x_l2sq);
    return report;
}

GainCoincidence gain_coincidence_check(const ModelParams& p, const TimeGrid& grid,
                                       OdeMethod method) {
    const LimitBundle limit = build_limit_riccatis(p, grid, method);
    SimOptions options;
    options.integrator = method;
    const Solution limit_sol = build_limit_solution(p, grid, options);

    const Eigen::MatrixXd r_inv_bt = p.R.llt().solve(p.B.transpose());
    GainCoincidence out;
    double gain_sup = 0.0, ex_sup = 0.0;
    for (int i = 0; i < grid.nodes(); ++i) {
        const Eigen::MatrixXd defect =
            limit.m_tilde.value(i) + limit.bundle.pi.value(i) - limit.bundle.m.value(i);
        out.identity_sup = std::max(out.identity_sup, defect.norm());
        gain_sup = std::max(gain_sup, (r_inv_bt * defect).norm());
        ex_sup = std::max(ex_sup, limit_sol.Ex.value(i).norm());
    }
    out.gain_gap = gain_sup * ex_sup;
    return out;
}

} // namespace mflq
