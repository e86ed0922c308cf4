#include "mflq/pathsim.hpp"

#include <cmath>

#include "mflq/errors.hpp"
#include "mflq/parallel.hpp"
#include "mflq/verify.hpp"

namespace mflq {

namespace {

Eigen::MatrixXd identity_of(const ModelParams& p) {
    return Eigen::MatrixXd::Identity(p.n, p.n);
}

std::vector<NodeCoefficients> build_node_cache(const ModelParams& p, const RiccatiBundle& bundle,
                                               const AffineBsdeSolution& phi,
                                               const MatrixPath& Ezeta, const MatrixPath& Ex,
                                               const TimeGrid& grid, PhatVariant variant,
                                               MatrixPath& Ep_out) {
    const Eigen::MatrixXd I = identity_of(p);
    const Eigen::MatrixXd brb = control_weight_inverse_form(p);
    const Eigen::MatrixXd At = p.A.transpose();
    const Eigen::MatrixXd Ct = p.C.transpose();

    const int n_nodes = grid.nodes();
    std::vector<NodeCoefficients> cache(static_cast<size_t>(n_nodes));
    std::vector<Eigen::MatrixXd> ep_vals(static_cast<size_t>(n_nodes));

    for (int i = 0; i < n_nodes; ++i) {
        const double t = grid.node(i);
        NodeCoefficients& nc = cache[static_cast<size_t>(i)];
        nc.sigma = bundle.sigma.value(i);
        nc.k = bundle.k.value(i);
        nc.pi = bundle.pi.value(i);
        nc.m = bundle.m.value(i);
        nc.mix = robust_inverse(I + nc.sigma * p.H, "(I + Sigma H)", t);
        nc.s_gain = brb + p.C * nc.mix * nc.sigma * Ct;

        const Eigen::MatrixXd inv_pi_sigma =
            robust_inverse(I - nc.pi * nc.sigma, "(I - Pi Sigma)", t);
        nc.phat_centered_phi =
            inv_pi_sigma * (variant == PhatVariant::derived ? nc.pi : nc.sigma);
        nc.phat_centered_zeta = inv_pi_sigma;

        nc.gamma_beta = -(nc.pi + p.H) * nc.mix;
        nc.gamma_phat = -(I - nc.pi * nc.sigma) *
                        robust_inverse(I + p.H * nc.sigma, "(I + H Sigma)", t) * Ct;

        nc.zeta_drift = nc.pi * nc.s_gain - At;
        nc.zeta_mean_drift = (nc.m - nc.pi) * nc.s_gain;
        nc.zeta_beta = -nc.pi * p.C * nc.mix;
        nc.zeta_mean_beta = (nc.pi - nc.m) * p.C * nc.mix;
        // +eta_w: propagating Ep = M Ex + Ezeta through the filtered adjoint
        // drift fixes the offset sign (the decoupling residual is the arbiter).
        nc.zeta_offset = -nc.m * p.f + bundle.weights.eta_weighted;

        nc.a = phi.a.value(i);
        nc.b = phi.b.value(i);
        nc.Ezeta = Ezeta.value(i);
        nc.Ex = Ex.value(i);

        const Eigen::VectorXd mean_src = nc.m * nc.b + nc.Ezeta;
        if (variant == PhatVariant::derived)
            nc.Ep = robust_inverse(I - nc.m * nc.k, "(I - M K)", t) * mean_src;
        else
            nc.Ep = inv_pi_sigma * mean_src;
        ep_vals[static_cast<size_t>(i)] = nc.Ep;
    }
    Ep_out = MatrixPath(grid, std::move(ep_vals));
    return cache;
}

Solution assemble_solution(const ModelParams& p, const DecouplingWeights& w, Mode mode,
                           const TimeGrid& grid, const SimOptions& options) {
    Solution sol;
    sol.params = p;
    sol.mode = mode;
    sol.grid = grid;
    sol.options = options;
    sol.bundle = build_riccatis(p, w, mode, grid, options.integrator);
    sol.phi = solve_phi_affine(p, sol.bundle, grid, options.integrator, options.phi_mean);
    const PhiMoments moments = phi_moments(sol.phi);
    sol.Ezeta = solve_mean_zeta(p, sol.bundle, moments, grid, options.integrator);
    sol.Ex = solve_mean_state(p, sol.bundle, moments, sol.Ezeta, p.terminal.c, grid,
                              options.integrator);
    sol.nodes = build_node_cache(p, sol.bundle, sol.phi, sol.Ezeta, sol.Ex, grid, options.phat,
                                 sol.Ep);
    sol.r_inv_bt = p.R.llt().solve(p.B.transpose());
    return sol;
}

void require_pass(const ValidationReport& rep, const char* which) {
    if (rep.passed) return;
    std::string names;
    for (const auto& c : rep.checks)
        if (!c.passed) names += (names.empty() ? "" : ", ") + c.name;
    throw UnsupportedError(std::string(which) + " assumptions not satisfied: " + names);
}

} // namespace

MatrixPath solve_mean_zeta(const ModelParams& p, const RiccatiBundle& bundle,
                           const PhiMoments& moments, const TimeGrid& grid, OdeMethod method) {
    const Eigen::MatrixXd brb = control_weight_inverse_form(p);
    const Eigen::MatrixXd At = p.A.transpose();
    const Eigen::MatrixXd I = identity_of(p);
    const MatrixField rhs = [&](double t, const Eigen::MatrixXd& ez) -> Eigen::MatrixXd {
        const Eigen::MatrixXd sigma = bundle.sigma.eval(t);
        const Eigen::MatrixXd m = bundle.m.eval(t);
        const Eigen::MatrixXd mix = robust_inverse(I + sigma * p.H, "(I + Sigma H)", t);
        const Eigen::MatrixXd s_gain = brb + p.C * mix * sigma * p.C.transpose();
        const Eigen::MatrixXd ebeta = moments.Ebeta.eval(t);
        return (m * s_gain - At) * ez - m * p.C * mix * ebeta - m * p.f +
               bundle.weights.eta_weighted;
    };
    return integrate_matrix_ode(rhs, 0, bundle.weights.zeta_init, Direction::forward, grid,
                                method, "Ezeta");
}

MatrixPath solve_mean_state(const ModelParams& p, const RiccatiBundle& bundle,
                            const PhiMoments& moments, const MatrixPath& Ezeta,
                            const Eigen::VectorXd& Exi, const TimeGrid& grid,
                            OdeMethod method) {
    const Eigen::MatrixXd brb = control_weight_inverse_form(p);
    const Eigen::MatrixXd I = identity_of(p);
    const MatrixField rhs = [&](double t, const Eigen::MatrixXd& ex) -> Eigen::MatrixXd {
        const Eigen::MatrixXd sigma = bundle.sigma.eval(t);
        const Eigen::MatrixXd m = bundle.m.eval(t);
        const Eigen::MatrixXd mix = robust_inverse(I + sigma * p.H, "(I + Sigma H)", t);
        const Eigen::MatrixXd s_gain = brb + p.C * mix * sigma * p.C.transpose();
        return (p.A - s_gain * m) * ex - s_gain * Ezeta.eval(t) +
               p.C * mix * moments.Ebeta.eval(t) + p.f;
    };
    return integrate_matrix_ode(rhs, grid.steps, Exi, Direction::backward, grid, method, "Ex");
}

Solution build_solution(const ModelParams& p, Mode mode, const TimeGrid& grid,
                        const SimOptions& options) {
    if (mode == Mode::game) {
        require_pass(validate_game_params(p), "game");
        return assemble_solution(p, game_weights(p), mode, grid, options);
    }
    require_pass(validate_social_params(p), "social");
    return assemble_solution(p, social_weights(p), mode, grid, options);
}

Solution build_limit_solution(const ModelParams& p, const TimeGrid& grid,
                              const SimOptions& options) {
    require_pass(validate_social_params(p), "social");
    if (p.C.cwiseAbs().maxCoeff() != 0.0)
        throw UnsupportedError("limit comparison requires C=0");
    return assemble_solution(p, social_limit_weights(p), Mode::social, grid, options);
}

AgentPath simulate_agent_with_increments(const Solution& sol,
                                         const std::vector<double>& increments, int agent_id) {
    const TimeGrid& grid = sol.grid;
    if (static_cast<int>(increments.size()) != grid.steps)
        throw std::invalid_argument("simulate_agent: need one increment per step");
    const ModelParams& p = sol.params;
    const int n_nodes = grid.nodes();
    const double dt = grid.dt();

    AgentPath ap;
    ap.k = agent_id;
    ap.W.resize(n_nodes);
    ap.phi.resize(p.n, n_nodes);
    ap.beta.resize(p.n, n_nodes);
    ap.zeta.resize(p.n, n_nodes);
    ap.phat.resize(p.n, n_nodes);
    ap.x.resize(p.n, n_nodes);
    ap.z.resize(p.n, n_nodes);
    ap.u.resize(p.r, n_nodes);

    double w = 0.0;
    Eigen::VectorXd zeta = sol.bundle.weights.zeta_init;
    for (int i = 0; i < n_nodes; ++i) {
        const NodeCoefficients& nc = sol.nodes[static_cast<size_t>(i)];
        const Eigen::VectorXd phi = nc.a * w + nc.b;
        const Eigen::VectorXd phat = nc.Ep + nc.phat_centered_phi * (phi - nc.b) +
                                     nc.phat_centered_zeta * (zeta - nc.Ezeta);
        ap.W(i) = w;
        ap.phi.col(i) = phi;
        ap.beta.col(i) = nc.a;
        ap.zeta.col(i) = zeta;
        ap.phat.col(i) = phat;
        ap.x.col(i) = nc.sigma * (phat - nc.Ep) + nc.k * nc.Ep + phi;
        ap.z.col(i) = nc.mix * (nc.a - nc.sigma * p.C.transpose() * phat);
        ap.u.col(i) = -sol.r_inv_bt * phat;

        if (i < grid.steps) {
            // Euler-Maruyama for zeta; drift and diffusion exactly as
            // displayed, with phat supplied by the consistency relation.
            const Eigen::VectorXd drift = nc.zeta_drift * zeta +
                                          nc.zeta_mean_drift * nc.Ezeta + nc.zeta_beta * nc.a +
                                          nc.zeta_mean_beta * nc.a + nc.zeta_offset;
            const Eigen::VectorXd gamma = nc.gamma_beta * nc.a + nc.gamma_phat * phat;
            const double dw = increments[static_cast<size_t>(i)];
            zeta += drift * dt + gamma * dw;
            if (!zeta.allFinite()) throw BlowUpError("zeta path", grid.node(i + 1));
            w += dw;
        }
    }
    ap.xi = ap.x.col(grid.steps);
    return ap;
}

AgentPath simulate_agent(const Solution& sol, const RngStreamSpec& stream) {
    const std::uint64_t key = rng::stream_key(stream);
    const double sqdt = std::sqrt(sol.grid.dt());
    std::vector<double> increments(static_cast<size_t>(sol.grid.steps));
    for (int i = 0; i < sol.grid.steps; ++i)
        increments[static_cast<size_t>(i)] = sqdt * rng::normal_at(key, 0, i);
    return simulate_agent_with_increments(sol, increments, stream.agent_id);
}

Ensemble simulate_population(const ModelParams& p, Mode mode, std::uint64_t seed,
                             const TimeGrid& grid, const SimOptions& options) {
    Ensemble ens;
    auto sol = std::make_shared<Solution>(build_solution(p, mode, grid, options));
    ens.solution = sol;
    ens.agents.resize(static_cast<size_t>(p.num_agents));
    parallel_for(
        p.num_agents,
        [&](int k) { ens.agents[static_cast<size_t>(k)] = simulate_agent(*sol, {seed, k}); },
        options.threads);

    // Fixed-order reduction keeps the output independent of thread count.
    ens.xbar = Eigen::MatrixXd::Zero(p.n, grid.nodes());
    for (const AgentPath& ap : ens.agents) ens.xbar += ap.x;
    ens.xbar /= static_cast<double>(p.num_agents);

    const CostReport costs = evaluate_costs(ens, p);
    ens.agent_costs = costs.agent_costs;
    ens.social_cost = costs.social_cost;
    return ens;
}

} // namespace mflq
