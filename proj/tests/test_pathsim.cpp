#include <Eigen/Dense>
#include <cmath>

#include "mflq/pathsim.hpp"
#include "mflq/verify.hpp"
#include "support/check.hpp"

using namespace mflq;

namespace {

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

ModelParams zero_weight_params() {
    ModelParams p = reference_params();
    p.Q.setZero();
    p.G.setZero();
    p.f.setZero();
    p.eta1.setZero();
    p.eta0.setZero();
    p.terminal.alpha.setZero();
    p.terminal.c.setZero();
    return p;
}

void mean_zeta_reference_and_degenerate() {
    // Reference data: E zeta(0) = (1 - 0.5/30) * 2 * 1.
    const ModelParams p = reference_params();
    const TimeGrid grid(1.0, 400);
    const Solution sol = build_solution(p, Mode::game, grid);
    CHECK_NEAR(sol.Ezeta.value(0)(0, 0), (1.0 - 0.5 / 30.0) * 2.0, 1e-14);

    // All sources zero: E zeta == 0.
    const Solution zz = build_solution(zero_weight_params(), Mode::game, grid);
    for (int i = 0; i < grid.nodes(); ++i) CHECK(zz.Ezeta.value(i).norm() == 0.0);

    // Constant drift: with A=B=C=0 and Q=0 the matrix terms vanish, M stays
    // at M(0), and E zeta(t) = E zeta(0) + g t with g = -M(0) f.
    ModelParams cp = reference_params();
    cp.A.setZero();
    cp.B.setZero();
    cp.C.setZero();
    cp.Q.setZero();
    cp.f = Eigen::VectorXd::Ones(1);
    const Solution cs = build_solution(cp, Mode::game, TimeGrid(1.0, 100));
    const double m0 = -(1.0 - 0.5 / 30.0) * 2.0 * (1.0 - 0.5);
    const double g = -m0 * 1.0;
    for (int i = 0; i <= 100; i += 20)
        CHECK_NEAR(cs.Ezeta.value(i)(0, 0), cs.Ezeta.value(0)(0, 0) + g * (i / 100.0), 1e-12);
}

void mean_state_boundary_and_cross_route() {
    const ModelParams p = reference_params();
    const TimeGrid grid(1.0, 2000);
    const Solution sol = build_solution(p, Mode::game, grid);

    // E x(T) = E xi = c exactly (boundary enforcement).
    CHECK(sol.Ex.back() == p.terminal.c);

    // Algebraic route Ex = K Ep + Ephi with Ep = (I - M K)^-1 (M Ephi + Ezeta)
    // agrees with the backward ODE node-wise. Strongest self-consistency
    // check of the mean pipeline.
    double gap = 0;
    for (int i = 0; i < grid.nodes(); ++i) {
        const Eigen::VectorXd alg = sol.nodes[static_cast<size_t>(i)].k *
                                        sol.nodes[static_cast<size_t>(i)].Ep +
                                    sol.phi.b.value(i);
        gap = std::max(gap, (alg - sol.Ex.value(i)).norm());
    }
    CHECK_MSG(gap <= 1e-6, "mean-route gap " + std::to_string(gap));

    // All-zero sources: E x == 0.
    const Solution zz = build_solution(zero_weight_params(), Mode::game, TimeGrid(1.0, 200));
    for (int i = 0; i < zz.Ex.nodes(); ++i) CHECK(zz.Ex.value(i).norm() == 0.0);
}

void zero_weight_model_paths_vanish() {
    const ModelParams p = zero_weight_params();
    const TimeGrid grid(1.0, 150);
    const Solution sol = build_solution(p, Mode::game, grid);
    const AgentPath ap = simulate_agent(sol, {91, 4});
    CHECK(ap.x.norm() == 0.0);
    CHECK(ap.z.norm() == 0.0);
    CHECK(ap.u.norm() == 0.0);
    CHECK(ap.zeta.norm() == 0.0);
    CHECK(ap.W.cwiseAbs().maxCoeff() > 0.0); // the noise itself is not degenerate

    ModelParams single = p;
    single.num_agents = 1;
    const Ensemble one =
        simulate_population(single, Mode::game, 7, TimeGrid(1.0, 50), SimOptions{});
    CHECK(one.agents.size() == 1);
    CHECK(one.agents[0].x.norm() == 0.0);
    CHECK(one.social_cost == 0.0);
}

void terminal_identity_and_dual_control() {
    const ModelParams p = reference_params();
    const TimeGrid grid(1.0, 1000);
    const Solution sol = build_solution(p, Mode::game, grid);
    for (int k = 0; k < 10; ++k) {
        const AgentPath ap = simulate_agent(sol, {2025, k});
        // x(T) = xi = alpha W(T) + c exactly.
        const Eigen::VectorXd xi = p.terminal.alpha * ap.W(grid.steps) + p.terminal.c;
        CHECK(ap.x.col(grid.steps) == xi);
        CHECK(ap.xi == xi);
        // u from phat and u from the feedback form agree.
        CHECK_MSG(alt_control_residual(ap, sol) <= 1e-9, "dual control route");
        // Stationarity holds by construction, up to one R^-1 round-trip.
        CHECK(stationarity_residual(ap, p) <= 1e-12);
    }
}

void decoupling_residuals_both_variants() {
    const ModelParams p = reference_params();
    const TimeGrid grid(1.0, 500);
    const Solution derived = build_solution(p, Mode::game, grid);
    double worst = 0;
    for (int k = 0; k < 8; ++k)
        worst = std::max(worst,
                         decoupling_residual(simulate_agent(derived, {11, k}), derived)
                             .relative());
    CHECK_MSG(worst <= 1e-6, "derived residual " + std::to_string(worst));

    SimOptions printed;
    printed.phat = PhatVariant::printed;
    const Solution psol = build_solution(p, Mode::game, grid, printed);
    double pworst = 0;
    for (int k = 0; k < 8; ++k)
        pworst = std::max(
            pworst, decoupling_residual(simulate_agent(psol, {11, k}), psol).relative());
    std::printf("  printed phat variant residual (record): %.6f\n", pworst);
    CHECK(pworst > worst); // the printed variant does not decouple

    // Social mode with valid coupling decouples as well.
    ModelParams sp = reference_params();
    sp.Gamma1 = scalar(-0.5);
    sp.Gamma0 = scalar(-0.5);
    const Solution ssol = build_solution(sp, Mode::social, grid);
    double sworst = 0;
    for (int k = 0; k < 8; ++k)
        sworst = std::max(
            sworst, decoupling_residual(simulate_agent(ssol, {11, k}), ssol).relative());
    CHECK_MSG(sworst <= 1e-6, "social residual " + std::to_string(sworst));
}

void fbsde_residual_scaling() {
    const ModelParams p = reference_params();
    const TimeGrid coarse(1.0, 1000), fine(1.0, 2000);
    const Solution sc = build_solution(p, Mode::game, coarse);
    const Solution sf = build_solution(p, Mode::game, fine);
    double rms_c = 0, rms_f = 0, max_c = 0;
    for (int k = 0; k < 30; ++k) {
        const ResidualStats a = fbsde_residual(simulate_agent(sc, {4242, k}), sc);
        const ResidualStats b = fbsde_residual(simulate_agent(sf, {4242, k}), sf);
        rms_c += a.rms;
        rms_f += b.rms;
        max_c = std::max(max_c, a.max_abs);
    }
    rms_c /= 30;
    rms_f /= 30;
    const double kappa = rms_c / coarse.dt();
    std::printf("  state residual kappa=%.4f (rms %.3e at dt=%.0e)\n", kappa, rms_c,
                coarse.dt());
    CHECK(rms_c <= 1.0 * coarse.dt());
    const double ratio = rms_f / rms_c;
    CHECK_MSG(ratio >= 0.35 && ratio <= 0.65, "state residual ratio " + std::to_string(ratio));
}

void population_statistics() {
    // Sample mean of x_k(T) = W_k(T) over 30 agents within 3/sqrt(30) of 0.
    const ModelParams p = reference_params();
    const TimeGrid grid(1.0, 300);
    const Ensemble ens = simulate_population(p, Mode::game, 12345, grid, SimOptions{});
    double mean_t = 0;
    for (const AgentPath& ap : ens.agents) mean_t += ap.x(0, grid.steps);
    mean_t /= p.num_agents;
    CHECK_MSG(std::abs(mean_t) <= 3.0 / std::sqrt(30.0), "terminal sample mean");

    // xbar is the arithmetic agent mean.
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(1, grid.nodes());
    for (const AgentPath& ap : ens.agents) acc += ap.x;
    acc /= p.num_agents;
    CHECK((acc - ens.xbar).cwiseAbs().maxCoeff() == 0.0);

    // Population average converges to Ex: |xbar - Ex| <= 4 sigma_hat / sqrt(N)
    // node-wise at N = 256.
    ModelParams big = p;
    big.num_agents = 256;
    const TimeGrid g2(1.0, 200);
    const Ensemble bens = simulate_population(big, Mode::game, 777, g2, SimOptions{});
    // 95%-style band: the 4 sigma/sqrt(N) bound holds pointwise, so over a
    // correlated path a rare excursion is allowed, but only a few nodes and
    // never past 6 sigma.
    int soft = 0, hard = 0;
    for (int i = 0; i < g2.nodes(); ++i) {
        double var = 0;
        for (const AgentPath& ap : bens.agents) {
            const double d = ap.x(0, i) - bens.xbar(0, i);
            var += d * d;
        }
        var /= (big.num_agents - 1);
        const double unit = std::sqrt(var) / std::sqrt(256.0) + 1e-12;
        const double dev = std::abs(bens.xbar(0, i) - bens.solution->Ex.value(i)(0, 0));
        if (dev > 4.0 * unit) ++soft;
        if (dev > 6.0 * unit) ++hard;
    }
    CHECK_MSG(soft <= g2.nodes() / 50, std::to_string(soft) + " nodes beyond 4 sigma");
    CHECK_MSG(hard == 0, std::to_string(hard) + " nodes beyond 6 sigma");
}

// The mean-part initial value M(0) of the adjoint decoupling carries a sign
// ambiguity in its source. The arbiter is the adjoint boundary identity at
// t = 0: every agent starts at the deterministic point (W=0, zeta=zeta0), so
// phat(0) = Ep(0) must equal -(I-G0/N)' G [(I-G0) Ex(0) - eta0]. The
// implemented sign satisfies it; the opposite sign misses at O(1).
void m_initial_sign_arbiter() {
    const ModelParams p = reference_params();
    const TimeGrid grid(1.0, 400);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(p.n, p.n);
    const Eigen::MatrixXd Ic0 = I - p.Gamma0 / p.num_agents;

    auto boundary_gap = [&](const DecouplingWeights& w) {
        const RiccatiBundle bundle = build_riccatis(p, w, Mode::game, grid, OdeMethod::rk4);
        const AffineBsdeSolution phi = solve_phi_affine(p, bundle, grid);
        const MatrixPath ez = solve_mean_zeta(p, bundle, phi_moments(phi), grid);
        const Eigen::MatrixXd m0 = bundle.m.value(0);
        const Eigen::MatrixXd k0 = bundle.k.value(0);
        const Eigen::VectorXd ep0 =
            (I - m0 * k0).inverse() * (m0 * phi.b.value(0) + ez.value(0));
        const Eigen::VectorXd ex0 = k0 * ep0 + phi.b.value(0);
        const Eigen::VectorXd boundary =
            -Ic0.transpose() * p.G * ((I - p.Gamma0) * ex0 - p.eta0);
        return (ep0 - boundary).norm();
    };

    const DecouplingWeights good = game_weights(p);
    DecouplingWeights flipped = good;
    flipped.m_init = -good.m_init;
    CHECK(boundary_gap(good) <= 1e-10);
    CHECK(boundary_gap(flipped) > 1e-2);
}

void determinism_and_exchangeability() {
    const ModelParams p = reference_params();
    const TimeGrid grid(1.0, 200);
    SimOptions one;
    one.threads = 1;
    SimOptions four;
    four.threads = 4;
    const Ensemble e1 = simulate_population(p, Mode::game, 99, grid, one);
    const Ensemble e4 = simulate_population(p, Mode::game, 99, grid, four);
    for (int k = 0; k < p.num_agents; ++k) {
        CHECK(e1.agents[static_cast<size_t>(k)].x == e4.agents[static_cast<size_t>(k)].x);
        CHECK(e1.agents[static_cast<size_t>(k)].u == e4.agents[static_cast<size_t>(k)].u);
    }
    CHECK(e1.xbar == e4.xbar);
    CHECK(e1.social_cost == e4.social_cost);

    // Agent paths are a pure function of (seed, agent id): simulating in any
    // order, or standalone, reproduces the ensemble entries bitwise.
    const Solution sol = build_solution(p, Mode::game, grid);
    for (int k : {7, 0, 29, 13}) {
        const AgentPath ap = simulate_agent(sol, {99, k});
        CHECK(ap.x == e1.agents[static_cast<size_t>(k)].x);
        CHECK(ap.W == e1.agents[static_cast<size_t>(k)].W);
    }
}

void run_all() {
    mean_zeta_reference_and_degenerate();
    mean_state_boundary_and_cross_route();
    zero_weight_model_paths_vanish();
    terminal_identity_and_dual_control();
    decoupling_residuals_both_variants();
    fbsde_residual_scaling();
    population_statistics();
    m_initial_sign_arbiter();
    determinism_and_exchangeability();
}

} // namespace

TEST_MAIN("pathsim")
