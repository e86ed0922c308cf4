#include "mflq/bsde.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "mflq/errors.hpp"
#include "mflq/rng.hpp"

namespace mflq {

namespace {

Eigen::MatrixXd mixing_inverse(const ModelParams& p, const Eigen::MatrixXd& sigma, double t) {
    return robust_inverse(Eigen::MatrixXd::Identity(p.n, p.n) + sigma * p.H, "(I + Sigma H)",
                          t);
}

} // namespace

Eigen::MatrixXd phi_state_matrix(const ModelParams& p, const RiccatiBundle& bundle, double t) {
    return p.A + bundle.sigma.eval(t) * bundle.weights.q_centered;
}

Eigen::MatrixXd phi_mean_matrix(const ModelParams& p, const RiccatiBundle& bundle, double t,
                                PhiMeanCoupling coupling) {
    const Eigen::MatrixXd sigma = bundle.sigma.eval(t);
    const Eigen::MatrixXd k = bundle.k.eval(t);
    if (coupling == PhiMeanCoupling::printed && bundle.mode == Mode::social) {
        // Social display taken verbatim: -[(Sigma-K)Q - (K-Sigma/N)Q_Gamma].
        const SocialCoefficients sc = social_transforms(p);
        if (bundle.weights.infinite_population)
            return k * (p.Q + sc.Q_Gamma) - sigma * p.Q;
        const double N = static_cast<double>(p.num_agents);
        return -((sigma - k) * p.Q - (k - sigma / N) * sc.Q_Gamma);
    }
    return k * bundle.weights.q_mean - sigma * bundle.weights.q_centered;
}

Eigen::VectorXd phi_offset(const ModelParams& p, const RiccatiBundle& bundle, double t) {
    return -bundle.k.eval(t) * bundle.weights.eta_weighted + p.f;
}

AffineBsdeSolution solve_phi_affine(const ModelParams& p, const RiccatiBundle& bundle,
                                    const TimeGrid& grid, OdeMethod method,
                                    PhiMeanCoupling coupling) {
    AffineBsdeSolution sol;
    sol.mode = bundle.mode;

    const MatrixField a_rhs = [&](double t, const Eigen::MatrixXd& a) -> Eigen::MatrixXd {
        return phi_state_matrix(p, bundle, t) * a;
    };
    sol.a = integrate_matrix_ode(a_rhs, grid.steps, p.terminal.alpha, Direction::backward,
                                 grid, method, "phi.a");

    const MatrixField b_rhs = [&](double t, const Eigen::MatrixXd& b) -> Eigen::MatrixXd {
        const Eigen::MatrixXd sigma = bundle.sigma.eval(t);
        return phi_state_matrix(p, bundle, t) * b + phi_mean_matrix(p, bundle, t, coupling) * b +
               p.C * mixing_inverse(p, sigma, t) * sol.a.eval(t) + phi_offset(p, bundle, t);
    };
    sol.b = integrate_matrix_ode(b_rhs, grid.steps, p.terminal.c, Direction::backward, grid,
                                 method, "phi.b");
    return sol;
}

ResidualStats phi_residual(const AffineBsdeSolution& sol, const ModelParams& p,
                           const RiccatiBundle& bundle, const std::vector<double>& increments,
                           const TimeGrid& grid, PhiMeanCoupling coupling) {
    if (static_cast<int>(increments.size()) != grid.steps)
        throw std::invalid_argument("phi_residual: need one increment per step");
    const double dt = grid.dt();
    ResidualStats stats;
    double sum_sq = 0.0;
    double w = 0.0;
    for (int i = 0; i < grid.steps; ++i) {
        const double t = grid.node(i);
        const Eigen::VectorXd phi_now = sol.a.value(i) * w + sol.b.value(i);
        const double w_next = w + increments[static_cast<size_t>(i)];
        const Eigen::VectorXd phi_next = sol.a.value(i + 1) * w_next + sol.b.value(i + 1);
        const Eigen::MatrixXd sigma = bundle.sigma.value(i);
        const Eigen::VectorXd drift =
            phi_state_matrix(p, bundle, t) * phi_now +
            phi_mean_matrix(p, bundle, t, coupling) * sol.b.value(i) +
            p.C * mixing_inverse(p, sigma, t) * sol.a.value(i) + phi_offset(p, bundle, t);
        const Eigen::VectorXd res =
            phi_next - phi_now - drift * dt - sol.a.value(i) * increments[static_cast<size_t>(i)];
        const double norm = res.norm();
        stats.max_abs = std::max(stats.max_abs, norm);
        sum_sq += norm * norm;
        w = w_next;
    }
    stats.rms = std::sqrt(sum_sq / grid.steps);
    return stats;
}

RegressionBsdeSolution solve_phi_regression(const ModelParams& p, const RiccatiBundle& bundle,
                                            const TimeGrid& grid, int paths, int degree,
                                            std::uint64_t seed, const TerminalFunction& terminal,
                                            PhiMeanCoupling coupling) {
    if (paths < 2) throw std::invalid_argument("solve_phi_regression: need >= 2 paths");
    if (degree < 1) throw std::invalid_argument("solve_phi_regression: basis degree >= 1");
    const int n = p.n;
    const int nb = degree + 1;
    const double dt = grid.dt();
    const double sqdt = std::sqrt(dt);

    RegressionBsdeSolution out;
    out.paths = paths;
    out.degree = degree;

    // Terminal Brownian values; increments are regenerated from the counter
    // stream during the backward sweep instead of being stored.
    Eigen::VectorXd w_now = Eigen::VectorXd::Zero(paths);
    std::vector<std::uint64_t> keys(static_cast<size_t>(paths));
    for (int j = 0; j < paths; ++j)
        keys[static_cast<size_t>(j)] = rng::stream_key(RngStreamSpec{seed, j});
    for (int i = 0; i < grid.steps; ++i)
        for (int j = 0; j < paths; ++j)
            w_now(j) += sqdt * rng::normal_at(keys[static_cast<size_t>(j)], 0, i);

    Eigen::MatrixXd phi(n, paths); // phi at the node being processed, per path
    for (int j = 0; j < paths; ++j)
        phi.col(j) = terminal ? terminal(w_now(j))
                              : Eigen::VectorXd(p.terminal.alpha * w_now(j) + p.terminal.c);

    const int n_nodes = grid.nodes();
    std::vector<Eigen::MatrixXd> mean_vals(static_cast<size_t>(n_nodes));
    std::vector<Eigen::MatrixXd> beta_vals(static_cast<size_t>(n_nodes));
    std::vector<Eigen::MatrixXd> se_vals(static_cast<size_t>(n_nodes));
    out.phi_coeffs.assign(static_cast<size_t>(n_nodes), Eigen::MatrixXd::Zero(n, nb));

    mean_vals[static_cast<size_t>(grid.steps)] = phi.rowwise().mean();
    beta_vals[static_cast<size_t>(grid.steps)] = Eigen::MatrixXd::Zero(n, 1);
    se_vals[static_cast<size_t>(grid.steps)] = Eigen::MatrixXd::Zero(n, 1);

    // Ridge-guarded least squares on polynomial features of W(t_i).
    auto regress = [&](const Eigen::MatrixXd& basis, const Eigen::MatrixXd& targets,
                       Eigen::MatrixXd& coeffs) -> Eigen::MatrixXd {
        Eigen::MatrixXd gram = basis.transpose() * basis / static_cast<double>(paths);
        Eigen::MatrixXd rhs = basis.transpose() * targets.transpose() / static_cast<double>(paths);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        if (!(lo > 1e-12 * std::max(hi, 1.0))) {
            gram += 1e-8 * Eigen::MatrixXd::Identity(nb, nb);
            out.ridge_used = true;
        }
        coeffs = gram.llt().solve(rhs).transpose(); // n x nb
        return coeffs * basis.transpose();          // fitted values, n x paths
    };

    Eigen::MatrixXd basis(paths, nb);
    Eigen::VectorXd dw(paths);
    for (int i = grid.steps - 1; i >= 0; --i) {
        for (int j = 0; j < paths; ++j) {
            dw(j) = sqdt * rng::normal_at(keys[static_cast<size_t>(j)], 0, i);
            w_now(j) -= dw(j);
        }
        for (int j = 0; j < paths; ++j) {
            double v = 1.0;
            for (int d = 0; d < nb; ++d) {
                basis(j, d) = v;
                v *= w_now(j);
            }
        }
        const double t = grid.node(i);
        const Eigen::MatrixXd Dm = phi_state_matrix(p, bundle, t);
        const Eigen::MatrixXd Lm = phi_mean_matrix(p, bundle, t, coupling);
        const Eigen::MatrixXd sigma = bundle.sigma.eval(t);
        const Eigen::MatrixXd cmix = p.C * mixing_inverse(p, sigma, t);
        const Eigen::VectorXd g = phi_offset(p, bundle, t);
        const Eigen::VectorXd mean_next = phi.rowwise().mean();

        // beta_i ~ E[phi_{i+1} dW | W_i] / dt
        Eigen::MatrixXd beta_targets = phi;
        for (int j = 0; j < paths; ++j) beta_targets.col(j) *= dw(j) / dt;
        Eigen::MatrixXd beta_coeffs;
        const Eigen::MatrixXd beta_fit = regress(basis, beta_targets, beta_coeffs);

        // phi_i ~ E[phi_{i+1} - drift dt | W_i]
        Eigen::MatrixXd targets(n, paths);
        for (int j = 0; j < paths; ++j) {
            const Eigen::VectorXd drift =
                Dm * phi.col(j) + Lm * mean_next + cmix * beta_fit.col(j) + g;
            targets.col(j) = phi.col(j) - drift * dt;
        }
        Eigen::MatrixXd phi_coeffs;
        phi = regress(basis, targets, phi_coeffs);
        out.phi_coeffs[static_cast<size_t>(i)] = phi_coeffs;

        mean_vals[static_cast<size_t>(i)] = phi.rowwise().mean();
        beta_vals[static_cast<size_t>(i)] = beta_fit.rowwise().mean();
        Eigen::MatrixXd se(n, 1);
        for (int row = 0; row < n; ++row) {
            const double mu = beta_targets.row(row).mean();
            const double var =
                (beta_targets.row(row).array() - mu).square().sum() / (paths - 1);
            se(row, 0) = std::sqrt(var / paths);
        }
        se_vals[static_cast<size_t>(i)] = se;
    }

    out.phi_mean = MatrixPath(grid, std::move(mean_vals));
    out.beta_mean = MatrixPath(grid, std::move(beta_vals));
    out.beta_se = MatrixPath(grid, std::move(se_vals));
    return out;
}

} // namespace mflq
