#include "mflq/riccati.hpp"

#include <Eigen/Cholesky>

#include "mflq/errors.hpp"

namespace mflq {

namespace {

Eigen::MatrixXd identity_of(const ModelParams& p) {
    return Eigen::MatrixXd::Identity(p.n, p.n);
}

void require_validation(const ValidationReport& rep, const char* which) {
    if (rep.passed) return;
    std::string names;
    for (const auto& c : rep.checks)
        if (!c.passed) names += (names.empty() ? "" : ", ") + c.name;
    throw UnsupportedError(std::string(which) + " assumptions not satisfied: " + names);
}

} // namespace

DecouplingWeights game_weights(const ModelParams& p) {
    const double N = static_cast<double>(p.num_agents);
    const Eigen::MatrixXd I = identity_of(p);
    const Eigen::MatrixXd Ic1 = I - p.Gamma1 / N;
    const Eigen::MatrixXd Ic0 = I - p.Gamma0 / N;
    DecouplingWeights w;
    w.q_centered = Ic1.transpose() * p.Q * Ic1;
    w.q_mean = Ic1.transpose() * p.Q * (I - p.Gamma1);
    w.pi_init = -Ic0.transpose() * p.G * Ic0;
    // The mean part of the filtered initial condition expands to
    // -(I-G0/N)' G (I-G0); the adjoint boundary identity at t=0 pins the sign.
    w.m_init = -Ic0.transpose() * p.G * (I - p.Gamma0);
    w.zeta_init = Ic0.transpose() * p.G * p.eta0;
    w.eta_weighted = Ic1.transpose() * p.Q * p.eta1;
    return w;
}

DecouplingWeights social_weights(const ModelParams& p) {
    const double N = static_cast<double>(p.num_agents);
    const SocialCoefficients sc = social_transforms(p);
    DecouplingWeights w;
    w.q_centered = p.Q - sc.Q_Gamma / N;
    w.q_mean = p.Q - sc.Q_Gamma;
    w.pi_init = -(p.G - sc.G_Gamma / N);
    w.m_init = -(p.G - sc.G_Gamma);
    w.zeta_init = sc.eta0_bar;
    w.eta_weighted = sc.eta1_bar;
    return w;
}

DecouplingWeights social_limit_weights(const ModelParams& p) {
    const SocialCoefficients sc = social_transforms(p);
    DecouplingWeights w;
    w.q_centered = p.Q;
    w.q_mean = p.Q - sc.Q_Gamma;
    w.pi_init = -p.G;
    w.m_init = -(p.G - sc.G_Gamma);
    w.zeta_init = sc.eta0_bar;
    w.eta_weighted = sc.eta1_bar;
    w.infinite_population = true;
    return w;
}

Eigen::MatrixXd control_weight_inverse_form(const ModelParams& p) {
    return p.B * p.R.llt().solve(p.B.transpose());
}

Eigen::MatrixXd z_feedthrough(const ModelParams& p, const Eigen::MatrixXd& sigma, double t) {
    const Eigen::MatrixXd mix =
        robust_inverse(identity_of(p) + sigma * p.H, "(I + Sigma H)", t);
    return p.C * mix * sigma * p.C.transpose();
}

RiccatiBundle build_riccatis(const ModelParams& p, const DecouplingWeights& w, Mode mode,
                             const TimeGrid& grid, OdeMethod method) {
    const Eigen::MatrixXd brb = control_weight_inverse_form(p);
    const Eigen::MatrixXd At = p.A.transpose();
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(p.n, p.n);

    RiccatiBundle out;
    out.mode = mode;
    out.weights = w;

    const MatrixField sigma_rhs = [&](double t, const Eigen::MatrixXd& s) -> Eigen::MatrixXd {
        return p.A * s + s * At + s * w.q_centered * s - brb - z_feedthrough(p, s, t);
    };
    out.sigma = integrate_matrix_ode(sigma_rhs, grid.steps, zero, Direction::backward, grid,
                                     method, "Sigma");

    const MatrixField k_rhs = [&](double t, const Eigen::MatrixXd& k) -> Eigen::MatrixXd {
        return p.A * k + k * At + k * w.q_mean * k - brb -
               z_feedthrough(p, out.sigma.eval(t), t);
    };
    out.k = integrate_matrix_ode(k_rhs, grid.steps, zero, Direction::backward, grid, method,
                                 "K");

    const MatrixField pi_rhs = [&](double t, const Eigen::MatrixXd& pi) -> Eigen::MatrixXd {
        const Eigen::MatrixXd s_gain = brb + z_feedthrough(p, out.sigma.eval(t), t);
        return -pi * At - p.A * pi + pi * s_gain * pi - w.q_centered;
    };
    out.pi =
        integrate_matrix_ode(pi_rhs, 0, w.pi_init, Direction::forward, grid, method, "Pi");

    const MatrixField m_rhs = [&](double t, const Eigen::MatrixXd& m) -> Eigen::MatrixXd {
        const Eigen::MatrixXd s_gain = brb + z_feedthrough(p, out.sigma.eval(t), t);
        return -m * At - p.A * m + m * s_gain * m - w.q_mean;
    };
    out.m = integrate_matrix_ode(m_rhs, 0, w.m_init, Direction::forward, grid, method, "M");

    return out;
}

RiccatiBundle build_game_riccatis(const ModelParams& p, const TimeGrid& grid,
                                  OdeMethod method) {
    require_validation(validate_game_params(p), "game");
    return build_riccatis(p, game_weights(p), Mode::game, grid, method);
}

RiccatiBundle build_social_riccatis(const ModelParams& p, const TimeGrid& grid,
                                    OdeMethod method) {
    require_validation(validate_social_params(p), "social");
    return build_riccatis(p, social_weights(p), Mode::social, grid, method);
}

LimitBundle build_limit_riccatis(const ModelParams& p, const TimeGrid& grid, OdeMethod method) {
    require_validation(validate_social_params(p), "social");
    if (p.C.cwiseAbs().maxCoeff() != 0.0)
        throw UnsupportedError("limit comparison requires C=0");

    LimitBundle out;
    out.bundle = build_riccatis(p, social_limit_weights(p), Mode::social, grid, method);

    const SocialCoefficients sc = social_transforms(p);
    const Eigen::MatrixXd brb = control_weight_inverse_form(p);
    const Eigen::MatrixXd At = p.A.transpose();
    const MatrixField mt_rhs = [&](double t, const Eigen::MatrixXd& mt) -> Eigen::MatrixXd {
        const Eigen::MatrixXd pi_bar = out.bundle.pi.eval(t);
        return -mt * At - p.A * mt + mt * brb * pi_bar + pi_bar * brb * mt + mt * brb * mt +
               sc.Q_Gamma;
    };
    out.m_tilde = integrate_matrix_ode(mt_rhs, 0, sc.G_Gamma, Direction::forward, grid, method,
                                       "MTilde");
    return out;
}

} // namespace mflq
