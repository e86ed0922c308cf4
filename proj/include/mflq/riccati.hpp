#pragma once

#include <Eigen/Dense>

#include "mflq/integrate.hpp"
#include "mflq/matrix_path.hpp"
#include "mflq/model.hpp"

namespace mflq {

enum class Mode { game, social };

// Weight matrices and boundary values that distinguish the game pipeline,
// the finite-population social pipeline and its infinite-population limit.
// Everything downstream (Riccati systems, the auxiliary BSDE, mean paths,
// agent reconstruction) is parameterized by this bundle.
struct DecouplingWeights {
    Eigen::MatrixXd q_centered;   // weight on the centered state in Sigma/Pi
    Eigen::MatrixXd q_mean;       // weight on the mean state in K/M
    Eigen::MatrixXd pi_init;      // Pi(0)
    Eigen::MatrixXd m_init;       // M(0)
    Eigen::VectorXd zeta_init;    // zeta(0) = E zeta(0)
    Eigen::VectorXd eta_weighted; // running-offset source term
    bool infinite_population = false;
};

DecouplingWeights game_weights(const ModelParams& p);
DecouplingWeights social_weights(const ModelParams& p);
// N -> infinity social weights (used by the convergence sweep; requires C=0).
DecouplingWeights social_limit_weights(const ModelParams& p);

// B R^-1 B^T (R symmetric positive definite).
Eigen::MatrixXd control_weight_inverse_form(const ModelParams& p);
// C (I + Sigma H)^-1 Sigma C^T at one node.
Eigen::MatrixXd z_feedthrough(const ModelParams& p, const Eigen::MatrixXd& sigma, double t);

struct RiccatiBundle {
    Mode mode = Mode::game;
    DecouplingWeights weights;
    MatrixPath sigma; // backward, Sigma(T) = 0
    MatrixPath k;     // backward, K(T) = 0
    MatrixPath pi;    // forward from pi_init
    MatrixPath m;     // forward from m_init
};

// Integrates the four coupled matrix equations:
//   dSigma/dt = A Sigma + Sigma A' + Sigma Qc Sigma - B R^-1 B' - C(I+Sigma H)^-1 Sigma C'
//   dK/dt     = A K + K A' + K Qm K - B R^-1 B' - C(I+Sigma H)^-1 Sigma C'
//   dPi/dt    = -Pi A' - A Pi + Pi S Pi - Qc,   S = B R^-1 B' + C(I+Sigma H)^-1 Sigma C'
//   dM/dt     = -M A' - A M + M S M - Qm
// Sigma and K run backward from zero; Pi and M run forward from their
// closed-form initial values, with Sigma entering through a cubic-Hermite
// table at the RK4 stage times.
RiccatiBundle build_game_riccatis(const ModelParams& p, const TimeGrid& grid,
                                  OdeMethod method = OdeMethod::rk4);
RiccatiBundle build_social_riccatis(const ModelParams& p, const TimeGrid& grid,
                                    OdeMethod method = OdeMethod::rk4);

struct LimitBundle {
    RiccatiBundle bundle; // SigmaBar, KBar, PiBar, MBar under limit weights
    MatrixPath m_tilde;   // forward from G_Gamma; satisfies MTilde + PiBar = MBar
};

// Infinite-population equations; requires C = 0.
LimitBundle build_limit_riccatis(const ModelParams& p, const TimeGrid& grid,
                                 OdeMethod method = OdeMethod::rk4);

// Shared builder used by the three entry points above.
RiccatiBundle build_riccatis(const ModelParams& p, const DecouplingWeights& w, Mode mode,
                             const TimeGrid& grid, OdeMethod method);

} // namespace mflq
