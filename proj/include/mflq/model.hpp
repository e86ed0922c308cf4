#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mflq/grid.hpp"

namespace mflq {

// Terminal state of each agent: xi_k = alpha * W_k(T) + c, with W_k the
// agent's scalar driving Brownian motion. Identical across agents, which
// makes the terminal conditions i.i.d.
struct TerminalSpec {
    Eigen::VectorXd alpha; // n x 1
    Eigen::VectorXd c;     // n x 1
};

// Problem data. All coefficients are constant in time (v1 restriction; the
// config schema reserves a schedule extension point). Immutable after
// construction, safe to share across threads.
struct ModelParams {
    int n = 1;          // state dimension
    int r = 1;          // control dimension
    int num_agents = 1; // N
    double horizon = 1.0;

    Eigen::MatrixXd A; // n x n drift
    Eigen::MatrixXd B; // n x r control
    Eigen::MatrixXd C; // n x n second-unknown coupling
    Eigen::VectorXd f; // n drift offset

    Eigen::MatrixXd Q; // n x n state weight
    Eigen::MatrixXd R; // r x r control weight
    Eigen::MatrixXd H; // n x n z-weight
    Eigen::MatrixXd G; // n x n initial-state weight

    Eigen::MatrixXd Gamma1; // n x n running coupling
    Eigen::VectorXd eta1;   // n running offset
    Eigen::MatrixXd Gamma0; // n x n initial coupling
    Eigen::VectorXd eta0;   // n initial offset

    TerminalSpec terminal;
};

// Cost coefficients after absorbing the coupling into the weights:
//   Q_Gamma = Q G1 + G1' Q - G1' Q G1,  eta1_bar = Q eta1 - G1' Q eta1
// and the same pattern for (G, Gamma0).
struct SocialCoefficients {
    Eigen::MatrixXd Q_Gamma;
    Eigen::VectorXd eta1_bar;
    Eigen::MatrixXd G_Gamma;
    Eigen::VectorXd eta0_bar;
};

struct ValidationCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool passed = false;
};

// Throws DimensionError on shape inconsistencies (structural, not an
// assumption failure).
void check_dimensions(const ModelParams& p);

// Standing assumptions of the game problem: R symmetric positive definite,
// Q/H/G symmetric positive semidefinite, everything finite.
ValidationReport validate_game_params(const ModelParams& p);

// Social problem adds Q_Gamma <= 0 and G_Gamma <= 0.
ValidationReport validate_social_params(const ModelParams& p);

SocialCoefficients social_transforms(const ModelParams& p);

// Definiteness tolerance on extreme eigenvalues of hand-entered matrices.
inline constexpr double kDefinitenessTol = 1e-10;

// Built-in reference configuration used by `reproduce-paper` and the demo
// tests: scalar model, N=30, T=1, A=0.1, B=2, C=1, Q=1, R=5, H=1, G=2,
// Gamma1=Gamma0=0.5, eta1=eta0=1, xi_k = W_k(T).
ModelParams reference_params();

} // namespace mflq
