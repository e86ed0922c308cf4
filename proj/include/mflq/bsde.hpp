#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "mflq/riccati.hpp"

namespace mflq {

// Coefficient on the mean term of the auxiliary BSDE drift. `derived` is the
// algebraically consistent K*Qm - Sigma*Qc form (identical to the displayed
// game-mode equation); `printed` reproduces the social-mode display verbatim,
// which flips the sign of the coupling contribution and is kept only so the
// residual checks can report it.
enum class PhiMeanCoupling { derived, printed };

// phi_k(t) = a(t) W_k(t) + b(t), beta_k(t) = a(t). Exact for affine terminal
// data xi = alpha W(T) + c: substituting the ansatz reduces the BSDE to two
// deterministic terminal-value ODEs,
//   da/dt = D(t) a,                                 a(T) = alpha
//   db/dt = [D(t) + L(t)] b + C (I+Sigma H)^-1 a + g(t),  b(T) = c
// with D = A + Sigma Qc, L = K Qm - Sigma Qc, g = -K eta_w + f.
struct AffineBsdeSolution {
    Mode mode = Mode::game;
    MatrixPath a; // n x 1 coefficient of W
    MatrixPath b; // n x 1 offset; E phi = b, E beta = a
};

struct PhiMoments {
    MatrixPath Ephi;  // = b
    MatrixPath Ebeta; // = a
};

AffineBsdeSolution solve_phi_affine(const ModelParams& p, const RiccatiBundle& bundle,
                                    const TimeGrid& grid, OdeMethod method = OdeMethod::rk4,
                                    PhiMeanCoupling coupling = PhiMeanCoupling::derived);

inline PhiMoments phi_moments(const AffineBsdeSolution& sol) { return {sol.b, sol.a}; }

struct ResidualStats {
    double max_abs = 0.0;
    double rms = 0.0;
};

// Per-step residual phi(t+dt) - phi(t) - drift*dt - beta*dW along one sampled
// Brownian path (increments supplied by the caller).
ResidualStats phi_residual(const AffineBsdeSolution& sol, const ModelParams& p,
                           const RiccatiBundle& bundle, const std::vector<double>& increments,
                           const TimeGrid& grid,
                           PhiMeanCoupling coupling = PhiMeanCoupling::derived);

// Least-squares Monte-Carlo backward scheme for general terminal data
// xi = h(W(T)). Optional extension; the affine solver is the production path.
struct RegressionBsdeSolution {
    MatrixPath phi_mean; // per-node cross-path mean of the regressed phi
    MatrixPath beta_mean;
    MatrixPath beta_se; // standard error of beta_mean entries
    std::vector<Eigen::MatrixXd> phi_coeffs; // per node, n x (degree+1)
    int paths = 0;
    int degree = 1;
    bool ridge_used = false;
};

using TerminalFunction = std::function<Eigen::VectorXd(double)>;

RegressionBsdeSolution solve_phi_regression(const ModelParams& p, const RiccatiBundle& bundle,
                                            const TimeGrid& grid, int paths, int degree,
                                            std::uint64_t seed,
                                            const TerminalFunction& terminal = nullptr,
                                            PhiMeanCoupling coupling = PhiMeanCoupling::derived);

// Drift pieces shared with the simulation layer.
Eigen::MatrixXd phi_state_matrix(const ModelParams& p, const RiccatiBundle& bundle, double t);
Eigen::MatrixXd phi_mean_matrix(const ModelParams& p, const RiccatiBundle& bundle, double t,
                                PhiMeanCoupling coupling);
Eigen::VectorXd phi_offset(const ModelParams& p, const RiccatiBundle& bundle, double t);

} // namespace mflq
