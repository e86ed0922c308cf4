#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mflq/pathsim.hpp"

namespace mflq {

struct CostReport {
    std::vector<double> agent_costs; // J_k, one realized path per agent
    double social_cost = 0.0;        // sum of J_k
    std::string quadrature = "trapezoid";
    double dt = 0.0;
};

// Realized cost of one agent's paths against a given population average:
//   1/2 [ integral of |x - G1 xbar - eta1|_Q^2 + |u|_R^2 + |z|_H^2
//         + |x(0) - G0 xbar(0) - eta0|_G^2 ]
// with trapezoidal quadrature on the simulation grid.
double path_cost(const ModelParams& p, const Eigen::MatrixXd& x, const Eigen::MatrixXd& u,
                 const Eigen::MatrixXd& z, const Eigen::MatrixXd& xbar, double dt);

CostReport evaluate_costs(const Ensemble& ensemble, const ModelParams& p);

// sup over nodes of |B' phat + R u|; zero by construction, guards refactors.
double stationarity_residual(const AgentPath& agent, const ModelParams& p);

// sup over nodes of the gap between u and -R^-1 B'[Pi x + (M-Pi) Ex + zeta].
double alt_control_residual(const AgentPath& agent, const Solution& sol);

struct DecouplingResidual {
    double sup_abs = 0.0;  // sup |phat - [Pi(x - Ex) + M Ex + zeta]|
    double sup_phat = 0.0; // sup |phat|, for the relative bound
    double relative() const { return sup_abs / (1.0 + sup_phat); }
};

DecouplingResidual decoupling_residual(const AgentPath& agent, const Solution& sol);

// Per-step residual of the state equation along the simulated path:
//   x(t+dt) - x(t) - (A x + B u + C z + f) dt - z dW.
ResidualStats fbsde_residual(const AgentPath& agent, const Solution& sol);

using PerturbationFunction = std::function<Eigen::VectorXd(double)>;

struct GapTable {
    std::vector<double> epsilons;
    std::vector<double> delta_j;    // replication-averaged cost change
    double linear_coef = 0.0;       // l in dJ = l e + q e^2; expected ~ 0
    double quad_coef = 0.0;         // q; expected > 0
    double fit_residual_rel = 0.0;  // relative residual of the 2-term fit
    int replications = 0;
};

// Perturbs agent 0 by u -> u + eps v for a deterministic v. The perturbed
// backward state admits Delta z = 0 and d(Dx) = (A Dx + B v) dt, Dx(T) = 0,
// so the realized cost change is exactly quadratic in eps; the linear
// coefficient averages to zero at the optimum.
GapTable optimality_gap(const ModelParams& p, Mode mode, const PerturbationFunction& v,
                        const std::vector<double>& epsilons, const TimeGrid& grid,
                        std::uint64_t seed, int replications = 1,
                        const SimOptions& options = {});

struct SweepEntry {
    int population = 0;
    double sigma_sup = 0.0;  // sup_t |Sigma_N - SigmaBar|
    double pi_sup = 0.0;     // sup_t |Pi_N - PiBar|
    double phi_l2sq = 0.0;   // E int |phi_N - phiBar|^2 dt
    double beta_l2sq = 0.0;
    double zeta_l2sq = 0.0;
    double x_l2sq = 0.0;
};

struct SweepMetricFit {
    std::string name;
    double slope = 0.0; // OLS on (log N, log metric), metrics < 1e-12 excluded
    double intercept = 0.0;
    double r2 = 0.0;
};

struct SweepReport {
    std::vector<SweepEntry> entries;
    std::vector<SweepMetricFit> fits;
    int paths = 0;
};

// Finite-N social pipeline vs its infinite-population limit over a ladder of
// population sizes. Requires C = 0 and valid social parameters. Path metrics
// use common random numbers: path j reuses stream (seed, j) for every N.
SweepReport convergence_sweep(const ModelParams& p, const std::vector<int>& populations,
                              const TimeGrid& grid, int paths, std::uint64_t seed,
                              const SimOptions& options = {});

struct GainCoincidence {
    double identity_sup = 0.0; // sup_t |MTilde + PiBar - MBar|
    double gain_gap = 0.0;     // sup_t |R^-1 B'(MTilde + PiBar - MBar)| * sup_t |Ex|
};

GainCoincidence gain_coincidence_check(const ModelParams& p, const TimeGrid& grid,
                                       OdeMethod method = OdeMethod::rk4);

// OLS fit of log(value) against log(key); entries with value below `floor`
// are excluded (ODE-accuracy noise floor).
SweepMetricFit fit_loglog(const std::string& name, const std::vector<double>& keys,
                          const std::vector<double>& values, double floor = 1e-12);

} // namespace mflq
