#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "mflq/bsde.hpp"
#include "mflq/riccati.hpp"
#include "mflq/rng.hpp"

namespace mflq {

// Consistency relation used to express phat through (phi, zeta):
//   derived: phat - Ep = (I-Pi Sigma)^-1 [Pi(phi-Ephi) + (zeta-Ezeta)],
//            Ep = (I-M K)^-1 (M Ephi + Ezeta)
//   printed: phat - Ep = (I-Pi Sigma)^-1 [Sigma(phi-Ephi) + (zeta-Ezeta)],
//            Ep = (I-Pi Sigma)^-1 (M Ephi + Ezeta)
// The derived form follows from substituting the state relation into the
// adjoint relation; the printed one mirrors the source display and is kept
// behind this switch so the residual checks can compare both.
enum class PhatVariant { derived, printed };

struct SimOptions {
    OdeMethod integrator = OdeMethod::rk4;
    PhatVariant phat = PhatVariant::derived;
    PhiMeanCoupling phi_mean = PhiMeanCoupling::derived;
    int threads = 0; // 0: MFLQ_THREADS env or hardware default
};

// E zeta: forward ODE obtained by averaging the zeta dynamics,
//   d(Ez)/dt = (M S - A') Ez - M C (I+Sigma H)^-1 Ebeta - M f + eta_w.
// The +eta_w sign is forced by d(M Ex + Ezeta)/dt = dEp/dt.
MatrixPath solve_mean_zeta(const ModelParams& p, const RiccatiBundle& bundle,
                           const PhiMoments& moments, const TimeGrid& grid,
                           OdeMethod method = OdeMethod::rk4);

// E x: backward ODE with E x(T) = E xi,
//   d(Ex)/dt = (A - S M) Ex - S Ezeta + C (I+Sigma H)^-1 Ebeta + f.
MatrixPath solve_mean_state(const ModelParams& p, const RiccatiBundle& bundle,
                            const PhiMoments& moments, const MatrixPath& Ezeta,
                            const Eigen::VectorXd& Exi, const TimeGrid& grid,
                            OdeMethod method = OdeMethod::rk4);

// Per-node coefficient cache shared by all agent simulations.
struct NodeCoefficients {
    Eigen::MatrixXd sigma, k, pi, m;
    Eigen::MatrixXd mix;                // (I + Sigma H)^-1
    Eigen::MatrixXd s_gain;             // B R^-1 B' + C mix Sigma C'
    Eigen::MatrixXd gamma_beta;         // -(Pi + H) mix
    Eigen::MatrixXd gamma_phat;         // -(I - Pi Sigma)(I + H Sigma)^-1 C'
    Eigen::MatrixXd phat_centered_phi;  // phat coefficient on (phi - Ephi)
    Eigen::MatrixXd phat_centered_zeta; // phat coefficient on (zeta - Ezeta)
    Eigen::MatrixXd zeta_drift;         // Pi s_gain - A'
    Eigen::MatrixXd zeta_mean_drift;    // (M - Pi) s_gain
    Eigen::MatrixXd zeta_beta;          // -Pi C mix
    Eigen::MatrixXd zeta_mean_beta;     // (Pi - M) C mix
    Eigen::VectorXd zeta_offset;        // -M f + eta_w
    Eigen::VectorXd a, b, Ezeta, Ex, Ep;
};

// Deterministic half of the pipeline: Riccati bundle, auxiliary BSDE in
// affine form, mean paths and per-node caches. Immutable once built.
struct Solution {
    ModelParams params;
    Mode mode = Mode::game;
    TimeGrid grid;
    SimOptions options;
    RiccatiBundle bundle;
    AffineBsdeSolution phi;
    MatrixPath Ezeta;
    MatrixPath Ex;
    MatrixPath Ep;
    std::vector<NodeCoefficients> nodes;
    Eigen::MatrixXd r_inv_bt; // R^-1 B'
};

Solution build_solution(const ModelParams& p, Mode mode, const TimeGrid& grid,
                        const SimOptions& options = {});
// Infinite-population social pipeline (requires C = 0); used by the sweep.
Solution build_limit_solution(const ModelParams& p, const TimeGrid& grid,
                              const SimOptions& options = {});

struct AgentPath {
    int k = 0;
    Eigen::RowVectorXd W;              // 1 x nodes Brownian sample
    Eigen::MatrixXd phi, beta, zeta;   // n x nodes
    Eigen::MatrixXd phat, x, z;        // n x nodes
    Eigen::MatrixXd u;                 // r x nodes
    Eigen::VectorXd xi;                // realized terminal value; x(T) == xi
};

AgentPath simulate_agent(const Solution& sol, const RngStreamSpec& stream);
// Same path construction with caller-supplied Brownian increments (one per
// step). Lets tests couple resolutions by summing fine-grid increments.
AgentPath simulate_agent_with_increments(const Solution& sol,
                                         const std::vector<double>& increments, int agent_id);

struct Ensemble {
    std::shared_ptr<const Solution> solution;
    std::vector<AgentPath> agents;
    Eigen::MatrixXd xbar; // n x nodes population average of x
    std::vector<double> agent_costs;
    double social_cost = 0.0;
};

// Full pipeline: riccati -> bsde -> means -> N agents -> averages -> costs.
// Deterministic given (params, mode, seed); agent order is fixed regardless
// of thread count.
Ensemble simulate_population(const ModelParams& p, Mode mode, std::uint64_t seed,
                             const TimeGrid& grid, const SimOptions& options = {});

} // namespace mflq
