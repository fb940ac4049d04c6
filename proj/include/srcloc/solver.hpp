#pragma once

#include "srcloc/graph.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace srcloc {

// Observed snapshot b with a binary observation mask (1 = observed).
class Observation {
  public:
    // Full mask.
    explicit Observation(Eigen::VectorXd b);
    // Throws InvalidInput on length mismatch, non-binary mask, empty mask or
    // non-finite b.
    Observation(Eigen::VectorXd b, Eigen::VectorXd mask);

    const Eigen::VectorXd& b() const noexcept { return b_; }
    const Eigen::VectorXd& mask() const noexcept { return mask_; }
    Index size() const noexcept { return b_.size(); }
    bool fully_observed() const noexcept { return full_; }

  private:
    Eigen::VectorXd b_;
    Eigen::VectorXd mask_;
    bool full_ = true;
};

struct SolverConfig {
    double gamma = 1e-3;  // l1 weight
    double alpha = 1.0;   // fidelity weight
    double epsilon = 1e-9;  // outer stopping tolerance on |E_{k+1} - E_k|
    int max_outer_iter = 50;
    int fista_max_iter = 1000;
    double fista_tol = 1e-8;
    std::optional<double> mu;  // Newton proximal weight; defaults to 1e-2 * alpha
    int newton_max_iter = 20;
    double theta_min = 1e-4;
    double theta_max = 50.0;
    bool fix_theta = false;

    double effective_mu() const { return mu.value_or(1e-2 * alpha); }

    // Throws InvalidParameter when any field violates its constraints.
    void validate() const;
};

struct EnergySample {
    int iteration;
    double energy;
};

struct SolveResult {
    Eigen::VectorXd x;
    double theta = 0.0;
    // Entry 0 is the energy at the initial point; entry k follows outer
    // iteration k.
    std::vector<EnergySample> energy_trace;
    bool converged = false;
    int outer_iterations = 0;
};

struct FistaResult {
    Eigen::VectorXd x;
    int iterations = 0;
    double objective = 0.0;
};

// f(theta), f'(theta), f''(theta) of the masked fidelity (alpha/2)||M(A x - b)||^2.
struct ThetaFidelity {
    double value;
    double first;
    double second;
};

// gamma ||x||_1 + (alpha/2) ||M (A_theta x - b)||_2^2.
double objective(const Eigen::VectorXd& x, double theta, const Observation& obs, const SolverConfig& cfg,
                 const SpectralDecomposition& decomp);

// sign(v) * max(|v| - t, 0), component-wise.
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double t);

// Lipschitz constant of the smooth part's gradient, alpha * ||M A_theta||_2^2.
double fidelity_lipschitz(double theta, const Observation& obs, const SolverConfig& cfg,
                          const SpectralDecomposition& decomp);

// FISTA on E(., theta) starting from x_init (zeros when empty).
FistaResult fista_solve_x(double theta, const Observation& obs, const SolverConfig& cfg,
                          const SpectralDecomposition& decomp, const Eigen::VectorXd& x_init = {});

ThetaFidelity theta_fidelity(const Eigen::VectorXd& x, double theta, const Observation& obs, const SolverConfig& cfg,
                             const SpectralDecomposition& decomp);

// One proximally smoothed Newton solve of
//   min_theta f(theta) + (mu/2)(theta - theta_k)^2
// on [theta_min, theta_max]. Returns theta_k when no candidate improves.
double newton_theta_step(const Eigen::VectorXd& x, double theta_k, const Observation& obs, const SolverConfig& cfg,
                         const SpectralDecomposition& decomp);

// Alternates the x-step and the theta-step until the energy change drops
// below epsilon. Steps that would raise the energy are rejected.
SolveResult alternating_solve(const Observation& obs, const SolverConfig& cfg, const SpectralDecomposition& decomp,
                              const Eigen::VectorXd& x_init, double theta_init);

}  // namespace srcloc
