#pragma once

#include "srcloc/graph.hpp"

#include <Eigen/Dense>

namespace srcloc {

// Heat kernel g(lambda) = exp(-theta * lambda) together with its theta
// derivatives. Any other parametric kernel only needs these three members.
struct HeatKernel {
    double theta;

    // Throws InvalidParameter unless theta > 0 and finite.
    explicit HeatKernel(double theta);

    double value(double lambda) const;
    double dtheta(double lambda) const;   // -lambda * g
    double dtheta2(double lambda) const;  // lambda^2 * g
};

// g_theta(lambda). Throws InvalidParameter for theta <= 0 and InvalidInput
// for lambda < 0.
double kernel_eval(double theta, double lambda);

// Applies U * diag(filter) * U^T to x without materializing the matrix.
Eigen::VectorXd apply_spectral_filter(const SpectralDecomposition& decomp, const Eigen::VectorXd& filter,
                                      const Eigen::VectorXd& x);

// A_theta x = U g_theta(Lambda) U^T x.
Eigen::VectorXd apply_diffusion(const SpectralDecomposition& decomp, double theta, const Eigen::VectorXd& x);

// d^order A_theta / d theta^order applied to x, order in {1, 2}.
Eigen::VectorXd apply_theta_derivative(const SpectralDecomposition& decomp, double theta, const Eigen::VectorXd& x,
                                       int order);

// Dense A_theta. Intended for tests and small graphs.
Eigen::MatrixXd diffusion_matrix(const SpectralDecomposition& decomp, double theta);

// Per-eigenvalue kernel samples: g, dg/dtheta or d2g/dtheta2 (order 0, 1, 2).
Eigen::VectorXd kernel_samples(const SpectralDecomposition& decomp, double theta, int order = 0);

}  // namespace srcloc
