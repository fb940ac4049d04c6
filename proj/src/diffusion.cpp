#include "srcloc/diffusion.hpp"

#include "srcloc/error.hpp"

#include <cmath>
#include <string>

namespace srcloc {

HeatKernel::HeatKernel(double theta_) : theta(theta_) {
    if (!(theta > 0.0) || !std::isfinite(theta)) {
        throw Error(ErrorCategory::InvalidParameter, "diffusion time theta must be positive and finite");
    }
}

double HeatKernel::value(double lambda) const { return std::exp(-theta * lambda); }
double HeatKernel::dtheta(double lambda) const { return -lambda * std::exp(-theta * lambda); }
double HeatKernel::dtheta2(double lambda) const { return lambda * lambda * std::exp(-theta * lambda); }

double kernel_eval(double theta, double lambda) {
    const HeatKernel kernel(theta);
    if (!(lambda >= 0.0)) throw Error(ErrorCategory::InvalidInput, "eigenvalue must be non-negative");
    return kernel.value(lambda);
}

Eigen::VectorXd kernel_samples(const SpectralDecomposition& decomp, double theta, int order) {
    const HeatKernel kernel(theta);
    Eigen::VectorXd out(decomp.size());
    for (Index i = 0; i < decomp.size(); ++i) {
        const double lambda = decomp.eigenvalues(i);
        switch (order) {
            case 0: out(i) = kernel.value(lambda); break;
            case 1: out(i) = kernel.dtheta(lambda); break;
            case 2: out(i) = kernel.dtheta2(lambda); break;
            default:
                throw Error(ErrorCategory::InvalidParameter,
                            "derivative order must be 0, 1 or 2 (got " + std::to_string(order) + ")");
        }
    }
    return out;
}

Eigen::VectorXd apply_spectral_filter(const SpectralDecomposition& decomp, const Eigen::VectorXd& filter,
                                      const Eigen::VectorXd& x) {
    if (x.size() != decomp.size() || filter.size() != decomp.size()) {
        throw Error(ErrorCategory::InvalidInput, "vector length " + std::to_string(x.size()) +
                                                     " does not match graph size " + std::to_string(decomp.size()));
    }
    const Eigen::VectorXd coeffs = decomp.eigenvectors.transpose() * x;
    return decomp.eigenvectors * filter.cwiseProduct(coeffs);
}

Eigen::VectorXd apply_diffusion(const SpectralDecomposition& decomp, double theta, const Eigen::VectorXd& x) {
    return apply_spectral_filter(decomp, kernel_samples(decomp, theta, 0), x);
}

Eigen::VectorXd apply_theta_derivative(const SpectralDecomposition& decomp, double theta, const Eigen::VectorXd& x,
                                       int order) {
    if (order != 1 && order != 2) {
        throw Error(ErrorCategory::InvalidParameter,
                    "derivative order must be 1 or 2 (got " + std::to_string(order) + ")");
    }
    return apply_spectral_filter(decomp, kernel_samples(decomp, theta, order), x);
}

Eigen::MatrixXd diffusion_matrix(const SpectralDecomposition& decomp, double theta) {
    const Eigen::VectorXd g = kernel_samples(decomp, theta, 0);
    Eigen::MatrixXd a = decomp.eigenvectors * g.asDiagonal() * decomp.eigenvectors.transpose();
    return 0.5 * (a + a.transpose());
}

}  // namespace srcloc
