#include "srcloc/solver.hpp"

#include "srcloc/diffusion.hpp"
#include "srcloc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace srcloc {
namespace {

constexpr int kFlatStepsToStop = 3;

constexpr int kPowerIterations = 50;
constexpr double kPowerTol = 1e-6;
// Power iteration approaches ||MA||^2 from below; pad before capping by the
// analytic bound so the step never overshoots.
constexpr double kLipschitzPad = 1.05;
constexpr int kMaxHalvings = 40;

void check_dims(const Observation& obs, const SpectralDecomposition& decomp) {
    if (obs.size() != decomp.size()) {
        throw Error(ErrorCategory::InvalidInput, "observation length " + std::to_string(obs.size()) +
                                                     " does not match graph size " + std::to_string(decomp.size()));
    }
}

void check_theta_range(double theta, const SolverConfig& cfg) {
    if (!(theta >= cfg.theta_min && theta <= cfg.theta_max)) {
        std::ostringstream os;
        os << "theta " << theta << " outside [" << cfg.theta_min << ", " << cfg.theta_max << "]";
        throw Error(ErrorCategory::InvalidParameter, os.str());
    }
}

Eigen::VectorXd masked(const Observation& obs, Eigen::VectorXd v) {
    if (!obs.fully_observed()) v.array() *= obs.mask().array();
    return v;
}

double fidelity_from_image(const Eigen::VectorXd& image, const Observation& obs, double alpha) {
    return 0.5 * alpha * masked(obs, image - obs.b()).squaredNorm();
}

std::string dump(const Eigen::VectorXd& v) {
    std::ostringstream os;
    os << '[';
    const Index shown = std::min<Index>(v.size(), 8);
    for (Index i = 0; i < shown; ++i) os << (i ? ", " : "") << v(i);
    if (shown < v.size()) os << ", ...";
    os << ']';
    return os.str();
}

// Evaluates the theta-fidelity for a fixed x, reusing U^T x across theta values.
class ThetaProblem {
  public:
    ThetaProblem(const Eigen::VectorXd& x, const Observation& obs, const SolverConfig& cfg,
                 const SpectralDecomposition& decomp)
        : obs_(obs), alpha_(cfg.alpha), decomp_(decomp), coeffs_(decomp.eigenvectors.transpose() * x) {}

    double value(double theta) const {
        const Eigen::VectorXd g = kernel_samples(decomp_, theta, 0);
        return fidelity_from_image(decomp_.eigenvectors * g.cwiseProduct(coeffs_), obs_, alpha_);
    }

    ThetaFidelity derivatives(double theta) const {
        const Eigen::VectorXd g0 = kernel_samples(decomp_, theta, 0);
        const Eigen::VectorXd g1 = kernel_samples(decomp_, theta, 1);
        const Eigen::VectorXd g2 = kernel_samples(decomp_, theta, 2);
        const Eigen::VectorXd r = masked(obs_, decomp_.eigenvectors * g0.cwiseProduct(coeffs_) - obs_.b());
        const Eigen::VectorXd d1 = masked(obs_, decomp_.eigenvectors * g1.cwiseProduct(coeffs_));
        const Eigen::VectorXd d2 = masked(obs_, decomp_.eigenvectors * g2.cwiseProduct(coeffs_));
        return {0.5 * alpha_ * r.squaredNorm(), alpha_ * r.dot(d1), alpha_ * (d1.squaredNorm() + r.dot(d2))};
    }

  private:
    const Observation& obs_;
    double alpha_;
    const SpectralDecomposition& decomp_;
    Eigen::VectorXd coeffs_;
};

}  // namespace

Observation::Observation(Eigen::VectorXd b) : b_(std::move(b)), mask_(Eigen::VectorXd::Ones(b_.size())) {
    if (!b_.allFinite()) throw Error(ErrorCategory::InvalidInput, "observation contains non-finite values");
    if (b_.size() == 0) throw Error(ErrorCategory::InvalidInput, "observation is empty");
}

Observation::Observation(Eigen::VectorXd b, Eigen::VectorXd mask) : b_(std::move(b)), mask_(std::move(mask)) {
    if (b_.size() != mask_.size()) throw Error(ErrorCategory::InvalidInput, "mask length does not match observation");
    if (!b_.allFinite()) throw Error(ErrorCategory::InvalidInput, "observation contains non-finite values");
    Index observed = 0;
    for (Index i = 0; i < mask_.size(); ++i) {
        if (mask_(i) != 0.0 && mask_(i) != 1.0) throw Error(ErrorCategory::InvalidInput, "mask entries must be 0 or 1");
        if (mask_(i) == 1.0) ++observed;
    }
    if (observed == 0) throw Error(ErrorCategory::InvalidInput, "mask has no observed entries");
    full_ = observed == mask_.size();
}

void SolverConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw Error(ErrorCategory::InvalidParameter, what);
    };
    require(gamma >= 0.0 && std::isfinite(gamma), "gamma must be non-negative and finite");
    require(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive");
    require(epsilon > 0.0, "epsilon must be positive");
    require(max_outer_iter >= 1, "max_outer_iter must be >= 1");
    require(fista_max_iter >= 1, "fista_max_iter must be >= 1");
    require(fista_tol > 0.0, "fista_tol must be positive");
    require(effective_mu() >= 0.0, "mu must be non-negative");
    require(newton_max_iter >= 1, "newton_max_iter must be >= 1");
    require(theta_min > 0.0 && theta_min < theta_max && std::isfinite(theta_max),
            "theta bounds must satisfy 0 < theta_min < theta_max < inf");
}

double objective(const Eigen::VectorXd& x, double theta, const Observation& obs, const SolverConfig& cfg,
                 const SpectralDecomposition& decomp) {
    check_dims(obs, decomp);
    return cfg.gamma * x.lpNorm<1>() + fidelity_from_image(apply_diffusion(decomp, theta, x), obs, cfg.alpha);
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double t) {
    if (!(t >= 0.0)) throw Error(ErrorCategory::InvalidParameter, "threshold must be non-negative");
    return v.unaryExpr([t](double a) { return a > t ? a - t : (a < -t ? a + t : 0.0); });
}

double fidelity_lipschitz(double theta, const Observation& obs, const SolverConfig& cfg,
                          const SpectralDecomposition& decomp) {
    check_dims(obs, decomp);
    const Eigen::VectorXd g = kernel_samples(decomp, theta, 0);
    const double bound = g.cwiseAbs().maxCoeff() * g.cwiseAbs().maxCoeff();
    if (obs.fully_observed()) return cfg.alpha * bound;

    // Largest eigenvalue of A M A = (M A)^T (M A).
    Eigen::VectorXd v = Eigen::VectorXd::Ones(decomp.size()).normalized();
    double estimate = 0.0;
    for (int it = 0; it < kPowerIterations; ++it) {
        const Eigen::VectorXd w = apply_spectral_filter(decomp, g, masked(obs, apply_spectral_filter(decomp, g, v)));
        const double next = v.dot(w);
        const double norm = w.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) return cfg.alpha * bound;
        v = w / norm;
        const bool done = std::abs(next - estimate) <= kPowerTol * std::abs(next);
        estimate = next;
        if (done) break;
    }
    if (!(estimate > 0.0)) return cfg.alpha * bound;
    return cfg.alpha * std::min(bound, kLipschitzPad * estimate);
}

FistaResult fista_solve_x(double theta, const Observation& obs, const SolverConfig& cfg,
                          const SpectralDecomposition& decomp, const Eigen::VectorXd& x_init) {
    cfg.validate();
    check_dims(obs, decomp);
    check_theta_range(theta, cfg);
    const Index n = decomp.size();
    if (x_init.size() != 0 && x_init.size() != n) throw Error(ErrorCategory::InvalidInput, "x_init length mismatch");

    const Eigen::VectorXd g = kernel_samples(decomp, theta, 0);
    const auto apply = [&](const Eigen::VectorXd& v) { return apply_spectral_filter(decomp, g, v); };
    const double lipschitz = fidelity_lipschitz(theta, obs, cfg, decomp);
    const double step = 1.0 / lipschitz;

    Eigen::VectorXd x = x_init.size() == 0 ? Eigen::VectorXd::Zero(n) : x_init;
    Eigen::VectorXd ax = apply(x);
    double f_prev = cfg.gamma * x.lpNorm<1>() + fidelity_from_image(ax, obs, cfg.alpha);
    if (!std::isfinite(f_prev)) {
        throw NumericalFailure("non-finite objective at initial point " + dump(x), {x.data(), x.data() + n}, 0);
    }

    Eigen::VectorXd y = x;
    Eigen::VectorXd ay = ax;
    double t = 1.0;
    int flat_steps = 0;
    FistaResult out;
    for (int it = 1; it <= cfg.fista_max_iter; ++it) {
        const Eigen::VectorXd grad = cfg.alpha * apply(masked(obs, ay - obs.b()));
        Eigen::VectorXd x_next = soft_threshold(y - step * grad, cfg.gamma * step);
        Eigen::VectorXd ax_next = apply(x_next);
        const double f = cfg.gamma * x_next.lpNorm<1>() + fidelity_from_image(ax_next, obs, cfg.alpha);
        if (!std::isfinite(f)) {
            throw NumericalFailure("non-finite objective at FISTA iteration " + std::to_string(it) + ", iterate " +
                                       dump(x_next),
                                   {x_next.data(), x_next.data() + n}, it);
        }
        // FISTA's objective ripples, and a single flat step at a turning point
        // is not convergence: require a few small changes in a row.
        const bool small = std::abs(f - f_prev) <= cfg.fista_tol * std::max(std::abs(f_prev), std::numeric_limits<double>::min());
        flat_steps = small ? flat_steps + 1 : 0;
        // An exact fixed point of the prox-gradient map is a minimizer.
        const bool done = flat_steps >= kFlatStepsToStop || x_next == y;
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double momentum = (t - 1.0) / t_next;
        // A is linear, so A y follows from the two latest images.
        y = x_next + momentum * (x_next - x);
        ay = ax_next + momentum * (ax_next - ax);

        x = std::move(x_next);
        ax = std::move(ax_next);
        f_prev = f;
        t = t_next;
        out.iterations = it;
        if (done) break;
    }
    out.x = std::move(x);
    out.objective = f_prev;
    return out;
}

ThetaFidelity theta_fidelity(const Eigen::VectorXd& x, double theta, const Observation& obs, const SolverConfig& cfg,
                             const SpectralDecomposition& decomp) {
    check_dims(obs, decomp);
    if (x.size() != decomp.size()) throw Error(ErrorCategory::InvalidInput, "x length mismatch");
    return ThetaProblem(x, obs, cfg, decomp).derivatives(theta);
}

double newton_theta_step(const Eigen::VectorXd& x, double theta_k, const Observation& obs, const SolverConfig& cfg,
                         const SpectralDecomposition& decomp) {
    cfg.validate();
    check_dims(obs, decomp);
    check_theta_range(theta_k, cfg);
    if (x.size() != decomp.size()) throw Error(ErrorCategory::InvalidInput, "x length mismatch");
    if (!x.allFinite()) throw Error(ErrorCategory::InvalidInput, "x must be finite");

    const ThetaProblem problem(x, obs, cfg, decomp);
    const double mu = cfg.effective_mu();
    const auto penalized = [&](double theta) {
        const double d = theta - theta_k;
        return problem.value(theta) + 0.5 * mu * d * d;
    };
    const auto clamp = [&](double theta) { return std::clamp(theta, cfg.theta_min, cfg.theta_max); };

    const double phi_start = penalized(theta_k);
    double theta = theta_k;
    double phi = phi_start;
    for (int it = 0; it < cfg.newton_max_iter; ++it) {
        const ThetaFidelity f = problem.derivatives(theta);
        const double grad = f.first + mu * (theta - theta_k);
        const double hess = f.second + mu;
        if (grad == 0.0 || !std::isfinite(grad)) break;
        // Negative curvature: fall back to a bounded descent move.
        const double direction = (hess > 0.0 && std::isfinite(hess)) ? -grad / hess : (grad > 0.0 ? -0.25 : 0.25) * theta;

        double scale = 1.0;
        double candidate = theta;
        double phi_candidate = phi;
        bool improved = false;
        for (int h = 0; h < kMaxHalvings; ++h, scale *= 0.5) {
            candidate = clamp(theta + scale * direction);
            if (candidate == theta) break;
            phi_candidate = penalized(candidate);
            if (phi_candidate < phi) {
                improved = true;
                break;
            }
        }
        if (!improved) break;
        const double moved = std::abs(candidate - theta);
        theta = candidate;
        phi = phi_candidate;
        if (moved <= 1e-12 * theta) break;
    }
    return phi < phi_start ? theta : theta_k;
}

SolveResult alternating_solve(const Observation& obs, const SolverConfig& cfg, const SpectralDecomposition& decomp,
                              const Eigen::VectorXd& x_init, double theta_init) {
    cfg.validate();
    check_dims(obs, decomp);
    check_theta_range(theta_init, cfg);
    const Index n = decomp.size();
    if (x_init.size() != 0 && x_init.size() != n) throw Error(ErrorCategory::InvalidInput, "x_init length mismatch");

    SolveResult out;
    out.x = x_init.size() == 0 ? Eigen::VectorXd::Zero(n) : x_init;
    out.theta = theta_init;
    double energy = objective(out.x, out.theta, obs, cfg, decomp);
    out.energy_trace.push_back({0, energy});

    for (int k = 1; k <= cfg.max_outer_iter; ++k) {
        FistaResult step = fista_solve_x(out.theta, obs, cfg, decomp, out.x);
        double next_energy = energy;
        // FISTA is not monotone; keep the previous iterate if it was better.
        if (step.objective <= energy) {
            out.x = std::move(step.x);
            next_energy = step.objective;
        }
        if (!cfg.fix_theta) {
            const double theta_next = newton_theta_step(out.x, out.theta, obs, cfg, decomp);
            if (theta_next != out.theta) {
                const double e = objective(out.x, theta_next, obs, cfg, decomp);
                if (e <= next_energy) {
                    out.theta = theta_next;
                    next_energy = e;
                }
            }
        }
        out.energy_trace.push_back({k, next_energy});
        out.outer_iterations = k;
        const double change = std::abs(next_energy - energy);
        energy = next_energy;
        // With theta fixed the problem is a single lasso; another pass would
        // only restart FISTA's momentum.
        if (cfg.fix_theta || change < cfg.epsilon) {
            out.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace srcloc
