#pragma once

#include <Eigen/Dense>

#include <functional>

namespace fragcov {

struct LbfgsOptions {
    int memory = 10;
    int max_iterations = 2000;
    /// Stop once ‖∇f‖₂ ≤ gradient_tolerance.
    double gradient_tolerance = 1e-10;
    double armijo = 1e-4;
    int max_backtracks = 60;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double value = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;  ///< gradient tolerance reached
};

/// Returns f(x) and writes ∇f(x) into grad.
using ObjectiveFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/**
 * Limited-memory BFGS with backtracking Armijo line search.
 *
 * Accepted iterates never increase the objective. Curvature pairs with
 * sᵀy ≤ 1e-12·‖s‖‖y‖ are dropped. Stops on the gradient tolerance, the
 * iteration cap, or when no step along the search direction decreases f
 * (the objective is then flat to working precision). Throws DivergedError
 * on a non-finite objective.
 */
LbfgsResult minimize_lbfgs(const ObjectiveFn& f, Eigen::VectorXd x0, const LbfgsOptions& options);

} // namespace fragcov
