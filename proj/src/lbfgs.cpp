#include "fragcov/lbfgs.hpp"

#include "fragcov/core.hpp"

#include <cmath>
#include <deque>

namespace fragcov {

namespace {

void check_finite(double value)
{
    if (!std::isfinite(value)) throw DivergedError("diverged");
}

} // namespace

LbfgsResult minimize_lbfgs(const ObjectiveFn& f, Eigen::VectorXd x0, const LbfgsOptions& options)
{
    const Eigen::Index dim = x0.size();
    LbfgsResult result;
    result.x = std::move(x0);
    Eigen::VectorXd g(dim);
    result.value = f(result.x, g);
    check_finite(result.value);
    result.gradient_norm = g.norm();

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;
    Eigen::VectorXd x_new(dim), g_new(dim), d(dim);
    std::vector<double> alpha(static_cast<std::size_t>(options.memory));

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        if (result.gradient_norm <= options.gradient_tolerance) {
            result.converged = true;
            break;
        }

        // Two-loop recursion.
        d = -g;
        const std::size_t m = s_hist.size();
        for (std::size_t k = m; k-- > 0;) {
            alpha[k] = rho_hist[k] * s_hist[k].dot(d);
            d -= alpha[k] * y_hist[k];
        }
        if (m > 0) d *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        else d /= std::max(1.0, result.gradient_norm);
        for (std::size_t k = 0; k < m; ++k) {
            const double beta = rho_hist[k] * y_hist[k].dot(d);
            d += (alpha[k] - beta) * s_hist[k];
        }

        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            d = -g / std::max(1.0, result.gradient_norm);
            slope = g.dot(d);
        }

        double step = 1.0;
        double value_new = 0.0;
        bool accepted = false;
        for (int bt = 0; bt < options.max_backtracks; ++bt) {
            x_new = result.x + step * d;
            value_new = f(x_new, g_new);
            check_finite(value_new);
            if (value_new <= result.value + options.armijo * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        Eigen::VectorXd s = x_new - result.x;
        Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (static_cast<int>(s_hist.size()) == options.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
        }

        result.x.swap(x_new);
        g.swap(g_new);
        result.value = value_new;
        result.gradient_norm = g.norm();
        result.iterations = iter + 1;
    }
    if (result.gradient_norm <= options.gradient_tolerance) result.converged = true;
    return result;
}

} // namespace fragcov
