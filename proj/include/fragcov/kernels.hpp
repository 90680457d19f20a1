/**
 * @file kernels.hpp
 * @brief Ground-truth covariance kernels and their evaluation on grids.
 *
 * Kernel ids understood by parse_kernel():
 *   scenarioA:q, scenarioB:q          finite-rank scenarios, q in {1,2,3}
 *   matern:nu,rho,sigma2              stationary Matérn
 *   matern+A2[:nu,rho,sigma2]         Matérn plus scenario A with q = 2
 *   bump3 / bump3:lambda              rank-3 bump kernels kappa1 / kappa2
 *   esseen[:1] / esseen:2             Ornstein-Uhlenbeck lag function and its
 *                                     linear-then-zero modification, on (-pi, pi)
 */

#pragma once

#include "fragcov/core.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fragcov {

/// Type-erased covariance kernel r(s,t) on [0,1]².
class Kernel {
public:
    using Fn = std::function<double(double, double)>;

    Kernel() = default;
    Kernel(std::string id, Fn fn, std::optional<int> rank = std::nullopt)
        : id_(std::move(id)), fn_(std::move(fn)), rank_(rank)
    {
    }

    double operator()(double s, double t) const { return fn_(s, t); }
    [[nodiscard]] const std::string& id() const { return id_; }
    /// Finite rank when known.
    [[nodiscard]] std::optional<int> rank() const { return rank_; }

private:
    std::string id_;
    Fn fn_;
    std::optional<int> rank_;
};

/// r(s,t) = Σ_j λ_j φ_j(s) φ_j(t).
struct MercerKernel {
    std::string id;
    std::vector<double> eigenvalues;
    std::vector<std::function<double(double)>> eigenfunctions;

    [[nodiscard]] int rank() const { return static_cast<int>(eigenvalues.size()); }
    double operator()(double s, double t) const;
    [[nodiscard]] Kernel as_kernel() const;
};

struct MaternKernel {
    double nu = 1.5;
    double rho = 0.5;
    double sigma2 = 1.0;

    /// Uses the half-integer closed form when nu ∈ {1/2, 3/2, 5/2}, the
    /// Bessel route otherwise.
    [[nodiscard]] double at_distance(double d) const;
    /// σ²·2^{1−ν}/Γ(ν)·(√(2ν)d/ρ)^ν·K_ν(√(2ν)d/ρ), σ² at d = 0.
    [[nodiscard]] double bessel_form(double d) const;
    /// Closed form for ν ∈ {1/2, 3/2, 5/2}; nullopt otherwise.
    [[nodiscard]] std::optional<double> closed_form(double d) const;

    double operator()(double s, double t) const { return at_distance(std::abs(s - t)); }
    [[nodiscard]] Kernel as_kernel() const;
};

enum class Scenario { A, B };

/// Gaussian density N(x; mean, sd).
double gaussian_pdf(double x, double mean, double sd);

MercerKernel scenario_kernel(Scenario scenario, int q);
MaternKernel matern_kernel(double nu, double rho, double sigma2);
Kernel sum_kernel(const Kernel& a, const Kernel& b);

/// φ(u) = 1(|u| < 1/J)·exp(−1/(1 − (Ju)²)).
double bump(double u, double J = 6.0);

struct KernelPair {
    Kernel first;
    Kernel second;
};

/// kappa1 = Σ φ_i(s)φ_i(t) with bumps centred at 1/6, 1/2, 5/6;
/// kappa2 = kappa1 + √λ(φ1(t)φ3(s) + φ1(s)φ3(t)).
KernelPair counterexample_bump_pair(double lambda);

double esseen_psi1(double u);
double esseen_psi2(double u);

/// Stationary pair r_k(s,t) = psi_k(x(s) − x(t)) where x maps [0,1] affinely
/// onto [lo, hi].
KernelPair esseen_pair(double lo = -3.14159265358979323846, double hi = 3.14159265358979323846);

SymMatrix evaluate_on_grid(const Kernel& kernel, const Grid& grid);
SymMatrix evaluate_on_points(const Kernel& kernel, const std::vector<double>& points);

Kernel parse_kernel(const std::string& id);

} // namespace fragcov
