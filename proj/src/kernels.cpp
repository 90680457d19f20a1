#include "fragcov/kernels.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace fragcov {

double MercerKernel::operator()(double s, double t) const
{
    double acc = 0.0;
    for (std::size_t j = 0; j < eigenvalues.size(); ++j)
        acc += eigenvalues[j] * eigenfunctions[j](s) * eigenfunctions[j](t);
    return acc;
}

Kernel MercerKernel::as_kernel() const
{
    MercerKernel copy = *this;
    return Kernel(id, [copy](double s, double t) { return copy(s, t); }, rank());
}

double MaternKernel::bessel_form(double d) const
{
    if (d == 0.0) return sigma2;
    const double x = std::sqrt(2.0 * nu) * d / rho;
    return sigma2 * std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(x, nu) * std::cyl_bessel_k(nu, x);
}

std::optional<double> MaternKernel::closed_form(double d) const
{
    if (nu == 0.5) return sigma2 * std::exp(-d / rho);
    if (nu == 1.5) {
        const double x = std::sqrt(3.0) * d / rho;
        return sigma2 * (1.0 + x) * std::exp(-x);
    }
    if (nu == 2.5) {
        const double x = std::sqrt(5.0) * d / rho;
        return sigma2 * (1.0 + x + 5.0 * d * d / (3.0 * rho * rho)) * std::exp(-x);
    }
    return std::nullopt;
}

double MaternKernel::at_distance(double d) const
{
    d = std::abs(d);
    if (auto v = closed_form(d)) return *v;
    return bessel_form(d);
}

Kernel MaternKernel::as_kernel() const
{
    std::ostringstream id;
    id << "matern:" << nu << ',' << rho << ',' << sigma2;
    MaternKernel copy = *this;
    return Kernel(id.str(), [copy](double s, double t) { return copy(s, t); });
}

double gaussian_pdf(double x, double mean, double sd)
{
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

MercerKernel scenario_kernel(Scenario scenario, int q)
{
    if (q < 1 || q > 3) throw Error("scenario rank must be 1, 2 or 3");
    static constexpr double weights[3] = {1.50, 0.55, 0.20};

    MercerKernel k;
    k.id = std::string(scenario == Scenario::A ? "scenarioA:" : "scenarioB:") + std::to_string(q);
    for (int j = 0; j < q; ++j) k.eigenvalues.push_back(weights[j]);

    if (scenario == Scenario::A) {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        const std::function<double(double)> fns[3] = {
            [](double) { return 1.0; },
            [](double t) { return std::sin(two_pi * t); },
            [](double t) { return std::sin(2.0 * two_pi * t); },
        };
        for (int j = 0; j < q; ++j) k.eigenfunctions.push_back(fns[j]);
    } else {
        static constexpr double mean[3] = {0.5, 0.2, 0.8};
        static constexpr double sd[3] = {0.60, 0.25, 0.20};
        for (int j = 0; j < q; ++j) {
            const double m = mean[j];
            const double s = sd[j];
            k.eigenfunctions.emplace_back([m, s](double t) { return gaussian_pdf(t, m, s); });
        }
    }
    return k;
}

MaternKernel matern_kernel(double nu, double rho, double sigma2)
{
    if (!(nu > 0.0 && rho > 0.0 && sigma2 > 0.0)) throw Error("Matern parameters must be positive");
    return MaternKernel{nu, rho, sigma2};
}

Kernel sum_kernel(const Kernel& a, const Kernel& b)
{
    std::optional<int> rank;
    if (a.rank() && b.rank()) rank = *a.rank() + *b.rank();
    return Kernel(a.id() + "+" + b.id(), [a, b](double s, double t) { return a(s, t) + b(s, t); }, rank);
}

double bump(double u, double J)
{
    const double x = J * u;
    if (std::abs(x) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - x * x));
}

KernelPair counterexample_bump_pair(double lambda)
{
    if (!(lambda > 0.0 && lambda < 1.0)) throw Error("bump lambda must lie in (0,1)");
    auto phi = [](int i, double t) {
        static constexpr double centre[3] = {1.0 / 6.0, 0.5, 5.0 / 6.0};
        return bump(t - centre[i]);
    };
    auto kappa1 = [phi](double s, double t) {
        double acc = 0.0;
        for (int i = 0; i < 3; ++i) acc += phi(i, s) * phi(i, t);
        return acc;
    };
    const double root = std::sqrt(lambda);
    auto kappa2 = [kappa1, phi, root](double s, double t) {
        return kappa1(s, t) + root * (phi(0, t) * phi(2, s) + phi(0, s) * phi(2, t));
    };
    std::ostringstream id;
    id << "bump3:" << lambda;
    return {Kernel("bump3", kappa1, 3), Kernel(id.str(), kappa2, 3)};
}

double esseen_psi1(double u) { return std::exp(-std::abs(u)); }

double esseen_psi2(double u)
{
    const double a = std::abs(u);
    if (a < 1.0) return esseen_psi1(a);
    const double value = std::exp(-1.0);
    const double slope = -std::exp(-1.0);
    const double end = 1.0 - value / slope;
    if (a < end) return value + slope * (a - 1.0);
    return 0.0;
}

KernelPair esseen_pair(double lo, double hi)
{
    if (!(hi > lo)) throw Error("esseen interval must be nonempty");
    const double span = hi - lo;
    auto k1 = [span](double s, double t) { return esseen_psi1(span * (s - t)); };
    auto k2 = [span](double s, double t) { return esseen_psi2(span * (s - t)); };
    return {Kernel("esseen:1", k1), Kernel("esseen:2", k2)};
}

SymMatrix evaluate_on_points(const Kernel& kernel, const std::vector<double>& points)
{
    const int K = static_cast<int>(points.size());
    Eigen::MatrixXd m(K, K);
    for (int j = 0; j < K; ++j) {
        for (int l = j; l < K; ++l) {
            const double v = kernel(points[static_cast<std::size_t>(j)], points[static_cast<std::size_t>(l)]);
            m(j, l) = v;
            m(l, j) = v;
        }
    }
    return SymMatrix(std::move(m));
}

SymMatrix evaluate_on_grid(const Kernel& kernel, const Grid& grid)
{
    return evaluate_on_points(kernel, grid.points());
}

namespace {

std::vector<double> parse_numbers(const std::string& text, const std::string& id)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw Error("");
        } catch (const std::exception&) {
            throw Error("malformed kernel id '" + id + "'");
        }
    }
    return out;
}

} // namespace

Kernel parse_kernel(const std::string& id)
{
    const auto colon = id.find(':');
    const std::string head = id.substr(0, colon);
    const std::string tail = colon == std::string::npos ? std::string() : id.substr(colon + 1);
    const auto args = tail.empty() ? std::vector<double>{} : parse_numbers(tail, id);

    auto need = [&](std::size_t n) {
        if (args.size() != n) throw Error("kernel id '" + id + "' expects " + std::to_string(n) + " argument(s)");
    };
    auto rank_arg = [&]() {
        need(1);
        const int q = static_cast<int>(args[0]);
        if (q != args[0]) throw Error("kernel rank must be an integer in '" + id + "'");
        return q;
    };

    if (head == "scenarioA") return scenario_kernel(Scenario::A, rank_arg()).as_kernel();
    if (head == "scenarioB") return scenario_kernel(Scenario::B, rank_arg()).as_kernel();
    if (head == "matern") {
        need(3);
        return matern_kernel(args[0], args[1], args[2]).as_kernel();
    }
    if (head == "matern+A2") {
        MaternKernel m{1.5, 0.5, 1.0};
        if (!args.empty()) {
            need(3);
            m = matern_kernel(args[0], args[1], args[2]);
        }
        Kernel sum = sum_kernel(m.as_kernel(), scenario_kernel(Scenario::A, 2).as_kernel());
        return Kernel(id, [sum](double s, double t) { return sum(s, t); });
    }
    if (head == "bump3") {
        if (args.empty()) return counterexample_bump_pair(0.5).first;
        need(1);
        return counterexample_bump_pair(args[0]).second;
    }
    if (head == "esseen") {
        const int which = args.empty() ? 1 : rank_arg();
        const auto pair = esseen_pair();
        if (which == 1) return pair.first;
        if (which == 2) return pair.second;
        throw Error("esseen kernel index must be 1 or 2");
    }
    throw Error("unknown kernel id '" + id + "'");
}

} // namespace fragcov
