// Literal serial forms of the patched estimators: explicit contributor sets,
// per-pair means, then a second pass over centred products.

#include "fragcov/patch.hpp"

#include <vector>

namespace fragcov::reference {

namespace {

double centred_average(const std::vector<double>& xs, const std::vector<double>& ys)
{
    const std::size_t m = xs.size();
    if (m == 0) return 0.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= static_cast<double>(m);
    my /= static_cast<double>(m);
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) acc += (xs[k] - mx) * (ys[k] - my);
    return acc / static_cast<double>(m);
}

PatchedCovariance assemble(const FragmentSample& sample, Eigen::MatrixXd cov, Eigen::MatrixXi counts)
{
    return {SymMatrix(std::move(cov), std::move(counts)), detail::infer_delta_prime(sample), sample.noise_sd > 0.0};
}

} // namespace

PatchedCovariance patched_regular(const FragmentSample& sample, int K)
{
    if (!sample.grid || sample.grid->size() != K)
        throw Error("patched_regular needs the shared grid of resolution K");
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(K, K);
    Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(K, K);
    for (int j = 0; j < K; ++j) {
        for (int l = j; l < K; ++l) {
            std::vector<double> xs, ys;
            for (const Curve& c : sample.curves) {
                double x = 0.0, y = 0.0;
                bool has_j = false, has_l = false;
                for (std::size_t a = 0; a < c.grid_index.size(); ++a) {
                    if (c.grid_index[a] == j) { x = c.values[a]; has_j = true; }
                    if (c.grid_index[a] == l) { y = c.values[a]; has_l = true; }
                }
                if (has_j && has_l) {
                    xs.push_back(x);
                    ys.push_back(y);
                }
            }
            cov(j, l) = cov(l, j) = centred_average(xs, ys);
            counts(j, l) = counts(l, j) = static_cast<int>(xs.size());
        }
    }
    return assemble(sample, std::move(cov), std::move(counts));
}

PatchedCovariance patched_binned(const FragmentSample& sample, int K)
{
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(K, K);
    Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(K, K);
    for (int j = 0; j < K; ++j) {
        for (int l = j; l < K; ++l) {
            std::vector<double> xs, ys;
            for (const Curve& c : sample.curves) {
                for (std::size_t a = 0; a < c.times.size(); ++a) {
                    if (cell_index(c.times[a], K) != j) continue;
                    for (std::size_t b = 0; b < c.times.size(); ++b) {
                        if (cell_index(c.times[b], K) != l) continue;
                        xs.push_back(c.values[a]);
                        ys.push_back(c.values[b]);
                    }
                }
            }
            cov(j, l) = cov(l, j) = centred_average(xs, ys);
            counts(j, l) = counts(l, j) = static_cast<int>(xs.size());
        }
    }
    return assemble(sample, std::move(cov), std::move(counts));
}

} // namespace fragcov::reference
