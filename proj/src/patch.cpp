#include "fragcov/patch.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace fragcov {

namespace {

struct PairSums {
    Eigen::MatrixXi count;
    Eigen::MatrixXd sx, sy, sxy;

    explicit PairSums(int K)
        : count(Eigen::MatrixXi::Zero(K, K)), sx(Eigen::MatrixXd::Zero(K, K)), sy(Eigen::MatrixXd::Zero(K, K)),
          sxy(Eigen::MatrixXd::Zero(K, K))
    {
    }

    /// Fills the lower triangle from the upper one and turns sums into
    /// centred averages.
    PatchedCovariance finish(const FragmentSample& sample) const
    {
        const int K = static_cast<int>(count.rows());
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(K, K);
        Eigen::MatrixXi cnt = Eigen::MatrixXi::Zero(K, K);
        for (int j = 0; j < K; ++j) {
            for (int l = j; l < K; ++l) {
                const int c = count(j, l);
                double v = 0.0;
                if (c > 1) {
                    const double m = static_cast<double>(c);
                    v = sxy(j, l) / m - (sx(j, l) / m) * (sy(j, l) / m);
                }
                cov(j, l) = cov(l, j) = v;
                cnt(j, l) = cnt(l, j) = c;
            }
        }
        return {SymMatrix(std::move(cov), std::move(cnt)), detail::infer_delta_prime(sample), sample.noise_sd > 0.0};
    }
};

} // namespace

namespace detail {

double infer_delta_prime(const FragmentSample& sample)
{
    if (sample.intervals.empty()) return 0.0;
    double lo = sample.intervals.front().delta;
    double hi = lo;
    for (const auto& iv : sample.intervals) {
        lo = std::min(lo, iv.delta);
        hi = std::max(hi, iv.delta);
    }
    return default_delta_prime(FragmentLaw{lo, hi});
}

} // namespace detail

double default_delta_prime(const FragmentLaw& law)
{
    if (law.is_fixed() || law.delta_max - law.delta_min < 1e-12) return law.delta_min - 0.1;
    return law.delta_min;
}

PatchedCovariance patched_regular(const FragmentSample& sample, int K)
{
    if (!sample.grid || sample.grid->size() != K)
        throw Error("patched_regular needs the shared grid of resolution K");
    const int n = sample.n();

    // Column-major n×K layout: column j holds every curve's value at t_j.
    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(n, K);
    Eigen::Matrix<unsigned char, Eigen::Dynamic, Eigen::Dynamic> seen =
        Eigen::Matrix<unsigned char, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, K);
    for (int i = 0; i < n; ++i) {
        const Curve& c = sample.curves[static_cast<std::size_t>(i)];
        if (c.grid_index.size() != c.times.size()) throw Error("curve is missing grid indices");
        for (int a = 0; a < c.size(); ++a) {
            const int j = c.grid_index[static_cast<std::size_t>(a)];
            if (j < 0 || j >= K) throw Error("grid index out of range");
            values(i, j) = c.values[static_cast<std::size_t>(a)];
            seen(i, j) = 1;
        }
    }

    PairSums sums(K);
#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < K; ++j) {
        for (int l = j; l < K; ++l) {
            int c = 0;
            double sx = 0.0, sy = 0.0, sxy = 0.0;
            for (int i = 0; i < n; ++i) {
                if (!(seen(i, j) && seen(i, l))) continue;
                const double x = values(i, j);
                const double y = values(i, l);
                ++c;
                sx += x;
                sy += y;
                sxy += x * y;
            }
            sums.count(j, l) = c;
            sums.sx(j, l) = sx;
            sums.sy(j, l) = sy;
            sums.sxy(j, l) = sxy;
        }
    }
    return sums.finish(sample);
}

PatchedCovariance patched_binned(const FragmentSample& sample, int K)
{
    if (K < 1) throw Error("resolution must be positive");

    // Per-bin list of (curve, value) observations, in curve then time order.
    struct Obs {
        int curve;
        double value;
    };
    std::vector<std::vector<Obs>> by_bin(static_cast<std::size_t>(K));
    std::vector<std::vector<int>> bins(sample.curves.size());
    for (std::size_t i = 0; i < sample.curves.size(); ++i) {
        const Curve& c = sample.curves[i];
        bins[i].resize(c.times.size());
        for (std::size_t a = 0; a < c.times.size(); ++a) {
            const int j = cell_index(c.times[a], K);
            bins[i][a] = j;
            by_bin[static_cast<std::size_t>(j)].push_back({static_cast<int>(i), c.values[a]});
        }
    }

    PairSums sums(K);
#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < K; ++j) {
        for (const Obs& o : by_bin[static_cast<std::size_t>(j)]) {
            const Curve& c = sample.curves[static_cast<std::size_t>(o.curve)];
            const auto& cb = bins[static_cast<std::size_t>(o.curve)];
            for (std::size_t b = 0; b < c.values.size(); ++b) {
                const int l = cb[b];
                if (l < j) continue;
                const double y = c.values[b];
                sums.count(j, l) += 1;
                sums.sx(j, l) += o.value;
                sums.sy(j, l) += y;
                sums.sxy(j, l) += o.value * y;
            }
        }
    }
    return sums.finish(sample);
}

BandMask effective_mask(const PatchedCovariance& patched, double delta_prime)
{
    BandMask mask(patched.size(), delta_prime, patched.noise_flag);
    const Eigen::MatrixXi& counts = patched.counts();
    for (int j = 0; j < mask.size(); ++j)
        for (int l = 0; l < mask.size(); ++l)
            if (mask.includes(j, l) && counts(j, l) == 0) throw Error("mask exceeds data support");
    return mask;
}

} // namespace fragcov
