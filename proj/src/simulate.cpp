#include "fragcov/simulate.hpp"

#include "fragcov/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fragcov {

std::string to_string(GridType type)
{
    switch (type) {
    case GridType::Common: return "common";
    case GridType::Type1: return "type1";
    case GridType::Type2: return "type2";
    }
    return "common";
}

GridType parse_grid_type(const std::string& text)
{
    if (text == "common") return GridType::Common;
    if (text == "type1") return GridType::Type1;
    if (text == "type2") return GridType::Type2;
    throw Error("unknown grid type '" + text + "'");
}

std::size_t FragmentSample::observation_count() const
{
    std::size_t total = 0;
    for (const auto& c : curves) total += c.times.size();
    return total;
}

void FragmentLaw::validate() const
{
    if (!(delta_min > 0.0 && delta_min <= delta_max && delta_max <= 1.0))
        throw Error("fragment law needs 0 < delta_min <= delta_max <= 1");
}

namespace {

double draw_delta(const FragmentLaw& law, std::mt19937_64& rng)
{
    if (law.is_fixed()) return law.delta_min;
    std::uniform_real_distribution<double> unif(law.delta_min, law.delta_max);
    return unif(rng);
}

double draw_start(double delta, const FragmentLaw& law, int K, std::mt19937_64& rng)
{
    if (delta >= 1.0) return 0.0;
    if (law.start == StartLaw::Cell) {
        const int last = static_cast<int>(std::floor(K * (1.0 - delta) + 1e-9));
        std::uniform_int_distribution<int> cell(0, last);
        return std::min(1.0 - delta, static_cast<double>(cell(rng)) / K);
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0 - delta);
    return unif(rng);
}

int ceil_count(double x) { return static_cast<int>(std::ceil(x - 1e-9)); }

Eigen::MatrixXd psd_square_root(const Eigen::MatrixXd& cov)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
    const Eigen::VectorXd& lam = es.eigenvalues();
    const double top = lam.size() > 0 ? lam.maxCoeff() : 0.0;
    if (lam.size() > 0 && lam.minCoeff() < -1e-6 * std::max(top, 0.0)) throw Error("not PSD");
    // Eigenvalues at rounding level are treated as exact zeros, so finite-rank
    // kernels give paths in the span of their eigenfunctions.
    const double floor = 10.0 * lam.size() * std::numeric_limits<double>::epsilon() * std::max(top, 0.0);
    const Eigen::VectorXd kept = (lam.array() > floor).select(lam, 0.0);
    return es.eigenvectors() * kept.cwiseSqrt().asDiagonal();
}

Eigen::VectorXd standard_normal(int size, std::mt19937_64& rng)
{
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd z(size);
    for (int k = 0; k < size; ++k) z(k) = gauss(rng);
    return z;
}

} // namespace

Eigen::MatrixXd sample_gp(const SymMatrix& truth, int n, std::uint64_t seed)
{
    if (n < 0) throw Error("sample size must be nonnegative");
    const int K = truth.size();
    const Eigen::MatrixXd root = psd_square_root(truth.entries());
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd values(n, K);
    for (int i = 0; i < n; ++i) values.row(i) = (root * standard_normal(K, rng)).transpose();
    return values;
}

FragmentSample fragment(const Eigen::MatrixXd& values, const Grid& grid, const FragmentLaw& law,
                        std::uint64_t seed)
{
    law.validate();
    const int K = grid.size();
    if (values.cols() != K) throw Error("value matrix columns must match grid resolution");
    std::mt19937_64 rng(seed);

    FragmentSample sample;
    sample.grid_type = GridType::Common;
    sample.grid = grid;
    const int n = static_cast<int>(values.rows());
    sample.curves.reserve(static_cast<std::size_t>(n));
    sample.intervals.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double delta = draw_delta(law, rng);
        const Interval interval{draw_start(delta, law, K, rng), delta};
        Curve curve;
        curve.id = i + 1;
        for (int j = 0; j < K; ++j) {
            if (!interval.contains(grid[j])) continue;
            curve.times.push_back(grid[j]);
            curve.values.push_back(values(i, j));
            curve.grid_index.push_back(j);
        }
        sample.curves.push_back(std::move(curve));
        sample.intervals.push_back(interval);
    }
    return sample;
}

FragmentSample fragment_irregular(const Kernel& kernel, int n, const FragmentLaw& law,
                                  const IrregularOptions& options, std::uint64_t seed)
{
    law.validate();
    if (options.grid_type == GridType::Common) throw Error("fragment_irregular needs a type1 or type2 grid");
    const int K = options.base_resolution;
    if (K < 2) throw Error("base resolution must be at least 2");

    auto interval_rng = make_stream(seed, 0, Stage::Intervals);

    FragmentSample sample;
    sample.grid_type = options.grid_type;
    sample.curves.reserve(static_cast<std::size_t>(n));
    sample.intervals.reserve(static_cast<std::size_t>(n));

    if (options.grid_type == GridType::Type1) {
        auto grid_rng = make_stream(seed, 0, Stage::Grid);
        const Grid grid = options.midpoint_grid ? Grid::regular_midpoints(K) : Grid::perturbed(K, grid_rng);
        const Eigen::MatrixXd paths = sample_gp(evaluate_on_grid(kernel, grid), n, substream_seed(seed, 0, Stage::Paths));
        for (int i = 0; i < n; ++i) {
            const double delta = draw_delta(law, interval_rng);
            const int Q = std::min(ceil_count(K * delta), K);
            if (Q < 2) throw Error("fragment too sparse");
            std::uniform_int_distribution<int> first_cell(0, K - Q);
            const int s = first_cell(interval_rng);
            Curve curve;
            curve.id = i + 1;
            for (int j = s; j < s + Q; ++j) {
                curve.times.push_back(grid[j]);
                curve.values.push_back(paths(i, j));
                curve.grid_index.push_back(j);
            }
            sample.curves.push_back(std::move(curve));
            sample.intervals.push_back({static_cast<double>(s) / K, static_cast<double>(Q) / K});
        }
        sample.grid = grid;
        return sample;
    }

    auto time_rng = make_stream(seed, 0, Stage::Times);
    auto path_rng = make_stream(seed, 0, Stage::Paths);
    for (int i = 0; i < n; ++i) {
        const double delta = draw_delta(law, interval_rng);
        const Interval interval{draw_start(delta, law, K, interval_rng), delta};
        const int Q = ceil_count(K * delta);
        if (Q < 2) throw Error("fragment too sparse");
        std::uniform_real_distribution<double> unif(interval.start, interval.end());
        Curve curve;
        curve.id = i + 1;
        curve.times.resize(static_cast<std::size_t>(Q));
        for (auto& t : curve.times) t = std::clamp(unif(time_rng), 0.0, 1.0);
        std::sort(curve.times.begin(), curve.times.end());
        const Eigen::MatrixXd root = psd_square_root(evaluate_on_points(kernel, curve.times).entries());
        const Eigen::VectorXd x = root * standard_normal(Q, path_rng);
        curve.values.assign(x.data(), x.data() + x.size());
        sample.curves.push_back(std::move(curve));
        sample.intervals.push_back(interval);
    }
    return sample;
}

FragmentSample add_noise(FragmentSample sample, double noise_sd, std::uint64_t seed)
{
    if (!(noise_sd >= 0.0)) throw Error("noise standard deviation must be nonnegative");
    if (noise_sd == 0.0) return sample;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, noise_sd);
    for (auto& curve : sample.curves)
        for (auto& v : curve.values) v += gauss(rng);
    sample.noise_sd = std::hypot(sample.noise_sd, noise_sd);
    return sample;
}

int type2_resolution(const FragmentSample& sample)
{
    if (sample.n() == 0) throw Error("empty sample");
    const double total = static_cast<double>(sample.observation_count());
    return std::max(2, static_cast<int>(std::lround(4.0 * total / (5.0 * sample.n()))));
}

} // namespace fragcov
