#include "fragcov/complete.hpp"

#include "fragcov/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace fragcov {

std::string to_string(const RankPolicy& policy)
{
    std::ostringstream os;
    switch (policy.kind) {
    case RankPolicy::Kind::Fixed: os << "fixed(" << policy.rank << ")"; break;
    case RankPolicy::Kind::Elbow: os << "elbow(" << policy.threshold << ")"; break;
    case RankPolicy::Kind::Penalty: os << "penalty(" << policy.tau << ")"; break;
    }
    return os.str();
}

int SolveConfig::resolved_max_rank(const BandMask& mask) const
{
    const int K = mask.size();
    int r = 0;
    if (max_rank_sweep) {
        r = *max_rank_sweep;
    } else if (mask.is_standard_band()) {
        r = static_cast<int>(std::ceil(K * mask.delta() - 1e-9)) - 3;
    } else {
        r = K - 1;
    }
    return std::clamp(r, 1, K);
}

double SolveConfig::resolved_tolerance(int K) const
{
    if (gradient_tolerance) return *gradient_tolerance;
    return 1e-9 / (static_cast<double>(K) * K);
}

namespace {

constexpr double kTracePenalty = 1e3;

void check_dims(const Eigen::MatrixXd& target, const BandMask& mask, int K_gamma)
{
    if (target.rows() != target.cols() || target.rows() != mask.size() || target.rows() != K_gamma)
        throw Error("dimension mismatch between factor, target and mask");
}

/// Masked residual E = P∘(γγᵀ − target) and f = ‖E‖²/K².
double residual(const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& target, const BandMask& mask,
                Eigen::MatrixXd& E)
{
    E.noalias() = gamma * gamma.transpose();
    E -= target;
    E.array() *= mask.weights().array();
    const double K = static_cast<double>(target.rows());
    return E.squaredNorm() / (K * K);
}

double rms(const Eigen::MatrixXd& m)
{
    return m.size() == 0 ? 0.0 : std::sqrt(m.squaredNorm() / static_cast<double>(m.size()));
}

} // namespace

double objective(const LowRankFactor& gamma, const Eigen::MatrixXd& target, const BandMask& mask)
{
    check_dims(target, mask, gamma.rows());
    Eigen::MatrixXd E;
    return residual(gamma.gamma, target, mask, E);
}

Eigen::MatrixXd gradient(const LowRankFactor& gamma, const Eigen::MatrixXd& target, const BandMask& mask)
{
    check_dims(target, mask, gamma.rows());
    Eigen::MatrixXd E;
    residual(gamma.gamma, target, mask, E);
    const double K = static_cast<double>(target.rows());
    return (4.0 / (K * K)) * E * gamma.gamma;
}

LowRankFactor eigen_start(const Eigen::MatrixXd& target, int rank, std::uint64_t seed)
{
    const int K = static_cast<int>(target.rows());
    if (rank < 1) throw Error("rank must be at least 1");
    if (rank > K) throw Error("rank exceeds matrix dimension");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(target);
    if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
    const Eigen::VectorXd& lam = es.eigenvalues();
    const double top = std::max(lam(K - 1), 0.0);

    LowRankFactor start{Eigen::MatrixXd(K, rank)};
    std::mt19937_64 rng(seed ^ 0x5eedULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int c = 0; c < rank; ++c) {
        const int idx = K - 1 - c;
        const double value = std::max(lam(idx), 0.0);
        if (value > 1e-14 * top) {
            start.gamma.col(c) = es.eigenvectors().col(idx) * std::sqrt(value);
        } else {
            // A zero column is a stationary point of the factorized objective;
            // seed it with a small random direction instead.
            const double scale = 1e-3 * std::sqrt(std::max(top, 1e-12) / K);
            for (int r = 0; r < K; ++r) start.gamma(r, c) = scale * gauss(rng);
        }
    }
    return start;
}

FixedRankFit solve_from(const Eigen::MatrixXd& target, const BandMask& mask, LowRankFactor start,
                        const SolveConfig& config)
{
    check_dims(target, mask, start.rows());
    const int K = start.rows();
    const int rank = start.rank();
    const double scale = 4.0 / (static_cast<double>(K) * K);

    const double bound = config.trace_bound.value_or(std::numeric_limits<double>::infinity());
    const double weight = kTracePenalty / (static_cast<double>(K) * K);

    Eigen::MatrixXd E(K, K);
    auto fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        const Eigen::Map<const Eigen::MatrixXd> gamma(x.data(), K, rank);
        double value = residual(gamma, target, mask, E);
        Eigen::Map<Eigen::MatrixXd> g(grad.data(), K, rank);
        g.noalias() = scale * E * gamma;
        // trace(γγᵀ) = ‖γ‖²_F; quadratic penalty beyond the bound.
        const double excess = x.squaredNorm() - bound;
        if (excess > 0.0) {
            value += weight * excess * excess;
            g += (4.0 * weight * excess) * gamma;
        }
        return value;
    };

    LbfgsOptions opts;
    opts.max_iterations = config.max_iterations;
    opts.gradient_tolerance = config.resolved_tolerance(K);
    Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(start.gamma.data(), start.gamma.size());
    const LbfgsResult res = minimize_lbfgs(fn, std::move(x0), opts);

    FixedRankFit out;
    out.factor.gamma = Eigen::Map<const Eigen::MatrixXd>(res.x.data(), K, rank);
    const double trace = out.factor.gamma.squaredNorm();
    if (trace > bound) out.factor.gamma *= std::sqrt(bound / trace);
    out.fit = residual(out.factor.gamma, target, mask, E);
    out.iterations = res.iterations;
    out.converged = res.converged;
    return out;
}

namespace {

FixedRankFit from_eigen_start(const Eigen::MatrixXd& target, const BandMask& mask, int rank, const SolveConfig& config)
{
    const LowRankFactor start = eigen_start(target, rank, config.seed);
    FixedRankFit best = solve_from(target, mask, start, config);

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double jitter = 0.05 * std::max(rms(start.gamma), 1e-8);
    for (int r = 1; r < config.restarts; ++r) {
        LowRankFactor perturbed = start;
        for (Eigen::Index k = 0; k < perturbed.gamma.size(); ++k) perturbed.gamma.data()[k] += jitter * gauss(rng);
        FixedRankFit fit = solve_from(target, mask, std::move(perturbed), config);
        if (fit.fit < best.fit) best = std::move(fit);
    }
    return best;
}

// Fits ranks 1..max_rank. Each rank keeps the better of its eigen start and
// the previous factor padded with a small random column, falling back to the
// padded factor itself, so fits never increase with rank.
std::vector<FixedRankFit> rank_chain(const Eigen::MatrixXd& target, const BandMask& mask, int max_rank,
                                     const SolveConfig& config)
{
    const int K = static_cast<int>(target.rows());
    std::vector<FixedRankFit> chain;
    std::mt19937_64 rng(config.seed + 1);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 1; i <= max_rank; ++i) {
        FixedRankFit best = from_eigen_start(target, mask, i, config);
        if (i > 1) {
            const FixedRankFit& prev = chain.back();
            LowRankFactor padded{Eigen::MatrixXd::Zero(K, i)};
            padded.gamma.leftCols(i - 1) = prev.factor.gamma;
            LowRankFactor warm = padded;
            const double scale = 1e-3 * std::max(rms(prev.factor.gamma), 1e-8);
            for (int r = 0; r < K; ++r) warm.gamma(r, i - 1) = scale * gauss(rng);
            FixedRankFit fit = solve_from(target, mask, std::move(warm), config);
            if (fit.fit < best.fit) best = std::move(fit);
            if (best.fit > prev.fit) {
                best.factor = std::move(padded);
                best.fit = objective(best.factor, target, mask);
                best.converged = prev.converged;
            }
        }
        chain.push_back(std::move(best));
    }
    return chain;
}

} // namespace

FixedRankFit solve_fixed_rank(const Eigen::MatrixXd& target, const BandMask& mask, int rank, const SolveConfig& config)
{
    if (rank > target.rows()) throw Error("rank exceeds matrix dimension");
    if (rank < 1) throw Error("rank must be at least 1");
    FixedRankFit direct = from_eigen_start(target, mask, rank, config);
    if (direct.converged || rank == 1) return direct;
    // A stalled descent is often sitting near a spurious stationary point;
    // growing the factor one rank at a time usually avoids it.
    FixedRankFit grown = std::move(rank_chain(target, mask, rank, config).back());
    return grown.fit < direct.fit ? grown : direct;
}

FixedRankFit solve_fixed_rank(const PatchedCovariance& target, const BandMask& mask, int rank,
                              const SolveConfig& config)
{
    return solve_fixed_rank(target.matrix.entries(), mask, rank, config);
}

RankSweepResult rank_sweep(const Eigen::MatrixXd& target, const BandMask& mask, const SolveConfig& config)
{
    if (target.rows() != mask.size()) throw Error("dimension mismatch between target and mask");
    const int K = static_cast<int>(target.rows());
    const int max_rank = config.resolved_max_rank(mask);

    RankSweepResult sweep;
    sweep.band_energy = masked_frobenius_sq(target, Eigen::MatrixXd::Zero(K, K), mask);
    for (FixedRankFit& fit : rank_chain(target, mask, max_rank, config)) {
        sweep.fits.push_back(fit.fit);
        sweep.normalized_fits.push_back(sweep.band_energy > 0.0 ? fit.fit / sweep.band_energy : 0.0);
        sweep.factors.push_back(std::move(fit.factor));
    }
    return sweep;
}

RankSelection select_rank(const RankSweepResult& sweep, const RankPolicy& policy)
{
    if (sweep.fits.empty()) throw Error("empty rank sweep");
    switch (policy.kind) {
    case RankPolicy::Kind::Fixed: return {policy.rank, true};
    case RankPolicy::Kind::Elbow:
        for (int i = 0; i < sweep.max_rank(); ++i)
            if (sweep.normalized_fits[static_cast<std::size_t>(i)] < policy.threshold) return {i + 1, true};
        return {sweep.max_rank(), false};
    case RankPolicy::Kind::Penalty: {
        int best = 0;
        double best_value = std::numeric_limits<double>::infinity();
        for (int i = 0; i < sweep.max_rank(); ++i) {
            const double v = sweep.fits[static_cast<std::size_t>(i)] + policy.tau * (i + 1);
            if (v < best_value) {
                best_value = v;
                best = i;
            }
        }
        return {best + 1, true};
    }
    }
    return {1, true};
}

double StepKernel::operator()(double x, double y) const
{
    const int K = size();
    return coefficients_(cell_index(x, K), cell_index(y, K));
}

std::vector<double> StepKernel::boundaries() const
{
    const int K = size();
    std::vector<double> b(static_cast<std::size_t>(K + 1));
    for (int j = 0; j <= K; ++j) b[static_cast<std::size_t>(j)] = static_cast<double>(j) / K;
    return b;
}

double masked_trace(const Eigen::MatrixXd& target, const BandMask& mask)
{
    const int K = static_cast<int>(target.rows());
    if (mask.size() != K) throw Error("dimension mismatch between target and mask");
    double trace = 0.0;
    for (int j = 0; j < K; ++j) {
        if (mask.includes(j, j)) {
            trace += target(j, j);
            continue;
        }
        double sum = 0.0;
        int used = 0;
        for (int l : {j - 1, j + 1}) {
            if (l < 0 || l >= K || !mask.includes(j, l)) continue;
            sum += target(j, l);
            ++used;
        }
        if (used > 0) trace += std::max(sum / used, 0.0);
    }
    return trace;
}

CovarianceEstimate estimate_with_mask(const Eigen::MatrixXd& target, const BandMask& mask,
                                      const SolveConfig& solve_config)
{
    SolveConfig config = solve_config;
    if (!config.trace_bound && config.bound_trace) config.trace_bound = std::max(masked_trace(target, mask), 0.0);
    CovarianceEstimate est;
    if (config.rank_policy.kind == RankPolicy::Kind::Fixed) {
        FixedRankFit fit = solve_fixed_rank(target, mask, config.rank_policy.rank, config);
        est.rank = config.rank_policy.rank;
        est.fit = fit.fit;
        est.factor = std::move(fit.factor);
    } else {
        RankSweepResult sweep = rank_sweep(target, mask, config);
        const RankSelection sel = select_rank(sweep, config.rank_policy);
        est.rank = sel.rank;
        est.rank_threshold_met = sel.threshold_met;
        est.fit = sweep.fits[static_cast<std::size_t>(sel.rank - 1)];
        est.factor = sweep.factors[static_cast<std::size_t>(sel.rank - 1)];
        est.sweep = std::move(sweep);
    }
    Eigen::MatrixXd theta = est.factor.product();
    if (config.check_trace_bound) est.trace_warning = theta.trace() > 1.1 * target.trace();
    est.kernel = StepKernel(theta);
    est.matrix = SymMatrix(std::move(theta));
    return est;
}

CovarianceEstimate estimate_covariance(const PatchedCovariance& target, const SolveConfig& config,
                                       std::optional<double> delta_prime)
{
    const BandMask mask = effective_mask(target, delta_prime.value_or(target.delta_effective));
    return estimate_with_mask(target.matrix.entries(), mask, config);
}

} // namespace fragcov
