/**
 * @file complete.hpp
 * @brief Low-rank completion of a banded covariance.
 *
 * The estimator minimizes K⁻²‖R̃ − P∘(γγᵀ)‖²_F over K×i factors γ for each
 * candidate rank i (factorized quasi-Newton descent started from the
 * truncated eigendecomposition of the target), then selects a rank from the
 * fit curve. exact_band_completion() is the determinant-propagation oracle
 * for noiseless bands of exactly rank q matrices.
 */

#pragma once

#include "fragcov/core.hpp"
#include "fragcov/patch.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fragcov {

struct RankPolicy {
    enum class Kind { Fixed, Elbow, Penalty };

    Kind kind = Kind::Elbow;
    int rank = 1;            ///< Fixed
    double threshold = 0.01; ///< Elbow: smallest i with normalized fit below this
    double tau = 0.0;        ///< Penalty: argmin f(i) + tau·i

    static RankPolicy fixed(int q) { return {Kind::Fixed, q, 0.01, 0.0}; }
    static RankPolicy elbow(double eps = 0.01) { return {Kind::Elbow, 1, eps, 0.0}; }
    static RankPolicy penalty(double tau) { return {Kind::Penalty, 1, 0.01, tau}; }
};

std::string to_string(const RankPolicy& policy);

struct SolveConfig {
    /// Largest rank in the sweep; default ceil(K·delta) − 3 with delta the mask bandwidth.
    std::optional<int> max_rank_sweep;
    /// Gradient-norm stopping threshold; default 1e−9·K⁻².
    std::optional<double> gradient_tolerance;
    int max_iterations = 2000;
    int restarts = 1;
    /// Warn when trace(γγᵀ) exceeds the target trace by more than 10%.
    bool check_trace_bound = false;
    /// Enforced bound on trace(γγᵀ) (quadratic penalty during descent, then
    /// rescaling). When unset, estimate_with_mask() derives one from the
    /// target unless bound_trace is false; direct solves stay unconstrained.
    std::optional<double> trace_bound;
    bool bound_trace = true;
    RankPolicy rank_policy = RankPolicy::elbow();
    std::uint64_t seed = 0;

    [[nodiscard]] int resolved_max_rank(const BandMask& mask) const;
    [[nodiscard]] double resolved_tolerance(int K) const;
};

/// K⁻²‖target − P∘(γγᵀ)‖²_F restricted to the mask.
double objective(const LowRankFactor& gamma, const Eigen::MatrixXd& target, const BandMask& mask);

/// 4K⁻²·(P∘(γγᵀ − target))·γ.
Eigen::MatrixXd gradient(const LowRankFactor& gamma, const Eigen::MatrixXd& target, const BandMask& mask);

/// U_iΛ_i^{1/2} from the i largest eigenpairs of target, negatives clipped.
LowRankFactor eigen_start(const Eigen::MatrixXd& target, int rank, std::uint64_t seed = 0);

struct FixedRankFit {
    LowRankFactor factor;
    double fit = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Descends from the eigen start (plus jittered restarts when
/// config.restarts > 1). If that stalls, also builds up from rank 1, each
/// rank starting from the previous factor padded with a new column; best fit
/// wins. rank_sweep always uses the build-up.
FixedRankFit solve_fixed_rank(const Eigen::MatrixXd& target, const BandMask& mask, int rank, const SolveConfig& config);
FixedRankFit solve_fixed_rank(const PatchedCovariance& target, const BandMask& mask, int rank,
                              const SolveConfig& config);

/// Descends from a caller-provided start.
FixedRankFit solve_from(const Eigen::MatrixXd& target, const BandMask& mask, LowRankFactor start,
                        const SolveConfig& config);

struct RankSweepResult {
    std::vector<double> fits;             ///< f(i), i = 1..max_rank
    std::vector<double> normalized_fits;  ///< f(i)·K² / ‖P∘target‖²_F
    std::vector<LowRankFactor> factors;
    double band_energy = 0.0;             ///< K⁻²‖P∘target‖²_F

    [[nodiscard]] int max_rank() const { return static_cast<int>(fits.size()); }
};

/// Solves ranks 1..max in order. Rank i+1 starts from the better of the
/// eigen start and the rank-i factor padded with a jittered column; the
/// padded zero column is kept if neither improves on f(i).
RankSweepResult rank_sweep(const Eigen::MatrixXd& target, const BandMask& mask, const SolveConfig& config);

struct RankSelection {
    int rank = 1;
    /// Elbow only: false when no fit fell below the threshold.
    bool threshold_met = true;
};

RankSelection select_rank(const RankSweepResult& sweep, const RankPolicy& policy);

/// Piecewise-constant kernel on the K×K cells of the regular partition.
class StepKernel {
public:
    StepKernel() = default;
    explicit StepKernel(Eigen::MatrixXd coefficients) : coefficients_(std::move(coefficients)) {}

    double operator()(double x, double y) const;
    [[nodiscard]] int size() const { return static_cast<int>(coefficients_.rows()); }
    [[nodiscard]] const Eigen::MatrixXd& coefficients() const { return coefficients_; }
    /// 0, 1/K, ..., 1.
    [[nodiscard]] std::vector<double> boundaries() const;

private:
    Eigen::MatrixXd coefficients_;
};

struct CovarianceEstimate {
    SymMatrix matrix;
    int rank = 0;
    double fit = 0.0;
    LowRankFactor factor;
    StepKernel kernel;
    std::optional<RankSweepResult> sweep;
    bool rank_threshold_met = true;
    bool trace_warning = false;
};

/// Full pipeline: effective mask at delta_prime (default
/// target.delta_effective), rank sweep unless the policy is fixed, rank
/// selection, θ̂ = γγᵀ.
CovarianceEstimate estimate_covariance(const PatchedCovariance& target, const SolveConfig& config,
                                       std::optional<double> delta_prime = std::nullopt);

/// Trace of the target read through the mask: diagonal entries where the
/// mask keeps them, else the mean of the masked first off-diagonal neighbours.
double masked_trace(const Eigen::MatrixXd& target, const BandMask& mask);

/// Same pipeline against an explicit mask.
CovarianceEstimate estimate_with_mask(const Eigen::MatrixXd& target, const BandMask& mask, const SolveConfig& config);

/**
 * Determinant-propagation completion of a noiseless rank-q band.
 *
 * Unknown entries are filled diagonal by diagonal outward. Entry (j,l), l > j,
 * borders the known m×m block N on rows {j+1..j+m} and columns {l−m..l−1}.
 * A rank-q matrix forces x = u·N_q⁺·v (N_q the rank-q truncation of N); with
 * m = q this is the root of the (q+1)×(q+1) determinant. window fixes m (0
 * uses the largest block the filled band allows, which is far better
 * conditioned). Requires a standard band with half width > q and no
 * diagonal exclusion; uniqueness needs half width > 2q. Throws
 * SingularMinorError when σ_q(N) ≤ 1e−12·σ_1(N).
 */
SymMatrix exact_band_completion(const Eigen::MatrixXd& band, const BandMask& mask, int q, int window = 0);

} // namespace fragcov
