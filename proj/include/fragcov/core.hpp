/**
 * @file core.hpp
 * @brief Grids, band masks, symmetric matrix containers and error metrics.
 *
 * Indices in this API are 0-based. External file formats (CSV) are dense
 * and carry no explicit indices.
 */

#pragma once

#include <Eigen/Dense>

#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fragcov {

/// Base error for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by the determinant-propagation oracle when a pivot minor vanishes.
class SingularMinorError : public Error {
public:
    using Error::Error;
};

/// Raised when the factorized descent produces a non-finite objective.
class DivergedError : public Error {
public:
    using Error::Error;
};

/// Index of the cell I_{j,K} = [j/K, (j+1)/K) containing t; t = 1 maps to K-1.
int cell_index(double t, int K);

/// Midpoint of the j-th cell of the regular K-partition of [0,1].
inline double cell_midpoint(int j, int K) { return (j + 0.5) / K; }

/**
 * Ordered evaluation points on [0,1].
 *
 * A grid built by regular_midpoints() or perturbed() is "partition aligned":
 * point j lies in cell I_{j,K}. Grids from from_points() need only be
 * strictly increasing inside [0,1].
 */
class Grid {
public:
    Grid() = default;

    static Grid regular_midpoints(int K);
    /// t_j drawn uniformly on I_{j,K}.
    static Grid perturbed(int K, std::mt19937_64& rng);
    /// Validates strict monotonicity and range. With require_partition, also
    /// checks t_j ∈ [j/K, (j+1)/K].
    static Grid from_points(std::vector<double> points, bool require_partition = false);

    [[nodiscard]] int size() const { return static_cast<int>(points_.size()); }
    [[nodiscard]] const std::vector<double>& points() const { return points_; }
    [[nodiscard]] double operator[](int j) const { return points_[static_cast<std::size_t>(j)]; }
    [[nodiscard]] bool partition_aligned() const;

private:
    explicit Grid(std::vector<double> points) : points_(std::move(points)) {}
    std::vector<double> points_;
};

/**
 * Symmetric 0/1 inclusion mask over K×K index pairs.
 *
 * The standard band keeps (j,l) iff |j-l| < floor(K·delta) - 1, optionally
 * dropping the diagonal. Masks are stored densely as 0/1 doubles so they can
 * be applied by coefficient-wise product.
 */
class BandMask {
public:
    BandMask() = default;

    /// Standard band; throws Error("band degenerate") if floor(K·delta) - 1 <= 0.
    BandMask(int K, double delta, bool exclude_diagonal);

    /// Arbitrary symmetric 0/1 pattern (used for randomized solver checks).
    static BandMask from_pattern(const Eigen::MatrixXd& pattern);

    [[nodiscard]] int size() const { return static_cast<int>(weights_.rows()); }
    [[nodiscard]] bool includes(int j, int l) const { return weights_(j, l) != 0.0; }
    [[nodiscard]] const Eigen::MatrixXd& weights() const { return weights_; }
    [[nodiscard]] double delta() const { return delta_; }
    [[nodiscard]] bool excludes_diagonal() const { return exclude_diagonal_; }
    /// floor(K·delta) - 1 for standard bands; 0 for custom patterns.
    [[nodiscard]] int half_width() const { return half_width_; }
    [[nodiscard]] bool is_standard_band() const { return half_width_ > 0; }
    [[nodiscard]] int count() const { return static_cast<int>(weights_.sum()); }

private:
    Eigen::MatrixXd weights_;
    double delta_ = 0.0;
    bool exclude_diagonal_ = false;
    int half_width_ = 0;
};

/// floor(K·delta) - 1, the half width of the standard band.
int band_half_width(int K, double delta);

inline BandMask band_mask(int K, double delta, bool exclude_diagonal)
{
    return BandMask(K, delta, exclude_diagonal);
}

/// Dense symmetric K×K matrix with an optional pair-availability count matrix.
class SymMatrix {
public:
    SymMatrix() = default;

    /// Symmetrizes exactly as (A + Aᵀ)/2; throws if A is not square or the
    /// asymmetry exceeds 1e-8 relative to max |A|.
    explicit SymMatrix(Eigen::MatrixXd entries);
    SymMatrix(Eigen::MatrixXd entries, Eigen::MatrixXi counts);

    static SymMatrix zero(int K) { return SymMatrix(Eigen::MatrixXd::Zero(K, K)); }

    [[nodiscard]] int size() const { return static_cast<int>(entries_.rows()); }
    [[nodiscard]] const Eigen::MatrixXd& entries() const { return entries_; }
    [[nodiscard]] double operator()(int j, int l) const { return entries_(j, l); }
    [[nodiscard]] const std::optional<Eigen::MatrixXi>& counts() const { return counts_; }
    [[nodiscard]] double frobenius_norm() const { return entries_.norm(); }

private:
    Eigen::MatrixXd entries_;
    std::optional<Eigen::MatrixXi> counts_;
};

/// K×i factor γ of a candidate θ = γγᵀ.
struct LowRankFactor {
    Eigen::MatrixXd gamma;

    [[nodiscard]] int rows() const { return static_cast<int>(gamma.rows()); }
    [[nodiscard]] int rank() const { return static_cast<int>(gamma.cols()); }
    [[nodiscard]] Eigen::MatrixXd product() const { return gamma * gamma.transpose(); }
};

/// 100·‖estimate − truth‖_F / ‖truth‖_F.
double relative_error(const SymMatrix& estimate, const SymMatrix& truth);
double relative_error(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth);

/// K⁻²·Σ_{mask} (A − B)².
double masked_frobenius_sq(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const BandMask& mask);
double masked_frobenius_sq(const SymMatrix& A, const SymMatrix& B, const BandMask& mask);

/// Sorted eigenvalues (ascending) of a symmetric matrix.
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& A);

} // namespace fragcov
