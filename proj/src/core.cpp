#include "fragcov/core.hpp"

#include <algorithm>
#include <cmath>

namespace fragcov {

int cell_index(double t, int K)
{
    const int j = static_cast<int>(std::floor(t * K));
    return std::clamp(j, 0, K - 1);
}

Grid Grid::regular_midpoints(int K)
{
    if (K < 1) throw Error("grid resolution must be positive");
    std::vector<double> pts(static_cast<std::size_t>(K));
    for (int j = 0; j < K; ++j) pts[static_cast<std::size_t>(j)] = cell_midpoint(j, K);
    return Grid(std::move(pts));
}

Grid Grid::perturbed(int K, std::mt19937_64& rng)
{
    if (K < 1) throw Error("grid resolution must be positive");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> pts(static_cast<std::size_t>(K));
    for (int j = 0; j < K; ++j) {
        // Open cell interior keeps the sequence strictly increasing.
        double u = unif(rng);
        if (u == 0.0) u = 0.5;
        pts[static_cast<std::size_t>(j)] = (j + u) / K;
    }
    return Grid(std::move(pts));
}

Grid Grid::from_points(std::vector<double> points, bool require_partition)
{
    if (points.empty()) throw Error("grid must contain at least one point");
    const int K = static_cast<int>(points.size());
    for (int j = 0; j < K; ++j) {
        const double t = points[static_cast<std::size_t>(j)];
        if (!(t >= 0.0 && t <= 1.0)) throw Error("grid point outside [0,1]");
        if (j > 0 && !(t > points[static_cast<std::size_t>(j - 1)]))
            throw Error("grid points must be strictly increasing");
        if (require_partition && (t < static_cast<double>(j) / K || t > static_cast<double>(j + 1) / K))
            throw Error("grid point " + std::to_string(j) + " outside its partition cell");
    }
    return Grid(std::move(points));
}

bool Grid::partition_aligned() const
{
    const int K = size();
    for (int j = 0; j < K; ++j) {
        const double t = points_[static_cast<std::size_t>(j)];
        if (t < static_cast<double>(j) / K || t > static_cast<double>(j + 1) / K) return false;
    }
    return true;
}

int band_half_width(int K, double delta)
{
    // Guard against K·delta landing a hair under an integer (e.g. 50·0.7).
    return static_cast<int>(std::floor(K * delta + 1e-9)) - 1;
}

BandMask::BandMask(int K, double delta, bool exclude_diagonal)
    : delta_(delta), exclude_diagonal_(exclude_diagonal)
{
    if (K < 2) throw Error("band mask needs K >= 2");
    if (!(delta > 0.0 && delta < 1.0)) throw Error("band delta must lie in (0,1)");
    half_width_ = band_half_width(K, delta);
    if (half_width_ <= 0 || (exclude_diagonal && half_width_ <= 1)) throw Error("band degenerate");
    weights_.setZero(K, K);
    for (int j = 0; j < K; ++j) {
        for (int l = 0; l < K; ++l) {
            const int gap = std::abs(j - l);
            if (gap < half_width_ && !(exclude_diagonal && gap == 0)) weights_(j, l) = 1.0;
        }
    }
}

BandMask BandMask::from_pattern(const Eigen::MatrixXd& pattern)
{
    if (pattern.rows() != pattern.cols()) throw Error("mask pattern must be square");
    BandMask m;
    m.weights_ = (pattern.array() != 0.0).cast<double>().matrix();
    if (m.weights_ != m.weights_.transpose())
        throw Error("mask pattern must be symmetric");
    return m;
}

SymMatrix::SymMatrix(Eigen::MatrixXd entries)
{
    if (entries.rows() != entries.cols()) throw Error("symmetric matrix must be square");
    const double scale = std::max(1.0, entries.cwiseAbs().maxCoeff());
    if (entries.size() > 0 && (entries - entries.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw Error("matrix is not symmetric");
    entries_ = 0.5 * (entries + entries.transpose());
}

SymMatrix::SymMatrix(Eigen::MatrixXd entries, Eigen::MatrixXi counts) : SymMatrix(std::move(entries))
{
    if (counts.rows() != entries_.rows() || counts.cols() != entries_.cols())
        throw Error("count matrix dimension mismatch");
    if (counts != counts.transpose()) throw Error("count matrix must be symmetric");
    if ((counts.array() < 0).any()) throw Error("counts must be nonnegative");
    counts_ = std::move(counts);
}

double relative_error(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& truth)
{
    if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
        throw Error("relative error: dimension mismatch");
    const double denom = truth.norm();
    if (!(denom > 0.0)) throw Error("undefined relative error");
    return 100.0 * (estimate - truth).norm() / denom;
}

double relative_error(const SymMatrix& estimate, const SymMatrix& truth)
{
    return relative_error(estimate.entries(), truth.entries());
}

double masked_frobenius_sq(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const BandMask& mask)
{
    if (A.rows() != B.rows() || A.cols() != B.cols() || A.rows() != mask.size())
        throw Error("masked Frobenius: dimension mismatch");
    const double K = static_cast<double>(A.rows());
    return (mask.weights().array() * (A - B).array().square()).sum() / (K * K);
}

double masked_frobenius_sq(const SymMatrix& A, const SymMatrix& B, const BandMask& mask)
{
    return masked_frobenius_sq(A.entries(), B.entries(), mask);
}

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& A)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

} // namespace fragcov
