#include "fragcov/complete.hpp"

#include <algorithm>
#include <cmath>

namespace fragcov {

SymMatrix exact_band_completion(const Eigen::MatrixXd& band, const BandMask& mask, int q, int window)
{
    const int K = static_cast<int>(band.rows());
    if (band.cols() != K || mask.size() != K) throw Error("dimension mismatch between band and mask");
    if (q < 1) throw Error("completion rank must be at least 1");
    if (!mask.is_standard_band() || mask.excludes_diagonal())
        throw Error("exact completion needs a standard band including the diagonal");
    const int w = mask.half_width();
    if (w <= q) throw Error("band too narrow for a rank-" + std::to_string(q) + " completion");
    if (window != 0 && window < q) throw Error("completion window smaller than the rank");

    Eigen::MatrixXd R = band.cwiseProduct(mask.weights());

    // Diagonal d = l − j is known for d < w; fill d = w, w+1, ... in order.
    // Entry (j,l) borders the known block N on rows j+1..j+m and columns
    // l−m..l−1; rank q forces x = u·N⁺·v with N truncated to rank q.
    for (int d = w; d < K; ++d) {
        for (int j = 0; j + d < K; ++j) {
            const int l = j + d;
            int m = std::min(d - 1, K - 1 - j);
            if (window != 0) m = std::min(m, window);
            const Eigen::MatrixXd N = R.block(j + 1, l - m, m, m);
            const Eigen::RowVectorXd u = R.block(j, l - m, 1, m);
            const Eigen::VectorXd v = R.block(j + 1, l, m, 1);

            Eigen::JacobiSVD<Eigen::MatrixXd> svd(N, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const Eigen::VectorXd& s = svd.singularValues();
            if (s.size() < q || !(s(q - 1) > 1e-12 * s(0)))
                throw SingularMinorError("singular minor: completion not identifiable from this submatrix");
            const Eigen::VectorXd a = svd.matrixU().leftCols(q).transpose() * v;
            const Eigen::RowVectorXd b = u * svd.matrixV().leftCols(q);
            const double x = b * a.cwiseQuotient(s.head(q));
            R(j, l) = x;
            R(l, j) = x;
        }
    }
    return SymMatrix(std::move(R));
}

} // namespace fragcov
