#include "fragcov/core.hpp"

#include <doctest.h>

#include <random>

using namespace fragcov;

TEST_CASE("band mask follows floor(K delta) - 1")
{
    const BandMask m(15, 0.5, false);
    CHECK(m.half_width() == 6);
    CHECK(m.includes(1, 6));
    CHECK_FALSE(m.includes(1, 7));

    const BandMask wide(10, 0.99, false);
    for (int j = 0; j < 10; ++j)
        for (int l = 0; l < 10; ++l) CHECK(wide.includes(j, l) == (std::abs(j - l) < 8));

    const BandMask noisy(50, 0.4, true);
    for (int j = 0; j < 50; ++j) CHECK_FALSE(noisy.includes(j, j));
    CHECK(noisy.includes(3, 4));
    CHECK(noisy.includes(3, 21));
    CHECK_FALSE(noisy.includes(3, 22));
}

TEST_CASE("degenerate band is rejected")
{
    CHECK_THROWS_WITH_AS(BandMask(5, 0.3, false), "band degenerate", Error);
    CHECK_THROWS_AS(BandMask(3, 0.5, false), Error);
    CHECK_NOTHROW(BandMask(4, 0.5, false));
}

TEST_CASE("band mask is symmetric and monotone in delta")
{
    for (int K : {7, 20, 50}) {
        for (bool drop : {false, true}) {
            const BandMask narrow(K, 0.45, drop), wide(K, 0.8, drop);
            CHECK(narrow.weights() == narrow.weights().transpose());
            CHECK(((narrow.weights().array() <= wide.weights().array())).all());
        }
    }
}

TEST_CASE("relative error")
{
    Eigen::MatrixXd t(2, 2);
    t << 2, 1, 1, 3;
    const SymMatrix truth(t);
    CHECK(relative_error(truth, truth) == doctest::Approx(0.0));
    CHECK(relative_error(SymMatrix::zero(2), truth) == doctest::Approx(100.0));
    CHECK(relative_error(SymMatrix(Eigen::MatrixXd(2.0 * t)), truth) == doctest::Approx(100.0));
    CHECK_THROWS_WITH_AS(relative_error(truth, SymMatrix::zero(2)), "undefined relative error", Error);

    const Eigen::MatrixXd e = t + 0.3 * Eigen::MatrixXd::Ones(2, 2);
    for (double c : {-2.0, 0.5, 7.0})
        CHECK(relative_error(Eigen::MatrixXd(c * e), Eigen::MatrixXd(c * t)) == doctest::Approx(relative_error(e, t)));
}

TEST_CASE("masked Frobenius distance")
{
    const Eigen::MatrixXd A = Eigen::MatrixXd::Random(2, 2);
    const BandMask full = BandMask::from_pattern(Eigen::MatrixXd::Ones(2, 2));
    CHECK(masked_frobenius_sq(A, A, full) == 0.0);
    CHECK(masked_frobenius_sq(Eigen::MatrixXd(A + Eigen::MatrixXd::Ones(2, 2)), A, full) == doctest::Approx(1.0));

    const BandMask band(10, 0.5, false);
    Eigen::MatrixXd off = Eigen::MatrixXd::Zero(10, 10);
    off(0, 9) = off(9, 0) = 5.0;
    CHECK(masked_frobenius_sq(off, Eigen::MatrixXd::Zero(10, 10), band) == 0.0);

    const Eigen::MatrixXd B = Eigen::MatrixXd::Random(2, 2);
    CHECK(masked_frobenius_sq(A, B, full) == doctest::Approx(masked_frobenius_sq(B, A, full)));
    CHECK_THROWS_AS(masked_frobenius_sq(A, Eigen::MatrixXd::Zero(3, 3), full), Error);
}

TEST_CASE("grids")
{
    std::mt19937_64 rng(3);
    const Grid g = Grid::perturbed(40, rng);
    CHECK(g.size() == 40);
    CHECK(g.partition_aligned());
    for (int j = 0; j < 40; ++j) {
        CHECK(g[j] >= static_cast<double>(j) / 40);
        CHECK(g[j] <= static_cast<double>(j + 1) / 40);
        CHECK(cell_index(g[j], 40) == j);
    }
    const Grid mid = Grid::regular_midpoints(4);
    CHECK(mid[0] == doctest::Approx(0.125));
    CHECK(mid[3] == doctest::Approx(0.875));
    CHECK(cell_index(1.0, 4) == 3);
    CHECK_THROWS_AS(Grid::from_points({0.2, 0.1}), Error);
    CHECK_THROWS_AS(Grid::from_points({0.2, 1.5}), Error);
    CHECK_THROWS_AS(Grid::from_points({0.9, 0.95}, true), Error);
}

TEST_CASE("SymMatrix symmetrizes and rejects asymmetric input")
{
    Eigen::MatrixXd a(2, 2);
    a << 1, 2, 2 + 1e-12, 1;
    const SymMatrix s(a);
    CHECK(s(0, 1) == s(1, 0));
    a(1, 0) = 3;
    CHECK_THROWS_AS(SymMatrix{a}, Error);
    CHECK_THROWS_AS(SymMatrix{Eigen::MatrixXd(2, 3)}, Error);
}

TEST_CASE("low-rank factor product is PSD")
{
    LowRankFactor f{Eigen::MatrixXd::Random(12, 3)};
    const Eigen::VectorXd ev = symmetric_eigenvalues(f.product());
    CHECK(ev.minCoeff() >= -1e-10 * ev.maxCoeff());
}
