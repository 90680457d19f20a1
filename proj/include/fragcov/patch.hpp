/**
 * @file patch.hpp
 * @brief Banded "patched" empirical covariance from fragments.
 *
 * For each index pair only the curves that observe both arguments
 * contribute, and they are centred by means over exactly those curves. Pairs
 * with no contributor are zero with count zero. Entries divide by the
 * contributor count (the 1/m convention).
 *
 * The default builders are OpenMP-parallel over output rows; each (j,l)
 * entry is accumulated by a single thread in a fixed order, so results do not
 * depend on the thread count. namespace reference holds literal two-pass
 * serial versions used by the tests and the benchmark.
 */

#pragma once

#include "fragcov/core.hpp"
#include "fragcov/simulate.hpp"

namespace fragcov {

struct PatchedCovariance {
    SymMatrix matrix;  ///< carries the pair-availability counts
    double delta_effective = 0.0;
    bool noise_flag = false;

    [[nodiscard]] int size() const { return matrix.size(); }
    [[nodiscard]] const Eigen::MatrixXi& counts() const { return *matrix.counts(); }
};

/// Common-grid regime. Requires sample.grid with K points and grid indices
/// on every curve.
PatchedCovariance patched_regular(const FragmentSample& sample, int K);

/// Bins observation times into the regular K-partition and averages centred
/// cross-products over all within-curve time pairs landing in each bin pair.
PatchedCovariance patched_binned(const FragmentSample& sample, int K);

/// Standard band at delta_prime, diagonal dropped when noise_flag is set.
/// Throws Error("mask exceeds data support") if a masked entry has count 0.
BandMask effective_mask(const PatchedCovariance& patched, double delta_prime);

/// delta − 0.1 for fixed-length fragments, delta_min otherwise.
double default_delta_prime(const FragmentLaw& law);

namespace reference {

PatchedCovariance patched_regular(const FragmentSample& sample, int K);
PatchedCovariance patched_binned(const FragmentSample& sample, int K);

} // namespace reference

namespace detail {

/// delta_effective inferred from the sample's intervals.
double infer_delta_prime(const FragmentSample& sample);

} // namespace detail

} // namespace fragcov
