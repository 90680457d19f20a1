/**
 * @file simulate.hpp
 * @brief Gaussian process sampling and fragment observation regimes.
 *
 * Every routine takes an explicit 64-bit seed and is bit-reproducible for a
 * given seed. Routines that draw from several independent sources (grid,
 * intervals, times, paths) split the seed into substreams with
 * substream_seed().
 */

#pragma once

#include "fragcov/core.hpp"
#include "fragcov/kernels.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fragcov {

enum class GridType { Common, Type1, Type2 };

std::string to_string(GridType type);
GridType parse_grid_type(const std::string& text);

/// O_i = [start, start + delta].
struct Interval {
    double start = 0.0;
    double delta = 1.0;

    [[nodiscard]] double end() const { return start + delta; }
    [[nodiscard]] bool contains(double t) const { return t >= start && t <= end(); }
};

struct Curve {
    int id = 0;
    std::vector<double> times;  ///< sorted
    std::vector<double> values;
    /// Index into FragmentSample::grid for each time (common and type-1 regimes).
    std::vector<int> grid_index;

    [[nodiscard]] int size() const { return static_cast<int>(times.size()); }
};

struct FragmentSample {
    std::vector<Curve> curves;
    std::vector<Interval> intervals;  ///< parallel to curves
    double noise_sd = 0.0;
    GridType grid_type = GridType::Common;
    /// Shared grid for the common and type-1 regimes.
    std::optional<Grid> grid;

    [[nodiscard]] int n() const { return static_cast<int>(curves.size()); }
    [[nodiscard]] std::size_t observation_count() const;
};

/// Fragment length law: delta uniform on [delta_min, delta_max]; fixed when equal.
/// Start of O_i: Cell draws s uniformly from {0, ..., floor(K(1 − delta))}
/// and starts at s/K; Continuous draws it uniformly on [0, 1 − delta].
enum class StartLaw { Cell, Continuous };

struct FragmentLaw {
    double delta_min = 0.5;
    double delta_max = 0.5;
    StartLaw start = StartLaw::Cell;

    static FragmentLaw fixed(double delta) { return {delta, delta, StartLaw::Cell}; }
    static FragmentLaw uniform(double lo, double hi) { return {lo, hi, StartLaw::Cell}; }

    [[nodiscard]] bool is_fixed() const { return delta_min == delta_max; }
    void validate() const;
};

/// n i.i.d. rows from N(0, truth) via a clipped symmetric eigendecomposition
/// square root. Throws Error("not PSD") if an eigenvalue is below −1e−6·λ_max.
Eigen::MatrixXd sample_gp(const SymMatrix& truth, int n, std::uint64_t seed);

/// Common-grid regime: curve i keeps exactly the grid points inside its
/// interval O_i, start drawn by law.start.
FragmentSample fragment(const Eigen::MatrixXd& values, const Grid& grid, const FragmentLaw& law,
                        std::uint64_t seed);

struct IrregularOptions {
    GridType grid_type = GridType::Type1;
    /// K for type-1 grids, the base resolution K̈ for type-2 grids.
    int base_resolution = 50;
    /// Type-1 shared grid: perturbed (default) or cell midpoints.
    bool midpoint_grid = false;
};

/**
 * Variable-length fragments on irregular grids.
 *
 * Type 1: a shared grid of base_resolution points is drawn once; curve i
 * observes Q_i = ceil(K·delta_i) consecutive grid points and O_i is the union
 * of their cells. Type 2: Q_i = ceil(K̈·delta_i) times drawn i.i.d. uniform
 * on O_i. Throws Error("fragment too sparse") if some Q_i < 2.
 */
FragmentSample fragment_irregular(const Kernel& kernel, int n, const FragmentLaw& law,
                                  const IrregularOptions& options, std::uint64_t seed);

/// Adds i.i.d. N(0, noise_sd²) to every value.
FragmentSample add_noise(FragmentSample sample, double noise_sd, std::uint64_t seed);

/// Harness resolution for type-2 grids: round(4·(5n)⁻¹·Σ Q_i).
int type2_resolution(const FragmentSample& sample);

} // namespace fragcov
