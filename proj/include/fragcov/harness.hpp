/**
 * @file harness.hpp
 * @brief Replicated simulation cells, result tables and scree reports.
 *
 * A cell is one (kernel, n, K, fragment law, grid type, noise, rank policy)
 * combination run for a number of replications. Replication r draws all of
 * its randomness from substreams of (master seed, r), so results do not
 * depend on how replications are scheduled across threads. The thread count
 * is capped by the FRAGCOV_THREADS environment variable.
 */

#pragma once

#include "fragcov/complete.hpp"
#include "fragcov/simulate.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fragcov {

struct ExperimentConfig {
    std::string kernel = "scenarioA:1";
    /// Short label for tables and CSV; derived from the kernel id when empty.
    std::string label;
    int n = 200;
    /// Estimation resolution. Ignored for type-2 grids, where K comes from
    /// the sample (see type2_theta).
    int K = 50;
    FragmentLaw law = FragmentLaw::fixed(0.5);
    GridType grid_type = GridType::Common;
    double noise_sd = 0.0;
    /// Overrides the default delta' policy (delta − 0.1, or delta_min).
    std::optional<double> delta_prime;
    RankPolicy rank_policy = RankPolicy::fixed(1);
    int replications = 100;
    std::uint64_t seed = 1;
    /// Type-1 K / type-2 K̈.
    int base_resolution = 50;
    bool midpoint_grid = false;
    /// Type-2 resolution theta·ceil(mean Q / mean delta); unset uses 4(5n)⁻¹ΣQ_i.
    std::optional<double> type2_theta;
    int max_iterations = 2000;
    /// Largest rank swept by elbow/penalty policies (solver default when unset).
    std::optional<int> max_rank;
    /// Column heading in formatted tables; the rank policy when empty.
    std::string column;

    [[nodiscard]] std::string display_label() const;
    [[nodiscard]] std::string display_column() const;
    [[nodiscard]] double resolved_delta_prime() const;
    void validate() const;
};

struct Quartiles {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

/// Midpoint-rule quartiles: median of the sorted vector (mean of the two
/// middle elements for even sizes); Q1/Q3 are the medians of the lower and
/// upper halves, excluding the middle element for odd sizes.
Quartiles quartiles(std::vector<double> values);

struct ReplicationOutcome {
    double relative_error = 0.0;  ///< percent; NaN when failed
    int rank = 0;
    int K = 0;
    std::string error;            ///< empty on success
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<ReplicationOutcome> replications;
    Quartiles summary;
    int failures = 0;
    double wall_seconds = 0.0;
};

/// Runs one replication of a cell; throws on failure.
ReplicationOutcome run_replication(const ExperimentConfig& config, int replication);

ExperimentResult run_cell(const ExperimentConfig& config);

/// 100·‖estimate − reference‖_F/‖reference‖_F against an empirical reference.
double empirical_relative_error(const SymMatrix& estimate, const SymMatrix& reference);

enum class TableId { T2, T4, T5, T6, T7 };

TableId parse_table_id(const std::string& text);
std::string to_string(TableId id);

struct TableOverrides {
    std::optional<int> replications;
    std::optional<std::uint64_t> seed;
    /// Select ranks by the elbow rule instead of the table's fixed rank.
    bool elbow = false;
    double elbow_eps = 0.01;
};

/// The cell grid of a results table, in row-major layout order.
std::vector<ExperimentConfig> table_cells(TableId id, const TableOverrides& overrides = {});

struct TableResult {
    TableId id = TableId::T2;
    std::vector<ExperimentResult> cells;
};

TableResult run_table(TableId id, const TableOverrides& overrides = {});

/// CSV columns scenario,rank,delta1,delta2,n,K,grid_type,noise,median,q1,q3,failures,seed.
void write_results_csv(std::ostream& out, const std::vector<ExperimentResult>& results);
/// Aligned text: one row per (block, delta) and one `median (q1, q3)` column per rank/variant.
std::string format_table(const std::vector<ExperimentResult>& results);

/// Rank sweep behind a scree plot: rank, fit, normalized fit.
RankSweepResult scree_report(const PatchedCovariance& target, const SolveConfig& config,
                             std::optional<double> delta_prime = std::nullopt);

/// JSON object mirroring ExperimentConfig. Missing fields keep their
/// defaults; `delta` sets a fixed law, `delta_min`/`delta_max` a variable one,
/// and `rank` is an integer or "auto" (elbow).
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);

/// Effective thread count: FRAGCOV_THREADS when set, else the OpenMP default.
int worker_threads();

} // namespace fragcov
