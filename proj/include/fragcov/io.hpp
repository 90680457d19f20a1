/**
 * @file io.hpp
 * @brief CSV/JSON formats for fragment samples, dense matrices and scree data.
 *
 * Fragment CSV: header `curve_id,t,value`, one row per observation.
 * Sidecar JSON: {n, grid_type, noise_sd, intervals:[{start,delta}]} plus an
 * optional `grid` array for the common and type-1 regimes.
 * Matrices: dense K×K CSV without header.
 */

#pragma once

#include "fragcov/complete.hpp"
#include "fragcov/simulate.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fragcov {

void write_fragments_csv(std::ostream& out, const FragmentSample& sample);
void write_fragments_csv(const std::string& path, const FragmentSample& sample);
std::string sidecar_json(const FragmentSample& sample);
void write_sidecar(const std::string& path, const FragmentSample& sample);

/// Conventional sidecar path: `<csv path without .csv>.json`.
std::string sidecar_path_for(const std::string& csv_path);

struct IngestResult {
    FragmentSample sample;
    std::vector<std::string> warnings;
};

/**
 * Reads a fragment CSV (and its sidecar, when given).
 *
 * Rows may appear in any order; each curve is sorted by t. Curves with fewer
 * than two points are dropped with a warning. Without a sidecar the interval
 * of each curve is [min t, max t] and the grid type is `common` when all
 * curves share one set of times, `type2` otherwise. Malformed rows raise an
 * Error naming the line.
 */
IngestResult ingest_fragments(std::istream& csv, const std::optional<std::string>& sidecar_text = std::nullopt);
IngestResult ingest_fragments(const std::string& csv_path, const std::optional<std::string>& sidecar_path = std::nullopt);

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
void write_counts_csv(const std::string& path, const Eigen::MatrixXi& m);
Eigen::MatrixXd read_matrix_csv(std::istream& in);
Eigen::MatrixXd read_matrix_csv(const std::string& path);
Eigen::MatrixXi read_counts_csv(const std::string& path);

/// Columns rank,fit,normalized_fit.
void write_scree_csv(std::ostream& out, const RankSweepResult& sweep);
void write_scree_csv(const std::string& path, const RankSweepResult& sweep);

std::string read_text_file(const std::string& path);

} // namespace fragcov
