#include "fragcov/harness.hpp"

#include "fragcov/kernels.hpp"
#include "fragcov/patch.hpp"
#include "fragcov/rng.hpp"

#include <json.hpp>
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace fragcov {

namespace {

std::string format_number(double v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

std::string fixed4(double v)
{
    if (!std::isfinite(v)) return "nan";
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

std::string replace_all(std::string s, char from, char to)
{
    std::replace(s.begin(), s.end(), from, to);
    return s;
}

std::string rank_label(const RankPolicy& p)
{
    switch (p.kind) {
    case RankPolicy::Kind::Fixed: return std::to_string(p.rank);
    case RankPolicy::Kind::Elbow: return "elbow";
    case RankPolicy::Kind::Penalty: return "penalty";
    }
    return "?";
}

} // namespace

std::string ExperimentConfig::display_label() const
{
    if (!label.empty()) return label;
    if (kernel.rfind("scenarioA", 0) == 0) return "A";
    if (kernel.rfind("scenarioB", 0) == 0) return "B";
    return replace_all(kernel, ',', ';');
}

std::string ExperimentConfig::display_column() const
{
    if (!column.empty()) return column;
    return "rank " + rank_label(rank_policy);
}

double ExperimentConfig::resolved_delta_prime() const
{
    return delta_prime.value_or(default_delta_prime(law));
}

void ExperimentConfig::validate() const
{
    if (replications < 1) throw Error("replications must be at least 1");
    if (n < 1) throw Error("sample size must be positive");
    if (grid_type != GridType::Type2 && K < 2) throw Error("resolution K must be at least 2");
    law.validate();
    parse_kernel(kernel);
    const double dp = resolved_delta_prime();
    if (!(dp > 0.0 && dp < 1.0)) throw Error("effective bandwidth must lie in (0,1)");
    if (noise_sd < 0.0) throw Error("noise must be nonnegative");
}

Quartiles quartiles(std::vector<double> values)
{
    if (values.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan, nan};
    }
    std::sort(values.begin(), values.end());
    auto median_of = [&](std::size_t begin, std::size_t end) {
        const std::size_t len = end - begin;
        const std::size_t mid = begin + len / 2;
        return len % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
    };
    const std::size_t N = values.size();
    const double med = median_of(0, N);
    if (N < 2) return {med, med, med};
    const std::size_t half = N / 2;
    return {median_of(0, half), med, median_of(N - half, N)};
}

int worker_threads()
{
    if (const char* env = std::getenv("FRAGCOV_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    return std::max(1, omp_get_max_threads());
}

ReplicationOutcome run_replication(const ExperimentConfig& config, int replication)
{
    const Kernel kernel = parse_kernel(config.kernel);
    const auto rep = static_cast<std::uint64_t>(replication);
    const std::uint64_t seed = config.seed;

    FragmentSample sample;
    SymMatrix truth;
    PatchedCovariance patched;
    int K = config.K;

    switch (config.grid_type) {
    case GridType::Common: {
        auto grid_rng = make_stream(seed, rep, Stage::Grid);
        const Grid grid = config.midpoint_grid ? Grid::regular_midpoints(K) : Grid::perturbed(K, grid_rng);
        truth = evaluate_on_grid(kernel, grid);
        const Eigen::MatrixXd paths = sample_gp(truth, config.n, substream_seed(seed, rep, Stage::Paths));
        sample = fragment(paths, grid, config.law, substream_seed(seed, rep, Stage::Intervals));
        sample = add_noise(std::move(sample), config.noise_sd, substream_seed(seed, rep, Stage::Noise));
        patched = patched_regular(sample, K);
        break;
    }
    case GridType::Type1:
    case GridType::Type2: {
        IrregularOptions opts;
        opts.grid_type = config.grid_type;
        opts.base_resolution = config.base_resolution;
        opts.midpoint_grid = config.midpoint_grid;
        sample = fragment_irregular(kernel, config.n, config.law, opts, substream_seed(seed, rep, Stage::Paths));
        sample = add_noise(std::move(sample), config.noise_sd, substream_seed(seed, rep, Stage::Noise));
        if (config.grid_type == GridType::Type1) {
            K = config.base_resolution;
            truth = evaluate_on_grid(kernel, *sample.grid);
        } else {
            if (config.type2_theta) {
                double mean_q = 0.0, mean_delta = 0.0;
                for (int i = 0; i < sample.n(); ++i) {
                    mean_q += sample.curves[static_cast<std::size_t>(i)].size();
                    mean_delta += sample.intervals[static_cast<std::size_t>(i)].delta;
                }
                K = static_cast<int>(std::lround(*config.type2_theta * std::ceil(mean_q / mean_delta)));
            } else {
                K = type2_resolution(sample);
            }
            if (K < 2) throw Error("type-2 resolution below 2");
            std::vector<double> mids(static_cast<std::size_t>(K));
            for (int j = 0; j < K; ++j) mids[static_cast<std::size_t>(j)] = cell_midpoint(j, K);
            truth = evaluate_on_points(kernel, mids);
        }
        patched = patched_binned(sample, K);
        break;
    }
    }

    SolveConfig solve;
    solve.rank_policy = config.rank_policy;
    solve.max_iterations = config.max_iterations;
    solve.max_rank_sweep = config.max_rank;
    solve.seed = substream_seed(seed, rep, Stage::Solver);
    const CovarianceEstimate est = estimate_covariance(patched, solve, config.resolved_delta_prime());

    ReplicationOutcome out;
    out.relative_error = relative_error(est.matrix, truth);
    out.rank = est.rank;
    out.K = K;
    return out;
}

ExperimentResult run_cell(const ExperimentConfig& config)
{
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    ExperimentResult result;
    result.config = config;
    result.replications.resize(static_cast<std::size_t>(config.replications));

#pragma omp parallel for schedule(dynamic) num_threads(worker_threads())
    for (int r = 0; r < config.replications; ++r) {
        ReplicationOutcome& slot = result.replications[static_cast<std::size_t>(r)];
        try {
            slot = run_replication(config, r);
        } catch (const std::exception& e) {
            slot.relative_error = std::numeric_limits<double>::quiet_NaN();
            slot.error = e.what();
        }
    }

    std::vector<double> ok;
    for (const auto& rep : result.replications) {
        if (rep.error.empty()) ok.push_back(rep.relative_error);
        else ++result.failures;
    }
    result.summary = quartiles(std::move(ok));
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

double empirical_relative_error(const SymMatrix& estimate, const SymMatrix& reference)
{
    return relative_error(estimate, reference);
}

TableId parse_table_id(const std::string& text)
{
    if (text == "T2") return TableId::T2;
    if (text == "T4") return TableId::T4;
    if (text == "T5") return TableId::T5;
    if (text == "T6") return TableId::T6;
    if (text == "T7") return TableId::T7;
    throw Error("unknown table '" + text + "' (expected T2, T4, T5, T6 or T7)");
}

std::string to_string(TableId id)
{
    switch (id) {
    case TableId::T2: return "T2";
    case TableId::T4: return "T4";
    case TableId::T5: return "T5";
    case TableId::T6: return "T6";
    case TableId::T7: return "T7";
    }
    return "T2";
}

std::vector<ExperimentConfig> table_cells(TableId id, const TableOverrides& overrides)
{
    static constexpr double deltas[] = {0.5, 0.6, 0.7, 0.8, 0.9};
    static constexpr double ranges[][2] = {{0.4, 0.6}, {0.5, 0.7}, {0.6, 0.8}, {0.7, 0.9}};

    std::vector<ExperimentConfig> cells;
    auto finish = [&](ExperimentConfig c) {
        if (overrides.replications) c.replications = *overrides.replications;
        if (overrides.seed) c.seed = *overrides.seed;
        if (overrides.elbow) {
            c.column = c.display_column();
            c.rank_policy = RankPolicy::elbow(overrides.elbow_eps);
        }
        cells.push_back(std::move(c));
    };

    switch (id) {
    case TableId::T2:
    case TableId::T7: {
        const std::vector<int> Ks = id == TableId::T2 ? std::vector<int>{50} : std::vector<int>{25, 100};
        const std::vector<char> scenarios = id == TableId::T2 ? std::vector<char>{'A', 'B'} : std::vector<char>{'A'};
        for (int K : Ks) {
            for (char s : scenarios) {
                for (double d : deltas) {
                    for (int q = 1; q <= 3; ++q) {
                        ExperimentConfig c;
                        c.kernel = std::string("scenario") + s + ":" + std::to_string(q);
                        c.label = id == TableId::T2 ? std::string(1, s) : "A K=" + std::to_string(K);
                        c.K = K;
                        c.law = FragmentLaw::fixed(d);
                        c.rank_policy = RankPolicy::fixed(q);
                        finish(c);
                    }
                }
            }
        }
        break;
    }
    case TableId::T4: {
        for (double nu : {1.5, 2.5}) {
            for (double d : deltas) {
                for (int variant = 0; variant < 4; ++variant) {
                    const bool mixed = variant >= 2;
                    const double rho = variant % 2 == 0 ? 0.5 : 0.8;
                    ExperimentConfig c;
                    std::ostringstream id_text;
                    id_text << (mixed ? "matern+A2:" : "matern:") << nu << ',' << rho << ",1";
                    c.kernel = id_text.str();
                    c.label = "nu=" + format_number(nu);
                    c.column = std::string(mixed ? "M-A" : "M") + " rho=" + format_number(rho);
                    c.law = FragmentLaw::fixed(d);
                    c.rank_policy = RankPolicy::fixed(2);
                    finish(c);
                }
            }
        }
        break;
    }
    case TableId::T5:
    case TableId::T6: {
        const GridType type = id == TableId::T5 ? GridType::Type1 : GridType::Type2;
        for (int n : {200, 400}) {
            for (double noise : {0.0, 1.0}) {
                for (const auto& r : ranges) {
                    for (int q = 1; q <= 3; ++q) {
                        ExperimentConfig c;
                        c.kernel = "scenarioA:" + std::to_string(q);
                        c.label = to_string(type) + " n=" + std::to_string(n) + (noise > 0 ? " noisy" : " noiseless");
                        c.n = n;
                        c.grid_type = type;
                        c.noise_sd = noise;
                        c.law = FragmentLaw::uniform(r[0], r[1]);
                        c.rank_policy = RankPolicy::fixed(q);
                        finish(c);
                    }
                }
            }
        }
        break;
    }
    }
    return cells;
}

TableResult run_table(TableId id, const TableOverrides& overrides)
{
    TableResult out;
    out.id = id;
    for (const auto& cell : table_cells(id, overrides)) out.cells.push_back(run_cell(cell));
    return out;
}

void write_results_csv(std::ostream& out, const std::vector<ExperimentResult>& results)
{
    out << "scenario,rank,delta1,delta2,n,K,grid_type,noise,median,q1,q3,failures,seed\n";
    for (const auto& r : results) {
        const ExperimentConfig& c = r.config;
        out << c.display_label() << ',' << rank_label(c.rank_policy) << ',' << format_number(c.law.delta_min) << ','
            << format_number(c.law.delta_max) << ',' << c.n << ','
            << (c.grid_type == GridType::Type2 ? std::string("auto")
                : c.grid_type == GridType::Type1 ? std::to_string(c.base_resolution)
                                                 : std::to_string(c.K))
            << ',' << to_string(c.grid_type) << ',' << format_number(c.noise_sd) << ',' << fixed4(r.summary.median)
            << ',' << fixed4(r.summary.q1) << ',' << fixed4(r.summary.q3) << ',' << r.failures << ',' << c.seed
            << '\n';
    }
}

std::string format_table(const std::vector<ExperimentResult>& results)
{
    // Rows keyed by everything except the column heading, in first-seen order.
    std::vector<std::string> row_keys, col_keys;
    std::map<std::pair<std::string, std::string>, std::string> cells;
    for (const auto& r : results) {
        const ExperimentConfig& c = r.config;
        std::ostringstream row;
        row << c.display_label() << " | ";
        if (c.law.is_fixed()) row << "delta=" << c.law.delta_min;
        else row << "(" << c.law.delta_min << ", " << c.law.delta_max << ")";
        row << " (" << c.resolved_delta_prime() << ")";
        const std::string col = c.display_column();
        if (std::find(row_keys.begin(), row_keys.end(), row.str()) == row_keys.end()) row_keys.push_back(row.str());
        if (std::find(col_keys.begin(), col_keys.end(), col) == col_keys.end()) col_keys.push_back(col);
        std::ostringstream cell;
        if (std::isfinite(r.summary.median))
            cell << std::lround(r.summary.median) << " (" << std::lround(r.summary.q1) << ", "
                 << std::lround(r.summary.q3) << ")";
        else
            cell << "failed";
        if (r.failures > 0) cell << " [" << r.failures << " failed]";
        cells[{row.str(), col}] = cell.str();
    }

    std::size_t first_width = 0;
    for (const auto& k : row_keys) first_width = std::max(first_width, k.size());
    std::vector<std::size_t> widths;
    for (const auto& c : col_keys) {
        std::size_t w = c.size();
        for (const auto& rk : row_keys) {
            auto it = cells.find({rk, c});
            if (it != cells.end()) w = std::max(w, it->second.size());
        }
        widths.push_back(w);
    }

    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(first_width)) << "cell";
    for (std::size_t k = 0; k < col_keys.size(); ++k) os << " | " << std::setw(static_cast<int>(widths[k])) << col_keys[k];
    os << '\n';
    for (const auto& rk : row_keys) {
        os << std::setw(static_cast<int>(first_width)) << rk;
        for (std::size_t k = 0; k < col_keys.size(); ++k) {
            auto it = cells.find({rk, col_keys[k]});
            os << " | " << std::setw(static_cast<int>(widths[k])) << (it == cells.end() ? "" : it->second);
        }
        os << '\n';
    }
    return os.str();
}

RankSweepResult scree_report(const PatchedCovariance& target, const SolveConfig& config,
                             std::optional<double> delta_prime)
{
    const BandMask mask = effective_mask(target, delta_prime.value_or(target.delta_effective));
    return rank_sweep(target.matrix.entries(), mask, config);
}

ExperimentConfig config_from_json(const std::string& text)
{
    const nlohmann::json j = nlohmann::json::parse(text);
    ExperimentConfig c;
    c.kernel = j.value("kernel", c.kernel);
    c.label = j.value("label", c.label);
    c.n = j.value("n", c.n);
    c.K = j.value("K", c.K);
    if (j.contains("delta")) {
        c.law = FragmentLaw::fixed(j["delta"].get<double>());
    } else if (j.contains("delta_min") || j.contains("delta_max")) {
        c.law = FragmentLaw::uniform(j.at("delta_min").get<double>(), j.at("delta_max").get<double>());
    }
    const std::string start = j.value("start", std::string("cell"));
    if (start == "continuous") c.law.start = StartLaw::Continuous;
    else if (start != "cell") throw Error("start must be \"cell\" or \"continuous\"");
    c.grid_type = parse_grid_type(j.value("grid_type", std::string("common")));
    c.noise_sd = j.value("noise_sd", c.noise_sd);
    if (j.contains("delta_prime")) c.delta_prime = j["delta_prime"].get<double>();
    if (j.contains("rank")) {
        const auto& r = j["rank"];
        if (r.is_string()) {
            if (r.get<std::string>() != "auto") throw Error("rank must be an integer or \"auto\"");
            c.rank_policy = RankPolicy::elbow(j.value("elbow_eps", 0.01));
        } else {
            c.rank_policy = RankPolicy::fixed(r.get<int>());
        }
    }
    if (j.contains("tau")) c.rank_policy = RankPolicy::penalty(j["tau"].get<double>());
    c.replications = j.value("replications", c.replications);
    c.seed = j.value("seed", c.seed);
    c.base_resolution = j.value("base_resolution", c.base_resolution);
    c.midpoint_grid = j.value("midpoint_grid", c.midpoint_grid);
    if (j.contains("type2_theta")) c.type2_theta = j["type2_theta"].get<double>();
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    if (j.contains("max_rank")) c.max_rank = j["max_rank"].get<int>();
    c.validate();
    return c;
}

std::string config_to_json(const ExperimentConfig& c)
{
    nlohmann::ordered_json j;
    j["kernel"] = c.kernel;
    j["label"] = c.display_label();
    j["n"] = c.n;
    j["K"] = c.K;
    j["delta_min"] = c.law.delta_min;
    j["delta_max"] = c.law.delta_max;
    j["start"] = c.law.start == StartLaw::Cell ? "cell" : "continuous";
    j["grid_type"] = to_string(c.grid_type);
    j["noise_sd"] = c.noise_sd;
    j["delta_prime"] = c.resolved_delta_prime();
    switch (c.rank_policy.kind) {
    case RankPolicy::Kind::Fixed: j["rank"] = c.rank_policy.rank; break;
    case RankPolicy::Kind::Elbow:
        j["rank"] = "auto";
        j["elbow_eps"] = c.rank_policy.threshold;
        break;
    case RankPolicy::Kind::Penalty:
        j["rank"] = "auto";
        j["tau"] = c.rank_policy.tau;
        break;
    }
    j["replications"] = c.replications;
    j["seed"] = c.seed;
    j["base_resolution"] = c.base_resolution;
    j["midpoint_grid"] = c.midpoint_grid;
    if (c.type2_theta) j["type2_theta"] = *c.type2_theta;
    j["max_iterations"] = c.max_iterations;
    if (c.max_rank) j["max_rank"] = *c.max_rank;
    return j.dump();
}

} // namespace fragcov
