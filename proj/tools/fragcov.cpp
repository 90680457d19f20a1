#include "fragcov/harness.hpp"
#include "fragcov/io.hpp"
#include "fragcov/kernels.hpp"
#include "fragcov/patch.hpp"
#include "fragcov/rng.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

using namespace fragcov;

namespace {

struct SampleSource {
    std::string input;
    std::string sidecar;
    std::optional<int> K;

    void add_to(CLI::App* cmd)
    {
        cmd->add_option("--input", input, "fragment CSV (curve_id,t,value)")->required();
        cmd->add_option("--sidecar", sidecar, "sidecar JSON (default: <input>.json when present)");
        cmd->add_option("--K", K, "estimation resolution (default: the sample's grid size)")->check(CLI::Range(2, 100000));
    }

    PatchedCovariance build() const
    {
        std::optional<std::string> side;
        if (!sidecar.empty()) side = sidecar;
        else if (std::ifstream(sidecar_path_for(input))) side = sidecar_path_for(input);
        IngestResult in = ingest_fragments(input, side);
        for (const auto& w : in.warnings) std::cerr << "warning: " << w << '\n';
        const FragmentSample& s = in.sample;
        const int res = K ? *K : s.grid ? s.grid->size() : type2_resolution(s);
        if (s.grid_type == GridType::Common && s.grid && s.grid->size() == res) return patched_regular(s, res);
        return patched_binned(s, res);
    }
};

// Widest standard band fully covered by the counts.
double covered_delta(const Eigen::MatrixXi& counts)
{
    const int K = static_cast<int>(counts.rows());
    int w = 0;
    while (w < K) {
        bool full = true;
        for (int j = 0; j + w < K && full; ++j) full = counts(j, j + w) > 0;
        if (!full) break;
        ++w;
    }
    return static_cast<double>(w + 1) / K;
}

void write_or_print(const std::string& path, const Eigen::MatrixXd& m)
{
    if (path.empty() || path == "-") write_matrix_csv(std::cout, m);
    else write_matrix_csv(path, m);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Covariance recovery from functional fragments"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "draw a fragment sample");
    std::string sim_kernel = "scenarioA:2", sim_out, sim_grid = "common";
    int sim_n = 200, sim_K = 50, sim_base = 50;
    double sim_delta = 0.5, sim_noise = 0.0;
    std::optional<double> sim_dmin, sim_dmax;
    std::uint64_t sim_seed = 1;
    bool sim_midpoints = false, sim_continuous = false;
    sim->add_option("--kernel", sim_kernel, "kernel id");
    sim->add_option("--n", sim_n, "number of curves")->check(CLI::PositiveNumber);
    sim->add_option("--K", sim_K, "common grid size")->check(CLI::Range(2, 100000));
    sim->add_option("--delta", sim_delta, "fixed fragment length");
    sim->add_option("--delta-min", sim_dmin, "variable length lower bound");
    sim->add_option("--delta-max", sim_dmax, "variable length upper bound");
    sim->add_option("--grid-type", sim_grid, "common|type1|type2");
    sim->add_option("--base-resolution", sim_base, "type-1 K / type-2 base resolution");
    sim->add_flag("--midpoints", sim_midpoints, "use cell midpoints instead of a perturbed grid");
    sim->add_flag("--continuous-start", sim_continuous, "interval starts uniform on [0, 1-delta] instead of at cell edges");
    sim->add_option("--noise", sim_noise, "measurement noise sd");
    sim->add_option("--seed", sim_seed, "master seed");
    sim->add_option("--out", sim_out, "output CSV (sidecar written next to it)")->required();

    // patch
    auto* pat = app.add_subcommand("patch", "patched covariance of a fragment sample");
    SampleSource pat_src;
    pat_src.add_to(pat);
    std::string pat_out, pat_counts;
    pat->add_option("--out", pat_out, "patched matrix CSV")->required();
    pat->add_option("--counts-out", pat_counts, "pair-count CSV")->required();

    // complete
    auto* cmp = app.add_subcommand("complete", "low-rank completion of a patched covariance");
    std::string cmp_in, cmp_counts, cmp_rank = "auto", cmp_out, cmp_scree;
    std::optional<double> cmp_dp, cmp_tau;
    std::optional<int> cmp_max_rank;
    double cmp_eps = 0.01;
    std::uint64_t cmp_seed = 0;
    bool cmp_noise = false;
    cmp->add_option("--input", cmp_in, "patched matrix CSV")->required();
    cmp->add_option("--counts", cmp_counts, "pair-count CSV");
    cmp->add_option("--delta-prime", cmp_dp, "mask bandwidth (default: widest covered band)");
    cmp->add_option("--rank", cmp_rank, "auto or a fixed rank");
    cmp->add_option("--elbow-eps", cmp_eps, "elbow threshold on normalized fits");
    cmp->add_option("--tau", cmp_tau, "penalized rank selection f(i) + tau*i");
    cmp->add_option("--max-rank", cmp_max_rank, "largest rank swept");
    cmp->add_option("--seed", cmp_seed, "solver seed");
    cmp->add_flag("--noise", cmp_noise, "drop the diagonal from the mask");
    cmp->add_option("--out", cmp_out, "completed matrix CSV (default stdout)");
    cmp->add_option("--scree-out", cmp_scree, "fits CSV rank,fit,normalized_fit");

    // run
    auto* run = app.add_subcommand("run", "replicated simulation cells");
    std::string run_table_id, run_config, run_csv;
    std::optional<std::uint64_t> run_seed;
    std::optional<int> run_reps, run_cell_index;
    bool run_elbow = false;
    double run_eps = 0.01;
    auto* table_opt = run->add_option("--table", run_table_id, "T2|T4|T5|T6|T7");
    auto* config_opt = run->add_option("--config", run_config, "JSON experiment config");
    table_opt->excludes(config_opt);
    run->add_option("--seed", run_seed, "master seed");
    run->add_option("--reps", run_reps, "replications per cell")->check(CLI::PositiveNumber);
    run->add_option("--cell", run_cell_index, "run only this cell (0-based, layout order)");
    run->add_flag("--elbow", run_elbow, "select ranks by the elbow rule");
    run->add_option("--elbow-eps", run_eps, "elbow threshold");
    run->add_option("--csv", run_csv, "results CSV (use - for stdout)");

    // scree
    auto* scr = app.add_subcommand("scree", "fit curve over ranks for a fragment sample");
    SampleSource scr_src;
    scr_src.add_to(scr);
    std::optional<double> scr_dp;
    std::optional<int> scr_max_rank;
    std::string scr_out;
    std::uint64_t scr_seed = 0;
    scr->add_option("--delta-prime", scr_dp, "mask bandwidth");
    scr->add_option("--max-rank", scr_max_rank, "largest rank swept");
    scr->add_option("--seed", scr_seed, "solver seed");
    scr->add_option("--out", scr_out, "scree CSV (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            FragmentLaw law = FragmentLaw::fixed(sim_delta);
            if (sim_dmin || sim_dmax) {
                if (!sim_dmin || !sim_dmax) throw Error("--delta-min and --delta-max go together");
                law = FragmentLaw::uniform(*sim_dmin, *sim_dmax);
            }
            if (sim_continuous) law.start = StartLaw::Continuous;
            law.validate();
            const Kernel kernel = parse_kernel(sim_kernel);
            const GridType type = parse_grid_type(sim_grid);
            FragmentSample sample;
            if (type == GridType::Common) {
                auto rng = make_stream(sim_seed, 0, Stage::Grid);
                const Grid grid = sim_midpoints ? Grid::regular_midpoints(sim_K) : Grid::perturbed(sim_K, rng);
                const Eigen::MatrixXd paths =
                    sample_gp(evaluate_on_grid(kernel, grid), sim_n, substream_seed(sim_seed, 0, Stage::Paths));
                sample = fragment(paths, grid, law, substream_seed(sim_seed, 0, Stage::Intervals));
            } else {
                IrregularOptions opts;
                opts.grid_type = type;
                opts.base_resolution = sim_base;
                opts.midpoint_grid = sim_midpoints;
                sample = fragment_irregular(kernel, sim_n, law, opts, substream_seed(sim_seed, 0, Stage::Paths));
            }
            sample = add_noise(std::move(sample), sim_noise, substream_seed(sim_seed, 0, Stage::Noise));
            write_fragments_csv(sim_out, sample);
            write_sidecar(sidecar_path_for(sim_out), sample);
        } else if (*pat) {
            const PatchedCovariance p = pat_src.build();
            write_matrix_csv(pat_out, p.matrix.entries());
            write_counts_csv(pat_counts, p.counts());
        } else if (*cmp) {
            const Eigen::MatrixXd target = read_matrix_csv(cmp_in);
            std::optional<Eigen::MatrixXi> counts;
            if (!cmp_counts.empty()) counts = read_counts_csv(cmp_counts);
            PatchedCovariance p;
            p.matrix = counts ? SymMatrix(target, *counts) : SymMatrix(target);
            p.noise_flag = cmp_noise;
            p.delta_effective = cmp_dp ? *cmp_dp : counts ? covered_delta(*counts) : 0.0;
            if (p.delta_effective <= 0.0) throw Error("--delta-prime is required without --counts");

            SolveConfig cfg;
            cfg.seed = cmp_seed;
            cfg.max_rank_sweep = cmp_max_rank;
            if (cmp_tau) cfg.rank_policy = RankPolicy::penalty(*cmp_tau);
            else if (cmp_rank == "auto") cfg.rank_policy = RankPolicy::elbow(cmp_eps);
            else cfg.rank_policy = RankPolicy::fixed(std::stoi(cmp_rank));

            CovarianceEstimate est;
            if (counts) {
                est = estimate_covariance(p, cfg, p.delta_effective);
            } else {
                const BandMask mask(target.rows(), p.delta_effective, cmp_noise);
                est = estimate_with_mask(target, mask, cfg);
            }
            if (!est.rank_threshold_met)
                std::cerr << "warning: no rank reached the elbow threshold; using the largest swept rank\n";
            if (est.trace_warning) std::cerr << "warning: completed trace exceeds the target trace\n";
            std::cerr << "rank " << est.rank << ", fit " << est.fit << '\n';
            write_or_print(cmp_out, est.matrix.entries());
            if (!cmp_scree.empty()) {
                RankSweepResult sweep;
                if (est.sweep) {
                    sweep = *est.sweep;
                } else {
                    const BandMask mask(target.rows(), p.delta_effective, cmp_noise);
                    SolveConfig sc = cfg;
                    sc.max_rank_sweep = std::max(est.rank, cfg.resolved_max_rank(mask));
                    sweep = rank_sweep(target, mask, sc);
                }
                write_scree_csv(cmp_scree, sweep);
            }
        } else if (*run) {
            std::vector<ExperimentConfig> cells;
            if (!run_table_id.empty()) {
                TableOverrides ov;
                ov.replications = run_reps;
                ov.seed = run_seed;
                ov.elbow = run_elbow;
                ov.elbow_eps = run_eps;
                cells = table_cells(parse_table_id(run_table_id), ov);
            } else if (!run_config.empty()) {
                ExperimentConfig c = config_from_json(read_text_file(run_config));
                if (run_reps) c.replications = *run_reps;
                if (run_seed) c.seed = *run_seed;
                if (run_elbow) c.rank_policy = RankPolicy::elbow(run_eps);
                cells.push_back(c);
            } else {
                throw Error("run needs --table or --config");
            }
            if (run_cell_index) {
                if (*run_cell_index < 0 || *run_cell_index >= static_cast<int>(cells.size()))
                    throw Error("--cell out of range (0.." + std::to_string(cells.size() - 1) + ")");
                cells = {cells[static_cast<std::size_t>(*run_cell_index)]};
            }
            std::vector<ExperimentResult> results;
            for (const auto& c : cells) {
                results.push_back(run_cell(c));
                const auto& r = results.back();
                std::cerr << c.display_label() << " " << c.display_column() << ": median " << r.summary.median
                          << " (" << r.wall_seconds << " s)\n";
            }
            if (run_csv == "-") {
                write_results_csv(std::cout, results);
            } else {
                std::cout << format_table(results);
                if (!run_csv.empty()) {
                    std::ofstream out(run_csv);
                    if (!out) throw Error("cannot open '" + run_csv + "' for writing");
                    write_results_csv(out, results);
                }
            }
        } else if (*scr) {
            const PatchedCovariance p = scr_src.build();
            SolveConfig cfg;
            cfg.seed = scr_seed;
            cfg.max_rank_sweep = scr_max_rank;
            const RankSweepResult sweep = scree_report(p, cfg, scr_dp);
            if (scr_out.empty() || scr_out == "-") write_scree_csv(std::cout, sweep);
            else write_scree_csv(scr_out, sweep);
        }
    } catch (const SingularMinorError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const DivergedError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
