#include "fragcov/io.hpp"
#include "fragcov/rng.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace fragcov;

namespace {

FragmentSample small_sample(std::uint64_t seed)
{
    auto rng = make_stream(seed, 0, Stage::Grid);
    const Grid g = Grid::perturbed(20, rng);
    return fragment(sample_gp(evaluate_on_grid(parse_kernel("scenarioB:2"), g), 15, seed), g, FragmentLaw::fixed(0.5), seed);
}

} // namespace

TEST_CASE("fragment CSV round trip")
{
    const FragmentSample s = small_sample(3);
    std::stringstream csv;
    write_fragments_csv(csv, s);
    const IngestResult r = ingest_fragments(csv, sidecar_json(s));
    CHECK(r.warnings.empty());
    REQUIRE(r.sample.n() == s.n());
    for (int i = 0; i < s.n(); ++i) {
        const auto& a = s.curves[static_cast<std::size_t>(i)];
        const auto& b = r.sample.curves[static_cast<std::size_t>(i)];
        CHECK(a.times == b.times);
        CHECK(a.values == b.values);
        CHECK(a.grid_index == b.grid_index);
        CHECK(s.intervals[static_cast<std::size_t>(i)].start == r.sample.intervals[static_cast<std::size_t>(i)].start);
    }
    REQUIRE(r.sample.grid);
    CHECK(r.sample.grid->points() == s.grid->points());
}

TEST_CASE("ingest normalizes and validates")
{
    std::stringstream in("curve_id,t,value\n1,0.5,2\n2,0.3,1\n1,0.1,4\n3,0.2,5\n1,0.3,3\n");
    const IngestResult r = ingest_fragments(in);
    REQUIRE(r.sample.n() == 1);
    REQUIRE(r.warnings.size() == 2);
    CHECK(r.warnings[0].find("curve 2") != std::string::npos);
    CHECK(r.sample.curves[0].times == std::vector<double>{0.1, 0.3, 0.5});
    CHECK(r.sample.curves[0].values == std::vector<double>{4, 3, 2});
    CHECK(r.sample.intervals[0].start == 0.1);
    CHECK(r.sample.intervals[0].delta == doctest::Approx(0.4));

    std::stringstream bad_num("curve_id,t,value\n1,0.1,1\n1,abc,2\n");
    CHECK_THROWS_WITH_AS(ingest_fragments(bad_num), "line 3: malformed number 'abc'", Error);
    std::stringstream bad_range("curve_id,t,value\n1,1.5,1\n");
    CHECK_THROWS_WITH_AS(ingest_fragments(bad_range), "line 2: t outside [0,1]", Error);
    std::stringstream bad_fields("curve_id,t,value\n1,0.2\n");
    CHECK_THROWS_WITH_AS(ingest_fragments(bad_fields), "line 2: expected 3 fields", Error);
    std::stringstream bad_header("id,t,value\n");
    CHECK_THROWS_AS(ingest_fragments(bad_header), Error);
}

TEST_CASE("grid type heuristic without a sidecar")
{
    std::stringstream shared("curve_id,t,value\n1,0.1,1\n1,0.2,2\n2,0.1,3\n2,0.2,4\n3,0.1,1\n3,0.2,0\n");
    CHECK(ingest_fragments(shared).sample.grid_type == GridType::Common);
    std::stringstream scattered("curve_id,t,value\n1,0.11,1\n1,0.21,2\n2,0.12,3\n2,0.22,4\n");
    CHECK(ingest_fragments(scattered).sample.grid_type == GridType::Type2);
}

TEST_CASE("matrix and scree files")
{
    const auto dir = std::filesystem::temp_directory_path() / "fragcov_io_test";
    std::filesystem::create_directories(dir);
    Eigen::MatrixXd m(2, 3);
    m << 1.0 / 3, -2, 1e-17, 4, 5.5, 6;
    const auto path = (dir / "m.csv").string();
    write_matrix_csv(path, m);
    CHECK(read_matrix_csv(path) == m);

    Eigen::MatrixXi c(2, 2);
    c << 3, 0, 0, 7;
    write_counts_csv((dir / "c.csv").string(), c);
    CHECK(read_counts_csv((dir / "c.csv").string()) == c);
    write_matrix_csv((dir / "bad.csv").string(), Eigen::MatrixXd::Constant(1, 1, 0.5));
    CHECK_THROWS_AS(read_counts_csv((dir / "bad.csv").string()), Error);

    RankSweepResult sweep;
    sweep.fits = {0.5, 0.25};
    sweep.normalized_fits = {1.0, 0.5};
    std::stringstream out;
    write_scree_csv(out, sweep);
    CHECK(out.str() == "rank,fit,normalized_fit\n1,0.5,1\n2,0.25,0.5\n");

    CHECK(sidecar_path_for("a/b.csv") == "a/b.json");
    CHECK(sidecar_path_for("x.dat") == "x.dat.json");
    std::filesystem::remove_all(dir);
}
