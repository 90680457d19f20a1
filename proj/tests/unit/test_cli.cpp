#include "fragcov/io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args)
{
    const std::string cmd = std::string(FRAGCOV_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("command line pipeline")
{
    const fs::path dir = fs::temp_directory_path() / "fragcov_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string d = dir.string() + "/";

    REQUIRE(run("simulate --kernel scenarioA:2 --n 150 --K 30 --delta 0.6 --seed 3 --out " + d + "s.csv") == 0);
    CHECK(fs::exists(dir / "s.json"));
    REQUIRE(run("patch --input " + d + "s.csv --out " + d + "p.csv --counts-out " + d + "c.csv") == 0);
    const Eigen::MatrixXd p = fragcov::read_matrix_csv(d + "p.csv");
    CHECK(p.rows() == 30);

    REQUIRE(run("complete --input " + d + "p.csv --counts " + d + "c.csv --delta-prime 0.5 --rank auto --max-rank 5 --out " + d +
                "r.csv --scree-out " + d + "f.csv") == 0);
    CHECK(fragcov::read_matrix_csv(d + "r.csv").rows() == 30);
    CHECK(slurp(dir / "f.csv").rfind("rank,fit,normalized_fit\n", 0) == 0);
    CHECK(run("complete --input " + d + "p.csv --rank 2 --delta-prime 0.5 --out " + d + "r2.csv") == 0);

    CHECK(run("scree --input " + d + "s.csv --max-rank 4 --out " + d + "scree.csv") == 0);
    std::istringstream scree(slurp(dir / "scree.csv"));
    int lines = 0;
    for (std::string l; std::getline(scree, l);) ++lines;
    CHECK(lines == 5);

    CHECK(run("simulate --kernel scenarioB:1 --n 40 --delta-min 0.4 --delta-max 0.6 --grid-type type2 --noise 1 --out " + d + "t2.csv") == 0);
    CHECK(run("patch --input " + d + "t2.csv --K 20 --out " + d + "t2p.csv --counts-out " + d + "t2c.csv") == 0);

    std::ofstream(dir / "cfg.json") << R"({"kernel":"scenarioA:1","n":200,"K":20,"delta":0.7,"rank":1,"replications":2,"seed":4})";
    CHECK(run("run --config " + d + "cfg.json --csv " + d + "cfg_out.csv") == 0);
    CHECK(slurp(dir / "cfg_out.csv").find("\nA,1,0.7,0.7,200,20,common,0,") != std::string::npos);

    CHECK(run("complete --input " + d + "missing.csv") == 1);
    CHECK(run("run --table T9") != 0);
    fs::remove_all(dir);
}

TEST_CASE("divergence exit code")
{
    const fs::path dir = fs::temp_directory_path() / "fragcov_cli_exit";
    fs::create_directories(dir);
    fragcov::write_matrix_csv((dir / "huge.csv").string(), Eigen::MatrixXd::Constant(10, 10, 1e300));
    CHECK(run("complete --input " + (dir / "huge.csv").string() + " --delta-prime 0.5 --rank 1") == 2);
    CHECK(run("complete --input " + (dir / "huge.csv").string() + " --rank nan") != 0);
    fs::remove_all(dir);
}
