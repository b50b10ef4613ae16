#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "infheat/io.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using doctest::Approx;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

// Runs the CLI with stdout and stderr captured to a file in `dir`.
Result cli(const testing::ScratchDir& dir, const std::string& args) {
    const fs::path log = dir.path() / "cli.log";
    const std::string cmd = std::string("\"") + INFHEAT_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

std::string config(const std::string& name) { return std::string("\"") + INFHEAT_CONFIGS + "/" + name + "\""; }

std::vector<std::vector<double>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("cli exact: Barenblatt centre value") {
    testing::ScratchDir dir("cli_exact_b");
    const auto r = cli(dir, "exact --family barenblatt --h 3 --R 1 --t 1 --axis-samples 1001 --out " +
                                (dir.path() / "b.csv").string());
    REQUIRE(r.code == 0);
    const auto rows = read_csv(dir.path() / "b.csv");
    CHECK(rows.size() == 1001);
    bool found = false;
    for (const auto& row : rows)
        if (row[0] == 0.0) {
            found = true;
            CHECK(row[1] == Approx(0.25).epsilon(1e-12));
        }
    CHECK(found);
}

TEST_CASE("cli exact: giant profile table ends at Rbar") {
    testing::ScratchDir dir("cli_exact_g");
    const auto r = cli(dir, "exact --family giant --h 3 --dump-profile --out " + (dir.path() / "g.csv").string());
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "Rbar = 2.39628"));
    const auto rows = read_csv(dir.path() / "g.csv");
    REQUIRE(rows.size() >= 1024);
    CHECK(rows.back()[1] == Approx(2.396280).epsilon(1e-6));
    CHECK(rows.front()[2] == 1.0);
}

TEST_CASE("cli exact: wave front at x.nu = 1") {
    testing::ScratchDir dir("cli_exact_w");
    const auto r = cli(dir, "exact --family wave --h 2 --c 1 --t 1 --out " + (dir.path() / "w.csv").string());
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "front at x.nu = 1"));
    for (const auto& row : read_csv(dir.path() / "w.csv")) {
        if (row[0] < 1.0) CHECK(row[1] > 0.0);
        if (row[0] >= 1.0) CHECK(row[1] == 0.0);
    }
}

TEST_CASE("cli exact: invalid parameters") {
    testing::ScratchDir dir("cli_exact_bad");
    CHECK(cli(dir, "exact --family barenblatt --h 1").code == 2);
    CHECK(cli(dir, "exact --family nothing").code == 2);
    CHECK(cli(dir, "exact").code == 2);
    CHECK(cli(dir, "frobnicate").code == 2);
}

TEST_CASE("cli evolve: radial Barenblatt") {
    testing::ScratchDir dir("cli_evolve_b");
    const auto run = dir.path() / "run";
    const auto r = cli(dir, "evolve --quiet --config " + config("barenblatt_radial.ini") + " --output " + run.string());
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "final max-norm error vs exact"));
    const auto manifest = infheat::read_json(run / "manifest.json");
    CHECK(manifest.at("status") == "ok");
    CHECK(manifest.at("final_error_vs_exact").get<double>() <= 5e-3);
    CHECK(manifest.at("final_time").get<double>() == 2.0);
    CHECK(manifest.contains("config_hash"));
    CHECK(manifest.contains("wall_seconds"));
    CHECK(fs::exists(run / "config.ini"));
    CHECK(fs::exists(run / "diagnostics.csv"));
}

TEST_CASE("cli evolve: zero data give zero snapshots") {
    testing::ScratchDir dir("cli_evolve_zero");
    const auto run = dir.path() / "run";
    REQUIRE(cli(dir, "evolve --quiet --config " + config("zero.ini") + " --output " + run.string()).code == 0);
    int files = 0;
    for (const auto& e : fs::directory_iterator(run / "snapshots")) {
        if (e.path().extension() != ".bin") continue;
        ++files;
        for (double v : infheat::read_binary(e.path()).data) CHECK(v == 0.0);
    }
    CHECK(files >= 2);
}

TEST_CASE("cli evolve: Dirichlet ball h=2 decays") {
    testing::ScratchDir dir("cli_evolve_dir");
    const auto run = dir.path() / "run";
    REQUIRE(cli(dir, "evolve --quiet --config " + config("dirichlet_ball_h2.ini") +
                         " --set time.t_end=50 --set diagnostics.every=200 --output " + run.string())
                .code == 0);
    const auto rows = read_csv(run / "diagnostics.csv");
    REQUIRE(rows.size() > 10);
    for (std::size_t k = 1; k < rows.size(); ++k) {
        CHECK(rows[k][0] > rows[k - 1][0]);
        CHECK(rows[k][1] <= rows[k - 1][1]);
    }
    CHECK(rows.back()[1] < 0.1 * rows.front()[1]);
}

TEST_CASE("cli evolve: identical configs give identical files") {
    testing::ScratchDir dir("cli_evolve_det");
    for (const char* name : {"a", "b"})
        REQUIRE(cli(dir, "evolve --quiet --config " + config("barenblatt_radial.ini") + " --set grid.n=200 --output " +
                             (dir.path() / name).string())
                    .code == 0);
    int compared = 0;
    for (const auto& e : fs::directory_iterator(dir.path() / "a" / "snapshots")) {
        const auto other = dir.path() / "b" / "snapshots" / e.path().filename();
        REQUIRE(fs::exists(other));
        CHECK(slurp(e.path()) == slurp(other));
        ++compared;
    }
    CHECK(compared >= 4);
}

TEST_CASE("cli evolve: exit codes for bad configs and aborts") {
    testing::ScratchDir dir("cli_evolve_err");
    auto r = cli(dir, "evolve --config " + config("zero.ini") + " --set equation.h=1 --output " +
                          (dir.path() / "x").string());
    CHECK(r.code == 2);
    CHECK(contains(r.out, "equation.h"));
    CHECK(cli(dir, "evolve --config " + (dir.path() / "missing.ini").string()).code == 2);
    // an overflowing gradient collapses the stable step
    const auto run = dir.path() / "abort";
    r = cli(dir, "evolve --quiet --config " + config("zero.ini") +
                     " --set initial.kind=paraboloid --set initial.amplitude=1e300 --set equation.h=3 --output " +
                     run.string());
    CHECK(r.code == 3);
    CHECK(infheat::read_json(run / "manifest.json").at("status") == "aborted");
}

TEST_CASE("cli asymptotics: Cauchy decay on a radial h=3 run") {
    testing::ScratchDir dir("cli_asym_cauchy");
    const auto run = dir.path() / "run";
    REQUIRE(cli(dir, "evolve --quiet --config " + config("cauchy_h3.ini") + " --output " + run.string()).code == 0);
    const auto r = cli(dir, "asymptotics " + run.string() + " --targets cauchy-decay");
    CHECK(r.code == 0);
    CHECK(contains(r.out, "cauchy-decay: PASS"));
    CHECK(fs::exists(run / "report.csv"));
}

TEST_CASE("cli asymptotics: giant profile on a ball, h=3") {
    testing::ScratchDir dir("cli_asym_giant");
    const auto run = dir.path() / "run";
    REQUIRE(cli(dir, "evolve --quiet --config " + config("dirichlet_ball_h3.ini") +
                         " --set time.t_end=1e4 --set grid.n=200 --output " + run.string())
                .code == 0);
    const auto r = cli(dir, "asymptotics " + run.string());
    CHECK(r.code == 0);
    CHECK(contains(r.out, "giant: PASS"));
    CHECK(contains(r.out, "dirichlet-decay: PASS"));
    CHECK(!contains(r.out, "cauchy-decay"));
}

TEST_CASE("cli asymptotics: structured errors") {
    testing::ScratchDir dir("cli_asym_err");
    fs::create_directories(dir.path() / "empty");
    auto r = cli(dir, "asymptotics " + (dir.path() / "empty").string());
    CHECK(r.code == 2);
    CHECK(contains(r.out, "\"error\""));
    CHECK(contains(r.out, "manifest.json"));

    // a run too short for the fit window names what is missing
    const auto run = dir.path() / "short";
    REQUIRE(cli(dir, "evolve --quiet --config " + config("zero.ini") + " --output " + run.string()).code == 0);
    r = cli(dir, "asymptotics " + run.string() + " --targets cauchy-decay");
    CHECK(r.code == 2);
    CHECK(contains(r.out, "missing snapshots"));
    r = cli(dir, "asymptotics " + run.string() + " --targets nonsense");
    CHECK(r.code == 2);
}

TEST_CASE("cli verify") {
    testing::ScratchDir dir("cli_verify");
    auto r = cli(dir, "verify --suite operator --json " + (dir.path() / "op.json").string());
    CHECK(r.code == 0);
    const auto summary = infheat::read_json(dir.path() / "op.json");
    CHECK(summary.contains("groups"));

    r = cli(dir, "verify --quiet");
    CHECK(r.code == 0);

    r = cli(dir, "verify --suite acceptance-1 --mutate c_h");
    CHECK(r.code == 1);
    CHECK(contains(r.out, "[FAIL] barenblatt"));

    CHECK(cli(dir, "verify --suite nonsense").code == 2);
    CHECK(cli(dir, "verify --mutate nonsense").code == 2);
}
