#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "avgctl/cli.hpp"

namespace {

namespace fs = std::filesystem;
const std::string kScenarioDir = AVGCTL_SCENARIO_DIR;
const std::string kMalformedDir = std::string(AVGCTL_TEST_DATA_DIR) + "/malformed";

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
    std::vector<const char*> argv;
    argv.push_back("avgctl");
    for (const std::string& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = avgctl::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str() + err.str();
    return code;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("avgctl_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("check passes on a valid scenario and prints the rank") {
    std::string text;
    int code = run({"check", kScenarioDir + "/sin_flat.json"}, &text);
    CHECK(code == 0);
    CHECK(text.find("rank 1/1") != std::string::npos);
}

TEST_CASE("check fails with exit 1 on a rank-deficient scenario") {
    std::string text;
    int code = run({"check", kMalformedDir + "/rank_deficient.json"}, &text);
    CHECK(code == 1);
    CHECK(text.find("rank") != std::string::npos);
}

TEST_CASE("check exits 2 on a missing file") {
    CHECK(run({"check", kScenarioDir + "/nope.json"}) == 2);
}

TEST_CASE("track writes artifacts and passes on SIN-FLAT") {
    fs::path dir = fresh_dir("track");
    int code = run({"track", kScenarioDir + "/sin_flat.json", "--out", dir.string()});
    CHECK(code == 0);
    CHECK(fs::exists(dir / "trajectory.csv"));
    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "manifest.json"));

    auto rep = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(rep.at("pass").get<bool>());
    CHECK(rep.at("sup_error").get<double>() <= rep.at("bound_paper").get<double>());
    CHECK(rep.at("N").get<int>() == 20);
    CHECK(rep.at("intervals").size() == 20);

    auto man = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(man.at("command").get<std::string>() == "track");
    CHECK(man.at("exit_status").get<int>() == 0);
}

TEST_CASE("track sweep produces one passing run per S") {
    fs::path dir = fresh_dir("sweep");
    std::string text;
    int code = run({"track", kScenarioDir + "/sin_flat.json", "--out", dir.string(), "--sweep",
                    "0.4,0.2", "--jobs", "2"},
                   &text);
    CHECK(code == 0);
    int run_dirs = 0;
    for (auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) ++run_dirs;
    CHECK(run_dirs == 2);
}

TEST_CASE("track exits 2 when S is out of range") {
    fs::path dir = fresh_dir("track_bad_s");
    CHECK(run({"track", kScenarioDir + "/sin_flat.json", "--out", dir.string(), "--S", "3.0"}) ==
          2);
}

TEST_CASE("eps sweep keeps the epsS product fixed and passes") {
    fs::path dir = fresh_dir("eps_sweep");
    std::string text;
    int code = run({"track", kScenarioDir + "/sin_flat.json", "--out", dir.string(),
                    "--eps-sweep", "0.1,1,10", "--jobs", "2"},
                   &text);
    CHECK(code == 0);
    int passes = 0;
    for (auto& e : fs::directory_iterator(dir)) {
        if (!e.is_directory()) continue;
        auto rep = nlohmann::json::parse(slurp(e.path() / "report.json"));
        CHECK(rep.at("eps").get<double>() * rep.at("S").get<double>() ==
              doctest::Approx(0.05).epsilon(1e-12));
        if (rep.at("pass").get<bool>()) ++passes;
    }
    CHECK(passes == 3);
}

TEST_CASE("numerical failures exit 3") {
    fs::path dir = fresh_dir("steer_illcond");
    std::string text;
    int code = run({"steer", kScenarioDir + "/double_integrator.json", "--out", dir.string(),
                    "--to", "1,0", "--tau", "1e-6"},
                   &text);
    CHECK(code == 3);
    CHECK(text.find("numerical failure") != std::string::npos);
}

TEST_CASE("track output is byte-identical across reruns") {
    fs::path d1 = fresh_dir("det1");
    fs::path d2 = fresh_dir("det2");
    CHECK(run({"track", kScenarioDir + "/sin_flat.json", "--out", d1.string()}) == 0);
    CHECK(run({"track", kScenarioDir + "/sin_flat.json", "--out", d2.string()}) == 0);
    CHECK(slurp(d1 / "report.json") == slurp(d2 / "report.json"));
    CHECK(slurp(d1 / "trajectory.csv") == slurp(d2 / "trajectory.csv"));
}

TEST_CASE("trajectory CSV parses back against its own header") {
    fs::path dir = fresh_dir("csv");
    REQUIRE(run({"track", kScenarioDir + "/sin_flat.json", "--out", dir.string()}) == 0);
    std::ifstream in(dir / "trajectory.csv");
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header == "t,y_1,z_1,u_1,zref_1");
    std::size_t columns = 5;
    std::string line;
    double prev_t = -1.0;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::size_t got = 0;
        double t = 0;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            double v = std::strtod(cell.c_str(), &end);
            REQUIRE(end != cell.c_str());
            if (got == 0) t = v;
            ++got;
        }
        CHECK(got == columns);
        CHECK(t > prev_t);
        prev_t = t;
        ++rows;
    }
    CHECK(rows > 10);
}

TEST_CASE("steer demo on the double integrator") {
    fs::path dir = fresh_dir("steer");
    std::string text;
    int code = run({"steer", kScenarioDir + "/double_integrator.json", "--out", dir.string(),
                    "--to", "1,0", "--tau", "0.5"},
                   &text);
    CHECK(code == 0);
    auto rep = nlohmann::json::parse(slurp(dir / "steer_report.json"));
    CHECK(rep.at("endpoint_error").get<double>() <= 1e-6);
    CHECK(rep.at("pass").get<bool>());
}

TEST_CASE("average demo on the sine scenario") {
    fs::path dir = fresh_dir("average");
    std::string text;
    int code =
        run({"average", kScenarioDir + "/avg_sin.json", "--out", dir.string()}, &text);
    CHECK(code == 0);
    auto rep = nlohmann::json::parse(slurp(dir / "average_report.json"));
    CHECK(rep.at("error").get<double>() <= rep.at("bound").get<double>());
    CHECK(rep.at("schedule").is_array());
    CHECK(rep.at("schedule").size() >= 2);
}

TEST_CASE("optimize demo meets its budget") {
    fs::path dir = fresh_dir("optimize");
    std::string text;
    int code = run({"optimize", kScenarioDir + "/corollary_sin.json", "--out", dir.string(),
                    "--pieces", "1", "--budget", "3000"},
                   &text);
    CHECK(code == 0);
    auto rep = nlohmann::json::parse(slurp(dir / "corollary_report.json"));
    CHECK(rep.at("G_hat_star").get<double>() <= -0.999);
    CHECK(rep.at("gap").get<double>() <= rep.at("budget").get<double>());
    CHECK(text.find("gap=") != std::string::npos);
}

TEST_CASE("AVGCTL_SEED overrides the scenario seed") {
    fs::path dir = fresh_dir("seed_env");
    setenv("AVGCTL_SEED", "777", 1);
    int code = run({"track", kScenarioDir + "/sin_flat.json", "--out", dir.string()});
    unsetenv("AVGCTL_SEED");
    CHECK(code == 0);
    auto man = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(man.at("seed").get<std::uint64_t>() == 777);
}

TEST_CASE("argument errors exit 2") {
    CHECK(run({"track"}) == 2);
    CHECK(run({"unknown-subcommand", "x.json"}) == 2);
}
