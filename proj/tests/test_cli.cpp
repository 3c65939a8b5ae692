#include "test_support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const fs::path& log) {
    std::string cmd = std::string(PARAPOD_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json small_config() {
    return {
        {"problem", {{"kind", "kolmogorov"}, {"epsilon", 0.5}, {"dimension", 1}}},
        {"grid", {{"resolution", 16}}},
        {"time",
         {{"N", 3},
          {"T0", 0.5},
          {"slab", 0.5},
          {"fine_dt", 0.01},
          {"coarse_dt", 0.25},
          {"snapshot_stride", 5}}},
        {"parareal", {{"k_max", 3}, {"threads", 1}}},
    };
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_json(const fs::path& p, const nlohmann::json& j) {
    std::ofstream out(p);
    out << j.dump(2);
}

std::vector<std::string> csv_lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("cli run produces the standard artifacts") {
    TempDir dir("parapod-cli-run");
    write_json(dir.path / "config.json", small_config());
    fs::path out = dir.path / "out";
    int code = run_cli("run --config " + (dir.path / "config.json").string() + " --output " +
                           out.string(),
                       dir.path / "log.txt");
    REQUIRE(code == 0);
    REQUIRE(fs::exists(out / "errors.csv"));
    REQUIRE(fs::exists(out / "diagnostics.csv"));
    REQUIRE(fs::exists(out / "summary.json"));

    auto lines = csv_lines(out / "errors.csv");
    REQUIRE(!lines.empty());
    CHECK(lines[0] == "k,n,t,rel_error");
    // (k_max + 1) iterations recorded, N + 1 nodes each at minimum k=0,1
    CHECK(lines.size() >= 2u * 4u + 1u);

    auto dlines = csv_lines(out / "diagnostics.csv");
    REQUIRE(!dlines.empty());
    CHECK(dlines[0] == "k,n,t,rel_error,fg_gap,coarse_err");

    nlohmann::json summary;
    std::ifstream(out / "summary.json") >> summary;
    CHECK(summary.contains("version"));
    CHECK(summary.contains("config"));
    CHECK(summary.contains("wall_clock_seconds"));
    CHECK(summary["config"]["problem"]["epsilon"].get<double>() == 0.5);
}

TEST_CASE("cli overrides land in the config echo") {
    TempDir dir("parapod-cli-ov");
    write_json(dir.path / "config.json", small_config());
    fs::path out = dir.path / "out";
    int code = run_cli("run --config " + (dir.path / "config.json").string() + " --output " +
                           out.string() + " --mode plain --ml 0 --p 0 --k-max 2",
                       dir.path / "log.txt");
    REQUIRE(code == 0);
    nlohmann::json summary;
    std::ifstream(out / "summary.json") >> summary;
    CHECK(summary["config"]["parareal"]["mode"] == "plain");
    CHECK(summary["config"]["pod"]["ml"].get<int>() == 0);
    CHECK(summary["config"]["pod"]["p"].get<int>() == 0);
    CHECK(summary["config"]["parareal"]["k_max"].get<int>() == 2);
}

TEST_CASE("cli rejects invalid configs with exit code 2") {
    TempDir dir("parapod-cli-bad");

    SUBCASE("out-of-range energy fraction names the field") {
        nlohmann::json cfg = small_config();
        cfg["pod"]["gamma3"] = 0.0;
        write_json(dir.path / "config.json", cfg);
        int code = run_cli("run --config " + (dir.path / "config.json").string() + " --output " +
                               (dir.path / "out").string(),
                           dir.path / "log.txt");
        CHECK(code == 2);
        CHECK(slurp(dir.path / "log.txt").find("pod.gamma3") != std::string::npos);
    }

    SUBCASE("missing required key") {
        nlohmann::json cfg = small_config();
        cfg["problem"].erase("epsilon");
        write_json(dir.path / "config.json", cfg);
        int code = run_cli("run --config " + (dir.path / "config.json").string() + " --output " +
                               (dir.path / "out").string(),
                           dir.path / "log.txt");
        CHECK(code == 2);
        CHECK(slurp(dir.path / "log.txt").find("problem.epsilon") != std::string::npos);
    }

    SUBCASE("unreadable config file") {
        int code = run_cli("run --config " + (dir.path / "missing.json").string() + " --output " +
                               (dir.path / "out").string(),
                           dir.path / "log.txt");
        CHECK(code == 2);
    }
}

TEST_CASE("cli sweep aggregates cells") {
    TempDir dir("parapod-cli-sweep");
    write_json(dir.path / "config.json", small_config());
    fs::path out = dir.path / "out";
    int code = run_cli("sweep --config " + (dir.path / "config.json").string() + " --output " +
                           out.string() + " --epsilons 0.5,1.0 --threshold 1e-3",
                       dir.path / "log.txt");
    REQUIRE(code == 0);
    auto lines = csv_lines(out / "aggregate.csv");
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "cell,exit_code,iterations,final_max_error,iterations_to_threshold");
    CHECK(lines[1].rfind("eps_0.5", 0) == 0);
    const bool cell_dir_found =
        fs::exists(out / "eps_0.500000" / "errors.csv") ||
        fs::exists(out / lines[1].substr(0, lines[1].find(',')) / "errors.csv");
    CHECK(cell_dir_found);

    SUBCASE("empty axis is a config error") {
        int bad = run_cli("sweep --config " + (dir.path / "config.json").string() + " --output " +
                              (dir.path / "out2").string(),
                          dir.path / "log2.txt");
        CHECK(bad == 2);
    }
}

TEST_CASE("cli model evaluates the cost model") {
    TempDir dir("parapod-cli-model");
    nlohmann::json model = {{"C_f", 1000.0}, {"C_p1", 0.5}, {"C_p2", 20.0}, {"C_p3", 20.0},
                            {"N_g", 2097152.0}, {"N", 200.0}, {"k_max", 10.0}, {"m_max", 50.0},
                            {"n_s", 101.0}, {"n_max", 150.0}, {"slab", 5.0}, {"fine_dt", 0.01},
                            {"coarse_dt", 0.5}, {"T0", 5.0}};
    write_json(dir.path / "model.json", model);
    int code = run_cli("model --model " + (dir.path / "model.json").string(),
                       dir.path / "log.txt");
    REQUIRE(code == 0);
    nlohmann::json report = nlohmann::json::parse(slurp(dir.path / "log.txt"));
    CHECK(report["speedup_exact"].get<double>() > 1.0);
    CHECK(report["speedup_approx"].get<double>() ==
          doctest::Approx(std::min(200.0 / 10.0, 500.0 * 1000.0 / (20.0 * 50.0))).epsilon(1e-12));
    CHECK(report["cost_par"].get<double>() ==
          doctest::Approx(report["cost_par_collapsed"].get<double>()).epsilon(1e-12));
}

TEST_CASE("cli run is reproducible from the summary echo") {
    TempDir dir("parapod-cli-rt");
    write_json(dir.path / "config.json", small_config());
    fs::path out1 = dir.path / "out1";
    REQUIRE(run_cli("run --config " + (dir.path / "config.json").string() + " --output " +
                        out1.string(),
                    dir.path / "log1.txt") == 0);
    nlohmann::json summary;
    std::ifstream(out1 / "summary.json") >> summary;
    write_json(dir.path / "echo.json", summary["config"]);
    fs::path out2 = dir.path / "out2";
    REQUIRE(run_cli("run --config " + (dir.path / "echo.json").string() + " --output " +
                        out2.string(),
                    dir.path / "log2.txt") == 0);
    CHECK(slurp(out1 / "errors.csv") == slurp(out2 / "errors.csv"));
}
