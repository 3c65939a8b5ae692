// Command-line front end: single runs, parameter sweeps and speed-up model
// evaluation for the adaptive-parareal solver library.

#include "parapod/parapod.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using parapod::RunConfig;

struct Overrides {
    std::optional<std::string> mode;
    std::optional<int> ml, p, threads, k_max;
    std::optional<double> epsilon, coarse_dt;

    void apply(RunConfig& cfg) const {
        if (mode) {
            if (*mode == "plain")
                cfg.mode = parapod::Mode::Plain;
            else if (*mode == "adaptive")
                cfg.mode = parapod::Mode::Adaptive;
            else
                throw parapod::ConfigError("--mode must be 'plain' or 'adaptive'");
        }
        if (ml) cfg.left_window = *ml;
        if (p) cfg.prev_window = *p;
        if (threads) cfg.workers = *threads;
        if (k_max) cfg.max_iterations = *k_max;
        if (epsilon) cfg.problem.diffusion = *epsilon;
        if (coarse_dt) cfg.time.coarse_dt = *coarse_dt;
        cfg.validate();
    }
};

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

// "ml:p" pairs, e.g. "0:0,1:0,0:1,1:1"
std::vector<std::pair<int, int>> parse_window_list(const std::string& csv) {
    std::vector<std::pair<int, int>> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto colon = item.find(':');
        if (colon == std::string::npos)
            throw parapod::ConfigError("--windows expects ml:p pairs, got '" + item + "'");
        out.emplace_back(std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1)));
    }
    return out;
}

parapod::CostModel cost_model_from_json(const nlohmann::json& j) {
    parapod::CostModel cm;
    cm.c_f = j.value("C_f", cm.c_f);
    cm.c_p1 = j.value("C_p1", cm.c_p1);
    cm.c_p2 = j.value("C_p2", cm.c_p2);
    cm.c_p3 = j.value("C_p3", cm.c_p3);
    cm.n_g = j.value("N_g", cm.n_g);
    cm.subintervals = j.value("N", cm.subintervals);
    cm.k_max = j.value("k_max", cm.k_max);
    cm.m_max = j.value("m_max", cm.m_max);
    cm.n_s = j.value("n_s", cm.n_s);
    cm.n_max = j.value("n_max", cm.n_max);
    cm.slab = j.value("slab", cm.slab);
    cm.fine_dt = j.value("fine_dt", cm.fine_dt);
    cm.coarse_dt = j.value("coarse_dt", cm.coarse_dt);
    cm.warmup = j.value("T0", cm.warmup);
    return cm;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive parareal solver for advection-diffusion problems"};
    app.require_subcommand(1);

    std::string config_path, output_dir = "out";
    Overrides ov;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file")->required();
        cmd->add_option("--output", output_dir, "Output directory");
        cmd->add_option("--mode", ov.mode, "plain or adaptive");
        cmd->add_option("--ml", ov.ml, "Left-neighbor window count");
        cmd->add_option("--p", ov.p, "Previous-iteration window count");
        cmd->add_option("--threads", ov.threads, "Worker count (0 = hardware)");
        cmd->add_option("--k-max", ov.k_max, "Iteration cap");
        cmd->add_option("--epsilon", ov.epsilon, "Diffusion coefficient override");
        cmd->add_option("--coarse-dt", ov.coarse_dt, "Coarse step override");
    };

    auto* run_cmd = app.add_subcommand("run", "Execute a single parareal run");
    add_common(run_cmd);

    auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep");
    add_common(sweep_cmd);
    std::string epsilon_list, window_list;
    double threshold = 1e-3;
    sweep_cmd->add_option("--epsilons", epsilon_list, "Comma-separated epsilon values");
    sweep_cmd->add_option("--windows", window_list, "Comma-separated ml:p pairs");
    sweep_cmd->add_option("--threshold", threshold, "Error threshold for the aggregate table");

    auto* model_cmd = app.add_subcommand("model", "Evaluate the speed-up cost model");
    std::string model_path;
    model_cmd->add_option("--model", model_path, "CostModel JSON file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (model_cmd->parsed()) {
            std::ifstream in(model_path);
            if (!in) throw parapod::ConfigError("cannot open model file " + model_path);
            nlohmann::json j;
            in >> j;
            auto report = parapod::speedup_model(cost_model_from_json(j));
            nlohmann::json out = {
                {"tau_fine", report.tau_fine},
                {"tau_coarse", report.tau_coarse},
                {"cost_seq", report.cost_seq},
                {"cost_par", report.cost_par},
                {"cost_par_collapsed", report.cost_par_collapsed},
                {"cost_par_dominant", report.cost_par_dominant},
                {"speedup_exact", report.speedup_exact},
                {"speedup_approx", report.speedup_approx},
            };
            std::cout << out.dump(2) << std::endl;
            return parapod::kExitOk;
        }

        RunConfig cfg = parapod::load_config(config_path);
        ov.apply(cfg);

        if (run_cmd->parsed()) {
            auto result = parapod::execute_run(cfg, output_dir);
            if (result.exit_code == parapod::kExitOk)
                std::cout << "run finished: " << result.message
                          << ", final max error " << result.final_max_error << std::endl;
            else
                std::cerr << "run failed: " << result.message << std::endl;
            return result.exit_code;
        }

        // sweep
        std::vector<parapod::SweepCell> cells;
        for (double eps : parse_double_list(epsilon_list)) {
            parapod::SweepCell cell{"eps_" + std::to_string(eps), cfg};
            cell.cfg.problem.diffusion = eps;
            cells.push_back(std::move(cell));
        }
        if (!window_list.empty())
            for (auto [ml, p] : parse_window_list(window_list)) {
                parapod::SweepCell cell{"ml" + std::to_string(ml) + "_p" + std::to_string(p),
                                        cfg};
                cell.cfg.left_window = ml;
                cell.cfg.prev_window = p;
                cells.push_back(std::move(cell));
            }
        if (cells.empty()) {
            std::cerr << "sweep: empty axis (provide --epsilons and/or --windows)" << std::endl;
            return parapod::kExitConfigError;
        }
        return parapod::execute_sweep(cells, output_dir, threshold);
    } catch (const parapod::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << std::endl;
        return parapod::kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return parapod::kExitSolverFailure;
    }
}
