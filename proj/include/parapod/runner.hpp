#pragma once

#include "parapod/analysis.hpp"
#include "parapod/config.hpp"
#include "parapod/report.hpp"

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

namespace parapod {

inline constexpr int kExitOk = 0;
inline constexpr int kExitSolverFailure = 1;
inline constexpr int kExitConfigError = 2;

struct RunResult {
    int exit_code = kExitOk;
    std::string message;
    double final_max_error = -1.0;           // max over n of the last iteration's rel error
    std::vector<double> max_error_per_iter;  // max over n, per k
    int iterations = 0;
};

/// Executes warmup -> iteration 0 -> correction loop -> analysis and writes
/// errors.csv, diagnostics.csv and summary.json into output_dir.
inline RunResult execute_run(const RunConfig& cfg, const std::filesystem::path& output_dir) {
    RunResult result;
    try {
        cfg.validate();
        std::filesystem::create_directories(output_dir);
        DiscreteSystem sys = build_grid(cfg.problem, cfg.resolution, cfg.scheme);
        PararealRun run = run_parareal(sys, cfg);
        std::vector<Vector> reference = reference_trajectory(sys, cfg);
        ErrorCurve curve = error_curves(run, cfg, reference, sys.mass);

        for (size_t k = 0; k < run.history.size(); ++k) {
            double worst = 0.0;
            for (const auto& e : curve.entries)
                if (e.k == static_cast<int>(k)) worst = std::max(worst, e.rel_error);
            result.max_error_per_iter.push_back(worst);
        }
        result.final_max_error = result.max_error_per_iter.back();
        result.iterations = run.iteration;

        std::vector<std::string> outputs = {"errors.csv", "diagnostics.csv", "summary.json"};
        write_errors_csv(output_dir / "errors.csv", curve);
        write_diagnostics_csv(output_dir / "diagnostics.csv", curve);
        if (cfg.dump_bases) {
            write_basis((output_dir / "basis_warm.podb").string(), run.warm_basis);
            outputs.push_back("basis_warm.podb");
        }
        write_summary(output_dir / "summary.json", run_summary(cfg, run, outputs));
        result.message = run.stop_reason;
    } catch (const ConfigError& e) {
        result.exit_code = kExitConfigError;
        result.message = e.what();
    } catch (const std::exception& e) {
        result.exit_code = kExitSolverFailure;
        result.message = e.what();
    }
    return result;
}

struct SweepCell {
    std::string label;
    RunConfig cfg;
};

/// One run per grid point into a subdirectory, plus aggregate.csv reporting
/// iterations needed to reach the threshold (or -1 when never reached).
inline int execute_sweep(const std::vector<SweepCell>& cells,
                         const std::filesystem::path& output_dir, double threshold = 1e-3) {
    if (cells.empty()) return kExitConfigError;
    std::filesystem::create_directories(output_dir);
    std::ofstream agg(output_dir / "aggregate.csv");
    agg << "cell,exit_code,iterations,final_max_error,iterations_to_threshold\n";
    int exit_code = kExitOk;
    for (const auto& cell : cells) {
        RunResult r = execute_run(cell.cfg, output_dir / cell.label);
        int to_threshold = -1;
        for (size_t k = 0; k < r.max_error_per_iter.size(); ++k)
            if (r.max_error_per_iter[k] <= threshold) {
                to_threshold = static_cast<int>(k);
                break;
            }
        agg << cell.label << ',' << r.exit_code << ',' << r.iterations << ','
            << detail::sci(r.final_max_error) << ',' << to_threshold << '\n';
        if (r.exit_code != kExitOk) exit_code = r.exit_code;
    }
    return exit_code;
}

}  // namespace parapod
