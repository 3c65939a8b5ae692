#pragma once

#include "parapod/analysis.hpp"
#include "parapod/config.hpp"
#include "parapod/parareal.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace parapod {

namespace detail {

inline std::string sci(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.15e", v);
    return buf;
}

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

}  // namespace detail

inline void write_errors_csv(const std::filesystem::path& path, const ErrorCurve& curve) {
    std::ofstream out(path);
    out << "k,n,t,rel_error\n";
    for (const auto& e : curve.entries)
        out << e.k << ',' << e.n << ',' << detail::num(e.t) << ',' << detail::sci(e.rel_error)
            << '\n';
}

inline void write_diagnostics_csv(const std::filesystem::path& path, const ErrorCurve& curve) {
    std::ofstream out(path);
    out << "k,n,t,rel_error,fg_gap,coarse_err\n";
    for (const auto& e : curve.entries) {
        if (!std::isfinite(e.fg_gap)) continue;
        out << e.k << ',' << e.n << ',' << detail::num(e.t) << ',' << detail::sci(e.rel_error)
            << ',' << detail::sci(e.fg_gap) << ',' << detail::sci(e.coarse_err) << '\n';
    }
}

/// Run manifest: config echo, version, per-phase wall clock, per-iteration
/// POD dimensions, stopping reason, output inventory.
inline nlohmann::json run_summary(const RunConfig& cfg, const PararealRun& run,
                                  const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["version"] = kVersion;
    j["config"] = config_echo(cfg);
    j["stop_reason"] = run.stop_reason;
    j["iterations"] = run.iteration;
    j["warm_snapshot_count"] = run.warm_snapshot_count;
    j["warm_basis_dim"] = run.warm_basis.dim();
    for (const auto& [phase, seconds] : run.phase_seconds) j["wall_clock_seconds"][phase] = seconds;
    nlohmann::json dims = nlohmann::json::array();
    for (const auto& rec : run.history) dims.push_back(rec.pod_dims);
    j["pod_dimensions"] = dims;
    nlohmann::json incs = nlohmann::json::array();
    for (const auto& rec : run.history) incs.push_back(rec.increment);
    j["iterate_increments"] = incs;
    j["outputs"] = outputs;
    return j;
}

inline void write_summary(const std::filesystem::path& path, const nlohmann::json& summary) {
    std::ofstream out(path);
    out << summary.dump(2) << '\n';
}

}  // namespace parapod
