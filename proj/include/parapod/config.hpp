#pragma once

#include "parapod/parareal.hpp"

#include <json.hpp>

#include <array>
#include <fstream>
#include <string>

namespace parapod {

inline constexpr const char* kVersion = "0.1.0";

namespace detail {

using nlohmann::json;

inline double require_number(const json& j, const std::string& section, const std::string& key,
                             double fallback, bool required = false) {
    if (!j.contains(key)) {
        if (required) throw ConfigError("missing required field " + section + "." + key);
        return fallback;
    }
    if (!j[key].is_number())
        throw ConfigError("field " + section + "." + key + " must be a number");
    return j[key].get<double>();
}

inline double unit_interval(const json& j, const std::string& section, const std::string& key,
                            double fallback) {
    double v = require_number(j, section, key, fallback);
    if (!(v > 0.0 && v <= 1.0))
        throw ConfigError("field " + section + "." + key + " must lie in (0,1]");
    return v;
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    using detail::require_number;
    RunConfig cfg;

    const auto problem = j.value("problem", nlohmann::json::object());
    const std::string kind = problem.value("kind", "kolmogorov");
    if (kind == "kolmogorov")
        cfg.problem.field_kind = FieldKind::Kolmogorov;
    else if (kind == "abc")
        cfg.problem.field_kind = FieldKind::ABC;
    else
        throw ConfigError("field problem.kind must be 'kolmogorov' or 'abc'");
    cfg.problem.diffusion = require_number(problem, "problem", "epsilon", 0.0, true);
    if (!(cfg.problem.diffusion > 0.0))
        throw ConfigError("field problem.epsilon must be > 0");
    cfg.problem.dimension = static_cast<int>(require_number(problem, "problem", "dimension", 3));
    cfg.problem.domain_length =
        require_number(problem, "problem", "domain_length", 2.0 * std::numbers::pi);
    cfg.problem.abc_frequency = require_number(problem, "problem", "abc_frequency", 1.0);
    cfg.problem.reaction = require_number(problem, "problem", "reaction", 0.0);

    const auto grid = j.value("grid", nlohmann::json::object());
    if (!grid.contains("resolution")) throw ConfigError("missing required field grid.resolution");
    const auto& res = grid["resolution"];
    if (res.is_number_integer()) {
        cfg.resolution.fill(res.get<int>());
    } else if (res.is_array() && !res.empty()) {
        for (size_t a = 0; a < 3; ++a)
            cfg.resolution[a] = res[std::min(a, res.size() - 1)].get<int>();
    } else {
        throw ConfigError("field grid.resolution must be an integer or an array");
    }
    const std::string scheme = grid.value("scheme", "auto");
    if (scheme == "auto")
        cfg.scheme = Scheme::Auto;
    else if (scheme == "q1")
        cfg.scheme = Scheme::Q1;
    else if (scheme == "fd")
        cfg.scheme = Scheme::FiniteDifference;
    else
        throw ConfigError("field grid.scheme must be 'auto', 'q1' or 'fd'");

    const auto time = j.value("time", nlohmann::json::object());
    cfg.time.subintervals = static_cast<int>(require_number(time, "time", "N", 0.0, true));
    cfg.time.warmup_end = require_number(time, "time", "T0", 5.0);
    double slab = require_number(time, "time", "slab", 5.0);
    if (time.contains("T"))
        cfg.time.final_time = require_number(time, "time", "T", 0.0, true);
    else
        cfg.time.final_time = cfg.time.warmup_end + cfg.time.subintervals * slab;
    cfg.time.fine_dt = require_number(time, "time", "fine_dt", 1e-2);
    cfg.time.coarse_dt = require_number(time, "time", "coarse_dt", 0.5);
    cfg.time.snapshot_stride =
        static_cast<int>(require_number(time, "time", "snapshot_stride", 5));
    cfg.problem.final_time = cfg.time.final_time;
    cfg.problem.warmup_time = cfg.time.warmup_end;

    const auto pod = j.value("pod", nlohmann::json::object());
    cfg.gamma1 = detail::unit_interval(pod, "pod", "gamma1", 1.0 - 5.0e-6);
    cfg.gamma2 = detail::unit_interval(pod, "pod", "gamma2", 1.0 - 5.0e-6);
    cfg.gamma3 = detail::unit_interval(pod, "pod", "gamma3", 1.0 - 2.0e-8);
    cfg.left_window = static_cast<int>(require_number(pod, "pod", "ml", 1));
    cfg.prev_window = static_cast<int>(require_number(pod, "pod", "p", 1));

    const auto parareal = j.value("parareal", nlohmann::json::object());
    const std::string mode = parareal.value("mode", "adaptive");
    if (mode == "adaptive")
        cfg.mode = Mode::Adaptive;
    else if (mode == "plain")
        cfg.mode = Mode::Plain;
    else
        throw ConfigError("field parareal.mode must be 'plain' or 'adaptive'");
    cfg.tol_parareal = require_number(parareal, "parareal", "tol", 1e-8);
    cfg.max_iterations = static_cast<int>(require_number(parareal, "parareal", "k_max", -1));
    cfg.workers = static_cast<int>(require_number(parareal, "parareal", "threads", 0));
    cfg.solve.tol_lin = require_number(parareal, "parareal", "tol_lin", 1e-10);

    const auto output = j.value("output", nlohmann::json::object());
    cfg.dump_bases = output.value("dump_bases", false);

    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

/// Echo of a parsed config; re-parsing it reproduces the run exactly.
inline nlohmann::json config_echo(const RunConfig& cfg) {
    nlohmann::json j;
    j["problem"] = {
        {"kind", cfg.problem.field_kind == FieldKind::ABC ? "abc" : "kolmogorov"},
        {"epsilon", cfg.problem.diffusion},
        {"dimension", cfg.problem.dimension},
        {"domain_length", cfg.problem.domain_length},
        {"abc_frequency", cfg.problem.abc_frequency},
        {"reaction", cfg.problem.reaction},
    };
    j["grid"] = {
        {"resolution", {cfg.resolution[0], cfg.resolution[1], cfg.resolution[2]}},
        {"scheme", cfg.scheme == Scheme::Q1              ? "q1"
                   : cfg.scheme == Scheme::FiniteDifference ? "fd"
                                                            : "auto"},
    };
    j["time"] = {
        {"N", cfg.time.subintervals},     {"T0", cfg.time.warmup_end},
        {"T", cfg.time.final_time},       {"fine_dt", cfg.time.fine_dt},
        {"coarse_dt", cfg.time.coarse_dt}, {"snapshot_stride", cfg.time.snapshot_stride},
    };
    j["pod"] = {
        {"gamma1", cfg.gamma1}, {"gamma2", cfg.gamma2}, {"gamma3", cfg.gamma3},
        {"ml", cfg.left_window}, {"p", cfg.prev_window},
    };
    j["parareal"] = {
        {"mode", cfg.mode == Mode::Plain ? "plain" : "adaptive"},
        {"tol", cfg.tol_parareal},
        {"k_max", cfg.max_iterations},
        {"threads", cfg.workers},
        {"tol_lin", cfg.solve.tol_lin},
    };
    j["output"] = {{"dump_bases", cfg.dump_bases}};
    return j;
}

}  // namespace parapod
