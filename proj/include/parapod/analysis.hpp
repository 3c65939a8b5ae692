#pragma once

#include "parapod/parareal.hpp"
#include "parapod/types.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <limits>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace parapod {

/// Relative discrete-L2 error ||U - Uref||_M / ||Uref||_M.
inline double relative_error(const Vector& u, const Vector& u_ref, const SparseMatrix& mass) {
    const double ref_norm = mass_norm(mass, u_ref);
    if (ref_norm == 0.0) throw DataError("relative_error: reference has zero norm");
    return mass_norm(mass, u - u_ref) / ref_norm;
}

namespace detail {

inline std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string config_cache_key(const RunConfig& cfg) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "kind=%d dim=%d eps=%.17g L=%.17g w=%.17g c=%.17g res=%d,%d,%d scheme=%d "
                  "T0=%.17g T=%.17g N=%d dt=%.17g tol=%.17g",
                  static_cast<int>(cfg.problem.field_kind), cfg.problem.dimension,
                  cfg.problem.diffusion, cfg.problem.domain_length, cfg.problem.abc_frequency,
                  cfg.problem.reaction, cfg.resolution[0], cfg.resolution[1], cfg.resolution[2],
                  static_cast<int>(resolve_scheme(cfg.scheme, cfg.problem.dimension)),
                  cfg.time.warmup_end, cfg.time.final_time, cfg.time.subintervals,
                  cfg.time.fine_dt, cfg.solve.tol_lin);
    return buf;
}

inline std::filesystem::path cache_dir() {
    if (const char* env = std::getenv("PARAPOD_CACHE_DIR")) return env;
    return std::filesystem::temp_directory_path() / "parapod-cache";
}

inline bool read_trajectory(const std::filesystem::path& path, Index n_dof, int count,
                            std::vector<Vector>& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    char magic[4];
    std::uint64_t file_count, file_dof;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&file_count), sizeof(file_count));
    in.read(reinterpret_cast<char*>(&file_dof), sizeof(file_dof));
    if (!in || std::string(magic, 4) != "PREF" || file_count != std::uint64_t(count) ||
        file_dof != std::uint64_t(n_dof))
        return false;
    out.assign(count, Vector(n_dof));
    for (auto& v : out)
        in.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(sizeof(double) * n_dof));
    return bool(in);
}

inline void write_trajectory(const std::filesystem::path& path, const std::vector<Vector>& traj) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out.write("PREF", 4);
    const std::uint64_t count = traj.size();
    const std::uint64_t n_dof = traj.empty() ? 0 : std::uint64_t(traj.front().size());
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(&n_dof), sizeof(n_dof));
    for (const auto& v : traj)
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(sizeof(double) * v.size()));
}

}  // namespace detail

/// Sequential fine propagation over [0, T] from the exact initial value,
/// recording the states at every subinterval node t_n. Cached on disk keyed
/// by a config hash (PARAPOD_CACHE_DIR overrides the cache location).
inline std::vector<Vector> reference_trajectory(const DiscreteSystem& sys, const RunConfig& cfg,
                                                bool use_cache = true) {
    const int N = cfg.time.subintervals;
    char name[32];
    std::snprintf(name, sizeof(name), "ref-%016" PRIx64 ".bin",
                  detail::fnv1a(detail::config_cache_key(cfg)));
    const auto path = detail::cache_dir() / name;
    std::vector<Vector> traj;
    if (use_cache && detail::read_trajectory(path, sys.n_dof, N + 1, traj)) return traj;

    traj.assign(N + 1, Vector());
    Vector u = interpolate(sys, cfg.problem.initial_condition);
    if (cfg.time.warmup_end > 0.0)
        u = fine_propagate(sys, 0.0, cfg.time.warmup_end, u, cfg.time.fine_dt,
                           cfg.time.snapshot_stride, cfg.solve)
                .first;
    traj[0] = u;
    for (int n = 0; n < N; ++n) {
        u = fine_propagate(sys, cfg.time.node(n), cfg.time.node(n + 1), u, cfg.time.fine_dt,
                           cfg.time.snapshot_stride, cfg.solve)
                .first;
        traj[n + 1] = u;
    }
    if (use_cache) detail::write_trajectory(path, traj);
    return traj;
}

/// Per-(iteration, subinterval) error and coarse-accuracy diagnostics.
/// fg_gap and coarse_err are NaN where the run recorded no coarse terms
/// (iteration 0, and subintervals already exact).
struct ErrorEntry {
    int k = 0;
    int n = 0;
    double t = 0.0;
    double rel_error = 0.0;
    double fg_gap = std::numeric_limits<double>::quiet_NaN();
    double coarse_err = std::numeric_limits<double>::quiet_NaN();
};

struct ErrorCurve {
    std::vector<ErrorEntry> entries;

    const ErrorEntry& at(int k, int n) const {
        for (const auto& e : entries)
            if (e.k == k && e.n == n) return e;
        throw DataError("ErrorCurve: no entry for (k,n)");
    }
};

inline ErrorCurve error_curves(const PararealRun& run, const RunConfig& cfg,
                               const std::vector<Vector>& reference,
                               const SparseMatrix& mass) {
    ErrorCurve curve;
    for (size_t k = 0; k < run.history.size(); ++k) {
        const auto& rec = run.history[k];
        for (size_t n = 0; n < rec.states.size(); ++n) {
            ErrorEntry e;
            e.k = static_cast<int>(k);
            e.n = static_cast<int>(n);
            e.t = cfg.time.node(static_cast<int>(n));
            e.rel_error = relative_error(rec.states[n], reference[n], mass);
            // Coarse terms for subinterval n-1 land at node n.
            if (n >= 1 && n - 1 < rec.coarse_old.size() && rec.coarse_old[n - 1].size() > 0) {
                const Vector& fine = rec.fine_end[n - 1];
                const double fine_norm = mass_norm(mass, fine);
                if (fine_norm > 0.0)
                    e.fg_gap = mass_norm(mass, fine - rec.coarse_old[n - 1]) / fine_norm;
                const double ref_norm = mass_norm(mass, reference[n]);
                if (ref_norm > 0.0)
                    e.coarse_err =
                        mass_norm(mass, reference[n] - rec.coarse_new[n - 1]) / ref_norm;
            }
            curve.entries.push_back(e);
        }
    }
    return curve;
}

/// Requires a run that actually cached coarse terms (any k >= 1 iteration).
inline ErrorCurve coarse_accuracy_diagnostics(const PararealRun& run, const RunConfig& cfg,
                                              const std::vector<Vector>& reference,
                                              const SparseMatrix& mass) {
    bool have_coarse = false;
    for (const auto& rec : run.history)
        for (const auto& g : rec.coarse_old)
            if (g.size() > 0) have_coarse = true;
    if (!have_coarse)
        throw DataError("coarse_accuracy_diagnostics: run recorded no coarse terms");
    return error_curves(run, cfg, reference, mass);
}

/// Cost/speed-up model constants and run shape.
struct CostModel {
    double c_f = 1000.0;  // fine step cost per dof
    double c_p1 = 0.5;    // reduced dense solve, times m_max^3
    double c_p2 = 20.0;   // snapshot eigenproblem, times n^2 N_g
    double c_p3 = 20.0;   // reduced-system projection, times m^2 N_g
    double n_g = 2097152;
    double subintervals = 200;  // N
    double k_max = 10;
    double m_max = 50;
    double n_s = 101;
    double n_max = 150;
    double slab = 5.0;      // Delta T
    double fine_dt = 1e-2;  // delta t
    double coarse_dt = 0.5; // dT
    double warmup = 5.0;    // T0
};

struct SpeedupReport {
    double tau_fine = 0.0;
    double tau_coarse = 0.0;
    double update_cost_iter0 = 0.0;  // T_U, 0-th iteration form
    double update_cost = 0.0;        // T_U, k >= 1 form
    double augment_cost = 0.0;       // T_A
    double cost_seq = 0.0;
    double cost_par = 0.0;            // explicit k-sum
    double cost_par_collapsed = 0.0;  // closed form of the same sum
    double cost_par_dominant = 0.0;   // fine-sweep + augmentation terms only
    double speedup_exact = 0.0;
    double speedup_approx = 0.0;  // min(N/k_max, (slab/dt) C_f / (C_p3 m_max))
};

inline SpeedupReport speedup_model(const CostModel& cm) {
    SpeedupReport r;
    const double fine_steps = cm.slab / cm.fine_dt;
    const double coarse_steps = cm.slab / cm.coarse_dt;
    const double warm_steps = cm.warmup / cm.fine_dt;
    const double N = cm.subintervals, k_max = cm.k_max;

    r.tau_fine = cm.c_f * cm.n_g;
    r.tau_coarse = cm.c_p1 * cm.m_max * cm.m_max * cm.m_max;
    r.update_cost_iter0 = cm.c_p2 * cm.n_s * cm.n_s * cm.n_g +
                          cm.c_p3 * cm.m_max * cm.m_max * cm.n_g;
    r.update_cost = cm.c_p2 * (cm.n_s * cm.n_s + cm.n_max * cm.n_max) * cm.n_g +
                    cm.c_p3 * cm.m_max * cm.m_max * cm.n_g;
    r.augment_cost = cm.c_p3 * cm.m_max * cm.n_g;

    r.cost_seq = (N * fine_steps + warm_steps) * r.tau_fine;

    const double head = warm_steps * r.tau_fine + r.update_cost_iter0 + N * coarse_steps * r.tau_coarse;
    double sum = head;
    for (double k = 1; k <= k_max; ++k)
        sum += fine_steps * r.tau_fine + r.update_cost +
               (N - k) * (r.augment_cost + coarse_steps * r.tau_coarse);
    r.cost_par = sum;
    r.cost_par_collapsed =
        head + k_max * (fine_steps * r.tau_fine + r.update_cost +
                        (N - (k_max + 1.0) / 2.0) * (r.augment_cost + coarse_steps * r.tau_coarse));
    r.cost_par_dominant =
        (warm_steps * cm.c_f +
         k_max * (fine_steps * cm.c_f + cm.c_p3 * cm.m_max * (N - (k_max + 1.0) / 2.0))) *
        cm.n_g;
    r.speedup_exact = r.cost_seq / r.cost_par;
    r.speedup_approx = std::min(N / k_max, fine_steps * cm.c_f / (cm.c_p3 * cm.m_max));
    return r;
}

}  // namespace parapod
