#pragma once

#include "parapod/discretization.hpp"
#include "parapod/pod.hpp"
#include "parapod/propagators.hpp"
#include "parapod/types.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <map>
#include <string>
#include <thread>
#include <vector>

namespace parapod {

/// Uniform partition of [T0, T] into N subintervals with fine step, coarse
/// step and snapshot stride. All step ratios must be integral.
struct TimePartition {
    double warmup_end = 5.0;   // T0
    double final_time = 10.0;  // T
    int subintervals = 1;      // N
    double fine_dt = 1e-2;
    double coarse_dt = 0.5;
    int snapshot_stride = 5;

    double slab() const { return (final_time - warmup_end) / subintervals; }
    double node(int n) const { return warmup_end + n * slab(); }

    void validate() const {
        if (subintervals < 1) throw ConfigError("subintervals must be >= 1");
        if (!(final_time > warmup_end)) throw ConfigError("T must exceed T0");
        if (snapshot_stride < 1) throw ConfigError("snapshot stride must be >= 1");
        integral_step_count(slab(), fine_dt, "TimePartition (slab/fine_dt)");
        integral_step_count(slab(), coarse_dt, "TimePartition (slab/coarse_dt)");
        if (warmup_end > 0.0) integral_step_count(warmup_end, fine_dt, "TimePartition (T0/fine_dt)");
    }
};

enum class Mode { Plain, Adaptive };

struct RunConfig {
    ProblemSpec problem;
    std::array<int, 3> resolution{32, 32, 32};
    Scheme scheme = Scheme::Auto;
    TimePartition time;
    double gamma1 = 1.0 - 5.0e-6;
    double gamma2 = 1.0 - 5.0e-6;
    double gamma3 = 1.0 - 2.0e-8;
    int left_window = 1;  // m_l
    int prev_window = 1;  // p
    Mode mode = Mode::Adaptive;
    double tol_parareal = 1e-8;
    int max_iterations = -1;  // k_max; -1 means N
    int workers = 0;          // 0 means hardware concurrency
    SolveOptions solve;
    bool dump_bases = false;

    int effective_k_max() const {
        return max_iterations > 0 ? max_iterations : time.subintervals;
    }
    int effective_workers() const {
        if (workers > 0) return workers;
        unsigned hw = std::thread::hardware_concurrency();
        return hw > 0 ? static_cast<int>(hw) : 1;
    }

    void validate() const {
        problem.validate();
        time.validate();
        for (double g : {gamma1, gamma2, gamma3})
            if (!(g > 0.0 && g <= 1.0)) throw ConfigError("energy fractions must be in (0,1]");
        if (left_window < 0 || prev_window < 0)
            throw ConfigError("window counts m_l, p must be >= 0");
        if (time.warmup_end != problem.warmup_time || time.final_time != problem.final_time)
            throw ConfigError("TimePartition and ProblemSpec disagree on T0/T");
    }
};

/// Per-iteration record: iterates, cached fine results and the two lifted
/// coarse terms (kept for the coarse-accuracy diagnostics), POD dimensions.
struct IterationRecord {
    std::vector<Vector> states;      // U_n^k, n = 0..N
    std::vector<Vector> fine_end;    // F(t_n, t_{n+1}, U_n^{k-1}), n = 0..N-1
    std::vector<Vector> coarse_new;  // lifted G_k(P U_n^k)
    std::vector<Vector> coarse_old;  // lifted G_k(P U_n^{k-1})
    std::vector<int> pod_dims;       // dimension used on subinterval n
    double increment = -1.0;         // max_n ||U^k - U^{k-1}||_M / ||U^k||_M
};

struct PararealRun {
    Vector initial_state;  // u_hat0, the fine solution at T0
    PodBasis warm_basis;
    int warm_snapshot_count = 0;
    int iteration = 0;  // last completed k
    BasisStore store;
    std::vector<IterationRecord> history;  // index k
    std::map<std::string, double> phase_seconds;
    std::string stop_reason;

    const std::vector<Vector>& iterates(int k) const { return history.at(k).states; }
    const std::vector<Vector>& latest() const { return history.back().states; }
};

namespace detail {

/// Static round-robin dispatch; every index runs in isolation so results do
/// not depend on the worker count.
template <typename F>
void parallel_for(int begin, int end, int workers, const char* phase, F&& body) {
    const int count = end - begin;
    if (count <= 0) return;
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (int i = begin; i < end; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&, w]() {
            try {
                for (int i = begin + w; i < end; i += workers) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) {
            try {
                std::rethrow_exception(e);
            } catch (const std::exception& ex) {
                throw SolverError(std::string("worker failure in phase ") + phase + ": " +
                                      ex.what(),
                                  0.0);
            }
        }
}

class PhaseTimer {
public:
    PhaseTimer(PararealRun& run, const std::string& phase)
        : run_(run), phase_(phase), start_(std::chrono::steady_clock::now()) {}
    ~PhaseTimer() {
        auto elapsed = std::chrono::steady_clock::now() - start_;
        run_.phase_seconds[phase_] +=
            std::chrono::duration_cast<std::chrono::duration<double>>(elapsed).count();
    }

private:
    PararealRun& run_;
    std::string phase_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// Fine-propagates [0, T0] from the initial condition and builds the warmup
/// POD basis from the captured snapshots.
inline void warmup(const DiscreteSystem& sys, const RunConfig& cfg, PararealRun& run) {
    if (!(cfg.time.warmup_end > 0.0))
        throw ConfigError("warmup span required: T0 must be > 0");
    detail::PhaseTimer timer(run, "warmup");
    Vector h = interpolate(sys, cfg.problem.initial_condition);
    auto [u_hat0, snaps] = fine_propagate(sys, 0.0, cfg.time.warmup_end, h, cfg.time.fine_dt,
                                          cfg.time.snapshot_stride, cfg.solve);
    run.initial_state = std::move(u_hat0);
    run.warm_snapshot_count = static_cast<int>(snaps.columns.cols());
    run.warm_basis = pod_modes(snaps.columns, cfg.gamma1, sys.mass);
    run.warm_basis.origin_iteration = 0;
}

/// Iteration 0: a single sequential coarse sweep over [T0, T]. The reduced
/// state is carried across subinterval boundaries; lifting happens only to
/// record the iterates.
inline void iterate_zero(const DiscreteSystem& sys, const RunConfig& cfg, PararealRun& run) {
    detail::PhaseTimer timer(run, "iterate_zero");
    const int N = cfg.time.subintervals;
    ReducedSystem red = reduce(sys, run.warm_basis);
    IterationRecord rec;
    rec.states.resize(N + 1);
    rec.pod_dims.assign(N, static_cast<int>(run.warm_basis.dim()));
    rec.states[0] = run.initial_state;
    Vector u_red = project(run.warm_basis, sys.mass, run.initial_state);
    for (int n = 0; n < N; ++n) {
        u_red = coarse_propagate(red, cfg.time.node(n), cfg.time.node(n + 1), u_red,
                                 cfg.time.coarse_dt);
        rec.states[n + 1] = lift(run.warm_basis, u_red);
    }
    run.history.push_back(std::move(rec));
    run.iteration = 0;
}

namespace detail {

inline double iterate_increment(const SparseMatrix& mass, const std::vector<Vector>& cur,
                                const std::vector<Vector>& prev) {
    double worst = 0.0;
    for (size_t n = 1; n < cur.size(); ++n) {
        const double nrm = mass_norm(mass, cur[n]);
        const double diff = mass_norm(mass, cur[n] - prev[n]);
        worst = std::max(worst, nrm > 0.0 ? diff / nrm : diff);
    }
    return worst;
}

}  // namespace detail

/// One correction sweep of the k-th iteration. In adaptive mode the coarse
/// propagator is rebuilt per subinterval from windowed snapshot bases and
/// augmented with the sweep's own initial value; in plain mode the warmup
/// basis is reused unchanged.
inline void parareal_iteration(const DiscreteSystem& sys, const RunConfig& cfg,
                               PararealRun& run) {
    const int N = cfg.time.subintervals;
    const int k = run.iteration + 1;
    const int workers = cfg.effective_workers();
    const std::vector<Vector>& prev = run.history.back().states;

    if (k > N) {
        // All subintervals coincide with the fine reference already.
        IterationRecord copy;
        copy.states = prev;
        copy.increment = 0.0;
        run.history.push_back(std::move(copy));
        run.iteration = k;
        return;
    }

    IterationRecord rec;
    rec.states.resize(N + 1);
    rec.fine_end.resize(N);
    rec.coarse_new.resize(N);
    rec.coarse_old.resize(N);
    rec.pod_dims.assign(N, 0);

    // Phase (a): concurrent fine sweeps with snapshot capture.
    std::vector<SnapshotMatrix> snaps(N);
    {
        detail::PhaseTimer timer(run, "fine_sweeps");
        detail::parallel_for(k - 1, N, workers, "fine", [&](int n) {
            auto [end_state, sn] = fine_propagate(sys, cfg.time.node(n), cfg.time.node(n + 1),
                                                  prev[n], cfg.time.fine_dt,
                                                  cfg.time.snapshot_stride, cfg.solve);
            rec.fine_end[n] = std::move(end_state);
            sn.origin_subinterval = n;
            sn.origin_iteration = k;
            snaps[n] = std::move(sn);
        });
    }

    // Phase (b): per-subinterval basis updates (adaptive only).
    std::vector<PodBasis> window_basis(N);
    if (cfg.mode == Mode::Adaptive) {
        detail::PhaseTimer timer(run, "pod_update");
        std::vector<Matrix> fresh(N);
        detail::parallel_for(k - 1, N, workers, "pod_modes", [&](int n) {
            fresh[n] = pod_modes(snaps[n].columns, cfg.gamma2, sys.mass).modes;
        });
        for (int n = k - 1; n < N; ++n) run.store.insert(k, n, std::move(fresh[n]));
        detail::parallel_for(k, N, workers, "window", [&](int n) {
            Matrix W = assemble_window(run.store, n, k, cfg.left_window, cfg.prev_window);
            window_basis[n] = pod_modes(W, cfg.gamma3, sys.mass);
            window_basis[n].origin_iteration = k;
            window_basis[n].origin_subinterval = n;
        });
        run.store.prune(k, cfg.prev_window);
    }

    // Phase (c): sequential correction sweep. U_n^k for n < k is stationary
    // and U_k^k is the cached fine result (the coarse terms cancel exactly).
    {
        detail::PhaseTimer timer(run, "sequential_sweep");
        ReducedSystem warm_red;
        if (cfg.mode == Mode::Plain) warm_red = reduce(sys, run.warm_basis);
        for (int n = 0; n < k && n <= N; ++n) rec.states[n] = prev[n];
        if (k <= N) rec.states[k] = rec.fine_end[k - 1];
        for (int n = k; n < N; ++n) {
            const double t0 = cfg.time.node(n), t1 = cfg.time.node(n + 1);
            if (cfg.mode == Mode::Adaptive) {
                PodBasis basis = augment(window_basis[n], rec.states[n], sys.mass);
                ReducedSystem red = reduce(sys, basis);
                rec.coarse_new[n] = lift(basis, coarse_propagate(red, t0, t1,
                                                                 project(basis, sys.mass,
                                                                         rec.states[n]),
                                                                 cfg.time.coarse_dt));
                rec.coarse_old[n] = lift(basis, coarse_propagate(red, t0, t1,
                                                                 project(basis, sys.mass,
                                                                         prev[n]),
                                                                 cfg.time.coarse_dt));
                rec.pod_dims[n] = static_cast<int>(basis.dim());
            } else {
                const PodBasis& basis = run.warm_basis;
                rec.coarse_new[n] = lift(basis, coarse_propagate(warm_red, t0, t1,
                                                                 project(basis, sys.mass,
                                                                         rec.states[n]),
                                                                 cfg.time.coarse_dt));
                rec.coarse_old[n] = lift(basis, coarse_propagate(warm_red, t0, t1,
                                                                 project(basis, sys.mass,
                                                                         prev[n]),
                                                                 cfg.time.coarse_dt));
                rec.pod_dims[n] = static_cast<int>(basis.dim());
            }
            rec.states[n + 1] = rec.coarse_new[n] + rec.fine_end[n] - rec.coarse_old[n];
        }
    }

    rec.increment = detail::iterate_increment(sys.mass, rec.states, prev);
    run.history.push_back(std::move(rec));
    run.iteration = k;
}

/// True when successive iterates agree to tol_parareal in the relative
/// M-norm, or the iteration budget is exhausted.
inline bool stopping(const PararealRun& run, const RunConfig& cfg) {
    if (run.iteration < 1) return false;
    if (run.iteration >= cfg.effective_k_max()) return true;
    return run.history.back().increment <= cfg.tol_parareal;
}

/// Full orchestration: warmup, iteration 0, correction sweeps until stopping.
inline PararealRun run_parareal(const DiscreteSystem& sys, const RunConfig& cfg) {
    cfg.validate();
    PararealRun run;
    warmup(sys, cfg, run);
    iterate_zero(sys, cfg, run);
    while (!stopping(run, cfg)) parareal_iteration(sys, cfg, run);
    run.stop_reason =
        run.history.back().increment <= cfg.tol_parareal ? "converged" : "k_max reached";
    return run;
}

}  // namespace parapod
