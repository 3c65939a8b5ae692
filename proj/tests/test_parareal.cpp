#include "test_support.hpp"

#include <doctest.h>

#include <random>

using namespace parapod;
using namespace testsupport;

namespace {

RunConfig small_kolmogorov_config(int resolution, int N, double slab, Mode mode) {
    RunConfig cfg;
    cfg.problem = kolmogorov_spec(1, 0.5, 1.0, 1.0 + N * slab);
    cfg.problem.initial_condition = [](const std::array<double, 3>& x) {
        return std::sin(x[0]) + 0.5 * std::cos(2.0 * x[0]);
    };
    cfg.resolution = {resolution, 1, 1};
    cfg.time.warmup_end = 1.0;
    cfg.time.final_time = cfg.problem.final_time;
    cfg.time.subintervals = N;
    cfg.time.fine_dt = 0.01;
    cfg.time.coarse_dt = slab / 2.0;
    cfg.time.snapshot_stride = 5;
    cfg.mode = mode;
    cfg.workers = 1;
    return cfg;
}

std::vector<Vector> fine_nodes(const DiscreteSystem& sys, const RunConfig& cfg) {
    return reference_trajectory(sys, cfg, /*use_cache=*/false);
}

}  // namespace

TEST_CASE("time partition arithmetic") {
    TimePartition part;
    part.warmup_end = 1.0;
    part.final_time = 5.0;
    part.subintervals = 8;
    part.fine_dt = 0.01;
    part.coarse_dt = 0.25;
    part.validate();
    CHECK(part.slab() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(part.node(0) == 1.0);
    CHECK(part.node(8) == doctest::Approx(5.0).epsilon(1e-15));

    part.coarse_dt = 0.3;  // 0.5 / 0.3 is not integral
    CHECK_THROWS_AS(part.validate(), ConfigError);
    part.coarse_dt = 0.25;
    part.subintervals = 0;
    CHECK_THROWS_AS(part.validate(), ConfigError);
}

TEST_CASE("warmup captures snapshots and builds the initial basis") {
    RunConfig cfg = small_kolmogorov_config(32, 2, 0.5, Mode::Adaptive);
    DiscreteSystem sys = build_grid(cfg.problem, cfg.resolution, cfg.scheme);
    PararealRun run;
    warmup(sys, cfg, run);

    // T0 = 1.0, dt = 0.01, stride 5: steps 0,5,...,100 -> 21 columns
    CHECK(run.warm_snapshot_count == 21);
    CHECK(orthonormality_defect(run.warm_basis.modes, sys.mass) <= 1e-8);

    // initial state matches an independent fine propagation
    Vector h = interpolate(sys, cfg.problem.initial_condition);
    auto [u_hat0, snaps] = fine_propagate(sys, 0.0, 1.0, h, 0.01, 5, cfg.solve);
    CHECK((run.initial_state - u_hat0).cwiseAbs().maxCoeff() == 0.0);

    // basis dimension agrees with the Jacobi-oracle recomputation
    Matrix oracle = pod_oracle(snaps.columns, cfg.gamma1, sys.mass);
    CHECK(run.warm_basis.dim() == oracle.cols());
    // the trailing kept eigenvalues of real snapshot data are tiny, so the
    // projector comparison is looser here than for the random instances
    CHECK(projector_gap(run.warm_basis.modes, oracle, sys.mass) <= 1e-6);

    cfg.time.warmup_end = 0.0;
    cfg.problem.warmup_time = 0.0;
    PararealRun run2;
    CHECK_THROWS_AS(warmup(sys, cfg, run2), ConfigError);
}

TEST_CASE("iteration 0 is a pure coarse sweep") {
    SUBCASE("no dynamics: every node equals the initial state") {
        RunConfig cfg = small_kolmogorov_config(16, 3, 0.5, Mode::Adaptive);
        DiscreteSystem sys = zero_operator_system(16);
        PararealRun run;
        std::mt19937 rng(81);
        run.initial_state = random_vector(sys.n_dof, rng);
        run.warm_basis = pod_modes(run.initial_state, 1.0, sys.mass);
        iterate_zero(sys, cfg, run);
        REQUIRE(run.history.size() == 1);
        const auto& states = run.history[0].states;
        REQUIRE(states.size() == 4);
        for (const auto& u : states)
            CHECK(mass_norm(sys.mass, u - run.initial_state) <=
                  1e-10 * mass_norm(sys.mass, run.initial_state));
    }

    SUBCASE("full basis with dT = dt reproduces the reference nodes") {
        RunConfig cfg = small_kolmogorov_config(12, 2, 0.5, Mode::Adaptive);
        cfg.time.coarse_dt = cfg.time.fine_dt;
        DiscreteSystem sys = build_grid(cfg.problem, cfg.resolution, cfg.scheme);
        PararealRun run;
        warmup(sys, cfg, run);
        run.warm_basis = pod_modes(Matrix::Identity(sys.n_dof, sys.n_dof), 1.0, sys.mass);
        iterate_zero(sys, cfg, run);
        std::vector<Vector> ref = fine_nodes(sys, cfg);
        for (size_t n = 0; n < ref.size(); ++n)
            CHECK(relative_error(run.history[0].states[n], ref[n], sys.mass) <= 1e-7);
    }
}

TEST_CASE("parareal exactness: iterate k matches the reference up to node k") {
    for (Mode mode : {Mode::Adaptive, Mode::Plain}) {
        CAPTURE(static_cast<int>(mode));
        RunConfig cfg = small_kolmogorov_config(24, 4, 0.5, mode);
        cfg.max_iterations = 4;
        cfg.tol_parareal = -1.0;  // run the full budget
        DiscreteSystem sys = build_grid(cfg.problem, cfg.resolution, cfg.scheme);
        PararealRun run = run_parareal(sys, cfg);
        std::vector<Vector> ref = fine_nodes(sys, cfg);
        REQUIRE(run.iteration == 4);
        for (int k = 1; k <= run.iteration; ++k)
            for (int n = 0; n <= std::min(k, cfg.time.subintervals); ++n)
                CHECK(relative_error(run.iterates(k)[n], ref[n], sys.mass) <= 1e-9);
    }
}

TEST_CASE("degenerate coarse propagator equals fine: one iteration suffices") {
    RunConfig cfg = small_kolmogorov_config(12, 3, 0.5, Mode::Plain);
    cfg.time.coarse_dt = cfg.time.fine_dt;
    cfg.max_iterations = 1;
    DiscreteSystem sys = build_grid(cfg.problem, cfg.resolution, cfg.scheme);
    PararealRun run;
    warmup(sys, cfg, run);
    run.warm_basis = pod_modes(Matrix::Identity(sys.n_dof, sys.n_dof), 1.0, sys.mass);
    iterate_zero(sys, cfg, run);
    parareal_iteration(sys, cfg, run);
    std::vector<Vector> ref = fine_nodes(sys, cfg);
    for (int n = 0; n <= cfg.time.subintervals; ++n)
        CHECK(relative_error(run.iterates(1)[n], ref[n], sys.mass) <= 1e-7);
}

TEST_CASE("iterating past the subinterval count is a no-op") {
    RunConfig cfg = small_kolmogorov_config(16, 2, 0.5, Mode::Adaptive);
    cfg.max_iterations = 4;
    cfg.tol_parareal = -1.0;
    DiscreteSystem sys = build_grid(cfg.problem, cfg.resolution, cfg.scheme);
    PararealRun run = run_parareal(sys, cfg);
    REQUIRE(run.iteration == 4);
    for (size_t n = 0; n < run.iterates(2).size(); ++n) {
        CHECK((run.iterates(3)[n] - run.iterates(2)[n]).norm() == 0.0);
        CHECK((run.iterates(4)[n] - run.iterates(2)[n]).norm() == 0.0);
    }
}

TEST_CASE("stopping criterion") {
    RunConfig cfg = small_kolmogorov_config(16, 2, 0.5, Mode::Adaptive);
    PararealRun run;
    run.iteration = 0;
    CHECK(!stopping(run, cfg));

    run.iteration = 1;
    IterationRecord rec;
    rec.increment = 1e-3;
    run.history.push_back(rec);
    cfg.tol_parareal = 1e-8;
    cfg.max_iterations = 5;
    CHECK(!stopping(run, cfg));
    run.history.back().increment = 1e-9;
    CHECK(stopping(run, cfg));
    run.history.back().increment = 1e-3;
    run.iteration = 5;
    CHECK(stopping(run, cfg));
}

TEST_CASE("adaptive run converges and records diagnostics") {
    RunConfig cfg = small_kolmogorov_config(32, 4, 0.5, Mode::Adaptive);
    cfg.tol_parareal = 1e-10;
    DiscreteSystem sys = build_grid(cfg.problem, cfg.resolution, cfg.scheme);
    PararealRun run = run_parareal(sys, cfg);
    std::vector<Vector> ref = fine_nodes(sys, cfg);

    double final_err = 0.0;
    for (int n = 0; n <= cfg.time.subintervals; ++n)
        final_err = std::max(final_err, relative_error(run.latest()[n], ref[n], sys.mass));
    CHECK(final_err <= 1e-6);

    // POD dimensions recorded for every active subinterval of every sweep
    for (size_t k = 1; k < run.history.size(); ++k) {
        const auto& rec = run.history[k];
        if (rec.pod_dims.empty()) continue;  // copied no-op iteration
        for (int n = static_cast<int>(k); n < cfg.time.subintervals; ++n)
            CHECK(rec.pod_dims[n] >= 1);
    }
    CHECK(run.phase_seconds.count("warmup") == 1);
    CHECK(run.phase_seconds.count("fine_sweeps") == 1);
}

TEST_CASE("results do not depend on the worker count") {
    RunConfig cfg = small_kolmogorov_config(24, 4, 0.5, Mode::Adaptive);
    cfg.max_iterations = 3;
    cfg.tol_parareal = -1.0;
    DiscreteSystem sys = build_grid(cfg.problem, cfg.resolution, cfg.scheme);

    cfg.workers = 1;
    PararealRun serial = run_parareal(sys, cfg);
    cfg.workers = 4;
    PararealRun parallel = run_parareal(sys, cfg);

    REQUIRE(serial.history.size() == parallel.history.size());
    for (size_t k = 0; k < serial.history.size(); ++k)
        for (size_t n = 0; n < serial.history[k].states.size(); ++n)
            CHECK((serial.history[k].states[n] - parallel.history[k].states[n])
                      .cwiseAbs()
                      .maxCoeff() == 0.0);
}

TEST_CASE("plain mode freezes the warmup basis") {
    RunConfig cfg = small_kolmogorov_config(24, 3, 0.5, Mode::Plain);
    cfg.max_iterations = 2;
    cfg.tol_parareal = -1.0;
    DiscreteSystem sys = build_grid(cfg.problem, cfg.resolution, cfg.scheme);
    PararealRun run = run_parareal(sys, cfg);
    const int warm_dim = static_cast<int>(run.warm_basis.dim());
    for (size_t k = 1; k < run.history.size(); ++k)
        for (int n = static_cast<int>(k); n < cfg.time.subintervals; ++n)
            CHECK(run.history[k].pod_dims[n] == warm_dim);
    CHECK(!run.store.contains(1, 0));
}

TEST_CASE("config validation") {
    RunConfig cfg = small_kolmogorov_config(16, 2, 0.5, Mode::Adaptive);
    cfg.validate();
    cfg.gamma3 = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.gamma3 = 1.0 - 2e-8;
    cfg.left_window = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.left_window = 1;
    cfg.problem.warmup_time = 2.0;  // disagrees with the partition
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
