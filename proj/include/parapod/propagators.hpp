#pragma once

#include "parapod/discretization.hpp"
#include "parapod/pod.hpp"
#include "parapod/types.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <cmath>
#include <utility>
#include <vector>

namespace parapod {

struct SolveOptions {
    double tol_lin = 1e-10;     // residual contract: ||Au - rhs|| <= tol_lin * ||rhs||
    int max_iterations = 5000;
    bool direct = false;        // sparse LU instead of preconditioned BiCGSTAB
};

/// Snapshot columns gathered every `stride` fine steps, first column being
/// the initial state of the span.
struct SnapshotMatrix {
    Matrix columns;
    int stride = 1;
    int origin_subinterval = -1;
    int origin_iteration = -1;
    double start_time = 0.0;
};

inline int integral_step_count(double span, double dt, const char* what) {
    const double ratio = span / dt;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, std::abs(ratio)))
        throw ConfigError(std::string(what) + ": span is not an integral number of steps");
    return static_cast<int>(rounded);
}

/// One implicit Euler step of the full system: solves A(t,dt) u = b(t,dt) + M u_prev.
inline Vector fine_step(const DiscreteSystem& sys, double t, double dt, const Vector& u_prev,
                        const SolveOptions& opts = {}) {
    if (!(dt > 0.0)) throw ConfigError("fine_step: dt must be > 0");
    auto [A, b] = system_at(sys, t, dt);
    const Vector rhs = b + sys.mass * u_prev;
    const double rhs_norm = rhs.norm();
    if (rhs_norm == 0.0) return Vector::Zero(sys.n_dof);

    Vector u;
    if (opts.direct) {
        Eigen::SparseLU<SparseMatrix> lu(A);
        if (lu.info() != Eigen::Success)
            throw SolverError("fine_step: sparse LU factorization failed", 0.0);
        u = lu.solve(rhs);
    } else {
        Eigen::BiCGSTAB<SparseMatrix, Eigen::DiagonalPreconditioner<double>> solver;
        solver.setTolerance(0.1 * opts.tol_lin);
        solver.setMaxIterations(opts.max_iterations);
        solver.compute(A);
        u = solver.solveWithGuess(rhs, u_prev);
    }
    const double residual = (A * u - rhs).norm();
    if (!(residual <= opts.tol_lin * rhs_norm))
        throw SolverError("fine_step: linear solve missed tolerance, residual " +
                              std::to_string(residual / rhs_norm),
                          residual);
    return u;
}

/// Repeated fine steps over [t0, t1], capturing snapshots every `stride` steps.
inline std::pair<Vector, SnapshotMatrix> fine_propagate(const DiscreteSystem& sys, double t0,
                                                        double t1, const Vector& u0, double dt,
                                                        int stride,
                                                        const SolveOptions& opts = {}) {
    if (stride < 1) throw ConfigError("fine_propagate: snapshot stride must be >= 1");
    const int steps = integral_step_count(t1 - t0, dt, "fine_propagate");
    SnapshotMatrix snaps;
    snaps.stride = stride;
    snaps.start_time = t0;
    snaps.columns.resize(sys.n_dof, steps / stride + 1);
    snaps.columns.col(0) = u0;
    Vector u = u0;
    for (int s = 1; s <= steps; ++s) {
        u = fine_step(sys, t0 + s * dt, dt, u, opts);
        if (s % stride == 0) snaps.columns.col(s / stride) = u;
    }
    return {std::move(u), std::move(snaps)};
}

/// Galerkin projection of the full system onto a POD basis: all reduced
/// operator terms become dense m x m, reduced loads length m.
struct ReducedSystem {
    Index dim = 0;
    Matrix mass;
    std::vector<std::pair<Matrix, TimeCoeff>> operator_terms;
    std::vector<std::pair<Vector, TimeCoeff>> load_terms;
};

inline ReducedSystem reduce(const DiscreteSystem& sys, const PodBasis& basis) {
    if (basis.modes.rows() != sys.n_dof)
        throw DataError("reduce: basis column length does not match system");
    if (basis.dim() < 1) throw DataError("reduce: empty basis");
    ReducedSystem red;
    red.dim = basis.dim();
    red.mass = basis.modes.transpose() * (sys.mass * basis.modes);
    for (const auto& term : sys.operator_terms)
        red.operator_terms.emplace_back(
            basis.modes.transpose() * (term.matrix * basis.modes), term.coeff);
    for (const auto& term : sys.load_terms)
        red.load_terms.emplace_back(basis.modes.transpose() * term.vec, term.coeff);
    return red;
}

/// Implicit Euler in the reduced space, dense LU per step.
inline Vector coarse_propagate(const ReducedSystem& red, double t0, double t1,
                               const Vector& u0_red, double dT) {
    if (!(dT > 0.0)) throw ConfigError("coarse_propagate: dT must be > 0");
    const int steps = integral_step_count(t1 - t0, dT, "coarse_propagate");
    Vector u = u0_red;
    for (int s = 1; s <= steps; ++s) {
        const double t = t0 + s * dT;
        Matrix A = red.mass;
        for (const auto& [mat, coeff] : red.operator_terms) {
            const double a = coeff(t);
            if (a != 0.0) A += (dT * a) * mat;
        }
        Vector rhs = red.mass * u;
        for (const auto& [vec, coeff] : red.load_terms) {
            const double b = coeff(t);
            if (b != 0.0) rhs += (dT * b) * vec;
        }
        Eigen::PartialPivLU<Matrix> lu(A);
        u = lu.solve(rhs);
        if (!u.allFinite())
            throw SolverError("coarse_propagate: singular reduced matrix at t=" +
                                  std::to_string(t) + " (dim " + std::to_string(red.dim) + ")",
                              0.0);
    }
    return u;
}

/// Reduced coefficients of the M-orthogonal projection: project = R^T M u.
inline Vector project(const PodBasis& basis, const SparseMatrix& mass, const Vector& u) {
    if (u.size() != basis.modes.rows()) throw DataError("project: dimension mismatch");
    return basis.modes.transpose() * (mass * u);
}

inline Vector lift(const PodBasis& basis, const Vector& u_red) {
    if (u_red.size() != basis.dim()) throw DataError("lift: dimension mismatch");
    return basis.modes * u_red;
}

}  // namespace parapod
