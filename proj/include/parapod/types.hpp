#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace parapod {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AssemblyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
    SolverError(const std::string& what, double residual)
        : std::runtime_error(what), residual(residual) {}
    double residual;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Discrete L2 inner product and norm induced by the mass matrix.
inline double mass_dot(const SparseMatrix& mass, const Vector& a, const Vector& b) {
    return a.dot(mass * b);
}

inline double mass_norm(const SparseMatrix& mass, const Vector& v) {
    return std::sqrt(std::max(0.0, mass_dot(mass, v, v)));
}

}  // namespace parapod
