#pragma once

#include "parapod/types.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace parapod {

/// M-orthonormal mode matrix with the singular values of the snapshot set.
/// The spatial discretization of a coarse propagator.
struct PodBasis {
    Matrix modes;            // N_g x m, columns M-orthonormal
    Vector singular_values;  // sqrt(lambda_i), non-increasing
    double energy_fraction = 1.0;
    bool augmented = false;
    int origin_iteration = -1;
    int origin_subinterval = -1;

    Index dim() const { return modes.cols(); }
};

inline constexpr double kRankCut = 1e-12;   // lambda_i > kRankCut * lambda_1
inline constexpr double kAugmentCut = 1e-12;
inline constexpr double kOrthoCheck = 1e-10;

inline double orthonormality_defect(const Matrix& modes, const SparseMatrix& mass) {
    Matrix G = modes.transpose() * (mass * modes);
    G.diagonal().array() -= 1.0;
    return G.cwiseAbs().maxCoeff();
}

namespace detail {

// Single modified Gram-Schmidt pass in the M-inner product.
inline void m_orthonormalize(Matrix& modes, const SparseMatrix& mass) {
    for (Index j = 0; j < modes.cols(); ++j) {
        Vector v = modes.col(j);
        for (Index i = 0; i < j; ++i) {
            double proj = mass_dot(mass, modes.col(i), v);
            v -= proj * modes.col(i);
        }
        double nrm = mass_norm(mass, v);
        if (nrm > 0.0) modes.col(j) = v / nrm;
    }
}

}  // namespace detail

/// Method of snapshots: eigendecomposition of W^T M W, modes W y_i / sqrt(lambda_i),
/// truncated at the smallest m whose sqrt(lambda) prefix sum reaches fraction gamma.
inline PodBasis pod_modes(const Matrix& W, double gamma, const SparseMatrix& mass) {
    if (W.cols() < 1) throw DataError("pod_modes: snapshot matrix has no columns");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("pod_modes: gamma must be in (0,1]");
    if (!W.allFinite()) throw DataError("pod_modes: non-finite snapshot entries");

    Matrix G = W.transpose() * (mass * W);
    G = 0.5 * (G + G.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(G);
    if (eig.info() != Eigen::Success) throw DataError("pod_modes: eigendecomposition failed");

    const Vector& evals = eig.eigenvalues();  // ascending
    const Index n = evals.size();
    const double lmax = evals[n - 1];
    if (!(lmax > 0.0)) throw DataError("pod_modes: empty spectrum (all-zero snapshots)");

    std::vector<Index> keep;  // descending eigenvalue order
    for (Index i = n - 1; i >= 0; --i)
        if (evals[i] > kRankCut * lmax) keep.push_back(i);
    const Index r = static_cast<Index>(keep.size());

    Vector sv(r);
    for (Index i = 0; i < r; ++i) sv[i] = std::sqrt(evals[keep[i]]);
    const double total = sv.sum();
    Index m = r;
    double prefix = 0.0;
    for (Index i = 0; i < r; ++i) {
        prefix += sv[i];
        if (prefix >= gamma * total) {
            m = i + 1;
            break;
        }
    }

    PodBasis basis;
    basis.modes.resize(W.rows(), m);
    for (Index i = 0; i < m; ++i)
        basis.modes.col(i) = W * eig.eigenvectors().col(keep[i]) / sv[i];
    basis.singular_values = sv.head(m);
    basis.energy_fraction = sv.head(m).sum() / total;

    if (orthonormality_defect(basis.modes, mass) > kOrthoCheck)
        detail::m_orthonormalize(basis.modes, mass);
    return basis;
}

/// Appends the M-normalized projection residual of U so that U lies in the
/// span exactly. Returns the basis unchanged when U is already represented.
inline PodBasis augment(const PodBasis& basis, const Vector& U, const SparseMatrix& mass) {
    if (U.size() != basis.modes.rows()) throw DataError("augment: dimension mismatch");
    Vector residual = U - basis.modes * (basis.modes.transpose() * (mass * U));
    const double rnorm = mass_norm(mass, residual);
    const double unorm = mass_norm(mass, U);

    PodBasis out = basis;
    out.augmented = true;
    if (rnorm <= kAugmentCut * unorm) return out;
    if (unorm == 0.0) throw DataError("augment: zero vector with nonzero residual");

    out.modes.conservativeResize(Eigen::NoChange, basis.modes.cols() + 1);
    out.modes.col(basis.modes.cols()) = residual / rnorm;
    return out;
}

/// Per-(iteration, subinterval) store of pre-window mode matrices. Entries for
/// stationary subintervals (n < k-1) are not recomputed; lookups resolve to
/// the newest iteration at or below the requested one.
class BasisStore {
public:
    using Key = std::pair<int, int>;  // (iteration k, subinterval n)

    void insert(int k, int n, Matrix modes) {
        entries_[{k, n}] = std::make_shared<const Matrix>(std::move(modes));
    }

    bool contains(int k, int n) const { return entries_.count({k, n}) > 0; }

    /// Newest entry for subinterval n with iteration <= k.
    std::pair<Key, std::shared_ptr<const Matrix>> resolve(int k, int n) const {
        for (int q = k; q >= 0; --q) {
            auto it = entries_.find({q, n});
            if (it != entries_.end()) return {it->first, it->second};
        }
        throw DataError("BasisStore: no entry for subinterval " + std::to_string(n) +
                        " at or before iteration " + std::to_string(k));
    }

    /// Drops iterations older than k - p (retention depth p+1).
    void prune(int k, int p) {
        for (auto it = entries_.begin(); it != entries_.end();) {
            // Keep the newest surviving entry per subinterval so resolve()
            // still succeeds for stationary subintervals.
            int iter = it->first.first, n = it->first.second;
            bool newer_exists = false;
            for (int q = iter + 1; q <= k; ++q)
                if (entries_.count({q, n})) {
                    newer_exists = true;
                    break;
                }
            if (iter < k - p && newer_exists)
                it = entries_.erase(it);
            else
                ++it;
        }
    }

private:
    std::map<Key, std::shared_ptr<const Matrix>> entries_;
};

/// Horizontal concatenation of the windowed mode collection
/// [R^k_{n-m_l}, ..., R^k_n, R^{k-1}_n, ..., R^{k-p}_n], with indices clamped
/// at the left edge and at iteration 1, and duplicate members dropped.
inline Matrix assemble_window(const BasisStore& store, int n, int k, int m_l, int p) {
    if (k < 1) throw ConfigError("assemble_window: requires iteration k >= 1");
    std::vector<std::shared_ptr<const Matrix>> members;
    std::vector<BasisStore::Key> seen;
    auto add = [&](int iter, int sub) {
        auto [key, mat] = store.resolve(iter, sub);
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) return;
        seen.push_back(key);
        members.push_back(std::move(mat));
    };
    for (int j = std::max(0, n - m_l); j <= n; ++j) add(k, j);
    for (int q = k - 1; q >= std::max(1, k - p); --q) add(q, n);

    Index cols = 0;
    for (const auto& mem : members) cols += mem->cols();
    Matrix W(members.front()->rows(), cols);
    Index at = 0;
    for (const auto& mem : members) {
        W.middleCols(at, mem->cols()) = *mem;
        at += mem->cols();
    }
    return W;
}

// Binary basis dump: "PODB", version u32, N_g u64, m u64, column-major modes,
// then the singular values.
inline void write_basis(const std::string& path, const PodBasis& basis) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("write_basis: cannot open " + path);
    out.write("PODB", 4);
    const std::uint32_t version = 1;
    const std::uint64_t n_g = static_cast<std::uint64_t>(basis.modes.rows());
    const std::uint64_t m = static_cast<std::uint64_t>(basis.modes.cols());
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&n_g), sizeof(n_g));
    out.write(reinterpret_cast<const char*>(&m), sizeof(m));
    out.write(reinterpret_cast<const char*>(basis.modes.data()),
              static_cast<std::streamsize>(sizeof(double) * n_g * m));
    const std::uint64_t nsv = static_cast<std::uint64_t>(basis.singular_values.size());
    Vector sv = basis.singular_values;
    if (nsv < m) {
        sv.conservativeResize(m);
        sv.tail(m - nsv).setZero();
    }
    out.write(reinterpret_cast<const char*>(sv.data()),
              static_cast<std::streamsize>(sizeof(double) * m));
}

inline PodBasis read_basis(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("read_basis: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "PODB", 4) != 0) throw DataError("read_basis: bad magic");
    std::uint32_t version;
    std::uint64_t n_g, m;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&n_g), sizeof(n_g));
    in.read(reinterpret_cast<char*>(&m), sizeof(m));
    if (version != 1) throw DataError("read_basis: unsupported version");
    PodBasis basis;
    basis.modes.resize(static_cast<Index>(n_g), static_cast<Index>(m));
    in.read(reinterpret_cast<char*>(basis.modes.data()),
            static_cast<std::streamsize>(sizeof(double) * n_g * m));
    basis.singular_values.resize(static_cast<Index>(m));
    in.read(reinterpret_cast<char*>(basis.singular_values.data()),
            static_cast<std::streamsize>(sizeof(double) * m));
    if (!in) throw DataError("read_basis: truncated file");
    return basis;
}

}  // namespace parapod
