#pragma once

#include "parapod/problem.hpp"
#include "parapod/types.hpp"

#include <array>
#include <cmath>
#include <utility>
#include <vector>

namespace parapod {

enum class Scheme { Auto, Q1, FiniteDifference };

/// Structured periodic grid: no duplicated boundary nodes, lexicographic
/// node ordering with axis 0 fastest.
struct Grid {
    int dim = 1;
    std::array<int, 3> resolution{1, 1, 1};
    std::array<double, 3> spacing{0.0, 0.0, 0.0};
    double length = 0.0;

    Index n_dof() const {
        Index n = 1;
        for (int a = 0; a < dim; ++a) n *= resolution[a];
        return n;
    }

    Index node_index(const std::array<int, 3>& idx) const {
        Index flat = 0;
        for (int a = dim - 1; a >= 0; --a) {
            int w = ((idx[a] % resolution[a]) + resolution[a]) % resolution[a];
            flat = flat * resolution[a] + w;
        }
        return flat;
    }

    std::array<int, 3> node_multi_index(Index flat) const {
        std::array<int, 3> idx{0, 0, 0};
        for (int a = 0; a < dim; ++a) {
            idx[a] = static_cast<int>(flat % resolution[a]);
            flat /= resolution[a];
        }
        return idx;
    }

    std::array<double, 3> node_coords(Index flat) const {
        auto idx = node_multi_index(flat);
        std::array<double, 3> x{0.0, 0.0, 0.0};
        for (int a = 0; a < dim; ++a) x[a] = idx[a] * spacing[a];
        return x;
    }

    double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) v *= spacing[a];
        return v;
    }
};

/// Separable stiffness/advection/reaction term: contributes alpha(t) * matrix.
struct OperatorTerm {
    SparseMatrix matrix;
    TimeCoeff coeff;
    std::string label;
};

/// Separable load term: contributes beta(t) * vec.
struct LoadTerm {
    Vector vec;
    TimeCoeff coeff;
    std::string label;
};

/// Algebraic form of the spatial discretization: the implicit Euler step at
/// time t with step dt solves (M + dt sum_j alpha_j(t) A_j) u = dt sum_j
/// beta_j(t) b_j + M u_prev. Immutable once built; safe to share.
struct DiscreteSystem {
    Grid grid;
    Scheme scheme = Scheme::Q1;
    Index n_dof = 0;
    SparseMatrix mass;
    std::vector<OperatorTerm> operator_terms;
    std::vector<LoadTerm> load_terms;
};

namespace detail {

struct QuadPoint {
    std::array<double, 3> ref;  // reference coordinates in [0,1]^dim
    double weight;
};

inline std::vector<QuadPoint> gauss_points(int dim) {
    // 2-point Gauss per axis: exact for the Q1 mass and stiffness integrands.
    const double a = 0.5 - 0.5 / std::sqrt(3.0);
    const double b = 0.5 + 0.5 / std::sqrt(3.0);
    std::vector<QuadPoint> pts;
    const int n = 1 << dim;
    for (int q = 0; q < n; ++q) {
        QuadPoint p{{0.0, 0.0, 0.0}, 1.0};
        for (int ax = 0; ax < dim; ++ax) {
            p.ref[ax] = (q >> ax) & 1 ? b : a;
            p.weight *= 0.5;
        }
        pts.push_back(p);
    }
    return pts;
}

inline double shape_value(int corner, const std::array<double, 3>& ref, int dim) {
    double v = 1.0;
    for (int ax = 0; ax < dim; ++ax) {
        double xi = ref[ax];
        v *= ((corner >> ax) & 1) ? xi : 1.0 - xi;
    }
    return v;
}

inline std::array<double, 3> shape_grad(int corner, const std::array<double, 3>& ref, int dim,
                                        const std::array<double, 3>& h) {
    std::array<double, 3> g{0.0, 0.0, 0.0};
    for (int ax = 0; ax < dim; ++ax) {
        double d = ((corner >> ax) & 1) ? 1.0 : -1.0;
        for (int other = 0; other < dim; ++other) {
            if (other == ax) continue;
            double xi = ref[other];
            d *= ((corner >> other) & 1) ? xi : 1.0 - xi;
        }
        g[ax] = d / h[ax];
    }
    return g;
}

template <typename LocalKernel>
SparseMatrix assemble_fem_matrix(const Grid& grid, LocalKernel&& kernel) {
    const int dim = grid.dim;
    const int corners = 1 << dim;
    const auto quad = gauss_points(dim);
    const double vol = grid.cell_volume();
    std::vector<Triplet> trips;
    trips.reserve(static_cast<size_t>(grid.n_dof()) * corners * corners / 2);

    std::array<int, 3> e{0, 0, 0};
    const auto& res = grid.resolution;
    auto visit_element = [&]() {
        std::array<Index, 8> nodes{};
        std::array<double, 3> origin{0.0, 0.0, 0.0};
        for (int a = 0; a < dim; ++a) origin[a] = e[a] * grid.spacing[a];
        for (int c = 0; c < corners; ++c) {
            std::array<int, 3> idx = e;
            for (int ax = 0; ax < dim; ++ax) idx[ax] += (c >> ax) & 1;
            nodes[c] = grid.node_index(idx);
        }
        for (const auto& q : quad) {
            std::array<double, 3> x = origin;
            for (int ax = 0; ax < dim; ++ax) x[ax] += q.ref[ax] * grid.spacing[ax];
            const double w = q.weight * vol;
            for (int a = 0; a < corners; ++a)
                for (int b = 0; b < corners; ++b) {
                    double v = w * kernel(a, b, q.ref, x);
                    if (v != 0.0) trips.emplace_back(nodes[a], nodes[b], v);
                }
        }
    };

    for (e[2] = 0; e[2] < (dim > 2 ? res[2] : 1); ++e[2])
        for (e[1] = 0; e[1] < (dim > 1 ? res[1] : 1); ++e[1])
            for (e[0] = 0; e[0] < res[0]; ++e[0]) visit_element();

    SparseMatrix A(grid.n_dof(), grid.n_dof());
    A.setFromTriplets(trips.begin(), trips.end());
    A.makeCompressed();
    return A;
}

}  // namespace detail

inline SparseMatrix assemble_mass(const Grid& grid, Scheme scheme) {
    if (scheme == Scheme::FiniteDifference) {
        SparseMatrix M(grid.n_dof(), grid.n_dof());
        M.setIdentity();
        M *= grid.cell_volume();
        return M;
    }
    return detail::assemble_fem_matrix(grid, [&](int a, int b, const std::array<double, 3>& ref,
                                                 const std::array<double, 3>&) {
        return detail::shape_value(a, ref, grid.dim) * detail::shape_value(b, ref, grid.dim);
    });
}

inline SparseMatrix assemble_stiffness(const Grid& grid, Scheme scheme) {
    if (scheme == Scheme::FiniteDifference) {
        const double vol = grid.cell_volume();
        std::vector<Triplet> trips;
        for (Index i = 0; i < grid.n_dof(); ++i) {
            auto idx = grid.node_multi_index(i);
            for (int ax = 0; ax < grid.dim; ++ax) {
                const double w = vol / (grid.spacing[ax] * grid.spacing[ax]);
                auto left = idx, right = idx;
                --left[ax];
                ++right[ax];
                trips.emplace_back(i, i, 2.0 * w);
                trips.emplace_back(i, grid.node_index(left), -w);
                trips.emplace_back(i, grid.node_index(right), -w);
            }
        }
        SparseMatrix K(grid.n_dof(), grid.n_dof());
        K.setFromTriplets(trips.begin(), trips.end());
        K.makeCompressed();
        return K;
    }
    return detail::assemble_fem_matrix(grid, [&](int a, int b, const std::array<double, 3>& ref,
                                                 const std::array<double, 3>&) {
        auto ga = detail::shape_grad(a, ref, grid.dim, grid.spacing);
        auto gb = detail::shape_grad(b, ref, grid.dim, grid.spacing);
        double dot = 0.0;
        for (int ax = 0; ax < grid.dim; ++ax) dot += ga[ax] * gb[ax];
        return dot;
    });
}

/// Galerkin/central advection matrix for a steady vector field:
/// entries (B . grad(phi_b), phi_a). No stabilization.
inline SparseMatrix assemble_advection(const Grid& grid, Scheme scheme, const VectorField& field) {
    if (scheme == Scheme::FiniteDifference) {
        const double vol = grid.cell_volume();
        std::vector<Triplet> trips;
        for (Index i = 0; i < grid.n_dof(); ++i) {
            auto idx = grid.node_multi_index(i);
            auto bval = field(grid.node_coords(i));
            for (int ax = 0; ax < grid.dim; ++ax) {
                const double w = vol * bval[ax] / (2.0 * grid.spacing[ax]);
                if (w == 0.0) continue;
                auto left = idx, right = idx;
                --left[ax];
                ++right[ax];
                trips.emplace_back(i, grid.node_index(right), w);
                trips.emplace_back(i, grid.node_index(left), -w);
            }
        }
        SparseMatrix C(grid.n_dof(), grid.n_dof());
        C.setFromTriplets(trips.begin(), trips.end());
        C.makeCompressed();
        return C;
    }
    return detail::assemble_fem_matrix(grid, [&](int a, int b, const std::array<double, 3>& ref,
                                                 const std::array<double, 3>& x) {
        auto gb = detail::shape_grad(b, ref, grid.dim, grid.spacing);
        auto bval = field(x);
        double conv = 0.0;
        for (int ax = 0; ax < grid.dim; ++ax) conv += bval[ax] * gb[ax];
        return conv * detail::shape_value(a, ref, grid.dim);
    });
}

inline Vector assemble_load(const Grid& grid, Scheme scheme, const ScalarField& field) {
    Vector b = Vector::Zero(grid.n_dof());
    if (scheme == Scheme::FiniteDifference) {
        const double vol = grid.cell_volume();
        for (Index i = 0; i < grid.n_dof(); ++i) b[i] = vol * field(grid.node_coords(i));
        return b;
    }
    const int dim = grid.dim;
    const int corners = 1 << dim;
    const auto quad = detail::gauss_points(dim);
    const double vol = grid.cell_volume();
    std::array<int, 3> e{0, 0, 0};
    const auto& res = grid.resolution;
    for (e[2] = 0; e[2] < (dim > 2 ? res[2] : 1); ++e[2])
        for (e[1] = 0; e[1] < (dim > 1 ? res[1] : 1); ++e[1])
            for (e[0] = 0; e[0] < res[0]; ++e[0]) {
                std::array<double, 3> origin{0.0, 0.0, 0.0};
                for (int a = 0; a < dim; ++a) origin[a] = e[a] * grid.spacing[a];
                for (const auto& q : quad) {
                    std::array<double, 3> x = origin;
                    for (int ax = 0; ax < dim; ++ax) x[ax] += q.ref[ax] * grid.spacing[ax];
                    const double fv = field(x) * q.weight * vol;
                    for (int c = 0; c < corners; ++c) {
                        std::array<int, 3> idx = e;
                        for (int ax = 0; ax < dim; ++ax) idx[ax] += (c >> ax) & 1;
                        b[grid.node_index(idx)] += fv * detail::shape_value(c, q.ref, dim);
                    }
                }
            }
    return b;
}

inline Scheme resolve_scheme(Scheme scheme, int dim) {
    if (scheme != Scheme::Auto) return scheme;
    return dim <= 2 ? Scheme::Q1 : Scheme::FiniteDifference;
}

/// Assembles the periodic spatial discretization of the advection-diffusion
/// problem: mass matrix, time-separable operator terms, separable loads.
inline DiscreteSystem build_grid(const ProblemSpec& spec, const std::array<int, 3>& resolution,
                                 Scheme scheme = Scheme::Auto) {
    spec.validate();
    DiscreteSystem sys;
    sys.grid.dim = spec.dimension;
    sys.grid.length = spec.domain_length;
    for (int a = 0; a < spec.dimension; ++a) {
        if (resolution[a] < 4)
            throw ConfigError("resolution must be >= 4 per axis");
        sys.grid.resolution[a] = resolution[a];
        sys.grid.spacing[a] = spec.domain_length / resolution[a];
    }
    sys.scheme = resolve_scheme(scheme, spec.dimension);
    sys.n_dof = sys.grid.n_dof();
    sys.mass = assemble_mass(sys.grid, sys.scheme);

    SparseMatrix K = assemble_stiffness(sys.grid, sys.scheme);
    const double eps = spec.diffusion;
    sys.operator_terms.push_back({std::move(K), [eps](double) { return eps; }, "diffusion"});

    for (const auto& comp : advection_components(spec)) {
        SparseMatrix C = assemble_advection(sys.grid, sys.scheme, comp.field);
        sys.operator_terms.push_back({std::move(C), comp.coeff, comp.label});
    }
    if (spec.reaction != 0.0) {
        const double c = spec.reaction;
        sys.operator_terms.push_back({sys.mass, [c](double) { return c; }, "reaction"});
    }
    for (const auto& comp : forcing_components(spec)) {
        Vector b = assemble_load(sys.grid, sys.scheme, comp.field);
        sys.load_terms.push_back({std::move(b), comp.coeff, comp.label});
    }

    for (const auto& term : sys.operator_terms)
        if (!Eigen::Map<const Vector>(term.matrix.valuePtr(), term.matrix.nonZeros())
                 .allFinite())
            throw AssemblyError("non-finite coefficient in operator term " + term.label);
    for (const auto& term : sys.load_terms)
        if (!term.vec.allFinite())
            throw AssemblyError("non-finite coefficient in load term " + term.label);
    return sys;
}

/// Implicit Euler system at target time t with step dt:
/// A = M + dt sum alpha_j(t) A_j,   b = dt sum beta_j(t) b_j.
inline std::pair<SparseMatrix, Vector> system_at(const DiscreteSystem& sys, double t, double dt) {
    if (!(dt > 0.0)) throw ConfigError("system_at: dt must be > 0");
    SparseMatrix A = sys.mass;
    for (const auto& term : sys.operator_terms) {
        const double a = term.coeff(t);
        if (a != 0.0) A += (dt * a) * term.matrix;
    }
    Vector b = Vector::Zero(sys.n_dof);
    for (const auto& term : sys.load_terms) {
        const double beta = term.coeff(t);
        if (beta != 0.0) b += (dt * beta) * term.vec;
    }
    return {std::move(A), std::move(b)};
}

/// Nodal interpolation of an initial condition onto the grid.
inline Vector interpolate(const DiscreteSystem& sys, const ScalarField& f) {
    Vector u = Vector::Zero(sys.n_dof);
    if (!f) return u;
    for (Index i = 0; i < sys.n_dof; ++i) u[i] = f(sys.grid.node_coords(i));
    return u;
}

}  // namespace parapod
