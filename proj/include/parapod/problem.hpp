#pragma once

#include "parapod/types.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace parapod {

enum class FieldKind { Kolmogorov, ABC, Custom };

using ScalarField = std::function<double(const std::array<double, 3>&)>;
using VectorField = std::function<std::array<double, 3>(const std::array<double, 3>&)>;
using TimeCoeff = std::function<double(double)>;

/// One separable advection contribution B_q(x) * alpha_q(t).
struct AdvectionComponent {
    VectorField field;
    TimeCoeff coeff;
    std::string label;
};

/// One separable forcing contribution f_q(x) * beta_q(t).
struct ForcingComponent {
    ScalarField field;
    TimeCoeff coeff;
    std::string label;
};

struct ProblemSpec {
    double domain_length = 2.0 * std::numbers::pi;
    double diffusion = 0.5;
    FieldKind field_kind = FieldKind::Kolmogorov;
    int dimension = 3;
    double abc_frequency = 1.0;
    double reaction = 0.0;
    double final_time = 10.0;
    double warmup_time = 5.0;
    ScalarField initial_condition;  // default: zero

    // Used only when field_kind == Custom.
    std::vector<AdvectionComponent> custom_advection;
    std::vector<ForcingComponent> custom_forcing;

    void validate() const {
        if (!(diffusion > 0.0)) throw ConfigError("diffusion epsilon must be > 0");
        if (!(domain_length > 0.0)) throw ConfigError("domain_length must be > 0");
        if (dimension < 1 || dimension > 3) throw ConfigError("dimension must be 1, 2 or 3");
        if (!(final_time > warmup_time) || warmup_time < 0.0)
            throw ConfigError("time bounds must satisfy T > T0 >= 0");
    }
};

/// The two 3D velocity fields driving the advection term.
/// Kolmogorov: B = (cos y, cos z, cos x) + (sin z, sin x, sin y) cos t.
/// ABC:        B_i = sin(x_{i+2} + sin wt) + cos(x_{i+1} + sin wt).
inline std::array<double, 3> velocity_field(FieldKind kind, const std::array<double, 3>& x,
                                            double t, double w = 1.0) {
    switch (kind) {
        case FieldKind::Kolmogorov: {
            const double c = std::cos(t);
            return {std::cos(x[1]) + std::sin(x[2]) * c,
                    std::cos(x[2]) + std::sin(x[0]) * c,
                    std::cos(x[0]) + std::sin(x[1]) * c};
        }
        case FieldKind::ABC: {
            const double s = std::sin(w * t);
            return {std::sin(x[2] + s) + std::cos(x[1] + s),
                    std::sin(x[0] + s) + std::cos(x[2] + s),
                    std::sin(x[1] + s) + std::cos(x[0] + s)};
        }
        default:
            throw ConfigError("velocity_field: kind must be Kolmogorov or ABC");
    }
}

namespace detail {

// Lower-dimensional analogs reuse the 3D formulas with coordinate indices
// folded modulo the active dimension, so the time-modulated part survives
// the reduction (a literal "missing coordinate = 0" would kill it in 1D).
inline double coord(const std::array<double, 3>& x, int axis, int dim) {
    return x[axis % dim];
}

}  // namespace detail

/// Separable advection components for the named fields, reduced to `dim`.
inline std::vector<AdvectionComponent> advection_components(const ProblemSpec& spec) {
    const int d = spec.dimension;
    using detail::coord;
    switch (spec.field_kind) {
        case FieldKind::Kolmogorov: {
            AdvectionComponent steady{
                [d](const std::array<double, 3>& x) -> std::array<double, 3> {
                    return {std::cos(coord(x, 1, d)), std::cos(coord(x, 2, d)),
                            std::cos(coord(x, 0, d))};
                },
                [](double) { return 1.0; }, "advection_steady"};
            AdvectionComponent modulated{
                [d](const std::array<double, 3>& x) -> std::array<double, 3> {
                    return {std::sin(coord(x, 2, d)), std::sin(coord(x, 0, d)),
                            std::sin(coord(x, 1, d))};
                },
                [](double t) { return std::cos(t); }, "advection_cos_t"};
            return {steady, modulated};
        }
        case FieldKind::ABC: {
            // sin(z + s) + cos(y + s) = cos(s)(sin z + cos y) + sin(s)(cos z - sin y)
            // with s = sin(w t), and cyclically for the other components.
            const double w = spec.abc_frequency;
            AdvectionComponent part_a{
                [d](const std::array<double, 3>& x) -> std::array<double, 3> {
                    return {std::sin(coord(x, 2, d)) + std::cos(coord(x, 1, d)),
                            std::sin(coord(x, 0, d)) + std::cos(coord(x, 2, d)),
                            std::sin(coord(x, 1, d)) + std::cos(coord(x, 0, d))};
                },
                [w](double t) { return std::cos(std::sin(w * t)); }, "advection_cos_sin_wt"};
            AdvectionComponent part_b{
                [d](const std::array<double, 3>& x) -> std::array<double, 3> {
                    return {std::cos(coord(x, 2, d)) - std::sin(coord(x, 1, d)),
                            std::cos(coord(x, 0, d)) - std::sin(coord(x, 2, d)),
                            std::cos(coord(x, 1, d)) - std::sin(coord(x, 0, d))};
                },
                [w](double t) { return std::sin(std::sin(w * t)); }, "advection_sin_sin_wt"};
            return {part_a, part_b};
        }
        case FieldKind::Custom:
            return spec.custom_advection;
    }
    return {};
}

/// Separable forcing components matching the per-field right-hand sides.
inline std::vector<ForcingComponent> forcing_components(const ProblemSpec& spec) {
    const int d = spec.dimension;
    using detail::coord;
    switch (spec.field_kind) {
        case FieldKind::Kolmogorov: {
            // f = -cos(y) - sin(z) cos(t)
            ForcingComponent steady{
                [d](const std::array<double, 3>& x) { return -std::cos(coord(x, 1, d)); },
                [](double) { return 1.0; }, "forcing_steady"};
            ForcingComponent modulated{
                [d](const std::array<double, 3>& x) { return -std::sin(coord(x, 2, d)); },
                [](double t) { return std::cos(t); }, "forcing_cos_t"};
            return {steady, modulated};
        }
        case FieldKind::ABC: {
            // f = -sin(z + sin wt) - cos(y + sin wt), split by the same identity
            // used for the advection field.
            const double w = spec.abc_frequency;
            ForcingComponent part_a{
                [d](const std::array<double, 3>& x) {
                    return -std::sin(coord(x, 2, d)) - std::cos(coord(x, 1, d));
                },
                [w](double t) { return std::cos(std::sin(w * t)); }, "forcing_cos_sin_wt"};
            ForcingComponent part_b{
                [d](const std::array<double, 3>& x) {
                    return -std::cos(coord(x, 2, d)) + std::sin(coord(x, 1, d));
                },
                [w](double t) { return std::sin(std::sin(w * t)); }, "forcing_sin_sin_wt"};
            return {part_a, part_b};
        }
        case FieldKind::Custom:
            return spec.custom_forcing;
    }
    return {};
}

}  // namespace parapod
