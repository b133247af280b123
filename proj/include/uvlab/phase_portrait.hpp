#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uvlab/uv_core.hpp"
#include "uvlab/util.hpp"

namespace uvlab {

enum class Region { forbidden, divergent, sharpening, reduction };

inline const char* to_string(Region r) {
    switch (r) {
        case Region::forbidden: return "forbidden";
        case Region::divergent: return "divergent";
        case Region::sharpening: return "sharpening";
        case Region::reduction: return "reduction";
    }
    return "?";
}

enum class SharpeningSign { increasing, decreasing, stationary };

struct GridSpec {
    double df_min, df_max;
    double lam_min, lam_max;
    int resolution;  // cells per axis
};

struct PortraitCell {
    FunctionState state;  // cell center
    bool has_arrow = false;
    std::array<double, 2> unit_update = {0.0, 0.0};
    std::optional<Region> region;
    bool stationary = false;  // lambda update was exactly zero, folded into reduction
};

struct PortraitGrid {
    GridSpec spec;
    int steps = 1;
    std::vector<PortraitCell> cells;  // row-major over (lam index, df index)
};

struct Nullclines {
    std::vector<std::array<double, 2>> df_curve;   // delta_f_{t+1} = delta_f_t
    std::vector<std::array<double, 2>> lam_curve;  // lambda_{t+1} = lambda_t
};

/// Sign of the one-step lambda change, evaluated through
/// delta_f * (eta lam delta_f - 4 (delta_f + y)) times a positive prefactor.
inline SharpeningSign sharpening_sign(FunctionState s, const UVHyper& h) {
    const double g = s.delta_f * (h.eta * s.lam * s.delta_f - 4.0 * (s.delta_f + h.y));
    if (g > 0.0) return SharpeningSign::increasing;
    if (g < 0.0) return SharpeningSign::decreasing;
    return SharpeningSign::stationary;
}

/// Update field of cell centers: G = M^steps(s) - s, emitted as unit arrows.
/// Fixed points give null arrows.
inline PortraitGrid vector_field(const GridSpec& spec, const UVHyper& h, int steps = 1) {
    if (spec.resolution < 2) throw std::invalid_argument("vector_field: resolution must be >= 2");
    if (steps != 1 && steps != 2) throw std::invalid_argument("vector_field: steps must be 1 or 2");
    PortraitGrid grid;
    grid.spec = spec;
    grid.steps = steps;
    const int res = spec.resolution;
    grid.cells.reserve(static_cast<std::size_t>(res) * res);
    const double ddf = (spec.df_max - spec.df_min) / res;
    const double dlam = (spec.lam_max - spec.lam_min) / res;
    for (int li = 0; li < res; ++li) {
        for (int fi = 0; fi < res; ++fi) {
            PortraitCell cell;
            cell.state = {spec.df_min + (fi + 0.5) * ddf, spec.lam_min + (li + 0.5) * dlam};
            FunctionState next = step_function_space(cell.state, h);
            if (steps == 2) next = step_function_space(next, h);
            const double gf = next.delta_f - cell.state.delta_f;
            const double gl = next.lam - cell.state.lam;
            const double norm = std::hypot(gf, gl);
            if (norm > 0.0 && std::isfinite(norm)) {
                cell.has_arrow = true;
                cell.unit_update = {gf / norm, gl / norm};
            }
            grid.cells.push_back(cell);
        }
    }
    return grid;
}

/// forbidden -> divergent (by forward simulation) -> sharpening/reduction by
/// the one-step lambda sign; an exactly stationary sign is folded into
/// reduction and flagged through the `stationary` out-parameter.
inline Region classify_region(FunctionState s, const UVHyper& h, long horizon = 1000,
                              double divergence_threshold = kDivergenceThreshold,
                              bool* stationary = nullptr) {
    if (horizon < 1) throw std::invalid_argument("classify_region: horizon must be >= 1");
    if (stationary) *stationary = false;
    if (is_forbidden(s, h)) return Region::forbidden;
    if (simulate(s, h, horizon, divergence_threshold).diverged) return Region::divergent;
    switch (sharpening_sign(s, h)) {
        case SharpeningSign::increasing: return Region::sharpening;
        case SharpeningSign::decreasing: return Region::reduction;
        case SharpeningSign::stationary:
            if (stationary) *stationary = true;
            return Region::reduction;
    }
    return Region::reduction;
}

inline void classify_grid(PortraitGrid& grid, const UVHyper& h, long horizon = 1000,
                          double divergence_threshold = kDivergenceThreshold, int threads = 1) {
    parallel_for(grid.cells.size(), threads, [&](std::size_t i) {
        bool stat = false;
        grid.cells[i].region =
            classify_region(grid.cells[i].state, h, horizon, divergence_threshold, &stat);
        grid.cells[i].stationary = stat;
    });
}

/// The two nullclines sampled at the given residual values (the delta_f = 0
/// axis belongs to both and is left implicit). Negative-lambda and singular
/// samples are dropped.
inline Nullclines nullclines(const UVHyper& h, std::span<const double> df_samples) {
    const double k = h.k();
    Nullclines out;
    for (double df : df_samples) {
        const double lam_f = h.eta * k * k * df * (df + h.y);
        if (std::isfinite(lam_f) && lam_f >= 0.0) out.df_curve.push_back({df, lam_f});
        if (df != 0.0) {
            const double lam_l = 4.0 * (df + h.y) / (h.eta * df);
            if (std::isfinite(lam_l) && lam_l >= 0.0) out.lam_curve.push_back({df, lam_l});
        }
    }
    return out;
}

inline void portrait_to_csv(const PortraitGrid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "delta_f,lambda,g_df,g_lam,region\n";
    for (const auto& c : grid.cells) {
        out << fmt(c.state.delta_f) << ',' << fmt(c.state.lam) << ',';
        if (c.has_arrow) out << fmt(c.unit_update[0]) << ',' << fmt(c.unit_update[1]);
        else out << ',';
        out << ',' << (c.region ? to_string(*c.region) : "") << '\n';
    }
}

inline void nullclines_to_csv(const Nullclines& n, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "delta_f,lambda,curve\n";
    for (const auto& p : n.df_curve)
        out << fmt(p[0]) << ',' << fmt(p[1]) << ",df_nullcline\n";
    for (const auto& p : n.lam_curve)
        out << fmt(p[0]) << ',' << fmt(p[1]) << ",lambda_nullcline\n";
}

}  // namespace uvlab
