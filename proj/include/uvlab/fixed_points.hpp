#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uvlab/uv_core.hpp"

namespace uvlab {

enum class FixedPointKind { line_i, ii, iii, iv };
enum class Stability { stable, unstable, saddle, marginal };

inline const char* to_string(FixedPointKind k) {
    switch (k) {
        case FixedPointKind::line_i: return "I";
        case FixedPointKind::ii: return "II";
        case FixedPointKind::iii: return "III";
        case FixedPointKind::iv: return "IV";
    }
    return "?";
}

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::stable: return "stable";
        case Stability::unstable: return "unstable";
        case Stability::saddle: return "saddle";
        case Stability::marginal: return "marginal";
    }
    return "?";
}

struct FixedPointReport {
    FixedPointKind kind;
    FunctionState location;
    std::array<double, 2> eigenvalues;
    std::array<std::array<double, 2>, 2> eigenvectors;  // unit, matching eigenvalue order
    Stability stability;
    // Index of the eigenvalue that decided the classification; -1 when both
    // did. The zero-loss line always carries eigenvalue 1 along itself, so
    // its label refers to the transverse eigenvalue only.
    int stability_driver = -1;
    // For y = 0 the point (-y, 0) coincides with the bottom of the zero-loss
    // line; it is reported once with this flag set.
    bool merged_with_line = false;
};

struct CriticalRates {
    std::optional<double> eta_c;       // sqrt(n_eff) / (||x|| y), y > 0 only
    std::optional<double> eta_upper;   // 2 * eta_c
    std::optional<double> eta_max_y0;  // 4 / lambda0, defined for y = 0 runs
};

struct Eig2 {
    std::array<double, 2> values;  // real eigenvalues, or both = magnitude when complex
    std::array<std::array<double, 2>, 2> vectors;
    bool complex_pair = false;
};

/// Smallest lambda on the zero-loss line: 2 ||x|| y / sqrt(n_eff).
inline double line_lambda_min(const UVHyper& h) { return 2.0 * h.k() * h.y; }

namespace detail {

inline std::array<double, 2> unit_sign_fixed(double a, double b) {
    double n = std::hypot(a, b);
    if (n == 0.0) return {0.0, 0.0};
    a /= n;
    b /= n;
    double lead = (a != 0.0) ? a : b;
    if (lead < 0.0) {
        a = -a;
        b = -b;
    }
    return {a, b};
}

inline Stability classify_pair(double e0, double e1, int& driver, double tol = 1e-9) {
    const double m0 = std::abs(e0), m1 = std::abs(e1);
    driver = -1;
    if (std::abs(m0 - 1.0) <= tol || std::abs(m1 - 1.0) <= tol) {
        driver = (std::abs(m0 - 1.0) <= tol) ? 0 : 1;
        return Stability::marginal;
    }
    if (m0 < 1.0 && m1 < 1.0) return Stability::stable;
    if (m0 > 1.0 && m1 > 1.0) return Stability::unstable;
    return Stability::saddle;
}

}  // namespace detail

/// Closed-form fixed points of the update map with Jacobian eigenpairs:
/// the zero-loss line I at (0, lambda), the origin II at (-y, 0), and the
/// function-space-only pair III / IV. `line_lambda` picks the reported point
/// of line I and must respect the existence bound 2 ||x|| y / sqrt(n_eff).
inline std::vector<FixedPointReport> fixed_points(const UVHyper& h, double line_lambda) {
    const double k = h.k();
    const double lam_min = 2.0 * k * h.y;
    if (line_lambda < lam_min - 1e-12 * std::max(1.0, std::abs(lam_min)))
        throw std::invalid_argument("fixed_points: line_lambda below existence bound 2*k*y");

    const double eky = h.eta * k * h.y;
    std::vector<FixedPointReport> out;

    {  // I: (0, lambda), eigenvalues {1, 1 - eta*lambda}
        FixedPointReport r;
        r.kind = FixedPointKind::line_i;
        r.location = {0.0, line_lambda};
        r.eigenvalues = {1.0, 1.0 - h.eta * line_lambda};
        std::array<double, 2> v0 = {0.0, 1.0};
        // transverse eigenvector [lambda / (4 k^2 y), 1]; for y = 0 the
        // Jacobian is lower-triangular with a zero coupling, axis vector.
        std::array<double, 2> v1 = (h.y != 0.0)
            ? detail::unit_sign_fixed(line_lambda / (4.0 * k * k * h.y), 1.0)
            : std::array<double, 2>{1.0, 0.0};
        r.eigenvectors = {v0, v1};
        int drv = -1;
        Stability st = detail::classify_pair(r.eigenvalues[1], r.eigenvalues[1], drv);
        r.stability = st;
        r.stability_driver = 1;
        out.push_back(r);
    }
    {  // II: (-y, 0), eigenvalues {(1 -+ eta*k*y)^2}
        FixedPointReport r;
        r.kind = FixedPointKind::ii;
        r.location = {-h.y, 0.0};
        const double em = 1.0 - eky, ep = 1.0 + eky;
        r.eigenvalues = {em * em, ep * ep};
        r.eigenvectors = {detail::unit_sign_fixed(-1.0 / (2.0 * k), 1.0),
                          detail::unit_sign_fixed(1.0 / (2.0 * k), 1.0)};
        r.stability = detail::classify_pair(r.eigenvalues[0], r.eigenvalues[1], r.stability_driver);
        r.merged_with_line = (h.y == 0.0);
        out.push_back(r);
    }
    {  // III: (-2/(eta k), 4/eta - 2ky), eigenvalues {9, 5 - 2 eta k y}
        FixedPointReport r;
        r.kind = FixedPointKind::iii;
        r.location = {-2.0 / (h.eta * k), 4.0 / h.eta - 2.0 * k * h.y};
        r.eigenvalues = {9.0, 5.0 - 2.0 * eky};
        std::array<double, 2> v0 = (h.y != 0.0)
            ? detail::unit_sign_fixed(1.0 / (h.eta * k * k * h.y), 1.0)
            : std::array<double, 2>{1.0, 0.0};
        r.eigenvectors = {v0, detail::unit_sign_fixed(-1.0 / (2.0 * k), 1.0)};
        r.stability = detail::classify_pair(r.eigenvalues[0], r.eigenvalues[1], r.stability_driver);
        out.push_back(r);
    }
    {  // IV: (2/(eta k), 4/eta + 2ky), eigenvalues {9, 5 + 2 eta k y}
        FixedPointReport r;
        r.kind = FixedPointKind::iv;
        r.location = {2.0 / (h.eta * k), 4.0 / h.eta + 2.0 * k * h.y};
        r.eigenvalues = {9.0, 5.0 + 2.0 * eky};
        std::array<double, 2> v0 = (h.y != 0.0)
            ? detail::unit_sign_fixed(1.0 / (h.eta * k * k * h.y), 1.0)
            : std::array<double, 2>{1.0, 0.0};
        r.eigenvectors = {v0, detail::unit_sign_fixed(1.0 / (2.0 * k), 1.0)};
        r.stability = detail::classify_pair(r.eigenvalues[0], r.eigenvalues[1], r.stability_driver);
        out.push_back(r);
    }
    return out;
}

inline CriticalRates critical_rates(double x_norm, double n_eff, double y,
                                    std::optional<double> lambda0_for_y0 = {}) {
    if (!(x_norm > 0.0) || !(n_eff > 0.0))
        throw std::invalid_argument("critical_rates: x_norm and n_eff must be > 0");
    if (y < 0.0) throw std::invalid_argument("critical_rates: y < 0 is not analyzed");
    CriticalRates r;
    if (y == 0.0) {
        if (!lambda0_for_y0)
            throw std::invalid_argument("critical_rates: y = 0 requires lambda0");
        r.eta_max_y0 = 4.0 / *lambda0_for_y0;
        return r;
    }
    const double k = x_norm / std::sqrt(n_eff);
    r.eta_c = 1.0 / (k * y);
    r.eta_upper = 2.0 * *r.eta_c;
    return r;
}

/// Central-difference Jacobian of the one-step map, step scaled per
/// coordinate by max(1, |coordinate|).
inline std::array<std::array<double, 2>, 2> jacobian_numeric(FunctionState s, const UVHyper& h,
                                                             double rel_step = 1e-5) {
    if (!(rel_step > 0.0) || rel_step > 1e-3)
        throw std::invalid_argument("jacobian_numeric: rel_step must be in (0, 1e-3]");
    std::array<std::array<double, 2>, 2> j{};
    const double coord[2] = {s.delta_f, s.lam};
    for (int c = 0; c < 2; ++c) {
        const double hstep = rel_step * std::max(1.0, std::abs(coord[c]));
        FunctionState sp = s, sm = s;
        if (c == 0) {
            sp.delta_f += hstep;
            sm.delta_f -= hstep;
        } else {
            sp.lam += hstep;
            sm.lam -= hstep;
        }
        const FunctionState fp = step_function_space(sp, h);
        const FunctionState fm = step_function_space(sm, h);
        j[0][c] = (fp.delta_f - fm.delta_f) / (2.0 * hstep);
        j[1][c] = (fp.lam - fm.lam) / (2.0 * hstep);
    }
    return j;
}

/// Eigenpairs of a 2x2 matrix by the quadratic formula. Complex pairs are
/// flagged and reported through their common magnitude sqrt(det).
inline Eig2 eig2(const std::array<std::array<double, 2>, 2>& m) {
    const double a = m[0][0], b = m[0][1], c = m[1][0], d = m[1][1];
    const double tr = a + d, det = a * d - b * c;
    const double disc = tr * tr - 4.0 * det;
    Eig2 r;
    if (disc < 0.0) {
        r.complex_pair = true;
        const double mag = std::sqrt(det);
        r.values = {mag, mag};
        r.vectors = {std::array<double, 2>{0.0, 0.0}, std::array<double, 2>{0.0, 0.0}};
        return r;
    }
    const double root = std::sqrt(disc);
    double l0 = (tr + root) / 2.0, l1 = (tr - root) / 2.0;
    if (l0 < l1) std::swap(l0, l1);
    r.values = {l0, l1};
    for (int i = 0; i < 2; ++i) {
        const double l = r.values[i];
        // null vector of (m - l I): pick the better-conditioned row
        const std::array<double, 2> c1 = {b, l - a};
        const std::array<double, 2> c2 = {l - d, c};
        const double n1 = std::hypot(c1[0], c1[1]), n2 = std::hypot(c2[0], c2[1]);
        std::array<double, 2> v = (n1 >= n2) ? c1 : c2;
        if (n1 == 0.0 && n2 == 0.0) v = (i == 0) ? std::array<double, 2>{1.0, 0.0}
                                                 : std::array<double, 2>{0.0, 1.0};
        r.vectors[i] = detail::unit_sign_fixed(v[0], v[1]);
    }
    return r;
}

inline nlohmann::json fixed_points_to_json(const std::vector<FixedPointReport>& reports) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json j;
        j["kind"] = to_string(r.kind);
        j["delta_f"] = r.location.delta_f;
        j["lambda"] = r.location.lam;
        j["eig"] = {r.eigenvalues[0], r.eigenvalues[1]};
        j["eigvec"] = {{r.eigenvectors[0][0], r.eigenvectors[0][1]},
                       {r.eigenvectors[1][0], r.eigenvectors[1][1]}};
        j["stability"] = to_string(r.stability);
        j["stability_driver"] = r.stability_driver;
        if (r.merged_with_line) j["merged_with_line"] = true;
        arr.push_back(j);
    }
    return arr;
}

}  // namespace uvlab
