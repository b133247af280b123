#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uvlab/mat.hpp"
#include "uvlab/util.hpp"

namespace uvlab {

// Default cutoff on max(|delta_f|, lambda) beyond which an orbit is treated
// as divergent: far above any bounded orbit at sane hyperparameters, far
// below overflow. Shared by the portrait and bifurcation sweeps.
inline constexpr double kDivergenceThreshold = 1e8;

/// Map parameters of the two-variable UV dynamics: learning rate eta, input
/// norm, effective width and scalar target. The map depends on the geometry
/// only through the ratio k = x_norm / sqrt(n_eff), so every formula below is
/// written in terms of k.
struct UVHyper {
    double eta = 0.0;
    double x_norm = 1.0;
    double n_eff = 1.0;
    double y = 0.0;

    double k() const { return x_norm / std::sqrt(n_eff); }

    bool valid() const {
        return eta > 0.0 && x_norm > 0.0 && n_eff > 0.0 &&
               std::isfinite(eta) && std::isfinite(x_norm) &&
               std::isfinite(n_eff) && std::isfinite(y) && std::isfinite(k());
    }
};

/// Function-space state: residual delta_f = f - y and lambda = Tr H, the
/// scalar tangent kernel of the two-layer linear model.
struct FunctionState {
    double delta_f = 0.0;
    double lam = 0.0;
};

/// Concrete weights of the two-layer linear model f = v^T U x / sqrt(n_eff),
/// with n_eff = n^(1-p). Entries are sampled N(0, sigma_w^2 / n^p).
struct UVParams {
    Mat u;                  // n x d_in
    std::vector<double> v;  // n
    int n = 1;
    double p = 0.0;         // 0 = NTP, 1 = muP
    double sigma_w2 = 1.0;

    double n_eff() const { return std::pow(static_cast<double>(n), 1.0 - p); }
};

struct Trajectory {
    std::vector<FunctionState> states;
    std::vector<double> betas;
    std::vector<double> losses;  // losses[t] == 0.5 * states[t].delta_f^2
    bool diverged = false;
    std::size_t diverged_at = 0;  // index of the offending state when diverged
};

/// One step of the closed function-space dynamics:
///   delta_f' = delta_f * (1 - eta*lam + eta^2 k^2 delta_f (delta_f + y))
///   lam'     = lam + eta k^2 delta_f (eta lam delta_f - 4 (delta_f + y))
/// The lambda update uses the form with no division by delta_f, so the
/// zero-loss line needs no special case.
inline FunctionState step_function_space(FunctionState s, const UVHyper& h) {
    const double k = h.k();
    const double ek2 = h.eta * k * k;
    const double fy = s.delta_f + h.y;
    FunctionState out;
    out.delta_f = s.delta_f * (1.0 - h.eta * s.lam + h.eta * ek2 * s.delta_f * fy);
    out.lam = s.lam + ek2 * s.delta_f * (h.eta * s.lam * s.delta_f - 4.0 * fy);
    return out;
}

inline FunctionState step_two(FunctionState s, const UVHyper& h) {
    return step_function_space(step_function_space(s, h), h);
}

/// Read the function-space state off concrete weights:
///   delta_f = v^T U x / sqrt(n_eff) - y
///   lambda  = (||Ux||^2 + ||v||^2 ||x||^2) / n_eff
inline FunctionState observe(const UVParams& w, std::span<const double> x, double y) {
    if (x.size() != w.u.cols || w.v.size() != w.u.rows)
        throw std::invalid_argument("observe: dimension mismatch");
    const double ne = w.n_eff();
    double ux2 = 0.0, f = 0.0;
    std::vector<double> ux(w.u.rows);
    for (std::size_t i = 0; i < w.u.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < w.u.cols; ++j) s += w.u(i, j) * x[j];
        ux[i] = s;
        ux2 += s * s;
        f += w.v[i] * s;
    }
    double v2 = 0.0, x2 = 0.0;
    for (double vi : w.v) v2 += vi * vi;
    for (double xi : x) x2 += xi * xi;
    return {f / std::sqrt(ne) - y, (ux2 + v2 * x2) / ne};
}

/// One simultaneous GD step on the weights. delta_f is computed from the
/// pre-update weights and both layers use that same residual.
inline UVParams step_parameter_space(const UVParams& w, std::span<const double> x,
                                     double y, double eta) {
    if (x.size() != w.u.cols || w.v.size() != w.u.rows)
        throw std::invalid_argument("step_parameter_space: dimension mismatch");
    const double root = std::sqrt(w.n_eff());
    std::vector<double> ux(w.u.rows);
    double f = 0.0;
    for (std::size_t i = 0; i < w.u.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < w.u.cols; ++j) s += w.u(i, j) * x[j];
        ux[i] = s;
        f += w.v[i] * s;
    }
    const double df = f / root - y;
    const double c = eta * df / root;
    UVParams out = w;
    for (std::size_t i = 0; i < w.u.rows; ++i)
        for (std::size_t j = 0; j < w.u.cols; ++j)
            out.u(i, j) -= c * w.v[i] * x[j];
    for (std::size_t i = 0; i < w.v.size(); ++i) out.v[i] -= c * ux[i];
    return out;
}

/// Signed distance from the EoS manifold:
///   beta = sqrt(n_eff)/(2 ||x||) * lambda - (delta_f + y).
/// One map step multiplies beta by (1 + eta k delta_f)^2, so beta = 0 is
/// invariant and beta > 0 is preserved.
inline double beta(FunctionState s, const UVHyper& h) {
    return s.lam / (2.0 * h.k()) - (s.delta_f + h.y);
}

/// States with 2 ||x|| |delta_f + y| / sqrt(n_eff) > lambda are unreachable
/// from any real weight configuration.
inline bool is_forbidden(FunctionState s, const UVHyper& h) {
    return 2.0 * h.k() * std::abs(s.delta_f + h.y) > s.lam;
}

inline Trajectory simulate(FunctionState s0, const UVHyper& h, long steps,
                           double divergence_threshold = kDivergenceThreshold) {
    if (steps < 0) throw std::invalid_argument("simulate: steps must be >= 0");
    if (!(divergence_threshold > 0.0))
        throw std::invalid_argument("simulate: divergence threshold must be > 0");
    Trajectory tr;
    tr.states.reserve(static_cast<std::size_t>(steps) + 1);
    auto bad = [&](const FunctionState& s) {
        return !std::isfinite(s.delta_f) || !std::isfinite(s.lam) ||
               std::abs(s.delta_f) > divergence_threshold ||
               std::abs(s.lam) > divergence_threshold;
    };
    auto push = [&](const FunctionState& s) {
        tr.states.push_back(s);
        tr.betas.push_back(beta(s, h));
        tr.losses.push_back(0.5 * s.delta_f * s.delta_f);
    };
    push(s0);
    if (bad(s0)) {
        tr.diverged = true;
        tr.diverged_at = 0;
        return tr;
    }
    FunctionState s = s0;
    for (long t = 1; t <= steps; ++t) {
        s = step_function_space(s, h);
        push(s);
        if (bad(s)) {
            tr.diverged = true;
            tr.diverged_at = static_cast<std::size_t>(t);
            break;
        }
    }
    return tr;
}

/// i.i.d. normal weights, deterministic per seed within one build.
inline UVParams sample_init(std::mt19937_64& rng, int n, double p, double sigma_w2, int d_in) {
    if (n < 1 || d_in < 1) throw std::invalid_argument("sample_init: n and d_in must be >= 1");
    if (!(sigma_w2 > 0.0)) throw std::invalid_argument("sample_init: sigma_w2 must be > 0");
    UVParams w;
    w.n = n;
    w.p = p;
    w.sigma_w2 = sigma_w2;
    w.u = Mat(static_cast<std::size_t>(n), static_cast<std::size_t>(d_in));
    w.v.resize(static_cast<std::size_t>(n));
    std::normal_distribution<double> g(0.0, std::sqrt(sigma_w2 / std::pow(double(n), p)));
    for (double& e : w.u.a) e = g(rng);
    for (double& e : w.v) e = g(rng);
    return w;
}

struct InitMoments {
    double mean_df, var_df, mean_lam, var_lam;
};

/// Closed-form initialization moments:
///   delta_f0 ~ N(-y, sigma_w^4 ||x||^2 / n^p)
///   lambda0  ~ N(2 sigma_w^2 ||x||^2, 4 sigma_w^4 ||x||^4 / n)
inline InitMoments init_moments(int n, double p, double sigma_w2, double x_norm, double y) {
    const double x2 = x_norm * x_norm;
    return {-y, sigma_w2 * sigma_w2 * x2 / std::pow(double(n), p),
            2.0 * sigma_w2 * x2, 4.0 * sigma_w2 * sigma_w2 * x2 * x2 / double(n)};
}

inline void trajectory_to_csv(const Trajectory& tr, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "t,delta_f,lambda,beta,loss\n";
    for (std::size_t t = 0; t < tr.states.size(); ++t) {
        out << t << ',' << fmt(tr.states[t].delta_f) << ',' << fmt(tr.states[t].lam)
            << ',' << fmt(tr.betas[t]) << ',' << fmt(tr.losses[t]) << '\n';
    }
}

}  // namespace uvlab
