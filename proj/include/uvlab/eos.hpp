#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uvlab/signal.hpp"
#include "uvlab/uv_core.hpp"
#include "uvlab/util.hpp"

namespace uvlab {

/// One step of the scalar dynamics on the EoS manifold:
///   M(df) = df + u (u - 2) (df + y),  u = eta * k * df
/// (u equals eta*df / (eta_c*y) with eta_c = sqrt(n_eff)/(||x|| y)).
inline double manifold_map(double df, const UVHyper& h) {
    const double u = h.eta * h.k() * df;
    return df + u * (u - 2.0) * (df + h.y);
}

/// The manifold couples the two coordinates: lambda = 2 ||x|| (df + y) / sqrt(n_eff).
inline double manifold_lambda(double df, const UVHyper& h) {
    return 2.0 * h.k() * (df + h.y);
}

/// Loss restricted to the manifold, as a function of lambda:
///   (y^2/2) (eta_c lambda / 2 - 1)^2, sub-quadratic near its minimum.
inline double manifold_loss(double lam, const UVHyper& h) {
    const double eta_c = 1.0 / (h.k() * h.y);
    const double z = eta_c * lam / 2.0 - 1.0;
    return 0.5 * h.y * h.y * z * z;
}

/// Existence thresholds of the period-two cycles of the manifold map:
/// eta_1 = sqrt(n_eff)/(||x|| y) (equal to eta_c) and
/// eta_2 = (sqrt(32) - 2)/2 * sqrt(n_eff)/(||x|| y).
inline std::array<double, 2> period2_onset(const UVHyper& h) {
    if (!(h.y > 0.0)) throw std::invalid_argument("period2_onset: requires y > 0");
    const double base = 1.0 / (h.k() * h.y);
    return {base, (std::sqrt(32.0) - 2.0) / 2.0 * base};
}

namespace detail {

inline double manifold_map_derivative(double df, const UVHyper& h) {
    const double ek = h.eta * h.k();
    const double u = ek * df;
    // d/d df [df + u(u-2)(df+y)]
    return 1.0 + ek * (2.0 * u - 2.0) * (df + h.y) + u * (u - 2.0);
}

inline double iterate_manifold(double x, const UVHyper& h, int times) {
    for (int i = 0; i < times; ++i) x = manifold_map(x, h);
    return x;
}

inline FunctionState iterate_full(FunctionState s, const UVHyper& h, int times) {
    for (int i = 0; i < times; ++i) s = step_function_space(s, h);
    return s;
}

inline std::vector<int> proper_divisors(int p) {
    std::vector<int> d;
    for (int q = 1; q < p; ++q)
        if (p % q == 0) d.push_back(q);
    return d;
}

}  // namespace detail

/// Period-p points of the manifold map found by damped Newton iteration on
/// M^p(x) - x from the supplied guesses. Each returned point satisfies
/// |M^p(x) - x| <= 1e-10 and is at least 1e-8 away from being fixed by any
/// proper-divisor power. Points are deduplicated and sorted; an empty result
/// means nothing was found within the iteration budget.
inline std::vector<double> find_period_orbit_manifold(const UVHyper& h, int period,
                                                      std::span<const double> guesses,
                                                      int max_iter = 100) {
    if (period < 1) throw std::invalid_argument("find_period_orbit: period must be >= 1");
    const double residual_tol = 1e-12;
    const double accept_tol = 1e-10;
    const double separation = 1e-8;
    const auto divisors = detail::proper_divisors(period);

    auto g = [&](double x) { return detail::iterate_manifold(x, h, period) - x; };
    auto gprime = [&](double x) {
        double d = 1.0;
        double z = x;
        for (int i = 0; i < period; ++i) {
            d *= detail::manifold_map_derivative(z, h);
            z = manifold_map(z, h);
        }
        return d - 1.0;
    };

    std::vector<double> roots;
    auto try_accept = [&](double x) {
        if (!std::isfinite(x) || std::abs(g(x)) > accept_tol) return;
        for (int q : divisors)
            if (std::abs(detail::iterate_manifold(x, h, q) - x) <= separation) return;
        for (double r : roots)
            if (std::abs(r - x) <= separation) return;
        roots.push_back(x);
    };

    auto polish_and_accept = [&](double x) {
        double gx = g(x);
        for (int it = 0; it < max_iter && std::abs(gx) > residual_tol; ++it) {
            const double d = gprime(x);
            if (d == 0.0 || !std::isfinite(d)) break;
            double step = gx / d;
            // backtracking line search on |g|
            double xn = x - step;
            double gn = g(xn);
            int halvings = 0;
            while ((!std::isfinite(gn) || std::abs(gn) > std::abs(gx)) && halvings < 48) {
                step *= 0.5;
                xn = x - step;
                gn = g(xn);
                ++halvings;
            }
            if (!std::isfinite(gn) || std::abs(gn) >= std::abs(gx)) break;
            x = xn;
            gx = gn;
        }
        try_accept(x);
    };

    for (double x0 : guesses) {
        polish_and_accept(x0);
    }
    // orbit companions of found roots are roots too
    std::vector<double> companions;
    for (double r : roots) {
        double z = r;
        for (int i = 1; i < period; ++i) {
            z = manifold_map(z, h);
            companions.push_back(z);
        }
    }
    for (double c : companions) polish_and_accept(c);
    std::sort(roots.begin(), roots.end());
    return roots;
}

/// Two-variable analogue for the full map; Newton with a finite-difference
/// Jacobian of M^p.
inline std::vector<FunctionState> find_period_orbit_full(const UVHyper& h, int period,
                                                         std::span<const FunctionState> guesses,
                                                         int max_iter = 100) {
    if (period < 1) throw std::invalid_argument("find_period_orbit: period must be >= 1");
    const double residual_tol = 1e-12;
    const double accept_tol = 1e-10;
    const double separation = 1e-8;
    const auto divisors = detail::proper_divisors(period);

    auto g = [&](FunctionState s) {
        FunctionState r = detail::iterate_full(s, h, period);
        return std::array<double, 2>{r.delta_f - s.delta_f, r.lam - s.lam};
    };
    auto gnorm = [&](const std::array<double, 2>& v) {
        return std::max(std::abs(v[0]), std::abs(v[1]));
    };

    std::vector<FunctionState> roots;
    auto try_accept = [&](FunctionState s) {
        if (!std::isfinite(s.delta_f) || !std::isfinite(s.lam)) return;
        if (gnorm(g(s)) > accept_tol) return;
        for (int q : divisors) {
            FunctionState r = detail::iterate_full(s, h, q);
            if (std::max(std::abs(r.delta_f - s.delta_f), std::abs(r.lam - s.lam)) <= separation)
                return;
        }
        for (const auto& r : roots)
            if (std::max(std::abs(r.delta_f - s.delta_f), std::abs(r.lam - s.lam)) <= separation)
                return;
        roots.push_back(s);
    };

    auto solve_from = [&](FunctionState s) {
        auto gs = g(s);
        for (int it = 0; it < max_iter && gnorm(gs) > residual_tol; ++it) {
            // finite-difference Jacobian of g
            std::array<std::array<double, 2>, 2> j{};
            const double coord[2] = {s.delta_f, s.lam};
            for (int c = 0; c < 2; ++c) {
                const double hstep = 1e-7 * std::max(1.0, std::abs(coord[c]));
                FunctionState sp = s, sm = s;
                (c == 0 ? sp.delta_f : sp.lam) += hstep;
                (c == 0 ? sm.delta_f : sm.lam) -= hstep;
                auto gp = g(sp), gm = g(sm);
                j[0][c] = (gp[0] - gm[0]) / (2.0 * hstep);
                j[1][c] = (gp[1] - gm[1]) / (2.0 * hstep);
            }
            const double det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if (det == 0.0 || !std::isfinite(det)) break;
            double dx = (gs[0] * j[1][1] - gs[1] * j[0][1]) / det;
            double dl = (gs[1] * j[0][0] - gs[0] * j[1][0]) / det;
            FunctionState sn{s.delta_f - dx, s.lam - dl};
            auto gn = g(sn);
            int halvings = 0;
            while ((!std::isfinite(gn[0]) || !std::isfinite(gn[1]) || gnorm(gn) > gnorm(gs)) &&
                   halvings < 48) {
                dx *= 0.5;
                dl *= 0.5;
                sn = {s.delta_f - dx, s.lam - dl};
                gn = g(sn);
                ++halvings;
            }
            if (!std::isfinite(gn[0]) || !std::isfinite(gn[1]) || gnorm(gn) >= gnorm(gs)) break;
            s = sn;
            gs = gn;
        }
        try_accept(s);
    };

    for (const auto& s0 : guesses) solve_from(s0);
    std::vector<FunctionState> companions;
    for (const auto& r : roots) {
        FunctionState z = r;
        for (int i = 1; i < period; ++i) {
            z = step_function_space(z, h);
            companions.push_back(z);
        }
    }
    for (const auto& c : companions) solve_from(c);
    std::sort(roots.begin(), roots.end(),
              [](const FunctionState& a, const FunctionState& b) { return a.delta_f < b.delta_f; });
    return roots;
}

enum class MapKind { manifold, full };

struct BifurcationEntry {
    double eta = 0.0;
    std::vector<double> raw;       // recorded lambda values, in time order
    std::vector<double> distinct;  // raw deduplicated with bin_tol
    bool diverged = false;
    std::optional<int> period;     // nullopt = aperiodic
};

struct BifurcationDiagram {
    std::vector<BifurcationEntry> entries;
};

struct BifurcationConfig {
    MapKind kind = MapKind::manifold;
    UVHyper base;                       // eta is overwritten per sample
    double eta_min = 0.0, eta_max = 0.0;
    int eta_count = 2;
    double init_df = 0.0;               // manifold start
    FunctionState init_state;           // full-model start
    long transient = 50000;
    long record = 1000;
    double bin_tol = 1e-6;
    double divergence_threshold = kDivergenceThreshold;
    int max_period = 32;
    double period_tol = 1e-6;
    int threads = 1;
};

namespace detail {

inline std::vector<double> dedup_binned(std::vector<double> v, double bin_tol) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double x : v) {
        if (out.empty() || x - out.back() > bin_tol) out.push_back(x);
    }
    return out;
}

}  // namespace detail

/// Late-time lambda values over a learning-rate scan: iterate from the given
/// start, discard the transient, record `record` lambda values, flag
/// divergence, and label the detected period of the recorded series.
inline BifurcationDiagram bifurcation(const BifurcationConfig& cfg) {
    if (cfg.eta_count < 2) throw std::invalid_argument("bifurcation: eta_count must be >= 2");
    if (cfg.transient < 1 || cfg.record < 1)
        throw std::invalid_argument("bifurcation: transient and record must be >= 1");
    BifurcationDiagram diagram;
    diagram.entries.resize(static_cast<std::size_t>(cfg.eta_count));
    parallel_for(static_cast<std::size_t>(cfg.eta_count), cfg.threads, [&](std::size_t i) {
        BifurcationEntry e;
        e.eta = cfg.eta_min + (cfg.eta_max - cfg.eta_min) * double(i) / double(cfg.eta_count - 1);
        UVHyper h = cfg.base;
        h.eta = e.eta;
        const double thr = cfg.divergence_threshold;
        auto bad = [&](double value) { return !std::isfinite(value) || std::abs(value) > thr; };
        if (cfg.kind == MapKind::manifold) {
            double x = cfg.init_df;
            for (long t = 0; t < cfg.transient && !e.diverged; ++t) {
                x = manifold_map(x, h);
                if (bad(x)) e.diverged = true;
            }
            if (!e.diverged) {
                e.raw.reserve(static_cast<std::size_t>(cfg.record));
                for (long t = 0; t < cfg.record; ++t) {
                    e.raw.push_back(manifold_lambda(x, h));
                    x = manifold_map(x, h);
                    if (bad(x)) {
                        e.diverged = true;
                        break;
                    }
                }
            }
        } else {
            FunctionState s = cfg.init_state;
            for (long t = 0; t < cfg.transient && !e.diverged; ++t) {
                s = step_function_space(s, h);
                if (bad(s.delta_f) || bad(s.lam)) e.diverged = true;
            }
            if (!e.diverged) {
                e.raw.reserve(static_cast<std::size_t>(cfg.record));
                for (long t = 0; t < cfg.record; ++t) {
                    e.raw.push_back(s.lam);
                    s = step_function_space(s, h);
                    if (bad(s.delta_f) || bad(s.lam)) {
                        e.diverged = true;
                        break;
                    }
                }
            }
        }
        if (e.diverged) {
            e.raw.clear();
        } else {
            e.distinct = detail::dedup_binned(e.raw, cfg.bin_tol);
            const int mp = std::min<int>(cfg.max_period, static_cast<int>(e.raw.size() / 2));
            if (mp >= 1) e.period = detect_period(e.raw, mp, cfg.period_tol);
        }
        diagram.entries[i] = std::move(e);
    });
    return diagram;
}

inline void bifurcation_to_csv(const BifurcationDiagram& d, const std::string& path,
                               bool raw = false) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "eta,lambda_value\n";
    for (const auto& e : d.entries) {
        const auto& vals = raw ? e.raw : e.distinct;
        for (double v : vals) out << fmt(e.eta) << ',' << fmt(v) << '\n';
    }
}

inline nlohmann::json bifurcation_to_json(const BifurcationDiagram& d) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : d.entries) {
        nlohmann::json j;
        j["eta"] = e.eta;
        j["diverged"] = e.diverged;
        if (e.period) j["period"] = *e.period;
        else j["period"] = "aperiodic";
        arr.push_back(j);
    }
    return arr;
}

}  // namespace uvlab
