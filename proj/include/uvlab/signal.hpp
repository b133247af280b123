#pragma once

#include <cmath>
#include <complex>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uvlab/util.hpp"

namespace uvlab {

/// Subtract the mean, divide by the population standard deviation.
/// A constant signal has no spectrum under this contract and is rejected.
inline std::vector<double> standardize_series(std::span<const double> x) {
    if (x.size() < 2) throw std::invalid_argument("standardize_series: need at least 2 samples");
    double mu = 0.0;
    for (double v : x) mu += v;
    mu /= double(x.size());
    double var = 0.0;
    for (double v : x) var += (v - mu) * (v - mu);
    var /= double(x.size());
    if (var == 0.0) throw std::invalid_argument("standardize_series: zero variance");
    const double sd = std::sqrt(var);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mu) / sd;
    return out;
}

/// P(w) = |F(w)|^2 with F(w) = (1/T) sum_t x(t) exp(-i 2 pi w t / T).
/// With this normalization, sum_w P(w) = (1/T) sum_t x(t)^2 (the variance of
/// a standardized signal). Direct O(T^2) transform; plenty at T ~ 1e3.
inline std::vector<double> power_spectrum(std::span<const double> x, bool standardize = false) {
    std::vector<double> buf;
    if (standardize) {
        buf = standardize_series(x);
        x = buf;
    }
    const std::size_t t_len = x.size();
    std::vector<double> p(t_len, 0.0);
    const double two_pi = 2.0 * 3.14159265358979323846;
    for (std::size_t w = 0; w < t_len; ++w) {
        std::complex<double> acc(0.0, 0.0);
        const double base = -two_pi * double(w) / double(t_len);
        for (std::size_t t = 0; t < t_len; ++t) {
            const double ang = base * double(t);
            acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        acc /= double(t_len);
        p[w] = std::norm(acc);
    }
    return p;
}

/// Smallest p <= max_period with |x(t+p) - x(t)| <= tol*(1 + |x(t)|) over the
/// examined tail (last half by default); nullopt if none fits.
inline std::optional<int> detect_period(std::span<const double> x, int max_period, double tol,
                                        std::size_t tail = 0) {
    if (max_period < 1) throw std::invalid_argument("detect_period: max_period must be >= 1");
    if (x.size() < 2 * static_cast<std::size_t>(max_period))
        throw std::invalid_argument("detect_period: series shorter than 2*max_period");
    if (tail == 0 || tail > x.size()) tail = x.size() / 2;
    tail = std::max<std::size_t>(tail, 2 * static_cast<std::size_t>(max_period));
    const std::size_t start = x.size() - std::min(tail, x.size());
    for (int p = 1; p <= max_period; ++p) {
        bool ok = true;
        for (std::size_t t = start; t + static_cast<std::size_t>(p) < x.size(); ++t) {
            if (std::abs(x[t + p] - x[t]) > tol * (1.0 + std::abs(x[t]))) {
                ok = false;
                break;
            }
        }
        if (ok) return p;
    }
    return std::nullopt;
}

/// Number of occupied histogram bins (width `bin_width`, anchored at the
/// smallest value).
inline std::size_t band_count(std::span<const double> values, double bin_width) {
    if (!(bin_width > 0.0)) throw std::invalid_argument("band_count: bin_width must be > 0");
    if (values.empty()) return 0;
    double lo = values[0];
    for (double v : values) lo = std::min(lo, v);
    std::set<long long> bins;
    for (double v : values) bins.insert(static_cast<long long>(std::floor((v - lo) / bin_width)));
    return bins.size();
}

inline void spectrum_to_csv(std::span<const double> p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "omega,power\n";
    for (std::size_t w = 0; w < p.size(); ++w) out << w << ',' << fmt(p[w]) << '\n';
}

}  // namespace uvlab
