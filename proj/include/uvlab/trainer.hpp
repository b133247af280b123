#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uvlab/mat.hpp"
#include "uvlab/util.hpp"

namespace uvlab {

enum class Activation { linear, relu };
enum class Parameterization { sp, interp };

/// Fully connected network without biases: `depth` weight matrices of
/// uniform hidden width. sp follows the standard layer scaling (inputs are
/// expected to satisfy ||x||^2 = d_in); interp(s) carries explicit n^(s/2)
/// input and n^(-s/2) output scales (inputs expected at ||x|| = 1), with
/// s = 1 the maximal-update case. The last layer is always N(0, 1/n).
struct NetworkConfig {
    int depth = 2;  // number of weight matrices, >= 2
    int width = 32;
    Activation activation = Activation::linear;
    Parameterization param = Parameterization::interp;
    double s = 1.0;          // used by interp only
    double sigma_w2 = 1.0;   // variance scale of the non-final layers

    double first_scale() const {
        return param == Parameterization::interp ? std::pow(double(width), s / 2.0) : 1.0;
    }
    double last_scale() const {
        return param == Parameterization::interp ? std::pow(double(width), -s / 2.0) : 1.0;
    }
};

struct NetParams {
    std::vector<Mat> w;

    std::size_t count() const {
        std::size_t n = 0;
        for (const auto& m : w) n += m.a.size();
        return n;
    }
};

struct Dataset {
    Mat x;  // P x d_in
    Mat y;  // P x d_out
};

// vector-space helpers over parameter sets
inline double params_dot(const NetParams& a, const NetParams& b) {
    double s = 0.0;
    for (std::size_t l = 0; l < a.w.size(); ++l)
        for (std::size_t i = 0; i < a.w[l].a.size(); ++i) s += a.w[l].a[i] * b.w[l].a[i];
    return s;
}

inline double params_norm(const NetParams& a) { return std::sqrt(params_dot(a, a)); }

inline void params_axpy(NetParams& dst, const NetParams& src, double alpha) {
    for (std::size_t l = 0; l < dst.w.size(); ++l)
        for (std::size_t i = 0; i < dst.w[l].a.size(); ++i) dst.w[l].a[i] += alpha * src.w[l].a[i];
}

inline NetParams init_network(const NetworkConfig& cfg, int d_in, int d_out,
                              std::mt19937_64& rng) {
    if (cfg.depth < 2) throw std::invalid_argument("init_network: depth must be >= 2");
    if (cfg.width < 1 || d_in < 1 || d_out < 1)
        throw std::invalid_argument("init_network: dimensions must be >= 1");
    const int n = cfg.width;
    NetParams p;
    p.w.reserve(static_cast<std::size_t>(cfg.depth));
    for (int l = 0; l < cfg.depth; ++l) {
        const std::size_t rows = (l == cfg.depth - 1) ? std::size_t(d_out) : std::size_t(n);
        const std::size_t cols = (l == 0) ? std::size_t(d_in) : std::size_t(n);
        double var;
        if (l == cfg.depth - 1) var = 1.0 / n;
        else if (l == 0)
            var = cfg.param == Parameterization::interp ? cfg.sigma_w2 / std::pow(double(n), cfg.s)
                                                        : cfg.sigma_w2 / d_in;
        else var = cfg.sigma_w2 / n;
        Mat m(rows, cols);
        std::normal_distribution<double> g(0.0, std::sqrt(var));
        for (double& e : m.a) e = g(rng);
        p.w.push_back(std::move(m));
    }
    return p;
}

namespace detail {

struct ForwardCache {
    std::vector<Mat> z;  // pre-activations per layer
    std::vector<Mat> a;  // post-activations; a[0] is the input
};

inline void apply_activation(Mat& m, Activation act) {
    if (act == Activation::relu)
        for (double& v : m.a) v = v > 0.0 ? v : 0.0;
}

inline Mat forward_impl(const NetParams& p, const NetworkConfig& cfg, const Mat& x,
                        ForwardCache* cache) {
    if (p.w.empty() || x.cols != p.w[0].cols)
        throw std::invalid_argument("forward: dimension mismatch");
    const std::size_t d = p.w.size();
    Mat act = x;
    if (cache) cache->a.push_back(x);
    for (std::size_t l = 0; l < d; ++l) {
        Mat z = matmul_nt(act, p.w[l]);
        double scale = 1.0;
        if (l == 0) scale = cfg.first_scale();
        if (l == d - 1) scale *= cfg.last_scale();
        if (scale != 1.0)
            for (double& v : z.a) v *= scale;
        if (cache) cache->z.push_back(z);
        if (l + 1 < d) {
            apply_activation(z, cfg.activation);
            if (cache) cache->a.push_back(z);
        }
        act = std::move(z);
    }
    return act;  // output layer is linear
}

}  // namespace detail

inline Mat forward(const NetParams& p, const NetworkConfig& cfg, const Mat& x) {
    return detail::forward_impl(p, cfg, x, nullptr);
}

/// MSE loss (1/(2P)) sum_mu ||f(x_mu) - y_mu||^2 and its exact reverse-mode
/// gradient. The relu subgradient at 0 is taken as 0.
inline std::pair<double, NetParams> loss_and_grad(const NetParams& p, const NetworkConfig& cfg,
                                                  const Mat& x, const Mat& y) {
    if (x.rows != y.rows) throw std::invalid_argument("loss_and_grad: row counts differ");
    const std::size_t d = p.w.size();
    const std::size_t pn = x.rows;
    detail::ForwardCache cache;
    Mat f = detail::forward_impl(p, cfg, x, &cache);
    if (f.cols != y.cols) throw std::invalid_argument("loss_and_grad: output dim mismatch");

    double loss = 0.0;
    Mat g(f.rows, f.cols);  // dL/dZ_last = (f - y)/P
    for (std::size_t i = 0; i < f.a.size(); ++i) {
        const double r = f.a[i] - y.a[i];
        loss += r * r;
        g.a[i] = r / double(pn);
    }
    loss /= 2.0 * double(pn);

    NetParams grad;
    grad.w.resize(d);
    for (std::size_t li = d; li-- > 0;) {
        double scale = 1.0;
        if (li == 0) scale = cfg.first_scale();
        if (li == d - 1) scale *= cfg.last_scale();
        // dL/dW_l = scale * g^T a_{l-1}
        grad.w[li] = matmul_tn(g, cache.a[li]);
        if (scale != 1.0)
            for (double& v : grad.w[li].a) v *= scale;
        if (li > 0) {
            Mat ga = matmul_nn(g, p.w[li]);  // dL/dA_{l-1}
            if (scale != 1.0)
                for (double& v : ga.a) v *= scale;
            if (cfg.activation == Activation::relu) {
                const Mat& z = cache.z[li - 1];
                for (std::size_t i = 0; i < ga.a.size(); ++i)
                    if (z.a[i] <= 0.0) ga.a[i] = 0.0;
            }
            g = std::move(ga);
        }
    }
    return {loss, std::move(grad)};
}

/// Hessian-vector product by a central difference of the exact gradient:
///   (grad(theta + eps v_hat) - grad(theta - eps v_hat)) / (2 eps) * ||v||,
/// eps = 1e-4 (1 + ||theta||).
inline NetParams hvp(const NetParams& p, const NetworkConfig& cfg, const Mat& x, const Mat& y,
                     const NetParams& v) {
    const double vn = params_norm(v);
    if (vn == 0.0) throw std::invalid_argument("hvp: zero direction");
    const double eps = 1e-4 * (1.0 + params_norm(p));
    NetParams plus = p, minus = p;
    params_axpy(plus, v, eps / vn);
    params_axpy(minus, v, -eps / vn);
    NetParams gp = loss_and_grad(plus, cfg, x, y).second;
    const NetParams gm = loss_and_grad(minus, cfg, x, y).second;
    for (std::size_t l = 0; l < gp.w.size(); ++l)
        for (std::size_t i = 0; i < gp.w[l].a.size(); ++i)
            gp.w[l].a[i] = (gp.w[l].a[i] - gm.w[l].a[i]) * (vn / (2.0 * eps));
    return gp;
}

struct SharpnessEstimate {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Power iteration on the Hessian from a seeded random unit start, Rayleigh
/// quotient per iterate, stopping when successive estimates agree to `tol`
/// relatively (default m_max = 100, tol = 1e-6; a fixed m = 20 preset can be
/// had by passing m_max = 20, tol = 0). Returns the dominant-magnitude
/// eigenvalue estimate, which may be negative; non-convergence returns the
/// last estimate, flagged.
inline SharpnessEstimate sharpness(const NetParams& p, const NetworkConfig& cfg, const Mat& x,
                                   const Mat& y, int m_max, double tol, std::mt19937_64& rng) {
    if (m_max < 1) throw std::invalid_argument("sharpness: m_max must be >= 1");
    NetParams v;
    v.w.reserve(p.w.size());
    std::normal_distribution<double> g(0.0, 1.0);
    for (const auto& m : p.w) {
        Mat r(m.rows, m.cols);
        for (double& e : r.a) e = g(rng);
        v.w.push_back(std::move(r));
    }
    double n0 = params_norm(v);
    for (auto& m : v.w)
        for (double& e : m.a) e /= n0;

    SharpnessEstimate est;
    double prev = 0.0;
    for (int m = 1; m <= m_max; ++m) {
        NetParams hv = hvp(p, cfg, x, y, v);
        const double rayleigh = params_dot(v, hv);
        est.value = rayleigh;
        est.iterations = m;
        if (m > 1 && std::abs(rayleigh - prev) <= tol * std::max(std::abs(rayleigh), 1e-300)) {
            est.converged = true;
            break;
        }
        prev = rayleigh;
        const double hn = params_norm(hv);
        if (hn == 0.0) {  // v is in the kernel; 0 is exact
            est.value = 0.0;
            est.converged = true;
            break;
        }
        for (auto& mm : hv.w)
            for (double& e : mm.a) e /= hn;
        v = std::move(hv);
    }
    return est;
}

struct WeightNorms {
    double total = 0.0;
    std::vector<double> per_layer;
};

inline WeightNorms weight_norms(const NetParams& p) {
    WeightNorms n;
    double sq = 0.0;
    for (const auto& m : p.w) {
        const double f = m.frobenius_norm();
        n.per_layer.push_back(f);
        sq += f * f;
    }
    n.total = std::sqrt(sq);
    return n;
}

struct LrSpec {
    bool absolute = false;
    double value = 0.0;  // c when !absolute, eta otherwise

    static LrSpec constant(double c) { return {false, c}; }
    static LrSpec absolute_eta(double eta) { return {true, eta}; }
};

struct TrainMeasurement {
    long step = 0;
    double sharpness = 0.0;
    bool sharpness_converged = false;
    double weight_norm_total = 0.0;
    std::vector<double> weight_norm_per_layer;
};

struct TrainLog {
    std::vector<double> losses;  // losses[t] = loss at the parameters of step t
    std::vector<TrainMeasurement> measurements;
    double eta = 0.0;       // realized learning rate
    double lambda0_h = 0.0; // sharpness at step 0 on the full dataset
    bool diverged = false;
    long diverged_at = -1;
};

/// Plain GD theta <- theta - eta grad, full batch by default. With a batch
/// size, each epoch walks sequential disjoint batches of a freshly shuffled
/// permutation. Sharpness (always on the full dataset) and weight norms are
/// recorded every `measure_every` steps; a non-finite loss truncates the log
/// with the divergence marker. `params` is trained in place so runs can be
/// chained.
inline TrainLog train(NetParams& params, const NetworkConfig& cfg, const Dataset& data,
                      LrSpec lr, long steps, std::optional<long> batch_size, long measure_every,
                      std::mt19937_64& rng, int sharpness_m_max = 100,
                      double sharpness_tol = 1e-6) {
    if (steps < 1) throw std::invalid_argument("train: steps must be >= 1");
    if (measure_every < 1) throw std::invalid_argument("train: measure_every must be >= 1");
    const long pn = static_cast<long>(data.x.rows);
    if (batch_size && (*batch_size < 1 || *batch_size > pn))
        throw std::invalid_argument("train: batch_size must be in [1, P]");

    TrainLog log;
    log.lambda0_h = sharpness(params, cfg, data.x, data.y, sharpness_m_max, sharpness_tol, rng).value;
    if (lr.absolute) {
        log.eta = lr.value;
    } else {
        if (!(log.lambda0_h > 0.0))
            throw std::domain_error("train: lambda0 <= 0, cannot scale eta = c / lambda0");
        log.eta = lr.value / log.lambda0_h;
    }

    auto measure = [&](long step, std::optional<double> known_sharpness) {
        TrainMeasurement m;
        m.step = step;
        if (known_sharpness) {
            m.sharpness = *known_sharpness;
            m.sharpness_converged = true;
        } else {
            const SharpnessEstimate e =
                sharpness(params, cfg, data.x, data.y, sharpness_m_max, sharpness_tol, rng);
            m.sharpness = e.value;
            m.sharpness_converged = e.converged;
        }
        const WeightNorms n = weight_norms(params);
        m.weight_norm_total = n.total;
        m.weight_norm_per_layer = n.per_layer;
        log.measurements.push_back(std::move(m));
    };
    measure(0, log.lambda0_h);

    // batch bookkeeping
    std::vector<std::size_t> perm;
    std::size_t cursor = 0;
    const long bsz = batch_size.value_or(pn);
    Mat bx, by;
    auto next_batch = [&]() -> std::pair<const Mat*, const Mat*> {
        if (bsz >= pn) return {&data.x, &data.y};
        if (perm.empty() || cursor >= perm.size()) {
            perm.resize(static_cast<std::size_t>(pn));
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            std::shuffle(perm.begin(), perm.end(), rng);
            cursor = 0;
        }
        const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(bsz),
                                                       perm.size() - cursor);
        bx = Mat(take, data.x.cols);
        by = Mat(take, data.y.cols);
        for (std::size_t r = 0; r < take; ++r) {
            const std::size_t src = perm[cursor + r];
            for (std::size_t c = 0; c < data.x.cols; ++c) bx(r, c) = data.x(src, c);
            for (std::size_t c = 0; c < data.y.cols; ++c) by(r, c) = data.y(src, c);
        }
        cursor += take;
        return {&bx, &by};
    };

    for (long t = 0; t < steps; ++t) {
        auto [px, py] = next_batch();
        auto [loss, grad] = loss_and_grad(params, cfg, *px, *py);
        log.losses.push_back(loss);
        if (!std::isfinite(loss)) {
            log.diverged = true;
            log.diverged_at = t;
            break;
        }
        params_axpy(params, grad, -log.eta);
        if ((t + 1) % measure_every == 0) measure(t + 1, std::nullopt);
    }
    return log;
}

enum class PhaseAxisKind { sigma_w2, s };

struct PhaseCell {
    double axis1 = 0.0;
    double c = 0.0;
    double value = 0.0;  // eta * mean(lambda_H over tail) / 2
    bool diverged = false;
};

struct PhaseDiagramResult {
    PhaseAxisKind axis = PhaseAxisKind::sigma_w2;
    std::vector<PhaseCell> cells;  // row-major over (axis1, c)
};

/// EoS heatmap over (sigma_w^2 | s) x c: each cell trains from a seed derived
/// from the base seed and the cell index and reports eta * mean lambda_H / 2
/// over the last `tail` sampled measurements.
inline PhaseDiagramResult eos_phase_diagram(PhaseAxisKind axis, std::span<const double> axis_values,
                                            std::span<const double> c_values,
                                            const NetworkConfig& tmpl, const Dataset& data,
                                            long steps, int tail, long measure_every,
                                            std::uint64_t base_seed, int threads = 1) {
    if (axis_values.empty() || c_values.empty())
        throw std::invalid_argument("eos_phase_diagram: grids must be non-empty");
    if (tail < 1 || tail > steps)
        throw std::invalid_argument("eos_phase_diagram: tail must be in [1, steps]");
    PhaseDiagramResult res;
    res.axis = axis;
    const std::size_t total = axis_values.size() * c_values.size();
    res.cells.resize(total);
    const int d_in = static_cast<int>(data.x.cols);
    const int d_out = static_cast<int>(data.y.cols);
    parallel_for(total, threads, [&](std::size_t idx) {
        const std::size_t ai = idx / c_values.size();
        const std::size_t ci = idx % c_values.size();
        PhaseCell cell;
        cell.axis1 = axis_values[ai];
        cell.c = c_values[ci];
        NetworkConfig cfg = tmpl;
        if (axis == PhaseAxisKind::sigma_w2) cfg.sigma_w2 = cell.axis1;
        else {
            cfg.param = Parameterization::interp;
            cfg.s = cell.axis1;
        }
        std::mt19937_64 rng(derive_seed(base_seed, idx));
        NetParams params = init_network(cfg, d_in, d_out, rng);
        try {
            TrainLog log = train(params, cfg, data, LrSpec::constant(cell.c), steps, std::nullopt,
                                 measure_every, rng);
            if (log.diverged || log.measurements.empty()) {
                cell.diverged = true;
            } else {
                const std::size_t m = log.measurements.size();
                const std::size_t use = std::min<std::size_t>(static_cast<std::size_t>(tail), m);
                double acc = 0.0;
                for (std::size_t i = m - use; i < m; ++i) acc += log.measurements[i].sharpness;
                cell.value = log.eta * (acc / double(use)) / 2.0;
                if (!std::isfinite(cell.value)) cell.diverged = true;
            }
        } catch (const std::domain_error&) {
            cell.diverged = true;
        }
        res.cells[idx] = cell;
    });
    return res;
}

inline void trainlog_to_csv(const TrainLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    std::size_t layers = 0;
    for (const auto& m : log.measurements) layers = std::max(layers, m.weight_norm_per_layer.size());
    out << "step,loss,sharpness,weight_norm_total";
    for (std::size_t l = 1; l <= layers; ++l) out << ",weight_norm_layer_" << l;
    out << '\n';
    std::size_t mi = 0;
    long last_step = static_cast<long>(log.losses.size()) - 1;
    if (!log.measurements.empty())
        last_step = std::max(last_step, log.measurements.back().step);
    for (long t = 0; t <= last_step; ++t) {
        out << t << ',';
        if (t < static_cast<long>(log.losses.size())) out << fmt(log.losses[t]);
        if (mi < log.measurements.size() && log.measurements[mi].step == t) {
            const auto& m = log.measurements[mi++];
            out << ',' << fmt(m.sharpness) << ',' << fmt(m.weight_norm_total);
            for (double v : m.weight_norm_per_layer) out << ',' << fmt(v);
        } else {
            out << ",,";
            for (std::size_t l = 0; l < layers; ++l) out << ',';
        }
        out << '\n';
    }
}

inline void phase_diagram_to_csv(const PhaseDiagramResult& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "axis1,c,value,diverged\n";
    for (const auto& cell : r.cells) {
        out << fmt(cell.axis1) << ',' << fmt(cell.c) << ',';
        if (!cell.diverged) out << fmt(cell.value);
        out << ',' << (cell.diverged ? 1 : 0) << '\n';
    }
}

}  // namespace uvlab
