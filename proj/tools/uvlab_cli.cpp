// Command-line front end: every analysis is a subcommand with seeded,
// config-driven, file-emitting runs. JSON for configs and reports, CSV for
// bulk numeric tables.

#include <CLI11.hpp>
#include <json.hpp>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "uvlab/uvlab.hpp"

namespace {

using nlohmann::json;

// Exit codes: 0 success, 1 usage/config error, 2 numeric divergence where the
// subcommand treats divergence as failure (uv-trajectory and train report
// divergence in-band instead).
struct DivergenceFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string scalar_to_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_null()) return "";
    return v.dump();
}

/// Flat JSON object config: keys are long option names of the subcommand,
/// values are scalars or arrays. Command-line flags override file values.
class JsonConfig : public CLI::Config {
  public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        json out = json::object();
        for (const CLI::Option* opt : app->get_options()) {
            if (!opt->get_configurable()) continue;
            const std::string name = opt->get_single_name();
            if (name.empty() || name == "help" || name == "config") continue;
            std::vector<std::string> vals;
            if (opt->count() > 0) {
                vals = opt->results();
            } else if (default_also) {
                const std::string d = opt->get_default_str();
                if (d.empty()) continue;
                vals.push_back(d);
            } else {
                continue;
            }
            auto to_scalar = [](const std::string& s) -> json {
                if (s == "true") return true;
                if (s == "false") return false;
                try {
                    std::size_t pos = 0;
                    const double d = std::stod(s, &pos);
                    if (pos == s.size()) return d;
                } catch (...) {
                }
                return s;
            };
            if (vals.size() == 1) {
                out[name] = to_scalar(vals.front());
            } else {
                json arr = json::array();
                for (const auto& v : vals) arr.push_back(to_scalar(v));
                out[name] = arr;
            }
        }
        return out.dump(2) + "\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
        json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw CLI::ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConfigError("config root must be a JSON object");
        std::vector<CLI::ConfigItem> items;
        for (auto it = j.begin(); it != j.end(); ++it) {
            CLI::ConfigItem item;
            item.name = it.key();
            if (it.value().is_array()) {
                for (const auto& v : it.value()) item.inputs.push_back(scalar_to_string(v));
            } else {
                item.inputs.push_back(scalar_to_string(it.value()));
            }
            items.push_back(std::move(item));
        }
        return items;
    }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
}

/// The resolved effective configuration, echoed next to each output.
void write_sidecar(const CLI::App* sub, const std::string& out_path) {
    if (out_path.empty()) return;
    write_text(out_path + ".config.json", JsonConfig{}.to_config(sub, true, false, ""));
}

int default_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : int(n);
}

// ---- shared option bundles -------------------------------------------------

struct HyperOpts {
    double eta = 0.5, xnorm = 1.0, neff = 1.0, y = 2.0;

    void attach(CLI::App* sub, bool with_eta = true) {
        if (with_eta) sub->add_option("--eta", eta, "learning rate")->check(CLI::PositiveNumber);
        sub->add_option("--xnorm", xnorm, "input norm")->check(CLI::PositiveNumber);
        sub->add_option("--neff", neff, "effective width (any positive real)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--y", y, "scalar target");
    }
    uvlab::UVHyper hyper() const { return {eta, xnorm, neff, y}; }
};

struct NetOpts {
    int depth = 2, width = 32, din = 8, dout = 1;
    std::string activation = "linear", param = "interp";
    double s = 1.0, sigma_w2 = 1.0;

    void attach(CLI::App* sub) {
        sub->add_option("--depth", depth, "weight layers (>= 2)")->check(CLI::Range(2, 64));
        sub->add_option("--width", width, "hidden width")->check(CLI::PositiveNumber);
        sub->add_option("--din", din, "input dimension")->check(CLI::PositiveNumber);
        sub->add_option("--dout", dout, "output dimension")->check(CLI::PositiveNumber);
        sub->add_option("--activation", activation, "linear | relu")
            ->check(CLI::IsMember({"linear", "relu"}));
        sub->add_option("--param", param, "sp | interp")->check(CLI::IsMember({"sp", "interp"}));
        sub->add_option("--s", s, "interpolation exponent in [0, 1]")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--sigma-w2", sigma_w2, "weight variance of non-final layers")
            ->check(CLI::PositiveNumber);
    }
    uvlab::NetworkConfig config() const {
        uvlab::NetworkConfig cfg;
        cfg.depth = depth;
        cfg.width = width;
        cfg.activation = activation == "relu" ? uvlab::Activation::relu : uvlab::Activation::linear;
        cfg.param = param == "sp" ? uvlab::Parameterization::sp : uvlab::Parameterization::interp;
        cfg.s = s;
        cfg.sigma_w2 = sigma_w2;
        return cfg;
    }
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

/// Dataset specs: single:NORM,Y | random:P | teacher:P | powerlaw:P,AX,BX,AY,BY | csv:PATH
uvlab::Dataset build_dataset(const std::string& spec, const NetOpts& net, bool header,
                             std::uint64_t data_seed) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    std::mt19937_64 rng(data_seed);
    try {
        if (kind == "single") {
            const auto args = split(rest, ',');
            if (args.size() != 2) throw std::runtime_error("expected single:NORM,Y");
            return uvlab::make_single_example(uvlab::parse_double(args[0]), net.din,
                                              uvlab::parse_double(args[1]));
        }
        if (kind == "random") {
            return uvlab::make_random(int(uvlab::parse_double(rest)), net.din, net.dout, rng);
        }
        if (kind == "teacher") {
            return uvlab::make_teacher_student(net.config(), int(uvlab::parse_double(rest)),
                                               net.din, net.dout, rng);
        }
        if (kind == "powerlaw") {
            const auto args = split(rest, ',');
            if (args.size() != 5) throw std::runtime_error("expected powerlaw:P,AX,BX,AY,BY");
            uvlab::PowerLawSpec pl{uvlab::parse_double(args[1]), uvlab::parse_double(args[2]),
                                   uvlab::parse_double(args[3]), uvlab::parse_double(args[4])};
            return uvlab::make_power_law(int(uvlab::parse_double(args[0])), net.din, net.dout, pl,
                                         rng);
        }
        if (kind == "csv") {
            return uvlab::load_csv(rest, net.din, net.dout, header);
        }
    } catch (const std::exception& e) {
        throw std::runtime_error("--dataset '" + spec + "': " + e.what());
    }
    throw std::runtime_error("--dataset: unknown kind '" + kind +
                             "' (single | random | teacher | powerlaw | csv)");
}

// ---- subcommands -----------------------------------------------------------

void add_uv_trajectory(CLI::App& app) {
    auto* sub = app.add_subcommand("uv-trajectory", "iterate the two-variable map, emit CSV");
    auto hy = std::make_shared<HyperOpts>();
    hy->attach(sub);
    struct P {
        double df0 = -2.0, lam0 = 1.0, threshold = uvlab::kDivergenceThreshold;
        long steps = 1000;
        std::uint64_t seed = 0;
        std::string out = "trajectory.csv";
    };
    auto p = std::make_shared<P>();
    sub->add_option("--df0", p->df0, "initial residual");
    sub->add_option("--lam0", p->lam0, "initial lambda")->check(CLI::NonNegativeNumber);
    sub->add_option("--steps", p->steps)->check(CLI::NonNegativeNumber);
    sub->add_option("--threshold", p->threshold, "divergence threshold")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", p->seed);
    sub->add_option("--out", p->out, "output CSV path");
    sub->callback([=] {
        const uvlab::Trajectory tr =
            uvlab::simulate({p->df0, p->lam0}, hy->hyper(), p->steps, p->threshold);
        uvlab::trajectory_to_csv(tr, p->out);
        json meta;
        meta["diverged"] = tr.diverged;  // divergence is reported in-band
        if (tr.diverged) meta["diverged_at"] = tr.diverged_at;
        meta["final_delta_f"] = tr.states.back().delta_f;
        meta["final_lambda"] = tr.states.back().lam;
        write_text(p->out + ".meta.json", meta.dump(2) + "\n");
        write_sidecar(sub, p->out);
    });
}

void add_uv_portrait(CLI::App& app) {
    auto* sub = app.add_subcommand("uv-portrait", "vector field, region labels and nullclines");
    auto hy = std::make_shared<HyperOpts>();
    hy->attach(sub);
    struct P {
        double df_min = -6.0, df_max = 6.0, lam_min = 0.0, lam_max = 14.0;
        int res = 100, field_steps = 1, samples = 200;
        long horizon = 1000;
        double threshold = uvlab::kDivergenceThreshold;
        int threads = default_threads();
        std::uint64_t seed = 0;
        std::string out = "portrait.csv", null_out = "nullclines.csv";
    };
    auto p = std::make_shared<P>();
    sub->add_option("--df-min", p->df_min);
    sub->add_option("--df-max", p->df_max);
    sub->add_option("--lam-min", p->lam_min);
    sub->add_option("--lam-max", p->lam_max);
    sub->add_option("--res", p->res, "cells per axis")->check(CLI::Range(2, 4096));
    sub->add_option("--field-steps", p->field_steps, "1 or 2 map applications for arrows")
        ->check(CLI::Range(1, 2));
    sub->add_option("--horizon", p->horizon, "steps for the divergence check")
        ->check(CLI::PositiveNumber);
    sub->add_option("--threshold", p->threshold)->check(CLI::PositiveNumber);
    sub->add_option("--nullcline-samples", p->samples)->check(CLI::Range(2, 100000));
    sub->add_option("--threads", p->threads)->check(CLI::PositiveNumber);
    sub->add_option("--seed", p->seed);
    sub->add_option("--out", p->out, "cells CSV");
    sub->add_option("--nullclines-out", p->null_out, "nullclines CSV");
    sub->callback([=] {
        const uvlab::UVHyper h = hy->hyper();
        uvlab::GridSpec spec{p->df_min, p->df_max, p->lam_min, p->lam_max, p->res};
        uvlab::PortraitGrid grid = uvlab::vector_field(spec, h, p->field_steps);
        uvlab::classify_grid(grid, h, p->horizon, p->threshold, p->threads);
        uvlab::portrait_to_csv(grid, p->out);
        std::vector<double> df;
        for (int i = 0; i < p->samples; ++i)
            df.push_back(p->df_min + (p->df_max - p->df_min) * i / (p->samples - 1));
        uvlab::nullclines_to_csv(uvlab::nullclines(h, df), p->null_out);
        write_sidecar(sub, p->out);
    });
}

void add_fixed_points(CLI::App& app) {
    auto* sub = app.add_subcommand("fixed-points", "closed-form fixed points with eigenpairs");
    auto hy = std::make_shared<HyperOpts>();
    hy->attach(sub);
    struct P {
        double line_lambda = -1.0;
        std::uint64_t seed = 0;
        std::string out;
    };
    auto p = std::make_shared<P>();
    sub->add_option("--line-lambda", p->line_lambda,
                    "lambda of the reported zero-loss line point (default: existence bound)");
    sub->add_option("--seed", p->seed);
    sub->add_option("--out", p->out, "output JSON path (stdout when omitted)");
    sub->callback([=] {
        const uvlab::UVHyper h = hy->hyper();
        const double lam = p->line_lambda < 0.0 ? uvlab::line_lambda_min(h) : p->line_lambda;
        const json j = uvlab::fixed_points_to_json(uvlab::fixed_points(h, lam));
        if (p->out.empty()) {
            std::cout << j.dump(2) << '\n';
        } else {
            write_text(p->out, j.dump(2) + "\n");
            write_sidecar(sub, p->out);
        }
    });
}

void add_uv_bifurcation(CLI::App& app) {
    auto* sub =
        app.add_subcommand("uv-bifurcation", "late-time lambda values over a learning-rate scan");
    auto hy = std::make_shared<HyperOpts>();
    hy->attach(sub, /*with_eta=*/false);
    struct P {
        std::string map = "manifold";
        double eta_min = 0.4, eta_max = 1.0;
        int count = 600;
        double df0 = 0.0, init_df = 0.0, init_lam = 1.0;
        long transient = 50000, record = 1000;
        double bin_tol = 1e-6, period_tol = 1e-6, threshold = uvlab::kDivergenceThreshold;
        int max_period = 32, threads = default_threads();
        std::uint64_t seed = 0;
        std::string out = "bifurcation.csv", json_out, raw_out;
    };
    auto p = std::make_shared<P>();
    sub->add_option("--map", p->map, "manifold | full")->check(CLI::IsMember({"manifold", "full"}));
    sub->add_option("--eta-min", p->eta_min)->check(CLI::PositiveNumber);
    sub->add_option("--eta-max", p->eta_max)->check(CLI::PositiveNumber);
    sub->add_option("--count", p->count, "eta samples")->check(CLI::Range(2, 1000000));
    auto* odf0 = sub->add_option("--df0", p->df0, "manifold-map start (default -y/4)");
    auto* oidf = sub->add_option("--init-df", p->init_df, "full-map start residual (default -y)");
    sub->add_option("--init-lam", p->init_lam, "full-map start lambda");
    sub->add_option("--transient", p->transient)->check(CLI::PositiveNumber);
    sub->add_option("--record", p->record)->check(CLI::PositiveNumber);
    sub->add_option("--bin-tol", p->bin_tol)->check(CLI::PositiveNumber);
    sub->add_option("--period-tol", p->period_tol)->check(CLI::PositiveNumber);
    sub->add_option("--max-period", p->max_period)->check(CLI::Range(1, 4096));
    sub->add_option("--threshold", p->threshold)->check(CLI::PositiveNumber);
    sub->add_option("--threads", p->threads)->check(CLI::PositiveNumber);
    sub->add_option("--seed", p->seed);
    sub->add_option("--out", p->out, "distinct late-time values CSV");
    sub->add_option("--json-out", p->json_out,
                    "per-eta period/divergence JSON (default <out>.periods.json)");
    sub->add_option("--raw-out", p->raw_out, "optional raw recorded values CSV");
    sub->callback([=] {
        uvlab::BifurcationConfig cfg;
        cfg.kind = p->map == "full" ? uvlab::MapKind::full : uvlab::MapKind::manifold;
        cfg.base = hy->hyper();
        cfg.base.eta = p->eta_min;
        cfg.eta_min = p->eta_min;
        cfg.eta_max = p->eta_max;
        cfg.eta_count = p->count;
        cfg.init_df = odf0->count() > 0 ? p->df0 : -hy->y / 4.0;
        cfg.init_state = {oidf->count() > 0 ? p->init_df : -hy->y, p->init_lam};
        cfg.transient = p->transient;
        cfg.record = p->record;
        cfg.bin_tol = p->bin_tol;
        cfg.period_tol = p->period_tol;
        cfg.max_period = p->max_period;
        cfg.divergence_threshold = p->threshold;
        cfg.threads = p->threads;
        const uvlab::BifurcationDiagram d = uvlab::bifurcation(cfg);
        uvlab::bifurcation_to_csv(d, p->out, false);
        if (!p->raw_out.empty()) uvlab::bifurcation_to_csv(d, p->raw_out, true);
        const std::string jpath = p->json_out.empty() ? p->out + ".periods.json" : p->json_out;
        write_text(jpath, uvlab::bifurcation_to_json(d).dump(2) + "\n");
        write_sidecar(sub, p->out);
    });
}

void add_train(CLI::App& app) {
    auto* sub = app.add_subcommand("train", "full-batch GD training with sharpness logging");
    auto net = std::make_shared<NetOpts>();
    net->attach(sub);
    struct P {
        std::string dataset = "single:1,2", out = "train.csv";
        double c = 0.0, eta = 0.0, tol = 1e-6;
        long steps = 1000, measure_every = 10, batch_size = 0;
        int m_max = 100;
        std::uint64_t seed = 0;
        bool header = false;
    };
    auto p = std::make_shared<P>();
    sub->add_option("--dataset", p->dataset,
                    "single:NORM,Y | random:P | teacher:P | powerlaw:P,AX,BX,AY,BY | csv:PATH");
    auto* oc = sub->add_option("--c", p->c, "learning-rate constant, eta = c / lambda0");
    auto* oeta = sub->add_option("--eta", p->eta, "absolute learning rate");
    oc->excludes(oeta);
    oeta->excludes(oc);
    sub->add_option("--steps", p->steps)->check(CLI::PositiveNumber);
    sub->add_option("--measure-every", p->measure_every)->check(CLI::PositiveNumber);
    sub->add_option("--batch-size", p->batch_size, "mini-batch size (0 = full batch)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--power-iters", p->m_max, "sharpness power-iteration cap")
        ->check(CLI::PositiveNumber);
    sub->add_option("--power-tol", p->tol)->check(CLI::PositiveNumber);
    sub->add_flag("--data-header", p->header, "csv dataset has a header row");
    sub->add_option("--seed", p->seed);
    sub->add_option("--out", p->out, "TrainLog CSV path");
    sub->callback([=] {
        if (oc->count() == 0 && oeta->count() == 0)
            throw CLI::ValidationError("train", "one of --c or --eta is required");
        const uvlab::Dataset ds =
            build_dataset(p->dataset, *net, p->header, uvlab::derive_seed(p->seed, 1));
        std::mt19937_64 init_rng(uvlab::derive_seed(p->seed, 2));
        uvlab::NetParams params = uvlab::init_network(net->config(), net->din, net->dout, init_rng);
        std::mt19937_64 train_rng(uvlab::derive_seed(p->seed, 3));
        const uvlab::LrSpec lr = oeta->count() > 0 ? uvlab::LrSpec::absolute_eta(p->eta)
                                                   : uvlab::LrSpec::constant(p->c);
        const uvlab::TrainLog log =
            uvlab::train(params, net->config(), ds, lr, p->steps,
                         p->batch_size > 0 ? std::optional<long>(p->batch_size) : std::nullopt,
                         p->measure_every, train_rng, p->m_max, p->tol);
        uvlab::trainlog_to_csv(log, p->out);
        json meta;
        meta["eta"] = log.eta;
        meta["lambda0_h"] = log.lambda0_h;
        meta["diverged"] = log.diverged;  // in-band divergence report
        if (log.diverged) meta["diverged_at"] = log.diverged_at;
        write_text(p->out + ".meta.json", meta.dump(2) + "\n");
        write_sidecar(sub, p->out);
    });
}

void add_phase_diagram(CLI::App& app) {
    auto* sub = app.add_subcommand("phase-diagram", "EoS heatmap over (sigma_w2 | s) x c");
    auto net = std::make_shared<NetOpts>();
    net->attach(sub);
    struct P {
        std::string axis = "sigma-w2", dataset = "random:128", out = "phase_diagram.csv";
        std::vector<double> axis_values{0.5, 1.0, 2.0, 3.0, 4.0};
        std::vector<double> c_values{0.5, 1.0, 2.0, 3.0, 4.0};
        long steps = 2000, measure_every = 50;
        int tail = 4, threads = default_threads();
        std::uint64_t seed = 0;
        bool header = false;
    };
    auto p = std::make_shared<P>();
    sub->add_option("--axis", p->axis, "sigma-w2 | s")->check(CLI::IsMember({"sigma-w2", "s"}));
    sub->add_option("--axis-values", p->axis_values)->delimiter(',')->expected(1, 10000);
    sub->add_option("--c-values", p->c_values)->delimiter(',')->expected(1, 10000);
    sub->add_option("--dataset", p->dataset);
    sub->add_option("--steps", p->steps)->check(CLI::PositiveNumber);
    sub->add_option("--tail", p->tail, "measurements averaged for lambda-bar")
        ->check(CLI::PositiveNumber);
    sub->add_option("--measure-every", p->measure_every)->check(CLI::PositiveNumber);
    sub->add_option("--threads", p->threads)->check(CLI::PositiveNumber);
    sub->add_flag("--data-header", p->header);
    sub->add_option("--seed", p->seed);
    sub->add_option("--out", p->out);
    sub->callback([=] {
        const uvlab::Dataset ds =
            build_dataset(p->dataset, *net, p->header, uvlab::derive_seed(p->seed, 1));
        const uvlab::PhaseAxisKind axis =
            p->axis == "s" ? uvlab::PhaseAxisKind::s : uvlab::PhaseAxisKind::sigma_w2;
        const uvlab::PhaseDiagramResult r = uvlab::eos_phase_diagram(
            axis, p->axis_values, p->c_values, net->config(), ds, p->steps, p->tail,
            p->measure_every, uvlab::derive_seed(p->seed, 4), p->threads);
        uvlab::phase_diagram_to_csv(r, p->out);
        write_sidecar(sub, p->out);
    });
}

void add_spectrum(CLI::App& app) {
    auto* sub = app.add_subcommand("spectrum", "power spectrum of a CSV column");
    struct P {
        std::string in, column = "sharpness", out = "spectrum.csv";
        long tail = 0;
        std::uint64_t seed = 0;
        bool raw = false;
    };
    auto p = std::make_shared<P>();
    sub->add_option("--in", p->in, "input CSV")->required();
    sub->add_option("--column", p->column, "column name or 0-based index");
    sub->add_option("--tail", p->tail, "use only the last N values (0 = all)")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--raw", p->raw, "skip standardization");
    sub->add_option("--seed", p->seed);
    sub->add_option("--out", p->out);
    sub->callback([=] {
        std::ifstream in(p->in);
        if (!in) throw std::runtime_error("cannot open: " + p->in);
        std::string line;
        if (!std::getline(in, line)) throw std::runtime_error(p->in + ": empty file");
        const auto header = split(line, ',');
        long col = -1;
        try {
            std::size_t pos = 0;
            col = std::stol(p->column, &pos);
            if (pos != p->column.size()) col = -1;
        } catch (...) {
            col = -1;
        }
        if (col < 0) {
            for (std::size_t i = 0; i < header.size(); ++i)
                if (header[i] == p->column) col = long(i);
        }
        if (col < 0 || col >= long(header.size()))
            throw std::runtime_error("--column '" + p->column + "' not found in " + p->in);
        std::vector<double> series;
        while (std::getline(in, line)) {
            const auto cells = split(line, ',');
            if (col >= long(cells.size())) continue;
            const std::string& cell = cells[std::size_t(col)];
            if (cell.empty()) continue;  // sparse measurement columns
            series.push_back(uvlab::parse_double(cell));
        }
        if (p->tail > 0 && long(series.size()) > p->tail)
            series.erase(series.begin(), series.end() - p->tail);
        if (series.size() < 2) throw std::runtime_error("column has fewer than 2 usable values");
        for (double v : series)
            if (!std::isfinite(v))
                throw DivergenceFailure("column contains non-finite values (diverged run)");
        const std::vector<double> spec = uvlab::power_spectrum(series, !p->raw);
        uvlab::spectrum_to_csv(spec, p->out);
        write_sidecar(sub, p->out);
    });
}

void add_dataset(CLI::App& app) {
    auto* sub = app.add_subcommand("dataset", "emit a synthetic dataset as CSV");
    auto net = std::make_shared<NetOpts>();
    net->attach(sub);
    struct P {
        std::string dataset = "random:128", out = "dataset.csv";
        std::uint64_t seed = 0;
        bool header = false, do_standardize = false, in_header = false;
    };
    auto p = std::make_shared<P>();
    sub->add_option("--dataset", p->dataset,
                    "single:NORM,Y | random:P | teacher:P | powerlaw:P,AX,BX,AY,BY | csv:PATH");
    sub->add_flag("--standardize", p->do_standardize, "standardize features before writing");
    sub->add_flag("--header", p->header, "write a header row");
    sub->add_flag("--data-header", p->in_header, "csv input has a header row");
    sub->add_option("--seed", p->seed);
    sub->add_option("--out", p->out);
    sub->callback([=] {
        uvlab::Dataset ds =
            build_dataset(p->dataset, *net, p->in_header, uvlab::derive_seed(p->seed, 1));
        if (p->do_standardize) ds = uvlab::standardize(ds).data;
        uvlab::dataset_to_csv(ds, p->out, p->header);
        write_sidecar(sub, p->out);
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for gradient-descent sharpness dynamics"};
    app.require_subcommand(1);
    app.config_formatter(std::make_shared<JsonConfig>());

    add_uv_trajectory(app);
    add_uv_portrait(app);
    add_fixed_points(app);
    add_uv_bifurcation(app);
    add_train(app);
    add_phase_diagram(app);
    add_spectrum(app);
    add_dataset(app);

    for (CLI::App* sub : app.get_subcommands(nullptr)) {
        sub->set_config("--config", "", "JSON config file (flags override file values)");
        sub->config_formatter(std::make_shared<JsonConfig>());
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DivergenceFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
