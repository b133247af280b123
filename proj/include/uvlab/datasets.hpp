#pragma once

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "uvlab/trainer.hpp"
#include "uvlab/util.hpp"

namespace uvlab {

/// Amplitude/exponent pairs for the singular-value rescaling of the inputs
/// and the outputs.
struct PowerLawSpec {
    double a_x = 1.0, b_x = 0.0;
    double a_y = 1.0, b_y = 0.0;
};

inline Dataset make_random(int p, int d_in, int d_out, std::mt19937_64& rng) {
    if (p < 1 || d_in < 1 || d_out < 1)
        throw std::invalid_argument("make_random: dimensions must be >= 1");
    Dataset ds;
    ds.x = Mat(std::size_t(p), std::size_t(d_in));
    ds.y = Mat(std::size_t(p), std::size_t(d_out));
    std::normal_distribution<double> g(0.0, 1.0);
    for (double& v : ds.x.a) v = g(rng);
    for (double& v : ds.y.a) v = g(rng);
    return ds;
}

/// Standard-normal inputs with targets produced by a freshly initialized
/// teacher network of the given configuration.
inline Dataset make_teacher_student(const NetworkConfig& teacher_cfg, int p, int d_in, int d_out,
                                    std::mt19937_64& rng) {
    Dataset ds;
    ds.x = Mat(std::size_t(p), std::size_t(d_in));
    std::normal_distribution<double> g(0.0, 1.0);
    for (double& v : ds.x.a) v = g(rng);
    const NetParams teacher = init_network(teacher_cfg, d_in, d_out, rng);
    ds.y = forward(teacher, teacher_cfg, ds.x);
    return ds;
}

namespace detail {

inline Eigen::MatrixXd to_eigen(const Mat& m) {
    Eigen::MatrixXd e(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) e(long(i), long(j)) = m(i, j);
    return e;
}

inline Mat from_eigen(const Eigen::MatrixXd& e) {
    Mat m(std::size_t(e.rows()), std::size_t(e.cols()));
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = e(long(i), long(j));
    return m;
}

// Thin SVD, rescale the k-th singular value by a * k^(-b) (k from 1 in
// descending order), reconstruct. Zero singular values pass through as zero.
inline Mat rescale_singular_values(const Mat& m, double a, double b) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(to_eigen(m), Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd s = svd.singularValues();
    for (long k = 0; k < s.size(); ++k) s(k) *= a * std::pow(double(k + 1), -b);
    return from_eigen(svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose());
}

}  // namespace detail

inline Dataset make_power_law(int p, int d_in, int d_out, const PowerLawSpec& spec,
                              std::mt19937_64& rng) {
    if (!(spec.a_x > 0.0) || !(spec.a_y > 0.0) || spec.b_x < 0.0 || spec.b_y < 0.0)
        throw std::invalid_argument("make_power_law: need A > 0 and B >= 0");
    Dataset ds = make_random(p, d_in, d_out, rng);
    ds.x = detail::rescale_singular_values(ds.x, spec.a_x, spec.b_x);
    ds.y = detail::rescale_singular_values(ds.y, spec.a_y, spec.b_y);
    return ds;
}

inline Dataset make_single_example(std::vector<double> x, double y) {
    if (x.empty()) throw std::invalid_argument("make_single_example: empty input");
    Dataset ds;
    ds.x = Mat(1, x.size());
    ds.x.a = std::move(x);
    ds.y = Mat(1, 1);
    ds.y(0, 0) = y;
    return ds;
}

/// x = norm * e_1 in R^dim.
inline Dataset make_single_example(double norm, int dim, double y) {
    if (!(norm > 0.0)) throw std::invalid_argument("make_single_example: norm must be > 0");
    if (dim < 1) throw std::invalid_argument("make_single_example: dim must be >= 1");
    std::vector<double> x(std::size_t(dim), 0.0);
    x[0] = norm;
    return make_single_example(std::move(x), y);
}

inline Dataset load_csv(const std::string& path, int d_in, int d_out, bool has_header = false) {
    if (d_in < 1 || d_out < 1) throw std::invalid_argument("load_csv: dimensions must be >= 1");
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<double> xs, ys;
    std::string line;
    std::size_t row = 0, rows = 0;
    while (std::getline(in, line)) {
        ++row;
        if (has_header && row == 1) continue;
        if (line.empty()) continue;
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) vals.push_back(parse_double(cell));
        if (vals.size() != std::size_t(d_in + d_out))
            throw std::runtime_error(path + ": row " + std::to_string(row) + " has " +
                                     std::to_string(vals.size()) + " columns, expected " +
                                     std::to_string(d_in + d_out));
        xs.insert(xs.end(), vals.begin(), vals.begin() + d_in);
        ys.insert(ys.end(), vals.begin() + d_in, vals.end());
        ++rows;
    }
    if (rows == 0) throw std::runtime_error(path + ": no data rows");
    Dataset ds;
    ds.x = Mat(rows, std::size_t(d_in));
    ds.x.a = std::move(xs);
    ds.y = Mat(rows, std::size_t(d_out));
    ds.y.a = std::move(ys);
    return ds;
}

struct StandardizeResult {
    Dataset data;
    std::vector<std::size_t> constant_columns;  // centered but not scaled
};

/// Per-feature standardization of X (population standard deviation); targets
/// are left untouched. Zero-variance columns are centered and flagged.
inline StandardizeResult standardize(const Dataset& ds) {
    StandardizeResult res;
    res.data = ds;
    Mat& x = res.data.x;
    const double pn = double(x.rows);
    for (std::size_t c = 0; c < x.cols; ++c) {
        double mu = 0.0;
        for (std::size_t r = 0; r < x.rows; ++r) mu += x(r, c);
        mu /= pn;
        double var = 0.0;
        for (std::size_t r = 0; r < x.rows; ++r) var += (x(r, c) - mu) * (x(r, c) - mu);
        var /= pn;
        const double sd = std::sqrt(var);
        if (sd <= 1e-12 * std::max(1.0, std::abs(mu))) {
            for (std::size_t r = 0; r < x.rows; ++r) x(r, c) -= mu;
            res.constant_columns.push_back(c);
        } else {
            for (std::size_t r = 0; r < x.rows; ++r) x(r, c) = (x(r, c) - mu) / sd;
        }
    }
    return res;
}

inline void dataset_to_csv(const Dataset& ds, const std::string& path, bool header = false) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    if (header) {
        for (std::size_t c = 0; c < ds.x.cols; ++c) out << (c ? "," : "") << 'x' << c + 1;
        for (std::size_t c = 0; c < ds.y.cols; ++c) out << ",y" << c + 1;
        out << '\n';
    }
    for (std::size_t r = 0; r < ds.x.rows; ++r) {
        for (std::size_t c = 0; c < ds.x.cols; ++c) out << (c ? "," : "") << fmt(ds.x(r, c));
        for (std::size_t c = 0; c < ds.y.cols; ++c) out << ',' << fmt(ds.y(r, c));
        out << '\n';
    }
}

}  // namespace uvlab
