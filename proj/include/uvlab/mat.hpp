#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace uvlab {

/// Dense row-major matrix of doubles. Small and deliberately plain; the
/// kernels below cover everything the trainer and the dataset generators need.
struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    double frobenius_norm() const {
        double s = 0.0;
        for (double x : a) s += x * x;
        return std::sqrt(s);
    }
};

// C = A * B^T, A: m x k, B: n x k  ->  C: m x n
inline Mat matmul_nt(const Mat& A, const Mat& B) {
    if (A.cols != B.cols) throw std::invalid_argument("matmul_nt: inner dimensions differ");
    Mat C(A.rows, B.rows);
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* ai = &A.a[i * A.cols];
        for (std::size_t j = 0; j < B.rows; ++j) {
            const double* bj = &B.a[j * B.cols];
            double s = 0.0;
            for (std::size_t t = 0; t < A.cols; ++t) s += ai[t] * bj[t];
            C.a[i * C.cols + j] = s;
        }
    }
    return C;
}

// C = A^T * B, A: k x m, B: k x n  ->  C: m x n
inline Mat matmul_tn(const Mat& A, const Mat& B) {
    if (A.rows != B.rows) throw std::invalid_argument("matmul_tn: inner dimensions differ");
    Mat C(A.cols, B.cols);
    for (std::size_t t = 0; t < A.rows; ++t) {
        const double* at = &A.a[t * A.cols];
        const double* bt = &B.a[t * B.cols];
        for (std::size_t i = 0; i < A.cols; ++i) {
            double ai = at[i];
            if (ai == 0.0) continue;
            double* ci = &C.a[i * C.cols];
            for (std::size_t j = 0; j < B.cols; ++j) ci[j] += ai * bt[j];
        }
    }
    return C;
}

// C = A * B, A: m x k, B: k x n  ->  C: m x n
inline Mat matmul_nn(const Mat& A, const Mat& B) {
    if (A.cols != B.rows) throw std::invalid_argument("matmul_nn: inner dimensions differ");
    Mat C(A.rows, B.cols);
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* ai = &A.a[i * A.cols];
        double* ci = &C.a[i * C.cols];
        for (std::size_t t = 0; t < A.cols; ++t) {
            double v = ai[t];
            if (v == 0.0) continue;
            const double* bt = &B.a[t * B.cols];
            for (std::size_t j = 0; j < B.cols; ++j) ci[j] += v * bt[j];
        }
    }
    return C;
}

}  // namespace uvlab
