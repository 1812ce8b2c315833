#ifndef LEAPMOOD_TENSOR_HPP
#define LEAPMOOD_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "leapmood/common.hpp"

namespace leapmood {

/// Dense row-major tensor of 64-bit floats. All model math runs in double;
/// at desk scale precision is cheaper than chasing drift.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> dims) {
        Tensor t;
        std::size_t n = 1;
        for (std::size_t d : dims) n *= d;
        t.shape = std::move(dims);
        t.data.assign(n, 0.0);
        return t;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape[i]; }

    double& at(std::size_t i) { return data[i]; }
    double at(std::size_t i) const { return data[i]; }

    // 2-d access, row-major
    double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    double* row(std::size_t r) { return data.data() + r * shape[1]; }
    const double* row(std::size_t r) const { return data.data() + r * shape[1]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

inline void check_finite(const Tensor& t, const std::string& what) {
    for (double v : t.data) {
        if (!std::isfinite(v)) {
            throw NumericError("non-finite value in " + what);
        }
    }
}

inline void check_finite(const std::vector<double>& values, const std::string& what) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw NumericError("non-finite value in " + what);
        }
    }
}

inline void check_finite(double v, const std::string& what) {
    if (!std::isfinite(v)) {
        throw NumericError("non-finite value in " + what);
    }
}

/// y += W x with W of shape (rows, cols), x of length cols, y of length rows.
inline void matvec_acc(const Tensor& w, const double* x, double* y) {
    const std::size_t rows = w.shape[0], cols = w.shape[1];
    const double* wd = w.data.data();
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* wr = wd + r * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
        y[r] += acc;
    }
}

/// y += W^T g with W of shape (rows, cols), g of length rows, y of length cols.
inline void matvec_t_acc(const Tensor& w, const double* g, double* y) {
    const std::size_t rows = w.shape[0], cols = w.shape[1];
    const double* wd = w.data.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double gr = g[r];
        if (gr == 0.0) continue;
        const double* wr = wd + r * cols;
        for (std::size_t c = 0; c < cols; ++c) y[c] += gr * wr[c];
    }
}

/// dW += g x^T (outer product accumulate), dW of shape (rows, cols).
inline void outer_acc(Tensor& dw, const double* g, const double* x) {
    const std::size_t rows = dw.shape[0], cols = dw.shape[1];
    double* wd = dw.data.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double gr = g[r];
        if (gr == 0.0) continue;
        double* wr = wd + r * cols;
        for (std::size_t c = 0; c < cols; ++c) wr[c] += gr * x[c];
    }
}

}  // namespace leapmood

#endif
