#include "fxrl/tensor.hpp"

#include <cmath>
#include <numeric>

namespace fxrl {

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    Tensor t;
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    t.shape = std::move(shape);
    t.data.assign(n, 0.0);
    return t;
}

void Tensor::fill(double v) {
    for (double& x : data) x = v;
}

bool Tensor::all_finite() const {
    for (double x : data)
        if (!std::isfinite(x)) return false;
    return true;
}

void matvec(const Tensor& w, const double* x, double* y) {
    const std::size_t m = w.rows(), n = w.cols();
    for (std::size_t r = 0; r < m; ++r) {
        const double* row = w.data.data() + r * n;
        double acc = 0.0;
        for (std::size_t c = 0; c < n; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
}

void matvec_transposed_add(const Tensor& w, const double* g, double* y) {
    const std::size_t m = w.rows(), n = w.cols();
    for (std::size_t r = 0; r < m; ++r) {
        const double* row = w.data.data() + r * n;
        const double gr = g[r];
        for (std::size_t c = 0; c < n; ++c) y[c] += row[c] * gr;
    }
}

void outer_add(Tensor& gw, const double* g, const double* x) {
    const std::size_t m = gw.rows(), n = gw.cols();
    for (std::size_t r = 0; r < m; ++r) {
        double* row = gw.data.data() + r * n;
        const double gr = g[r];
        for (std::size_t c = 0; c < n; ++c) row[c] += gr * x[c];
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

}
