#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace fxrl {

// Dense row-major tensor of doubles. Everything in the network is rank 1
// or 2, so the interface stays minimal on purpose.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shape);

    std::size_t numel() const { return data.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    double& operator()(std::size_t i) { return data[i]; }
    double operator()(std::size_t i) const { return data[i]; }
    double& operator()(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    void fill(double v);
    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
};

// Named parameter (or gradient) collection. std::map keeps iteration order
// deterministic, which serialization and the optimizers rely on.
using TensorMap = std::map<std::string, Tensor>;

// y = W x  for W [m x n], x [n]
void matvec(const Tensor& w, const double* x, double* y);
// y += W^T g  (gradient push-back through a matvec)
void matvec_transposed_add(const Tensor& w, const double* g, double* y);
// G += g x^T  (outer-product gradient accumulation)
void outer_add(Tensor& gw, const double* g, const double* x);

double dot(const double* a, const double* b, std::size_t n);

}
