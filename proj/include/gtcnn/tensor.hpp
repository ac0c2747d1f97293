#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "gtcnn/error.hpp"

namespace gtcnn {

/// Dense row-major tensor of doubles.
struct Tensor {
    std::vector<std::size_t> dims;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> d)
        : dims(std::move(d)),
          data(std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                               std::multiplies<>()),
               0.0) {}

    std::size_t numel() const { return data.size(); }

    double* ptr() { return data.data(); }
    const double* ptr() const { return data.data(); }

    void zero() { std::fill(data.begin(), data.end(), 0.0); }

    std::string shape_str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < dims.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(dims[i]);
        }
        return s + ")";
    }

    bool same_shape(const Tensor& other) const { return dims == other.dims; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

#ifndef NDEBUG
#define GTCNN_CHECK_FINITE(t) assert((t).all_finite() && "non-finite tensor values")
#else
#define GTCNN_CHECK_FINITE(t) ((void)0)
#endif

} // namespace gtcnn
