#pragma once

#include <cstddef>
#include <vector>

namespace gtcnn {

// Dense row-major 2-D array of doubles. Rows are the "channel" axis
// throughout the pipeline.
struct Array2D {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    Array2D() = default;
    Array2D(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), v(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }

    double* row(std::size_t r) { return v.data() + r * cols; }
    const double* row(std::size_t r) const { return v.data() + r * cols; }

    bool empty() const { return v.empty(); }

    bool operator==(const Array2D&) const = default;
};

} // namespace gtcnn
