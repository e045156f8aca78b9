#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace pagrefine {

/// Dense row-major matrix of doubles. The single numeric container used
/// throughout: expanded data, logits, adjacencies, masks, moments.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows && c < cols);
        return data[r * cols + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows && c < cols);
        return data[r * cols + c];
    }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    std::size_t size() const { return data.size(); }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }

    bool bit_equal(const Matrix& other) const {
        return same_shape(other) && data == other.data;
    }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

} // namespace pagrefine
