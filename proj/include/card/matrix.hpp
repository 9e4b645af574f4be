#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "card/errors.hpp"

namespace card {

/// Dense row-major matrix of doubles. Rows are observations.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

    std::span<const double> row(std::size_t r) const {
        return {values.data() + r * cols, cols};
    }
    std::span<double> row(std::size_t r) {
        return {values.data() + r * cols, cols};
    }

    bool operator==(const Matrix&) const = default;
};

} // namespace card
