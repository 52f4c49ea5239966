#pragma once
// Grayscale image grid, row-major, values nominally in [0,1].

#include <stdexcept>
#include <string>
#include <vector>

namespace tqs {

struct Image {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;

    Image() = default;
    Image(int rows_, int cols_, double fill = 0.0)
        : rows(rows_), cols(cols_), values(static_cast<size_t>(rows_) * cols_, fill) {
        if (rows_ < 0 || cols_ < 0)
            throw std::invalid_argument("image dimensions must be non-negative");
    }

    double& at(int r, int c) { return values[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return values[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return values.size(); }
    bool same_size(const Image& o) const { return rows == o.rows && cols == o.cols; }
};

} // namespace tqs
