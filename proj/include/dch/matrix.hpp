#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace dch {

// Dense row-major matrix of doubles. Small helper, not a linear algebra
// library; heavy loops go through dch::kernels.
class Matrix {
  public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative dimension");
    }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix constant(int rows, int cols, double v) { return Matrix(rows, cols, v); }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return a_.size(); }
    bool empty() const { return a_.empty(); }

    double& operator()(int r, int c) { return a_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return a_[static_cast<std::size_t>(r) * cols_ + c]; }

    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }
    double* row(int r) { return a_.data() + static_cast<std::size_t>(r) * cols_; }
    const double* row(int r) const { return a_.data() + static_cast<std::size_t>(r) * cols_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> a_;
};

} // namespace dch
