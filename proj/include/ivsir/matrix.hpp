#pragma once

#include <cstddef>
#include <vector>

namespace ivsir {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles.  Row pointers are contiguous, which is
// what the kernels operate on; column access is strided.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols),
          data_(static_cast<std::size_t>(rows) * cols, fill) {}

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) {
        return data_[static_cast<std::size_t>(i) * cols_ + j];
    }
    double operator()(int i, int j) const {
        return data_[static_cast<std::size_t>(i) * cols_ + j];
    }

    double* row(int i) { return data_.data() + static_cast<std::size_t>(i) * cols_; }
    const double* row(int i) const {
        return data_.data() + static_cast<std::size_t>(i) * cols_;
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::size_t size() const { return data_.size(); }

    bool all_finite() const;
    double max_abs() const;
    double frob_norm() const;
    Matrix transpose() const;
    Vec col(int j) const;

private:
    int rows_ = 0;
    int cols_ = 0;
    Vec data_;
};

// a (r x k) * b (k x c)
Matrix matmul(const Matrix& a, const Matrix& b);
// alpha * aT b, for row-aligned a (n x ca) and b (n x cb)
Matrix crossprod(const Matrix& a, const Matrix& b, double alpha = 1.0);
Vec matvec(const Matrix& a, const Vec& v);   // a v
Vec tmatvec(const Matrix& a, const Vec& v);  // aT v

// Subtracts column means in place and returns them.
Vec center_columns(Matrix& a);
void center(Vec& v);

Matrix subset_rows(const Matrix& a, const std::vector<int>& idx);
Vec subset(const Vec& v, const std::vector<int>& idx);

bool all_finite(const Vec& v);
double max_abs(const Vec& v);
double norm2(const Vec& v);
double frob_diff(const Matrix& a, const Matrix& b);

}  // namespace ivsir
