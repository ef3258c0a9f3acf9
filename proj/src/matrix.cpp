#include "ivsir/matrix.hpp"

#include <cmath>
#include <cstring>

#include "ivsir/errors.hpp"
#include "ivsir/kernels.hpp"

namespace ivsir {

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

double Matrix::frob_norm() const {
    return std::sqrt(kern::sumsq(data_.data(), data_.size()));
}

Matrix Matrix::transpose() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Vec Matrix::col(int j) const {
    Vec c(rows_);
    for (int i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw DimensionMismatchError("matmul: inner dimensions disagree");
    Matrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        double* ci = c.row(i);
        const double* ai = a.row(i);
        for (int t = 0; t < a.cols(); ++t)
            if (ai[t] != 0.0) kern::axpy(ai[t], b.row(t), ci, b.cols());
    }
    return c;
}

Matrix crossprod(const Matrix& a, const Matrix& b, double alpha) {
    if (a.rows() != b.rows())
        throw DimensionMismatchError("crossprod: row counts disagree");
    Matrix c(a.cols(), b.cols());
    for (int t = 0; t < a.rows(); ++t) {
        const double* at = a.row(t);
        const double* bt = b.row(t);
        for (int i = 0; i < a.cols(); ++i)
            if (at[i] != 0.0) kern::axpy(alpha * at[i], bt, c.row(i), b.cols());
    }
    return c;
}

Vec matvec(const Matrix& a, const Vec& v) {
    if (static_cast<int>(v.size()) != a.cols())
        throw DimensionMismatchError("matvec: vector length disagrees");
    Vec r(a.rows());
    for (int i = 0; i < a.rows(); ++i) r[i] = kern::dot(a.row(i), v.data(), v.size());
    return r;
}

Vec tmatvec(const Matrix& a, const Vec& v) {
    if (static_cast<int>(v.size()) != a.rows())
        throw DimensionMismatchError("tmatvec: vector length disagrees");
    Vec r(a.cols(), 0.0);
    for (int t = 0; t < a.rows(); ++t)
        if (v[t] != 0.0) kern::axpy(v[t], a.row(t), r.data(), a.cols());
    return r;
}

Vec center_columns(Matrix& a) {
    Vec means(a.cols(), 0.0);
    for (int i = 0; i < a.rows(); ++i)
        kern::axpy(1.0, a.row(i), means.data(), a.cols());
    kern::scal(1.0 / a.rows(), means.data(), means.size());
    for (int i = 0; i < a.rows(); ++i)
        kern::axpy(-1.0, means.data(), a.row(i), a.cols());
    return means;
}

void center(Vec& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double& x : v) x -= mean;
}

Matrix subset_rows(const Matrix& a, const std::vector<int>& idx) {
    Matrix s(static_cast<int>(idx.size()), a.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::memcpy(s.row(static_cast<int>(i)), a.row(idx[i]),
                    sizeof(double) * a.cols());
    return s;
}

Vec subset(const Vec& v, const std::vector<int>& idx) {
    Vec s(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) s[i] = v[idx[i]];
    return s;
}

bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

double max_abs(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double norm2(const Vec& v) { return std::sqrt(kern::sumsq(v.data(), v.size())); }

double frob_diff(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionMismatchError("frob_diff: shapes disagree");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a.data()[i] - b.data()[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace ivsir
