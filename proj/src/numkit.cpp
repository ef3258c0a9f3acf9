#include "ivsir/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ivsir/errors.hpp"
#include "ivsir/kernels.hpp"

namespace ivsir {

namespace {

int check_square_symmetric(const Matrix& a, const char* where) {
    if (a.rows() != a.cols())
        throw DimensionMismatchError(std::string(where) + ": matrix is not square");
    if (!a.all_finite()) throw NonFiniteError(where);
    const double tol = 1e-8 * std::max(1.0, a.max_abs());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol)
                throw NonSymmetricError("entry (" + std::to_string(i) + "," +
                                        std::to_string(j) + ")");
    return a.rows();
}

double offdiag_sumsq(const Matrix& w) {
    double s = 0.0;
    for (int i = 0; i < w.rows(); ++i)
        for (int j = i + 1; j < w.cols(); ++j) s += w(i, j) * w(i, j);
    return s;
}

}  // namespace

SymEigen sym_eigen(const Matrix& a, int k) {
    const int p = check_square_symmetric(a, "sym_eigen");
    if (k < 1 || k > p)
        throw InvalidArgumentError("sym_eigen: k must be in [1, " +
                                   std::to_string(p) + "]");

    // Work on the symmetrized copy so tiny asymmetries cannot drift.
    Matrix w(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) w(i, j) = 0.5 * (a(i, j) + a(j, i));

    // Rows of vt accumulate the eigenvectors (vt = V^T), so every rotation
    // touches two contiguous rows — the same kern::rot used on w's rows.
    Matrix vt = Matrix::identity(p);

    const double fro = w.frob_norm();
    // Stop once the off-diagonal mass is two orders below the residual
    // contract; the final residual is bounded by the off-diagonal norm.
    const double off_tol = 1e-12 * std::max(1.0, fro);

    const int max_sweeps = 60;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        double off = std::sqrt(2.0 * offdiag_sumsq(w));
        if (off <= off_tol) break;
        // Classic threshold schedule: skip small rotations in early sweeps.
        const double thresh = sweep < 3 ? 0.2 * off / (p * p) : 0.0;
        for (int pi = 0; pi < p - 1; ++pi) {
            for (int qi = pi + 1; qi < p; ++qi) {
                double apq = w(pi, qi);
                if (apq == 0.0) continue;
                double scale = 100.0 * std::abs(apq);
                if (sweep > 3 && std::abs(w(pi, pi)) + scale == std::abs(w(pi, pi)) &&
                    std::abs(w(qi, qi)) + scale == std::abs(w(qi, qi))) {
                    w(pi, qi) = w(qi, pi) = 0.0;
                    continue;
                }
                if (std::abs(apq) <= thresh) continue;

                double theta = (w(qi, qi) - w(pi, pi)) / (2.0 * apq);
                double t;
                if (std::abs(theta) > 1e150) {
                    t = 1.0 / (2.0 * theta);
                } else {
                    t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    if (theta < 0.0) t = -t;
                }
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;

                // w <- J^T w J applied as a row rotation then a column
                // rotation; rows are contiguous, columns strided.
                kern::rot(w.row(pi), w.row(qi), c, -s, p);
                for (int i = 0; i < p; ++i) {
                    double wip = w(i, pi), wiq = w(i, qi);
                    w(i, pi) = c * wip - s * wiq;
                    w(i, qi) = s * wip + c * wiq;
                }
                w(pi, qi) = w(qi, pi) = 0.0;
                kern::rot(vt.row(pi), vt.row(qi), c, -s, p);
            }
        }
    }
    if (sweep == max_sweeps)
        throw NumericError("EigenNoConvergence",
                           "Jacobi sweeps exhausted without convergence");

    std::vector<int> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return w(i, i) > w(j, j); });

    SymEigen out;
    out.values.resize(k);
    out.vectors = Matrix(p, k);
    for (int j = 0; j < k; ++j) {
        int src = order[j];
        out.values[j] = w(src, src);
        const double* v = vt.row(src);
        int pivot = 0;
        for (int i = 1; i < p; ++i)
            if (std::abs(v[i]) > std::abs(v[pivot])) pivot = i;
        double sign = v[pivot] < 0.0 ? -1.0 : 1.0;
        for (int i = 0; i < p; ++i) out.vectors(i, j) = sign * v[i];
    }
    return out;
}

Matrix cholesky(const Matrix& a) {
    const int p = check_square_symmetric(a, "cholesky");
    Matrix l(p, p);
    for (int j = 0; j < p; ++j) {
        double d = a(j, j) - kern::dot(l.row(j), l.row(j), j);
        if (d <= 0.0) throw NotPositiveDefiniteError(j);
        l(j, j) = std::sqrt(d);
        for (int i = j + 1; i < p; ++i)
            l(i, j) = (a(i, j) - kern::dot(l.row(i), l.row(j), j)) / l(j, j);
    }
    return l;
}

Vec cholesky_solve(const Matrix& l, const Vec& b) {
    const int p = l.rows();
    if (static_cast<int>(b.size()) != p)
        throw DimensionMismatchError("cholesky_solve: length disagrees");
    Vec y(p);
    for (int i = 0; i < p; ++i)
        y[i] = (b[i] - kern::dot(l.row(i), y.data(), i)) / l(i, i);
    Vec x(p);
    for (int i = p - 1; i >= 0; --i) {
        double s = y[i];
        for (int j = i + 1; j < p; ++j) s -= l(j, i) * x[j];
        x[i] = s / l(i, i);
    }
    return x;
}

Matrix gram_schmidt(const Matrix& cols) {
    const int n = cols.rows();
    const int m = cols.cols();
    if (!cols.all_finite()) throw NonFiniteError("gram_schmidt");
    Matrix qt = cols.transpose();  // rows are columns; contiguous
    for (int j = 0; j < m; ++j) {
        double* vj = qt.row(j);
        for (int i = 0; i < j; ++i) {
            const double* qi = qt.row(i);
            double denom = kern::sumsq(qi, n);
            double coef = kern::dot(qi, vj, n) / denom;
            kern::axpy(-coef, qi, vj, n);
        }
        if (std::sqrt(kern::sumsq(vj, n)) < 1e-12) throw RankDeficientError(j);
    }
    for (int j = 0; j < m; ++j) {
        double* vj = qt.row(j);
        kern::scal(1.0 / std::sqrt(kern::sumsq(vj, n)), vj, n);
    }
    return qt.transpose();
}

double mann_whitney_auc(const Vec& scores, const std::vector<int>& labels) {
    const std::size_t n = scores.size();
    if (labels.size() != n)
        throw DimensionMismatchError("mann_whitney_auc: lengths disagree");
    if (!all_finite(scores)) throw NonFiniteError("mann_whitney_auc");
    std::size_t n1 = 0;
    for (int lab : labels) {
        if (lab != 0 && lab != 1)
            throw InvalidArgumentError("mann_whitney_auc: labels must be 0/1");
        n1 += static_cast<std::size_t>(lab);
    }
    const std::size_t n0 = n - n1;
    if (n1 == 0 || n0 == 0) throw DegenerateLabelsError();

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return scores[i] < scores[j]; });

    // Midranks over tie groups; AUC from the rank-sum form of the U statistic.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t)
            if (labels[order[t]] == 1) rank_sum_pos += midrank;
        i = j + 1;
    }
    double u = rank_sum_pos - 0.5 * static_cast<double>(n1) * (n1 + 1);
    return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

}  // namespace ivsir
