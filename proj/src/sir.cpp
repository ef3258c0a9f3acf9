#include "ivsir/sir.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "ivsir/errors.hpp"
#include "ivsir/lasso.hpp"

namespace ivsir {

SliceDesign make_slices(const Vec& y, int h) {
    const int n = static_cast<int>(y.size());
    if (h < 2) throw InvalidArgumentError("need at least 2 slices");
    if (n < 2 * h) throw TooFewObservationsError(n, 2 * h);
    if (!all_finite(y)) throw NonFiniteError("response");

    SliceDesign s;
    s.h = h;
    s.n = n;
    s.order.resize(n);
    std::iota(s.order.begin(), s.order.end(), 0);
    std::stable_sort(s.order.begin(), s.order.end(),
                     [&](int a, int b) { return y[a] < y[b]; });

    const int base = n / h;
    const int rem = n % h;
    s.sizes.resize(h);
    s.starts.resize(h);
    s.assignment.resize(n);
    int pos = 0;
    for (int g = 0; g < h; ++g) {
        s.starts[g] = pos;
        s.sizes[g] = base + (g < rem ? 1 : 0);
        for (int i = 0; i < s.sizes[g]; ++i) s.assignment[s.order[pos + i]] = g;
        pos += s.sizes[g];
    }
    return s;
}

SirKernel kernel(Matrix x, const SliceDesign& slices) {
    const int n = x.rows();
    const int p = x.cols();
    if (n != slices.n)
        throw DimensionMismatchError("slice design was built for " +
                                     std::to_string(slices.n) + " rows, x has " +
                                     std::to_string(n));
    if (!x.all_finite()) throw NonFiniteError("regressor matrix");
    for (int g = 0; g < slices.h; ++g)
        if (slices.sizes[g] < 2) throw SliceTooSmallError(g, slices.sizes[g]);

    SirKernel out;
    out.lambda = crossprod(x, x, 1.0 / n);

    // Subtract the weighted within-slice covariances: (c_h/n) * S_h, i.e.
    // (c_h/(c_h-1))/n times the deviation cross-product.
    for (int g = 0; g < slices.h; ++g) {
        const int c = slices.sizes[g];
        Matrix dev(c, p);
        Vec mean(p, 0.0);
        for (int i = 0; i < c; ++i) {
            const double* row = x.row(slices.order[slices.starts[g] + i]);
            for (int j = 0; j < p; ++j) mean[j] += row[j];
        }
        for (int j = 0; j < p; ++j) mean[j] /= c;
        for (int i = 0; i < c; ++i) {
            const double* row = x.row(slices.order[slices.starts[g] + i]);
            double* drow = dev.row(i);
            for (int j = 0; j < p; ++j) drow[j] = row[j] - mean[j];
        }
        const double w = (static_cast<double>(c) / (c - 1)) / n;
        Matrix within = crossprod(dev, dev, w);
        for (int j = 0; j < p; ++j)
            for (int k = 0; k < p; ++k) out.lambda(j, k) -= within(j, k);
    }

    out.eigen = sym_eigen(out.lambda, std::min(slices.h, p));
    out.slices = slices;
    out.x = std::move(x);
    return out;
}

Matrix pseudo_responses(const SirKernel& kern, int d) {
    const int n = kern.x.rows();
    const int avail = static_cast<int>(kern.eigen.values.size());
    if (d < 1 || d > avail)
        throw InvalidArgumentError("requested " + std::to_string(d) +
                                   " pseudo-responses, kernel holds " +
                                   std::to_string(avail) + " eigenpairs");

    Matrix out(n, d);
    const int p = kern.x.cols();
    Vec eta(p);
    for (int k = 0; k < d; ++k) {
        const double lam = kern.eigen.values[k];
        if (lam <= kEigenvalueGuard) throw EigenvalueTooSmallError(k, lam);
        for (int j = 0; j < p; ++j) eta[j] = kern.eigen.vectors(j, k);
        Vec v = matvec(kern.x, eta);

        const SliceDesign& s = kern.slices;
        for (int g = 0; g < s.h; ++g) {
            const int c = s.sizes[g];
            double vbar = 0.0;
            for (int i = 0; i < c; ++i) vbar += v[s.order[s.starts[g] + i]];
            vbar /= c;
            const double f = static_cast<double>(c) / (c - 1);
            for (int i = 0; i < c; ++i) {
                const int idx = s.order[s.starts[g] + i];
                out(idx, k) = (v[idx] - f * (v[idx] - vbar)) / lam;
            }
        }
    }
    return out;
}

SdrEstimate lasso_sir(const Vec& y, const Matrix& x, int h, int d,
                      const TuneSpec& tuning, SeededRng& rng) {
    const int n = x.rows();
    const int p = x.cols();
    if (static_cast<int>(y.size()) != n)
        throw DimensionMismatchError("response length " +
                                     std::to_string(y.size()) +
                                     " disagrees with " + std::to_string(n) +
                                     " rows of x");
    if (d < 1) throw InvalidArgumentError("need d >= 1");
    if (tuning.mode == TuneMode::theory)
        throw InvalidArgumentError(
            "theory-rate tuning applies to the first stage only");

    Matrix xc = x;
    center_columns(xc);
    SliceDesign slices = make_slices(y, h);
    SirKernel kern = kernel(std::move(xc), slices);
    Matrix pseudo = pseudo_responses(kern, d);

    auto design = std::make_shared<LassoDesign>(kern.x);

    SdrEstimate est;
    est.b_hat = Matrix(p, d);
    est.eigenvalues.resize(d);
    est.adjusted_eigenvalues.resize(d);
    est.penalties.resize(d);
    est.stage = Stage::one_stage;
    est.h = h;
    est.d = d;

    std::vector<char> in_support(p, 0);
    for (int k = 0; k < d; ++k) {
        Vec yk = pseudo.col(k);
        center(yk);  // exact centering; the analytic mean is already ~0
        LassoProblem prob(design, std::move(yk));

        LassoFit fit;
        if (tuning.mode == TuneMode::fixed) {
            fit = solve(prob, tuning.fixed_value);
        } else {
            Vec grid = default_grid(prob, tuning.grid_points);
            auto fits = path(prob, &grid);
            int idx = 0;
            if (tuning.mode == TuneMode::bic) {
                Vec crit = bic_criterion(fits, n, prob.y2n);
                for (std::size_t i = 1; i < crit.size(); ++i)
                    if (crit[i] < crit[idx]) idx = static_cast<int>(i);
            } else {
                CvOptions copt;
                copt.folds = tuning.folds;
                copt.repeats = tuning.repeats;
                copt.grid_points = tuning.grid_points;
                TuningReport rep = tune_cv(kern.x, prob.y, copt, rng, &grid);
                idx = tuning.mode == TuneMode::cv1se ? rep.chosen_1se_index
                                                     : rep.chosen_index;
            }
            fit = std::move(fits[idx]);
        }

        for (int j = 0; j < p; ++j) est.b_hat(j, k) = fit.beta[j];
        for (int j : fit.active) in_support[j] = 1;
        est.eigenvalues[k] = kern.eigen.values[k];
        est.adjusted_eigenvalues[k] = kern.eigen.values[k] * norm2(fit.beta);
        est.penalties[k] = fit.penalty;
    }
    for (int j = 0; j < p; ++j)
        if (in_support[j]) est.support.push_back(j);
    return est;
}

}  // namespace ivsir
