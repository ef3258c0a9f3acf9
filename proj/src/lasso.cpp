#include "ivsir/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ivsir/errors.hpp"
#include "ivsir/kernels.hpp"
#include "ivsir/numkit.hpp"

namespace ivsir {

namespace {

inline double soft_threshold(double z, double mu) {
    if (z > mu) return z - mu;
    if (z < -mu) return z + mu;
    return 0.0;
}

}  // namespace

LassoDesign::LassoDesign(const Matrix& x) : n_(x.rows()), m_(x.cols()) {
    if (n_ < 1 || m_ < 1)
        throw InvalidArgumentError("lasso design must be non-empty");
    if (!x.all_finite()) throw NonFiniteError("lasso design");
    xt_ = x.transpose();
    colsq_.resize(m_);
    cross_.resize(m_);
    const double scale = std::max(1.0, x.max_abs());
    for (int j = 0; j < m_; ++j) {
        const double* cj = xt_.row(j);
        double mean = 0.0;
        for (int i = 0; i < n_; ++i) mean += cj[i];
        mean /= n_;
        if (std::abs(mean) > 1e-8 * scale)
            throw InvalidArgumentError("design column " + std::to_string(j) +
                                       " is not centered");
        colsq_[j] = kern::sumsq(cj, n_) / n_;
    }
}

const double* LassoDesign::cross(int j) {
    if (cross_[j].empty()) {
        Vec row(m_);
        const double* cj = xt_.row(j);
        for (int i = 0; i < m_; ++i)
            row[i] = kern::dot(xt_.row(i), cj, n_) / n_;
        cross_[j] = std::move(row);
    }
    return cross_[j].data();
}

LassoProblem::LassoProblem(std::shared_ptr<LassoDesign> design_in, Vec response)
    : design(std::move(design_in)), y(std::move(response)) {
    const int n = design->n();
    if (static_cast<int>(y.size()) != n)
        throw DimensionMismatchError("lasso response length disagrees with design");
    if (!all_finite(y)) throw NonFiniteError("lasso response");
    double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
    if (std::abs(mean) > 1e-8 * std::max(1.0, ivsir::max_abs(y)))
        throw InvalidArgumentError("lasso response is not centered");
    xty.resize(design->m());
    for (int j = 0; j < design->m(); ++j)
        xty[j] = kern::dot(design->col(j), y.data(), n) / n;
    y2n = kern::sumsq(y.data(), n) / n;
}

LassoProblem::LassoProblem(const Matrix& x, Vec response)
    : LassoProblem(std::make_shared<LassoDesign>(x), std::move(response)) {}

LassoFit solve(LassoProblem& prob, double mu, const Vec* warm,
               const SolveOptions& opt) {
    if (mu < 0.0 || !std::isfinite(mu))
        throw InvalidArgumentError("penalty must be finite and >= 0");
    LassoDesign& design = *prob.design;
    const int m = design.m();

    Vec beta(m, 0.0);
    if (warm) {
        if (static_cast<int>(warm->size()) != m)
            throw DimensionMismatchError("warm start length disagrees");
        beta = *warm;
    }

    // Working set: coordinates allowed to move.  Nonzero coefficients always
    // belong to it, so the cached gradient g_j = xty_j - sum_k cross_jk b_k
    // only needs cross rows for working coordinates.
    std::vector<int> work;
    std::vector<char> in_work(m, 0);
    auto admit = [&](int j) {
        if (!in_work[j] && design.colsq(j) > 0.0) {
            design.cross(j);
            work.push_back(j);
            in_work[j] = 1;
        }
    };
    for (int j = 0; j < m; ++j) {
        if (beta[j] != 0.0) {
            if (design.colsq(j) == 0.0)
                beta[j] = 0.0;  // degenerate column can never move
            else
                admit(j);
        }
    }

    // Gradient restricted to the working set.
    Vec gw;
    auto refresh_gw = [&]() {
        gw.assign(work.size(), 0.0);
        for (std::size_t i = 0; i < work.size(); ++i) gw[i] = prob.xty[work[i]];
        for (std::size_t k = 0; k < work.size(); ++k) {
            double bk = beta[work[k]];
            if (bk == 0.0) continue;
            const double* ck = design.cross(work[k]);
            for (std::size_t i = 0; i < work.size(); ++i) gw[i] -= bk * ck[work[i]];
        }
    };
    refresh_gw();

    auto beta_inf_work = [&]() {
        double b = 0.0;
        for (int j : work) b = std::max(b, std::abs(beta[j]));
        return b;
    };
    // Objective through the Gram identity: RSS/n = y2n - xty.b - g.b.
    auto objective_now = [&]() {
        double xty_b = 0.0, g_b = 0.0, l1 = 0.0;
        for (std::size_t i = 0; i < work.size(); ++i) {
            double b = beta[work[i]];
            xty_b += prob.xty[work[i]] * b;
            g_b += gw[i] * b;
            l1 += std::abs(b);
        }
        double rss_n = std::max(0.0, prob.y2n - xty_b - g_b);
        return 0.5 * rss_n + mu * l1;
    };

    int sweeps = 0;
    int monotone_violations = 0;
    double tol = opt.tol;
    int tighten_rounds = 0;
    double prev_obj = std::numeric_limits<double>::infinity();
    Vec g_full(m);

    // Exact solve of the sign-restricted problem on the current active set:
    // with the signs fixed the objective is a strictly convex quadratic, so a
    // Cholesky solve replaces the slow tail of coordinate descent on
    // correlated columns.  A coordinate whose solved value would cross zero
    // is stepped exactly to the boundary, dropped, and the shrunken set is
    // re-solved — the classic active-set inner loop, at most one drop per
    // pass.  Nearly singular Grams are retried with a vanishing ridge; the
    // iterate is only ever accepted through the KKT certificate afterwards,
    // so an inexact ridge step costs accuracy nothing.
    auto newton_polish = [&]() -> bool {
        std::vector<int> act;
        for (int j : work)
            if (beta[j] != 0.0) act.push_back(j);
        if (act.empty() || act.size() > 400) return false;
        bool moved = false;
        const int max_pass = 2 * static_cast<int>(act.size()) + 4;
        for (int pass = 0; pass < max_pass && !act.empty(); ++pass) {
            const int a = static_cast<int>(act.size());
            Matrix gram(a, a);
            double diag_max = 0.0;
            for (int r = 0; r < a; ++r) {
                const double* cr = design.cross(act[r]);
                for (int c = 0; c < a; ++c) gram(r, c) = cr[act[c]];
                diag_max = std::max(diag_max, gram(r, r));
            }
            Vec rhs(a);
            for (int r = 0; r < a; ++r)
                rhs[r] = prob.xty[act[r]] - mu * (beta[act[r]] > 0 ? 1.0 : -1.0);
            Matrix l;
            bool factored = false;
            for (double ridge : {0.0, 1e-10, 1e-6}) {
                Matrix damped = gram;
                if (ridge > 0.0) {
                    const double bump = ridge * std::max(diag_max, 1.0);
                    for (int r = 0; r < a; ++r) damped(r, r) += bump;
                }
                try {
                    l = cholesky(damped);
                    factored = true;
                    break;
                } catch (const Error&) {
                }
            }
            if (!factored) return moved;
            Vec sol = cholesky_solve(l, rhs);
            // Step toward the solve as far as signs remain valid.
            double t = 1.0;
            int crossing = -1;
            for (int r = 0; r < a; ++r) {
                if (sol[r] == 0.0 || (beta[act[r]] > 0) != (sol[r] > 0)) {
                    double denom = beta[act[r]] - sol[r];
                    if (denom == 0.0) continue;
                    double tr = beta[act[r]] / denom;
                    if (tr < t) {
                        t = tr;
                        crossing = r;
                    }
                }
            }
            if (!(t > 0.0)) return moved;  // NaN guard
            for (int r = 0; r < a; ++r) {
                double nb = beta[act[r]] + t * (sol[r] - beta[act[r]]);
                if (nb != beta[act[r]]) moved = true;
                beta[act[r]] = nb;
            }
            if (crossing < 0) break;  // full step: restricted optimum reached
            beta[act[crossing]] = 0.0;
            act.erase(act.begin() + crossing);
        }
        return moved;
    };

    // The certificate is also checked every kCertifyEvery sweeps: on badly
    // conditioned active sets the coefficient-change criterion can keep a
    // certified-optimal iterate grinding for tens of thousands of sweeps,
    // and the active-set polish only runs at certification events.
    constexpr int kCertifyEvery = 40;
    bool force_scan = false;

    for (;;) {
        if (++sweeps > opt.max_sweeps) {
            double kkt = 0.0;
            for (std::size_t i = 0; i < work.size(); ++i) {
                int j = work[i];
                if (beta[j] != 0.0)
                    kkt = std::max(kkt, std::abs(gw[i] - (beta[j] > 0 ? mu : -mu)));
            }
            throw MaxIterationsError(opt.max_sweeps, beta, kkt);
        }
        double maxd = 0.0;
        for (std::size_t i = 0; i < work.size(); ++i) {
            int j = work[i];
            double cs = design.colsq(j);
            double z = gw[i] + cs * beta[j];
            double bn = soft_threshold(z, mu) / cs;
            double d = bn - beta[j];
            if (d != 0.0) {
                beta[j] = bn;
                const double* cj = design.cross(j);
                for (std::size_t t = 0; t < work.size(); ++t)
                    gw[t] -= d * cj[work[t]];
                maxd = std::max(maxd, std::abs(d));
            }
        }
        double obj = objective_now();
        if (obj > prev_obj + 1e-10 * std::max(1.0, std::abs(prev_obj)))
            ++monotone_violations;
        prev_obj = obj;

        bool ws_converged = maxd <= tol * std::max(1.0, beta_inf_work());
        if (!ws_converged && !force_scan && sweeps % kCertifyEvery != 0) continue;
        force_scan = false;

        // Full scan: rebuild the dense gradient from the cache, check the KKT
        // certificate everywhere, admit violators, or tighten and retry.
        std::copy(prob.xty.begin(), prob.xty.end(), g_full.begin());
        for (int j : work)
            if (beta[j] != 0.0)
                kern::axpy(-beta[j], design.cross(j), g_full.data(), m);

        double kkt = 0.0;
        bool added = false;
        for (int j = 0; j < m; ++j) {
            if (design.colsq(j) == 0.0) continue;
            if (beta[j] != 0.0) {
                kkt = std::max(kkt, std::abs(g_full[j] - (beta[j] > 0 ? mu : -mu)));
            } else {
                double viol = std::abs(g_full[j]) - mu;
                if (viol > 0.0) kkt = std::max(kkt, viol);
                if (viol > 0.25 * opt.kkt_tol && !in_work[j]) {
                    admit(j);
                    added = true;
                }
            }
        }
        if (added) {
            refresh_gw();
            continue;
        }
        if (kkt <= opt.kkt_tol) {
            LassoFit fit;
            fit.beta = std::move(beta);
            fit.penalty = mu;
            fit.sweeps = sweeps;
            fit.kkt_residual = kkt;
            double xty_b = 0.0, g_b = 0.0, l1 = 0.0;
            for (int j = 0; j < m; ++j) {
                if (fit.beta[j] == 0.0) continue;
                fit.active.push_back(j);
                xty_b += prob.xty[j] * fit.beta[j];
                g_b += g_full[j] * fit.beta[j];
                l1 += std::abs(fit.beta[j]);
            }
            fit.rss_over_n = std::max(0.0, prob.y2n - xty_b - g_b);
            fit.objective = 0.5 * fit.rss_over_n + mu * l1;
            fit.monotone_violations = monotone_violations;
            if (!all_finite(fit.beta)) throw NonFiniteError("lasso solution");
            return fit;
        }
        if (newton_polish()) {
            refresh_gw();
            force_scan = true;  // certify the polished iterate next sweep
            continue;
        }
        if (ws_converged) {
            // Converged on the working set without meeting the certificate:
            // tighten the sweep criterion and keep going.
            tol *= 0.1;
            if (++tighten_rounds > 40)
                throw NumericError("KktStalled",
                                   "KKT residual failed to reach tolerance");
        }
    }
}

Vec default_grid(const LassoProblem& prob, int points, double ratio) {
    if (points < 1) throw InvalidArgumentError("grid needs at least one point");
    double mu_max = ivsir::max_abs(prob.xty);
    if (mu_max <= 0.0) return Vec{0.0};  // response orthogonal to every column
    Vec grid(points);
    if (points == 1) {
        grid[0] = mu_max;
        return grid;
    }
    double log_max = std::log(mu_max);
    double log_min = std::log(mu_max * ratio);
    for (int i = 0; i < points; ++i)
        grid[i] = std::exp(log_max + (log_min - log_max) * i / (points - 1));
    grid[0] = mu_max;  // exact head so the first fit is exactly zero
    return grid;
}

std::vector<LassoFit> path(LassoProblem& prob, const Vec* grid, int points,
                           const SolveOptions& opt) {
    Vec g = grid ? *grid : default_grid(prob, points);
    if (g.empty()) throw InvalidArgumentError("empty penalty grid");
    for (std::size_t i = 1; i < g.size(); ++i)
        if (g[i] > g[i - 1])
            throw InvalidArgumentError("penalty grid must be descending");
    std::vector<LassoFit> fits;
    fits.reserve(g.size());
    const Vec* warm = nullptr;
    for (double mu : g) {
        fits.push_back(solve(prob, mu, warm, opt));
        warm = &fits.back().beta;
    }
    return fits;
}

namespace {

// Fold index sets from a seeded shuffle; sizes differ by at most one.
std::vector<std::vector<int>> make_folds(int n, int folds, SeededRng& rng) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<std::vector<int>> out(folds);
    int base = n / folds, rem = n % folds;
    int pos = 0;
    for (int f = 0; f < folds; ++f) {
        int size = base + (f < rem ? 1 : 0);
        if (size == 0)
            throw DegenerateFoldsError("fold " + std::to_string(f) + " is empty");
        out[f].assign(perm.begin() + pos, perm.begin() + pos + size);
        std::sort(out[f].begin(), out[f].end());
        pos += size;
    }
    return out;
}

}  // namespace

TuningReport tune_cv(const Matrix& x, const Vec& y, const CvOptions& opt,
                     SeededRng& rng, const Vec* fixed_grid) {
    const int n = x.rows();
    if (opt.folds < 2) throw InvalidArgumentError("cv needs folds >= 2");
    if (n < opt.folds) throw DegenerateFoldsError("more folds than observations");
    if (opt.repeats < 1) throw InvalidArgumentError("cv needs repeats >= 1");

    Vec grid;
    if (fixed_grid) {
        grid = *fixed_grid;
        if (grid.empty()) throw InvalidArgumentError("empty penalty grid");
    } else {
        LassoProblem full(x, y);
        grid = default_grid(full, opt.grid_points);
    }
    const int g = static_cast<int>(grid.size());

    Vec mean_err(g, 0.0);
    Vec fold_means;  // per (repeat, fold, grid) criterion for the SE
    fold_means.reserve(static_cast<std::size_t>(opt.repeats) * opt.folds * g);

    for (int rep = 0; rep < opt.repeats; ++rep) {
        auto folds = make_folds(n, opt.folds, rng);
        Vec rep_sse(g, 0.0);
        for (const auto& test_idx : folds) {
            std::vector<char> is_test(n, 0);
            for (int i : test_idx) is_test[i] = 1;
            std::vector<int> train_idx;
            train_idx.reserve(n - test_idx.size());
            for (int i = 0; i < n; ++i)
                if (!is_test[i]) train_idx.push_back(i);

            Matrix xtr = subset_rows(x, train_idx);
            Vec means = center_columns(xtr);
            Vec ytr = subset(y, train_idx);
            double ybar = std::accumulate(ytr.begin(), ytr.end(), 0.0) / ytr.size();
            for (double& v : ytr) v -= ybar;

            LassoProblem sub(xtr, std::move(ytr));
            auto fits = path(sub, &grid);

            for (int gi = 0; gi < g; ++gi) {
                const Vec& beta = fits[gi].beta;
                double mean_shift = ybar;
                for (int j : fits[gi].active) mean_shift -= means[j] * beta[j];
                double sse = 0.0;
                for (int i : test_idx) {
                    double pred = mean_shift;
                    const double* xi = x.row(i);
                    for (int j : fits[gi].active) pred += xi[j] * beta[j];
                    double r = y[i] - pred;
                    sse += r * r;
                }
                rep_sse[gi] += sse;
                fold_means.push_back(sse / test_idx.size());
            }
        }
        for (int gi = 0; gi < g; ++gi) mean_err[gi] += rep_sse[gi] / n;
    }
    for (int gi = 0; gi < g; ++gi) mean_err[gi] /= opt.repeats;

    // Standard error of the fold-level means at each grid point.
    Vec se(g, 0.0);
    const int blocks = opt.repeats * opt.folds;
    if (blocks > 1) {
        for (int gi = 0; gi < g; ++gi) {
            double mean = 0.0;
            for (int b = 0; b < blocks; ++b)
                mean += fold_means[static_cast<std::size_t>(b) * g + gi];
            mean /= blocks;
            double var = 0.0;
            for (int b = 0; b < blocks; ++b) {
                double d = fold_means[static_cast<std::size_t>(b) * g + gi] - mean;
                var += d * d;
            }
            var /= (blocks - 1);
            se[gi] = std::sqrt(var / blocks);
        }
    }

    TuningReport report;
    report.grid = std::move(grid);
    report.criterion = std::move(mean_err);
    report.std_error = std::move(se);
    report.chosen_index = 0;
    for (int gi = 1; gi < g; ++gi)
        if (report.criterion[gi] < report.criterion[report.chosen_index])
            report.chosen_index = gi;  // ties keep the earlier (larger) penalty
    report.chosen = report.grid[report.chosen_index];
    double cutoff =
        report.criterion[report.chosen_index] + report.std_error[report.chosen_index];
    report.chosen_1se_index = report.chosen_index;
    for (int gi = 0; gi <= report.chosen_index; ++gi) {
        if (report.criterion[gi] <= cutoff) {
            report.chosen_1se_index = gi;
            break;
        }
    }
    return report;
}

Vec bic_criterion(const std::vector<LassoFit>& fits, int n, double y2n) {
    const double floor = 1e-12 * y2n * n;  // 1e-12 * ||y||^2
    Vec crit(fits.size());
    for (std::size_t i = 0; i < fits.size(); ++i) {
        double rss = std::max(fits[i].rss_over_n * n, floor);
        double df = static_cast<double>(fits[i].active.size());
        crit[i] = n * std::log(rss / n) + df * std::log(static_cast<double>(n));
    }
    return crit;
}

TuningReport tune_bic(LassoProblem& prob, int grid_points) {
    const int n = prob.design->n();
    if (n < 2) throw InvalidArgumentError("bic needs n > 1");
    Vec grid = default_grid(prob, grid_points);
    auto fits = path(prob, &grid);

    TuningReport report;
    report.grid = std::move(grid);
    report.criterion = bic_criterion(fits, n, prob.y2n);
    report.chosen_index = 0;
    for (std::size_t i = 1; i < fits.size(); ++i)
        if (report.criterion[i] < report.criterion[report.chosen_index])
            report.chosen_index = static_cast<int>(i);
    report.chosen = report.grid[report.chosen_index];
    report.chosen_1se_index = report.chosen_index;  // no SE notion under BIC
    return report;
}

TuningReport tune_bic(const Matrix& x, const Vec& y, int grid_points) {
    LassoProblem prob(x, y);
    return tune_bic(prob, grid_points);
}

Vec standardize_columns(Matrix& x) {
    const int n = x.rows();
    Vec scales(x.cols(), 1.0);
    for (int j = 0; j < x.cols(); ++j) {
        double ss = 0.0;
        for (int i = 0; i < n; ++i) ss += x(i, j) * x(i, j);
        double sd = std::sqrt(ss / n);
        if (sd > 0.0) {
            scales[j] = sd;
            for (int i = 0; i < n; ++i) x(i, j) /= sd;
        }
    }
    return scales;
}

}  // namespace ivsir
