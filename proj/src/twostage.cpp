#include "ivsir/twostage.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>

#include "ivsir/errors.hpp"
#include "ivsir/lasso.hpp"
#include "ivsir/numkit.hpp"

namespace ivsir {

namespace {

int argmin_first(const Vec& v) {
    int idx = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] < v[idx]) idx = static_cast<int>(i);
    return idx;
}

// Path + criterion for bic/cv tuning; x_rows must hold the same rows the
// problem's design was built from (cv splits it into folds).
LassoFit fit_with_tuning(LassoProblem& prob, const Matrix& x_rows,
                         const TuneSpec& t, SeededRng* rng) {
    Vec grid = default_grid(prob, t.grid_points);
    auto fits = path(prob, &grid);
    int idx = 0;
    if (t.mode == TuneMode::bic) {
        idx = argmin_first(bic_criterion(fits, prob.design->n(), prob.y2n));
    } else {
        CvOptions copt;
        copt.folds = t.folds;
        copt.repeats = t.repeats;
        copt.grid_points = t.grid_points;
        TuningReport rep = tune_cv(x_rows, prob.y, copt, *rng, &grid);
        idx = t.mode == TuneMode::cv1se ? rep.chosen_1se_index
                                        : rep.chosen_index;
    }
    return std::move(fits[idx]);
}

}  // namespace

StageOneFit stage_one(const Matrix& x, const Matrix& z, const TuneSpec& tuning,
                      SeededRng* rng) {
    const int n = x.rows();
    const int p = x.cols();
    const int q = z.cols();
    if (z.rows() != n)
        throw DimensionMismatchError("x and z row counts disagree");
    if ((tuning.mode == TuneMode::cv || tuning.mode == TuneMode::cv1se) && !rng)
        throw InvalidArgumentError("cv tuning in the first stage needs an rng");

    auto design = std::make_shared<LassoDesign>(z);

    Vec theory_mu;
    if (tuning.mode == TuneMode::theory) {
        // Residual scales sigma_j from a ridge pilot against all instruments.
        Matrix a = crossprod(z, z, 1.0 / n);
        for (int i = 0; i < q; ++i) a(i, i) += 1e-2;
        Matrix l = cholesky(a);
        const double rate =
            std::sqrt(std::log(static_cast<double>(p) * q) / n);
        theory_mu.resize(p);
        for (int j = 0; j < p; ++j) {
            Vec xj = x.col(j);
            Vec b = tmatvec(z, xj);
            for (double& v : b) v /= n;
            Vec gamma = cholesky_solve(l, b);
            Vec fitted = matvec(z, gamma);
            double ss = 0.0;
            for (int i = 0; i < n; ++i) {
                double r = xj[i] - fitted[i];
                ss += r * r;
            }
            theory_mu[j] = tuning.c0 * std::sqrt(ss / n) * rate;
        }
    }

    StageOneFit out;
    out.gamma_hat = Matrix(q, p);
    out.penalties.resize(p);
    out.support_sizes.resize(p);
    out.sweeps.resize(p);
    for (int j = 0; j < p; ++j) {
        try {
            LassoProblem prob(design, x.col(j));
            LassoFit fit;
            if (tuning.mode == TuneMode::theory)
                fit = solve(prob, theory_mu[j]);
            else if (tuning.mode == TuneMode::fixed)
                fit = solve(prob, tuning.fixed_value);
            else
                fit = fit_with_tuning(prob, z, tuning, rng);
            for (int i = 0; i < q; ++i) out.gamma_hat(i, j) = fit.beta[i];
            out.penalties[j] = fit.penalty;
            out.support_sizes[j] = static_cast<int>(fit.active.size());
            out.sweeps[j] = fit.sweeps;
        } catch (const Error& e) {
            throw Error(e.kind(), e.code(),
                        "first stage, column " + std::to_string(j) + ": " +
                            e.what());
        }
    }
    out.fitted = matmul(z, out.gamma_hat);
    return out;
}

SdrEstimate two_stage_lasso_sir(const Vec& y, const Matrix& x, const Matrix& z,
                                int h, int d, const TwoStageSpec& tuning,
                                SeededRng& rng, StageOneFit* stage1_out) {
    const int n = x.rows();
    if (static_cast<int>(y.size()) != n || z.rows() != n)
        throw DimensionMismatchError("y, x, z must be row-aligned");

    Matrix xc = x;
    center_columns(xc);
    Matrix zc = z;
    center_columns(zc);
    StageOneFit s1 = stage_one(xc, zc, tuning.stage1, &rng);

    SdrEstimate est = lasso_sir(y, s1.fitted, h, d, tuning.stage2, rng);
    est.stage = Stage::two_stage;
    if (stage1_out) *stage1_out = std::move(s1);
    return est;
}

Vec two_stage_lasso(const Vec& y, const Matrix& x, const Matrix& z,
                    const TwoStageSpec& tuning, SeededRng& rng) {
    const int n = x.rows();
    if (static_cast<int>(y.size()) != n || z.rows() != n)
        throw DimensionMismatchError("y, x, z must be row-aligned");
    if (tuning.stage2.mode == TuneMode::theory)
        throw InvalidArgumentError(
            "theory-rate tuning applies to the first stage only");

    Matrix xc = x;
    center_columns(xc);
    Matrix zc = z;
    center_columns(zc);
    StageOneFit s1 = stage_one(xc, zc, tuning.stage1, &rng);
    Matrix fc = std::move(s1.fitted);
    center_columns(fc);
    Vec yc = y;
    center(yc);

    LassoProblem prob(fc, std::move(yc));
    if (tuning.stage2.mode == TuneMode::fixed)
        return solve(prob, tuning.stage2.fixed_value).beta;
    return fit_with_tuning(prob, fc, tuning.stage2, &rng).beta;
}

TwoMeans two_means_cluster(const Vec& values) {
    if (values.empty()) throw InvalidArgumentError("clustering needs values");
    if (!all_finite(values)) throw NonFiniteError("cluster values");
    const int n = static_cast<int>(values.size());

    TwoMeans out;
    out.label.assign(n, 0);
    double lo = *std::min_element(values.begin(), values.end());
    double hi = *std::max_element(values.begin(), values.end());
    if (hi - lo == 0.0) {
        out.center_low = out.center_high = lo;
        out.label.assign(n, 1);
        out.d_hat = n;
        out.degenerate = true;
        return out;
    }
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        bool changed = false;
        double slo = 0.0, shi = 0.0;
        int clo = 0, chi = 0;
        for (int i = 0; i < n; ++i) {
            int lab = values[i] > mid ? 1 : 0;
            if (lab != out.label[i]) {
                out.label[i] = lab;
                changed = true;
            }
            if (lab) {
                shi += values[i];
                ++chi;
            } else {
                slo += values[i];
                ++clo;
            }
        }
        if (clo == 0 || chi == 0) break;  // unreachable with min/max seeding
        lo = slo / clo;
        hi = shi / chi;
        if (!changed && it > 0) break;
    }
    out.center_low = lo;
    out.center_high = hi;
    out.d_hat =
        static_cast<int>(std::count(out.label.begin(), out.label.end(), 1));
    return out;
}

DimensionVote select_dimension(const Vec& y, const Matrix& regressors, int h,
                               int repeats, int folds, SeededRng& rng) {
    if (repeats < 1) throw InvalidArgumentError("need repeats >= 1");
    if (h < 2) throw InvalidArgumentError("need at least 2 slices");
    const int n = regressors.rows();
    if (static_cast<int>(y.size()) != n)
        throw DimensionMismatchError("response length disagrees with regressors");

    Matrix xc = regressors;
    center_columns(xc);
    SliceDesign slices = make_slices(y, h);
    SirKernel kern = kernel(std::move(xc), slices);

    const int k_max = h - 1;
    int avail = 0;
    for (double v : kern.eigen.values) {
        if (v > kEigenvalueGuard)
            ++avail;
        else
            break;
    }
    const int k_fit = std::min(k_max, avail);

    DimensionVote vote;
    vote.votes.assign(repeats, h - 1);
    vote.final_d = h - 1;
    if (k_fit == 0) {  // no direction clears the eigenvalue guard
        vote.degenerate_count = repeats;
        return vote;
    }

    // Full-data paths are fixed across repeats; only the folds change.
    Matrix pseudo = pseudo_responses(kern, k_fit);
    auto design = std::make_shared<LassoDesign>(kern.x);
    std::vector<Vec> grids(k_fit), responses(k_fit), adjusted(k_fit);
    for (int k = 0; k < k_fit; ++k) {
        Vec yk = pseudo.col(k);
        center(yk);
        responses[k] = yk;
        LassoProblem prob(design, std::move(yk));
        grids[k] = default_grid(prob);
        auto fits = path(prob, &grids[k]);
        adjusted[k].resize(fits.size());
        for (std::size_t i = 0; i < fits.size(); ++i)
            adjusted[k][i] = kern.eigen.values[k] * norm2(fits[i].beta);
    }

    CvOptions copt;
    copt.folds = folds;
    for (int r = 0; r < repeats; ++r) {
        SeededRng child = rng.child(r);
        Vec adj(k_max, 0.0);  // directions beyond k_fit contribute zero
        for (int k = 0; k < k_fit; ++k) {
            TuningReport rep = tune_cv(kern.x, responses[k], copt, child, &grids[k]);
            adj[k] = adjusted[k][rep.chosen_index];
        }
        TwoMeans cluster = two_means_cluster(adj);
        if (cluster.degenerate) ++vote.degenerate_count;
        vote.votes[r] = cluster.d_hat;
    }

    std::vector<int> freq(h, 0);
    for (int v : vote.votes) ++freq[v];
    int best = 1;
    for (int d = 2; d < h; ++d)
        if (freq[d] > freq[best]) best = d;  // strict: ties keep the smaller
    vote.final_d = best;
    return vote;
}

namespace {

// Penalized fits of the SIR stage for directions 1..d at fixed grids; fills
// `grids` with each direction's default grid when passed empty.
std::vector<std::vector<LassoFit>> sir_stage_paths(const Vec& y,
                                                   Matrix x_centered, int h,
                                                   int d,
                                                   std::vector<Vec>& grids,
                                                   int grid_points) {
    SliceDesign slices = make_slices(y, h);
    SirKernel kern = kernel(std::move(x_centered), slices);
    Matrix pseudo = pseudo_responses(kern, d);
    auto design = std::make_shared<LassoDesign>(kern.x);
    const bool fill = grids.empty();
    if (fill) grids.resize(d);
    std::vector<std::vector<LassoFit>> out(d);
    for (int k = 0; k < d; ++k) {
        Vec yk = pseudo.col(k);
        center(yk);
        LassoProblem prob(design, std::move(yk));
        if (fill) grids[k] = default_grid(prob, grid_points);
        out[k] = path(prob, &grids[k]);
    }
    return out;
}

}  // namespace

StabilityPath stability_selection(const Vec& y, const Matrix& x,
                                  const Matrix& z,
                                  StabilityEstimator estimator,
                                  const StabilityOptions& opt, SeededRng& rng) {
    const int n = x.rows();
    const int p = x.cols();
    if (static_cast<int>(y.size()) != n)
        throw DimensionMismatchError("response length disagrees with x");
    if (n < 20) throw TooFewObservationsError(n, 20);
    if (n / 2 < 2 * opt.h) throw TooFewObservationsError(n, 4 * opt.h);
    if (opt.subsamples < 1) throw InvalidArgumentError("need subsamples >= 1");
    if (opt.d < 1) throw InvalidArgumentError("need d >= 1");
    const bool needs_z = estimator != StabilityEstimator::one_stage;
    if (needs_z && z.rows() != n)
        throw DimensionMismatchError("instruments row count disagrees with x");
    if (needs_z && (opt.stage1.mode == TuneMode::cv ||
                    opt.stage1.mode == TuneMode::cv1se))
        throw InvalidArgumentError(
            "stability selection runs the first stage with bic, theory, or "
            "fixed tuning");

    const bool linear = estimator == StabilityEstimator::two_stage_linear;
    const int d = linear ? 1 : opt.d;

    // Fix the penalty grids from a full-data fit.
    std::vector<Vec> grids;
    {
        Matrix xc = x;
        center_columns(xc);
        if (estimator == StabilityEstimator::one_stage) {
            sir_stage_paths(y, std::move(xc), opt.h, d, grids, opt.grid_points);
        } else {
            Matrix zc = z;
            center_columns(zc);
            StageOneFit s1 = stage_one(xc, zc, opt.stage1);
            Matrix fc = std::move(s1.fitted);
            center_columns(fc);
            if (linear) {
                Vec yc = y;
                center(yc);
                LassoProblem prob(fc, std::move(yc));
                grids.assign(1, default_grid(prob, opt.grid_points));
            } else {
                sir_stage_paths(y, std::move(fc), opt.h, d, grids,
                                opt.grid_points);
            }
        }
    }
    const int g_count = static_cast<int>(grids[0].size());
    for (const Vec& g : grids)
        if (static_cast<int>(g.size()) != g_count)
            throw NumericError("DegenerateGrid",
                               "per-direction penalty grids have unequal sizes");

    const int m = n / 2;
    std::vector<std::vector<int>> counts(p, std::vector<int>(g_count, 0));
    std::vector<long long> size_sum(g_count, 0);
    int failures = 0;

    std::vector<char> active(static_cast<std::size_t>(p) * g_count);
    for (int s = 0; s < opt.subsamples; ++s) {
        SeededRng child = rng.child(s);
        std::vector<int> idx = child.sample(n, m);
        try {
            Vec ys = subset(y, idx);
            Matrix xs = subset_rows(x, idx);
            std::vector<std::vector<LassoFit>> fits;
            if (estimator == StabilityEstimator::one_stage) {
                center_columns(xs);
                fits = sir_stage_paths(ys, std::move(xs), opt.h, d, grids,
                                       opt.grid_points);
            } else {
                center_columns(xs);
                Matrix zs = subset_rows(z, idx);
                center_columns(zs);
                StageOneFit s1 = stage_one(xs, zs, opt.stage1);
                Matrix fc = std::move(s1.fitted);
                center_columns(fc);
                if (linear) {
                    center(ys);
                    LassoProblem prob(fc, std::move(ys));
                    fits.assign(1, path(prob, &grids[0]));
                } else {
                    fits = sir_stage_paths(ys, std::move(fc), opt.h, d, grids,
                                           opt.grid_points);
                }
            }
            std::fill(active.begin(), active.end(), 0);
            for (const auto& per_dim : fits)
                for (int gi = 0; gi < g_count; ++gi)
                    for (int j : per_dim[gi].active)
                        active[static_cast<std::size_t>(j) * g_count + gi] = 1;
            for (int gi = 0; gi < g_count; ++gi) {
                int size = 0;
                for (int j = 0; j < p; ++j)
                    if (active[static_cast<std::size_t>(j) * g_count + gi]) {
                        ++counts[j][gi];
                        ++size;
                    }
                size_sum[gi] += size;
            }
        } catch (const Error&) {
            ++failures;
        }
    }

    const int successes = opt.subsamples - failures;
    if (successes == 0)
        throw NumericError("AllSubsamplesFailed",
                           "every stability subsample fit failed");

    StabilityPath out;
    out.grid = grids[0];
    out.probability = Matrix(p, g_count);
    out.avg_model_size.resize(g_count);
    out.admissible.resize(g_count);
    out.size_cap = std::sqrt(opt.cutoff * 2.0 * p * opt.pfer);
    out.failures = failures;
    out.subsamples = opt.subsamples;
    for (int gi = 0; gi < g_count; ++gi) {
        out.avg_model_size[gi] = static_cast<double>(size_sum[gi]) / successes;
        out.admissible[gi] = out.avg_model_size[gi] <= out.size_cap ? 1 : 0;
    }
    for (int j = 0; j < p; ++j) {
        double maxp = 0.0;
        for (int gi = 0; gi < g_count; ++gi) {
            double prob = static_cast<double>(counts[j][gi]) / successes;
            out.probability(j, gi) = prob;
            if (out.admissible[gi]) maxp = std::max(maxp, prob);
        }
        if (maxp >= opt.threshold) out.selected.push_back(j);
    }
    return out;
}

}  // namespace ivsir
