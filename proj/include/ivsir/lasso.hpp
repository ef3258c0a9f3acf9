#pragma once

#include <memory>
#include <vector>

#include "ivsir/matrix.hpp"
#include "ivsir/rng.hpp"

namespace ivsir {

// Lazily filled Gram cache shared by every lasso problem over one design.
// Cross-product rows (columns of X^T X / n) are computed the first time a
// coordinate activates and then reused — the first-stage fits all regress on
// the same instrument matrix, so this cache is shared p ways there.
class LassoDesign {
public:
    // x: n x m with centered columns (checked to 1e-8 against column scale).
    explicit LassoDesign(const Matrix& x);

    int n() const { return n_; }
    int m() const { return m_; }
    const double* col(int j) const { return xt_.row(j); }
    double colsq(int j) const { return colsq_[j]; }  // x_j^T x_j / n
    bool has_cross(int j) const { return !cross_[j].empty(); }
    const double* cross(int j);  // row j of X^T X / n, length m

private:
    int n_ = 0;
    int m_ = 0;
    Matrix xt_;  // m x n, row j is design column j
    Vec colsq_;
    std::vector<Vec> cross_;
};

// Centered-response lasso problem: (1/2n)||y - X b||^2 + mu * ||b||_1.
struct LassoProblem {
    LassoProblem(std::shared_ptr<LassoDesign> design_in, Vec response);
    LassoProblem(const Matrix& x, Vec response);

    std::shared_ptr<LassoDesign> design;
    Vec y;
    Vec xty;     // X^T y / n
    double y2n;  // y^T y / n
};

struct SolveOptions {
    double tol = 1e-7;      // sweep convergence: max |d beta| <= tol*max(1,||b||_inf)
    int max_sweeps = 100000;
    double kkt_tol = 1e-6;  // certificate tolerance (public contract)
};

struct LassoFit {
    Vec beta;
    double penalty = 0.0;
    int sweeps = 0;
    double kkt_residual = 0.0;
    double objective = 0.0;
    double rss_over_n = 0.0;
    int monotone_violations = 0;  // objective increases across sweeps (should be 0)
    std::vector<int> active;      // sorted indices of nonzero coefficients
};

LassoFit solve(LassoProblem& prob, double mu, const Vec* warm = nullptr,
               const SolveOptions& opt = {});

// Log-spaced grid from mu_max = ||X^T y / n||_inf down to ratio*mu_max.
Vec default_grid(const LassoProblem& prob, int points = 100, double ratio = 1e-3);

// Warm-started fits over a descending grid (default grid if none given).
std::vector<LassoFit> path(LassoProblem& prob, const Vec* grid = nullptr,
                           int points = 100, const SolveOptions& opt = {});

struct TuningReport {
    Vec grid;            // descending penalties
    Vec criterion;       // CV mean error or BIC per grid point
    Vec std_error;       // CV standard errors (empty for BIC)
    double chosen = 0.0;
    int chosen_index = 0;      // criterion minimizer (ties to larger penalty)
    int chosen_1se_index = 0;  // largest penalty within one standard error of
                               // the minimum (equals chosen_index for BIC)
};

struct CvOptions {
    int folds = 10;
    int repeats = 1;
    int grid_points = 100;
};

// K-fold cross-validation on held-out squared error.  Fold training data are
// re-centered by training means and predictions add the training response
// mean back; ties in the criterion resolve to the larger penalty.  Pass a
// descending grid to evaluate it instead of the default full-data grid.
TuningReport tune_cv(const Matrix& x, const Vec& y, const CvOptions& opt,
                     SeededRng& rng, const Vec* grid = nullptr);

// BIC(mu) = n*log(RSS/n) + df*log(n), RSS floored at 1e-12*||y||^2; ties to
// the larger penalty.
TuningReport tune_bic(const Matrix& x, const Vec& y, int grid_points = 100);

// Same criterion evaluated on an already-built problem (shares the design
// Gram cache — the first stage runs p of these against one instrument set).
TuningReport tune_bic(LassoProblem& prob, int grid_points = 100);

// BIC values for an existing path; building block for the overloads above.
Vec bic_criterion(const std::vector<LassoFit>& fits, int n, double y2n);

// Rescales columns to unit variance in place; returns the scales applied
// (1.0 for zero-variance columns).  Offered as the opt-in standardization
// flag; nothing in the estimators applies it by default.
Vec standardize_columns(Matrix& x);

}  // namespace ivsir
