#pragma once

#include <vector>

#include "ivsir/matrix.hpp"
#include "ivsir/numkit.hpp"
#include "ivsir/rng.hpp"

namespace ivsir {

// Partition of observations into H slices by sorted response value.  Ties in
// the response break by original index (stable sort); when n % H != 0 the
// first n % H slices take the extra observation.
struct SliceDesign {
    int h = 0;
    int n = 0;
    std::vector<int> sizes;       // per-slice counts c_h
    std::vector<int> starts;      // offsets into `order`
    std::vector<int> order;       // observation indices grouped by slice
    std::vector<int> assignment;  // slice index per observation
};

SliceDesign make_slices(const Vec& y, int h);

// The slice-based kernel matrix together with what downstream steps need:
// the (centered) regressor matrix and the leading eigenpairs.
struct SirKernel {
    Matrix lambda;      // p x p: Sigma_hat - weighted within-slice covariance
    SymEigen eigen;     // top min(H, p) eigenpairs of lambda
    SliceDesign slices;
    Matrix x;           // the centered n x p matrix the kernel was built from
};

// Builds Lambda_hat = Sigma_hat - T_hat without materializing the n x n
// weighting matrix: T_hat = sum_h (c_h/n) * S_h with S_h the within-slice
// sample covariance (denominator c_h - 1).  Equals n^-1 X^T D X with
// D = I - blockdiag{c_h/(c_h-1) * P_{c_h}} for column-centered X.
SirKernel kernel(Matrix x, const SliceDesign& slices);

// Guard below which an eigenvalue is treated as zero when inverting.
inline constexpr double kEigenvalueGuard = 1e-10;

// Pseudo-responses: column k is (lambda_k)^-1 * D * X * eta_k, computed
// slice-wise.  Throws EigenvalueTooSmall if any lambda_k <= guard, k <= d.
Matrix pseudo_responses(const SirKernel& kern, int d);

// cv picks the penalty minimizing mean held-out error; cv1se the largest
// penalty within one standard error of that minimum (the sparser rule the
// usual R workflow applies by default, and the one the bundled experiment
// designs are calibrated against).
enum class TuneMode { cv, cv1se, bic, theory, fixed };

// Penalty policy for one estimation stage.  `theory` applies only to the
// first stage (rate mu_1j = c0 * sigma_j * sqrt(log(pq)/n)).
struct TuneSpec {
    TuneMode mode = TuneMode::cv1se;
    double fixed_value = 0.0;  // used when mode == fixed
    int folds = 10;
    int repeats = 1;
    int grid_points = 100;
    double c0 = 1.0;  // theory-rate constant
};

enum class Stage { one_stage, two_stage };

// A fitted basis of the dimension-reduction subspace.
struct SdrEstimate {
    Matrix b_hat;                   // p x d, column k = beta_hat_k
    Vec eigenvalues;                // lambda_k for k = 1..d
    Vec adjusted_eigenvalues;       // lambda_k * ||beta_hat_k||_2
    Vec penalties;                  // chosen mu per direction
    std::vector<int> support;       // sorted union of nonzero rows
    Stage stage = Stage::one_stage;
    int h = 0;
    int d = 0;
};

// Sparse SIR: slices y, builds the kernel on an internally centered copy of
// x, then solves d penalized regressions of the pseudo-responses on x.  The
// rng feeds cross-validation only (ignored for bic/fixed tuning).
SdrEstimate lasso_sir(const Vec& y, const Matrix& x, int h, int d,
                      const TuneSpec& tuning, SeededRng& rng);

}  // namespace ivsir
