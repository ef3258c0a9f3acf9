#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ivsir/matrix.hpp"
#include "ivsir/rng.hpp"
#include "ivsir/twostage.hpp"

namespace ivsir {

// The five outcome models: i linear, ii exp, iii sinh (single index);
// iv product, v ratio (double index).
enum class Model { i, ii, iii, iv, v };

int model_dim(Model m);  // structural dimension d: 1 for i-iii, 2 for iv-v
const char* model_name(Model m);
Model parse_model(const std::string& name);

enum class ZKind { continuous, bernoulli };

struct SimulationConfig {
    Model model = Model::i;
    int n = 200;
    int p = 40;
    int q = 40;
    int s = 5;  // nonzero rows of B
    int r = 5;  // instruments per covariate column
    int h = 10;
    ZKind z_kind = ZKind::continuous;
    double gamma_lo = 0.75;  // |gamma| entry range (a, b)
    double gamma_hi = 1.0;
    std::uint64_t seed = 1;
    // Penalty policies for the estimators (the plain-lasso comparator always
    // cross-validates; lsir uses the stage-2 policy).
    TwoStageSpec tuning;
};

struct GroundTruth {
    Matrix b;                  // p x d, nonzero rows = support
    Matrix gamma;              // q x p
    Matrix sigma;              // (p+1) x (p+1) covariance of (U, eps)
    Matrix sigma_chol;         // cached lower Cholesky factor of sigma
    std::vector<int> support;  // sorted, size s
};

// Draws B (s nonzero rows, entries U([-1,-0.5] u [0.5,1]), second column
// orthogonalized against the first), Gamma (r entries per column from
// U([-b,-a] u [a,b])), and Sigma: AR(1) block 0.2^|i-j|, endogeneity column
// -Sigma_{S,S} beta_{1S} on the support plus five extra 0.3 entries, and
// corner sigma_{p+1,p+1} = quadratic form + U(0, 0.2).  The five extra
// positions are redrawn up to 20 times until Sigma passes Cholesky.
GroundTruth make_truth(const SimulationConfig& config, SeededRng& rng);

struct Dataset {
    Matrix z;  // n x q, centered
    Matrix x;  // n x p, centered
    Vec y;     // centered
    int resampled = 0;  // model (v) rows redrawn for a near-zero denominator
};

Dataset generate(const SimulationConfig& config, const GroundTruth& truth,
                 SeededRng& rng);

// || P(b_hat) - P(b_true) ||_F with P the projection onto the column space
// (pseudo-inverse for rank-deficient input, zero matrix for zero input).
double projection_error(const Matrix& b_hat, const Matrix& b_true);

// AUC of row norms of b_hat against the true support indicator.
double selection_auc(const Matrix& b_hat, const std::vector<int>& support);

// Angle (radians) between Sigma_X^-1 Sigma_{X,eps} and the column space of
// B, where Sigma_X = var(z) * Gamma^T Gamma + Sigma_UU.  Positive angle
// certifies that ignoring endogeneity targets the wrong subspace.
double endogeneity_angle(const GroundTruth& truth, ZKind z_kind);

// --- single-stage inconsistency demo -------------------------------------
// p = 4, beta = (1,1,0,0), X ~ N(0, I), eps correlated with X through rho;
// y = X beta + eps or sin(X beta + eps).

enum class EndoScenario { s1, s2, s3 };
enum class Link { linear, sine };

struct EndoConfig {
    EndoScenario scenario = EndoScenario::s1;
    Link link = Link::linear;
    int n = 1000;
    int h = 10;
    std::uint64_t seed = 1;
};

Vec endo_beta();                      // (1, 1, 0, 0)
std::vector<int> endo_support();      // {0, 1}
Vec endo_rho(EndoScenario scenario);  // Cov(X, eps)

struct EndoData {
    Matrix x;  // n x 4, centered
    Vec y;     // centered
};

EndoData endo_generate(const EndoConfig& config, SeededRng& rng);

// --- replicated experiments -----------------------------------------------

enum class Estimator { lasso, lsir, two_stage_lasso, two_stage_lsir };

const char* estimator_name(Estimator e);
Estimator parse_estimator(const std::string& name);

struct ReplicateRow {
    int replicate = 0;
    Estimator estimator = Estimator::lasso;
    double error = 0.0;
    double auc = 0.0;
    bool failed = false;
    std::string error_code;
};

struct EstimatorSummary {
    Estimator estimator = Estimator::lasso;
    int replicates = 0;  // successful ones
    double mean_error = 0.0;
    double sd_error = 0.0;
    double mean_auc = 0.0;
    double sd_auc = 0.0;
    int failures = 0;
};

struct ExperimentResult {
    std::vector<EstimatorSummary> summaries;  // one per requested estimator
    std::vector<ReplicateRow> rows;           // replicate-major order
    long long resampled = 0;                  // model (v) redraw total
};

// Fresh truth + dataset per replicate from child seeds; estimators get their
// own child streams keyed by estimator id, so a run with a subset of
// estimators reproduces the same per-estimator numbers.  Thread count never
// changes results.
ExperimentResult run_experiment(const SimulationConfig& config,
                                const std::vector<Estimator>& estimators,
                                int replicates, int threads);

// One-stage lasso SIR on the demo design; summaries labeled lsir.
ExperimentResult run_endo_experiment(const EndoConfig& config, int replicates,
                                     int threads);

}  // namespace ivsir
