#pragma once

#include <string>
#include <vector>

#include "ivsir/matrix.hpp"
#include "ivsir/rng.hpp"
#include "ivsir/sir.hpp"

namespace ivsir {

// First stage: p sparse regressions of covariate columns on the instruments.
struct StageOneFit {
    Matrix gamma_hat;               // q x p, column j regresses x_j on z
    Matrix fitted;                  // X_hat = z * gamma_hat, exactly
    Vec penalties;                  // mu_1j per column
    std::vector<int> support_sizes; // nonzero count per column
    std::vector<int> sweeps;        // solver sweeps per column
};

// x, z row-aligned with centered columns.  Default tuning is per-column BIC;
// cv needs the rng; theory uses mu_1j = c0 * sigma_j * sqrt(log(pq)/n) with
// sigma_j the residual scale of a ridge pilot fit; fixed applies one value
// to every column.
StageOneFit stage_one(const Matrix& x, const Matrix& z,
                      const TuneSpec& tuning = TuneSpec{TuneMode::bic},
                      SeededRng* rng = nullptr);

// Tuning for the two stages; the defaults mirror how the estimator is run
// in the experiments (BIC first stage, cross-validated second stage).
struct TwoStageSpec {
    TuneSpec stage1{TuneMode::bic};
    TuneSpec stage2{TuneMode::cv1se};
};

// Two-stage sparse SIR: first stage on (x, z), then lasso_sir of y on the
// fitted values.  stage1_out, when given, receives the first-stage fit.
SdrEstimate two_stage_lasso_sir(const Vec& y, const Matrix& x, const Matrix& z,
                                int h, int d, const TwoStageSpec& tuning,
                                SeededRng& rng,
                                StageOneFit* stage1_out = nullptr);

// Comparator: first stage as above, second stage a plain lasso of y on the
// fitted values.  Returns the stage-2 coefficient vector (length p).
Vec two_stage_lasso(const Vec& y, const Matrix& x, const Matrix& z,
                    const TwoStageSpec& tuning, SeededRng& rng);

// 2-means split of the adjusted eigenvalues (Lloyd iterations from the min
// and max as initial centers).  d_hat = size of the cluster holding the
// largest value; a spread of exactly zero flags the result degenerate and
// returns d_hat = count of values.
struct TwoMeans {
    std::vector<int> label;  // 0 = low cluster, 1 = high cluster
    double center_low = 0.0;
    double center_high = 0.0;
    int d_hat = 0;
    bool degenerate = false;
};

TwoMeans two_means_cluster(const Vec& values);

// Repeated cross-validated dimension estimate: per repeat, fit directions
// k = 1..H-1 at CV-chosen penalties, cluster the adjusted eigenvalues, and
// take the size of the top cluster; final = most frequent vote, ties to the
// smaller dimension.
struct DimensionVote {
    std::vector<int> votes;      // d_hat per repeat
    int final_d = 0;
    int degenerate_count = 0;    // repeats that hit the all-equal guard
    std::string regressor_choice;  // caller's label: z, x, or xhat
};

DimensionVote select_dimension(const Vec& y, const Matrix& regressors,
                               int h, int repeats, int folds, SeededRng& rng);

enum class StabilityEstimator { one_stage, two_stage, two_stage_linear };

struct StabilityOptions {
    int subsamples = 100;
    double cutoff = 0.75;     // enters the average-model-size cap
    double pfer = 1.0;        // per-family error rate budget
    double threshold = 0.5;   // max-probability decision rule
    int d = 1;
    int h = 10;
    int grid_points = 100;
    TuneSpec stage1{TuneMode::bic};  // first stage inside each subsample
};

// Selection probabilities across the stage-2 penalty grid over seeded
// half-samples.  The grid is fixed from a full-data fit; subsample fits that
// fail are counted and excluded.
struct StabilityPath {
    Vec grid;                     // stage-2 penalties (direction 1's grid)
    Matrix probability;           // p x G selection frequencies
    Vec avg_model_size;           // per grid point, over successful runs
    std::vector<char> admissible; // model size within the error-rate cap
    double size_cap = 0.0;        // sqrt(cutoff * 2 * p * pfer)
    std::vector<int> selected;    // max prob over admissible points >= threshold
    int failures = 0;
    int subsamples = 0;
};

StabilityPath stability_selection(const Vec& y, const Matrix& x,
                                  const Matrix& z,
                                  StabilityEstimator estimator,
                                  const StabilityOptions& opt, SeededRng& rng);

}  // namespace ivsir
