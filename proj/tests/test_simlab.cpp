#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "doctest.h"
#include "ivsir/errors.hpp"
#include "ivsir/numkit.hpp"
#include "ivsir/rng.hpp"
#include "ivsir/simlab.hpp"
#include "ivsir/sir.hpp"
#include "oracles.hpp"

using namespace ivsir;

namespace {

SimulationConfig small_config() {
    SimulationConfig c;
    c.model = Model::i;
    c.n = 60;
    c.p = 8;
    c.q = 8;
    c.s = 2;
    c.r = 2;
    c.h = 5;
    c.seed = 42;
    return c;
}

Matrix sample_cov(const Matrix& a) {  // columns already centered
    const int n = a.rows(), p = a.cols();
    Matrix c(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            double acc = 0.0;
            for (int r = 0; r < n; ++r) acc += a(r, i) * a(r, j);
            c(i, j) = acc / (n - 1);
        }
    return c;
}

}  // namespace

TEST_SUITE("simlab") {

TEST_CASE("model and estimator vocabularies round-trip") {
    for (Model m : {Model::i, Model::ii, Model::iii, Model::iv, Model::v}) {
        CHECK(parse_model(model_name(m)) == m);
        CHECK(model_dim(m) == ((m == Model::iv || m == Model::v) ? 2 : 1));
    }
    CHECK_THROWS_AS(parse_model("vi"), InvalidArgumentError);
    CHECK_THROWS_AS(parse_model(""), InvalidArgumentError);
    for (Estimator e : {Estimator::lasso, Estimator::lsir,
                        Estimator::two_stage_lasso, Estimator::two_stage_lsir})
        CHECK(parse_estimator(estimator_name(e)) == e);
    CHECK_THROWS_AS(parse_estimator("ridge"), InvalidArgumentError);
}

TEST_CASE("make_truth satisfies its structural contract") {
    SimulationConfig c;
    c.model = Model::iv;  // two directions
    c.n = 100;
    c.p = 40;
    c.q = 40;
    c.s = 5;
    c.r = 5;
    for (int seed = 0; seed < 10; ++seed) {
        SeededRng rng(100 + seed);
        GroundTruth t = make_truth(c, rng);

        REQUIRE(static_cast<int>(t.support.size()) == c.s);
        CHECK(std::is_sorted(t.support.begin(), t.support.end()));

        // B: sparsity pattern, magnitudes, orthogonal columns.
        REQUIRE(t.b.rows() == c.p);
        REQUIRE(t.b.cols() == 2);
        double b12 = 0.0;
        for (int row = 0; row < c.p; ++row) {
            const bool on = std::binary_search(t.support.begin(),
                                               t.support.end(), row);
            if (!on) {
                CHECK(t.b(row, 0) == 0.0);
                CHECK(t.b(row, 1) == 0.0);
            } else {
                CHECK(std::abs(t.b(row, 0)) >= 0.5);
                CHECK(std::abs(t.b(row, 0)) <= 1.0);
            }
            b12 += t.b(row, 0) * t.b(row, 1);
        }
        CHECK(std::abs(b12) <= 1e-10);

        // Gamma: r entries per column in the configured magnitude band.
        for (int j = 0; j < c.p; ++j) {
            int nz = 0;
            for (int i = 0; i < c.q; ++i)
                if (t.gamma(i, j) != 0.0) {
                    ++nz;
                    CHECK(std::abs(t.gamma(i, j)) >= c.gamma_lo);
                    CHECK(std::abs(t.gamma(i, j)) <= c.gamma_hi);
                }
            CHECK(nz == c.r);
        }

        // Sigma: AR(1) interior, endogeneity column, inflated corner, SPD.
        REQUIRE(t.sigma.rows() == c.p + 1);
        Matrix uu(c.p, c.p);
        for (int i = 0; i < c.p; ++i)
            for (int j = 0; j < c.p; ++j) {
                CHECK(t.sigma(i, j) == std::pow(0.2, std::abs(i - j)));
                uu(i, j) = t.sigma(i, j);
            }
        int extras = 0;
        for (int i = 0; i < c.p; ++i) {
            CHECK(t.sigma(i, c.p) == t.sigma(c.p, i));
            if (std::binary_search(t.support.begin(), t.support.end(), i)) {
                double v = 0.0;
                for (int k : t.support) v -= t.sigma(i, k) * t.b(k, 0);
                CHECK(t.sigma(i, c.p) == doctest::Approx(v).epsilon(1e-12));
            } else if (t.sigma(i, c.p) != 0.0) {
                CHECK(t.sigma(i, c.p) == 0.3);
                ++extras;
            }
        }
        CHECK(extras == 5);

        Vec s_ue(c.p);
        for (int i = 0; i < c.p; ++i) s_ue[i] = t.sigma(i, c.p);
        Vec w = cholesky_solve(cholesky(uu), s_ue);
        double quad = 0.0;
        for (int i = 0; i < c.p; ++i) quad += s_ue[i] * w[i];
        const double slack = t.sigma(c.p, c.p) - quad;
        CHECK(slack > 0.0);
        CHECK(slack < 0.2);

        CHECK_NOTHROW(cholesky(t.sigma));  // SPD certificate
        CHECK(t.sigma_chol.rows() == c.p + 1);
    }
}

TEST_CASE("endogeneity_angle is bounded away from zero for both z kinds") {
    SimulationConfig c;
    c.p = 40;
    c.q = 40;
    c.s = 5;
    c.r = 5;
    for (int seed = 0; seed < 5; ++seed) {
        SeededRng rng(300 + seed);
        GroundTruth t = make_truth(c, rng);
        CHECK(endogeneity_angle(t, ZKind::continuous) > 1e-3);
        CHECK(endogeneity_angle(t, ZKind::bernoulli) > 1e-3);
    }
}

TEST_CASE("generate with a silenced noise column returns an exact linear law") {
    SimulationConfig c = small_config();
    SeededRng rng(7);
    GroundTruth t = make_truth(c, rng);
    for (int i = 0; i <= c.p; ++i) {
        t.sigma(i, c.p) = 0.0;
        t.sigma(c.p, i) = 0.0;
    }
    SeededRng gen_rng(11);
    Dataset d = generate(c, t, gen_rng);
    REQUIRE(d.y.size() == static_cast<std::size_t>(c.n));
    // y_i = x_i' b exactly; centering commutes with the linear map.
    for (int i = 0; i < c.n; ++i) {
        double pred = 0.0;
        for (int row : t.support) pred += d.x(i, row) * t.b(row, 0);
        CHECK(d.y[i] == doctest::Approx(pred).epsilon(1e-10).scale(1.0));
    }
    // Columns really are centered.
    for (int j = 0; j < c.p; ++j) {
        double m = 0.0;
        for (int i = 0; i < c.n; ++i) m += d.x(i, j);
        CHECK(std::abs(m / c.n) <= 1e-12);
    }
    CHECK(d.resampled == 0);
}

TEST_CASE("generated data matches the population covariances at large n") {
    SimulationConfig c;
    c.model = Model::i;
    c.n = 5000;
    c.p = 6;
    c.q = 6;
    c.s = 3;
    c.r = 3;
    c.seed = 1;
    SeededRng rng(13);
    GroundTruth t = make_truth(c, rng);
    SeededRng gen_rng(17);
    Dataset d = generate(c, t, gen_rng);

    const double tol_z = 3.5 / std::sqrt(static_cast<double>(c.n));
    Matrix cov_z = sample_cov(d.z);
    for (int i = 0; i < c.q; ++i)
        for (int j = 0; j < c.q; ++j)
            CHECK(std::abs(cov_z(i, j) - (i == j ? 1.0 : 0.0)) <= tol_z);

    // Recover U = X - Z Gamma and eps = y - X b (both centered) and compare
    // their joint covariance against Sigma.
    Matrix ue(c.n, c.p + 1);
    for (int i = 0; i < c.n; ++i) {
        for (int j = 0; j < c.p; ++j) {
            double acc = d.x(i, j);
            for (int k = 0; k < c.q; ++k) acc -= t.gamma(k, j) * d.z(i, k);
            ue(i, j) = acc;
        }
        double e = d.y[i];
        for (int row : t.support) e -= d.x(i, row) * t.b(row, 0);
        ue(i, c.p) = e;
    }
    Matrix cov_ue = sample_cov(ue);
    const double tol_ue = 6.0 / std::sqrt(static_cast<double>(c.n));
    for (int i = 0; i <= c.p; ++i)
        for (int j = 0; j <= c.p; ++j)
            CHECK(std::abs(cov_ue(i, j) - t.sigma(i, j)) <= tol_ue);
}

TEST_CASE("bernoulli instruments have the matching marginal law") {
    SimulationConfig c = small_config();
    c.z_kind = ZKind::bernoulli;
    c.n = 4000;
    SeededRng rng(19);
    GroundTruth t = make_truth(c, rng);
    SeededRng gen_rng(23);
    Dataset d = generate(c, t, gen_rng);
    Matrix cov_z = sample_cov(d.z);
    const double tol = 3.5 / std::sqrt(static_cast<double>(c.n));
    for (int i = 0; i < c.q; ++i)
        for (int j = 0; j < c.q; ++j)
            CHECK(std::abs(cov_z(i, j) - (i == j ? 0.25 : 0.0)) <= tol);
}

TEST_CASE("monotone links preserve the slicing of the linear model") {
    SimulationConfig base = small_config();
    base.n = 150;
    SeededRng truth_rng(29);
    GroundTruth t = make_truth(base, truth_rng);

    auto slices_for = [&](Model m) {
        SimulationConfig c = base;
        c.model = m;
        SeededRng gen_rng(31);  // identical draw stream per model
        Dataset d = generate(c, t, gen_rng);
        return make_slices(d.y, c.h).assignment;
    };
    std::vector<int> lin = slices_for(Model::i);
    CHECK(slices_for(Model::ii) == lin);
    CHECK(slices_for(Model::iii) == lin);
}

TEST_CASE("projection_error: examples, invariance, and bounds") {
    Matrix e1(4, 1), e2(4, 1);
    e1(0, 0) = 1.0;
    e2(1, 0) = 1.0;
    CHECK(projection_error(e1, e2) == doctest::Approx(std::sqrt(2.0)));
    CHECK(projection_error(e1, e1) == doctest::Approx(0.0).scale(1.0));

    // Scale invariance of the spans.
    Matrix e1s = e1;
    for (int i = 0; i < 4; ++i) e1s(i, 0) *= -17.0;
    CHECK(projection_error(e1s, e2) == doctest::Approx(std::sqrt(2.0)));

    SeededRng rng(37);
    Matrix b = testkit::random_matrix(9, 2, rng);
    Matrix bt = testkit::random_matrix(9, 2, rng);
    // Right-multiplying by an invertible matrix keeps the span.
    Matrix r(2, 2);
    r(0, 0) = 2.0; r(0, 1) = -1.0; r(1, 0) = 0.5; r(1, 1) = 3.0;
    Matrix br = matmul(b, r);
    CHECK(projection_error(br, b) <= 1e-8);
    CHECK(projection_error(br, bt) ==
          doctest::Approx(projection_error(b, bt)).epsilon(1e-8));

    double err = projection_error(b, bt);
    CHECK(err >= 0.0);
    CHECK(err <= std::sqrt(4.0) + 1e-9);

    // Zero estimate: distance is the Frobenius norm of the true projection.
    Matrix zero(9, 2);
    Matrix ortho(9, 2);
    ortho(0, 0) = 1.0;
    ortho(3, 1) = 1.0;
    CHECK(projection_error(zero, ortho) == doctest::Approx(std::sqrt(2.0)));

    // Rank-deficient estimate falls back to the span of its single direction.
    Matrix dup(9, 2);
    for (int i = 0; i < 9; ++i) dup(i, 0) = dup(i, 1) = b(i, 0);
    Matrix single(9, 1);
    for (int i = 0; i < 9; ++i) single(i, 0) = b(i, 0);
    CHECK(projection_error(dup, bt) ==
          doctest::Approx(projection_error(single, bt)).epsilon(1e-8));

    Matrix tall(5, 1);
    CHECK_THROWS_AS(projection_error(tall, e2), DimensionMismatchError);
}

TEST_CASE("selection_auc agrees with the pairwise definition") {
    Matrix sep(5, 1);
    sep(0, 0) = 2.0;
    sep(1, 0) = -1.0;  // row norm 1: still above the zero rows
    CHECK(selection_auc(sep, {0, 1}) == doctest::Approx(1.0));
    CHECK(selection_auc(sep, {3, 4}) == doctest::Approx(0.0));
    Matrix flat(5, 1);
    CHECK(selection_auc(flat, {0, 1}) == doctest::Approx(0.5));

    SeededRng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        const int p = 3 + rng.below(8);
        Matrix b(p, 2);
        for (int i = 0; i < p; ++i)
            for (int k = 0; k < 2; ++k)
                b(i, k) = rng.bernoulli(0.4) ? 0.0 : rng.normal();
        int s = 1 + rng.below(p - 1);
        std::vector<int> support = rng.sample(p, s);
        Vec scores(p);
        std::vector<int> labels(p, 0);
        for (int i = 0; i < p; ++i)
            scores[i] = std::hypot(b(i, 0), b(i, 1));
        for (int i : support) labels[i] = 1;
        CHECK(selection_auc(b, support) ==
              doctest::Approx(testkit::auc_pairwise_ref(scores, labels))
                  .epsilon(1e-12));
    }
}

TEST_CASE("run_experiment is deterministic and subset-stable") {
    SimulationConfig c = small_config();
    std::vector<Estimator> all = {Estimator::lasso, Estimator::lsir,
                                  Estimator::two_stage_lasso,
                                  Estimator::two_stage_lsir};
    ExperimentResult a = run_experiment(c, all, 3, 1);
    ExperimentResult b = run_experiment(c, all, 3, 2);
    REQUIRE(a.rows.size() == 12);
    REQUIRE(b.rows.size() == 12);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].replicate == b.rows[i].replicate);
        CHECK(a.rows[i].estimator == b.rows[i].estimator);
        CHECK(a.rows[i].error == b.rows[i].error);  // bitwise across threads
        CHECK(a.rows[i].auc == b.rows[i].auc);
    }

    // Running a subset reproduces the same per-estimator numbers.
    ExperimentResult sub = run_experiment(c, {Estimator::lsir}, 3, 1);
    REQUIRE(sub.rows.size() == 3);
    for (const ReplicateRow& row : sub.rows) {
        auto match = std::find_if(
            a.rows.begin(), a.rows.end(), [&](const ReplicateRow& r) {
                return r.replicate == row.replicate &&
                       r.estimator == Estimator::lsir;
            });
        REQUIRE(match != a.rows.end());
        CHECK(match->error == row.error);
        CHECK(match->auc == row.auc);
    }

    // Summaries agree with the raw rows.
    for (const EstimatorSummary& s : a.summaries) {
        double mean = 0.0;
        int count = 0;
        for (const ReplicateRow& r : a.rows)
            if (r.estimator == s.estimator && !r.failed) {
                mean += r.error;
                ++count;
            }
        REQUIRE(count == s.replicates);
        mean /= count;
        CHECK(s.mean_error == doctest::Approx(mean).epsilon(1e-12));
        CHECK(s.failures + s.replicates == 3);
        CHECK(s.mean_auc >= 0.0);
        CHECK(s.mean_auc <= 1.0);
    }
}

TEST_CASE("endo design: fixed targets and deterministic experiments") {
    CHECK(endo_beta() == Vec{1.0, 1.0, 0.0, 0.0});
    CHECK(endo_support() == std::vector<int>{0, 1});
    Vec r1 = endo_rho(EndoScenario::s1);
    Vec r2 = endo_rho(EndoScenario::s2);
    Vec r3 = endo_rho(EndoScenario::s3);
    REQUIRE(r1.size() == 4);
    CHECK(r1 != r2);
    CHECK(r2 != r3);
    double mag = 0.0;
    for (double v : r1) mag += std::abs(v);
    CHECK(mag > 0.0);

    EndoConfig e;
    e.n = 300;
    e.seed = 3;
    SeededRng g1(5), g2(5);
    EndoData d1 = endo_generate(e, g1);
    EndoData d2 = endo_generate(e, g2);
    CHECK(frob_diff(d1.x, d2.x) == 0.0);
    CHECK(testkit::max_abs_diff(d1.y, d2.y) == 0.0);
    REQUIRE(d1.x.cols() == 4);
    for (int j = 0; j < 4; ++j) {
        double m = 0.0;
        for (int i = 0; i < e.n; ++i) m += d1.x(i, j);
        CHECK(std::abs(m / e.n) <= 1e-12);
    }

    ExperimentResult a = run_endo_experiment(e, 2, 1);
    ExperimentResult b = run_endo_experiment(e, 2, 2);
    REQUIRE(a.summaries.size() == 1);
    CHECK(a.summaries[0].estimator == Estimator::lsir);
    CHECK(a.summaries[0].mean_error == b.summaries[0].mean_error);
    CHECK(a.summaries[0].mean_error > 0.0);
    CHECK(a.summaries[0].mean_auc == b.summaries[0].mean_auc);
}

}  // TEST_SUITE
