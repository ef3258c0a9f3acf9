#include <algorithm>
#include <cmath>
#include <numeric>
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

// Random y with distinct values plus a matching centered x.
struct Instance {
    Vec y;
    Matrix xc;
    SliceDesign slices;
};

Instance random_instance(int n, int p, int h, SeededRng& rng) {
    Instance inst;
    inst.y.resize(n);
    for (double& v : inst.y) v = rng.normal();
    inst.xc = testkit::random_centered(n, p, rng);
    inst.slices = make_slices(inst.y, h);
    return inst;
}

}  // namespace

TEST_SUITE("sir") {

TEST_CASE("make_slices rank split example") {
    Vec y = {3, 1, 2, 6, 5, 4};
    SliceDesign s = make_slices(y, 2);
    REQUIRE(s.sizes == std::vector<int>{3, 3});
    // Sorted responses 1,2,3 then 4,5,6; original positions (0-based).
    std::vector<int> first(s.order.begin(), s.order.begin() + 3);
    std::vector<int> second(s.order.begin() + 3, s.order.end());
    CHECK(first == std::vector<int>{1, 2, 0});
    CHECK(second == std::vector<int>{5, 4, 3});
    CHECK(s.assignment == std::vector<int>{0, 0, 0, 1, 1, 1});
}

TEST_CASE("make_slices remainder and tie rules") {
    Vec y(10);
    std::iota(y.begin(), y.end(), 0.0);
    SliceDesign s = make_slices(y, 3);
    CHECK(s.sizes == std::vector<int>{4, 3, 3});

    Vec constant(10, 1.0);
    SliceDesign t = make_slices(constant, 3);
    CHECK(t.sizes == std::vector<int>{4, 3, 3});
    // Ties break by original index: order is the identity.
    for (int i = 0; i < 10; ++i) CHECK(t.order[i] == i);

    CHECK_THROWS_AS(make_slices(Vec(5, 1.0), 3), TooFewObservationsError);
}

TEST_CASE("kernel hand oracle on four points") {
    Matrix x(4, 1);
    x(0, 0) = -1.5; x(1, 0) = -0.5; x(2, 0) = 0.5; x(3, 0) = 1.5;
    Vec y = {1, 2, 3, 4};
    SirKernel k = kernel(x, make_slices(y, 2));
    // Sigma = 1.25, T = 0.5 -> Lambda = 0.75 (worked by hand).
    CHECK(k.lambda(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(k.eigen.values[0] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("identical rows within each slice zero the within-slice term") {
    Matrix x(6, 2);
    double vals[3][2] = {{1.0, -2.0}, {0.5, 0.5}, {-1.5, 1.5}};
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 2; ++j) x(i, j) = vals[i / 2][j];
    center_columns(x);
    Vec y = {1, 2, 3, 4, 5, 6};
    SirKernel k = kernel(x, make_slices(y, 3));
    // T = 0, so Lambda equals the plain covariance of x.
    Matrix sigma = crossprod(x, x, 1.0 / 6);
    CHECK(frob_diff(k.lambda, sigma) <= 1e-12);
}

TEST_CASE("kernel equals the explicit D-matrix product on 100 instances") {
    SeededRng rng(51);
    for (int trial = 0; trial < 100; ++trial) {
        int h = 2 + static_cast<int>(rng.below(5));
        // n not divisible by h about half the time: unequal slices included.
        int n = 2 * h + static_cast<int>(rng.below(40));
        int p = 1 + static_cast<int>(rng.below(8));
        Instance inst = random_instance(n, p, h, rng);
        SirKernel k = kernel(inst.xc, inst.slices);
        Matrix explicit_k = testkit::explicit_kernel(inst.xc, inst.slices);
        CHECK(frob_diff(k.lambda, explicit_k) <= 1e-10);
        // Symmetry of the kernel itself.
        CHECK(frob_diff(k.lambda, k.lambda.transpose()) <= 1e-10);
    }
}

TEST_CASE("kernel is invariant to permuting observations within a slice") {
    SeededRng rng(52);
    Instance inst = random_instance(24, 4, 4, rng);
    SirKernel base = kernel(inst.xc, inst.slices);

    // Swap two observations of the same slice (rows and responses together).
    int a = inst.slices.order[inst.slices.starts[1]];
    int b = inst.slices.order[inst.slices.starts[1] + 1];
    Matrix x2 = inst.xc;
    Vec y2 = inst.y;
    for (int j = 0; j < 4; ++j) std::swap(x2(a, j), x2(b, j));
    std::swap(y2[a], y2[b]);
    SirKernel swapped = kernel(x2, make_slices(y2, 4));
    CHECK(frob_diff(base.lambda, swapped.lambda) <= 1e-12);
}

TEST_CASE("orthogonal rotation conjugates the kernel") {
    SeededRng rng(53);
    Instance inst = random_instance(30, 5, 3, rng);
    Matrix q = gram_schmidt(testkit::random_matrix(5, 5, rng));
    Matrix xq = matmul(inst.xc, q);
    SirKernel base = kernel(inst.xc, inst.slices);
    SirKernel rot = kernel(xq, make_slices(inst.y, 3));
    Matrix conj = matmul(matmul(q.transpose(), base.lambda), q);
    CHECK(frob_diff(rot.lambda, conj) <= 1e-8);
    for (int k = 0; k < 3; ++k)
        CHECK(rot.eigen.values[k] ==
              doctest::Approx(base.eigen.values[k]).epsilon(1e-8).scale(1.0));
}

TEST_CASE("kernel rejects slices with fewer than two members") {
    Matrix x(4, 1);
    x(0, 0) = -1.5; x(1, 0) = -0.5; x(2, 0) = 0.5; x(3, 0) = 1.5;
    SliceDesign s = make_slices(Vec{1, 2, 3, 4}, 2);
    s.sizes = {1, 3};
    s.starts = {0, 1};
    CHECK_THROWS_AS(kernel(x, s), SliceTooSmallError);
}

TEST_CASE("pseudo-responses match the explicit D product") {
    SeededRng rng(54);
    for (int trial = 0; trial < 20; ++trial) {
        int h = 2 + static_cast<int>(rng.below(4));
        int n = 2 * h + static_cast<int>(rng.below(30));
        int p = 2 + static_cast<int>(rng.below(5));
        Instance inst = random_instance(n, p, h, rng);
        SirKernel k = kernel(inst.xc, inst.slices);
        int d = 1;
        while (d < std::min(h, p) && k.eigen.values[d] > 1e-8) ++d;
        Matrix pseudo = pseudo_responses(k, d);
        Matrix dmat = testkit::explicit_d_matrix(inst.slices);
        for (int kk = 0; kk < d; ++kk) {
            Vec xe = testkit::matvec_ref(inst.xc, k.eigen.vectors.col(kk));
            Vec dxe = testkit::matvec_ref(dmat, xe);
            for (int i = 0; i < n; ++i)
                CHECK(pseudo(i, kk) ==
                      doctest::Approx(dxe[i] / k.eigen.values[kk])
                          .epsilon(1e-10).scale(1.0));
        }
    }
}

TEST_CASE("pseudo-response homogeneity under scaling") {
    SeededRng rng(55);
    Instance inst = random_instance(20, 3, 2, rng);
    SirKernel k1 = kernel(inst.xc, inst.slices);
    Matrix x2 = inst.xc;
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 3; ++j) x2(i, j) *= 2.0;
    SirKernel k2 = kernel(x2, inst.slices);
    CHECK(k2.eigen.values[0] ==
          doctest::Approx(4.0 * k1.eigen.values[0]).epsilon(1e-10));
    Matrix p1 = pseudo_responses(k1, 1);
    Matrix p2 = pseudo_responses(k2, 1);
    double flip = k1.eigen.vectors(0, 0) * k2.eigen.vectors(0, 0) < 0 ? -1.0 : 1.0;
    for (int i = 0; i < 20; ++i)
        CHECK(p2(i, 0) == doctest::Approx(flip * 0.5 * p1(i, 0)).epsilon(1e-8));
}

TEST_CASE("pseudo_responses guards degenerate eigenvalues") {
    // A rank-one design: the second kernel eigenvalue is numerically zero.
    SeededRng rng(56);
    Matrix x(20, 2);
    for (int i = 0; i < 20; ++i) {
        double v = rng.normal();
        x(i, 0) = v;
        x(i, 1) = 3.0 * v;
    }
    center_columns(x);
    Vec y(20);
    for (int i = 0; i < 20; ++i) y[i] = x(i, 0) + 0.1 * rng.normal();
    SirKernel k = kernel(x, make_slices(y, 4));
    CHECK_NOTHROW(pseudo_responses(k, 1));
    CHECK_THROWS_AS(pseudo_responses(k, 2), EigenvalueTooSmallError);
}

TEST_CASE("lasso_sir at zero penalty reproduces classical SIR directions") {
    SeededRng rng(57);
    for (int trial = 0; trial < 5; ++trial) {
        int n = 80, p = 6, d = 2;
        Matrix x = testkit::random_centered(n, p, rng);
        Vec y(n);
        for (int i = 0; i < n; ++i)
            y[i] = x(i, 0) + 0.5 * x(i, 1) + 0.3 * std::abs(x(i, 2)) +
                   0.2 * rng.normal();
        TuneSpec fixed0{TuneMode::fixed};
        fixed0.fixed_value = 0.0;
        SeededRng fit_rng(1);
        SdrEstimate est = lasso_sir(y, x, 8, d, fixed0, fit_rng);

        // Classical SIR via the normal equations: Sigma^-1 eta_k.
        SirKernel k = kernel(x, make_slices(y, 8));
        Matrix sigma = crossprod(x, x, 1.0 / n);
        Matrix classical(p, d);
        Matrix l = cholesky(sigma);
        for (int kk = 0; kk < d; ++kk) {
            Vec dir = cholesky_solve(l, k.eigen.vectors.col(kk));
            for (int j = 0; j < p; ++j) classical(j, kk) = dir[j];
        }
        CHECK(projection_error(est.b_hat, classical) <= 1e-6);
    }
}

TEST_CASE("lasso_sir recovers the support on clean single-index data") {
    int exact = 0;
    const int seeds = 20;
    for (int seed = 0; seed < seeds; ++seed) {
        SeededRng rng(700 + seed);
        int n = 500, p = 10;
        Matrix x = testkit::random_centered(n, p, rng);
        Vec y(n);
        for (int i = 0; i < n; ++i)
            y[i] = 1.5 * x(i, 2) - 1.0 * x(i, 7) + 0.1 * rng.normal();
        SeededRng fit_rng(900 + seed);
        SdrEstimate est = lasso_sir(y, x, 10, 1, TuneSpec{}, fit_rng);
        if (est.support == std::vector<int>{2, 7}) ++exact;
    }
    CHECK(exact >= 19);
}

TEST_CASE("lasso_sir records eigenvalues, penalties, and the support union") {
    SeededRng rng(58);
    Matrix x = testkit::random_centered(60, 5, rng);
    Vec y(60);
    for (int i = 0; i < 60; ++i) y[i] = x(i, 0) + 0.3 * rng.normal();
    SeededRng fit_rng(2);
    SdrEstimate est = lasso_sir(y, x, 6, 2, TuneSpec{TuneMode::bic}, fit_rng);
    REQUIRE(est.b_hat.cols() == 2);
    REQUIRE(est.eigenvalues.size() == 2);
    REQUIRE(est.adjusted_eigenvalues.size() == 2);
    REQUIRE(est.penalties.size() == 2);
    CHECK(est.h == 6);
    CHECK(est.d == 2);
    CHECK(est.stage == Stage::one_stage);
    for (int k = 0; k < 2; ++k) {
        double norm = 0.0;
        for (int j = 0; j < 5; ++j) norm += est.b_hat(j, k) * est.b_hat(j, k);
        CHECK(est.adjusted_eigenvalues[k] ==
              doctest::Approx(est.eigenvalues[k] * std::sqrt(norm))
                  .epsilon(1e-10).scale(1.0));
    }
    std::vector<int> u;
    for (int j = 0; j < 5; ++j)
        if (est.b_hat(j, 0) != 0.0 || est.b_hat(j, 1) != 0.0) u.push_back(j);
    CHECK(u == est.support);
}

}  // TEST_SUITE
