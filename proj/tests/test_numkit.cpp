#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "ivsir/errors.hpp"
#include "ivsir/numkit.hpp"
#include "ivsir/rng.hpp"
#include "oracles.hpp"

using namespace ivsir;
using testkit::Matrix;

namespace {

double eigen_residual(const Matrix& a, const SymEigen& e, int k) {
    Vec v = e.vectors.col(k);
    Vec av = testkit::matvec_ref(a, v);
    double res = 0.0;
    for (int i = 0; i < a.rows(); ++i) {
        double r = av[i] - e.values[k] * v[i];
        res += r * r;
    }
    return std::sqrt(res);
}

}  // namespace

TEST_SUITE("numkit") {

TEST_CASE("sym_eigen 2x2 closed form with sign convention") {
    Matrix a(2, 2);
    a(0, 0) = 2; a(0, 1) = 1; a(1, 0) = 1; a(1, 1) = 2;
    SymEigen e = sym_eigen(a, 2);
    REQUIRE(e.values.size() == 2);
    CHECK(e.values[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(e.values[1] == doctest::Approx(1.0).epsilon(1e-12));
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(e.vectors(0, 0) == doctest::Approx(r).epsilon(1e-10));
    CHECK(e.vectors(1, 0) == doctest::Approx(r).epsilon(1e-10));
    // Equal-magnitude entries: the tie resolves toward the lowest index.
    CHECK(e.vectors(0, 1) == doctest::Approx(r).epsilon(1e-10));
    CHECK(e.vectors(1, 1) == doctest::Approx(-r).epsilon(1e-10));
}

TEST_CASE("sym_eigen on the identity") {
    Matrix a = Matrix::identity(4);
    SymEigen e = sym_eigen(a, 2);
    CHECK(e.values[0] == doctest::Approx(1.0));
    CHECK(e.values[1] == doctest::Approx(1.0));
    for (int k = 0; k < 2; ++k) CHECK(eigen_residual(a, e, k) <= 1e-10);
}

TEST_CASE("sym_eigen matches a characteristic-polynomial oracle on 6x6") {
    SeededRng rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        Matrix a = testkit::random_symmetric(6, rng);
        SymEigen e = sym_eigen(a, 6);
        Vec oracle = testkit::eigenvalues_by_charpoly(a);
        REQUIRE(oracle.size() == 6);
        for (int k = 0; k < 6; ++k)
            CHECK(e.values[k] == doctest::Approx(oracle[k]).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("sym_eigen residual and orthogonality contract up to 50x50") {
    SeededRng rng(22);
    for (int n : {3, 10, 25, 50}) {
        Matrix a = testkit::random_symmetric(n, rng);
        double anorm = std::max(1.0, a.frob_norm());
        SymEigen e = sym_eigen(a, n);
        for (int k = 0; k < n; ++k) {
            CHECK(eigen_residual(a, e, k) <= 1e-10 * anorm);
            if (k > 0) CHECK(e.values[k - 1] >= e.values[k]);
        }
        for (int j = 0; j < n; ++j)
            for (int k = 0; k <= j; ++k) {
                double d = testkit::dot_ref(e.vectors.col(j), e.vectors.col(k));
                CHECK(std::abs(d - (j == k ? 1.0 : 0.0)) <= 1e-10);
            }
    }
}

TEST_CASE("sym_eigen input validation") {
    Matrix bad(2, 2);
    bad(0, 0) = 1; bad(0, 1) = 1; bad(1, 0) = 2; bad(1, 1) = 1;
    CHECK_THROWS_AS(sym_eigen(bad, 2), NonSymmetricError);
    Matrix nan = Matrix::identity(2);
    nan(0, 0) = std::nan("");
    CHECK_THROWS_AS(sym_eigen(nan, 1), NonFiniteError);
}

TEST_CASE("cholesky examples") {
    Matrix d(2, 2);
    d(0, 0) = 4; d(1, 1) = 9;
    Matrix l = cholesky(d);
    CHECK(l(0, 0) == doctest::Approx(2.0));
    CHECK(l(1, 1) == doctest::Approx(3.0));
    CHECK(l(0, 1) == 0.0);
    CHECK(l(1, 0) == 0.0);

    Matrix a(2, 2);
    a(0, 0) = 1; a(0, 1) = 0.2; a(1, 0) = 0.2; a(1, 1) = 1;
    Matrix la = cholesky(a);
    CHECK(la(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(la(1, 0) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(la(1, 1) == doctest::Approx(std::sqrt(0.96)).epsilon(1e-14));

    Matrix indef(2, 2);
    indef(0, 0) = 1; indef(0, 1) = 2; indef(1, 0) = 2; indef(1, 1) = 1;
    CHECK_THROWS_AS(cholesky(indef), NotPositiveDefiniteError);
    try {
        cholesky(indef);
    } catch (const NotPositiveDefiniteError& e) {
        CHECK(e.pivot == 1);
    }
}

TEST_CASE("cholesky round-trip on random SPD matrices") {
    SeededRng rng(23);
    for (int n : {2, 5, 12, 30, 50}) {
        Matrix a = testkit::random_spd(n, rng);
        Matrix l = cholesky(a);
        Matrix llt(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int k = 0; k <= std::min(i, j); ++k)
                    acc += l(i, k) * l(j, k);
                llt(i, j) = acc;
            }
        CHECK(frob_diff(llt, a) <= 1e-10 * a.frob_norm());
    }
}

TEST_CASE("cholesky_solve recovers a known solution") {
    SeededRng rng(24);
    for (int n : {3, 8, 20}) {
        Matrix a = testkit::random_spd(n, rng);
        Vec x(n);
        for (double& v : x) v = rng.uniform(-3.0, 3.0);
        Vec b = testkit::matvec_ref(a, x);
        Vec got = cholesky_solve(cholesky(a), b);
        CHECK(testkit::max_abs_diff(got, x) <= 1e-8 * std::max(1.0, max_abs(x)));
    }
}

TEST_CASE("gram_schmidt examples and contract") {
    Matrix in(2, 2);
    in(0, 0) = 1; in(0, 1) = 1;
    in(1, 0) = 0; in(1, 1) = 1;
    Matrix q = gram_schmidt(in);
    CHECK(q(0, 0) == doctest::Approx(1.0));
    CHECK(q(1, 0) == doctest::Approx(0.0));
    CHECK(q(0, 1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(q(1, 1) == doctest::Approx(1.0));

    // Orthonormal input maps to itself.
    Matrix rot(2, 2);
    const double c = std::cos(0.7), s = std::sin(0.7);
    rot(0, 0) = c; rot(0, 1) = -s; rot(1, 0) = s; rot(1, 1) = c;
    Matrix q2 = gram_schmidt(rot);
    CHECK(frob_diff(q2, rot) <= 1e-12);

    SeededRng rng(25);
    Matrix r = testkit::random_matrix(5, 2, rng);
    Matrix q3 = gram_schmidt(r);
    // Q^T Q = I
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            double d = testkit::dot_ref(q3.col(a), q3.col(b));
            CHECK(std::abs(d - (a == b ? 1.0 : 0.0)) <= 1e-10);
        }
    // Column 1 direction preserved.
    double n0 = std::sqrt(testkit::dot_ref(r.col(0), r.col(0)));
    for (int i = 0; i < 5; ++i)
        CHECK(q3(i, 0) == doctest::Approx(r(i, 0) / n0).epsilon(1e-12));
    // Span preserved: original columns project onto span(Q) without residual.
    for (int col = 0; col < 2; ++col) {
        Vec v = r.col(col);
        Vec proj(5, 0.0);
        for (int a = 0; a < 2; ++a) {
            double coef = testkit::dot_ref(q3.col(a), v);
            for (int i = 0; i < 5; ++i) proj[i] += coef * q3(i, a);
        }
        CHECK(testkit::max_abs_diff(proj, v) <= 1e-10);
    }

    Matrix dep(3, 2);
    for (int i = 0; i < 3; ++i) { dep(i, 0) = i + 1.0; dep(i, 1) = 2.0 * (i + 1.0); }
    CHECK_THROWS_AS(gram_schmidt(dep), RankDeficientError);
}

TEST_CASE("mann_whitney_auc examples") {
    CHECK(mann_whitney_auc({0.9, 0.8, 0.1}, {1, 1, 0}) == doctest::Approx(1.0));
    CHECK(mann_whitney_auc({0.1, 0.8, 0.9}, {1, 0, 0}) == doctest::Approx(0.0));
    CHECK(mann_whitney_auc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}) ==
          doctest::Approx(0.5));
    CHECK_THROWS_AS(mann_whitney_auc({1.0, 2.0}, {1, 1}), DegenerateLabelsError);
}

TEST_CASE("mann_whitney_auc equals the pairwise count for n <= 12") {
    SeededRng rng(26);
    for (int trial = 0; trial < 300; ++trial) {
        int n = 2 + static_cast<int>(rng.below(11));
        Vec scores(n);
        std::vector<int> labels(n);
        // Draw from a small value set so ties actually occur.
        for (int i = 0; i < n; ++i) scores[i] = static_cast<double>(rng.below(4));
        bool any0 = false, any1 = false;
        for (int i = 0; i < n; ++i) {
            labels[i] = rng.bernoulli(0.5) ? 1 : 0;
            (labels[i] ? any1 : any0) = true;
        }
        if (!any0) labels[0] = 0;
        if (!any1) labels[n - 1] = 1;
        double got = mann_whitney_auc(scores, labels);
        double want = testkit::auc_pairwise_ref(scores, labels);
        CHECK(got == doctest::Approx(want).epsilon(1e-14));
    }
}

}  // TEST_SUITE
