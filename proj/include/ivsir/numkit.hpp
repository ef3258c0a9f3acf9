#pragma once

#include <vector>

#include "ivsir/matrix.hpp"

namespace ivsir {

struct SymEigen {
    Vec values;      // descending
    Matrix vectors;  // p x k, column j pairs with values[j]
};

// Top-k eigenpairs of a symmetric matrix by cyclic Jacobi.  Contract:
//   - residual ||A v - lambda v||_2 <= 1e-10 * max(1, ||A||_F) per pair,
//   - pairwise orthogonality to 1e-10,
//   - sign convention: each vector's largest-magnitude entry is positive,
//     ties resolved toward the lowest index.
// Input must be symmetric to 1e-8 relative tolerance and finite.
SymEigen sym_eigen(const Matrix& a, int k);

// Lower-triangular L with L L^T = a (1e-10 relative).  Throws
// NotPositiveDefiniteError with the pivot index on failure.
Matrix cholesky(const Matrix& a);

// Solves a x = b given the Cholesky factor L of a.
Vec cholesky_solve(const Matrix& l, const Vec& b);

// Orthonormalizes columns left to right (column 1 direction preserved), then
// normalizes all columns.  Throws RankDeficientError when a residual column
// norm falls below 1e-12.
Matrix gram_schmidt(const Matrix& cols);

// Mann-Whitney AUC of scores against binary labels; ties count 1/2.
double mann_whitney_auc(const Vec& scores, const std::vector<int>& labels);

}  // namespace ivsir
