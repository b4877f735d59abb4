#pragma once

#include "latq/permutation.hpp"
#include "latq/types.hpp"

namespace latq::linalg {

enum class TriKind { LowerUnit, UpperUnit, UpperCholesky };

// Triangular factor. For the unit-diagonal kinds, diag holds the pivots D
// of the factorization M = F diag(d) F^T; for UpperCholesky diag is empty.
struct TriFactor {
  TriKind kind;
  Matrix matrix;
  Vector diag;
};

// H = T^t (X^t X + lambda I) T for calibration matrix X and order T,
// symmetrized afterwards by averaging with its transpose.
Matrix damped_hessian(const Eigen::Ref<const Matrix>& calib, double lambda,
                      const Permutation& order);

// Upper-triangular factor A with A^t A = h and positive diagonal.
// Plain unpivoted elimination; a pivot at or below tol::kPivot throws
// NotPositiveDefinite.
TriFactor cholesky_upper(const Eigen::Ref<const Matrix>& h);

// Unit-lower L and pivots d with L diag(d) L^t = m. Same pivot rule as
// cholesky_upper.
TriFactor ldl_lower(const Eigen::Ref<const Matrix>& m);

// Unit-upper U and pivots d with U diag(d) U^t = m, built by
// reversal-conjugating ldl_lower of the reversal-conjugated input, so the
// two factorizations agree entry-for-entry bitwise under that conjugation.
TriFactor udu_upper(const Eigen::Ref<const Matrix>& m);

// Inverse of a symmetric positive definite matrix, computed by explicit
// triangular inversion of its Cholesky factor, then symmetrized.
Matrix spd_inverse(const Eigen::Ref<const Matrix>& h);

struct GramSchmidt {
  Matrix q;  // orthonormal columns
  Matrix r;  // upper triangular with positive diagonal, q*r = input
};

// Column-by-column Gram-Schmidt orthogonalization with one
// reorthogonalization pass. A column whose remainder has norm at or below
// tol::kPivot throws RankDeficient.
GramSchmidt gram_schmidt(const Eigen::Ref<const Matrix>& basis);

}  // namespace latq::linalg
