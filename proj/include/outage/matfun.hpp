#pragma once

// Matrix functions of symmetric matrices.
//
// The truncated Taylor series are the cheap path used by the accelerated
// covariance learner; the eigendecomposition versions are exact and double
// as test oracles.

#include "outage/types.hpp"

#include <random>

namespace outage::matfun {

/// Truncation orders for the series exponential and logarithm.
struct ApproxConfig {
  int k_exp = 12;  ///< even, >= 2
  int k_log = 16;  ///< >= 1

  void validate() const;
};

/// Absolute symmetry tolerance, scaled by max(1, max |entry|).
inline constexpr double kSymmetryTol = 1e-12;

bool is_symmetric(const Matrix& x, double tol = kSymmetryTol);

/// Throws NotSymmetricError (or DimensionError for non-square input).
void require_symmetric(const Matrix& x, const char* what = "matrix");

/// (x + x^T) / 2. Bitwise symmetric output.
Matrix symmetrize(const Matrix& x);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& x);

/// sum_{k=0}^{k_exp} x^k / k!, evaluated Horner-style.
///
/// The result is positive definite whenever k_exp is even and
/// k_exp > max(0, -a_min(x)). That condition is checked with a Cholesky
/// factorization of x + k_exp I; when it fails a SeriesRegionError is thrown
/// so the caller can raise k_exp or use exact_exp_sym.
Matrix truncated_exp(const Matrix& x, int k_exp = 12);

/// sum_{k=1}^{k_log} (-1)^{k+1} (x - I)^k / k.
///
/// Requires x positive definite (NotPositiveDefiniteError) and the spectrum of
/// x - I inside (-1, 1), i.e. 0 < eig(x) < 2 (SeriesRegionError otherwise).
Matrix truncated_log(const Matrix& x, int k_log = 16);

Matrix exact_exp_sym(const Matrix& x);
Matrix exact_log_sym(const Matrix& x);

/// Random symmetric matrix Q diag(a) Q^T with Q Haar-orthogonal and the
/// eigenvalues a drawn uniformly from [lo, hi].
Matrix random_symmetric(std::mt19937_64& rng, Index dim, double lo, double hi);

/// max |approx - exact| / max |exact|.
double max_relative_error(const Matrix& approx, const Matrix& exact);

}  // namespace outage::matfun
