#pragma once

#include "outage/types.hpp"

#include <random>

namespace outage {

/// Accepted as PD iff its smallest eigenvalue exceeds 1e-10 * trace / dim.
bool is_positive_definite(const Matrix& sigma);
void require_positive_definite(const Matrix& sigma, const char* what = "covariance");

/// Multivariate Gaussian over voltage increments. Immutable; the Cholesky
/// factor and log-determinant are computed once at construction.
class IncrementDistribution {
 public:
  IncrementDistribution(Vector mean, Matrix cov);

  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  Index dim() const { return mean_.size(); }

  const Eigen::LLT<Matrix>& cholesky() const { return llt_; }
  double log_det() const { return log_det_; }
  Matrix precision() const;

  double log_pdf(const Eigen::Ref<const Vector>& x) const;

  /// log-density of every column of `samples` (dim x n).
  Vector log_pdf_columns(const Matrix& samples) const;

 private:
  Vector mean_;
  Matrix cov_;
  Eigen::LLT<Matrix> llt_;
  double log_det_ = 0.0;
};

double log_pdf(const IncrementDistribution& dist, const Vector& x);

/// Closed-form KL(f || g).
double kl_divergence(const IncrementDistribution& f, const IncrementDistribution& g);

/// n i.i.d. draws, one per column.
Matrix sample(const IncrementDistribution& dist, std::mt19937_64& rng, Index n);

/// PCA whitening: w = diag(lambda)^{-1/2} Q^T with sigma0 = Q diag(lambda) Q^T.
struct WhiteningTransform {
  Matrix w;
  Vector center;  ///< subtracted before applying w; zero for plain whitening

  Index dim() const { return w.rows(); }
};

WhiteningTransform whitening_transform(const Matrix& sigma0);
/// Centered variant: x -> w (x - center).
WhiteningTransform whitening_transform(const IncrementDistribution& g);

/// Applies the transform to every column.
Matrix apply_whitening(const WhiteningTransform& t, const Matrix& samples);

/// Distribution of w (x - center) for x ~ dist.
IncrementDistribution push_forward(const WhiteningTransform& t, const IncrementDistribution& dist);

/// Inverse map of parameters learned in whitened coordinates.
Vector unwhiten_mean(const WhiteningTransform& t, const Vector& mu_w);
Matrix unwhiten_covariance(const WhiteningTransform& t, const Matrix& sigma_w);

/// Schur complement conditional covariance of the pair (i, k) given all other
/// coordinates. Indices are 0-based. Result ordered (i, k).
Matrix conditional_covariance(const Matrix& sigma, Index i, Index k);

/// Unbiased sample covariance of columns.
Matrix sample_covariance(const Matrix& samples);

}  // namespace outage
