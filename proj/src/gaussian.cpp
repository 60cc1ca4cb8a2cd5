#include "outage/gaussian.hpp"

#include "outage/matfun.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace outage {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2 pi)
}

bool is_positive_definite(const Matrix& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) return false;
  if (!sigma.allFinite() || !matfun::is_symmetric(sigma)) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma, Eigen::EigenvaluesOnly);
  const double tol = 1e-10 * sigma.trace() / static_cast<double>(sigma.rows());
  return es.eigenvalues().minCoeff() > tol && tol > 0.0;
}

void require_positive_definite(const Matrix& sigma, const char* what) {
  matfun::require_symmetric(sigma, what);
  if (!is_positive_definite(sigma)) {
    throw NotPositiveDefiniteError(std::string(what) + " is not positive definite");
  }
}

IncrementDistribution::IncrementDistribution(Vector mean, Matrix cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (mean_.size() != cov_.rows()) {
    throw DimensionError("mean has dimension " + std::to_string(mean_.size()) +
                         " but covariance has " + std::to_string(cov_.rows()));
  }
  if (!mean_.allFinite()) throw std::invalid_argument("mean has non-finite entries");
  require_positive_definite(cov_);
  llt_.compute(cov_);
  if (llt_.info() != Eigen::Success) {
    throw NotPositiveDefiniteError("covariance Cholesky factorization failed");
  }
  log_det_ = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Matrix IncrementDistribution::precision() const {
  return matfun::symmetrize(llt_.solve(Matrix::Identity(dim(), dim())));
}

double IncrementDistribution::log_pdf(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != dim()) {
    throw DimensionError("log_pdf: sample dimension " + std::to_string(x.size()) +
                         " != distribution dimension " + std::to_string(dim()));
  }
  const Vector z = llt_.matrixL().solve(x - mean_);
  return -0.5 * (z.squaredNorm() + log_det_ + static_cast<double>(dim()) * kLog2Pi);
}

Vector IncrementDistribution::log_pdf_columns(const Matrix& samples) const {
  if (samples.rows() != dim()) {
    throw DimensionError("log_pdf_columns: sample dimension mismatch");
  }
  Matrix centered = samples.colwise() - mean_;
  llt_.matrixL().solveInPlace(centered);
  const double c = log_det_ + static_cast<double>(dim()) * kLog2Pi;
  return (-0.5 * (centered.colwise().squaredNorm().array() + c)).matrix().transpose();
}

double log_pdf(const IncrementDistribution& dist, const Vector& x) { return dist.log_pdf(x); }

double kl_divergence(const IncrementDistribution& f, const IncrementDistribution& g) {
  if (f.dim() != g.dim()) throw DimensionError("kl_divergence: dimension mismatch");
  const auto& lg = g.cholesky();
  const Matrix a = lg.matrixL().solve(f.cholesky().matrixL().toDenseMatrix());
  const Vector dm = lg.matrixL().solve(g.mean() - f.mean());
  const double d = static_cast<double>(f.dim());
  const double kl = 0.5 * (a.squaredNorm() + dm.squaredNorm() - d + g.log_det() - f.log_det());
  return std::max(kl, 0.0);
}

Matrix sample(const IncrementDistribution& dist, std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(dist.dim(), n);
  for (Index c = 0; c < n; ++c) {
    for (Index r = 0; r < dist.dim(); ++r) z(r, c) = normal(rng);
  }
  Matrix out = dist.cholesky().matrixL() * z;
  out.colwise() += dist.mean();
  return out;
}

WhiteningTransform whitening_transform(const Matrix& sigma0) {
  require_positive_definite(sigma0, "whitening covariance");
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma0);
  WhiteningTransform t;
  t.w = es.eigenvalues().array().rsqrt().matrix().asDiagonal() * es.eigenvectors().transpose();
  t.center = Vector::Zero(sigma0.rows());
  return t;
}

WhiteningTransform whitening_transform(const IncrementDistribution& g) {
  WhiteningTransform t = whitening_transform(g.cov());
  t.center = g.mean();
  return t;
}

Matrix apply_whitening(const WhiteningTransform& t, const Matrix& samples) {
  if (samples.rows() != t.w.cols()) throw DimensionError("apply_whitening: dimension mismatch");
  return t.w * (samples.colwise() - t.center);
}

IncrementDistribution push_forward(const WhiteningTransform& t, const IncrementDistribution& dist) {
  if (dist.dim() != t.w.cols()) throw DimensionError("push_forward: dimension mismatch");
  return IncrementDistribution(t.w * (dist.mean() - t.center),
                               matfun::symmetrize(t.w * dist.cov() * t.w.transpose()));
}

Vector unwhiten_mean(const WhiteningTransform& t, const Vector& mu_w) {
  return t.w.partialPivLu().solve(mu_w) + t.center;
}

Matrix unwhiten_covariance(const WhiteningTransform& t, const Matrix& sigma_w) {
  const auto lu = t.w.partialPivLu();
  const Matrix left = lu.solve(sigma_w);                      // W^-1 S
  const Matrix both = lu.solve(left.transpose()).transpose();  // W^-1 S W^-T
  return matfun::symmetrize(both);
}

Matrix conditional_covariance(const Matrix& sigma, Index i, Index k) {
  matfun::require_symmetric(sigma, "conditional_covariance input");
  const Index n = sigma.rows();
  if (n < 3) throw DimensionError("conditional_covariance needs dimension >= 3");
  if (i < 0 || k < 0 || i >= n || k >= n) throw std::out_of_range("conditional_covariance: index out of range");
  if (i == k) throw std::invalid_argument("conditional_covariance: indices must differ");

  std::vector<Index> rest;
  rest.reserve(static_cast<std::size_t>(n - 2));
  for (Index j = 0; j < n; ++j) {
    if (j != i && j != k) rest.push_back(j);
  }
  const std::vector<Index> pair{i, k};
  const Matrix s_ii = sigma(pair, pair);
  const Matrix s_ik = sigma(pair, rest);
  const Matrix s_kk = sigma(rest, rest);
  Eigen::FullPivLU<Matrix> lu(s_kk);
  if (!lu.isInvertible()) {
    throw NotPositiveDefiniteError("conditional_covariance: conditioning block is singular");
  }
  return matfun::symmetrize(s_ii - s_ik * lu.solve(s_ik.transpose()));
}

Matrix sample_covariance(const Matrix& samples) {
  const Index n = samples.cols();
  if (n < 2) throw std::invalid_argument("sample_covariance needs at least two samples");
  const Vector mean = samples.rowwise().mean();
  const Matrix c = samples.colwise() - mean;
  return matfun::symmetrize(c * c.transpose() / static_cast<double>(n - 1));
}

}  // namespace outage
