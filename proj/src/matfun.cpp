#include "outage/matfun.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace outage::matfun {

void ApproxConfig::validate() const {
  if (k_exp < 2 || k_exp % 2 != 0) {
    throw std::invalid_argument("k_exp must be even and >= 2, got " + std::to_string(k_exp));
  }
  if (k_log < 1) {
    throw std::invalid_argument("k_log must be >= 1, got " + std::to_string(k_log));
  }
}

bool is_symmetric(const Matrix& x, double tol) {
  if (x.rows() != x.cols()) return false;
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  return (x - x.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

void require_symmetric(const Matrix& x, const char* what) {
  if (x.rows() != x.cols() || x.rows() == 0) {
    throw DimensionError(std::string(what) + " must be square and non-empty");
  }
  if (!x.allFinite()) {
    throw std::invalid_argument(std::string(what) + " has non-finite entries");
  }
  if (!is_symmetric(x)) {
    throw NotSymmetricError(std::string(what) + " is not symmetric");
  }
}

Matrix symmetrize(const Matrix& x) { return 0.5 * (x + x.transpose()); }

double min_eigenvalue(const Matrix& x) {
  require_symmetric(x);
  Eigen::SelfAdjointEigenSolver<Matrix> es(x, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

namespace {

bool cholesky_ok(const Matrix& x) {
  Eigen::LLT<Matrix> llt(x);
  return llt.info() == Eigen::Success;
}

}  // namespace

Matrix truncated_exp(const Matrix& x, int k_exp) {
  require_symmetric(x, "truncated_exp input");
  if (k_exp < 2 || k_exp % 2 != 0) {
    throw std::invalid_argument("truncated_exp: k_exp must be even and >= 2");
  }
  const Index n = x.rows();
  const Matrix id = Matrix::Identity(n, n);
  // k_exp > -a_min  <=>  x + k_exp I is positive definite.
  if (!cholesky_ok(x + static_cast<double>(k_exp) * id)) {
    throw SeriesRegionError("truncated_exp: k_exp=" + std::to_string(k_exp) +
                            " does not exceed -a_min; series may lose positive definiteness");
  }
  // I + x/1 (I + x/2 (I + ... (I + x/K)))
  Matrix acc = id;
  for (int k = k_exp; k >= 1; --k) {
    acc = id + (x * acc) / static_cast<double>(k);
  }
  return symmetrize(acc);
}

Matrix truncated_log(const Matrix& x, int k_log) {
  require_symmetric(x, "truncated_log input");
  if (k_log < 1) throw std::invalid_argument("truncated_log: k_log must be >= 1");
  const Index n = x.rows();
  const Matrix id = Matrix::Identity(n, n);
  if (!cholesky_ok(x)) {
    throw NotPositiveDefiniteError("truncated_log: input is not positive definite");
  }
  if (!cholesky_ok(2.0 * id - x)) {
    throw SeriesRegionError("truncated_log: spectral radius of (x - I) is >= 1; series diverges");
  }
  const Matrix d = x - id;
  auto coeff = [](int k) { return (k % 2 == 1 ? 1.0 : -1.0) / static_cast<double>(k); };
  // d (c1 I + d (c2 I + ... + d cK I))
  Matrix acc = coeff(k_log) * id;
  for (int k = k_log - 1; k >= 1; --k) {
    acc = coeff(k) * id + d * acc;
  }
  return symmetrize(d * acc);
}

Matrix exact_exp_sym(const Matrix& x) {
  require_symmetric(x, "exact_exp_sym input");
  Eigen::SelfAdjointEigenSolver<Matrix> es(x);
  const Matrix& q = es.eigenvectors();
  return symmetrize(q * es.eigenvalues().array().exp().matrix().asDiagonal() * q.transpose());
}

Matrix exact_log_sym(const Matrix& x) {
  require_symmetric(x, "exact_log_sym input");
  Eigen::SelfAdjointEigenSolver<Matrix> es(x);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw NotPositiveDefiniteError("exact_log_sym: input is not positive definite");
  }
  const Matrix& q = es.eigenvectors();
  return symmetrize(q * es.eigenvalues().array().log().matrix().asDiagonal() * q.transpose());
}

Matrix random_symmetric(std::mt19937_64& rng, Index dim, double lo, double hi) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> eig(lo, hi);
  Matrix g(dim, dim);
  for (Index c = 0; c < dim; ++c) {
    for (Index r = 0; r < dim; ++r) g(r, c) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  // Sign fix so that Q is Haar distributed.
  const Vector d = qr.matrixQR().diagonal();
  for (Index c = 0; c < dim; ++c) {
    if (d(c) < 0.0) q.col(c) = -q.col(c);
  }
  Vector a(dim);
  for (Index i = 0; i < dim; ++i) a(i) = eig(rng);
  return symmetrize(q * a.asDiagonal() * q.transpose());
}

double max_relative_error(const Matrix& approx, const Matrix& exact) {
  if (approx.rows() != exact.rows() || approx.cols() != exact.cols()) {
    throw DimensionError("max_relative_error: shape mismatch");
  }
  const double scale = exact.cwiseAbs().maxCoeff();
  const double diff = (approx - exact).cwiseAbs().maxCoeff();
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace outage::matfun
