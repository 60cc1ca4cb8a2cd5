#include "outage/localizer.hpp"

#include "outage/gaussian.hpp"
#include "outage/matfun.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace outage::localizer {

void LocalizerThresholds::validate() const {
  if (!(delta_min > 0.0 && delta_min < delta_max && delta_max < 1.0)) {
    throw std::invalid_argument("localizer thresholds need 0 < delta_min < delta_max < 1");
  }
}

namespace {

double variance_scale(const Matrix& sigma) {
  return sigma.diagonal().cwiseAbs().mean();
}

}  // namespace

double conditional_correlation(const Matrix& sigma, Index i, Index k) {
  const Matrix c = conditional_covariance(sigma, i, k);
  const double floor = kDegenerateVariance * variance_scale(sigma);
  if (c(0, 0) <= floor || c(1, 1) <= floor) {
    throw NotPositiveDefiniteError("conditional variance of pair (" + std::to_string(i) + ", " +
                                   std::to_string(k) + ") is degenerate");
  }
  return std::clamp(c(0, 1) / std::sqrt(c(0, 0) * c(1, 1)), -1.0, 1.0);
}

Matrix conditional_correlation_matrix(const Matrix& sigma) {
  matfun::require_symmetric(sigma, "sigma");
  require_positive_definite(sigma, "sigma");
  const Index n = sigma.rows();
  const Eigen::LLT<Matrix> llt(sigma);
  const Matrix p = llt.solve(Matrix::Identity(n, n));
  // Conditional variance of i given the rest is 1 / P_ii.
  const double floor = kDegenerateVariance * variance_scale(sigma);
  for (Index i = 0; i < n; ++i) {
    if (!(p(i, i) > 0.0) || 1.0 / p(i, i) <= floor) {
      throw NotPositiveDefiniteError("conditional variance of coordinate " + std::to_string(i) +
                                     " is degenerate");
    }
  }
  Matrix r(n, n);
  for (Index i = 0; i < n; ++i) {
    r(i, i) = 1.0;
    for (Index k = i + 1; k < n; ++k) {
      const double v = std::clamp(-p(i, k) / std::sqrt(p(i, i) * p(k, k)), -1.0, 1.0);
      r(i, k) = v;
      r(k, i) = v;
    }
  }
  return r;
}

std::vector<Candidate> localize(const Matrix& sigma0, const Matrix& sigma1_hat,
                                const LocalizerThresholds& th) {
  th.validate();
  if (sigma0.rows() != sigma1_hat.rows() || sigma0.cols() != sigma1_hat.cols()) {
    throw DimensionError("localize: covariance dimensions differ");
  }
  if (sigma0.rows() < 3) throw DimensionError("localize: need at least 3 buses");
  const Matrix r0 = conditional_correlation_matrix(sigma0);
  const Matrix r1 = conditional_correlation_matrix(sigma1_hat);
  std::vector<Candidate> out;
  for (Index i = 0; i < r0.rows(); ++i) {
    for (Index k = i + 1; k < r0.rows(); ++k) {
      if (std::abs(r0(i, k)) > th.delta_max && std::abs(r1(i, k)) < th.delta_min) {
        out.push_back({i, k, r0(i, k), r1(i, k)});
      }
    }
  }
  return out;
}

}  // namespace outage::localizer
