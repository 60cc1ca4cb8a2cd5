#include "outage/prior.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace outage::detector {

namespace {
void check_rho(double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("geometric prior parameter must lie in (0, 1], got " + std::to_string(rho));
  }
}
}  // namespace

double geometric_log_prior(double rho, long k) {
  check_rho(rho);
  if (k < 1) throw std::invalid_argument("geometric prior index must be >= 1");
  if (k == 1) return std::log(rho);
  if (rho == 1.0) return -std::numeric_limits<double>::infinity();
  return std::log(rho) + static_cast<double>(k - 1) * std::log1p(-rho);
}

double geometric_log_tail(double rho, long n) {
  check_rho(rho);
  if (n < 0) throw std::invalid_argument("geometric tail index must be >= 0");
  if (n == 0) return 0.0;
  if (rho == 1.0) return -std::numeric_limits<double>::infinity();
  return static_cast<double>(n) * std::log1p(-rho);
}

Vector geometric_log_prior_vector(double rho, Index n) {
  Vector out(n);
  for (Index k = 0; k < n; ++k) out(k) = geometric_log_prior(rho, static_cast<long>(k + 1));
  return out;
}

double log_sum_exp(const Vector& v) {
  if (v.size() == 0) return -std::numeric_limits<double>::infinity();
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace outage::detector
