#pragma once

// Branch outage localization from changes in conditional correlation.

#include "outage/types.hpp"

#include <vector>

namespace outage::localizer {

struct LocalizerThresholds {
  double delta_max = 0.5;
  double delta_min = 0.1;
  void validate() const;
};

/// Conditional variances below this fraction of the mean marginal variance
/// are treated as numerically unresolvable.
inline constexpr double kDegenerateVariance = 1e-12;

/// Correlation of coordinates i and k given all others, from the literal
/// Schur complement. 0-based indices.
double conditional_correlation(const Matrix& sigma, Index i, Index k);

/// All pairwise conditional correlations at once via the precision matrix,
/// rho_ik = -P_ik / sqrt(P_ii P_kk). Diagonal is set to 1.
Matrix conditional_correlation_matrix(const Matrix& sigma);

struct Candidate {
  Index i;  ///< 0-based, i < k
  Index k;
  double rho_pre;
  double rho_post;
  bool operator==(const Candidate& o) const { return i == o.i && k == o.k; }
};

/// Every pair with |rho(sigma0)| > delta_max and |rho(sigma1_hat)| < delta_min,
/// sorted by (i, k).
std::vector<Candidate> localize(const Matrix& sigma0, const Matrix& sigma1_hat,
                                const LocalizerThresholds& th = {});

}  // namespace outage::localizer
