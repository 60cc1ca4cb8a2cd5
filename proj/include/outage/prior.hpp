#pragma once

// Geometric change-point prior, shared by the learner and the detector.

#include "outage/types.hpp"

namespace outage::detector {

/// log[rho (1-rho)^(k-1)], k >= 1. rho in (0, 1].
double geometric_log_prior(double rho, long k);

/// log of the tail mass sum_{k>n} pi(k) = n log(1-rho), n >= 0.
double geometric_log_tail(double rho, long n);

/// Vector of geometric_log_prior(rho, k) for k = 1..n.
Vector geometric_log_prior_vector(double rho, Index n);

/// log sum exp, tolerating -inf entries. Returns -inf for an all -inf input.
double log_sum_exp(const Vector& v);

}  // namespace outage::detector
