#include "outage/detector.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace outage::detector {

void DetectorConfig::validate() const {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("detector: rho must lie in (0, 1)");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("detector: alpha must lie in (0, 1)");
  if (window < 2) throw std::invalid_argument("detector: window must be >= 2");
  if (min_learning_window < 1 || min_learning_window > window) {
    throw std::invalid_argument("detector: min_learning_window must lie in [1, window]");
  }
  learner.validate();
}

double threshold(double rho, double alpha) {
  if (!(rho > 0.0 && rho < 1.0) || !(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("threshold: rho and alpha must lie in (0, 1)");
  }
  return (1.0 - alpha) / (rho * alpha);
}

double log_threshold(double rho, double alpha) {
  threshold(rho, alpha);
  return std::log1p(-alpha) - std::log(rho) - std::log(alpha);
}

double log_posterior_ratio(const Vector& log_g, const Vector& log_f, double rho) {
  const Index n = log_g.size();
  if (n == 0) throw std::invalid_argument("log_posterior_ratio: empty window");
  if (log_f.size() != n) throw DimensionError("log_posterior_ratio: log_g/log_f length mismatch");
  // Numerator and denominator share prod g; divide it out:
  // log sum_k pi(k) prod_{n>=k} f/g  -  log tail(N)
  Vector terms(n);
  double suffix = 0.0;
  for (Index k = n - 1; k >= 0; --k) {
    suffix += log_f(k) - log_g(k);
    terms(k) = geometric_log_prior(rho, static_cast<long>(k + 1)) + suffix;
  }
  return log_sum_exp(terms) - geometric_log_tail(rho, static_cast<long>(n));
}

double log_posterior_ratio(const Matrix& window, const IncrementDistribution& g,
                           const IncrementDistribution& f, double rho) {
  return log_posterior_ratio(g.log_pdf_columns(window), f.log_pdf_columns(window), rho);
}

SequentialDetector::SequentialDetector(IncrementDistribution g, DetectorConfig config,
                                       std::optional<IncrementDistribution> f)
    : g_(std::move(g)), config_(std::move(config)), f_(std::move(f)) {
  config_.validate();
  if (config_.mode == DetectionMode::f_known) {
    if (!f_) throw std::invalid_argument("f_known mode needs the post-change distribution");
    if (f_->dim() != g_.dim()) throw DimensionError("f and g dimensions differ");
    mu_ = f_->mean();
    sigma_ = f_->cov();
  } else {
    mu_ = g_.mean();
    sigma_ = g_.cov();
  }
  outcome_.log_threshold = log_threshold(config_.rho, config_.alpha);
}

Matrix SequentialDetector::window_matrix() const {
  Matrix w(g_.dim(), static_cast<Index>(window_.size()));
  for (std::size_t i = 0; i < window_.size(); ++i) w.col(static_cast<Index>(i)) = window_[i];
  return w;
}

bool SequentialDetector::observe(const Vector& dv) {
  if (declared()) throw std::logic_error("detector already declared a change");
  if (dv.size() != g_.dim()) {
    throw DimensionError("sample " + std::to_string(seen_ + 1) + " has dimension " +
                         std::to_string(dv.size()) + ", expected " + std::to_string(g_.dim()));
  }
  ++seen_;
  window_.push_back(dv);
  log_g_.push_back(g_.log_pdf(dv));
  if (static_cast<int>(window_.size()) > config_.window) {
    window_.pop_front();
    log_g_.pop_front();
  }

  const Matrix w = window_matrix();
  Vector lg(static_cast<Index>(log_g_.size()));
  for (std::size_t i = 0; i < log_g_.size(); ++i) lg(static_cast<Index>(i)) = log_g_[i];

  Vector lf;
  if (config_.mode == DetectionMode::f_known) {
    lf = f_->log_pdf_columns(w);
  } else if (static_cast<int>(window_.size()) < config_.min_learning_window) {
    lf = Vector(lg);
  } else {
    const learner::ChangePointLikelihood lik(w, g_, config_.rho);
    auto fit = learner::pgd_fit(lik, g_, config_.learner, learner::WarmStart{mu_, sigma_});
    mu_ = std::move(fit.mu);
    sigma_ = std::move(fit.sigma);
    last_trace_ = std::move(fit.trace);
    lf = IncrementDistribution(mu_, sigma_).log_pdf_columns(w);
  }

  const double stat = log_posterior_ratio(lg, lf, config_.rho);
  outcome_.trace.push_back(stat);
  if (stat >= outcome_.log_threshold) {
    outcome_.tau = seen_;
    outcome_.mu = mu_;
    outcome_.sigma = sigma_;
    return true;
  }
  return false;
}

DetectionOutcome run_detection(const Matrix& stream, const IncrementDistribution& g,
                               const DetectorConfig& config, const std::optional<IncrementDistribution>& f) {
  SequentialDetector det(g, config, f);
  for (Index n = 0; n < stream.cols(); ++n) {
    if (det.observe(stream.col(n))) break;
  }
  return det.outcome();
}

}  // namespace outage::detector
