#pragma once

// Sequential Bayesian change detection on voltage-increment streams.

#include "outage/gaussian.hpp"
#include "outage/learner.hpp"
#include "outage/prior.hpp"
#include "outage/types.hpp"

#include <deque>
#include <optional>
#include <vector>

namespace outage::detector {

enum class DetectionMode { f_known, pgd };

struct DetectorConfig {
  double rho = 0.04;    ///< geometric prior parameter
  double alpha = 0.01;  ///< maximal false-alarm rate
  int window = 100;     ///< N0: samples used by the statistic and the learner
  learner::LearnerConfig learner{};
  DetectionMode mode = DetectionMode::pgd;
  /// pgd mode: the learner runs once the window holds this many samples;
  /// before that f is taken equal to g.
  int min_learning_window = 20;

  void validate() const;
};

/// B = (1 - alpha) / (rho alpha).
double threshold(double rho, double alpha);
double log_threshold(double rho, double alpha);

/// Log posterior odds that the change point lies inside the window, from
/// per-sample log densities of the window (oldest first). The prior is
/// anchored at the first sample of the window.
double log_posterior_ratio(const Vector& log_g, const Vector& log_f, double rho);

/// Same, from raw samples (dim x N).
double log_posterior_ratio(const Matrix& window, const IncrementDistribution& g,
                           const IncrementDistribution& f, double rho);

struct DetectionOutcome {
  std::optional<long> tau;     ///< 1-based index of the declaring sample
  std::vector<double> trace;   ///< log posterior ratio after each sample
  double log_threshold = 0.0;
  std::optional<Vector> mu;    ///< post-change parameters in use at declaration
  std::optional<Matrix> sigma;
};

/// One detector per stream. Feed samples in order with observe(); after the
/// first threshold crossing the detector is closed and further samples are
/// rejected.
class SequentialDetector {
 public:
  /// `f` is required in f_known mode and ignored in pgd mode.
  SequentialDetector(IncrementDistribution g, DetectorConfig config,
                     std::optional<IncrementDistribution> f = std::nullopt);

  /// Returns true when this sample triggers the declaration.
  bool observe(const Vector& dv);

  bool declared() const { return outcome_.tau.has_value(); }
  long samples_seen() const { return seen_; }
  const DetectionOutcome& outcome() const { return outcome_; }
  const DetectorConfig& config() const { return config_; }

  /// Post-change parameters used for the most recent statistic.
  const Vector& current_mu() const { return mu_; }
  const Matrix& current_sigma() const { return sigma_; }
  const learner::LearnTrace* last_fit_trace() const { return last_trace_ ? &*last_trace_ : nullptr; }

 private:
  Matrix window_matrix() const;

  IncrementDistribution g_;
  DetectorConfig config_;
  std::optional<IncrementDistribution> f_;
  std::deque<Vector> window_;
  std::deque<double> log_g_;
  Vector mu_;
  Matrix sigma_;
  std::optional<learner::LearnTrace> last_trace_;
  long seen_ = 0;
  DetectionOutcome outcome_;
};

/// Runs a detector over the columns of `stream` until declaration or exhaustion.
DetectionOutcome run_detection(const Matrix& stream, const IncrementDistribution& g,
                               const DetectorConfig& config,
                               const std::optional<IncrementDistribution>& f = std::nullopt);

}  // namespace outage::detector
