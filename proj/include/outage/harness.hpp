#pragma once

// Monte Carlo driver: planted-outage streams, detection, localization and
// aggregate metrics.

#include "outage/detector.hpp"
#include "outage/gaussian.hpp"
#include "outage/grid.hpp"
#include "outage/localizer.hpp"
#include "outage/types.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace outage::harness {

inline constexpr const char* kReportSchema = "outage-report/1";

/// Counter-based seed derivation (splitmix64 of master + counter).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter);

/// Ground truth for one scenario: pre/post increment distributions over the
/// observed coordinates, and for grid scenarios which bus each coordinate is
/// and which coordinate pairs lost their branch.
struct OutageModel {
  IncrementDistribution g;
  IncrementDistribution f;
  std::vector<int> buses;                       ///< 0-based grid bus per coordinate; empty if not a grid
  std::vector<std::pair<Index, Index>> truth;   ///< removed branches as coordinate pairs (i < k)
  bool post_connected = true;
};

/// Outage given as 0-based bus pairs; every pair must name at least one branch
/// and all parallel branches between the pair are removed. Branches touching
/// the slack bus change the distributions but have no coordinate pair.
OutageModel grid_outage_model(const grid::GridTopology& top, const std::vector<std::pair<int, int>>& outage,
                              const grid::InjectionStats& inj,
                              grid::SensitivityChannel channel = grid::SensitivityChannel::real_part);

OutageModel gaussian_model(IncrementDistribution g, IncrementDistribution f);

struct TrialOptions {
  double rho = 0.04;
  long length = 1250;        ///< samples per stream
  double noise_level = 0.0;  ///< relative meter noise on voltage magnitudes
  double coverage = 1.0;     ///< fraction of coordinates observed
};

struct Trial {
  Matrix stream;              ///< observed coordinates x length
  long lambda = 1;            ///< 1-based index of the first post-change sample
  std::vector<Index> kept;    ///< observed coordinates of the model, increasing
};

/// lambda ~ Geo(rho) truncated to the stream length; samples before lambda
/// from g, the rest from f; additive increment noise with std sqrt(2)*noise;
/// a random subset of coordinates kept when coverage < 1.
Trial simulate_trial(const OutageModel& model, const TrialOptions& opts, std::uint64_t seed);

/// Model distributions restricted to `kept` with the noise variance added.
IncrementDistribution observed(const IncrementDistribution& d, const std::vector<Index>& kept, double noise_level);

/// Number of observed coordinates for a given coverage ratio.
Index covered_count(Index dim, double coverage);

enum class ScenarioKind { gaussian, grid };

struct GridSpec {
  std::optional<grid::GridTopology> topology;  ///< used when present, otherwise generated
  grid::GridKind kind = grid::GridKind::loopy;
  int size = 8;
  std::uint64_t seed = 1;
  grid::GridGenOptions gen{};
  grid::GridTopology resolve() const;
};

struct ExperimentConfig {
  ScenarioKind kind = ScenarioKind::gaussian;
  // gaussian scenario
  std::optional<IncrementDistribution> pre;
  std::optional<IncrementDistribution> post;
  // grid scenario
  GridSpec grid{};
  std::vector<std::pair<int, int>> outage;   ///< 0-based bus pairs
  std::uint64_t injection_seed = 7;
  grid::SensitivityChannel channel = grid::SensitivityChannel::real_part;

  int trials = 1000;
  std::uint64_t seed = 1;
  double rho = 0.04;
  std::vector<double> alphas{0.01};
  double noise_level = 0.0;
  double coverage = 1.0;
  std::optional<long> stream_length;          ///< default ceil(50 / rho)
  std::optional<bool> whiten;                 ///< default: on for grid, off for gaussian
  detector::DetectionMode mode = detector::DetectionMode::pgd;
  int window = 100;
  int min_learning_window = 20;
  learner::LearnerConfig learner{};
  localizer::LocalizerThresholds thresholds{};
  int threads = 1;
  bool keep_records = true;

  void validate() const;
  long length() const;
  bool whitening() const;
  detector::DetectorConfig detector_config(double alpha) const;
  OutageModel build_model() const;
};

struct TrialRecord {
  int index = 0;
  std::uint64_t seed = 0;
  long lambda = 0;
  std::vector<std::optional<long>> tau;       ///< per alpha
  std::vector<std::optional<bool>> localized; ///< per alpha; absent when not evaluated
  std::optional<std::string> error;
};

struct AlphaMetrics {
  double alpha = 0.0;
  double log_threshold = 0.0;
  int detections = 0;       ///< tau >= lambda
  int false_alarms = 0;     ///< tau < lambda; every declaration when f == g
  int misses = 0;           ///< no declaration within the stream
  std::optional<double> avg_delay;
  double false_alarm_rate = 0.0;
  int localization_trials = 0;
  int localization_correct = 0;
  std::optional<double> localization_accuracy;
};

struct MetricsReport {
  int trials = 0;
  int failures = 0;
  std::vector<AlphaMetrics> per_alpha;   ///< same order as config alphas
  std::vector<TrialRecord> records;      ///< by trial index; empty unless keep_records
};

/// One independently seeded trial, exposed for tests.
TrialRecord run_trial(const ExperimentConfig& config, const OutageModel& model, int index);

MetricsReport run_monte_carlo(const ExperimentConfig& config);

}  // namespace outage::harness
