#include "outage/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>

namespace outage::harness {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

OutageModel grid_outage_model(const grid::GridTopology& top, const std::vector<std::pair<int, int>>& outage,
                              const grid::InjectionStats& inj, grid::SensitivityChannel channel) {
  if (outage.empty()) throw std::invalid_argument("outage: no branches given");
  std::vector<int> removed;
  for (const auto& [a, b] : outage) {
    const auto found = top.find_branches(a, b);
    if (found.empty()) {
      throw std::invalid_argument("outage: no branch between buses " + std::to_string(a) + " and " +
                                  std::to_string(b));
    }
    removed.insert(removed.end(), found.begin(), found.end());
  }
  std::sort(removed.begin(), removed.end());
  removed.erase(std::unique(removed.begin(), removed.end()), removed.end());

  const Matrix z0 = grid::sensitivity_matrix(top, channel);
  const grid::OutageResult post = grid::apply_outage(top, removed);
  const Matrix z1 = grid::sensitivity_matrix(post.topology, channel);

  OutageModel m{grid::derive_increment_distribution(z0, inj), grid::derive_increment_distribution(z1, inj),
                top.non_slack_buses(), {}, post.connected};
  std::set<std::pair<Index, Index>> truth;
  for (const auto& [a, b] : outage) {
    const auto ia = std::find(m.buses.begin(), m.buses.end(), a);
    const auto ib = std::find(m.buses.begin(), m.buses.end(), b);
    if (ia == m.buses.end() || ib == m.buses.end()) continue;  // touches the slack
    const Index ca = ia - m.buses.begin();
    const Index cb = ib - m.buses.begin();
    truth.insert({std::min(ca, cb), std::max(ca, cb)});
  }
  m.truth.assign(truth.begin(), truth.end());
  return m;
}

OutageModel gaussian_model(IncrementDistribution g, IncrementDistribution f) {
  if (g.dim() != f.dim()) throw DimensionError("pre and post distributions differ in dimension");
  return OutageModel{std::move(g), std::move(f), {}, {}, true};
}

Index covered_count(Index dim, double coverage) {
  if (!(coverage > 0.0 && coverage <= 1.0)) throw std::invalid_argument("coverage must lie in (0, 1]");
  return std::clamp<Index>(std::lround(coverage * static_cast<double>(dim)), 1, dim);
}

Trial simulate_trial(const OutageModel& model, const TrialOptions& opts, std::uint64_t seed) {
  if (!(opts.rho > 0.0 && opts.rho < 1.0)) throw std::invalid_argument("rho must lie in (0, 1)");
  if (opts.length < 1) throw std::invalid_argument("stream length must be >= 1");
  if (opts.noise_level < 0.0) throw std::invalid_argument("noise_level must be >= 0");
  std::mt19937_64 rng(seed);
  std::geometric_distribution<long> geo(opts.rho);
  Trial t;
  do {
    t.lambda = geo(rng) + 1;
  } while (t.lambda > opts.length);

  const Index d = model.g.dim();
  Matrix full(d, opts.length);
  const Index pre = t.lambda - 1;
  full.leftCols(pre) = sample(model.g, rng, pre);
  full.rightCols(opts.length - pre) = sample(model.f, rng, opts.length - pre);
  if (opts.noise_level > 0.0) {
    std::normal_distribution<double> noise(0.0, std::sqrt(2.0) * opts.noise_level);
    for (Index c = 0; c < full.cols(); ++c) {
      for (Index r = 0; r < d; ++r) full(r, c) += noise(rng);
    }
  }

  t.kept.resize(static_cast<std::size_t>(d));
  std::iota(t.kept.begin(), t.kept.end(), Index{0});
  const Index keep = covered_count(d, opts.coverage);
  if (keep < d) {
    std::shuffle(t.kept.begin(), t.kept.end(), rng);
    t.kept.resize(static_cast<std::size_t>(keep));
    std::sort(t.kept.begin(), t.kept.end());
    t.stream = full(t.kept, Eigen::all);
  } else {
    t.stream = std::move(full);
  }
  return t;
}

IncrementDistribution observed(const IncrementDistribution& d, const std::vector<Index>& kept, double noise_level) {
  Matrix cov = d.cov()(kept, kept);
  cov.diagonal().array() += 2.0 * noise_level * noise_level;
  return IncrementDistribution(d.mean()(kept), cov);
}

grid::GridTopology GridSpec::resolve() const {
  if (topology) return *topology;
  return grid::generate_test_grid(kind, size, seed, gen);
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (!(coverage > 0.0 && coverage <= 1.0)) throw std::invalid_argument("coverage must lie in (0, 1]");
  if (!(noise_level >= 0.0)) throw std::invalid_argument("noise_level must be >= 0");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (alphas.empty()) throw std::invalid_argument("alphas must not be empty");
  if (stream_length && *stream_length < 1) throw std::invalid_argument("stream_length must be >= 1");
  for (double a : alphas) {
    detector_config(a).validate();
  }
  thresholds.validate();
  if (kind == ScenarioKind::gaussian) {
    if (!pre || !post) throw std::invalid_argument("gaussian scenario needs pre and post distributions");
    if (pre->dim() != post->dim()) throw DimensionError("pre and post distributions differ in dimension");
  } else if (outage.empty()) {
    throw std::invalid_argument("grid scenario needs at least one outage branch");
  }
}

long ExperimentConfig::length() const {
  return stream_length ? *stream_length : static_cast<long>(std::ceil(50.0 / rho));
}

detector::DetectorConfig ExperimentConfig::detector_config(double alpha) const {
  return detector::DetectorConfig{rho, alpha, window, learner, mode, min_learning_window};
}

bool ExperimentConfig::whitening() const {
  return whiten ? *whiten : kind == ScenarioKind::grid;
}

OutageModel ExperimentConfig::build_model() const {
  if (kind == ScenarioKind::gaussian) return gaussian_model(*pre, *post);
  const grid::GridTopology top = grid.resolve();
  const auto inj = grid::random_injection_stats(top.bus_count() - 1, injection_seed);
  return grid_outage_model(top, outage, inj, channel);
}

namespace {

bool localized_correctly(const OutageModel& model, const std::vector<Index>& kept,
                         const std::vector<localizer::Candidate>& found) {
  std::vector<Index> position(static_cast<std::size_t>(model.g.dim()), -1);
  for (std::size_t p = 0; p < kept.size(); ++p) position[static_cast<std::size_t>(kept[p])] = static_cast<Index>(p);
  std::set<std::pair<Index, Index>> expected;
  for (const auto& [a, b] : model.truth) {
    const Index pa = position[static_cast<std::size_t>(a)];
    const Index pb = position[static_cast<std::size_t>(b)];
    if (pa >= 0 && pb >= 0) expected.insert({std::min(pa, pb), std::max(pa, pb)});
  }
  std::set<std::pair<Index, Index>> got;
  for (const auto& c : found) got.insert({c.i, c.k});
  return got == expected;
}

}  // namespace

TrialRecord run_trial(const ExperimentConfig& config, const OutageModel& model, int index) {
  TrialRecord rec;
  rec.index = index;
  rec.seed = derive_seed(config.seed, static_cast<std::uint64_t>(index));
  const std::size_t na = config.alphas.size();
  rec.tau.assign(na, std::nullopt);
  rec.localized.assign(na, std::nullopt);
  try {
    const Trial t = simulate_trial(model, {config.rho, config.length(), config.noise_level, config.coverage}, rec.seed);
    rec.lambda = t.lambda;
    const IncrementDistribution g_obs = observed(model.g, t.kept, config.noise_level);
    const IncrementDistribution f_obs = observed(model.f, t.kept, config.noise_level);

    std::optional<WhiteningTransform> wt;
    if (config.whitening()) wt = whitening_transform(g_obs);
    const IncrementDistribution g_det = wt ? push_forward(*wt, g_obs) : g_obs;
    const IncrementDistribution f_det = wt ? push_forward(*wt, f_obs) : f_obs;
    const Matrix stream = wt ? apply_whitening(*wt, t.stream) : t.stream;

    const double min_alpha = *std::min_element(config.alphas.begin(), config.alphas.end());
    const detector::DetectorConfig dc = config.detector_config(min_alpha);
    std::optional<IncrementDistribution> f_arg;
    if (config.mode == detector::DetectionMode::f_known) f_arg = f_det;
    detector::SequentialDetector det(g_det, dc, f_arg);

    std::vector<double> log_b(na);
    for (std::size_t a = 0; a < na; ++a) log_b[a] = detector::log_threshold(config.rho, config.alphas[a]);
    std::vector<Matrix> sigma_at(na);
    for (Index n = 0; n < stream.cols(); ++n) {
      det.observe(stream.col(n));
      const double stat = det.outcome().trace.back();
      for (std::size_t a = 0; a < na; ++a) {
        if (!rec.tau[a] && stat >= log_b[a]) {
          rec.tau[a] = n + 1;
          sigma_at[a] = det.current_sigma();
        }
      }
      if (det.declared()) break;
    }

    const bool can_localize = !model.buses.empty() && t.kept.size() >= 3;
    for (std::size_t a = 0; a < na && can_localize; ++a) {
      if (!rec.tau[a] || *rec.tau[a] < rec.lambda) continue;
      const Matrix sigma1 = wt ? unwhiten_covariance(*wt, sigma_at[a]) : sigma_at[a];
      try {
        rec.localized[a] = localized_correctly(model, t.kept, localizer::localize(g_obs.cov(), sigma1, config.thresholds));
      } catch (const NotPositiveDefiniteError&) {
        rec.localized[a] = false;
      }
    }
  } catch (const std::exception& e) {
    rec.tau.assign(na, std::nullopt);
    rec.localized.assign(na, std::nullopt);
    rec.error = e.what();
  }
  return rec;
}

MetricsReport run_monte_carlo(const ExperimentConfig& config) {
  config.validate();
  const OutageModel model = config.build_model();

  std::vector<TrialRecord> records(static_cast<std::size_t>(config.trials));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < config.trials; i = next++) {
      records[static_cast<std::size_t>(i)] = run_trial(config, model, i);
    }
  };
  const int nthreads = std::min(config.threads, config.trials);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  MetricsReport rep;
  rep.trials = config.trials;
  for (const auto& r : records) rep.failures += r.error ? 1 : 0;
  const int valid = config.trials - rep.failures;
  // Identical pre and post distributions: nothing to detect, every declaration is false.
  const bool no_change = model.g.mean() == model.f.mean() && model.g.cov() == model.f.cov();
  for (std::size_t a = 0; a < config.alphas.size(); ++a) {
    AlphaMetrics m;
    m.alpha = config.alphas[a];
    m.log_threshold = detector::log_threshold(config.rho, m.alpha);
    double delay_sum = 0.0;
    for (const auto& r : records) {
      if (r.error) continue;
      if (!r.tau[a]) {
        ++m.misses;
      } else if (no_change || *r.tau[a] < r.lambda) {
        ++m.false_alarms;
      } else {
        ++m.detections;
        delay_sum += static_cast<double>(*r.tau[a] - r.lambda);
      }
      if (r.localized[a]) {
        ++m.localization_trials;
        m.localization_correct += *r.localized[a] ? 1 : 0;
      }
    }
    if (m.detections > 0) m.avg_delay = delay_sum / m.detections;
    if (valid > 0) m.false_alarm_rate = static_cast<double>(m.false_alarms) / valid;
    if (m.localization_trials > 0) {
      m.localization_accuracy = static_cast<double>(m.localization_correct) / m.localization_trials;
    }
    rep.per_alpha.push_back(m);
  }
  if (config.keep_records) rep.records = std::move(records);
  return rep;
}

}  // namespace outage::harness
