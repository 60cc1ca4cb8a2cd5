#include "oracles.hpp"
#include "outage/detector.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace outage;
using namespace outage::detector;

namespace {

IncrementDistribution scalar(double mean, double var) {
  return IncrementDistribution(Vector::Constant(1, mean), Matrix::Constant(1, 1, var));
}

const IncrementDistribution kG = scalar(0.0, 0.5);
const IncrementDistribution kF = scalar(1.0, 0.2);

Matrix stream_with_change(long lambda, long length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix x(1, length);
  if (lambda > 1) x.leftCols(lambda - 1) = sample(kG, rng, lambda - 1);
  x.rightCols(length - lambda + 1) = sample(kF, rng, length - lambda + 1);
  return x;
}

DetectorConfig known(double alpha = 0.01) {
  DetectorConfig c;
  c.alpha = alpha;
  c.mode = DetectionMode::f_known;
  return c;
}

}  // namespace

TEST_CASE("geometric prior") {
  CHECK(std::exp(geometric_log_prior(0.04, 1)) == doctest::Approx(0.04));
  CHECK(geometric_log_tail(0.04, 0) == 0.0);
  double sum = 0.0;
  for (long k = 1; k <= 2000; ++k) sum += std::exp(geometric_log_prior(0.04, k));
  CHECK(std::abs(sum - 1.0) <= 1e-10);
  CHECK(std::abs(std::exp(geometric_log_tail(0.04, 30)) - std::pow(0.96, 30)) <= 1e-15);
  CHECK_THROWS_AS(geometric_log_prior(0.04, 0), std::invalid_argument);
  CHECK_THROWS_AS(geometric_log_prior(0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(geometric_log_tail(0.04, -1), std::invalid_argument);

  Vector v(3);
  v << -std::numeric_limits<double>::infinity(), std::log(2.0), std::log(3.0);
  CHECK(log_sum_exp(v) == doctest::Approx(std::log(5.0)));
  CHECK(log_sum_exp(Vector::Constant(2, -std::numeric_limits<double>::infinity())) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("threshold") {
  CHECK(threshold(0.04, 0.01) == doctest::Approx(2475.0));
  CHECK(threshold(0.04, 0.1) == doctest::Approx(225.0));
  CHECK(std::exp(log_threshold(0.04, 0.01)) == doctest::Approx(2475.0));
  CHECK(threshold(0.04, 0.001) > threshold(0.04, 0.01));
  CHECK_THROWS_AS(threshold(0.04, 1.0), std::invalid_argument);
}

TEST_CASE("posterior ratio with f equal to g is the prior-mass ratio") {
  CHECK(log_posterior_ratio(Vector::Zero(1), Vector::Zero(1), 0.04) == doctest::Approx(std::log(0.04 / 0.96)));
  std::mt19937_64 rng(1);
  const Matrix x = sample(kG, rng, 150);
  for (Index n = 1; n <= 150; ++n) {
    const double mass = 1.0 - std::pow(0.96, static_cast<double>(n));
    const double expected = std::log(mass) - n * std::log(0.96);
    REQUIRE(std::abs(log_posterior_ratio(x.leftCols(n), kG, kG, 0.04) - expected) <= 1e-9);
  }
}

TEST_CASE("posterior ratio matches direct products") {
  std::mt19937_64 rng(2);
  for (Index n = 1; n <= 15; ++n) {
    const Matrix x = stream_with_change(n / 2 + 1, n, rng());
    const double naive = oracle::naive_log_ratio(x, kG.mean(), kG.cov(), kF.mean(), kF.cov(), 0.04);
    REQUIRE(std::abs(log_posterior_ratio(x, kG, kF, 0.04) - naive) <= 1e-9);
  }
  CHECK_THROWS_AS(log_posterior_ratio(Vector(0), Vector(0), 0.04), std::invalid_argument);
  CHECK_THROWS_AS(log_posterior_ratio(Vector::Zero(2), Vector::Zero(3), 0.04), DimensionError);
}

TEST_CASE("posterior ratio grows on post-change data") {
  // Averaged over seeded streams the statistic rises with every sample.
  Vector mean = Vector::Zero(40);
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const Matrix x = stream_with_change(1, 40, seed);
    for (Index n = 1; n <= 40; ++n) mean(n - 1) += log_posterior_ratio(x.leftCols(n), kG, kF, 0.04) / 200.0;
  }
  for (Index n = 1; n < 40; ++n) CHECK(mean(n) > mean(n - 1));
}

TEST_CASE("first crossing and determinism") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Matrix x = stream_with_change(30, 200, seed);
    const auto out = run_detection(x, kG, known(), kF);
    REQUIRE(out.tau);
    REQUIRE(static_cast<long>(out.trace.size()) == *out.tau);
    for (std::size_t i = 0; i + 1 < out.trace.size(); ++i) REQUIRE(out.trace[i] < out.log_threshold);
    REQUIRE(out.trace.back() >= out.log_threshold);
    const auto again = run_detection(x, kG, known(), kF);
    REQUIRE(again.tau == out.tau);
    REQUIRE(again.trace == out.trace);
  }
}

TEST_CASE("declared detector rejects further samples") {
  SequentialDetector det(kG, known(0.5), kF);
  while (!det.observe(Vector::Constant(1, 1.0))) {
  }
  CHECK(det.declared());
  CHECK(det.outcome().mu);
  CHECK_THROWS_AS(det.observe(Vector::Constant(1, 1.0)), std::logic_error);
  CHECK_THROWS_AS(SequentialDetector(kG, known()), std::invalid_argument);
  SequentialDetector other(kG, known(), kF);
  CHECK_THROWS_AS(other.observe(Vector::Zero(2)), DimensionError);
}

TEST_CASE("detector config validation") {
  DetectorConfig c;
  c.window = 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = DetectorConfig{};
  c.min_learning_window = c.window + 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = DetectorConfig{};
  c.rho = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("known-f detection on the scalar pair") {
  int on_time = 0, detected = 0;
  double delay = 0.0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    const auto out = run_detection(stream_with_change(20, 400, seed), kG, known(), kF);
    if (!out.tau) continue;
    ++detected;
    if (*out.tau >= 20) {
      ++on_time;
      delay += static_cast<double>(*out.tau - 20);
    }
  }
  CHECK(detected == 1000);
  CHECK(on_time >= 990);
  delay /= on_time;
  CHECK(delay > 0.0);
  CHECK(delay < 15.0);
}

TEST_CASE("pre-change streams rarely alarm") {
  int alarms = 0;
  const int runs = 400;
  for (std::uint64_t seed = 1; seed <= runs; ++seed) {
    std::mt19937_64 rng(seed);
    if (run_detection(sample(kG, rng, 500), kG, known(), kF).tau) ++alarms;
  }
  // 0.01 plus three binomial standard errors
  CHECK(alarms <= static_cast<int>(runs * (0.01 + 3.0 * std::sqrt(0.01 * 0.99 / runs))));
}

TEST_CASE("whitening leaves known-f declarations unchanged") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const IncrementDistribution g(oracle::random_vector(rng, 3, 0.2), oracle::random_spd(rng, 3, 0.1, 1.0));
    const IncrementDistribution f(oracle::random_vector(rng, 3, 0.4), oracle::random_spd(rng, 3, 0.1, 1.0));
    Matrix x(3, 120);
    x.leftCols(40) = sample(g, rng, 40);
    x.rightCols(80) = sample(f, rng, 80);
    const auto w = whitening_transform(g);
    const auto plain = run_detection(x, g, known(), f);
    const auto white = run_detection(apply_whitening(w, x), push_forward(w, g), known(), push_forward(w, f));
    REQUIRE(plain.tau == white.tau);
    for (std::size_t i = 0; i < plain.trace.size(); ++i) REQUIRE(std::abs(plain.trace[i] - white.trace[i]) <= 1e-8);
  }
}

TEST_CASE("pgd mode learns once the window fills") {
  DetectorConfig c;
  c.min_learning_window = 5;
  SequentialDetector det(kG, c);
  const Matrix x = stream_with_change(1, 30, 4);
  for (Index n = 0; n < 4; ++n) {
    det.observe(x.col(n));
    CHECK(det.last_fit_trace() == nullptr);
    CHECK(det.outcome().trace.back() == doctest::Approx(log_posterior_ratio(Vector::Zero(n + 1), Vector::Zero(n + 1), 0.04)));
  }
  det.observe(x.col(4));
  CHECK(det.last_fit_trace() != nullptr);
  CHECK(det.current_mu()(0) != kG.mean()(0));
  const auto out = run_detection(x, kG, c);
  CHECK(out.tau);
  CHECK(out.sigma);
}
