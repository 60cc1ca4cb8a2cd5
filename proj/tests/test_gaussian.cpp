#include "oracles.hpp"
#include "outage/gaussian.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace outage;

namespace {

IncrementDistribution scalar(double mean, double var) {
  return IncrementDistribution(Vector::Constant(1, mean), Matrix::Constant(1, 1, var));
}

double frob_rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("log_pdf known values") {
  CHECK(log_pdf(scalar(0.0, 1.0), Vector::Zero(1)) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)));
  CHECK(log_pdf(scalar(0.0, 0.5), Vector::Ones(1)) == doctest::Approx(-1.5723649).epsilon(1e-7));
}

TEST_CASE("log_pdf agrees with the dense density and peaks at the mean") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const Matrix s = oracle::random_spd(rng, 4, 0.2, 3.0);
    const Vector mu = oracle::random_vector(rng, 4, 1.0);
    const IncrementDistribution d(mu, s);
    const Vector x = oracle::random_vector(rng, 4, 1.0);
    CHECK(std::abs(d.log_pdf(x) - std::log(oracle::density(x, mu, s))) <= 1e-10);
    CHECK(d.log_pdf(mu) >= d.log_pdf(x));
  }
}

TEST_CASE("log_pdf integrates to one on a scalar grid") {
  const auto d = scalar(0.3, 0.7);
  const double sd = std::sqrt(0.7);
  const int n = 20000;
  const double lo = 0.3 - 8.0 * sd, hi = 0.3 + 8.0 * sd, h = (hi - lo) / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    sum += w * std::exp(d.log_pdf(Vector::Constant(1, lo + i * h)));
  }
  CHECK(std::abs(sum * h - 1.0) <= 1e-6);
}

TEST_CASE("distribution construction errors") {
  CHECK_THROWS_AS(IncrementDistribution(Vector::Zero(2), Matrix::Identity(3, 3)), DimensionError);
  Matrix bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(IncrementDistribution(Vector::Zero(2), bad), NotPositiveDefiniteError);
  CHECK_THROWS_AS(log_pdf(scalar(0, 1), Vector::Zero(2)), DimensionError);
}

TEST_CASE("kl_divergence") {
  const auto f = scalar(1.0, 0.2), g = scalar(0.0, 0.5);
  // 0.5 [ s1/s0 + (m1-m0)^2/s0 - 1 + ln(s0/s1) ]
  const double expected = 0.5 * (0.2 / 0.5 + 1.0 / 0.5 - 1.0 + std::log(0.5 / 0.2));
  CHECK(kl_divergence(f, g) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(kl_divergence(f, g) == doctest::Approx(1.1581).epsilon(1e-4));
  CHECK(kl_divergence(f, f) == doctest::Approx(0.0));
  CHECK_THROWS_AS(kl_divergence(f, IncrementDistribution(Vector::Zero(2), Matrix::Identity(2, 2))), DimensionError);

  std::mt19937_64 rng(11);
  for (int t = 0; t < 1000; ++t) {
    const IncrementDistribution a(oracle::random_vector(rng, 3, 0.5), oracle::random_spd(rng, 3, 0.1, 2.0));
    const IncrementDistribution b(oracle::random_vector(rng, 3, 0.5), oracle::random_spd(rng, 3, 0.1, 2.0));
    REQUIRE(kl_divergence(a, b) > 0.0);
  }
}

TEST_CASE("whitening preserves KL") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 50; ++t) {
    const IncrementDistribution g(oracle::random_vector(rng, 4, 0.3), oracle::random_spd(rng, 4, 0.05, 2.0));
    const IncrementDistribution f(oracle::random_vector(rng, 4, 0.3), oracle::random_spd(rng, 4, 0.05, 2.0));
    const auto w = whitening_transform(g);
    CHECK(std::abs(kl_divergence(f, g) - kl_divergence(push_forward(w, f), push_forward(w, g))) <= 1e-8);
  }
}

TEST_CASE("whitening_transform") {
  const auto id = whitening_transform(Matrix::Identity(3, 3));
  CHECK((id.w.transpose() * id.w - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);

  const auto four = whitening_transform(Matrix::Constant(1, 1, 4.0));
  CHECK(std::abs(four.w(0, 0)) == doctest::Approx(0.5));

  std::mt19937_64 rng(13);
  const Matrix s = oracle::random_spd(rng, 5, 0.1, 4.0);
  const auto w = whitening_transform(s);
  const Matrix prec = Eigen::FullPivLU<Matrix>(s).inverse();
  CHECK((w.w.transpose() * w.w - prec).cwiseAbs().maxCoeff() <= 1e-8);

  const Matrix x = sample(IncrementDistribution(Vector::Zero(5), s), rng, 50000);
  CHECK(frob_rel(sample_covariance(apply_whitening(w, x)), Matrix::Identity(5, 5)) <= 0.05);

  Matrix bad = Matrix::Identity(2, 2);
  bad(1, 1) = -1.0;
  CHECK_THROWS_AS(whitening_transform(bad), NotPositiveDefiniteError);
}

TEST_CASE("unwhitening inverts push_forward") {
  std::mt19937_64 rng(14);
  const IncrementDistribution g(oracle::random_vector(rng, 3, 0.3), oracle::random_spd(rng, 3, 0.1, 2.0));
  const IncrementDistribution f(oracle::random_vector(rng, 3, 0.3), oracle::random_spd(rng, 3, 0.1, 2.0));
  const auto w = whitening_transform(g);
  const auto fw = push_forward(w, f);
  CHECK((unwhiten_mean(w, fw.mean()) - f.mean()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((unwhiten_covariance(w, fw.cov()) - f.cov()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("sampling") {
  std::mt19937_64 a(5), b(5);
  const IncrementDistribution d(Vector::Zero(3), Matrix::Identity(3, 3));
  const Matrix x = sample(d, a, 10000);
  CHECK(x == sample(d, b, 10000));
  CHECK(x.rowwise().mean().cwiseAbs().maxCoeff() <= 4.0 / std::sqrt(10000.0));

  std::mt19937_64 rng(6);
  const Matrix s = oracle::random_spd(rng, 4, 0.2, 2.0);
  const Matrix y = sample(IncrementDistribution(Vector::Zero(4), s), rng, 50000);
  CHECK(frob_rel(sample_covariance(y), s) <= 0.05);
}

TEST_CASE("conditional_covariance") {
  Matrix p(3, 3);
  p << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  const Matrix s = p.inverse();
  CHECK(std::abs(conditional_covariance(s, 0, 2)(0, 1)) <= 1e-12);

  Matrix block = Matrix::Zero(4, 4);
  block.topLeftCorner(2, 2) << 2.0, 0.7, 0.7, 1.0;
  block.bottomRightCorner(2, 2) << 1.5, -0.3, -0.3, 0.8;
  CHECK((conditional_covariance(block, 0, 1) - block.topLeftCorner(2, 2)).cwiseAbs().maxCoeff() <= 1e-14);

  std::mt19937_64 rng(21);
  for (int t = 0; t < 100; ++t) {
    const Matrix r = oracle::random_spd(rng, 5, 0.1, 3.0);
    const Matrix c = conditional_covariance(r, 1, 3);
    REQUIRE((c - oracle::schur_pair(r, 1, 3)).cwiseAbs().maxCoeff() <= 1e-9);
    REQUIRE(c(0, 1) == c(1, 0));
  }

  CHECK_THROWS_AS(conditional_covariance(Matrix::Identity(2, 2), 0, 1), DimensionError);
  CHECK_THROWS_AS(conditional_covariance(s, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(conditional_covariance(s, 0, 3), std::out_of_range);
}

TEST_CASE("positive definiteness tolerance is relative to the trace") {
  CHECK(is_positive_definite(Matrix::Identity(3, 3) * 1e-8));
  Matrix m = Matrix::Identity(3, 3);
  m(2, 2) = 1e-11;
  CHECK_FALSE(is_positive_definite(m));
}
