#include "outage/learner.hpp"

#include "outage/prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace outage::learner {

VectorMirrorMap mirror_euclidean() {
  VectorMirrorMap m;
  m.name = "euclidean";
  m.potential = [](const Vector& mu) { return 0.5 * mu.squaredNorm(); };
  m.grad = [](const Vector& mu) { return mu; };
  m.inv_grad = [](const Vector& x) { return x; };
  m.feasible = [](const Vector& mu) { return mu.allFinite(); };
  return m;
}

VectorMirrorMap mirror_bounded_interval(double bound) {
  if (!(bound > 0.0)) throw std::invalid_argument("mirror_bounded_interval: bound must be > 0");
  auto feasible = [bound](const Vector& mu) {
    return mu.allFinite() && (mu.array().abs() < bound).all();
  };
  auto require = [feasible, bound](const Vector& mu) {
    if (!feasible(mu)) {
      throw std::domain_error("bounded-interval mirror map: parameter outside (-" + std::to_string(bound) +
                              ", " + std::to_string(bound) + ")");
    }
  };
  VectorMirrorMap m;
  m.name = "bounded_interval";
  m.feasible = feasible;
  m.potential = [bound, require](const Vector& mu) {
    require(mu);
    const auto up = bound + mu.array();
    const auto down = bound - mu.array();
    return (up * up.log() + down * down.log() + mu.array()).sum();
  };
  m.grad = [bound, require](const Vector& mu) {
    require(mu);
    return Vector(((bound + mu.array()) / (bound - mu.array())).log() + 1.0);
  };
  m.inv_grad = [bound](const Vector& x) {
    // tanh saturates to exactly +-1 for large arguments; keep the result on
    // the last representable interior point.
    const double edge = std::nextafter(bound, 0.0);
    Vector mu(x.size());
    for (Index i = 0; i < x.size(); ++i) {
      const double v = bound * std::tanh(0.5 * (x(i) - 1.0));
      mu(i) = std::clamp(v, -edge, edge);
    }
    return mu;
  };
  return m;
}

MatrixMirrorMap mirror_matrix_entropy(bool accelerated, matfun::ApproxConfig approx,
                                      std::shared_ptr<std::size_t> fallbacks) {
  approx.validate();
  MatrixMirrorMap m;
  m.name = accelerated ? "matrix_entropy_truncated" : "matrix_entropy";
  m.feasible = [](const Matrix& s) { return is_positive_definite(s); };
  m.potential = [](const Matrix& s) {
    matfun::require_symmetric(s, "matrix entropy argument");
    Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
    const auto lam = es.eigenvalues().array();
    if ((lam <= 0.0).any()) throw NotPositiveDefiniteError("matrix entropy: argument is not PD");
    return (lam * lam.log() - lam).sum();
  };
  if (!accelerated) {
    m.grad = [](const Matrix& s) { return matfun::exact_log_sym(s); };
    m.inv_grad = [](const Matrix& x) { return matfun::exact_exp_sym(x); };
    return m;
  }
  m.grad = [approx, fallbacks](const Matrix& s) {
    try {
      return matfun::truncated_log(s, approx.k_log);
    } catch (const SeriesRegionError&) {
      if (fallbacks) ++*fallbacks;
      return matfun::exact_log_sym(s);
    }
  };
  m.inv_grad = [approx, fallbacks](const Matrix& x) {
    try {
      return matfun::truncated_exp(x, approx.k_exp);
    } catch (const SeriesRegionError&) {
      if (fallbacks) ++*fallbacks;
      return matfun::exact_exp_sym(x);
    }
  };
  return m;
}

ChangePointLikelihood::ChangePointLikelihood(Matrix samples, const IncrementDistribution& g, double rho)
    : samples_(std::move(samples)) {
  if (samples_.cols() == 0) throw std::invalid_argument("change-point likelihood: empty window");
  if (samples_.rows() != g.dim()) throw DimensionError("change-point likelihood: sample dimension mismatch");
  log_g_ = g.log_pdf_columns(samples_);
  log_prior_ = detector::geometric_log_prior_vector(rho, samples_.cols());
}

Vector ChangePointLikelihood::change_point_terms(const Vector& log_f) const {
  const Index n = window();
  Vector terms(n);
  // t_k = log pi(k) + sum_{j<k} log g_j + sum_{j>=k} log f_j
  double g_prefix = 0.0;
  double f_suffix = log_f.sum();
  for (Index k = 0; k < n; ++k) {
    terms(k) = log_prior_(k) + g_prefix + f_suffix;
    g_prefix += log_g_(k);
    f_suffix -= log_f(k);
  }
  return terms;
}

double ChangePointLikelihood::nll(const Vector& mu, const Matrix& sigma) const {
  const IncrementDistribution f(mu, sigma);
  return -detector::log_sum_exp(change_point_terms(f.log_pdf_columns(samples_)));
}

ChangePointLikelihood::Evaluation ChangePointLikelihood::evaluate(const Vector& mu, const Matrix& sigma) const {
  const IncrementDistribution f(mu, sigma);
  const Vector terms = change_point_terms(f.log_pdf_columns(samples_));
  const double lse = detector::log_sum_exp(terms);
  if (!std::isfinite(lse)) throw std::domain_error("change-point likelihood is zero for every change point");

  // Responsibility of change point k, then cumulative: c_n = P(lambda <= n | data).
  const Vector resp = (terms.array() - lse).exp().matrix();
  Vector post(window());
  double acc = 0.0;
  for (Index k = 0; k < window(); ++k) {
    acc += resp(k);
    post(k) = acc;
  }

  const Matrix precision = f.precision();
  const Matrix resid = samples_.colwise() - mu;
  const Vector weighted_sum = resid * post;
  const Matrix scatter = resid * post.asDiagonal() * resid.transpose();
  const double mass = post.sum();

  Evaluation ev;
  ev.nll = -lse;
  ev.grad_mu = -(precision * weighted_sum);
  ev.grad_sigma = matfun::symmetrize(0.5 * (mass * precision - precision * scatter * precision));
  ev.post_weight = std::move(post);
  return ev;
}

double neg_log_likelihood(const Matrix& samples, const IncrementDistribution& g, const Vector& mu,
                          const Matrix& sigma, double rho) {
  return ChangePointLikelihood(samples, g, rho).nll(mu, sigma);
}

Vector grad_mu(const Matrix& samples, const IncrementDistribution& g, const Vector& mu,
               const Matrix& sigma, double rho) {
  return ChangePointLikelihood(samples, g, rho).evaluate(mu, sigma).grad_mu;
}

Matrix grad_sigma(const Matrix& samples, const IncrementDistribution& g, const Vector& mu,
                  const Matrix& sigma, double rho) {
  return ChangePointLikelihood(samples, g, rho).evaluate(mu, sigma).grad_sigma;
}

double LearnerConfig::eta() const {
  return step.value_or(1.0 / std::sqrt(static_cast<double>(max_iters)));
}

void LearnerConfig::validate() const {
  if (max_iters < 1) throw std::invalid_argument("learner: max_iters must be >= 1");
  if (!(stop_tol > 0.0)) throw std::invalid_argument("learner: stop_tol must be > 0");
  if (!(eta() > 0.0) || !std::isfinite(eta())) throw std::invalid_argument("learner: step must be > 0");
  if (!(mean_bound > 0.0)) throw std::invalid_argument("learner: mean_bound must be > 0");
  if (max_dual_step && !(*max_dual_step > 0.0)) throw std::invalid_argument("learner: max_dual_step must be > 0");
  approx.validate();
}

FitResult pgd_fit(const Matrix& samples, const IncrementDistribution& g, double rho,
                  const LearnerConfig& config, const std::optional<WarmStart>& warm) {
  return pgd_fit(ChangePointLikelihood(samples, g, rho), g, config, warm);
}

FitResult pgd_fit(const ChangePointLikelihood& lik, const IncrementDistribution& g,
                  const LearnerConfig& config, const std::optional<WarmStart>& warm) {
  config.validate();
  if (g.dim() != lik.dim()) throw DimensionError("pgd_fit: g dimension mismatch");

  Vector mu = warm ? warm->mu : g.mean();
  Matrix sigma = warm ? warm->sigma : g.cov();
  if (mu.size() != lik.dim() || sigma.rows() != lik.dim() || sigma.cols() != lik.dim()) {
    throw DimensionError("pgd_fit: warm start dimension mismatch");
  }

  const VectorMirrorMap mean_map =
      config.mean_map == MeanMap::euclidean ? mirror_euclidean() : mirror_bounded_interval(config.mean_bound);
  auto fallbacks = std::make_shared<std::size_t>(0);
  const MatrixMirrorMap cov_map = mirror_matrix_entropy(config.accelerated, config.approx, fallbacks);

  if (!mean_map.feasible(mu)) throw std::invalid_argument("pgd_fit: starting mean is infeasible for the mean map");
  require_positive_definite(sigma, "pgd_fit starting covariance");

  const double eta = config.eta();
  const double inv_n = 1.0 / static_cast<double>(lik.window());
  // The covariance iterate is carried in dual form, log Sigma, so the matrix
  // log is taken once per fit rather than once per iteration.
  Matrix sigma_dual = cov_map.grad(sigma);

  LearnTrace trace;
  auto ev = lik.evaluate(mu, sigma);
  auto record = [&](const ChangePointLikelihood::Evaluation& e) {
    trace.objective.push_back(e.nll);
    trace.grad_norm.push_back(inv_n * std::sqrt(e.grad_mu.squaredNorm() + e.grad_sigma.squaredNorm()));
  };
  record(ev);

  Vector best_mu = mu;
  Matrix best_sigma = sigma;
  Vector sum_mu = mu;
  Matrix sum_sigma = sigma;
  double count = 1.0;

  for (int e = 0; e < config.max_iters; ++e) {
    Vector mu_next = mean_map.step(mu, ev.grad_mu * inv_n, eta);
    Matrix dual_step = eta * inv_n * ev.grad_sigma;
    if (config.max_dual_step) {
      const double norm = Eigen::SelfAdjointEigenSolver<Matrix>(dual_step, Eigen::EigenvaluesOnly)
                              .eigenvalues()
                              .cwiseAbs()
                              .maxCoeff();
      if (norm > *config.max_dual_step) dual_step *= *config.max_dual_step / norm;
    }
    sigma_dual -= dual_step;
    if (!sigma_dual.allFinite()) {
      trace.diverged = true;
      break;
    }
    Matrix sigma_next = matfun::symmetrize(cov_map.inv_grad(sigma_dual));
    if (!sigma_next.allFinite() || !is_positive_definite(sigma_next)) {
      trace.diverged = true;
      break;
    }
    ChangePointLikelihood::Evaluation ev_next;
    try {
      ev_next = lik.evaluate(mu_next, sigma_next);
    } catch (const std::domain_error&) {
      trace.diverged = true;
      break;
    }
    if (!std::isfinite(ev_next.nll)) {
      trace.diverged = true;
      break;
    }
    record(ev_next);
    trace.iterations = static_cast<std::size_t>(e + 1);

    if (ev_next.nll < trace.objective[trace.best_index]) {
      trace.best_index = trace.objective.size() - 1;
      best_mu = mu_next;
      best_sigma = sigma_next;
    }
    sum_mu += mu_next;
    sum_sigma += sigma_next;
    count += 1.0;

    const double change = std::abs(ev.nll - ev_next.nll);
    mu = std::move(mu_next);
    sigma = std::move(sigma_next);
    ev = std::move(ev_next);
    if (change <= config.stop_tol) {
      trace.converged = true;
      break;
    }
  }
  trace.exp_log_fallbacks = *fallbacks;

  FitResult out;
  if (config.output == OutputMode::best) {
    out.mu = std::move(best_mu);
    out.sigma = std::move(best_sigma);
    out.objective = trace.best_objective();
  } else {
    out.mu = sum_mu / count;
    out.sigma = matfun::symmetrize(sum_sigma / count);
    out.objective = lik.nll(out.mu, out.sigma);
  }
  out.trace = std::move(trace);
  return out;
}

bool restricted_set_check(const Vector& mu, const Matrix& sigma, const Matrix& samples) {
  const Index n = samples.cols();
  if (n == 0) throw std::invalid_argument("restricted_set_check: empty window");
  if (mu.size() != samples.rows() || sigma.rows() != samples.rows()) {
    throw DimensionError("restricted_set_check: dimension mismatch");
  }
  Vector v = Vector::Zero(mu.size());
  for (Index k = n - 1; k >= 0; --k) {
    v += samples.col(k) - mu;
    const double count = static_cast<double>(n - k);
    const Matrix gap = matfun::symmetrize(sigma - v * v.transpose() / count);
    Eigen::SelfAdjointEigenSolver<Matrix> es(gap, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9) return false;
  }
  return true;
}

}  // namespace outage::learner
