#pragma once

// Learning the post-outage Gaussian (mu1, Sigma1) by mirror descent on the
// change-point negative log-likelihood.

#include "outage/gaussian.hpp"
#include "outage/matfun.hpp"
#include "outage/types.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace outage::learner {

/// A Bregman potential with its gradient and the inverse of that gradient.
/// The projected update is inv_grad(grad(theta) - eta * gradient).
template <class Param>
struct MirrorMap {
  std::string name;
  std::function<double(const Param&)> potential;
  std::function<Param(const Param&)> grad;
  std::function<Param(const Param&)> inv_grad;
  std::function<bool(const Param&)> feasible;

  Param step(const Param& theta, const Param& gradient, double eta) const {
    const Param dual = grad(theta);
    return inv_grad(Param(dual - eta * gradient));
  }

  /// Phi(a) - Phi(b) - <grad Phi(b), a - b>
  double bregman(const Param& a, const Param& b) const {
    return potential(a) - potential(b) - (a - b).cwiseProduct(grad(b)).sum();
  }
};

using VectorMirrorMap = MirrorMap<Vector>;
using MatrixMirrorMap = MirrorMap<Matrix>;

/// Phi = |mu|^2 / 2; the update is plain gradient descent.
VectorMirrorMap mirror_euclidean();

/// Per-coordinate Phi = (mu+b)log(mu+b) + (b-mu)log(b-mu) + mu, keeping every
/// coordinate inside (-b, b). grad = log((b+mu)/(b-mu)) + 1,
/// inv_grad = b tanh((x-1)/2).
VectorMirrorMap mirror_bounded_interval(double bound = 1.1);

/// Phi = tr(S log S - S): grad is the matrix log, inv_grad the matrix exp.
/// With `accelerated` the truncated series are used; whenever they are asked
/// to leave their valid region the exact functions are used instead and
/// `*fallbacks` (if given) is incremented.
MatrixMirrorMap mirror_matrix_entropy(bool accelerated, matfun::ApproxConfig approx = {},
                                      std::shared_ptr<std::size_t> fallbacks = nullptr);

/// Change-point likelihood of a window of increments (dim x N, oldest first)
/// under pre-change density g, a geometric prior and a candidate post-change
/// Gaussian. Works in log space throughout.
class ChangePointLikelihood {
 public:
  ChangePointLikelihood(Matrix samples, const IncrementDistribution& g, double rho);

  struct Evaluation {
    double nll;             ///< -log sum_k pi(k) prod_{n<k} g prod_{n>=k} f
    Vector grad_mu;
    Matrix grad_sigma;      ///< symmetric
    Vector post_weight;     ///< posterior probability that sample n is post-change
  };

  double nll(const Vector& mu, const Matrix& sigma) const;
  Evaluation evaluate(const Vector& mu, const Matrix& sigma) const;

  Index window() const { return samples_.cols(); }
  Index dim() const { return samples_.rows(); }
  const Matrix& samples() const { return samples_; }

 private:
  /// t_k for k = 1..N, given per-sample log f.
  Vector change_point_terms(const Vector& log_f) const;

  Matrix samples_;
  Vector log_g_;
  Vector log_prior_;
};

double neg_log_likelihood(const Matrix& samples, const IncrementDistribution& g, const Vector& mu,
                          const Matrix& sigma, double rho);
Vector grad_mu(const Matrix& samples, const IncrementDistribution& g, const Vector& mu,
               const Matrix& sigma, double rho);
Matrix grad_sigma(const Matrix& samples, const IncrementDistribution& g, const Vector& mu,
                  const Matrix& sigma, double rho);

enum class OutputMode { best, averaged };
enum class MeanMap { euclidean, bounded_interval };

struct LearnerConfig {
  int max_iters = 100;            ///< E
  std::optional<double> step;     ///< eta; defaults to 1/sqrt(E)
  double stop_tol = 1e-3;         ///< on |L(e) - L(e+1)|
  bool accelerated = false;       ///< truncated exp/log for the covariance map
  matfun::ApproxConfig approx{};
  OutputMode output = OutputMode::best;
  MeanMap mean_map = MeanMap::bounded_interval;
  double mean_bound = 1.1;
  /// Spectral-norm cap on the covariance dual step eta * grad; unset disables it.
  std::optional<double> max_dual_step = 1.0;

  double eta() const;
  void validate() const;
};

struct LearnTrace {
  std::vector<double> objective;   ///< raw negative log-likelihood, index 0 = starting point
  std::vector<double> grad_norm;   ///< Frobenius norm of the joint per-sample gradient at each iterate
  std::size_t best_index = 0;
  bool converged = false;          ///< stop rule fired before max_iters
  bool diverged = false;           ///< a step left the PD cone numerically; best valid iterate kept
  std::size_t iterations = 0;
  std::size_t exp_log_fallbacks = 0;

  double best_objective() const { return objective.at(best_index); }
};

struct WarmStart {
  Vector mu;
  Matrix sigma;
};

struct FitResult {
  Vector mu;
  Matrix sigma;
  double objective;  ///< raw negative log-likelihood at the returned parameters
  LearnTrace trace;
};

/// Alternating mirror-descent fit of (mu1, Sigma1). Both parameter updates at
/// iteration e use the gradient evaluated at iterate e. The covariance is
/// updated in the dual (log) space, which is kept between iterations.
/// Gradients are divided by the window length before the step. Stops when the
/// objective changes by at most stop_tol, or after max_iters. Starts from
/// `warm` when given, otherwise from g's parameters.
FitResult pgd_fit(const Matrix& samples, const IncrementDistribution& g, double rho,
                  const LearnerConfig& config, const std::optional<WarmStart>& warm = std::nullopt);

/// Same, reusing a prepared likelihood.
FitResult pgd_fit(const ChangePointLikelihood& lik, const IncrementDistribution& g,
                  const LearnerConfig& config, const std::optional<WarmStart>& warm = std::nullopt);

/// True iff Sigma - v_k v_k^T / (N-k+1) is PSD (min eigenvalue >= -1e-9) for
/// every k, with v_k = sum_{n>=k} (x_n - mu). Diagnostic only.
bool restricted_set_check(const Vector& mu, const Matrix& sigma, const Matrix& samples);

}  // namespace outage::learner
