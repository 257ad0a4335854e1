#pragma once

// Parametric families used by the class-conditional feature model:
// Bernoulli, Categorical, Poisson and multivariate Gaussian. Every density
// is evaluated in the natural-log domain.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace raregraph {

using Rng = std::mt19937_64;

inline constexpr double kDefaultSmoothing = 1.0;
inline constexpr double kPoissonRateFloor = 1e-6;
inline constexpr double kCovarianceJitter = 1e-6;

class BernoulliParam {
 public:
  BernoulliParam() = default;
  explicit BernoulliParam(double p);

  double p() const noexcept { return p_; }

  // value must be 0 or 1.
  double log_density(int value) const;
  int sample(Rng& rng) const;

  // (successes + smoothing) / (trials + 2 * smoothing)
  static BernoulliParam from_counts(std::uint64_t successes, std::uint64_t trials, double smoothing);

 private:
  double p_ = 0.5;
};

class CategoricalParam {
 public:
  CategoricalParam() = default;
  explicit CategoricalParam(std::vector<double> probs);

  const std::vector<double>& probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }

  double log_density(std::int64_t index) const;
  std::int64_t sample(Rng& rng) const;

  // (count_c + smoothing) / (n + C * smoothing)
  static CategoricalParam from_counts(std::span<const std::uint64_t> counts, double smoothing);

 private:
  std::vector<double> probs_;
  std::vector<double> cumulative_;
};

class PoissonParam {
 public:
  PoissonParam() = default;
  explicit PoissonParam(double lambda);

  double lambda() const noexcept { return lambda_; }

  double log_density(std::int64_t value) const;
  std::int64_t sample(Rng& rng) const;

  // max(sum / n, kPoissonRateFloor)
  static PoissonParam from_sum(double sum, std::uint64_t n);

 private:
  double lambda_ = 1.0;
};

// Multivariate normal with a dense covariance. The Cholesky factor and the
// log-determinant are cached at construction.
class GaussianParam {
 public:
  GaussianParam() = default;
  // cov is row-major dim x dim. Throws ParameterError unless cov is symmetric
  // (within 1e-12) and positive definite.
  GaussianParam(std::vector<double> mean, std::vector<double> cov);

  std::size_t dim() const noexcept { return mean_.size(); }
  const std::vector<double>& mean() const noexcept { return mean_; }
  const std::vector<double>& cov() const noexcept { return cov_; }

  double log_density(std::span<const double> value) const;
  std::vector<double> sample(Rng& rng) const;

 private:
  std::vector<double> mean_;
  std::vector<double> cov_;
  std::vector<double> chol_;  // lower factor, row-major
  double log_det_ = 0.0;
};

// Maximum-likelihood fits over raw observation sequences. Empty input throws
// FitError. smoothing is an additive pseudo-count per outcome.
BernoulliParam fit_bernoulli(std::span<const int> observations, double smoothing = kDefaultSmoothing);
CategoricalParam fit_categorical(std::span<const std::int64_t> observations, std::size_t num_categories,
                                 double smoothing = kDefaultSmoothing);
PoissonParam fit_poisson(std::span<const std::int64_t> observations);

// rows is n x dim, row-major. Requires n >= dim + 1; otherwise FitError tells
// the caller to fall back to pooled parameters. The covariance is the MLE
// (divide by n); if it is not positive definite, kCovarianceJitter is added to
// the diagonal and doubled until the Cholesky factorization succeeds.
GaussianParam fit_gaussian(std::span<const double> rows, std::size_t dim);

// MLE covariance of rows plus the regularization described above, for callers
// that need to pool classes. Returns {mean, cov}.
struct MeanCov {
  std::vector<double> mean;
  std::vector<double> cov;
};
MeanCov sample_mean_cov(std::span<const double> rows, std::size_t dim);
std::vector<double> regularize_covariance(std::vector<double> cov, std::size_t dim);

}  // namespace raregraph
