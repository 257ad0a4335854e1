#include "raregraph/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "raregraph/errors.hpp"
#include "raregraph/logmath.hpp"

namespace raregraph {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_smoothing(double smoothing) {
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) {
    throw ArgumentError("smoothing must be a finite non-negative number, got " + std::to_string(smoothing));
  }
}

// Returns false if the matrix is not (numerically) positive definite.
bool cholesky(const std::vector<double>& cov, std::size_t dim, std::vector<double>& lower, double& log_det) {
  Eigen::Map<const RowMatrix> m(cov.data(), static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  Eigen::LLT<RowMatrix> llt(m);
  if (llt.info() != Eigen::Success) return false;
  RowMatrix l = llt.matrixL();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    const double d = l(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    sum += std::log(d);
  }
  lower.assign(l.data(), l.data() + l.size());
  log_det = 2.0 * sum;
  return true;
}

}  // namespace

// ---------------------------------------------------------------- Bernoulli

BernoulliParam::BernoulliParam(double p) : p_(p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ParameterError("Bernoulli probability must lie in [0,1], got " + std::to_string(p));
  }
}

double BernoulliParam::log_density(int value) const {
  if (value == 1) return std::log(p_);
  if (value == 0) return std::log1p(-p_);
  throw DomainError("Bernoulli observation must be 0 or 1, got " + std::to_string(value));
}

int BernoulliParam::sample(Rng& rng) const {
  return std::bernoulli_distribution(p_)(rng) ? 1 : 0;
}

BernoulliParam BernoulliParam::from_counts(std::uint64_t successes, std::uint64_t trials, double smoothing) {
  check_smoothing(smoothing);
  if (successes > trials) throw FitError("Bernoulli successes exceed trials");
  const double denom = static_cast<double>(trials) + 2.0 * smoothing;
  if (!(denom > 0.0)) throw FitError("Bernoulli fit needs at least one observation or positive smoothing");
  return BernoulliParam((static_cast<double>(successes) + smoothing) / denom);
}

BernoulliParam fit_bernoulli(std::span<const int> observations, double smoothing) {
  if (observations.empty()) throw FitError("cannot fit a Bernoulli to an empty sample");
  std::uint64_t k = 0;
  for (int v : observations) {
    if (v != 0 && v != 1) throw DomainError("Bernoulli observation must be 0 or 1, got " + std::to_string(v));
    k += static_cast<std::uint64_t>(v);
  }
  return BernoulliParam::from_counts(k, observations.size(), smoothing);
}

// -------------------------------------------------------------- Categorical

CategoricalParam::CategoricalParam(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw ParameterError("categorical distribution needs at least one category");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ParameterError("categorical probability must lie in [0,1], got " + std::to_string(p));
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ParameterError("categorical probabilities must sum to 1, got " + std::to_string(total));
  }
  cumulative_.resize(probs_.size());
  std::partial_sum(probs_.begin(), probs_.end(), cumulative_.begin());
}

double CategoricalParam::log_density(std::int64_t index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= probs_.size()) {
    throw DomainError("categorical index " + std::to_string(index) + " outside [0," +
                      std::to_string(probs_.size()) + ")");
  }
  return std::log(probs_[static_cast<std::size_t>(index)]);
}

std::int64_t CategoricalParam::sample(Rng& rng) const {
  const double u = std::uniform_real_distribution<double>(0.0, cumulative_.back())(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  auto idx = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
  idx = std::min(idx, probs_.size() - 1);
  // Never return a zero-probability category that sits on a cumulative plateau.
  while (probs_[idx] == 0.0 && idx > 0) --idx;
  return static_cast<std::int64_t>(idx);
}

CategoricalParam CategoricalParam::from_counts(std::span<const std::uint64_t> counts, double smoothing) {
  check_smoothing(smoothing);
  if (counts.empty()) throw FitError("categorical fit needs at least one category");
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0,
                                   [](double acc, std::uint64_t c) { return acc + static_cast<double>(c); });
  const double denom = n + static_cast<double>(counts.size()) * smoothing;
  if (!(denom > 0.0)) throw FitError("categorical fit needs at least one observation or positive smoothing");
  std::vector<double> probs(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    probs[c] = (static_cast<double>(counts[c]) + smoothing) / denom;
  }
  // Fold rounding residue into the largest cell so the sum invariant holds.
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  auto largest = std::max_element(probs.begin(), probs.end());
  *largest += 1.0 - total;
  return CategoricalParam(std::move(probs));
}

CategoricalParam fit_categorical(std::span<const std::int64_t> observations, std::size_t num_categories,
                                 double smoothing) {
  if (observations.empty()) throw FitError("cannot fit a categorical to an empty sample");
  std::vector<std::uint64_t> counts(num_categories, 0);
  for (auto v : observations) {
    if (v < 0 || static_cast<std::size_t>(v) >= num_categories) {
      throw DomainError("categorical observation " + std::to_string(v) + " outside [0," +
                        std::to_string(num_categories) + ")");
    }
    ++counts[static_cast<std::size_t>(v)];
  }
  return CategoricalParam::from_counts(counts, smoothing);
}

// ------------------------------------------------------------------ Poisson

PoissonParam::PoissonParam(double lambda) : lambda_(lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ParameterError("Poisson rate must be positive and finite, got " + std::to_string(lambda));
  }
}

double PoissonParam::log_density(std::int64_t value) const {
  if (value < 0) throw DomainError("Poisson observation must be non-negative, got " + std::to_string(value));
  const auto k = static_cast<double>(value);
  return k * std::log(lambda_) - lambda_ - std::lgamma(k + 1.0);
}

std::int64_t PoissonParam::sample(Rng& rng) const {
  return std::poisson_distribution<std::int64_t>(lambda_)(rng);
}

PoissonParam PoissonParam::from_sum(double sum, std::uint64_t n) {
  if (n == 0) throw FitError("cannot fit a Poisson to an empty sample");
  return PoissonParam(std::max(sum / static_cast<double>(n), kPoissonRateFloor));
}

PoissonParam fit_poisson(std::span<const std::int64_t> observations) {
  if (observations.empty()) throw FitError("cannot fit a Poisson to an empty sample");
  double sum = 0.0;
  for (auto v : observations) {
    if (v < 0) throw DomainError("Poisson observation must be non-negative, got " + std::to_string(v));
    sum += static_cast<double>(v);
  }
  return PoissonParam::from_sum(sum, observations.size());
}

// ----------------------------------------------------------------- Gaussian

GaussianParam::GaussianParam(std::vector<double> mean, std::vector<double> cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  const std::size_t d = mean_.size();
  if (d == 0) throw ParameterError("Gaussian dimension must be positive");
  if (cov_.size() != d * d) throw ParameterError("Gaussian covariance must be dim x dim");
  for (double v : mean_) {
    if (!std::isfinite(v)) throw ParameterError("Gaussian mean must be finite");
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(cov_[i * d + j] - cov_[j * d + i]) > 1e-12) {
        throw ParameterError("Gaussian covariance is not symmetric");
      }
    }
  }
  if (!cholesky(cov_, d, chol_, log_det_)) {
    throw ParameterError("Gaussian covariance is not positive definite");
  }
}

double GaussianParam::log_density(std::span<const double> value) const {
  const std::size_t d = dim();
  if (value.size() != d) {
    throw DomainError("Gaussian observation has dimension " + std::to_string(value.size()) + ", expected " +
                      std::to_string(d));
  }
  // Forward substitution L y = (x - mu); quadratic form is |y|^2.
  double quad = 0.0;
  std::vector<double> y(d);
  for (std::size_t i = 0; i < d; ++i) {
    if (!std::isfinite(value[i])) throw DomainError("Gaussian observation must be finite");
    double s = value[i] - mean_[i];
    for (std::size_t k = 0; k < i; ++k) s -= chol_[i * d + k] * y[k];
    y[i] = s / chol_[i * d + i];
    quad += y[i] * y[i];
  }
  constexpr double kLog2Pi = 1.8378770664093453;
  return -0.5 * (static_cast<double>(d) * kLog2Pi + log_det_ + quad);
}

std::vector<double> GaussianParam::sample(Rng& rng) const {
  const std::size_t d = dim();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(d);
  for (auto& v : z) v = normal(rng);
  std::vector<double> out(mean_);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k <= i; ++k) out[i] += chol_[i * d + k] * z[k];
  }
  return out;
}

MeanCov sample_mean_cov(std::span<const double> rows, std::size_t dim) {
  if (dim == 0 || rows.size() % dim != 0) throw FitError("Gaussian sample is not a whole number of rows");
  const std::size_t n = rows.size() / dim;
  if (n == 0) throw FitError("cannot fit a Gaussian to an empty sample");
  MeanCov out{std::vector<double>(dim, 0.0), std::vector<double>(dim * dim, 0.0)};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < dim; ++i) out.mean[i] += rows[r * dim + i];
  }
  for (auto& m : out.mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double di = rows[r * dim + i] - out.mean[i];
      for (std::size_t j = 0; j <= i; ++j) out.cov[i * dim + j] += di * (rows[r * dim + j] - out.mean[j]);
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = out.cov[i * dim + j] / static_cast<double>(n);
      out.cov[i * dim + j] = v;
      out.cov[j * dim + i] = v;
    }
  }
  return out;
}

std::vector<double> regularize_covariance(std::vector<double> cov, std::size_t dim) {
  std::vector<double> lower;
  double log_det = 0.0;
  if (cholesky(cov, dim, lower, log_det)) return cov;
  double eps = kCovarianceJitter;
  for (int attempt = 0; attempt < 200; ++attempt, eps *= 2.0) {
    std::vector<double> trial = cov;
    for (std::size_t i = 0; i < dim; ++i) trial[i * dim + i] += eps;
    if (cholesky(trial, dim, lower, log_det)) return trial;
  }
  throw FitError("covariance could not be regularized to positive definite");
}

GaussianParam fit_gaussian(std::span<const double> rows, std::size_t dim) {
  if (dim == 0 || rows.size() % dim != 0) throw FitError("Gaussian sample is not a whole number of rows");
  const std::size_t n = rows.size() / dim;
  if (n == 0) throw FitError("cannot fit a Gaussian to an empty sample");
  if (n < dim + 1) {
    throw FitError("Gaussian fit needs at least " + std::to_string(dim + 1) + " samples, got " +
                   std::to_string(n) + "; fall back to pooled parameters");
  }
  auto mc = sample_mean_cov(rows, dim);
  return GaussianParam(std::move(mc.mean), regularize_covariance(std::move(mc.cov), dim));
}

}  // namespace raregraph
