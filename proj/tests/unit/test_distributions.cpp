#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "raregraph/distributions.hpp"
#include "raregraph/errors.hpp"

using namespace raregraph;

TEST_SUITE("bernoulli") {
  TEST_CASE("log density") {
    CHECK(BernoulliParam(1.0).log_density(1) == 0.0);
    CHECK(BernoulliParam(0.3812).log_density(1) == doctest::Approx(-0.96443).epsilon(1e-5));
    CHECK(BernoulliParam(0.25).log_density(0) == doctest::Approx(std::log(0.75)));
    CHECK_THROWS_AS(BernoulliParam(0.5).log_density(2), DomainError);
    CHECK_THROWS_AS(BernoulliParam(1.5), ParameterError);
  }

  TEST_CASE("mass sums to one") {
    for (double p : {0.0, 0.01, 0.3812, 0.5, 0.99, 1.0}) {
      const BernoulliParam b(p);
      CHECK(std::exp(b.log_density(0)) + std::exp(b.log_density(1)) == doctest::Approx(1.0).epsilon(1e-15));
    }
  }

  TEST_CASE("smoothed fit") {
    const std::vector<int> obs = {1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
    CHECK(fit_bernoulli(obs, 1.0).p() == doctest::Approx(4.0 / 12.0).epsilon(1e-15));
    CHECK(fit_bernoulli(obs, 0.0).p() == doctest::Approx(0.3).epsilon(1e-15));
    const std::vector<int> zeros(7, 0);
    const double p = fit_bernoulli(zeros, 1.0).p();
    CHECK(p > 0.0);
    CHECK(p < 1.0);
    CHECK_THROWS_AS(fit_bernoulli(std::vector<int>{}), FitError);
  }

  TEST_CASE("degenerate sampling") {
    Rng rng(1);
    const BernoulliParam never(0.0);
    for (int k = 0; k < 100; ++k) CHECK(never.sample(rng) == 0);
  }
}

TEST_SUITE("categorical") {
  TEST_CASE("fit by counts") {
    const std::vector<std::int64_t> obs = {0, 0, 1};
    const auto c = fit_categorical(obs, 2, 0.0);
    CHECK(c.probs()[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(c.probs()[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    const auto smooth = fit_categorical(obs, 4, 1.0);
    for (double p : smooth.probs()) CHECK(p > 0.0);
    CHECK(std::accumulate(smooth.probs().begin(), smooth.probs().end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("invalid parameters and observations") {
    CHECK_THROWS_AS(CategoricalParam({0.5, 0.6}), ParameterError);
    CHECK_THROWS_AS(CategoricalParam(std::vector<double>{}), ParameterError);
    const CategoricalParam c({0.2, 0.8});
    CHECK_THROWS_AS(c.log_density(2), DomainError);
    CHECK_THROWS_AS(c.log_density(-1), DomainError);
  }

  TEST_CASE("degenerate sampling") {
    Rng rng(2);
    const CategoricalParam c({1.0, 0.0, 0.0, 0.0});
    for (int k = 0; k < 100; ++k) CHECK(c.sample(rng) == 0);
  }

  TEST_CASE("permutation consistency") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> w(6);
      for (auto& v : w) v = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
      const double total = std::accumulate(w.begin(), w.end(), 0.0);
      for (auto& v : w) v /= total;
      std::vector<std::size_t> perm(w.size());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<double> permuted(w.size());
      for (std::size_t k = 0; k < w.size(); ++k) permuted[perm[k]] = w[k];
      const CategoricalParam a(w), b(permuted);
      for (std::size_t k = 0; k < w.size(); ++k) {
        CHECK(a.log_density(static_cast<std::int64_t>(k)) == b.log_density(static_cast<std::int64_t>(perm[k])));
      }
    }
  }

  TEST_CASE("mass sums to one") {
    const CategoricalParam c({0.394, 0.223, 0.217, 0.166});
    double total = 0.0;
    for (std::int64_t k = 0; k < 4; ++k) total += std::exp(c.log_density(k));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_SUITE("poisson") {
  TEST_CASE("log density") {
    CHECK(PoissonParam(2.0).log_density(0) == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(PoissonParam(2.0).log_density(3) == doctest::Approx(3 * std::log(2.0) - 2.0 - std::log(6.0)));
    CHECK_THROWS_AS(PoissonParam(2.0).log_density(-1), DomainError);
    CHECK_THROWS_AS(PoissonParam(0.0), ParameterError);
  }

  TEST_CASE("truncated mass sums to one") {
    for (double lambda : {0.5, 4.9, 20.1514, 29.0939}) {
      const PoissonParam p(lambda);
      double total = 0.0;
      for (std::int64_t k = 0; k < 200; ++k) total += std::exp(p.log_density(k));
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }

  TEST_CASE("fit is the sample mean with a floor") {
    const std::vector<std::int64_t> obs = {1, 2, 3};
    CHECK(fit_poisson(obs).lambda() == 2.0);
    const std::vector<std::int64_t> zeros(5, 0);
    CHECK(fit_poisson(zeros).lambda() == kPoissonRateFloor);
    CHECK_THROWS_AS(fit_poisson(std::vector<std::int64_t>{}), FitError);
  }

  TEST_CASE("law of large numbers") {
    Rng rng(20);
    const PoissonParam p(20.1514);
    std::vector<std::int64_t> draws(10000);
    for (auto& d : draws) d = p.sample(rng);
    CHECK(std::abs(fit_poisson(draws).lambda() - 20.1514) < 0.5);
  }
}

TEST_SUITE("gaussian") {
  const std::vector<double> kMean = {-0.1131, -0.0722, -0.1028, -0.0789};
  const std::vector<double> kCov = {0.6592, 0.2004, 0.4882, 0.3781,   //
                                    0.2004, 0.9117, 0.3037, 0.6312,   //
                                    0.4882, 0.3037, 0.5710, 0.4309,   //
                                    0.3781, 0.6312, 0.4309, 0.6934};

  TEST_CASE("log density of the standard normal") {
    const GaussianParam g({0.0, 0.0}, {1.0, 0.0, 0.0, 1.0});
    const std::vector<double> x = {1.0, -2.0};
    CHECK(g.log_density(x) == doctest::Approx(-std::log(2.0 * std::numbers::pi) - 2.5).epsilon(1e-14));
  }

  TEST_CASE("invalid covariance") {
    CHECK_THROWS_AS(GaussianParam({0.0, 0.0}, {1.0, 0.5, 0.4, 1.0}), ParameterError);
    CHECK_THROWS_AS(GaussianParam({0.0, 0.0}, {1.0, 2.0, 2.0, 1.0}), ParameterError);
    const GaussianParam g({0.0}, {1.0});
    CHECK_THROWS_AS(g.log_density(std::vector<double>{1.0, 2.0}), DomainError);
  }

  TEST_CASE("fit needs dim + 1 rows") {
    const std::vector<double> rows(4 * 4, 0.5);
    CHECK_THROWS_AS(fit_gaussian(rows, 4), FitError);
  }

  TEST_CASE("identical rows are regularized to positive definite") {
    const std::vector<double> rows(4 * 10, 0.5);
    const auto g = fit_gaussian(rows, 4);
    CHECK(g.mean()[0] == doctest::Approx(0.5));
    CHECK(std::isfinite(g.log_density(std::vector<double>{0.5, 0.5, 0.5, 0.5})));
  }

  TEST_CASE("sample then fit recovers the mean") {
    Rng rng(44);
    const GaussianParam g(kMean, kCov);
    std::vector<double> rows;
    for (int k = 0; k < 10000; ++k) {
      const auto x = g.sample(rng);
      rows.insert(rows.end(), x.begin(), x.end());
    }
    const auto f = fit_gaussian(rows, 4);
    for (std::size_t d = 0; d < 4; ++d) CHECK(std::abs(f.mean()[d] - kMean[d]) < 0.05);
    for (std::size_t k = 0; k < 16; ++k) CHECK(std::abs(f.cov()[k] - kCov[k]) < 0.05);
  }

  TEST_CASE("same stream gives the same samples") {
    Rng a(9), b(9);
    const GaussianParam g(kMean, kCov);
    for (int k = 0; k < 10; ++k) CHECK(g.sample(a) == g.sample(b));
  }
}

TEST_SUITE("round trips") {
  TEST_CASE("bernoulli and categorical recover probabilities") {
    Rng rng(5);
    const BernoulliParam b(0.2689);
    std::vector<int> bo(10000);
    for (auto& v : bo) v = b.sample(rng);
    CHECK(std::abs(fit_bernoulli(bo).p() - 0.2689) < 0.02);

    const CategoricalParam c({0.316, 0.303, 0.195, 0.186});
    std::vector<std::int64_t> co(10000);
    for (auto& v : co) v = c.sample(rng);
    const auto f = fit_categorical(co, 4);
    for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(f.probs()[k] - c.probs()[k]) < 0.02);
  }

  TEST_CASE("poisson recovers the rate within 2%") {
    Rng rng(6);
    for (double lambda : {5.0, 20.1514, 29.0939}) {
      const PoissonParam p(lambda);
      std::vector<std::int64_t> obs(10000);
      for (auto& v : obs) v = p.sample(rng);
      CHECK(std::abs(fit_poisson(obs).lambda() / lambda - 1.0) < 0.02);
    }
  }
}
