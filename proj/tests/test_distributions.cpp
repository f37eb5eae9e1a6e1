#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "flexload/conjugate.hpp"
#include "flexload/distributions.hpp"
#include "flexload/duration.hpp"
#include "flexload/errors.hpp"
#include "flexload/numerics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace flexload;
using testing_support::ks_critical_01;
using testing_support::ks_statistic;
using testing_support::moments;

using oracles::quadrature_posterior;

TEST_CASE("dirichlet mean") {
  auto a = dirichlet_mean(std::vector<double>{1, 1});
  CHECK(a[0] == doctest::Approx(0.5));
  auto b = dirichlet_mean(std::vector<double>{2, 6});
  CHECK(b[0] == doctest::Approx(0.25));
  CHECK(b[1] == doctest::Approx(0.75));
  auto c = dirichlet_mean(std::vector<double>{0, 3});
  CHECK(c[0] == 0.0);
  CHECK(c[1] == 1.0);
  CHECK_THROWS_AS(dirichlet_mean(std::vector<double>{0, 0}), InvalidParameter);
}

TEST_CASE("normal conjugate update against quadrature") {
  auto p = conj_update_normal({0, 1}, 2, 1, 1);
  CHECK(p.mean == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p.var == doctest::Approx(0.5).epsilon(1e-14));
  auto q = quadrature_posterior(
      [](double th) { return normal_logpdf(th, 0, 1) + normal_logpdf(2, th, 1); }, -10, 10, 1e-3);
  CHECK(std::abs(q.first - p.mean) < 1e-6);
  CHECK(std::abs(q.second - p.var) < 1e-6);

  auto same = conj_update_normal({5, 2}, 0, 0, 1);
  CHECK(same.mean == 5.0);
  CHECK(same.var == 2.0);

  auto flat = conj_update_normal({0, 1e6}, 300, 100, 4);
  CHECK(flat.mean == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(flat.var == doctest::Approx(0.04).epsilon(1e-6));
  // 100 observations summing to 300 with variance 4: the likelihood depends on the sum only.
  auto qf = quadrature_posterior(
      [](double th) { return normal_logpdf(th, 0, 1e6) - 100.0 * (th * th - 6.0 * th) / 8.0; }, -10, 10, 1e-3);
  CHECK(std::abs(qf.first - flat.mean) < 1e-6);
  CHECK(std::abs(qf.second - flat.var) < 1e-6);
  CHECK_THROWS(conj_update_normal({0, 1}, 1, 1, 0.0));
}

TEST_CASE("dirichlet, gamma-poisson and beta-negbin updates") {
  CHECK(conj_update_dirichlet(std::vector<double>{1, 1, 1}, std::vector<std::uint64_t>{0, 0, 0}) ==
        std::vector<double>{1, 1, 1});
  CHECK(conj_update_dirichlet(std::vector<double>{1, 1}, std::vector<std::uint64_t>{3, 7}) ==
        std::vector<double>{4, 8});
  CHECK(conj_update_dirichlet(std::vector<double>{0, 1}, std::vector<std::uint64_t>{0, 2}) ==
        std::vector<double>{0, 3});
  CHECK_THROWS_AS(conj_update_dirichlet(std::vector<double>{1, 1}, std::vector<std::uint64_t>{1}), InvalidParameter);

  auto g0 = conj_update_gamma_poisson({1, 1}, 0, 0);
  CHECK((g0.shape == 1 && g0.rate == 1));
  auto g1 = conj_update_gamma_poisson({2, 3}, 10, 4);
  CHECK((g1.shape == 12 && g1.rate == 7));
  auto g2 = conj_update_gamma_poisson({1, 1}, 100, 10);
  CHECK((g2.shape == 101 && g2.rate == 11));
  auto qg = quadrature_posterior(
      [](double l) { return l <= 0 ? kNegInf : gamma_logpdf(l, 1, 1) + 100.0 * std::log(l) - 10.0 * l; }, 0, 100,
      1e-3);
  CHECK(std::abs(qg.first - g2.shape / g2.rate) < 1e-6);
  CHECK(g2.shape / g2.rate == doctest::Approx(9.18).epsilon(1e-3));

  auto b0 = conj_update_beta_negbin({1, 1}, 0, 0, 3);
  CHECK((b0.a == 1 && b0.b == 1));
  auto b1 = conj_update_beta_negbin({1, 1}, 12, 2, 3);
  CHECK((b1.a == 13 && b1.b == 7));
  auto b2 = conj_update_beta_negbin({2, 2}, 5, 1, 1);
  CHECK((b2.a == 7 && b2.b == 3));
  // Standard negative binomial likelihood of one draw d = 5 with r = 1.
  auto qb = quadrature_posterior(
      [](double p) {
        return (p <= 0 || p >= 1) ? kNegInf : beta_logpdf(p, 2, 2) + negbin_logpmf(5, 1, p, NegBinForm::Standard);
      },
      0, 1, 1e-4);
  CHECK(std::abs(qb.first - b2.a / (b2.a + b2.b)) < 1e-6);
}

TEST_CASE("conjugate updates commute with batching") {
  auto once = conj_update_normal({1, 2}, 7.5, 5, 3);
  auto twice = conj_update_normal(conj_update_normal({1, 2}, 3.0, 2, 3), 4.5, 3, 3);
  CHECK(once.mean == doctest::Approx(twice.mean).epsilon(1e-14));
  CHECK(once.var == doctest::Approx(twice.var).epsilon(1e-14));
  auto g = conj_update_gamma_poisson(conj_update_gamma_poisson({2, 1}, 4, 2), 6, 3);
  auto gg = conj_update_gamma_poisson({2, 1}, 10, 5);
  CHECK((g.shape == gg.shape && g.rate == gg.rate));
  auto b = conj_update_beta_negbin(conj_update_beta_negbin({2, 1}, 4, 2, 2), 6, 3, 2);
  auto bb = conj_update_beta_negbin({2, 1}, 10, 5, 2);
  CHECK((b.a == bb.a && b.b == bb.b));
}

TEST_CASE("stick breaking") {
  Rng rng(11);
  auto w = stick_breaking(1e-4, 1e-6, rng);
  CHECK(w[0] > 0.99);
  auto v = stick_breaking(1.0, rng);
  double acc = 0;
  for (double x : v) {
    CHECK(x > 0.0);
    acc += x;
  }
  CHECK(acc == doctest::Approx(1.0).epsilon(1e-12));

  // Atom count to reach residual eps: K - 1 is Poisson(gamma log(1/eps)).
  const double gamma = 5, eps = 0.01;
  const int reps = 100000;
  std::vector<double> ks(reps);
  for (int i = 0; i < reps; ++i) ks[i] = static_cast<double>(stick_breaking(gamma, eps, rng).size());
  const auto m = moments(ks);
  const double expected = 1.0 + gamma * std::log(1.0 / eps);
  CHECK(std::abs(m.mean - expected) < 3.0 * m.mean_se);
}

TEST_CASE("chinese restaurant predictive") {
  auto a = crp_predictive(std::vector<std::uint64_t>{}, 1.0);
  CHECK(a.size() == 1);
  CHECK(a[0] == 1.0);
  auto b = crp_predictive(std::vector<std::uint64_t>{3, 1}, 1.0);
  CHECK(b[0] == doctest::Approx(0.6));
  CHECK(b[1] == doctest::Approx(0.2));
  CHECK(b[2] == doctest::Approx(0.2));
  auto c = crp_predictive(std::vector<std::uint64_t>{1, 1, 1}, 3.0);
  CHECK(c[3] == doctest::Approx(0.5));
  CHECK(c[0] == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("densities") {
  CHECK(duration_logpmf(0, {1.0, 2.0, 1, 0.5}) == doctest::Approx(-2.0));
  CHECK(duration_logpmf(3, {0.0, 2.0, 1, 0.5}) == doctest::Approx(std::log(0.125)));
  const double comp = normal_logpdf(1.3, 1.0, 2.0);
  const std::vector<double> w{0.3, 0.7}, l{comp, comp};
  CHECK(mixture_logpdf(w, l) == doctest::Approx(comp));
  CHECK(negbin_logpmf(0, 2, 0.3) == kNegInf);
  CHECK(negbin_logpmf(0, 2, 0.3, NegBinForm::Standard) == doctest::Approx(2.0 * std::log(0.7)));
  CHECK_THROWS(poisson_logpmf(1, -1.0));
  CHECK_THROWS(negbin_logpmf(1, 1, 1.0));
}

TEST_CASE("duration law normalization and tail") {
  for (auto w : {DurationParams{0.3, 12.0, 3, 0.8}, DurationParams{1.0, 4.0, 1, 0.5},
                 DurationParams{0.0, 1.0, 2, 0.95}}) {
    for (auto form : {NegBinForm::Verbatim, NegBinForm::Standard}) {
      const auto law = DurationPmf::from_params(w, form);
      std::vector<double> lp, lt;
      law.tabulate(400, lp, lt);
      for (std::int64_t n : {1, 10, 50, 400}) {
        double s = 0;
        for (std::int64_t d = 1; d <= n; ++d) s += std::exp(lp[d - 1]);
        CHECK(std::abs(s + std::exp(lt[n]) - 1.0) < 1e-10);
      }
      double mean = 0;
      for (std::int64_t d = 1; d <= 2000; ++d) mean += static_cast<double>(d) * law.pmf(d);
      CHECK(mean == doctest::Approx(law.mean()).epsilon(1e-8));
    }
  }
  // Verbatim negative binomial with r = 1 is a geometric law on d >= 1.
  const auto nb = DurationPmf::from_params({0.0, 1.0, 1, 0.7});
  const auto geo = DurationPmf::geometric(0.7);
  for (int d = 1; d < 30; ++d) CHECK(nb.log_pmf(d) == doctest::Approx(geo.log_pmf(d)).epsilon(1e-12));
}

TEST_CASE("duration sampling matches the pmf") {
  Rng rng(5);
  const auto law = DurationPmf::from_params({0.4, 20.0, 2, 0.6});
  std::vector<double> xs(100000);
  for (auto& x : xs) x = static_cast<double>(law.sample(rng));
  const auto m = moments(xs);
  CHECK(std::abs(m.mean - law.mean()) < 4.0 * m.mean_se);
  // Conditional draws respect the conditioning event.
  for (int i = 0; i < 1000; ++i) CHECK(law.sample_greater(rng, 35) > 35);
}

TEST_CASE("elementary samplers match analytic moments") {
  Rng rng(2024);
  const int n = 100000;
  auto check = [](const std::vector<double>& xs, double mean, double var) {
    const auto m = moments(xs);
    CHECK(std::abs(m.mean - mean) < 4.0 * m.mean_se);
    CHECK(std::abs(m.var - var) < 4.0 * m.var_se);
  };
  std::vector<double> xs(n);
  for (auto& x : xs) x = normal_sample(rng, 2.0, 9.0);
  check(xs, 2.0, 9.0);
  for (double shape : {0.3, 1.0, 4.5}) {
    for (auto& x : xs) x = gamma_sample(rng, shape, 2.0);
    check(xs, shape / 2.0, shape / 4.0);
  }
  for (auto& x : xs) x = beta_sample(rng, 2.0, 5.0);
  check(xs, 2.0 / 7.0, 10.0 / (49.0 * 8.0));
  for (double lam : {0.7, 3.0, 55.0}) {
    for (auto& x : xs) x = static_cast<double>(poisson_sample(rng, lam));
    check(xs, lam, lam);
  }
  for (auto& x : xs) x = static_cast<double>(geometric_sample(rng, 0.25));
  check(xs, 3.0, 0.75 / 0.0625);
  for (auto& x : xs) x = static_cast<double>(negbin_sample(rng, 3, 0.4));
  check(xs, 3 * 0.4 / 0.6, 3 * 0.4 / 0.36);
  const std::vector<double> alpha{1.0, 2.0, 3.0};
  for (auto& x : xs) x = dirichlet_sample(rng, alpha)[2];
  check(xs, 0.5, 0.5 * 0.5 / 7.0);
}

TEST_CASE("dirichlet degenerate coordinates and neutrality") {
  Rng rng(77);
  const auto d = dirichlet_sample(rng, std::vector<double>{0.0, 1.0, 2.0});
  CHECK(d[0] == 0.0);
  // Tiny parameters must not break normalization.
  const auto t = dirichlet_sample(rng, std::vector<double>{1e-3, 1e-3, 1e-3});
  CHECK(std::accumulate(t.begin(), t.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<double> alpha{2.0, 3.0, 4.0};
  const int n = 100000;
  std::vector<double> x1(n), v(n);
  for (int i = 0; i < n; ++i) {
    const auto s = dirichlet_sample(rng, alpha);
    x1[i] = s[0];
    v[i] = s[1] / (1.0 - s[0]);
  }
  auto beta_cdf = [](double a, double b) {
    return [a, b](double x) { return x <= 0 ? 0.0 : x >= 1 ? 1.0 : boost::math::ibeta(a, b, x); };
  };
  CHECK(ks_statistic(x1, beta_cdf(2.0, 7.0)) < ks_critical_01(n));
  // V is Beta(3, 4) and independent of X1: check on both halves split at the median of X1.
  std::vector<double> lo, hi;
  const double med = 2.0 / 9.0 * 0.93;
  for (int i = 0; i < n; ++i) (x1[i] < med ? lo : hi).push_back(v[i]);
  CHECK(ks_statistic(lo, beta_cdf(3.0, 4.0)) < ks_critical_01(lo.size()));
  CHECK(ks_statistic(hi, beta_cdf(3.0, 4.0)) < ks_critical_01(hi.size()));
}
