#include <cmath>
#include <map>

#include "doctest.h"
#include "flexload/distributions.hpp"
#include "flexload/errors.hpp"
#include "flexload/hdp.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace flexload;
using namespace flexload::hdp;
using boost::multiprecision::cpp_int;

namespace {

using oracles::antoniak_pmf;

EmissionMixturePrior simple_prior(double mu, double tau2) {
  EmissionMixturePrior p;
  p.weights = SimplexVector({1.0});
  p.components = {{mu, tau2}};
  p.duration_weights = SimplexVector({1.0});
  p.duration_components = {DurationHyper{{1.0, 1.0}, {2.0, 0.1}, {2.0, 2.0}, 2}};
  return p;
}

}  // namespace

TEST_CASE("stirling numbers") {
  CHECK(stirling_unsigned(0, 0) == 1);
  CHECK(stirling_unsigned(1, 1) == 1);
  for (unsigned n = 1; n < 10; ++n) CHECK(stirling_unsigned(n, 0) == 0);
  CHECK(stirling_unsigned(3, 2) == 3);
  CHECK(stirling_unsigned(2, 5) == 0);
  // Row sums are n!.
  cpp_int s = 0;
  for (unsigned m = 0; m <= 20; ++m) s += stirling_unsigned(20, m);
  cpp_int f = 1;
  for (unsigned k = 2; k <= 20; ++k) f *= k;
  CHECK(s == f);
  CHECK_THROWS_AS(stirling_unsigned(31, 2), InvalidParameter);
}

TEST_CASE("table counts follow the Antoniak law") {
  Rng rng(1);
  CHECK(sample_m(0, 2.0, rng) == 0);
  for (int i = 0; i < 100; ++i) CHECK(sample_m(1, 0.01, rng) == 1);
  const auto p = antoniak_pmf(5, 1.0);
  std::vector<double> freq(6, 0.0);
  const int n = 1000000;
  for (int i = 0; i < n; ++i) freq[sample_m(5, 1.0, rng)] += 1.0 / n;
  double tv = 0;
  for (int m = 0; m <= 5; ++m) tv += 0.5 * std::abs(freq[m] - p[m]);
  CHECK(tv < 0.005);
}

TEST_CASE("geometric auxiliaries") {
  Rng rng(2);
  for (auto r : sample_rho(0.0, 50, rng)) CHECK(r == 0);
  CHECK(sample_rho(0.5, 0, rng).empty());
  CHECK_THROWS_AS(sample_rho(1.0, 3, rng), InvalidParameter);
  const auto v = sample_rho(0.5, 100000, rng);
  std::vector<double> xs(v.begin(), v.end());
  const auto m = testing_support::moments(xs);
  CHECK(std::abs(m.mean - 1.0) < 3.0 * m.mean_se);
}

TEST_CASE("beta and pi posteriors") {
  Rng rng(3);
  CountMatrix m{{1, 0, 0}, {0, 0, 1}, {1, 0, 0}};
  const int n = 200000;
  std::vector<double> acc(3, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto b = sample_beta_posterior(m, 3.0, 3, rng);
    for (int k = 0; k < 3; ++k) acc[k] += b[k] / n;
  }
  // gamma/L = 1 plus column sums (2, 0, 1).
  CHECK(acc[0] == doctest::Approx(3.0 / 6.0).epsilon(0.01));
  CHECK(acc[1] == doctest::Approx(1.0 / 6.0).epsilon(0.02));
  CHECK(acc[2] == doctest::Approx(2.0 / 6.0).epsilon(0.01));

  const SimplexVector beta({0.0, 0.25, 0.75});
  const std::vector<std::uint64_t> row{0, 3, 1};
  std::vector<double> pm(3, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto p = sample_pi_posterior(beta, 4.0, row, rng);
    CHECK(p[0] == 0.0);
    for (int k = 0; k < 3; ++k) pm[k] += p[k] / n;
  }
  const auto mean = dirichlet_mean(std::vector<double>{0.0, 4.0, 4.0});
  CHECK(pm[1] == doctest::Approx(mean[1]).epsilon(0.01));
}

TEST_CASE("hdp sweep basics") {
  Rng rng(4);
  auto one = make_weak_limit_hdp(1, 1.0, 1.0, rng);
  hdp_sweep(one, CountMatrix{{0}}, rng);
  CHECK(one.beta[0] == 1.0);
  CHECK(one.pi[0][0] == 1.0);

  auto h = make_weak_limit_hdp(4, 2.0, 3.0, rng);
  const CountMatrix none(4, std::vector<std::uint64_t>(4, 0));
  CountMatrix trans{{0, 3, 1, 0}, {2, 0, 0, 1}, {1, 1, 0, 0}, {0, 0, 2, 0}};
  for (int i = 0; i < 200; ++i) {
    hdp_sweep(h, i % 2 ? trans : none, rng);
    double s = 0;
    for (double b : h.beta) s += b;
    CHECK(std::abs(s - 1.0) < 1e-12);
    for (std::size_t j = 0; j < 4; ++j) {
      for (std::size_t k = 0; k < 4; ++k) {
        CHECK(h.m[j][k] <= h.n[j][k]);
        CHECK((h.m[j][k] == 0) == (h.n[j][k] == 0));
      }
    }
  }
  const auto pib = normalized_offdiag(h.pi);
  for (std::size_t j = 0; j < 4; ++j) CHECK(pib(j, j) == 0.0);
}

TEST_CASE("hdp sweep keeps the L=2 posterior invariant") {
  // Without self-transitions and with L = 2 the likelihood is constant, so the posterior is the prior.
  Rng rng(5);
  const double gamma = 4.0, alpha = 6.0;
  const CountMatrix trans{{0, 3}, {2, 0}};
  const int n = 1000000;
  double b1 = 0, p11 = 0, p1122 = 0;
  for (int i = 0; i < n; ++i) {
    auto h = make_weak_limit_hdp(2, gamma, alpha, rng);
    hdp_sweep(h, trans, rng);
    b1 += h.beta[0] / n;
    p11 += h.pi[0][0] / n;
    p1122 += h.pi[0][0] * h.pi[1][1] / n;
  }
  const double g = gamma / 2.0;
  CHECK(std::abs(b1 - 0.5) < 2e-3);
  CHECK(std::abs(p11 - 0.5) < 2e-3);
  CHECK(std::abs(p1122 - g * g / (gamma * (gamma + 1.0))) < 2e-3);
}

TEST_CASE("shrinkage of unused states") {
  Rng rng(6);
  auto h = make_weak_limit_hdp(6, 1.0, 10.0, rng);
  CountMatrix trans(6, std::vector<std::uint64_t>(6, 0));
  trans[0][1] = 200;
  trans[1][0] = 199;
  std::vector<double> mass(6, 0.0);
  const int sweeps = 3000;
  for (int i = 0; i < sweeps; ++i) {
    hdp_sweep(h, trans, rng);
    for (int k = 0; k < 6; ++k) mass[k] += h.beta[k] / sweeps;
  }
  int big = 0;
  for (double m : mass) big += m > 0.01;
  CHECK(big <= 3);
}

TEST_CASE("hdp-hsmm recovers three states") {
  Rng rng(7);
  hsmm::HsmmParams truth;
  truth.pi = Table(3, 3, 0.5);
  for (int j = 0; j < 3; ++j) truth.pi(j, j) = 0.0;
  truth.theta = {100.0, 600.0, 1100.0};
  truth.sigma2 = 100.0 * 100.0;
  truth.durations.assign(3, DurationParams{0.8, 12.0, 2, 0.7});
  const auto sim = hsmm::simulate_hsmm(truth.model(), 400, rng);

  HdpHsmmConfig cfg;
  cfg.L = 6;
  cfg.gamma = 1.0;
  cfg.alpha = 4.0;
  cfg.sigma2 = truth.sigma2;
  cfg.max_duration = 60;
  cfg.prior.weights = SimplexVector({0.5, 0.5});
  cfg.prior.components = {{300.0, 300.0 * 300.0}, {900.0, 300.0 * 300.0}};
  cfg.prior.duration_weights = SimplexVector({0.5, 0.5});
  cfg.prior.duration_components = {DurationHyper{{2.0, 2.0}, {2.0, 0.2}, {2.0, 2.0}, 2},
                                    DurationHyper{{2.0, 2.0}, {5.0, 0.2}, {2.0, 2.0}, 1}};
  auto st = init_hdphsmm(cfg, sim.y.size(), rng);
  std::map<std::size_t, int> counts;
  for (int i = 0; i < 2300; ++i) {
    gibbs_sweep_hdphsmm(st, cfg, sim.y, rng);
    CHECK(st.path.valid());
    if (i >= 300) ++counts[st.utilized_states()];
  }
  auto mode = std::max_element(counts.begin(), counts.end(),
                               [](auto& a, auto& b) { return a.second < b.second; });
  CHECK(mode->first == 3);
}

TEST_CASE("weak-limit level does not change the utilized-state posterior") {
  Rng rng(8);
  hsmm::HsmmParams truth;
  truth.pi = Table(2, 2, 0.0);
  truth.pi(0, 1) = truth.pi(1, 0) = 1.0;
  truth.theta = {100.0, 500.0};
  truth.sigma2 = 80.0 * 80.0;
  truth.durations.assign(2, DurationParams{0.8, 10.0, 2, 0.7});
  const auto sim = hsmm::simulate_hsmm(truth.model(), 160, rng);
  std::vector<std::pair<double, double>> ci;
  for (std::size_t L : {5, 10, 20}) {
    HdpHsmmConfig cfg;
    cfg.L = L;
    cfg.gamma = 1.0;
    cfg.alpha = 2.0;
    cfg.sigma2 = truth.sigma2;
    cfg.max_duration = 40;
    cfg.prior = simple_prior(300.0, 300.0 * 300.0);
    auto st = init_hdphsmm(cfg, sim.y.size(), rng);
    // Batch means for an interval that respects autocorrelation.
    const int batches = 20, per = 40;
    std::vector<double> bm;
    for (int i = 0; i < 100; ++i) gibbs_sweep_hdphsmm(st, cfg, sim.y, rng);
    for (int b = 0; b < batches; ++b) {
      double s = 0;
      for (int i = 0; i < per; ++i) {
        gibbs_sweep_hdphsmm(st, cfg, sim.y, rng);
        s += static_cast<double>(st.utilized_states());
      }
      bm.push_back(s / per);
    }
    const auto m = testing_support::moments(bm);
    const double half = 2.1 * std::sqrt(m.var / (batches - 1));
    ci.push_back({m.mean - half, m.mean + half});
    MESSAGE("L=" << L << " utilized " << m.mean << " +- " << half);
  }
  for (std::size_t a = 0; a < ci.size(); ++a)
    for (std::size_t b = a + 1; b < ci.size(); ++b)
      CHECK((ci[a].first <= ci[b].second && ci[b].first <= ci[a].second));
}
