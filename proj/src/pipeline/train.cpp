#include "flexload/pipeline/train.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <spdlog/spdlog.h>

#include "flexload/distributions.hpp"
#include "flexload/errors.hpp"
#include "flexload/hdp.hpp"
#include "flexload/numerics.hpp"

namespace flexload::pipeline {

DurationFit fit_duration_mixture(std::span<const std::int64_t> d, int r, std::size_t max_iterations) {
  require(!d.empty(), "duration EM: no data");
  require(r >= 1, "duration EM: r must be >= 1");
  for (auto v : d) require(v >= 0, "duration EM: negative duration");
  std::vector<std::int64_t> sorted(d.begin(), d.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size(), half = std::max<std::size_t>(n / 2, 1);
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < half; ++i) lo += static_cast<double>(sorted[i]);
  for (std::size_t i = n - half; i < n; ++i) hi += static_cast<double>(sorted[i]);
  lo /= static_cast<double>(half);
  hi /= static_cast<double>(half);
  DurationFit fit;
  DurationParams& w = fit.params;
  w.r = r;
  w.phi = 0.5;
  w.lambda = std::max(lo, 1e-3);
  w.varphi = std::clamp(hi / (hi + r), 1e-6, 1.0 - 1e-6);
  std::vector<double> resp(n);
  double prev = -std::numeric_limits<double>::infinity();
  for (fit.iterations = 1; fit.iterations <= max_iterations; ++fit.iterations) {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = w.phi > 0.0 ? std::log(w.phi) + poisson_logpmf(d[i], w.lambda) : kNegInf;
      const double b = w.phi < 1.0 ? std::log1p(-w.phi) + negbin_logpmf(d[i], r, w.varphi, NegBinForm::Standard)
                                   : kNegInf;
      const double m = log_add(a, b);
      resp[i] = std::exp(a - m);
      ll += m;
    }
    fit.log_likelihood = ll;
    double sr = 0.0, srd = 0.0, snd = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sr += resp[i];
      srd += resp[i] * static_cast<double>(d[i]);
      snd += (1.0 - resp[i]) * static_cast<double>(d[i]);
    }
    const double nn = static_cast<double>(n) - sr;
    w.phi = std::clamp(sr / static_cast<double>(n), 0.0, 1.0);
    if (sr > 0.0) w.lambda = std::max(srd / sr, 1e-9);
    if (nn > 0.0) w.varphi = std::clamp(snd / (snd + r * nn), 1e-9, 1.0 - 1e-9);
    if (std::abs(ll - prev) <= 1e-10 * std::max(1.0, std::abs(ll))) break;
    prev = ll;
  }
  fit.iterations = std::min(fit.iterations, max_iterations);
  w.phi = std::clamp(w.phi, 1e-9, 1.0 - 1e-9);
  return fit;
}

double robust_noise_variance(std::span<const double> y, double floor) {
  if (y.size() < 3) return floor;
  std::vector<double> a(y.size() - 1);
  for (std::size_t t = 1; t < y.size(); ++t) a[t - 1] = std::abs(y[t] - y[t - 1]);
  std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(a.size() / 2), a.end());
  const double mad = a[a.size() / 2];
  const double s = mad / 0.6745;
  return std::max(s * s / 2.0, floor);
}

std::vector<double> kmeans_1d(std::span<const double> x, std::span<const double> w, std::size_t k,
                              std::size_t iterations) {
  require(x.size() == w.size() && !x.empty() && k >= 1, "kmeans: invalid input");
  std::vector<std::size_t> order(x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  double total = 0.0;
  for (double v : w) total += v;
  require(total > 0.0, "kmeans: zero total weight");
  std::vector<double> c(k);
  for (std::size_t m = 0; m < k; ++m) {
    const double target = total * (static_cast<double>(m) + 0.5) / static_cast<double>(k);
    double acc = 0.0;
    c[m] = x[order.back()];
    for (std::size_t i : order) {
      acc += w[i];
      if (acc >= target) {
        c[m] = x[i];
        break;
      }
    }
  }
  // Spread seeds that coincide.
  const double range = x[order.back()] - x[order.front()];
  for (std::size_t m = 1; m < k; ++m)
    if (c[m] <= c[m - 1]) c[m] = c[m - 1] + std::max(range, 1.0) * 1e-6;
  for (std::size_t it = 0; it < iterations; ++it) {
    std::vector<double> s(k, 0.0), sw(k, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      std::size_t best = 0;
      for (std::size_t m = 1; m < k; ++m)
        if (std::abs(x[i] - c[m]) < std::abs(x[i] - c[best])) best = m;
      s[best] += w[i] * x[i];
      sw[best] += w[i];
    }
    bool moved = false;
    for (std::size_t m = 0; m < k; ++m)
      if (sw[m] > 0.0) {
        const double v = s[m] / sw[m];
        moved = moved || v != c[m];
        c[m] = v;
      }
    std::sort(c.begin(), c.end());
    if (!moved) break;
  }
  return c;
}

namespace {

std::size_t nearest(const std::vector<double>& c, double v) {
  std::size_t best = 0;
  for (std::size_t m = 1; m < c.size(); ++m)
    if (std::abs(v - c[m]) < std::abs(v - c[best])) best = m;
  return best;
}

struct StateSummary {
  std::size_t house;
  double mean;
  double count;
};

struct HouseLabels {
  std::vector<const std::vector<double>*> y;  // per session
  std::vector<std::vector<int>> labels;       // per session, HDP state
};

hdp::HdpHsmmConfig training_config(std::span<const double> y, double sigma2, const RunConfig& cfg) {
  hdp::HdpHsmmConfig hc;
  hc.L = cfg.weak_limit;
  hc.gamma = cfg.train.gamma;
  hc.alpha = cfg.train.alpha;
  hc.sigma2 = sigma2;
  hc.form = NegBinForm::Standard;
  hc.max_duration = cfg.train.max_duration;
  double lo = y[0], hi = y[0], mean = 0.0;
  for (double v : y) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    mean += v;
  }
  mean /= static_cast<double>(y.size());
  const double span = std::max(hi - lo, std::sqrt(sigma2));
  hc.prior.weights = SimplexVector::uniform(1);
  hc.prior.components = {NormalPrior{0.5 * (lo + hi), span * span}};
  hc.prior.duration_weights = SimplexVector::uniform(1);
  DurationHyper dh;
  dh.phi = {1.0, 1.0};
  dh.lambda = {1.0, 0.02};
  dh.varphi = {1.0, 1.0};
  dh.r = cfg.train.r;
  hc.prior.duration_components = {dh};
  return hc;
}

BetaHyper beta_around(double mean, double strength) {
  const double m = std::clamp(mean, 0.01, 0.99);
  return {strength * m, strength * (1.0 - m)};
}

}  // namespace

TrainResult train_hyperparams(const std::vector<Dataset>& corpus, const RunConfig& cfg, Rng& rng) {
  require(!corpus.empty(), "train: empty corpus");
  TrainResult res;
  auto warn = [&](const std::string& msg) {
    spdlog::warn("{}", msg);
    res.warnings.push_back(msg);
  };
  if (corpus.size() < 2) warn("train: fewer than two houses; fitting a single house without across-house spread");

  std::vector<std::string> devices = cfg.devices;
  if (devices.empty()) {
    std::set<std::string> seen;
    for (const auto& h : corpus)
      for (const auto& d : h.devices)
        if (seen.insert(d).second) devices.push_back(d);
  }

  for (const auto& name : devices) {
    const std::size_t J = cfg.states_for(name);
    // Gather sessions per house where the device is present and used.
    std::vector<HouseLabels> houses;
    std::vector<double> pooled;
    for (const auto& h : corpus) {
      const int k = h.device_index(name);
      if (k < 0) continue;
      HouseLabels hl;
      bool used = false;
      for (const auto& s : h.sessions) {
        const auto& col = s.device[static_cast<std::size_t>(k)];
        for (double v : col) used = used || v > 0.0;
        if (col.size() >= 2) hl.y.push_back(&col);
      }
      if (used && !hl.y.empty()) {
        for (const auto* y : hl.y) pooled.insert(pooled.end(), y->begin(), y->end());
        houses.push_back(std::move(hl));
      }
    }
    if (houses.empty()) {
      warn("train: device '" + name + "' is absent or unused in every house; excluded");
      continue;
    }
    const double sigma2 = robust_noise_variance(pooled);

    // Label every session with the HDP-HSMM sampler; keep the final sweep.
    std::vector<StateSummary> states;
    for (std::size_t hi = 0; hi < houses.size(); ++hi) {
      auto& hl = houses[hi];
      for (const auto* y : hl.y) {
        const auto hc = training_config(*y, sigma2, cfg);
        auto st = hdp::init_hdphsmm(hc, y->size(), rng);
        for (std::size_t sw = 0; sw < cfg.train.sweeps; ++sw) hdp::gibbs_sweep_hdphsmm(st, hc, *y, rng);
        auto labels = st.path.expand();
        std::vector<double> sum(hc.L, 0.0), cnt(hc.L, 0.0);
        for (std::size_t t = 0; t < y->size(); ++t) {
          sum[static_cast<std::size_t>(labels[t])] += (*y)[t];
          cnt[static_cast<std::size_t>(labels[t])] += 1.0;
        }
        for (std::size_t j = 0; j < hc.L; ++j)
          if (cnt[j] > 0.0) states.push_back({hi, sum[j] / cnt[j], cnt[j]});
        hl.labels.push_back(std::move(labels));
      }
    }
    std::vector<double> xs, ws;
    for (const auto& s : states) {
      xs.push_back(s.mean);
      ws.push_back(s.count);
    }
    const auto centers = kmeans_1d(xs, ws, J);

    // Mode label per minute, then pooled and per-house moments.
    std::vector<KahanSum> msum(J);
    std::vector<double> mcount(J, 0.0);
    std::vector<std::vector<double>> house_means(J);
    std::vector<std::vector<std::int64_t>> runs(J);
    std::vector<double> col_counts(J, 0.0);
    double transitions = 0.0;
    for (std::size_t hi = 0; hi < houses.size(); ++hi) {
      auto& hl = houses[hi];
      std::vector<double> hs(J, 0.0), hc(J, 0.0);
      for (std::size_t si = 0; si < hl.y.size(); ++si) {
        const auto& y = *hl.y[si];
        const auto& lab = hl.labels[si];
        std::vector<double> smean(cfg.weak_limit, 0.0), scnt(cfg.weak_limit, 0.0);
        for (std::size_t t = 0; t < y.size(); ++t) {
          smean[static_cast<std::size_t>(lab[t])] += y[t];
          scnt[static_cast<std::size_t>(lab[t])] += 1.0;
        }
        std::vector<int> mode(y.size());
        for (std::size_t t = 0; t < y.size(); ++t) {
          const auto j = static_cast<std::size_t>(lab[t]);
          mode[t] = static_cast<int>(nearest(centers, smean[j] / scnt[j]));
          const auto m = static_cast<std::size_t>(mode[t]);
          msum[m].add(y[t]);
          mcount[m] += 1.0;
          hs[m] += y[t];
          hc[m] += 1.0;
          if (t > 0) {
            col_counts[m] += 1.0;
            transitions += 1.0;
          }
        }
        // Interior runs only; the first and last are censored.
        std::vector<std::pair<int, std::int64_t>> rl;
        for (std::size_t t = 0; t < mode.size(); ++t) {
          if (rl.empty() || rl.back().first != mode[t])
            rl.push_back({mode[t], 1});
          else
            ++rl.back().second;
        }
        for (std::size_t i = 1; i + 1 < rl.size(); ++i) runs[static_cast<std::size_t>(rl[i].first)].push_back(rl[i].second);
      }
      for (std::size_t m = 0; m < J; ++m)
        if (hc[m] > 0.0) house_means[m].push_back(hs[m] / hc[m]);
    }

    DeviceHyper d;
    d.name = name;
    d.sigma2 = sigma2;
    d.r = cfg.train.r;
    d.form = NegBinForm::Standard;
    d.houses = houses.size();
    double total_obs = 0.0, total_runs = 0.0;
    for (std::size_t m = 0; m < J; ++m) {
      total_obs += mcount[m];
      total_runs += static_cast<double>(runs[m].size());
    }
    const double kappa = cfg.train.prior_strength;
    for (std::size_t m = 0; m < J; ++m) {
      const double mu = mcount[m] > 0.0 ? msum[m].value() / mcount[m] : centers[m];
      double spread = 0.0;
      if (house_means[m].size() >= 2) {
        double a = 0.0, b = 0.0;
        for (double v : house_means[m]) a += v;
        a /= static_cast<double>(house_means[m].size());
        for (double v : house_means[m]) b += (v - a) * (v - a);
        spread = std::sqrt(b / static_cast<double>(house_means[m].size() - 1));
      }
      const double scale = 0.05 * std::max(std::abs(mu), std::sqrt(sigma2));
      d.components.push_back({mu, std::max(spread * spread, scale * scale)});
      d.mean_spread.push_back(spread);
      d.weights.push_back(total_obs > 0.0 ? mcount[m] / total_obs : 1.0 / static_cast<double>(J));
      d.alpha.push_back(std::max(static_cast<double>(J) * col_counts[m] / std::max(transitions, 1.0), 1e-3));
      DurationHyper h;
      h.r = cfg.train.r;
      if (runs[m].empty()) {
        warn("train: device '" + name + "' mode " + std::to_string(m) + " has no complete runs; vague duration prior");
        h.phi = {1.0, 1.0};
        h.lambda = {1.0, 0.02};
        h.varphi = {1.0, 1.0};
      } else {
        const auto fit = fit_duration_mixture(runs[m], cfg.train.r, cfg.train.em_iterations);
        h.phi = beta_around(fit.params.phi, kappa);
        h.lambda = {kappa, kappa / std::max(fit.params.lambda, 1e-6)};
        h.varphi = beta_around(fit.params.varphi, kappa);
      }
      d.duration_components.push_back(h);
      d.duration_weights.push_back(total_runs > 0.0 ? static_cast<double>(runs[m].size()) / total_runs
                                                    : 1.0 / static_cast<double>(J));
    }
    // Weights must sum to one exactly enough for validation.
    const auto renorm = [](std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      for (double& x : v) x /= s;
    };
    renorm(d.weights);
    renorm(d.duration_weights);
    if (std::any_of(d.duration_weights.begin(), d.duration_weights.end(), [](double v) { return v == 0.0; })) {
      for (double& v : d.duration_weights) v = std::max(v, 1e-6);
      renorm(d.duration_weights);
    }
    if (std::any_of(d.weights.begin(), d.weights.end(), [](double v) { return v == 0.0; })) {
      for (double& v : d.weights) v = std::max(v, 1e-6);
      renorm(d.weights);
    }
    res.bundle.devices.push_back(std::move(d));
  }
  require(!res.bundle.devices.empty(), "train: no device could be trained");
  res.bundle.validate();
  return res;
}

}  // namespace flexload::pipeline
