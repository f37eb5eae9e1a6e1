#include "flexload/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "flexload/distributions.hpp"
#include "flexload/errors.hpp"

namespace flexload::dispatch {

namespace {

// Tilted row of R for state x, written into out (size nu).
void tilted_row(const NominalLoadModel& m, std::size_t x, double zeta, std::span<const double> power,
                double* out) {
  const std::span<const double> U = power.empty() ? std::span<const double>(m.U) : power;
  double u_min = U[0];
  for (double v : U) u_min = std::min(u_min, v);
  bool flat = true;
  double first = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t u = 0; u < m.nu; ++u) {
    if (m.R0(x, u) <= 0.0) continue;
    const double a = zeta * (U[u] - u_min);
    if (std::isnan(first)) first = a;
    flat = flat && a == first;
  }
  if (flat) {
    for (std::size_t u = 0; u < m.nu; ++u) out[u] = m.R0(x, u);
    return;
  }
  double lse = kNegInf;
  for (std::size_t u = 0; u < m.nu; ++u) {
    out[u] = m.R0(x, u) > 0.0 ? std::log(m.R0(x, u)) + zeta * (U[u] - u_min) : kNegInf;
    lse = std::max(lse, out[u]);
  }
  double s = 0.0;
  for (std::size_t u = 0; u < m.nu; ++u) s += std::exp(out[u] - lse);
  lse += std::log(s);
  for (std::size_t u = 0; u < m.nu; ++u) out[u] = std::exp(out[u] - lse);
}

double u_min_of(const NominalLoadModel& m) { return *std::min_element(m.U.begin(), m.U.end()); }

void reach(const Eigen::MatrixXd& P, bool transpose, std::vector<char>& seen) {
  const auto d = static_cast<std::size_t>(P.rows());
  seen.assign(d, 0);
  std::vector<std::size_t> stack = {0};
  seen[0] = 1;
  while (!stack.empty()) {
    const std::size_t a = stack.back();
    stack.pop_back();
    for (std::size_t b = 0; b < d; ++b) {
      const double p = transpose ? P(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a))
                                 : P(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      if (p > 0.0 && !seen[b]) {
        seen[b] = 1;
        stack.push_back(b);
      }
    }
  }
}

}  // namespace

void NominalLoadModel::validate() const {
  require(nu >= 1 && nn >= 1, "load model: empty state space");
  require(R0.rows() == size() && R0.cols() == nu, "load model: R0 shape");
  require(Q0.rows() == size() && Q0.cols() == nn, "load model: Q0 shape");
  require(U.size() == nu, "load model: power map length");
  for (std::size_t x = 0; x < size(); ++x) {
    SimplexVector r(std::vector<double>(R0.row(x).begin(), R0.row(x).end()));
    SimplexVector q(std::vector<double>(Q0.row(x).begin(), Q0.row(x).end()));
  }
  for (double u : U) require(std::isfinite(u), "load model: power must be finite");
}

Table controlled_R(const NominalLoadModel& m, double zeta, std::span<const double> power) {
  require(power.empty() || power.size() == m.nu, "controlled_R: power map length");
  Table R(m.size(), m.nu);
  for (std::size_t x = 0; x < m.size(); ++x) tilted_row(m, x, zeta, power, R.row(x).data());
  return R;
}

Eigen::MatrixXd controlled_kernel(const NominalLoadModel& m, double zeta) {
  const Table R = controlled_R(m, zeta);
  const auto d = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd P(d, d);
  for (std::size_t x = 0; x < m.size(); ++x)
    for (std::size_t u = 0; u < m.nu; ++u)
      for (std::size_t n = 0; n < m.nn; ++n)
        P(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(m.index(u, n))) = R(x, u) * m.Q0(x, n);
  return P;
}

Eigen::MatrixXd kernel_derivative(const NominalLoadModel& m, double zeta) {
  const Table R = controlled_R(m, zeta);
  const double u0 = u_min_of(m);
  const auto d = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd E(d, d);
  for (std::size_t x = 0; x < m.size(); ++x) {
    double ubar = 0.0;
    for (std::size_t u = 0; u < m.nu; ++u) ubar += R(x, u) * (m.U[u] - u0);
    for (std::size_t u = 0; u < m.nu; ++u) {
      const double centred = (m.U[u] - u0) - ubar;
      for (std::size_t n = 0; n < m.nn; ++n)
        E(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(m.index(u, n))) =
            R(x, u) * m.Q0(x, n) * centred;
    }
  }
  return E;
}

bool is_irreducible(const Eigen::MatrixXd& P) {
  if (P.rows() == 0) return false;
  std::vector<char> fwd, bwd;
  reach(P, false, fwd);
  reach(P, true, bwd);
  for (std::size_t i = 0; i < fwd.size(); ++i)
    if (!fwd[i] || !bwd[i]) return false;
  return true;
}

SimplexVector invariant_pmf(const Eigen::MatrixXd& P) {
  require(P.rows() == P.cols() && P.rows() > 0, "invariant_pmf: square matrix required");
  if (!is_irreducible(P)) throw ReducibleChainError("invariant_pmf: transition matrix is reducible");
  const Eigen::Index d = P.rows();
  Eigen::MatrixXd M = P.transpose() - Eigen::MatrixXd::Identity(d, d);
  M.row(d - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  rhs(d - 1) = 1.0;
  Eigen::VectorXd pi = M.fullPivLu().solve(rhs);
  std::vector<double> w(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) w[static_cast<std::size_t>(i)] = std::max(pi(i), 0.0);
  return SimplexVector::normalize(w);
}

double mean_power(const NominalLoadModel& m, const SimplexVector& mu) {
  require(mu.size() == m.size(), "mean_power: dimension mismatch");
  double y = 0.0;
  for (std::size_t x = 0; x < m.size(); ++x) y += mu[x] * m.power(x);
  return y;
}

MeanFieldState mean_field_step(const MeanFieldState& s, const NominalLoadModel& m, double zeta) {
  const Eigen::MatrixXd P = controlled_kernel(m, zeta);
  const auto d = static_cast<Eigen::Index>(m.size());
  require(s.mu.size() == m.size(), "mean_field_step: dimension mismatch");
  Eigen::RowVectorXd mu(d);
  for (Eigen::Index i = 0; i < d; ++i) mu(i) = s.mu[static_cast<std::size_t>(i)];
  const Eigen::RowVectorXd next = mu * P;
  std::vector<double> w(next.data(), next.data() + d);
  for (double& v : w) v = std::max(v, 0.0);
  MeanFieldState out = s;
  out.mu = SimplexVector::normalize(w);
  out.y = mean_power(m, out.mu);
  out.zeta = zeta;
  return out;
}

std::complex<double> transfer_function(const NominalLoadModel& m, double zeta, std::complex<double> z) {
  const Eigen::MatrixXd P = controlled_kernel(m, zeta);
  const SimplexVector pi = invariant_pmf(P);
  const Eigen::MatrixXd E = kernel_derivative(m, zeta);
  const auto d = static_cast<Eigen::Index>(m.size());
  Eigen::VectorXd piv(d);
  for (Eigen::Index i = 0; i < d; ++i) piv(i) = pi[static_cast<std::size_t>(i)];
  const Eigen::VectorXd B = E.transpose() * piv;
  const double u0 = u_min_of(m);
  double ubar = 0.0;
  for (std::size_t x = 0; x < m.size(); ++x) ubar += pi[x] * (m.power(x) - u0);
  Eigen::VectorXd C(d);
  for (std::size_t x = 0; x < m.size(); ++x) C(static_cast<Eigen::Index>(x)) = (m.power(x) - u0) - ubar;
  if (B.isZero(0.0) || C.isZero(0.0)) return {0.0, 0.0};
  const Eigen::MatrixXd Abar = P.transpose() - piv * Eigen::RowVectorXd::Ones(d);
  const Eigen::MatrixXcd M = z * Eigen::MatrixXcd::Identity(d, d) - Abar.cast<std::complex<double>>();
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
  if (!(lu.rcond() > 1e-13)) throw PoleError("transfer_function: z is a pole of the linearization");
  const Eigen::VectorXcd v = lu.solve(B.cast<std::complex<double>>());
  const std::complex<double> g = C.cast<std::complex<double>>().dot(v);
  if (!std::isfinite(g.real()) || !std::isfinite(g.imag()))
    throw PoleError("transfer_function: non-finite gain");
  return g;
}

std::vector<BodePoint> bode_from_response(std::span<const double> freqs,
                                          const std::function<std::complex<double>(std::complex<double>)>& G) {
  std::vector<BodePoint> out;
  out.reserve(freqs.size());
  double prev = 0.0;
  bool have_prev = false;
  for (double w : freqs) {
    require(w > 0.0 && w <= std::numbers::pi, "bode: frequencies must lie in (0, pi]");
    const std::complex<double> g = G(std::polar(1.0, w));
    BodePoint b;
    b.w = w;
    if (std::abs(g) == 0.0) {
      b.magnitude_db = kNegInfDb;
      b.phase_deg = have_prev ? prev : 0.0;
    } else {
      b.magnitude_db = 20.0 * std::log10(std::abs(g));
      double ph = std::arg(g) * 180.0 / std::numbers::pi;
      if (have_prev) {
        while (ph - prev > 180.0) ph -= 360.0;
        while (ph - prev < -180.0) ph += 360.0;
      }
      b.phase_deg = ph;
    }
    prev = b.phase_deg;
    have_prev = true;
    out.push_back(b);
  }
  return out;
}

std::vector<BodePoint> bode_points(const NominalLoadModel& m, double zeta, std::span<const double> freqs) {
  return bode_from_response(freqs, [&](std::complex<double> z) { return transfer_function(m, zeta, z); });
}

std::vector<double> log_frequencies(double w_min, double w_max, std::size_t n) {
  require(w_min > 0.0 && w_max > w_min && n >= 2, "log_frequencies: invalid range");
  std::vector<double> w(n);
  const double a = std::log(w_min), b = std::log(w_max);
  for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  w.front() = w_min;
  w.back() = w_max;
  return w;
}

double pi_step(double e, PiState& s, const PiGains& g) {
  s.integrator += e;
  return g.kp * e + g.ki * s.integrator;
}

PiDesign fit_pi_gains(std::span<const BodePoint> bode) {
  require(bode.size() >= 2, "fit_pi_gains: need at least two bode points");
  for (const auto& b : bode) require(std::isfinite(b.magnitude_db), "fit_pi_gains: gain is identically zero");
  std::size_t best_i = 0, best_j = 0;
  double best_width = -1.0;
  for (std::size_t i = 0; i < bode.size(); ++i) {
    double lo = bode[i].magnitude_db, hi = lo;
    for (std::size_t j = i; j < bode.size(); ++j) {
      lo = std::min(lo, bode[j].magnitude_db);
      hi = std::max(hi, bode[j].magnitude_db);
      if (hi - lo >= 1.0) break;
      const double width = std::log(bode[j].w / bode[i].w);
      if (width > best_width) {
        best_width = width;
        best_i = i;
        best_j = j;
      }
    }
  }
  PiDesign d;
  double db = 0.0;
  for (std::size_t k = best_i; k <= best_j; ++k) db += bode[k].magnitude_db;
  d.flat_magnitude_db = db / static_cast<double>(best_j - best_i + 1);
  d.flat_magnitude = std::pow(10.0, d.flat_magnitude_db / 20.0);
  d.flat_lo = bode[best_i].w;
  d.flat_hi = bode[best_j].w;
  d.cutoff = bode.back().w;
  for (std::size_t k = 0; k < bode.size(); ++k) {
    if (bode[k].phase_deg > -45.0) continue;
    if (k == 0) {
      d.cutoff = bode[0].w;
    } else {
      // Interpolate in log frequency.
      const auto& a = bode[k - 1];
      const auto& b = bode[k];
      const double f = (a.phase_deg + 45.0) / (a.phase_deg - b.phase_deg);
      d.cutoff = std::exp(std::log(a.w) + f * (std::log(b.w) - std::log(a.w)));
    }
    break;
  }
  d.gains.kp = d.flat_magnitude / 20.0;
  d.gains.ki = (d.cutoff / 5.0) * d.gains.kp;
  return d;
}

std::complex<double> pi_transfer(const PiGains& g, std::complex<double> z) { return g.kp + g.ki * z / (z - 1.0); }

std::complex<double> closed_loop_transfer(const NominalLoadModel& m, double zeta, const PiGains& g,
                                          std::complex<double> z) {
  const std::complex<double> L = pi_transfer(g, z) * transfer_function(m, zeta, z);
  return L / (1.0 + L);
}

double closed_loop_spectral_radius(const NominalLoadModel& m, double zeta, const PiGains& g) {
  const Eigen::MatrixXd P = controlled_kernel(m, zeta);
  const SimplexVector pi = invariant_pmf(P);
  const Eigen::MatrixXd E = kernel_derivative(m, zeta);
  const auto d = static_cast<Eigen::Index>(m.size());
  Eigen::VectorXd piv(d);
  for (Eigen::Index i = 0; i < d; ++i) piv(i) = pi[static_cast<std::size_t>(i)];
  const Eigen::VectorXd B = E.transpose() * piv;
  const double u0 = u_min_of(m);
  double ubar = 0.0;
  for (std::size_t x = 0; x < m.size(); ++x) ubar += pi[x] * (m.power(x) - u0);
  Eigen::RowVectorXd C(d);
  for (std::size_t x = 0; x < m.size(); ++x) C(static_cast<Eigen::Index>(x)) = (m.power(x) - u0) - ubar;
  const Eigen::MatrixXd Abar = P.transpose() - piv * Eigen::RowVectorXd::Ones(d);
  // State (phi_t, I_{t-1}); e_t = -C phi_t, I_t = I_{t-1} + e_t.
  Eigen::MatrixXd M(d + 1, d + 1);
  M.topLeftCorner(d, d) = Abar - (g.kp + g.ki) * B * C;
  M.topRightCorner(d, 1) = g.ki * B;
  M.bottomLeftCorner(1, d) = -C;
  M(d, d) = 1.0;
  return M.eigenvalues().cwiseAbs().maxCoeff();
}

void TclConfig::validate() const {
  require(theta_lo < theta_hi, "tcl: theta_lo must be below theta_hi");
  require(grid > 0.0 && margin >= grid, "tcl: grid must be positive and the margin at least one cell");
  require(time_constant > 1.0, "tcl: time constant must exceed one step");
  require(cooling_rate > 0.0, "tcl: cooling rate must be positive");
  require(switching_noise > 0.0 && switching_noise < 0.5, "tcl: switching noise must lie in (0, 0.5)");
  require(!ambient.empty(), "tcl: empty ambient profile");
  for (double a : ambient) require(std::isfinite(a), "tcl: ambient must be finite");
  require(std::isfinite(power_on) && power_on > 0.0, "tcl: power must be positive");
}

std::size_t TclConfig::grid_size() const {
  return static_cast<std::size_t>(std::llround((theta_hi - theta_lo + 2.0 * margin) / grid)) + 1;
}

NominalLoadModel tcl_nominal_model(const TclConfig& cfg, double ambient) {
  cfg.validate();
  NominalLoadModel m;
  m.nu = 2;
  m.nn = cfg.grid_size();
  m.U = {0.0, cfg.power_on};
  m.R0 = Table(m.size(), 2);
  m.Q0 = Table(m.size(), m.nn);
  const double eps = cfg.switching_noise;
  const double tol = 1e-9 * cfg.grid;
  for (std::size_t u = 0; u < 2; ++u)
    for (std::size_t n = 0; n < m.nn; ++n) {
      const std::size_t x = m.index(u, n);
      const double th = cfg.temperature(n);
      double on;
      if (th >= cfg.theta_hi - tol)
        on = 1.0 - eps;
      else if (th <= cfg.theta_lo + tol)
        on = eps;
      else
        on = u == 1 ? 1.0 - eps : eps;
      m.R0(x, 0) = 1.0 - on;
      m.R0(x, 1) = on;
      const double next = th + (ambient - th) / cfg.time_constant - (u == 1 ? cfg.cooling_rate : 0.0);
      // Stochastic rounding keeps the expected drift when a step is below one cell.
      const double pos = std::clamp((next - cfg.temperature(0)) / cfg.grid, 0.0, static_cast<double>(m.nn - 1));
      const auto k = static_cast<std::size_t>(std::floor(pos));
      const double f = pos - static_cast<double>(k);
      if (k + 1 >= m.nn || f <= tol) {
        m.Q0(x, std::min(k, m.nn - 1)) = 1.0;
      } else {
        m.Q0(x, k) = 1.0 - f;
        m.Q0(x, k + 1) = f;
      }
    }
  return m;
}

const NominalLoadModel& ModelSchedule::at(std::size_t t) const {
  if (step_model.empty()) return models.at(0);
  return models.at(step_model.at(t));
}

std::size_t ModelSchedule::horizon() const {
  return step_model.empty() ? std::numeric_limits<std::size_t>::max() : step_model.size();
}

ModelSchedule tcl_schedule(const TclConfig& cfg, std::size_t steps) {
  ModelSchedule s;
  if (cfg.ambient.size() == 1) {
    s.models.push_back(tcl_nominal_model(cfg, cfg.ambient[0]));
    return s;
  }
  require(cfg.ambient.size() >= steps, "tcl schedule: ambient profile shorter than the horizon");
  std::map<double, std::size_t> seen;
  for (std::size_t t = 0; t < cfg.ambient.size(); ++t) {
    auto [it, fresh] = seen.emplace(cfg.ambient[t], s.models.size());
    if (fresh) s.models.push_back(tcl_nominal_model(cfg, cfg.ambient[t]));
    s.step_model.push_back(it->second);
  }
  return s;
}

ClosedLoopTrace closed_loop_simulate(const ModelSchedule& schedule, std::span<const double> reference,
                                     const ClosedLoopOptions& opt, Rng& rng) {
  require(!schedule.models.empty(), "closed loop: empty schedule");
  require(reference.size() <= schedule.horizon(), "closed loop: reference longer than the ambient profile");
  require(opt.loads >= 1, "closed loop: no loads");
  const NominalLoadModel& m0 = schedule.at(0);
  const std::size_t T = reference.size(), N = opt.loads;
  const SimplexVector mu0 = opt.initial.empty() ? invariant_pmf(nominal_kernel(m0)) : opt.initial;
  require(mu0.size() == m0.size(), "closed loop: initial distribution dimension");

  std::vector<std::size_t> x(N);
  const std::uint64_t key0 = rng();
  for (std::size_t i = 0; i < N; ++i) {
    Rng prng = Rng::derive(key0, {i});
    x[i] = categorical_sample(prng, mu0);
  }
  ClosedLoopTrace tr;
  const std::size_t rec = std::min(opt.record_loads, N);
  tr.states.assign(rec, {});
  for (std::size_t i = 0; i < rec; ++i) tr.states[i].push_back(x[i]);

  MeanFieldState twin;
  twin.mu = mu0;
  PiState pi;
  std::vector<double> rowbuf;
  for (std::size_t t = 0; t < T; ++t) {
    const NominalLoadModel& m = schedule.at(t);
    double y = 0.0;
    for (std::size_t i = 0; i < N; ++i) y += m.power(x[i]);
    y /= static_cast<double>(N);
    const double ybar = mean_power(m, twin.mu);
    const double yt = y - ybar;
    const double e = reference[t] - yt;
    const double zeta = pi_step(e, pi, opt.gains);
    tr.r.push_back(reference[t]);
    tr.y.push_back(y);
    tr.ybar.push_back(ybar);
    tr.ytilde.push_back(yt);
    tr.e.push_back(e);
    tr.zeta.push_back(zeta);

    const Table R = controlled_R(m, zeta);
    const std::uint64_t key = rng();
    parallel_for(N, opt.workers, [&](std::size_t i) {
      Rng prng = Rng::derive(key, {i});
      const std::size_t xi = x[i];
      std::size_t u_next;
      if (opt.disagg) {
        const LoadEstimate est = opt.disagg(i, t, xi, prng);
        require(est.u < m.nu, "closed loop: estimated state out of range");
        require(m.nu <= 16, "closed loop: too many controllable states");
        double row[16];
        tilted_row(m, m.index(est.u, m.n_of(xi)), zeta, est.power, row);
        u_next = categorical_sample(prng, std::span<const double>(row, m.nu));
      } else {
        u_next = categorical_sample(prng, R.row(xi));
      }
      const std::size_t n_next = categorical_sample(prng, m.Q0.row(xi));
      x[i] = m.index(u_next, n_next);
    });
    for (std::size_t i = 0; i < rec; ++i) tr.states[i].push_back(x[i]);
    twin = mean_field_step(twin, m, 0.0);
  }
  return tr;
}

double tracking_nrmse(const ClosedLoopTrace& trace, std::size_t transient) {
  require(transient < trace.r.size(), "tracking_nrmse: transient covers the whole trace");
  double num = 0.0, den = 0.0;
  for (std::size_t t = transient; t < trace.r.size(); ++t) {
    num += (trace.r[t] - trace.ytilde[t]) * (trace.r[t] - trace.ytilde[t]);
    den += trace.r[t] * trace.r[t];
  }
  require(den > 0.0, "tracking_nrmse: zero reference");
  return std::sqrt(num / den);
}

}  // namespace flexload::dispatch
