#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "flexload/numerics.hpp"
#include "flexload/rng.hpp"
#include "flexload/simplex.hpp"

namespace flexload::dispatch {

// Full state x = u * |Xn| + n.
struct NominalLoadModel {
  std::size_t nu = 0;
  std::size_t nn = 0;
  Table R0;               // |X| x |Xu|
  Table Q0;               // |X| x |Xn|
  std::vector<double> U;  // watts per controllable state

  std::size_t size() const { return nu * nn; }
  std::size_t index(std::size_t u, std::size_t n) const { return u * nn + n; }
  std::size_t u_of(std::size_t x) const { return x / nn; }
  std::size_t n_of(std::size_t x) const { return x % nn; }
  double power(std::size_t x) const { return U[u_of(x)]; }
  void validate() const;
};

// Tilted controllable kernel R_zeta, |X| x |Xu|. Power values in `power`
// replace the model's U in the tilt when non-empty.
Table controlled_R(const NominalLoadModel& m, double zeta, std::span<const double> power = {});
Eigen::MatrixXd controlled_kernel(const NominalLoadModel& m, double zeta);
inline Eigen::MatrixXd nominal_kernel(const NominalLoadModel& m) { return controlled_kernel(m, 0.0); }
// dP_zeta / dzeta in closed form.
Eigen::MatrixXd kernel_derivative(const NominalLoadModel& m, double zeta);

// Throws ReducibleChainError when P is not irreducible.
SimplexVector invariant_pmf(const Eigen::MatrixXd& P);
bool is_irreducible(const Eigen::MatrixXd& P);

struct MeanFieldState {
  SimplexVector mu;
  double y = 0.0;
  double zeta = 0.0;
  double pi_integrator = 0.0;
};

double mean_power(const NominalLoadModel& m, const SimplexVector& mu);
MeanFieldState mean_field_step(const MeanFieldState& s, const NominalLoadModel& m, double zeta);

// G(z) = C (zI - A)^{-1} B with A = P^T. The simple eigenvalue 1 of A is
// deflated, which leaves G unchanged because 1^T B = 0. Throws PoleError
// when z is a pole.
std::complex<double> transfer_function(const NominalLoadModel& m, double zeta, std::complex<double> z);

inline constexpr double kNegInfDb = -std::numeric_limits<double>::infinity();

struct BodePoint {
  double w = 0.0;  // rad/sample
  double magnitude_db = 0.0;
  double phase_deg = 0.0;
};

// Evaluated at z = e^{iw}. Phase is unwrapped along the list.
std::vector<BodePoint> bode_points(const NominalLoadModel& m, double zeta, std::span<const double> freqs);
std::vector<BodePoint> bode_from_response(std::span<const double> freqs,
                                          const std::function<std::complex<double>(std::complex<double>)>& G);
std::vector<double> log_frequencies(double w_min, double w_max, std::size_t n);

struct PiGains {
  double kp = 0.0;
  double ki = 0.0;
};

struct PiState {
  double integrator = 0.0;
};

// zeta_t = K_P e_t + K_I sum_{l<=t} e_l.
double pi_step(double e, PiState& s, const PiGains& g);

struct PiDesign {
  PiGains gains;
  double flat_magnitude = 0.0;  // linear |G| over the flat band
  double flat_magnitude_db = 0.0;
  double flat_lo = 0.0, flat_hi = 0.0;  // rad/sample
  double cutoff = 0.0;                  // rad/sample
};

// Flat band: longest run (in log frequency) whose magnitude spread is under
// 1 dB. Cutoff: first frequency where the phase reaches -45 degrees, or the
// last frequency when it never does. K_P = m / 20, K_I = (w_c / 5) K_P with
// w_c in rad/sample.
PiDesign fit_pi_gains(std::span<const BodePoint> bode);

// K(z) = K_P + K_I z / (z - 1).
std::complex<double> pi_transfer(const PiGains& g, std::complex<double> z);
std::complex<double> closed_loop_transfer(const NominalLoadModel& m, double zeta, const PiGains& g,
                                          std::complex<double> z);

// Spectral radius of the linearized plant in feedback with the PI controller;
// below one means the loop is stable.
double closed_loop_spectral_radius(const NominalLoadModel& m, double zeta, const PiGains& g);

struct TclConfig {
  std::vector<double> ambient = {32.0};  // degC per minute; a single value is constant
  double time_constant = 100.0;          // minutes
  double cooling_rate = 0.22;            // degC per minute when ON
  double theta_lo = 21.0, theta_hi = 23.0;
  double grid = 0.25;    // degC
  double margin = 2.0;   // degC of grid beyond the deadband
  double power_on = 1000.0;  // watts
  double switching_noise = 0.01;

  void validate() const;
  double ambient_at(std::size_t t) const { return ambient.size() == 1 ? ambient[0] : ambient.at(t); }
  std::size_t grid_size() const;
  double temperature(std::size_t n) const { return theta_lo - margin + grid * static_cast<double>(n); }
};

// Xu = {OFF, ON}; Xn = temperature grid.
NominalLoadModel tcl_nominal_model(const TclConfig& cfg, double ambient);

// Per-step nominal models.
struct ModelSchedule {
  std::vector<NominalLoadModel> models;
  std::vector<std::size_t> step_model;  // empty: models[0] every step

  const NominalLoadModel& at(std::size_t t) const;
  std::size_t horizon() const;  // SIZE_MAX when unbounded
};

ModelSchedule tcl_schedule(const TclConfig& cfg, std::size_t steps);

struct LoadEstimate {
  std::size_t u = 0;
  std::vector<double> power;  // estimated power per controllable state
};

// Called per load and step with the true state; returns the local estimate
// used for the control decision.
using DisaggHook = std::function<LoadEstimate(std::size_t load, std::size_t t, std::size_t x, Rng& rng)>;

struct ClosedLoopOptions {
  std::size_t loads = 10000;
  PiGains gains;
  DisaggHook disagg;
  std::size_t record_loads = 0;  // per-load state traces kept for the first loads
  std::size_t workers = 1;
  SimplexVector initial;  // empty: invariant pmf of the first nominal model
};

struct ClosedLoopTrace {
  std::vector<double> r, y, ybar, ytilde, zeta, e;
  std::vector<std::vector<std::size_t>> states;  // [load][t], length T + 1
};

// Powers are means per load.
ClosedLoopTrace closed_loop_simulate(const ModelSchedule& schedule, std::span<const double> reference,
                                     const ClosedLoopOptions& opt, Rng& rng);

// RMS of r - ytilde over RMS of r, from step `transient` on.
double tracking_nrmse(const ClosedLoopTrace& trace, std::size_t transient);

}  // namespace flexload::dispatch
