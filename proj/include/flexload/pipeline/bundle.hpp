#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "flexload/conjugate.hpp"
#include "flexload/duration.hpp"
#include "flexload/hdp.hpp"
#include "flexload/smc.hpp"

namespace flexload::pipeline {

// Per-device prior: an emission mixture with one component per power mode,
// aligned duration hyperparameters, transition Dirichlet weights and the
// fixed emission variance.
struct DeviceHyper {
  std::string name;
  std::vector<double> weights;                 // p_m
  std::vector<NormalPrior> components;         // (mu_m, tau_m^2)
  std::vector<double> duration_weights;        // varpi_m
  std::vector<DurationHyper> duration_components;
  std::vector<double> alpha;
  double sigma2 = 1.0;
  int r = 2;
  NegBinForm form = NegBinForm::Standard;
  std::vector<double> mean_spread;  // across-house std of mu_m; empty when unknown
  std::size_t houses = 0;

  std::size_t num_states() const { return components.size(); }
  void validate() const;
};

struct HyperParamBundle {
  std::vector<DeviceHyper> devices;

  const DeviceHyper& device(const std::string& name) const;
  void validate() const;
};

// Components in stored order become filter states.
smc::ChainPrior chain_prior(const DeviceHyper& d);
hdp::EmissionMixturePrior emission_mixture_prior(const DeviceHyper& d);

std::string format_bundle(const HyperParamBundle& b);
HyperParamBundle parse_bundle(const std::string& text);
HyperParamBundle load_bundle(const std::filesystem::path& path);
void save_bundle(const std::filesystem::path& path, const HyperParamBundle& b);

}  // namespace flexload::pipeline
