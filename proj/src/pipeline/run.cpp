#include "flexload/pipeline/run.hpp"

#include <algorithm>
#include <spdlog/spdlog.h>

#include "flexload/errors.hpp"
#include "flexload/pipeline/bundle.hpp"
#include "flexload/pipeline/control.hpp"
#include "flexload/pipeline/disagg.hpp"
#include "flexload/pipeline/io.hpp"
#include "flexload/pipeline/plot.hpp"
#include "flexload/pipeline/synth.hpp"
#include "flexload/pipeline/train.hpp"
#include "flexload/pipeline/usage.hpp"

namespace flexload::pipeline {

namespace {

// key,value summary lines.
class Summary {
 public:
  void add(const std::string& key, double v) { text_ += key + "," + format_number(v) + "\n"; }
  void add(const std::string& key, const std::string& v) { text_ += key + "," + v + "\n"; }
  std::string str() const { return "key,value\n" + text_; }

 private:
  std::string text_;
};

HyperParamBundle need_bundle(const RunConfig& cfg) {
  if (cfg.bundle.empty()) throw SchemaError("config: 'bundle' is required for this subcommand");
  auto b = load_bundle(cfg.bundle);
  if (!cfg.devices.empty()) {
    HyperParamBundle sel;
    for (const auto& n : cfg.devices) sel.devices.push_back(b.device(n));
    b = std::move(sel);
  }
  return b;
}

std::vector<Dataset> need_corpus(const RunConfig& cfg) {
  if (cfg.corpus.empty()) throw SchemaError("config: 'corpus' is required for this subcommand");
  std::vector<Dataset> out;
  for (const auto& p : cfg.corpus) out.push_back(load_trace(p));
  return out;
}

std::uint64_t stream_id(const std::string& name) {
  return static_cast<std::uint64_t>(std::find(kSubcommands.begin(), kSubcommands.end(), name) - kSubcommands.begin());
}

}  // namespace

std::vector<std::filesystem::path> run_subcommand(const std::string& name, const RunConfig& cfg) {
  if (std::find(kSubcommands.begin(), kSubcommands.end(), name) == kSubcommands.end())
    throw InvalidParameter("unknown subcommand '" + name + "'");
  cfg.validate();
  std::vector<std::filesystem::path> files;
  const auto out = [&](const std::string& f) {
    files.push_back(cfg.out / f);
    return files.back();
  };
  const std::uint64_t sid = stream_id(name);
  spdlog::info("{}: seed {}, output {}", name, cfg.seed, cfg.out.string());

  if (name == "synth") {
    const auto bundle = need_bundle(cfg);
    Summary sum;
    for (std::size_t h = 0; h < cfg.synth.houses; ++h) {
      Rng rng = Rng::derive(cfg.seed, {sid, h});
      const auto house = synth_generate(bundle, cfg.synth.T, cfg.synth.noise_var, parse_timestamp(cfg.synth.start), rng);
      write_trace(out("house_" + std::to_string(h) + ".csv"), house.data);
      for (std::size_t k = 0; k < bundle.devices.size(); ++k) {
        const auto& tr = house.truth[k];
        const std::string p = "house_" + std::to_string(h) + "." + bundle.devices[k].name;
        std::vector<double> occ(tr.theta.size(), 0.0);
        for (int s : tr.states) occ[static_cast<std::size_t>(s)] += 1.0 / static_cast<double>(tr.states.size());
        for (std::size_t j = 0; j < tr.theta.size(); ++j) {
          sum.add(p + ".theta_" + std::to_string(j), tr.theta[j]);
          sum.add(p + ".duration_mean_" + std::to_string(j), tr.duration_mean[j]);
          sum.add(p + ".occupancy_" + std::to_string(j), occ[j]);
        }
      }
    }
    atomic_write(out("synth_summary.csv"), sum.str());
  } else if (name == "usage") {
    emit_plot_data(out("usage.csv"), device_usage_report(need_corpus(cfg)));
  } else if (name == "train") {
    Rng rng = Rng::derive(cfg.seed, {sid});
    const auto res = train_hyperparams(need_corpus(cfg), cfg, rng);
    save_bundle(out("bundle.json"), res.bundle);
  } else if (name == "disagg") {
    if (cfg.trace.empty()) throw SchemaError("config: 'trace' is required for disagg");
    const auto bundle = need_bundle(cfg);
    Rng rng = Rng::derive(cfg.seed, {sid});
    const auto res = disaggregate(load_trace(cfg.trace), bundle, cfg, rng);
    emit_plot_data(out("disagg.csv"), res);
    Summary sum;
    sum.add("steps", static_cast<double>(res.steps.size()));
    for (const auto& m : res.metrics) {
      sum.add(m.device + ".rmse", m.rmse);
      sum.add(m.device + ".state_accuracy", m.state_accuracy);
    }
    atomic_write(out("disagg_summary.csv"), sum.str());
  } else if (name == "control") {
    std::optional<HyperParamBundle> bundle;
    if (!cfg.bundle.empty()) bundle = need_bundle(cfg);
    Rng rng = Rng::derive(cfg.seed, {sid});
    const auto res = simulate_control(cfg, bundle ? &*bundle : nullptr, rng);
    emit_plot_data(out("trace.csv"), res.trace);
    emit_plot_data(out("bode.csv"), res.bode);
    Summary sum;
    sum.add("disagg", cfg.control.disagg);
    sum.add("kp", res.gains.kp);
    sum.add("ki", res.gains.ki);
    sum.add("recipe_kp", res.design.gains.kp);
    sum.add("recipe_ki", res.design.gains.ki);
    sum.add("flat_magnitude", res.design.flat_magnitude);
    sum.add("flat_lo", res.design.flat_lo);
    sum.add("flat_hi", res.design.flat_hi);
    sum.add("cutoff", res.design.cutoff);
    sum.add("nominal_power", res.nominal_power);
    sum.add("spectral_radius", res.spectral_radius);
    sum.add("rms_error", res.rms_error);
    sum.add("nrmse", res.nrmse);
    atomic_write(out("control_summary.csv"), sum.str());
    spdlog::info("control: nrmse {:.4f}, spectral radius {:.4g}", res.nrmse, res.spectral_radius);
  } else if (name == "bode") {
    const auto bode = tcl_bode(cfg);
    const auto d = dispatch::fit_pi_gains(bode);
    emit_plot_data(out("bode.csv"), bode);
    Summary sum;
    sum.add("flat_magnitude", d.flat_magnitude);
    sum.add("flat_magnitude_db", d.flat_magnitude_db);
    sum.add("flat_lo", d.flat_lo);
    sum.add("flat_hi", d.flat_hi);
    sum.add("cutoff", d.cutoff);
    sum.add("kp", d.gains.kp);
    sum.add("ki", d.gains.ki);
    atomic_write(out("bode_summary.csv"), sum.str());
  }
  for (const auto& f : files) spdlog::info("wrote {}", f.string());
  return files;
}

}  // namespace flexload::pipeline
