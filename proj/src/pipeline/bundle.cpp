#include "flexload/pipeline/bundle.hpp"

#include <cmath>
#include <cstdio>

#include "flexload/errors.hpp"
#include "flexload/pipeline/io.hpp"
#include "json_util.hpp"

namespace flexload::pipeline {

namespace detail {

json parse_json(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(where + ": " + e.what());
  }
}

double round9(double x) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8e", x);
  return std::strtod(buf, nullptr);
}

}  // namespace detail

using detail::json;

namespace {

void check_simplex(const std::vector<double>& w, const std::string& what) {
  require(!w.empty(), what + ": empty weights");
  double s = 0.0;
  for (double v : w) {
    require(std::isfinite(v) && v >= 0.0, what + ": weights must be non-negative");
    s += v;
  }
  require(std::abs(s - 1.0) < 1e-6, what + ": weights must sum to one");
}

json to_json(const DurationHyper& h) {
  using detail::round9;
  return {{"phi", {{"a", round9(h.phi.a)}, {"b", round9(h.phi.b)}}},
          {"lambda", {{"shape", round9(h.lambda.shape)}, {"rate", round9(h.lambda.rate)}}},
          {"varphi", {{"a", round9(h.varphi.a)}, {"b", round9(h.varphi.b)}}},
          {"r", h.r}};
}

BetaHyper beta_from(const json& j, const std::string& w) {
  detail::check_object(j, w, {"a", "b"});
  return {detail::as<double>(detail::need(j, "a", w), w + ".a"), detail::as<double>(detail::need(j, "b", w), w + ".b")};
}

DurationHyper duration_from(const json& j, const std::string& w) {
  detail::check_object(j, w, {"phi", "lambda", "varphi", "r"});
  DurationHyper h;
  h.phi = beta_from(detail::need(j, "phi", w), w + ".phi");
  const auto& l = detail::need(j, "lambda", w);
  detail::check_object(l, w + ".lambda", {"shape", "rate"});
  h.lambda = {detail::as<double>(detail::need(l, "shape", w), w + ".lambda.shape"),
              detail::as<double>(detail::need(l, "rate", w), w + ".lambda.rate")};
  h.varphi = beta_from(detail::need(j, "varphi", w), w + ".varphi");
  h.r = detail::as<int>(detail::need(j, "r", w), w + ".r");
  return h;
}

std::vector<double> numbers(const json& j, const std::string& w) {
  if (!j.is_array()) throw SchemaError(w + ": expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(detail::as<double>(j[i], w + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<double> rounded(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) out.push_back(detail::round9(x));
  return out;
}

}  // namespace

void DeviceHyper::validate() const {
  require(!name.empty(), "bundle: device without a name");
  const std::string w = "bundle device '" + name + "'";
  const std::size_t M = components.size();
  require(M >= 1, w + ": no emission components");
  require(weights.size() == M && duration_weights.size() == M && duration_components.size() == M && alpha.size() == M,
          w + ": component lists must have equal lengths");
  check_simplex(weights, w + " weights");
  check_simplex(duration_weights, w + " duration_weights");
  for (const auto& c : components)
    require(std::isfinite(c.mean) && c.var > 0.0 && std::isfinite(c.var), w + ": invalid emission component");
  for (const auto& h : duration_components) {
    h.validate();
    require(h.r == r, w + ": duration components must share r");
  }
  for (double a : alpha) require(a > 0.0 && std::isfinite(a), w + ": alpha must be positive");
  require(sigma2 > 0.0 && std::isfinite(sigma2), w + ": sigma2 must be positive");
  require(r >= 1, w + ": r must be >= 1");
  require(mean_spread.empty() || mean_spread.size() == M, w + ": mean_spread length");
}

const DeviceHyper& HyperParamBundle::device(const std::string& name) const {
  for (const auto& d : devices)
    if (d.name == name) return d;
  throw InvalidParameter("bundle: no device named '" + name + "'");
}

void HyperParamBundle::validate() const {
  require(!devices.empty(), "bundle: no devices");
  for (std::size_t i = 0; i < devices.size(); ++i) {
    devices[i].validate();
    for (std::size_t k = 0; k < i; ++k) require(devices[k].name != devices[i].name, "bundle: duplicate device name");
  }
}

smc::ChainPrior chain_prior(const DeviceHyper& d) {
  d.validate();
  smc::ChainPrior c;
  c.alpha = d.alpha;
  c.emission = d.components;
  c.sigma2 = d.sigma2;
  return c;
}

hdp::EmissionMixturePrior emission_mixture_prior(const DeviceHyper& d) {
  d.validate();
  hdp::EmissionMixturePrior p;
  p.weights = SimplexVector::normalize(d.weights);
  p.components = d.components;
  p.duration_weights = SimplexVector::normalize(d.duration_weights);
  p.duration_components = d.duration_components;
  return p;
}

std::string format_bundle(const HyperParamBundle& b) {
  b.validate();
  json devs = json::array();
  for (const auto& d : b.devices) {
    json comps = json::array(), durs = json::array();
    for (const auto& c : d.components) comps.push_back({{"mean", detail::round9(c.mean)}, {"var", detail::round9(c.var)}});
    for (const auto& h : d.duration_components) durs.push_back(to_json(h));
    json j = {{"name", d.name},
              {"weights", rounded(d.weights)},
              {"components", comps},
              {"duration_weights", rounded(d.duration_weights)},
              {"duration_components", durs},
              {"alpha", rounded(d.alpha)},
              {"sigma2", detail::round9(d.sigma2)},
              {"r", d.r},
              {"negbin_form", d.form == NegBinForm::Standard ? "standard" : "verbatim"},
              {"houses", d.houses}};
    if (!d.mean_spread.empty()) j["mean_spread"] = rounded(d.mean_spread);
    devs.push_back(j);
  }
  return json{{"devices", devs}}.dump(2) + "\n";
}

HyperParamBundle parse_bundle(const std::string& text) {
  const json root = detail::parse_json(text, "bundle");
  detail::check_object(root, "bundle", {"devices"});
  const json& devs = detail::need(root, "devices", "bundle");
  if (!devs.is_array()) throw SchemaError("bundle.devices: expected an array");
  HyperParamBundle b;
  for (std::size_t i = 0; i < devs.size(); ++i) {
    const std::string w = "bundle.devices[" + std::to_string(i) + "]";
    const json& j = devs[i];
    detail::check_object(j, w,
                         {"name", "weights", "components", "duration_weights", "duration_components", "alpha", "sigma2",
                          "r", "negbin_form", "houses", "mean_spread"});
    DeviceHyper d;
    d.name = detail::as<std::string>(detail::need(j, "name", w), w + ".name");
    d.weights = numbers(detail::need(j, "weights", w), w + ".weights");
    const json& comps = detail::need(j, "components", w);
    if (!comps.is_array()) throw SchemaError(w + ".components: expected an array");
    for (std::size_t k = 0; k < comps.size(); ++k) {
      const std::string cw = w + ".components[" + std::to_string(k) + "]";
      detail::check_object(comps[k], cw, {"mean", "var"});
      d.components.push_back({detail::as<double>(detail::need(comps[k], "mean", cw), cw + ".mean"),
                              detail::as<double>(detail::need(comps[k], "var", cw), cw + ".var")});
    }
    d.duration_weights = numbers(detail::need(j, "duration_weights", w), w + ".duration_weights");
    const json& durs = detail::need(j, "duration_components", w);
    if (!durs.is_array()) throw SchemaError(w + ".duration_components: expected an array");
    for (std::size_t k = 0; k < durs.size(); ++k)
      d.duration_components.push_back(duration_from(durs[k], w + ".duration_components[" + std::to_string(k) + "]"));
    d.alpha = numbers(detail::need(j, "alpha", w), w + ".alpha");
    d.sigma2 = detail::as<double>(detail::need(j, "sigma2", w), w + ".sigma2");
    d.r = detail::as<int>(detail::need(j, "r", w), w + ".r");
    std::string form = "standard";
    detail::opt(j, "negbin_form", form, w);
    if (form == "standard")
      d.form = NegBinForm::Standard;
    else if (form == "verbatim")
      d.form = NegBinForm::Verbatim;
    else
      throw SchemaError(w + ".negbin_form: expected 'standard' or 'verbatim'");
    detail::opt(j, "houses", d.houses, w);
    if (j.contains("mean_spread")) d.mean_spread = numbers(j.at("mean_spread"), w + ".mean_spread");
    b.devices.push_back(std::move(d));
  }
  try {
    b.validate();
  } catch (const InvalidParameter& e) {
    throw SchemaError(e.what());
  }
  return b;
}

HyperParamBundle load_bundle(const std::filesystem::path& path) { return parse_bundle(read_file(path)); }

void save_bundle(const std::filesystem::path& path, const HyperParamBundle& b) { atomic_write(path, format_bundle(b)); }

}  // namespace flexload::pipeline
