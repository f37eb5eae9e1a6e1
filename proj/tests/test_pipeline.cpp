#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "flexload/distributions.hpp"
#include "flexload/errors.hpp"
#include "flexload/pipeline/bundle.hpp"
#include "flexload/pipeline/config.hpp"
#include "flexload/pipeline/control.hpp"
#include "flexload/pipeline/disagg.hpp"
#include "flexload/pipeline/io.hpp"
#include "flexload/pipeline/plot.hpp"
#include "flexload/pipeline/run.hpp"
#include "flexload/pipeline/synth.hpp"
#include "flexload/pipeline/trace.hpp"
#include "flexload/pipeline/train.hpp"
#include "flexload/pipeline/usage.hpp"
#include "pipeline_support.hpp"
#include "support.hpp"

using namespace flexload;
using namespace flexload::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("flexload_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Dataset single_session(std::vector<std::string> names, std::vector<std::vector<double>> cols,
                       std::vector<double> total, std::int64_t start = 0) {
  Dataset d;
  d.devices = std::move(names);
  Session s;
  s.start = start;
  s.device = std::move(cols);
  s.total = std::move(total);
  d.sessions.push_back(std::move(s));
  return d;
}

HyperParamBundle two_device_bundle() {
  HyperParamBundle b;
  b.devices = {testing_support::two_mode_device("air_compressor", 4000.0, 40.0, 25.0, 100.0),
               testing_support::two_mode_device("furnace", 450.0, 60.0, 20.0)};
  return b;
}

RunConfig small_train_config() {
  RunConfig cfg;
  cfg.weak_limit = 6;
  cfg.train.sweeps = 10;
  cfg.train.burn_in = 2;
  cfg.train.max_duration = 200;
  return cfg;
}

}  // namespace

TEST_CASE("number formatting") {
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(1.0) == "1.00000000");
  CHECK(format_number(-2.5) == "-2.50000000");
  CHECK(format_number(1234.5) == "1234.50000");
  CHECK(format_number(0.000123456789) == "0.000123456789");
  CHECK(format_number(123456789012.0) == "123456789000");
  CHECK(format_number(2.0 / 3.0) == "0.666666667");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(-INFINITY) == "-inf");
  for (double x : {3.25, -1e-7, 987654321.0, 1.0 / 7.0})
    CHECK(parse_number(format_number(x)) == doctest::Approx(x).epsilon(1e-8));
  CHECK_THROWS_AS(parse_number("12x"), SchemaError);
  CHECK_THROWS_AS(parse_number(""), SchemaError);
}

TEST_CASE("timestamps") {
  CHECK(parse_timestamp("1970-01-01T00:00") == 0);
  CHECK(parse_timestamp("1970-01-02T01:05") == 1440 + 65);
  for (std::int64_t m : {0LL, 23668320LL, 23668320LL + 1439, -5LL})
    CHECK(parse_timestamp(format_timestamp(m)) == m);
  CHECK(format_timestamp(parse_timestamp("2016-02-29T23:59")) == "2016-02-29T23:59");
  CHECK_THROWS_AS(parse_timestamp("2015-02-29T00:00"), SchemaError);
  CHECK_THROWS_AS(parse_timestamp("2015-01-01 00:00"), SchemaError);
  CHECK_THROWS_AS(parse_timestamp("2015-01-01T24:00"), SchemaError);
}

TEST_CASE("trace loading") {
  const std::string head = "timestamp,fridge,total\n";
  SUBCASE("empty file") {
    CHECK_THROWS_AS(parse_trace(""), SchemaError);
    CHECK_THROWS_AS(parse_trace(head), SchemaError);
  }
  SUBCASE("single row") {
    const auto d = parse_trace(head + "2015-01-01T00:00,100,150\n");
    REQUIRE(d.sessions.size() == 1);
    CHECK(d.devices == std::vector<std::string>{"fridge"});
    CHECK(d.sessions[0].size() == 1);
    CHECK(d.sessions[0].device[0][0] == 100.0);
    CHECK(d.sessions[0].total[0] == 150.0);
  }
  SUBCASE("negatives are clamped") {
    const auto d = parse_trace(head + "2015-01-01T00:00,-3,-0.5\n");
    CHECK(d.sessions[0].device[0][0] == 0.0);
    CHECK(d.sessions[0].total[0] == 0.0);
  }
  SUBCASE("short gaps are filled, long gaps split") {
    const auto d = parse_trace(head +
                               "2015-01-01T00:00,1,2\n"
                               "2015-01-01T00:06,3,4\n"    // 5 missing minutes
                               "2015-01-01T00:13,5,6\n");  // 6 missing minutes
    REQUIRE(d.sessions.size() == 2);
    CHECK(d.sessions[0].size() == 7);
    CHECK(d.sessions[0].device[0][5] == 1.0);
    CHECK(d.sessions[0].device[0][6] == 3.0);
    CHECK(d.sessions[1].start == parse_timestamp("2015-01-01T00:13"));
    CHECK(d.samples() == 8);
  }
  SUBCASE("missing cells") {
    const auto d = parse_trace(head +
                               "2015-01-01T00:00,,2\n"
                               "2015-01-01T00:01,7,\n"
                               "2015-01-01T00:02,,9\n");
    CHECK(d.sessions[0].device[0] == std::vector<double>{7.0, 7.0, 7.0});
    CHECK(d.sessions[0].total == std::vector<double>{2.0, 2.0, 9.0});
  }
  SUBCASE("schema violations") {
    CHECK_THROWS_AS(parse_trace(head + "2015-01-01T00:01,1,2\n2015-01-01T00:00,1,2\n"), SchemaError);
    CHECK_THROWS_AS(parse_trace(head + "2015-01-01T00:01,1,2\n2015-01-01T00:01,1,2\n"), SchemaError);
    CHECK_THROWS_AS(parse_trace("timestamp,fridge\n2015-01-01T00:00,1\n"), SchemaError);
    CHECK_THROWS_AS(parse_trace("fridge,total\n1,2\n"), SchemaError);
    CHECK_THROWS_AS(parse_trace(head + "2015-01-01T00:00,1\n"), SchemaError);
    CHECK_THROWS_AS(parse_trace(head + "2015-01-01T00:00,abc,2\n"), SchemaError);
    CHECK_THROWS_AS(parse_trace("timestamp,a,a,total\n2015-01-01T00:00,1,1,2\n"), SchemaError);
  }
  SUBCASE("write then read is the identity") {
    Rng rng(2);
    const auto bundle = two_device_bundle();
    auto house = synth_generate(bundle, 500, 25.0, parse_timestamp("2015-06-01T00:00"), rng).data;
    for (auto& s : house.sessions) {
      for (auto& c : s.device)
        for (double& v : c) v = std::round(v * 8.0) / 8.0;
      for (double& v : s.total) v = std::round(v * 8.0) / 8.0;
    }
    const auto dir = scratch_dir("roundtrip");
    write_trace(dir / "h.csv", house);
    const auto back = load_trace(dir / "h.csv");
    CHECK(back.devices == house.devices);
    REQUIRE(back.sessions.size() == 1);
    CHECK(back.sessions[0].start == house.sessions[0].start);
    CHECK(back.sessions[0].device == house.sessions[0].device);
    CHECK(back.sessions[0].total == house.sessions[0].total);
    CHECK(format_trace(back) == read_file(dir / "h.csv"));
  }
}

TEST_CASE("bundle serialization") {
  const auto b = testing_support::four_device_bundle();
  const auto text = format_bundle(b);
  const auto back = parse_bundle(text);
  REQUIRE(back.devices.size() == 4);
  CHECK(back.devices[0].name == "air_compressor");
  CHECK(back.devices[0].components[1].mean == 4000.0);
  CHECK(back.devices[1].duration_components[0].lambda.rate == doctest::Approx(400.0 / 60.0).epsilon(1e-8));
  CHECK(format_bundle(back) == text);

  auto bad = b;
  bad.devices[0].weights = {0.4, 0.4};
  CHECK_THROWS_AS(format_bundle(bad), InvalidParameter);
  CHECK_THROWS_AS(parse_bundle(R"({"devices": [], "extra": 1})"), SchemaError);
  std::string typo = text;
  typo.replace(typo.find("\"sigma2\""), 8, "\"sigma_2\"");
  CHECK_THROWS_AS(parse_bundle(typo), SchemaError);
  CHECK_THROWS_AS(parse_bundle("{not json"), SchemaError);
}

TEST_CASE("run configuration") {
  SUBCASE("defaults") {
    const auto c = parse_config("{}");
    CHECK(c.seed == 1);
    CHECK(c.particles == 1000);
    CHECK(c.states_for("anything") == 2);
    CHECK_FALSE(c.control.gains.has_value());
    CHECK(c.control.tcl.ambient == std::vector<double>{32.0});
  }
  SUBCASE("values and relative paths") {
    const auto c = parse_config(R"({
      "seed": 42, "particles": 250, "states": {"furnace": 3}, "bundle": "b.json",
      "corpus": ["h0.csv", "/abs/h1.csv"],
      "control": {"gains": {"kp": 0.5, "ki": 0.01}, "tcl": {"ambient": [30, 31]}}
    })",
                                "/base");
    CHECK(c.seed == 42);
    CHECK(c.particles == 250);
    CHECK(c.states_for("furnace") == 3);
    CHECK(c.bundle == fs::path("/base/b.json"));
    CHECK(c.corpus[1] == fs::path("/abs/h1.csv"));
    REQUIRE(c.control.gains.has_value());
    CHECK(c.control.gains->kp == 0.5);
    CHECK(c.control.tcl.ambient.size() == 2);
    CHECK_FALSE(parse_config(R"({"control": {"gains": "auto"}})").control.gains.has_value());
  }
  SUBCASE("unknown keys and bad values are errors") {
    CHECK_THROWS_AS(parse_config(R"({"sede": 1})"), SchemaError);
    CHECK_THROWS_AS(parse_config(R"({"control": {"tcl": {"thetalo": 20}}})"), SchemaError);
    CHECK_THROWS_AS(parse_config(R"({"particles": -3})"), SchemaError);
    CHECK_THROWS_AS(parse_config(R"({"particles": 0})"), SchemaError);
    CHECK_THROWS_AS(parse_config(R"({"seed": "one"})"), SchemaError);
    CHECK_THROWS_AS(parse_config(R"({"control": {"disagg": "magic"}})"), SchemaError);
    CHECK_THROWS_AS(parse_config(R"({"control": {"gains": "manual"}})"), SchemaError);
  }
}

TEST_CASE("synthetic generation") {
  SUBCASE("single device: total is device plus noise") {
    HyperParamBundle b;
    b.devices = {testing_support::two_mode_device("heater", 1500.0, 30.0, 30.0)};
    Rng rng(4);
    const auto h = synth_generate(b, 20000, 25.0, 0, rng);
    const auto& s = h.data.sessions[0];
    std::vector<double> diff;
    for (std::size_t t = 0; t < s.size(); ++t)
      if (s.device[0][t] > 100.0) diff.push_back(s.total[t] - s.device[0][t]);
    const auto m = testing_support::moments(diff);
    CHECK(std::abs(m.mean) < 4.0 * m.mean_se);
    CHECK(m.var == doctest::Approx(25.0).epsilon(0.05));
  }
  SUBCASE("zero noise: total is the exact sum") {
    Rng rng(5);
    const auto h = synth_generate(testing_support::four_device_bundle(), 2000, 0.0, 0, rng);
    const auto& s = h.data.sessions[0];
    for (std::size_t t = 0; t < s.size(); ++t) {
      double sum = 0.0;
      for (const auto& c : s.device) sum += c[t];
      CHECK(s.total[t] == sum);
    }
  }
  SUBCASE("duty cycles follow the drawn duration means") {
    Rng rng(6);
    const auto b = testing_support::four_device_bundle();
    const auto h = synth_generate(b, 20000, 25.0, 0, rng);
    for (std::size_t k = 0; k < b.devices.size(); ++k) {
      const auto& tr = h.truth[k];
      double on = 0.0;
      for (int s : tr.states) on += s == 1 ? 1.0 : 0.0;
      on /= static_cast<double>(tr.states.size());
      const double expect = tr.duration_mean[1] / (tr.duration_mean[0] + tr.duration_mean[1]);
      CHECK(on == doctest::Approx(expect).epsilon(0.10));
    }
  }
}

TEST_CASE("device usage report") {
  const std::vector<double> z3 = {0, 0, 0};
  // House 0: a 25%, b 75%; house 1: a 50%, b 50%, c never on; house 2: only a.
  std::vector<Dataset> corpus = {
      single_session({"a", "b"}, {{1, 1, 0}, {1, 1, 4}}, {2, 2, 4}),
      single_session({"a", "b", "c"}, {{2, 0, 2}, {0, 2, 2}, z3}, {2, 2, 4}),
      single_session({"a"}, {{3, 3, 3}}, {3, 3, 3}),
  };
  const auto r = device_usage_report(corpus);
  REQUIRE(r.size() == 3);
  CHECK(r[0].device == "a");
  CHECK(r[0].houses_used == 3);
  CHECK(r[0].shares == std::vector<double>{0.25, 0.5, 1.0});
  CHECK(r[0].median == 0.5);
  CHECK(r[0].q1 == doctest::Approx(0.375));
  CHECK(r[1].device == "b");
  CHECK(r[1].median == doctest::Approx(0.625));
  CHECK(r[2].device == "c");
  CHECK(r[2].houses_present == 1);
  CHECK(r[2].houses_used == 0);
  CHECK(r[2].shares.empty());
}

TEST_CASE("duration mixture EM") {
  Rng rng(7);
  const DurationParams truth{0.3, 5.0, 3, 0.95};
  std::vector<std::int64_t> d;
  for (int i = 0; i < 5000; ++i) {
    if (rng.uniform() < truth.phi) {
      // Poisson by inversion.
      double u = rng.uniform(), p = std::exp(-truth.lambda), c = p;
      std::int64_t k = 0;
      while (u > c) {
        ++k;
        p *= truth.lambda / static_cast<double>(k);
        c += p;
      }
      d.push_back(k);
    } else {
      // Failures before r successes with success probability 1 - varphi.
      std::int64_t k = 0;
      for (int s = 0; s < truth.r;)
        if (rng.uniform() < truth.varphi)
          ++k;
        else
          ++s;
      d.push_back(k);
    }
  }
  const auto fit = fit_duration_mixture(d, truth.r);
  CHECK(std::abs(fit.params.phi - truth.phi) < 0.05);
  CHECK(fit.params.lambda == doctest::Approx(truth.lambda).epsilon(0.1));
  CHECK(fit.params.varphi == doctest::Approx(truth.varphi).epsilon(0.02));
}

TEST_CASE("training helpers") {
  const std::vector<double> x = {0.0, 0.1, 10.0, 10.2, 99.0}, w = {1, 1, 1, 1, 1};
  const auto c = kmeans_1d(x, w, 2);
  CHECK(c[0] == doctest::Approx(5.075));
  CHECK(c[1] == 99.0);
  const auto c3 = kmeans_1d(x, w, 3);
  CHECK(c3[0] == doctest::Approx(0.05));
  CHECK(c3[1] == doctest::Approx(10.1));

  Rng rng(8);
  std::vector<double> y(20000);
  for (std::size_t t = 0; t < y.size(); ++t) y[t] = (t / 500 % 2 ? 1000.0 : 0.0) + normal_sample(rng, 0.0, 36.0);
  CHECK(robust_noise_variance(y) == doctest::Approx(36.0).epsilon(0.05));
  CHECK(robust_noise_variance(std::vector<double>(10, 3.0)) == 1.0);
}

TEST_CASE("hyperparameter training") {
  const auto truth = two_device_bundle();
  Rng rng(9);
  std::vector<Dataset> corpus;
  for (int h = 0; h < 2; ++h) corpus.push_back(synth_generate(truth, 3000, 25.0, 0, rng).data);
  const auto cfg = small_train_config();
  const auto res = train_hyperparams(corpus, cfg, rng);
  REQUIRE(res.bundle.devices.size() == 2);
  CHECK(res.warnings.empty());
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& got = res.bundle.devices[k];
    const double on = truth.devices[k].components[1].mean;
    CHECK(got.name == truth.devices[k].name);
    CHECK(got.components[1].mean == doctest::Approx(on).epsilon(0.05));
    CHECK(std::abs(got.components[0].mean) < 0.05 * on);
    CHECK(got.houses == 2);
  }

  SUBCASE("retraining on data synthesized from the trained bundle") {
    Rng r2(10);
    std::vector<Dataset> again;
    for (int h = 0; h < 2; ++h) again.push_back(synth_generate(res.bundle, 3000, 25.0, 0, r2).data);
    const auto res2 = train_hyperparams(again, cfg, r2);
    for (std::size_t k = 0; k < 2; ++k)
      CHECK(res2.bundle.devices[k].components[1].mean ==
            doctest::Approx(res.bundle.devices[k].components[1].mean).epsilon(0.10));
  }
  SUBCASE("absent devices and single houses warn") {
    auto one = corpus;
    one.resize(1);
    auto c2 = cfg;
    c2.devices = {"air_compressor", "sauna"};
    const auto r = train_hyperparams(one, c2, rng);
    CHECK(r.bundle.devices.size() == 1);
    CHECK(r.warnings.size() == 2);
  }
}

TEST_CASE("disaggregation") {
  SUBCASE("single noiseless device") {
    HyperParamBundle b;
    b.devices = {testing_support::two_mode_device("heater", 1500.0, 30.0, 30.0, 1.0)};
    Rng rng(11);
    const auto h = synth_generate(b, 1000, 0.0, 0, rng);
    RunConfig cfg;
    cfg.particles = 200;
    const auto r = disaggregate(h.data, b, cfg, rng);
    REQUIRE(r.metrics.size() == 1);
    CHECK(r.metrics[0].rmse < 1e-6);
    CHECK(r.metrics[0].state_accuracy == 1.0);
    for (const auto& s : r.steps) CHECK(std::abs(s.residual) < 1e-6);
  }
  SUBCASE("dominant device in a four-device house") {
    const auto b = testing_support::four_device_bundle();
    Rng rng(12);
    const auto h = synth_generate(b, 1500, 25.0, 0, rng);
    RunConfig cfg;
    cfg.particles = 300;
    const auto r = disaggregate(h.data, b, cfg, rng);
    REQUIRE(r.metrics.size() == 4);
    CHECK(r.metrics[0].device == "air_compressor");
    CHECK(r.metrics[0].state_accuracy > 0.85);
  }
  SUBCASE("no ground truth columns") {
    const auto b = testing_support::four_device_bundle();
    Rng rng(13);
    auto h = synth_generate(b, 50, 25.0, 0, rng).data;
    h.devices = {"w", "x", "y", "z"};
    RunConfig cfg;
    cfg.particles = 50;
    const auto r = disaggregate(h, b, cfg, rng);
    CHECK(r.metrics.empty());
    CHECK(r.steps.size() == 50);
    CHECK(r.steps[0].power.size() == 4);
  }
}

TEST_CASE("control driver") {
  RunConfig cfg;
  cfg.control.loads = 200;
  cfg.control.steps = 400;
  cfg.control.transient = 100;
  cfg.control.record_loads = 0;
  cfg.control.bode_points = 100;
  const auto m = dispatch::tcl_nominal_model(cfg.control.tcl, 32.0);
  const double g1 = dispatch::transfer_function(m, 0.0, 1.0).real();
  cfg.control.gains = dispatch::PiGains{0.0, 0.02 / g1};
  cfg.control.period = 200.0;

  SUBCASE("no hook matches the dispatch simulation") {
    Rng a(1), b(1);
    const auto res = simulate_control(cfg, nullptr, a);
    const auto sched = dispatch::tcl_schedule(cfg.control.tcl, cfg.control.steps);
    dispatch::ClosedLoopOptions o;
    o.loads = cfg.control.loads;
    o.gains = *cfg.control.gains;
    const auto ref = sinusoid_reference(cfg.control.steps, cfg.control.amplitude * res.nominal_power, 200.0);
    const auto tr = dispatch::closed_loop_simulate(sched, ref, o, b);
    CHECK(tr.y == res.trace.y);
    CHECK(tr.zeta == res.trace.zeta);
  }
  SUBCASE("zero reference keeps zeta small") {
    auto c = cfg;
    c.control.amplitude = 0.0;
    c.control.loads = 5000;
    Rng rng(2);
    const auto res = simulate_control(c, nullptr, rng);
    CHECK(std::isnan(res.nrmse));
    for (double z : res.trace.zeta) CHECK(std::abs(z) * c.control.tcl.power_on < 1.0);
  }
  SUBCASE("oracle disaggregation bounds the estimated one") {
    const auto bundle = two_device_bundle();
    auto oracle = cfg;
    oracle.control.disagg = "oracle";
    auto est = cfg;
    est.control.disagg = "fbpf";
    est.control.disagg_particles = 30;
    est.control.device = "air_compressor";
    Rng a(3), b(3);
    const auto ro = simulate_control(oracle, &bundle, a);
    const auto re = simulate_control(est, &bundle, b);
    MESSAGE("oracle rms " << ro.rms_error << ", estimated rms " << re.rms_error);
    CHECK(ro.rms_error <= re.rms_error);
  }
}

TEST_CASE("plot data") {
  const auto dir = scratch_dir("plot");
  SUBCASE("empty series give header-only files") {
    emit_plot_data(dir / "bode.csv", std::vector<dispatch::BodePoint>{});
    CHECK(read_file(dir / "bode.csv") == "w,quantity,value\n");
    emit_plot_data(dir / "trace.csv", dispatch::ClosedLoopTrace{});
    CHECK(read_file(dir / "trace.csv") == "t,series,value\n");
    emit_plot_data(dir / "usage.csv", std::vector<DeviceUsage>{});
    CHECK(read_file(dir / "usage.csv") == "rank,device,statistic,value\n");
    emit_plot_data(dir / "disagg.csv", DisaggResult{});
    CHECK(read_file(dir / "disagg.csv") == "t,device,series,value\n");
  }
  SUBCASE("rewrites are idempotent") {
    RunConfig cfg;
    cfg.control.bode_points = 50;
    const auto bode = tcl_bode(cfg);
    emit_plot_data(dir / "b.csv", bode);
    const auto first = read_file(dir / "b.csv");
    emit_plot_data(dir / "b.csv", bode);
    CHECK(read_file(dir / "b.csv") == first);
    CHECK_FALSE(fs::exists(dir / "b.csv.tmp"));
  }
  SUBCASE("bode file round-trips through re-evaluation") {
    RunConfig cfg;
    cfg.control.bode_points = 60;
    emit_plot_data(dir / "b.csv", tcl_bode(cfg));
    const auto loaded = parse_bode_csv(read_file(dir / "b.csv"));
    REQUIRE(loaded.size() == 60);
    const auto m = dispatch::tcl_nominal_model(cfg.control.tcl, 32.0);
    std::vector<double> w;
    for (const auto& b : loaded) w.push_back(b.w);
    const auto again = dispatch::bode_points(m, 0.0, w);
    for (std::size_t i = 0; i < loaded.size(); ++i) {
      CHECK(loaded[i].magnitude_db == doctest::Approx(again[i].magnitude_db).epsilon(1e-7));
      CHECK(loaded[i].phase_deg == doctest::Approx(again[i].phase_deg).epsilon(1e-7).scale(1e-6));
    }
  }
}

TEST_CASE("subcommands are reproducible") {
  const auto dir = scratch_dir("runs");
  save_bundle(dir / "bundle.json", testing_support::four_device_bundle());
  auto cfg = parse_config(R"({"seed": 17, "particles": 50, "bundle": "bundle.json",
                             "synth": {"T": 300, "houses": 2},
                             "control": {"loads": 100, "steps": 120, "transient": 20, "bode_points": 40}})",
                          dir);
  for (const std::string sub : {"synth", "control", "bode"}) {
    cfg.out = dir / "a";
    const auto fa = run_subcommand(sub, cfg);
    cfg.out = dir / "b";
    const auto fb = run_subcommand(sub, cfg);
    REQUIRE(fa.size() == fb.size());
    for (std::size_t i = 0; i < fa.size(); ++i) {
      CHECK(fa[i].filename() == fb[i].filename());
      CHECK(fnv1a(read_file(fa[i])) == fnv1a(read_file(fb[i])));
    }
  }
  cfg.trace = dir / "a" / "house_0.csv";
  cfg.corpus = {dir / "a" / "house_0.csv", dir / "a" / "house_1.csv"};
  for (const std::string sub : {"disagg", "usage"}) {
    cfg.out = dir / "a";
    const auto fa = run_subcommand(sub, cfg);
    cfg.out = dir / "b";
    const auto fb = run_subcommand(sub, cfg);
    for (std::size_t i = 0; i < fa.size(); ++i) CHECK(read_file(fa[i]) == read_file(fb[i]));
  }
  CHECK_THROWS_AS(run_subcommand("plot", cfg), InvalidParameter);
  cfg.bundle.clear();
  CHECK_THROWS_AS(run_subcommand("synth", cfg), SchemaError);
}
