#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "remest/harness.hpp"

#include <cmath>

using namespace remest;

namespace {

PlantModel eq22_plant() {
  Matrix a(3, 3);
  a << 1.01, 0.05, 0.01, 0.02, 0.98, 0.01, 0.003, 0.002, 0.98;
  return PlantModel(a, Matrix::Identity(3, 3), Vector::Zero(3));
}

ExperimentSetup eq22_setup(std::vector<Scheme> schemes, int horizon = 300, int n_runs = 20) {
  ChannelModel chan;
  chan.n_r = 3;
  chan.n_t = 3;
  chan.dist = ElementDist::kRayleigh;
  chan.rayleigh_scale = 3.0;
  chan.snr_db = 12.5;
  chan.tx_scale = 1.0;

  CsscaConfig cssca;
  cssca.total_iters = 1500;

  ExperimentSetup setup{eq22_plant(),
                        chan,
                        ActivationModel(0.3),
                        TopologyKind::kSequential,
                        0.1,
                        {},
                        3,
                        6,
                        horizon,
                        n_runs,
                        std::move(schemes),
                        10.0,
                        300,
                        std::move(cssca),
                        1234,
                        2};
  return setup;
}

Vector standard_normal_vector(RandomSource rng, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v(i) = rng.gaussian();
  }
  return v;
}

}  // namespace

TEST_CASE("a silent first slot applies the gain to pure noise") {
  ExperimentSetup setup = eq22_setup({Scheme::kProposed}, 1, 1);
  ScenarioBundle bundle = prepare_bundle(setup, 6);
  Scenario sc = make_scenario(setup, bundle, Scheme::kProposed);
  sc.activation = ActivationModel(0.0);  // nobody transmits this episode
  sc.horizon = 1;
  EpisodeTrace trace = run_episode(sc);
  REQUIRE(trace.slots.size() == 1);

  RandomSource root(sc.seed);
  Vector x_pred = standard_normal_vector(root.derive(streams::kInit), 3);
  Vector v = standard_normal_vector(root.derive(streams::kRxNoise).derive(0), 3);
  Vector expected = x_pred + bundle.gain.k * v;
  CHECK((trace.slots[0].x_est - expected).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(trace.slots[0].tx_power == 0.0);
}

TEST_CASE("episodes are bit-identical under a repeated seed") {
  for (Scheme scheme : {Scheme::kProposed, Scheme::kAloha, Scheme::kRandomTdma,
                        Scheme::kAnalogAggregation}) {
    ExperimentSetup setup = eq22_setup({scheme}, 40, 1);
    ScenarioBundle bundle = prepare_bundle(setup, 6);
    Scenario sc = make_scenario(setup, bundle, scheme);
    EpisodeTrace a = run_episode(sc);
    EpisodeTrace b = run_episode(sc);
    REQUIRE(a.slots.size() == b.slots.size());
    CHECK(a.nmse == b.nmse);
    CHECK(a.total_power == b.total_power);
    for (std::size_t t = 0; t < a.slots.size(); ++t) {
      CHECK((a.slots[t].x - b.slots[t].x).norm() == 0.0);
      CHECK((a.slots[t].x_est - b.slots[t].x_est).norm() == 0.0);
      CHECK((a.slots[t].received - b.slots[t].received).norm() == 0.0);
      CHECK(a.slots[t].tx_power == b.slots[t].tx_power);
      CHECK(a.slots[t].active == b.slots[t].active);
      CHECK(a.slots[t].collision == b.slots[t].collision);
    }
  }
}

TEST_CASE("matched seeds share plant and activation realizations across schemes") {
  ExperimentSetup setup = eq22_setup(
      {Scheme::kProposed, Scheme::kAloha, Scheme::kRandomTdma, Scheme::kAnalogAggregation}, 50,
      1);
  ScenarioBundle bundle = prepare_bundle(setup, 6);
  std::vector<EpisodeTrace> traces;
  for (Scheme scheme : setup.schemes) {
    traces.push_back(run_episode(make_scenario(setup, bundle, scheme)));
  }
  for (std::size_t s = 1; s < traces.size(); ++s) {
    for (std::size_t t = 0; t < traces[0].slots.size(); ++t) {
      CHECK((traces[s].slots[t].x - traces[0].slots[t].x).norm() == 0.0);
      CHECK(traces[s].slots[t].active == traces[0].slots[t].active);
    }
  }
}

TEST_CASE("the received aggregate equals the explicitly computed innovation") {
  // Oracle loop: raw transmission plus explicit innovation, replaying the
  // proposed scheme's exact realizations slot by slot.
  ExperimentSetup setup = eq22_setup({Scheme::kProposed}, 200, 1);
  ScenarioBundle bundle = prepare_bundle(setup, 6);
  Scenario sc = make_scenario(setup, bundle, Scheme::kProposed);
  EpisodeTrace trace = run_episode(sc);

  RandomSource root(sc.seed);
  const double beta = bundle.channel.tx_scale;
  PlantState st{0, setup.plant.x0};
  Vector x_pred = standard_normal_vector(root.derive(streams::kInit), 3);
  for (int t = 0; t < sc.horizon; ++t) {
    auto delta = sample_bernoulli_vector(
        *std::make_unique<RandomSource>(root.derive(streams::kActivation).derive(t)), 0.3, 6);
    auto chan_rng = root.derive(streams::kChannel).derive(t);
    ChannelRealization real = sample_channels(bundle.channel, 6, chan_rng);
    std::vector<Vector> raw;
    for (const auto& c : bundle.topology.c_mats) {
      raw.push_back(raw_signal(c, st.x));
    }
    auto noise_rng = root.derive(streams::kRxNoise).derive(t);
    Vector y_raw = aggregate(real, delta, raw, beta, noise_rng);
    Matrix h_eff = effective_csi(real, delta, bundle.topology, beta);
    Vector innovation = y_raw - h_eff * x_pred;

    double scale = std::max(1.0, innovation.cwiseAbs().maxCoeff());
    CHECK((trace.slots[t].received - innovation).cwiseAbs().maxCoeff() <= 1e-12 * scale);

    Vector x_est = constant_gain_update(x_pred, innovation, bundle.gain);
    CHECK((trace.slots[t].x_est - x_est).cwiseAbs().maxCoeff() <=
          1e-12 * std::max(1.0, x_est.cwiseAbs().maxCoeff()));
    x_pred = constant_gain_predict(x_est, setup.plant);

    auto plant_rng = root.derive(streams::kPlant).derive(t);
    st = plant_step(st, setup.plant, plant_rng);
  }
}

TEST_CASE("proposed-scheme slot power is the scaled semantic energy") {
  ExperimentSetup setup = eq22_setup({Scheme::kProposed}, 100, 1);
  ScenarioBundle bundle = prepare_bundle(setup, 6);
  Scenario sc = make_scenario(setup, bundle, Scheme::kProposed);
  EpisodeTrace trace = run_episode(sc);

  const double beta2 = bundle.channel.tx_scale * bundle.channel.tx_scale;
  RandomSource root(sc.seed);
  Vector x_pred = standard_normal_vector(root.derive(streams::kInit), 3);
  for (int t = 0; t < sc.horizon; ++t) {
    double expected = 0.0;
    for (int m = 0; m < 6; ++m) {
      if (trace.slots[t].active[static_cast<std::size_t>(m)]) {
        expected +=
            beta2 *
            semantic_signal(bundle.topology.c_mats[static_cast<std::size_t>(m)],
                            trace.slots[t].x, x_pred)
                .squaredNorm();
      }
    }
    CHECK(trace.slots[t].tx_power ==
          doctest::Approx(expected).epsilon(1e-12));
    x_pred = constant_gain_predict(trace.slots[t].x_est, setup.plant);
  }
}

TEST_CASE("baseline slot power includes pilot energy for every transmitter") {
  ExperimentSetup setup = eq22_setup({Scheme::kAloha, Scheme::kAnalogAggregation}, 60, 1);
  ScenarioBundle bundle = prepare_bundle(setup, 6);
  for (Scheme scheme : setup.schemes) {
    EpisodeTrace trace = run_episode(make_scenario(setup, bundle, scheme));
    for (const auto& slot : trace.slots) {
      int active = 0;
      for (auto d : slot.active) active += d;
      CHECK(slot.tx_power >= setup.pilot_power * active - 1e-9);
    }
  }
  // TDMA transmits exactly one pilot per slot regardless of activations.
  EpisodeTrace tdma = run_episode(make_scenario(setup, bundle, Scheme::kRandomTdma));
  for (const auto& slot : tdma.slots) {
    CHECK(slot.tx_power >= setup.pilot_power - 1e-9);
  }
}

TEST_CASE("monte-carlo with one run reproduces the single episode") {
  ExperimentSetup setup = eq22_setup({Scheme::kAloha}, 80, 1);
  ScenarioBundle bundle = prepare_bundle(setup, 6);
  Scenario sc = make_scenario(setup, bundle, Scheme::kAloha);
  EpisodeTrace episode = run_episode(sc);
  MonteCarloSummary mc = run_monte_carlo(sc, 1);
  CHECK(mc.nmse_mean == episode.nmse);
  CHECK(mc.nmse_std_err == 0.0);
  CHECK(mc.cum_power_mean.back() == doctest::Approx(episode.total_power).epsilon(1e-12));
}

TEST_CASE("monte-carlo runs use consecutive episode seeds") {
  ExperimentSetup setup = eq22_setup({Scheme::kAnalogAggregation}, 40, 1);
  ScenarioBundle bundle = prepare_bundle(setup, 6);
  Scenario sc = make_scenario(setup, bundle, Scheme::kAnalogAggregation);
  MonteCarloSummary mc = run_monte_carlo(sc, 3);
  for (int i = 0; i < 3; ++i) {
    Scenario rsc = sc;
    rsc.seed = sc.seed + static_cast<std::uint64_t>(i);
    CHECK(mc.nmse_runs[static_cast<std::size_t>(i)] == run_episode(rsc).nmse);
  }
}

TEST_CASE("monte-carlo aggregation is independent of the thread count") {
  ExperimentSetup setup = eq22_setup({Scheme::kProposed}, 60, 8);
  ScenarioBundle bundle = prepare_bundle(setup, 6);
  Scenario sc = make_scenario(setup, bundle, Scheme::kProposed);
  MonteCarloSummary serial = run_monte_carlo(sc, 8, 1);
  MonteCarloSummary parallel = run_monte_carlo(sc, 8, 4);
  CHECK(serial.nmse_mean == parallel.nmse_mean);
  CHECK(serial.nmse_std_err == parallel.nmse_std_err);
  for (std::size_t t = 0; t < serial.cum_power_mean.size(); ++t) {
    CHECK(serial.cum_power_mean[t] == parallel.cum_power_mean[t]);
  }
}

TEST_CASE("nmse standard error shrinks with more runs") {
  ExperimentSetup setup = eq22_setup({Scheme::kProposed}, 100, 1);
  ScenarioBundle bundle = prepare_bundle(setup, 6);
  Scenario sc = make_scenario(setup, bundle, Scheme::kProposed);
  MonteCarloSummary half = run_monte_carlo(sc, 400, 2);
  MonteCarloSummary full = run_monte_carlo(sc, 800, 2);
  double ratio = full.nmse_std_err / half.nmse_std_err;
  CHECK(ratio > 0.55);
  CHECK(ratio < 0.88);
}

TEST_CASE("proposed transmit power stays below every baseline") {
  ExperimentSetup setup = eq22_setup(
      {Scheme::kProposed, Scheme::kAloha, Scheme::kRandomTdma, Scheme::kAnalogAggregation}, 300,
      40);
  ScenarioBundle bundle = prepare_bundle(setup, 6);
  double proposed_power = 0.0;
  std::vector<double> baseline_power;
  for (Scheme scheme : setup.schemes) {
    MonteCarloSummary mc =
        run_monte_carlo(make_scenario(setup, bundle, scheme), setup.n_runs, setup.n_threads);
    if (scheme == Scheme::kProposed) {
      proposed_power = mc.cum_power_mean.back();
    } else {
      baseline_power.push_back(mc.cum_power_mean.back());
    }
  }
  for (double p : baseline_power) {
    CHECK(proposed_power < p);
  }
}

TEST_CASE("semantic transmissions carry less energy than raw transmissions") {
  // Same gain, same realizations: total semantic signal energy over 100
  // episodes stays strictly below the raw-measurement energy.
  ExperimentSetup setup = eq22_setup({Scheme::kProposed}, 300, 100);
  ScenarioBundle bundle = prepare_bundle(setup, 6);
  Scenario sc = make_scenario(setup, bundle, Scheme::kProposed);

  double semantic = 0.0, raw = 0.0;
  for (int run = 0; run < setup.n_runs; ++run) {
    Scenario rsc = sc;
    rsc.seed = sc.seed + static_cast<std::uint64_t>(run);
    EpisodeTrace trace = run_episode(rsc);
    semantic += trace.total_power;

    RandomSource root(rsc.seed);
    const double beta2 = bundle.channel.tx_scale * bundle.channel.tx_scale;
    for (int t = 0; t < sc.horizon; ++t) {
      const auto& slot = trace.slots[static_cast<std::size_t>(t)];
      for (int m = 0; m < 6; ++m) {
        if (slot.active[static_cast<std::size_t>(m)]) {
          raw += beta2 *
                 raw_signal(bundle.topology.c_mats[static_cast<std::size_t>(m)], slot.x)
                     .squaredNorm();
        }
      }
    }
  }
  CHECK(semantic < raw);
}

TEST_CASE("nmse is invariant to a joint rescaling of the noise and state") {
  // Scalar loop with every stochastic input scaled by c: a linear
  // estimator scales along, so the error/state ratio is unchanged.
  const double a = 0.97, k = 0.4, h = 1.2, c = 7.5;
  RandomSource rng(33);
  double num1 = 0.0, den1 = 0.0, num2 = 0.0, den2 = 0.0;
  double x1 = 0.0, x2 = 0.0, pred1 = 0.0, pred2 = 0.0;
  for (int t = 0; t < 2000; ++t) {
    double w = rng.gaussian();
    double v = rng.gaussian();
    double y1 = h * (x1 - pred1) + v;
    double y2 = h * (x2 - pred2) + c * v;
    double est1 = pred1 + k * y1;
    double est2 = pred2 + k * y2;
    num1 += (x1 - est1) * (x1 - est1);
    den1 += x1 * x1;
    num2 += (x2 - est2) * (x2 - est2);
    den2 += x2 * x2;
    pred1 = a * est1;
    pred2 = a * est2;
    x1 = a * x1 + w;
    x2 = a * x2 + c * w;
  }
  CHECK(num1 / den1 == doctest::Approx(num2 / den2).epsilon(1e-9));
}

TEST_CASE("single-cell experiment tables agree with direct monte-carlo") {
  ExperimentSetup setup = eq22_setup({Scheme::kAnalogAggregation}, 60, 10);
  auto rows = experiment_nmse_vs_sensors(setup, {6});
  REQUIRE(rows.size() == 1);
  ScenarioBundle bundle = prepare_bundle(setup, 6);
  MonteCarloSummary mc = run_monte_carlo(make_scenario(setup, bundle, Scheme::kAnalogAggregation),
                                         setup.n_runs, setup.n_threads);
  CHECK(rows[0].mean == mc.nmse_mean);
  CHECK(rows[0].std_err == mc.nmse_std_err);
  CHECK(rows[0].scheme == "analog_aggregation");
  CHECK(rows[0].x == 6.0);
}

TEST_CASE("power experiment emits one row per slot per scheme with nondecreasing totals") {
  ExperimentSetup setup = eq22_setup({Scheme::kProposed, Scheme::kRandomTdma}, 50, 5);
  auto rows = experiment_power_vs_time(setup);
  REQUIRE(rows.size() == 2 * 50);
  double prev = -1.0;
  for (std::size_t t = 0; t < 50; ++t) {
    CHECK(rows[t].metric == "cum_power");
    CHECK(rows[t].mean >= prev);
    prev = rows[t].mean;
  }
}

TEST_CASE("timing experiment ranks the constant-gain estimator first") {
  ExperimentSetup setup = eq22_setup(
      {Scheme::kProposed, Scheme::kAloha, Scheme::kRandomTdma, Scheme::kAnalogAggregation}, 1, 1);
  auto rows = experiment_cpu_vs_dimension(setup, {100}, 2000, 1);
  REQUIRE(rows.size() == 4);
  double proposed = 0.0;
  for (const auto& r : rows) {
    if (r.scheme == "proposed") proposed = r.mean;
    CHECK(r.mean > 0.0);
  }
  for (const auto& r : rows) {
    if (r.scheme != "proposed") {
      CHECK(proposed < r.mean);
    }
  }
}
