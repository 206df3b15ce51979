#include "remest/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace remest {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Vector draw_standard_normal_vector(RandomSource rng, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v(i) = rng.gaussian();
  }
  return v;
}

int pick_uniform_sensor(RandomSource rng, int m_count) {
  int idx = static_cast<int>(rng.uniform01() * m_count);
  return std::min(idx, m_count - 1);
}

struct MeanStdErr {
  double mean = 0.0;
  double std_err = 0.0;
};

MeanStdErr mean_std_err(const std::vector<double>& xs) {
  MeanStdErr out;
  const auto n = static_cast<double>(xs.size());
  if (xs.empty()) {
    return out;
  }
  for (double x : xs) out.mean += x;
  out.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std_err = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

void validate_scenario(const Scenario& sc) {
  if (sc.horizon < 1) {
    throw InvalidInputError("Scenario: horizon must be >= 1");
  }
  sc.channel.validate();
  if (sc.topology.sensor_count() < 1) {
    throw InvalidInputError("Scenario: empty topology");
  }
  if (sc.topology.state_dim() != sc.plant.state_dim()) {
    throw InvalidInputError("Scenario: topology/plant dimension mismatch");
  }
  if (sc.scheme == Scheme::kProposed) {
    if (sc.gain.k.rows() != sc.plant.state_dim() || sc.gain.k.cols() != sc.channel.n_r) {
      throw InvalidInputError("Scenario: proposed scheme needs an S x N_r gain");
    }
  } else {
    if (sc.pilot.pilot_mats.size() != static_cast<std::size_t>(sc.topology.sensor_count())) {
      throw InvalidInputError("Scenario: baselines need one pilot per sensor");
    }
  }
}

}  // namespace

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kProposed: return "proposed";
    case Scheme::kAloha: return "aloha";
    case Scheme::kRandomTdma: return "random_tdma";
    case Scheme::kAnalogAggregation: return "analog_aggregation";
  }
  return "unknown";
}

std::optional<Scheme> scheme_from_name(const std::string& name) {
  if (name == "proposed") return Scheme::kProposed;
  if (name == "aloha") return Scheme::kAloha;
  if (name == "random_tdma") return Scheme::kRandomTdma;
  if (name == "analog_aggregation") return Scheme::kAnalogAggregation;
  return std::nullopt;
}

EpisodeTrace run_episode(const Scenario& sc) {
  validate_scenario(sc);
  const int m_count = sc.topology.sensor_count();
  const Eigen::Index s_dim = sc.plant.state_dim();
  const Eigen::Index n_r = sc.channel.n_r;
  const double beta = sc.channel.tx_scale;

  RandomSource root(sc.seed);
  const RandomSource plant_rng = root.derive(streams::kPlant);
  const RandomSource act_rng = root.derive(streams::kActivation);
  const RandomSource chan_rng = root.derive(streams::kChannel);
  const RandomSource noise_rng = root.derive(streams::kRxNoise);
  const RandomSource pilot_rng = root.derive(streams::kPilot);
  const RandomSource tdma_rng = root.derive(streams::kTdma);

  PlantState plant_state{0, sc.plant.x0};

  FilterState fs;
  fs.x_pred = draw_standard_normal_vector(root.derive(streams::kInit), s_dim);
  fs.x_est = Vector::Zero(s_dim);
  fs.p_pred = Matrix::Identity(s_dim, s_dim);
  fs.p_est = Matrix::Identity(s_dim, s_dim);

  EpisodeTrace trace;
  trace.slots.reserve(static_cast<std::size_t>(sc.horizon));
  double est_seconds = 0.0;
  double err_sq_sum = 0.0;
  double state_sq_sum = 0.0;

  for (int t = 0; t < sc.horizon; ++t) {
    auto slot_act = act_rng.derive(static_cast<std::uint64_t>(t));
    auto slot_chan = chan_rng.derive(static_cast<std::uint64_t>(t));
    auto slot_noise = noise_rng.derive(static_cast<std::uint64_t>(t));
    auto slot_pilot = pilot_rng.derive(static_cast<std::uint64_t>(t));

    auto delta = sample_bernoulli_vector(slot_act, sc.activation.p, m_count);
    ChannelRealization real = sample_channels(sc.channel, m_count, slot_chan);

    SlotRecord rec;
    rec.x = plant_state.x;
    rec.active = delta;

    if (sc.scheme == Scheme::kProposed) {
      std::vector<Vector> signals(static_cast<std::size_t>(m_count));
      std::vector<Vector> sent;
      for (int m = 0; m < m_count; ++m) {
        auto mi = static_cast<std::size_t>(m);
        signals[mi] = semantic_signal(sc.topology.c_mats[mi], plant_state.x, fs.x_pred);
        if (delta[mi]) {
          sent.push_back(beta * signals[mi]);
        }
      }
      Vector y = aggregate(real, delta, signals, beta, slot_noise);
      auto tick = Clock::now();
      fs.x_est = constant_gain_update(fs.x_pred, y, sc.gain);
      Vector x_pred_next = constant_gain_predict(fs.x_est, sc.plant);
      est_seconds += seconds_since(tick);
      fs.x_pred = x_pred_next;
      rec.received = y;
      rec.tx_power = signal_power(sent, 0.0);
    } else {
      // Which sensors transmit data this slot, and is the slot usable?
      std::vector<std::uint8_t> tx(static_cast<std::size_t>(m_count), 0);
      bool usable = false;
      if (sc.scheme == Scheme::kAloha) {
        tx = delta;
        int n_active = 0;
        for (auto d : tx) n_active += d;
        usable = n_active == 1;
        rec.collision = n_active >= 2;
      } else if (sc.scheme == Scheme::kRandomTdma) {
        int chosen = pick_uniform_sensor(tdma_rng.derive(static_cast<std::uint64_t>(t)), m_count);
        tx[static_cast<std::size_t>(chosen)] = 1;
        usable = true;
      } else {  // analog aggregation
        tx = delta;
        for (auto d : tx) usable = usable || d;
      }

      std::vector<Vector> signals(static_cast<std::size_t>(m_count));
      std::vector<Vector> sent;
      double pilot_energy = 0.0;
      for (int m = 0; m < m_count; ++m) {
        auto mi = static_cast<std::size_t>(m);
        signals[mi] = raw_signal(sc.topology.c_mats[mi], plant_state.x);
        if (tx[mi]) {
          sent.push_back(beta * signals[mi]);
          pilot_energy += sc.pilot.pilot_power;
        }
      }
      rec.tx_power = signal_power(sent, pilot_energy);

      if (usable) {
        Vector y = aggregate(real, tx, signals, beta, slot_noise);
        // Pilot reception is channel physics; the LS solve below is
        // estimator work and is timed.
        std::vector<std::pair<std::size_t, Matrix>> pilot_rx;
        for (int m = 0; m < m_count; ++m) {
          auto mi = static_cast<std::size_t>(m);
          if (tx[mi]) {
            auto sensor_pilot_rng = slot_pilot.derive(static_cast<std::uint64_t>(m));
            pilot_rx.emplace_back(
                mi, receive_pilot(real.h_mats[mi], sc.pilot.pilot_mats[mi], sensor_pilot_rng));
          }
        }
        auto tick = Clock::now();
        Matrix h_hat = Matrix::Zero(n_r, s_dim);
        for (const auto& [mi, rx] : pilot_rx) {
          h_hat.noalias() +=
              beta * (ls_estimate_from_pilot(rx, sc.pilot.pilot_mats[mi]) * sc.topology.c_mats[mi]);
        }
        fs = kalman_update(fs, y, h_hat);
        est_seconds += seconds_since(tick);
        rec.received = y - h_hat * fs.x_pred;
      } else {
        auto tick = Clock::now();
        fs.x_est = fs.x_pred;
        fs.p_est = fs.p_pred;
        est_seconds += seconds_since(tick);
        rec.received = Vector::Zero(n_r);
      }
      auto tick = Clock::now();
      fs = kalman_predict(fs, sc.plant);
      est_seconds += seconds_since(tick);
    }

    rec.x_est = fs.x_est;
    err_sq_sum += (plant_state.x - fs.x_est).squaredNorm();
    state_sq_sum += plant_state.x.squaredNorm();
    trace.total_power += rec.tx_power;
    trace.slots.push_back(std::move(rec));

    auto slot_plant = plant_rng.derive(static_cast<std::uint64_t>(t));
    plant_state = plant_step(plant_state, sc.plant, slot_plant);
  }

  if (state_sq_sum > 0.0) {
    trace.nmse = err_sq_sum / state_sq_sum;
  } else {
    trace.nmse = err_sq_sum == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  trace.est_wall_time = est_seconds;
  return trace;
}

MonteCarloSummary run_monte_carlo(const Scenario& sc, int n_runs, int n_threads) {
  if (n_runs < 1) {
    throw InvalidInputError("run_monte_carlo: n_runs must be >= 1");
  }
  struct RunResult {
    double nmse = 0.0;
    double wall = 0.0;
    std::vector<double> cum_power;
    std::vector<double> sq_err;
  };
  std::vector<RunResult> results(static_cast<std::size_t>(n_runs));

  auto work = [&](int first, int stride) {
    for (int i = first; i < n_runs; i += stride) {
      Scenario run_sc = sc;
      run_sc.seed = sc.seed + static_cast<std::uint64_t>(i);
      EpisodeTrace trace = run_episode(run_sc);
      RunResult& rr = results[static_cast<std::size_t>(i)];
      rr.nmse = trace.nmse;
      rr.wall = trace.est_wall_time;
      rr.cum_power.resize(trace.slots.size());
      rr.sq_err.resize(trace.slots.size());
      double acc = 0.0;
      for (std::size_t t = 0; t < trace.slots.size(); ++t) {
        acc += trace.slots[t].tx_power;
        rr.cum_power[t] = acc;
        rr.sq_err[t] = (trace.slots[t].x - trace.slots[t].x_est).squaredNorm();
      }
    }
  };

  int threads = std::max(1, n_threads);
  if (threads == 1 || n_runs == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back(work, w, threads);
    }
    for (auto& th : pool) th.join();
  }

  MonteCarloSummary summary;
  summary.n_runs = n_runs;
  summary.nmse_runs.reserve(results.size());
  std::vector<double> walls;
  for (const auto& rr : results) {
    summary.nmse_runs.push_back(rr.nmse);
    walls.push_back(rr.wall);
  }
  auto nm = mean_std_err(summary.nmse_runs);
  summary.nmse_mean = nm.mean;
  summary.nmse_std_err = nm.std_err;
  summary.wall_time_mean = mean_std_err(walls).mean;

  const std::size_t horizon = results.front().cum_power.size();
  summary.cum_power_mean.resize(horizon);
  summary.cum_power_std_err.resize(horizon);
  summary.sq_err_mean.resize(horizon);
  summary.sq_err_std_err.resize(horizon);
  std::vector<double> slot_vals(results.size());
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t i = 0; i < results.size(); ++i) {
      slot_vals[i] = results[i].cum_power[t];
    }
    auto ms = mean_std_err(slot_vals);
    summary.cum_power_mean[t] = ms.mean;
    summary.cum_power_std_err[t] = ms.std_err;
    for (std::size_t i = 0; i < results.size(); ++i) {
      slot_vals[i] = results[i].sq_err[t];
    }
    auto es = mean_std_err(slot_vals);
    summary.sq_err_mean[t] = es.mean;
    summary.sq_err_std_err[t] = es.std_err;
  }
  return summary;
}

namespace {

constexpr std::uint64_t kCalibStream = 0xCA11B;
constexpr std::uint64_t kCsscaStream = 0x0C55C;
constexpr std::uint64_t kTopoStream = 0x70B0;
constexpr std::uint64_t kGainStream = 0x6A1F;

SensorTopology build_topology(const ExperimentSetup& setup, int m_sensors, RandomSource& rng) {
  switch (setup.topo_kind) {
    case TopologyKind::kSequential:
      return build_sequential_topology(m_sensors, setup.plant.state_dim(), setup.n_t,
                                       setup.topo_gain);
    case TopologyKind::kGaussian: {
      SensorTopology topo;
      for (int m = 0; m < m_sensors; ++m) {
        topo.c_mats.push_back(sample_standard_normal(rng, setup.n_t, setup.plant.state_dim()));
      }
      return topo;
    }
    case TopologyKind::kExplicit: {
      if (setup.topo_explicit.size() != static_cast<std::size_t>(m_sensors)) {
        throw InvalidInputError("ExperimentSetup: explicit topology size != m_sensors");
      }
      return SensorTopology{setup.topo_explicit};
    }
  }
  throw InvalidInputError("ExperimentSetup: unknown topology kind");
}

}  // namespace

ScenarioBundle prepare_bundle(const ExperimentSetup& setup, int m_sensors) {
  RandomSource root(setup.seed);
  RandomSource topo_rng = root.derive(kTopoStream);
  ScenarioBundle bundle;
  bundle.topology = build_topology(setup, m_sensors, topo_rng);
  bundle.channel = setup.channel;

  RandomSource calib_rng = root.derive(kCalibStream);
  bundle.channel.tx_scale = calibrate_tx_scale(bundle.channel, setup.plant, bundle.topology,
                                               setup.activation, setup.calib_slots, calib_rng);

  bool needs_gain = std::find(setup.schemes.begin(), setup.schemes.end(), Scheme::kProposed) !=
                    setup.schemes.end();
  if (needs_gain) {
    CsscaConfig cfg = setup.cssca;
    if (cfg.k_init.rows() != setup.plant.state_dim() || cfg.k_init.cols() != setup.channel.n_r) {
      cfg.k_init = Matrix::Zero(setup.plant.state_dim(), setup.channel.n_r);
    }
    RandomSource cssca_rng = root.derive(kCsscaStream);
    bundle.cssca = optimize_gain(cfg, setup.plant, bundle.channel, bundle.topology,
                                 setup.activation, cssca_rng);
    bundle.gain.k = bundle.cssca.k_star;
  }
  bundle.pilot =
      PilotScheme::identity_pilots(m_sensors, setup.n_t, setup.pilot_power);
  return bundle;
}

Scenario make_scenario(const ExperimentSetup& setup, const ScenarioBundle& bundle, Scheme scheme) {
  Scenario sc{setup.plant,      bundle.topology, bundle.channel, setup.activation,
              setup.horizon,    scheme,          bundle.gain,    bundle.pilot,
              setup.seed};
  return sc;
}

std::vector<ExperimentRow> experiment_nmse_vs_sensors(const ExperimentSetup& setup,
                                                      const std::vector<int>& m_values) {
  std::vector<ExperimentRow> rows;
  for (int m : m_values) {
    ScenarioBundle bundle = prepare_bundle(setup, m);
    for (Scheme scheme : setup.schemes) {
      Scenario sc = make_scenario(setup, bundle, scheme);
      MonteCarloSummary mc = run_monte_carlo(sc, setup.n_runs, setup.n_threads);
      rows.push_back({scheme_name(scheme), static_cast<double>(m), "nmse", mc.nmse_mean,
                      mc.nmse_std_err, mc.n_runs, setup.seed});
    }
  }
  return rows;
}

std::vector<ExperimentRow> experiment_power_vs_time(const ExperimentSetup& setup) {
  std::vector<ExperimentRow> rows;
  ScenarioBundle bundle = prepare_bundle(setup, setup.m_sensors);
  for (Scheme scheme : setup.schemes) {
    Scenario sc = make_scenario(setup, bundle, scheme);
    MonteCarloSummary mc = run_monte_carlo(sc, setup.n_runs, setup.n_threads);
    for (std::size_t t = 0; t < mc.cum_power_mean.size(); ++t) {
      rows.push_back({scheme_name(scheme), static_cast<double>(t), "cum_power",
                      mc.cum_power_mean[t], mc.cum_power_std_err[t], mc.n_runs, setup.seed});
    }
  }
  return rows;
}

std::vector<ExperimentRow> experiment_cpu_vs_dimension(const ExperimentSetup& setup,
                                                       const std::vector<int>& s_values,
                                                       int n_slots, int reps) {
  if (n_slots < 1 || reps < 1) {
    throw InvalidInputError("experiment_cpu_vs_dimension: n_slots and reps must be >= 1");
  }
  std::vector<ExperimentRow> rows;
  RandomSource root(setup.seed);
  for (int s : s_values) {
    RandomSource gen_rng = root.derive(kTopoStream).derive(static_cast<std::uint64_t>(s));
    PlantModel plant(sample_standard_normal(gen_rng, s, s), Matrix::Identity(s, s),
                     Vector::Zero(s));
    SensorTopology topo;
    for (int m = 0; m < setup.m_sensors; ++m) {
      topo.c_mats.push_back(sample_standard_normal(gen_rng, setup.n_t, s));
    }
    ChannelModel channel = setup.channel;
    channel.tx_scale = 1.0;  // timing only; estimates may diverge
    RandomSource gain_rng = root.derive(kGainStream);
    ConstantGain gain{sample_standard_normal(gain_rng, s, channel.n_r) /
                      std::sqrt(static_cast<double>(s))};
    PilotScheme pilot = PilotScheme::identity_pilots(setup.m_sensors, setup.n_t,
                                                     setup.pilot_power);

    for (Scheme scheme : setup.schemes) {
      Scenario sc{plant, topo, channel, setup.activation, n_slots,
                  scheme, gain, pilot, setup.seed};
      Scenario warm = sc;
      warm.horizon = std::min(n_slots, 1000);
      run_episode(warm);  // warm-up, discarded
      std::vector<double> times;
      times.reserve(static_cast<std::size_t>(reps));
      for (int rep = 0; rep < reps; ++rep) {
        times.push_back(run_episode(sc).est_wall_time);
      }
      std::sort(times.begin(), times.end());
      double median = times[times.size() / 2];
      if (times.size() % 2 == 0) {
        median = 0.5 * (median + times[times.size() / 2 - 1]);
      }
      rows.push_back({scheme_name(scheme), static_cast<double>(s), "wall_time", median, 0.0,
                      reps, setup.seed});
    }
  }
  return rows;
}

}  // namespace remest
