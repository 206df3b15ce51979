#pragma once

#include "remest/channel.hpp"
#include "remest/estimation.hpp"
#include "remest/gain_design.hpp"
#include "remest/numerics.hpp"
#include "remest/plant.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

/// End-to-end episodes for the proposed scheme and the three Kalman
/// baselines, Monte-Carlo orchestration, and the three experiments
/// (estimation error vs sensor count, transmit power vs time, estimator
/// CPU time vs plant dimension).
namespace remest {

enum class Scheme { kProposed, kAloha, kRandomTdma, kAnalogAggregation };

std::string scheme_name(Scheme s);
std::optional<Scheme> scheme_from_name(const std::string& name);

/// Substream ids used inside an episode. Fixed and public so tests can
/// reproduce the exact per-slot realizations: the stream for purpose P at
/// slot t is RandomSource(seed).derive(P).derive(t).
namespace streams {
inline constexpr std::uint64_t kPlant = 1;
inline constexpr std::uint64_t kActivation = 2;
inline constexpr std::uint64_t kChannel = 3;
inline constexpr std::uint64_t kRxNoise = 4;
inline constexpr std::uint64_t kPilot = 5;
inline constexpr std::uint64_t kInit = 6;
inline constexpr std::uint64_t kTdma = 7;
}  // namespace streams

struct Scenario {
  PlantModel plant;
  SensorTopology topology;
  ChannelModel channel;  // tx_scale already calibrated
  ActivationModel activation;
  int horizon = 1;
  Scheme scheme = Scheme::kProposed;
  ConstantGain gain;  // proposed only
  PilotScheme pilot;  // baselines only
  std::uint64_t seed = 0;
};

struct SlotRecord {
  Vector x;         // true plant state
  Vector x_est;     // posterior estimate
  Vector received;  // aggregated signal (proposed) or innovation (baselines)
  double tx_power = 0.0;
  std::vector<std::uint8_t> active;
  bool collision = false;
};

struct EpisodeTrace {
  std::vector<SlotRecord> slots;
  double nmse = 0.0;
  double total_power = 0.0;
  double est_wall_time = 0.0;  // seconds spent in estimator-side computation
};

struct MonteCarloSummary {
  double nmse_mean = 0.0;
  double nmse_std_err = 0.0;
  std::vector<double> nmse_runs;          // one value per run
  std::vector<double> cum_power_mean;     // per-slot cumulative transmit power
  std::vector<double> cum_power_std_err;
  std::vector<double> sq_err_mean;        // per-slot ||x - x_est||^2
  std::vector<double> sq_err_std_err;
  double wall_time_mean = 0.0;
  int n_runs = 0;
};

/// One CSV-shaped result row shared by all experiments.
struct ExperimentRow {
  std::string scheme;
  double x = 0.0;  // M, S or t depending on the experiment
  std::string metric;
  double mean = 0.0;
  double std_err = 0.0;
  int n_runs = 0;
  std::uint64_t seed = 0;
};

enum class TopologyKind { kSequential, kGaussian, kExplicit };

/// Everything needed to instantiate scenarios across M or S sweeps.
struct ExperimentSetup {
  PlantModel plant;
  ChannelModel channel;  // snr_db set; tx_scale recalibrated per bundle
  ActivationModel activation;
  TopologyKind topo_kind = TopologyKind::kSequential;
  double topo_gain = 0.1;
  std::vector<Matrix> topo_explicit;
  Eigen::Index n_t = 1;
  int m_sensors = 1;
  int horizon = 1;
  int n_runs = 1;
  std::vector<Scheme> schemes;
  double pilot_power = 10.0;
  int calib_slots = 300;
  CsscaConfig cssca;  // k_init resized per bundle when empty or mismatched
  std::uint64_t seed = 0;
  int n_threads = 1;
};

/// Topology, calibrated channel, optimized gain and pilots for one sensor
/// count. The same bundle backs every scheme so realizations stay matched.
struct ScenarioBundle {
  SensorTopology topology;
  ChannelModel channel;
  ConstantGain gain;
  PilotScheme pilot;
  CsscaResult cssca;  // optimizer trace kept for diagnostics
};

ScenarioBundle prepare_bundle(const ExperimentSetup& setup, int m_sensors);

Scenario make_scenario(const ExperimentSetup& setup, const ScenarioBundle& bundle, Scheme scheme);

/// Advance plant, sensing, channel and estimator for `horizon` slots.
EpisodeTrace run_episode(const Scenario& sc);

/// Episodes with seeds sc.seed .. sc.seed + n_runs - 1, aggregated.
MonteCarloSummary run_monte_carlo(const Scenario& sc, int n_runs, int n_threads = 1);

/// Estimation error versus sensor count; the proposed gain is re-optimized
/// per M. Returns one row per (scheme, M).
std::vector<ExperimentRow> experiment_nmse_vs_sensors(const ExperimentSetup& setup,
                                                      const std::vector<int>& m_values);

/// Per-slot cumulative transmit power per scheme at the setup's M.
std::vector<ExperimentRow> experiment_power_vs_time(const ExperimentSetup& setup);

/// Median estimator wall time over `reps` episodes of `n_slots` slots, per
/// scheme and plant dimension. A (shortened) warm-up episode is discarded.
/// Plant and topology entries are i.i.d. standard normal per S; estimates
/// may diverge, only timing is meaningful. Runs single-threaded.
std::vector<ExperimentRow> experiment_cpu_vs_dimension(const ExperimentSetup& setup,
                                                       const std::vector<int>& s_values,
                                                       int n_slots, int reps);

}  // namespace remest
