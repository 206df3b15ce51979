#pragma once

#include "remest/harness.hpp"

#include <optional>
#include <string>
#include <vector>

/// Flat key = value run configuration. One assignment per line, `#`
/// comments, matrices as bracketed row lists. Unknown keys and any value
/// violating a module precondition are rejected at parse time with the
/// offending line number.
namespace remest {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  // plant
  Matrix a;
  Matrix w;
  Vector x0;
  // dimensions and topology
  int m_sensors = 0;
  Eigen::Index n_t = 0;
  Eigen::Index n_r = 0;
  TopologyKind topo_kind = TopologyKind::kSequential;
  double topology_gain = 0.1;
  std::vector<Matrix> c_mats;
  // channel
  ElementDist channel_dist = ElementDist::kRayleigh;
  double rayleigh_scale = 1.0;
  double channel_mean = 0.0;
  double channel_var = 1.0;
  double snr_db = 0.0;
  // activation and run shape
  double p = 0.0;
  std::vector<Scheme> schemes;
  int horizon = 0;
  int n_runs = 0;
  std::uint64_t seed = 0;
  // baselines and calibration
  double pilot_power = 10.0;
  int calib_slots = 300;
  // optimizer
  CsscaConfig cssca;
  std::optional<std::string> gain_file;  // simulate: load instead of optimizing
  // experiment sweeps
  std::vector<int> m_values;
  std::vector<int> s_values;
  int fig4_slots = 10000;
  int fig4_reps = 3;

  ExperimentSetup to_setup(int n_threads) const;
};

RunConfig parse_config(const std::string& path);

}  // namespace remest
