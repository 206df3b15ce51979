#pragma once

#include "remest/numerics.hpp"

#include <vector>

/// Dynamic plant, sensor connection topology, and signal extraction.
namespace remest {

/// Linear plant x(t+1) = A x(t) + w(t), w ~ N(0, W).
struct PlantModel {
  Matrix a_dyn;  // S x S dynamics
  Matrix w_cov;  // S x S noise covariance, symmetric PSD
  Vector x0;     // initial state

  PlantModel(Matrix a, Matrix w, Vector x_init);

  Eigen::Index state_dim() const { return a_dyn.rows(); }

  /// Cached factor of w_cov for per-slot noise draws.
  const Matrix& noise_factor() const { return w_factor_; }

 private:
  Matrix w_factor_;
};

struct PlantState {
  std::int64_t t = 0;
  Vector x;
};

/// Connection matrices C_1..C_M, all N_t x S.
struct SensorTopology {
  std::vector<Matrix> c_mats;

  int sensor_count() const { return static_cast<int>(c_mats.size()); }
  Eigen::Index n_t() const { return c_mats.empty() ? 0 : c_mats.front().rows(); }
  Eigen::Index state_dim() const { return c_mats.empty() ? 0 : c_mats.front().cols(); }
};

struct ActivationModel {
  double p = 0.0;  // Pr(sensor active) per slot, in [0,1]

  explicit ActivationModel(double prob);
};

/// Advance the plant one slot: x(t+1) = A x(t) + w.
PlantState plant_step(const PlantState& state, const PlantModel& model, RandomSource& rng);

/// Topology where sensor m observes state component ((m-1) mod s_dim) + 1:
/// that column of C_m holds `gain` in every row, all else zero.
SensorTopology build_sequential_topology(int m_sensors, Eigen::Index s_dim, Eigen::Index n_t,
                                         double gain);

/// Measurement discrepancy s_m = C_m (x - x_pred).
Vector semantic_signal(const Matrix& c_m, const Vector& x, const Vector& x_pred);

/// Raw measurement s_m = C_m x.
Vector raw_signal(const Matrix& c_m, const Vector& x);

/// Slot transmit power: sum of squared signal norms plus pilot energy.
double signal_power(const std::vector<Vector>& signals, double pilot_power);

}  // namespace remest
