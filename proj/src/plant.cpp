#include "remest/plant.hpp"

namespace remest {

PlantModel::PlantModel(Matrix a, Matrix w, Vector x_init)
    : a_dyn(std::move(a)), w_cov(std::move(w)), x0(std::move(x_init)) {
  if (a_dyn.rows() != a_dyn.cols()) {
    throw InvalidInputError("PlantModel: dynamics matrix not square");
  }
  if (w_cov.rows() != a_dyn.rows() || w_cov.cols() != a_dyn.rows()) {
    throw InvalidInputError("PlantModel: noise covariance dimension mismatch");
  }
  if (x0.size() != a_dyn.rows()) {
    throw InvalidInputError("PlantModel: initial state dimension mismatch");
  }
  require_finite(a_dyn, "PlantModel");
  w_factor_ = psd_factor(w_cov);  // also validates PSD
}

ActivationModel::ActivationModel(double prob) : p(prob) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidInputError("ActivationModel: probability outside [0,1]");
  }
}

PlantState plant_step(const PlantState& state, const PlantModel& model, RandomSource& rng) {
  if (state.x.size() != model.state_dim()) {
    throw InvalidInputError("plant_step: state dimension mismatch");
  }
  Vector z(model.state_dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z(i) = rng.gaussian();
  }
  PlantState next;
  next.t = state.t + 1;
  next.x = model.a_dyn * state.x + model.noise_factor() * z;
  return next;
}

SensorTopology build_sequential_topology(int m_sensors, Eigen::Index s_dim, Eigen::Index n_t,
                                         double gain) {
  if (m_sensors < 1 || s_dim < 1 || n_t < 1) {
    throw InvalidInputError("build_sequential_topology: nonpositive dimension");
  }
  SensorTopology topo;
  topo.c_mats.reserve(static_cast<std::size_t>(m_sensors));
  for (int m = 1; m <= m_sensors; ++m) {
    Matrix c = Matrix::Zero(n_t, s_dim);
    c.col((m - 1) % s_dim).setConstant(gain);
    topo.c_mats.push_back(std::move(c));
  }
  return topo;
}

Vector semantic_signal(const Matrix& c_m, const Vector& x, const Vector& x_pred) {
  if (c_m.cols() != x.size() || x.size() != x_pred.size()) {
    throw InvalidInputError("semantic_signal: dimension mismatch");
  }
  return c_m * (x - x_pred);
}

Vector raw_signal(const Matrix& c_m, const Vector& x) {
  if (c_m.cols() != x.size()) {
    throw InvalidInputError("raw_signal: dimension mismatch");
  }
  return c_m * x;
}

double signal_power(const std::vector<Vector>& signals, double pilot_power) {
  double total = pilot_power;
  for (const auto& s : signals) {
    total += s.squaredNorm();
  }
  return total;
}

}  // namespace remest
