#include "remest/channel.hpp"

#include <cmath>

namespace remest {

void ChannelModel::validate() const {
  if (n_r < 1 || n_t < 1) {
    throw InvalidInputError("ChannelModel: antenna counts must be >= 1");
  }
  if (dist == ElementDist::kRayleigh && rayleigh_scale < 0.0) {
    throw InvalidInputError("ChannelModel: negative Rayleigh scale");
  }
  if (dist == ElementDist::kGaussian && !(gauss_var > 0.0)) {
    throw InvalidInputError("ChannelModel: Gaussian element variance must be > 0");
  }
  if (!(tx_scale > 0.0)) {
    throw InvalidInputError("ChannelModel: tx_scale must be > 0");
  }
}

PilotScheme PilotScheme::identity_pilots(int m_sensors, Eigen::Index n_t, double pilot_power) {
  if (m_sensors < 1 || n_t < 1 || !(pilot_power > 0.0)) {
    throw InvalidInputError("PilotScheme: invalid pilot parameters");
  }
  PilotScheme scheme;
  scheme.pilot_power = pilot_power;
  double amp = std::sqrt(pilot_power / static_cast<double>(n_t));
  scheme.pilot_mats.assign(static_cast<std::size_t>(m_sensors),
                           amp * Matrix::Identity(n_t, n_t));
  return scheme;
}

ChannelRealization sample_channels(const ChannelModel& model, int m_sensors, RandomSource& rng) {
  if (m_sensors < 1) {
    throw InvalidInputError("sample_channels: need at least one sensor");
  }
  ChannelRealization real;
  real.h_mats.reserve(static_cast<std::size_t>(m_sensors));
  for (int m = 0; m < m_sensors; ++m) {
    if (model.dist == ElementDist::kRayleigh) {
      real.h_mats.push_back(sample_rayleigh_matrix(rng, model.rayleigh_scale, model.n_r, model.n_t));
    } else {
      double sd = std::sqrt(model.gauss_var);
      Matrix h = sample_standard_normal(rng, model.n_r, model.n_t);
      real.h_mats.push_back((h.array() * sd + model.gauss_mean).matrix());
    }
  }
  return real;
}

Vector aggregate(const ChannelRealization& real, const std::vector<std::uint8_t>& activations,
                 const std::vector<Vector>& signals, double tx_scale, RandomSource& rng) {
  const std::size_t m_count = real.h_mats.size();
  if (activations.size() != m_count || signals.size() != m_count) {
    throw InvalidInputError("aggregate: list length mismatch");
  }
  const Eigen::Index n_r = real.h_mats.empty() ? 0 : real.h_mats.front().rows();
  Vector y(n_r);
  for (Eigen::Index i = 0; i < n_r; ++i) {
    y(i) = rng.gaussian();
  }
  for (std::size_t m = 0; m < m_count; ++m) {
    if (!activations[m]) {
      continue;
    }
    if (real.h_mats[m].cols() != signals[m].size()) {
      throw InvalidInputError("aggregate: signal dimension mismatch");
    }
    y.noalias() += real.h_mats[m] * (tx_scale * signals[m]);
  }
  return y;
}

Matrix effective_csi(const ChannelRealization& real, const std::vector<std::uint8_t>& activations,
                     const SensorTopology& topology, double tx_scale) {
  const std::size_t m_count = real.h_mats.size();
  if (activations.size() != m_count || topology.c_mats.size() != m_count) {
    throw InvalidInputError("effective_csi: list length mismatch");
  }
  const Eigen::Index n_r = real.h_mats.empty() ? 0 : real.h_mats.front().rows();
  Matrix h = Matrix::Zero(n_r, topology.state_dim());
  for (std::size_t m = 0; m < m_count; ++m) {
    if (!activations[m]) {
      continue;
    }
    if (real.h_mats[m].cols() != topology.c_mats[m].rows()) {
      throw InvalidInputError("effective_csi: antenna dimension mismatch");
    }
    h.noalias() += tx_scale * (real.h_mats[m] * topology.c_mats[m]);
  }
  return h;
}

Matrix receive_pilot(const Matrix& h_true, const Matrix& pilot, RandomSource& rng) {
  if (h_true.cols() != pilot.rows()) {
    throw InvalidInputError("receive_pilot: dimension mismatch");
  }
  return h_true * pilot + sample_standard_normal(rng, h_true.rows(), pilot.cols());
}

Matrix ls_estimate_from_pilot(const Matrix& received, const Matrix& pilot) {
  // H_hat = Y T^T (T T^T)^{-1}, computed as a solve against the Gram matrix.
  Matrix gram = pilot * pilot.transpose();
  Matrix rhs = pilot * received.transpose();  // (T T^T) X = T Y^T, X = H_hat^T
  return solve_linear(gram, rhs).transpose();
}

Matrix ls_channel_estimate(const Matrix& h_true, const Matrix& pilot, RandomSource& rng) {
  return ls_estimate_from_pilot(receive_pilot(h_true, pilot, rng), pilot);
}

double calibrate_tx_scale(const ChannelModel& model, const PlantModel& plant,
                          const SensorTopology& topology, const ActivationModel& activation,
                          int horizon, RandomSource& rng) {
  if (horizon < 1) {
    throw InvalidInputError("calibrate_tx_scale: horizon must be >= 1");
  }
  const int m_count = topology.sensor_count();
  RandomSource state_rng = rng.derive(1);
  RandomSource act_rng = rng.derive(2);
  RandomSource chan_rng = rng.derive(3);

  // Calibration states are drawn at the plant-noise scale, x ~ N(x0, W),
  // one fresh draw per slot. Anchoring the SNR to the per-slot noise
  // response keeps the target meaningful for unstable plants, whose
  // trajectory power grows without bound and would otherwise drive the
  // scale to zero.
  double accum = 0.0;
  for (int t = 0; t < horizon; ++t) {
    Vector x = sample_gaussian(state_rng, plant.x0, plant.w_cov);
    auto delta = sample_bernoulli_vector(act_rng, activation.p, m_count);
    ChannelRealization real = sample_channels(model, m_count, chan_rng);
    Vector received = Vector::Zero(model.n_r);
    for (int m = 0; m < m_count; ++m) {
      if (delta[static_cast<std::size_t>(m)]) {
        received.noalias() += real.h_mats[static_cast<std::size_t>(m)] *
                              raw_signal(topology.c_mats[static_cast<std::size_t>(m)], x);
      }
    }
    accum += received.squaredNorm();
  }
  double measured = accum / (static_cast<double>(horizon) * static_cast<double>(model.n_r));
  if (!(measured > 0.0)) {
    throw CalibrationError("calibrate_tx_scale: measured signal power is zero");
  }
  double target = std::pow(10.0, model.snr_db / 10.0);
  return std::sqrt(target / measured);
}

}  // namespace remest
