#pragma once

#include "remest/numerics.hpp"
#include "remest/plant.hpp"

#include <vector>

/// MIMO fading generation, analog aggregation over the air, pilot-based
/// least-squares channel estimation, and SNR calibration of the transmit
/// amplitude scale.
namespace remest {

enum class ElementDist { kRayleigh, kGaussian };

/// Per-element fading distribution plus antenna counts and the transmit
/// amplitude scale applied to every data signal. Receiver noise is fixed
/// at N(0, I), so SNR is set through tx_scale alone.
struct ChannelModel {
  Eigen::Index n_r = 1;
  Eigen::Index n_t = 1;
  ElementDist dist = ElementDist::kRayleigh;
  double rayleigh_scale = 1.0;  // kRayleigh
  double gauss_mean = 0.0;      // kGaussian
  double gauss_var = 1.0;       // kGaussian, > 0
  double snr_db = 0.0;
  double tx_scale = 1.0;  // calibrated amplitude scale, > 0

  void validate() const;
};

/// Per-sensor channel gains for one timeslot.
struct ChannelRealization {
  std::vector<Matrix> h_mats;  // M matrices, each N_r x N_t
};

/// Dedicated training matrices, one per sensor, transmitted in orthogonal
/// (time-multiplexed) pilot slots. ||T_m||_F^2 == pilot_power.
struct PilotScheme {
  std::vector<Matrix> pilot_mats;
  double pilot_power = 0.0;

  /// Identity pilots sqrt(pilot_power / n_t) * I for every sensor.
  static PilotScheme identity_pilots(int m_sensors, Eigen::Index n_t, double pilot_power);
};

/// One independent draw of all M sensor channels.
ChannelRealization sample_channels(const ChannelModel& model, int m_sensors, RandomSource& rng);

/// Received signal y = sum_m delta_m H_m (tx_scale s_m) + v, v ~ N(0, I).
Vector aggregate(const ChannelRealization& real, const std::vector<std::uint8_t>& activations,
                 const std::vector<Vector>& signals, double tx_scale, RandomSource& rng);

/// Effective CSI H(t) = sum_m delta_m tx_scale H_m C_m.
Matrix effective_csi(const ChannelRealization& real, const std::vector<std::uint8_t>& activations,
                     const SensorTopology& topology, double tx_scale);

/// Noisy pilot observation Y = H T + V with i.i.d. N(0,1) noise.
Matrix receive_pilot(const Matrix& h_true, const Matrix& pilot, RandomSource& rng);

/// Estimator-side LS solve H_hat = Y T^T (T T^T)^{-1}.
Matrix ls_estimate_from_pilot(const Matrix& received, const Matrix& pilot);

/// Full pilot round: H_hat = (H T + V) T^T (T T^T)^{-1}.
Matrix ls_channel_estimate(const Matrix& h_true, const Matrix& pilot, RandomSource& rng);

/// Amplitude scale beta such that raw-measurement transmissions from a
/// fresh plant trajectory meet the target SNR on average:
///   E[ ||sum_m delta_m H_m (beta s_m)||^2 ] / N_r = 10^(snr_db/10)
/// with unit per-antenna noise power. Averaged over `horizon` slots.
double calibrate_tx_scale(const ChannelModel& model, const PlantModel& plant,
                          const SensorTopology& topology, const ActivationModel& activation,
                          int horizon, RandomSource& rng);

}  // namespace remest
