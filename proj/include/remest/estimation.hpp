#pragma once

#include "remest/numerics.hpp"
#include "remest/plant.hpp"

/// Kalman filtering with unit receiver-noise covariance, the constant-gain
/// CSI-free estimator, and the constant-gain error-covariance recursion
/// used for offline validation.
namespace remest {

/// Estimator state: posterior and prior estimate/covariance pairs.
/// Covariances are kept symmetric; updates re-symmetrize.
struct FilterState {
  std::int64_t t = 0;
  Vector x_est;   // posterior state estimate
  Vector x_pred;  // prior (predicted) state estimate
  Matrix p_est;   // posterior error covariance
  Matrix p_pred;  // prior error covariance
};

/// Fixed filtering gain K in R^{S x N_r}, designed offline.
struct ConstantGain {
  Matrix k;
};

/// Innovation y - H x_pred.
struct Innovation {
  Vector value;
};

/// Prediction step: x_pred = A x_est, p_pred = A p_est A^T + W.
FilterState kalman_predict(const FilterState& fs, const PlantModel& plant);

/// Optimal gain K = P^f H^T (H P^f H^T + I)^{-1} for unit noise covariance.
/// Non-finite inputs yield a non-finite gain rather than an error, so a
/// diverged filter keeps running (only its timing is meaningful then).
Matrix kalman_gain(const Matrix& p_pred, const Matrix& h_eff);

/// Measurement update with the Joseph-style covariance form
/// P = (I - K H) P^f (I - K H)^T + K K^T.
FilterState kalman_update(const FilterState& fs, const Vector& y, const Matrix& h_eff);

/// Constant-gain estimate x_pred + K y.
Vector constant_gain_update(const Vector& x_pred, const Vector& y, const ConstantGain& gain);

/// Constant-gain prediction A x_est.
Vector constant_gain_predict(const Vector& x_est, const PlantModel& plant);

/// One step of the prior-covariance recursion under a fixed gain:
/// P^f(t+1) = A (I-KH) P^f (I-KH)^T A^T + A K K^T A^T + W, symmetrized.
Matrix constant_gain_cov_step(const Matrix& p_pred, const ConstantGain& gain, const Matrix& h_eff,
                              const PlantModel& plant);

}  // namespace remest
