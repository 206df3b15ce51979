#include "remest/estimation.hpp"

#include <Eigen/Cholesky>

#include <limits>

namespace remest {

namespace {

Matrix symmetrized(Matrix m) {
  m = 0.5 * (m + m.transpose()).eval();
  return m;
}

}  // namespace

FilterState kalman_predict(const FilterState& fs, const PlantModel& plant) {
  const auto s = plant.state_dim();
  if (fs.x_est.size() != s || fs.p_est.rows() != s || fs.p_est.cols() != s) {
    throw InvalidInputError("kalman_predict: dimension mismatch");
  }
  FilterState out = fs;
  out.x_pred = plant.a_dyn * fs.x_est;
  out.p_pred = symmetrized(plant.a_dyn * fs.p_est * plant.a_dyn.transpose() + plant.w_cov);
  return out;
}

Matrix kalman_gain(const Matrix& p_pred, const Matrix& h_eff) {
  if (p_pred.rows() != p_pred.cols() || h_eff.cols() != p_pred.rows()) {
    throw InvalidInputError("kalman_gain: dimension mismatch");
  }
  Matrix cross = p_pred * h_eff.transpose();  // S x N_r
  Matrix inner = h_eff * cross + Matrix::Identity(h_eff.rows(), h_eff.rows());
  if (!inner.allFinite()) {
    return Matrix::Constant(p_pred.rows(), h_eff.rows(),
                            std::numeric_limits<double>::quiet_NaN());
  }
  Eigen::LDLT<Matrix> ldlt(symmetrized(inner));
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    // Cannot occur for PSD P^f plus identity, but guarded. A filter that
    // has already diverged to astronomical covariances is exempt: it keeps
    // running on garbage values (only its timing is meaningful).
    if (inner.cwiseAbs().maxCoeff() < 1e8) {
      throw SingularMatrixError("kalman_gain: innovation covariance not positive definite");
    }
  }
  return ldlt.solve(cross.transpose()).transpose();
}

FilterState kalman_update(const FilterState& fs, const Vector& y, const Matrix& h_eff) {
  if (h_eff.cols() != fs.x_pred.size() || y.size() != h_eff.rows()) {
    throw InvalidInputError("kalman_update: dimension mismatch");
  }
  Matrix k = kalman_gain(fs.p_pred, h_eff);
  Innovation innov{y - h_eff * fs.x_pred};
  FilterState out = fs;
  out.x_est = fs.x_pred + k * innov.value;
  Matrix closed = Matrix::Identity(fs.p_pred.rows(), fs.p_pred.cols()) - k * h_eff;
  out.p_est = symmetrized(closed * fs.p_pred * closed.transpose() + k * k.transpose());
  return out;
}

Vector constant_gain_update(const Vector& x_pred, const Vector& y, const ConstantGain& gain) {
  if (gain.k.rows() != x_pred.size() || gain.k.cols() != y.size()) {
    throw InvalidInputError("constant_gain_update: dimension mismatch");
  }
  return x_pred + gain.k * y;
}

Vector constant_gain_predict(const Vector& x_est, const PlantModel& plant) {
  if (x_est.size() != plant.state_dim()) {
    throw InvalidInputError("constant_gain_predict: dimension mismatch");
  }
  return plant.a_dyn * x_est;
}

Matrix constant_gain_cov_step(const Matrix& p_pred, const ConstantGain& gain, const Matrix& h_eff,
                              const PlantModel& plant) {
  const auto s = plant.state_dim();
  if (p_pred.rows() != s || p_pred.cols() != s || gain.k.rows() != s ||
      h_eff.cols() != s || gain.k.cols() != h_eff.rows()) {
    throw InvalidInputError("constant_gain_cov_step: dimension mismatch");
  }
  Matrix closed = plant.a_dyn * (Matrix::Identity(s, s) - gain.k * h_eff);
  Matrix ak = plant.a_dyn * gain.k;
  return symmetrized(closed * p_pred * closed.transpose() + ak * ak.transpose() + plant.w_cov);
}

}  // namespace remest
