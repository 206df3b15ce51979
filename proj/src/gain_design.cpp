#include "remest/gain_design.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace remest {

namespace {

double frob_inner(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

struct BatchEval {
  double f0 = 0.0;
  double f1 = 0.0;
  Matrix g0;
  Matrix g1;
};

}  // namespace

double SurrogateQuadratic::value(const Matrix& k) const {
  return const_term + frob_inner(grad_term, k) + curvature * k.squaredNorm();
}

Matrix SurrogateQuadratic::unconstrained_max() const { return grad_term / (-2.0 * curvature); }

void CsscaConfig::validate() const {
  if (total_iters < 0) {
    throw InvalidInputError("CsscaConfig: total_iters must be >= 0");
  }
  if (!auto_curvature && (!(eps0 < 0.0) || !(eps1 < 0.0))) {
    throw InvalidInputError("CsscaConfig: eps0 and eps1 must be < 0");
  }
  if (batch_size < 1) {
    throw InvalidInputError("CsscaConfig: batch_size must be >= 1");
  }
  if (feasibility_margin < 0.0) {
    throw InvalidInputError("CsscaConfig: feasibility_margin must be >= 0");
  }
  if (k_init.size() == 0) {
    throw InvalidInputError("CsscaConfig: k_init not set");
  }
  if (step_rule == StepRule::kDiminishing && !(diminishing_exponent > 0.0)) {
    throw InvalidInputError("CsscaConfig: diminishing exponent must be > 0");
  }
  if (step_rule == StepRule::kArmijo &&
      (!(armijo_shrink > 0.0 && armijo_shrink < 1.0) || !(armijo_slope > 0.0))) {
    throw InvalidInputError("CsscaConfig: bad Armijo parameters");
  }
}

Matrix sample_effective_csi(const ChannelModel& channel, const SensorTopology& topology,
                            const ActivationModel& activation, RandomSource& rng) {
  const int m_count = topology.sensor_count();
  auto delta = sample_bernoulli_vector(rng, activation.p, m_count);
  ChannelRealization real = sample_channels(channel, m_count, rng);
  return effective_csi(real, delta, topology, channel.tx_scale);
}

std::pair<double, double> estimate_contraction(const Matrix& k, const ChannelModel& channel,
                                               const SensorTopology& topology,
                                               const ActivationModel& activation, int n_samples,
                                               RandomSource& rng) {
  if (n_samples < 1) {
    throw InvalidInputError("estimate_contraction: n_samples must be >= 1");
  }
  const Eigen::Index s = topology.state_dim();
  const Matrix eye = Matrix::Identity(s, s);
  double sum = 0.0, sum_sq = 0.0;
  for (int n = 0; n < n_samples; ++n) {
    Matrix h = sample_effective_csi(channel, topology, activation, rng);
    double v = (eye - k * h).squaredNorm();
    sum += v;
    sum_sq += v * v;
  }
  double mean = sum / n_samples;
  double var = n_samples > 1 ? (sum_sq - n_samples * mean * mean) / (n_samples - 1) : 0.0;
  double std_err = std::sqrt(std::max(var, 0.0) / n_samples);
  return {mean, std_err};
}

double drift_bound(double p_pred_trace, const Matrix& k, const PlantModel& plant, int n_r,
                   double contraction_like) {
  double a_norm = spectral_norm(plant.a_dyn);
  double k_norm = k.isZero(0.0) ? 0.0 : spectral_norm(k);
  return n_r * a_norm * a_norm * k_norm * k_norm + plant.w_cov.trace() +
         (contraction_like - 1.0) * p_pred_trace;
}

StabilityReport stability_report(const Matrix& k, const PlantModel& plant,
                                 const ChannelModel& channel, const SensorTopology& topology,
                                 const ActivationModel& activation, int n_samples,
                                 RandomSource& rng) {
  auto [mean, std_err] = estimate_contraction(k, channel, topology, activation, n_samples, rng);
  double a_norm_sq = std::pow(spectral_norm(plant.a_dyn), 2);
  StabilityReport report;
  report.contraction = mean;
  report.contraction_std_err = std_err;
  report.threshold = 1.0 / a_norm_sq;
  report.stable = mean <= report.threshold;
  double denom = 1.0 - a_norm_sq * mean;
  if (denom > 0.0) {
    double k_norm = k.isZero(0.0) ? 0.0 : spectral_norm(k);
    report.mse_bound =
        (plant.w_cov.trace() + k.cols() * a_norm_sq * k_norm * k_norm) / denom;
  } else {
    report.mse_bound = std::numeric_limits<double>::infinity();
  }
  return report;
}

SampleEval sample_value_and_grads(const Matrix& k, const PlantModel& plant,
                                  const Matrix& h_sample) {
  const Eigen::Index s = k.rows();
  const double n_r = static_cast<double>(k.cols());
  const double a_norm_sq = std::pow(spectral_norm(plant.a_dyn), 2);
  const double tr_w = plant.w_cov.trace();

  Matrix err = Matrix::Identity(s, s) - k * h_sample;  // I - K H
  double e = err.squaredNorm();
  Matrix grad_e = -2.0 * err * h_sample.transpose();  // d e / d K

  SampleEval out;
  out.f1 = 1.0 / a_norm_sq - e;
  out.g1 = -grad_e;

  // Spectral-norm part of the denominator and its subgradient.
  Eigen::JacobiSVD<Matrix> svd(k, Eigen::ComputeThinU | Eigen::ComputeThinV);
  double sigma1 = svd.singularValues()(0);
  Matrix grad_sigma_sq;
  if (sigma1 > 0.0) {
    grad_sigma_sq = 2.0 * sigma1 * svd.matrixU().col(0) * svd.matrixV().col(0).transpose();
  } else {
    grad_sigma_sq = Matrix::Zero(k.rows(), k.cols());
  }

  double num = 1.0 - a_norm_sq * e;
  double den = tr_w + n_r * a_norm_sq * sigma1 * sigma1;
  Matrix grad_num = -a_norm_sq * grad_e;
  Matrix grad_den = n_r * a_norm_sq * grad_sigma_sq;
  out.f0 = num / den;
  out.g0 = (grad_num * den - num * grad_den) / (den * den);
  return out;
}

SurrogateQuadratic surrogate_update(const SurrogateQuadratic& prev, const Matrix& k_r,
                                    double f_val, const Matrix& grad, double tau, double eps) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw InvalidInputError("surrogate_update: tau outside (0,1]");
  }
  if (!(eps < 0.0)) {
    throw InvalidInputError("surrogate_update: eps must be < 0");
  }
  if (std::abs(prev.curvature - eps) > 1e-12 * std::abs(eps)) {
    throw InvalidInputError("surrogate_update: curvature drift, prev was built with another eps");
  }
  // New quadratic f + <g, K - K_r> + eps ||K - K_r||^2 in expanded form.
  double new_const = f_val - frob_inner(grad, k_r) + eps * k_r.squaredNorm();
  Matrix new_grad = grad - 2.0 * eps * k_r;

  SurrogateQuadratic out;
  out.curvature = eps;
  out.const_term = (1.0 - tau) * prev.const_term + tau * new_const;
  out.grad_term = (1.0 - tau) * prev.grad_term + tau * new_grad;
  return out;
}

SubproblemSolution solve_subproblem(const SurrogateQuadratic& s0, const SurrogateQuadratic& s1,
                                    double margin) {
  if (!(s0.curvature < 0.0) || !(s1.curvature < 0.0)) {
    throw InvalidInputError("solve_subproblem: surrogates must be strictly concave");
  }
  Matrix k_free = s0.unconstrained_max();
  if (s1.value(k_free) >= margin) {
    return {std::move(k_free), false};
  }
  Matrix k_restore = s1.unconstrained_max();
  double s1_max = s1.value(k_restore);
  if (s1_max < margin) {
    return {std::move(k_restore), true};
  }

  // KKT stationarity: K(lambda) = -(g0 + lambda g1) / (2 (c0 + lambda c1)).
  // s1(K(lambda)) increases from s1(k_free) < margin to s1_max >= margin,
  // so bisection on lambda pins s1 == margin.
  auto k_of = [&](double lambda) -> Matrix {
    return -(s0.grad_term + lambda * s1.grad_term) /
           (2.0 * (s0.curvature + lambda * s1.curvature));
  };
  double lo = 0.0, hi = 1.0;
  int guard = 0;
  while (s1.value(k_of(hi)) < margin) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 120) {
      // margin equals s1_max up to round-off; the restoration point attains it
      return {std::move(k_restore), false};
    }
  }
  Matrix k_mid;
  for (int iter = 0; iter < 200; ++iter) {
    double mid = 0.5 * (lo + hi);
    k_mid = k_of(mid);
    double v = s1.value(k_mid);
    if (std::abs(v - margin) <= 1e-10) {
      return {std::move(k_mid), false};
    }
    (v < margin ? lo : hi) = mid;
    if (hi - lo <= 1e-15 * std::max(1.0, hi)) {
      break;
    }
  }
  return {k_of(hi), false};
}

namespace {

BatchEval evaluate_batch(const Matrix& k, const PlantModel& plant,
                         const std::vector<Matrix>& h_batch) {
  BatchEval out;
  out.g0 = Matrix::Zero(k.rows(), k.cols());
  out.g1 = Matrix::Zero(k.rows(), k.cols());
  for (const Matrix& h : h_batch) {
    SampleEval eval = sample_value_and_grads(k, plant, h);
    out.f0 += eval.f0;
    out.f1 += eval.f1;
    out.g0 += eval.g0;
    out.g1 += eval.g1;
  }
  double inv = 1.0 / static_cast<double>(h_batch.size());
  out.f0 *= inv;
  out.f1 *= inv;
  out.g0 *= inv;
  out.g1 *= inv;
  return out;
}

double batch_f0(const Matrix& k, const PlantModel& plant, const std::vector<Matrix>& h_batch) {
  double f0 = 0.0;
  for (const Matrix& h : h_batch) {
    f0 += sample_value_and_grads(k, plant, h).f0;
  }
  return f0 / static_cast<double>(h_batch.size());
}

}  // namespace

CsscaResult optimize_gain(const CsscaConfig& cfg, const PlantModel& plant,
                          const ChannelModel& channel, const SensorTopology& topology,
                          const ActivationModel& activation, RandomSource& rng) {
  cfg.validate();
  channel.validate();
  CsscaResult result;
  result.k_star = cfg.k_init;
  if (cfg.total_iters == 0) {
    return result;
  }

  Matrix k = cfg.k_init;
  RandomSource sample_rng = rng.derive(0x5CA);

  auto draw_batch = [&]() {
    std::vector<Matrix> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch_size));
    for (int b = 0; b < cfg.batch_size; ++b) {
      batch.push_back(sample_effective_csi(channel, topology, activation, sample_rng));
    }
    return batch;
  };

  double eps0 = cfg.eps0;
  double eps1 = cfg.eps1;
  if (cfg.auto_curvature) {
    double m2 = 0.0;
    const int probe = 100;
    for (int n = 0; n < probe; ++n) {
      m2 += sample_effective_csi(channel, topology, activation, sample_rng).squaredNorm();
    }
    m2 /= probe;
    eps0 = eps1 = -std::max(m2, 1e-12);
  }

  // Warm start: surrogates equal the sampled quadratics at K^0 (tau = 1).
  std::vector<Matrix> batch = draw_batch();
  BatchEval eval = evaluate_batch(k, plant, batch);
  SurrogateQuadratic zero0{0.0, Matrix::Zero(k.rows(), k.cols()), eps0};
  SurrogateQuadratic zero1{0.0, Matrix::Zero(k.rows(), k.cols()), eps1};
  SurrogateQuadratic sbar0 = surrogate_update(zero0, k, eval.f0, eval.g0, 1.0, eps0);
  SurrogateQuadratic sbar1 = surrogate_update(zero1, k, eval.f1, eval.g1, 1.0, eps1);

  result.trace.reserve(static_cast<std::size_t>(cfg.total_iters));
  for (int r = 1; r <= cfg.total_iters; ++r) {
    batch = draw_batch();
    eval = evaluate_batch(k, plant, batch);

    // Repeated top singular value makes the spectral subgradient an
    // arbitrary pick among triples; count those iterations.
    if (k.rows() > 1 && k.cols() > 1) {
      Eigen::JacobiSVD<Matrix> svd(k);
      if (svd.singularValues()(0) - svd.singularValues()(1) < 1e-8) {
        ++result.degenerate_top_sv;
      }
    }

    double tau = 1.0 / std::pow(static_cast<double>(r) + 1.0, cfg.diminishing_exponent);
    SubproblemSolution sol;
    SurrogateQuadratic next0, next1;
    if (cfg.step_rule == StepRule::kDiminishing) {
      next0 = surrogate_update(sbar0, k, eval.f0, eval.g0, tau, eps0);
      next1 = surrogate_update(sbar1, k, eval.f1, eval.g1, tau, eps1);
      sol = solve_subproblem(next0, next1, cfg.feasibility_margin);
    } else {
      // Backtracking on the surrogate mixing weight: shrink tau until the
      // batch objective shows sufficient increase along the resulting step.
      double tau_floor = 1.0 / (static_cast<double>(r) + 1.0);
      tau = 1.0;
      while (true) {
        next0 = surrogate_update(sbar0, k, eval.f0, eval.g0, tau, eps0);
        next1 = surrogate_update(sbar1, k, eval.f1, eval.g1, tau, eps1);
        sol = solve_subproblem(next0, next1, cfg.feasibility_margin);
        double predicted = frob_inner(eval.g0, sol.k - k);
        if (batch_f0(sol.k, plant, batch) >=
                eval.f0 + cfg.armijo_slope * tau * predicted ||
            tau * cfg.armijo_shrink < tau_floor) {
          break;
        }
        tau *= cfg.armijo_shrink;
      }
    }
    sbar0 = next0;
    sbar1 = next1;

    result.trace.push_back(
        {r, eval.f0, eval.f1, (sol.k - k).norm(), !sol.restored});
    k = sol.k;
  }
  result.k_star = k;
  return result;
}

}  // namespace remest
