#pragma once

#include "remest/channel.hpp"
#include "remest/estimation.hpp"
#include "remest/numerics.hpp"
#include "remest/plant.hpp"

#include <vector>

/// Offline analysis and synthesis of the constant filtering gain: the
/// Lyapunov drift bound, the stability condition with its MSE bound, and
/// the stochastic successive convex approximation optimizer that designs
/// the gain from sampled channel realizations.
namespace remest {

/// Outcome of the Monte-Carlo stability check for a fixed gain.
///
/// `contraction` estimates E[ ||I - K H(t)||_F^2 ]; the system is declared
/// stable when it does not exceed `threshold` = 1 / ||A||^2. When the
/// bound denominator 1 - ||A||^2 * contraction is positive, `mse_bound`
/// caps the long-run average trace of the prior error covariance;
/// otherwise it is +infinity.
struct StabilityReport {
  double contraction = 0.0;
  double contraction_std_err = 0.0;
  double threshold = 0.0;
  bool stable = false;
  double mse_bound = 0.0;
};

/// Concave quadratic in expanded form:
///   f(K) = const_term + <grad_term, K>_F + curvature * ||K||_F^2
/// with curvature < 0. Closed under convex combination at fixed curvature,
/// which is what keeps the running surrogates exact.
struct SurrogateQuadratic {
  double const_term = 0.0;
  Matrix grad_term;
  double curvature = -1.0;

  double value(const Matrix& k) const;
  Matrix unconstrained_max() const;  // -grad / (2 curvature)
};

enum class StepRule { kDiminishing, kArmijo };

struct CsscaConfig {
  int total_iters = 2000;
  // Surrogate curvatures. With auto_curvature (the default) both are set
  // before the loop to -E[||H||_F^2] estimated from a probe batch, which
  // keeps the proximal steps commensurate with the gain scale 1/tx_scale;
  // a fixed curvature is hopeless across SNR calibrations. Explicit values
  // here (< 0) take precedence.
  double eps0 = -1.0;
  double eps1 = -1.0;
  bool auto_curvature = true;
  StepRule step_rule = StepRule::kDiminishing;
  double diminishing_exponent = 0.6;  // tau_r = 1 / (r+1)^exponent
  double armijo_shrink = 0.5;
  double armijo_slope = 0.1;
  int batch_size = 1;
  double feasibility_margin = 1e-6;  // xi; constraint enforced as f1_bar >= xi
  Matrix k_init;

  void validate() const;
};

struct CsscaIterRecord {
  int r = 0;
  double f0_hat = 0.0;     // batch objective sample at K^r
  double f1_hat = 0.0;     // batch constraint sample at K^r
  double step_norm = 0.0;  // ||K^{r+1} - K^r||_F
  bool feasible = true;    // false when the step came from feasibility restoration
};

struct CsscaResult {
  Matrix k_star;
  std::vector<CsscaIterRecord> trace;
  int degenerate_top_sv = 0;  // iterations where sigma_1(K) had a < 1e-8 gap
};

/// One per-slot sampled objective/constraint evaluation at gain k for a
/// single effective-CSI realization h_sample.
struct SampleEval {
  double f0 = 0.0;
  Matrix g0;
  double f1 = 0.0;
  Matrix g1;
};

/// Draw one effective CSI H(t) = sum_m delta_m tx_scale H_m C_m.
Matrix sample_effective_csi(const ChannelModel& channel, const SensorTopology& topology,
                            const ActivationModel& activation, RandomSource& rng);

/// Monte-Carlo mean and standard error of ||I - K H(t)||_F^2.
std::pair<double, double> estimate_contraction(const Matrix& k, const ChannelModel& channel,
                                               const SensorTopology& topology,
                                               const ActivationModel& activation, int n_samples,
                                               RandomSource& rng);

/// Drift bound N_r ||A||^2 ||K||^2 + Tr(W) + (contraction_like - 1) Tr(P^f),
/// where contraction_like estimates E[ Tr((A - A K H)^T (A - A K H)) ].
double drift_bound(double p_pred_trace, const Matrix& k, const PlantModel& plant, int n_r,
                   double contraction_like);

StabilityReport stability_report(const Matrix& k, const PlantModel& plant,
                                 const ChannelModel& channel, const SensorTopology& topology,
                                 const ActivationModel& activation, int n_samples,
                                 RandomSource& rng);

/// Sampled objective f0, constraint f1 and their gradients at one CSI draw.
/// ||K|| in f0's denominator is the spectral norm; its subgradient uses the
/// top singular triple (an arbitrary triple when sigma_1 is repeated).
SampleEval sample_value_and_grads(const Matrix& k, const PlantModel& plant,
                                  const Matrix& h_sample);

/// Convex combination (1-tau) * prev + tau * (f + <g, K - K_r> + eps ||K - K_r||^2),
/// re-expanded so the curvature stays exactly eps.
SurrogateQuadratic surrogate_update(const SurrogateQuadratic& prev, const Matrix& k_r,
                                    double f_val, const Matrix& grad, double tau, double eps);

struct SubproblemSolution {
  Matrix k;
  bool restored = false;  // true when max f1_bar < xi and the solver fell back to argmax f1_bar
};

/// Maximize s0 subject to s1 >= margin. Returns the unconstrained maximizer
/// when it is feasible, else the KKT point with s1 == margin found by
/// bisection on the multiplier; when even max s1 < margin the step is a
/// feasibility restoration to argmax s1.
SubproblemSolution solve_subproblem(const SurrogateQuadratic& s0, const SurrogateQuadratic& s1,
                                    double margin);

/// Run the full surrogate optimization loop from cfg.k_init.
CsscaResult optimize_gain(const CsscaConfig& cfg, const PlantModel& plant,
                          const ChannelModel& channel, const SensorTopology& topology,
                          const ActivationModel& activation, RandomSource& rng);

}  // namespace remest
