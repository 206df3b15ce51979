#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

/// Dense real-matrix algebra and seeded random sampling shared by every
/// other component. Matrices are plain Eigen dynamic-size doubles; all
/// randomness flows through RandomSource so that a (seed, stream) pair
/// pins every draw in the system.
namespace remest {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SingularMatrixError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Splittable counter-style PRNG (SplitMix64 core).
///
/// Two sources constructed from the same seed produce bit-identical
/// sequences. derive(stream_id) is a pure function of the construction
/// seed, so substreams can be addressed deterministically, e.g. one
/// substream per (purpose, timeslot, run) without coordination.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed);

  /// Child source addressed by stream_id; independent of draws made on
  /// this source so far.
  RandomSource derive(std::uint64_t stream_id) const;

  std::uint64_t next_u64();

  /// Uniform on [0, 1).
  double uniform01();

  /// Standard normal via Box-Muller; consumes exactly two uniforms.
  double gaussian();

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;   // construction seed, used only by derive()
  std::uint64_t state_;  // walking state
};

/// Largest singular value. Relative accuracy better than 1e-10.
double spectral_norm(const Matrix& a);

/// sqrt(sum of squared entries).
double frobenius_norm(const Matrix& a);

/// Solve a x = b for square, numerically nonsingular a. Throws
/// SingularMatrixError when the estimated condition number exceeds 1e12.
Matrix solve_linear(const Matrix& a, const Matrix& b);

/// One draw from N(mean, cov) through a symmetric eigendecomposition of
/// cov. Eigenvalues in [-1e-10, 0] are clamped to zero; anything below
/// -1e-10 is rejected as not PSD.
Vector sample_gaussian(RandomSource& rng, const Vector& mean, const Matrix& cov);

/// Matrix of i.i.d. standard normals.
Matrix sample_standard_normal(RandomSource& rng, Eigen::Index rows, Eigen::Index cols);

/// Matrix of i.i.d. Rayleigh(scale) entries, density (x/scale^2) exp(-x^2 / 2 scale^2).
Matrix sample_rayleigh_matrix(RandomSource& rng, double scale, Eigen::Index rows,
                              Eigen::Index cols);

/// m i.i.d. Bernoulli(p) draws as 0/1 bytes.
std::vector<std::uint8_t> sample_bernoulli_vector(RandomSource& rng, double p, int m);

/// Symmetric eigendecomposition factor L with L L^T = cov, for PSD cov
/// under the same clamping policy as sample_gaussian. Cached by callers
/// that sample from a fixed covariance in a loop.
Matrix psd_factor(const Matrix& cov);

void require_finite(const Matrix& a, const char* what);

}  // namespace remest
