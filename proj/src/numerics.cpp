#include "remest/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

namespace remest {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed), state_(mix64(seed ^ kGolden)) {}

RandomSource RandomSource::derive(std::uint64_t stream_id) const {
  // Pure in (construction seed, stream_id): deriving the same id twice
  // yields the same child regardless of draws on this source.
  std::uint64_t child = mix64(seed_ + kGolden * (stream_id + 1));
  return RandomSource(child);
}

std::uint64_t RandomSource::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double RandomSource::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomSource::gaussian() {
  // Box-Muller, trigonometric form. u1 shifted into (0,1] so the log is finite.
  double u1 = 1.0 - uniform01();
  double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) {
    throw InvalidInputError(std::string(what) + ": non-finite entries");
  }
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) {
    throw InvalidInputError("spectral_norm: empty matrix");
  }
  require_finite(a, "spectral_norm");
  return a.jacobiSvd().singularValues()(0);
}

double frobenius_norm(const Matrix& a) {
  if (a.size() == 0) {
    throw InvalidInputError("frobenius_norm: empty matrix");
  }
  require_finite(a, "frobenius_norm");
  return a.norm();
}

Matrix solve_linear(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols()) {
    throw InvalidInputError("solve_linear: matrix not square");
  }
  if (a.rows() != b.rows()) {
    throw InvalidInputError("solve_linear: dimension mismatch");
  }
  require_finite(a, "solve_linear");
  require_finite(b, "solve_linear");
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  // Rank-revealing pivoted QR: the diagonal of R is non-increasing in
  // magnitude, so its extreme ratio estimates the condition number.
  const auto& rdiag = qr.matrixR().diagonal();
  double rmax = rdiag.cwiseAbs().maxCoeff();
  double rmin = rdiag.cwiseAbs().minCoeff();
  if (!(rmin > 0.0) || rmax / rmin > 1e12) {
    throw SingularMatrixError("solve_linear: condition estimate above 1e12");
  }
  Matrix x = qr.solve(b);
  // One refinement pass; the systems here are tiny, this is nearly free.
  x += qr.solve(b - a * x);
  return x;
}

Matrix psd_factor(const Matrix& cov) {
  if (cov.rows() != cov.cols()) {
    throw InvalidInputError("psd_factor: covariance not square");
  }
  require_finite(cov, "psd_factor");
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.info() != Eigen::Success) {
    throw InvalidInputError("psd_factor: eigendecomposition failed");
  }
  Vector lambda = es.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) < -1e-10) {
      throw InvalidInputError("psd_factor: covariance has eigenvalue below -1e-10");
    }
    if (lambda(i) < 0.0) {
      lambda(i) = 0.0;  // round-off from covariance propagation
    }
  }
  return es.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
}

Vector sample_gaussian(RandomSource& rng, const Vector& mean, const Matrix& cov) {
  if (cov.rows() != mean.size()) {
    throw InvalidInputError("sample_gaussian: mean/cov dimension mismatch");
  }
  Matrix factor = psd_factor(cov);
  Vector z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z(i) = rng.gaussian();
  }
  return mean + factor * z;
}

Matrix sample_standard_normal(RandomSource& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      out(i, j) = rng.gaussian();
    }
  }
  return out;
}

Matrix sample_rayleigh_matrix(RandomSource& rng, double scale, Eigen::Index rows,
                              Eigen::Index cols) {
  if (scale < 0.0 || !std::isfinite(scale)) {
    throw InvalidInputError("sample_rayleigh_matrix: negative scale");
  }
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      // Inverse CDF with u in (0,1].
      double u = 1.0 - rng.uniform01();
      out(i, j) = scale * std::sqrt(-2.0 * std::log(u));
    }
  }
  return out;
}

std::vector<std::uint8_t> sample_bernoulli_vector(RandomSource& rng, double p, int m) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidInputError("sample_bernoulli_vector: p outside [0,1]");
  }
  std::vector<std::uint8_t> out(static_cast<std::size_t>(m));
  for (auto& bit : out) {
    bit = rng.uniform01() < p ? 1 : 0;
  }
  return out;
}

}  // namespace remest
