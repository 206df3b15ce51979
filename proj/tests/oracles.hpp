#pragma once

// Test-only oracles, independent of the library implementation paths they
// check: spectral norm by power iteration, dense inverse via the adjugate,
// central finite differences, and small statistics helpers.

#include "remest/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace oracles {

using remest::Matrix;
using remest::Vector;

/// Largest singular value via power iteration on A^T A, run to 1e-12.
inline double power_iteration_spectral_norm(const Matrix& a) {
  Matrix gram = a.transpose() * a;
  Vector v = Vector::Ones(gram.rows());
  v /= v.norm();
  double lambda = 0.0;
  for (int iter = 0; iter < 100000; ++iter) {
    Vector w = gram * v;
    double next = w.norm();
    if (next == 0.0) {
      return 0.0;
    }
    w /= next;
    if (std::abs(next - lambda) <= 1e-12 * std::max(next, 1.0)) {
      return std::sqrt(next);
    }
    lambda = next;
    v = w;
  }
  return std::sqrt(lambda);
}

inline double laplace_det(const Matrix& m) {
  const auto n = m.rows();
  if (n == 1) return m(0, 0);
  double det = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    Matrix minor(n - 1, n - 1);
    for (Eigen::Index r = 1; r < n; ++r) {
      Eigen::Index cc = 0;
      for (Eigen::Index c = 0; c < n; ++c) {
        if (c == j) continue;
        minor(r - 1, cc++) = m(r, c);
      }
    }
    det += (j % 2 == 0 ? 1.0 : -1.0) * m(0, j) * laplace_det(minor);
  }
  return det;
}

/// Explicit inverse through the adjugate (cofactor) matrix.
inline Matrix adjugate_inverse(const Matrix& m) {
  const auto n = m.rows();
  Matrix adj(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Matrix minor(n - 1, n - 1);
      Eigen::Index rr = 0;
      for (Eigen::Index r = 0; r < n; ++r) {
        if (r == i) continue;
        Eigen::Index cc = 0;
        for (Eigen::Index c = 0; c < n; ++c) {
          if (c == j) continue;
          minor(rr, cc++) = m(r, c);
        }
        ++rr;
      }
      adj(j, i) = ((i + j) % 2 == 0 ? 1.0 : -1.0) * laplace_det(minor);
    }
  }
  return adj / laplace_det(m);
}

/// Central finite-difference gradient of f with respect to a matrix.
inline Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& f,
                                         const Matrix& at, double step = 1e-6) {
  Matrix g(at.rows(), at.cols());
  for (Eigen::Index i = 0; i < at.rows(); ++i) {
    for (Eigen::Index j = 0; j < at.cols(); ++j) {
      Matrix hi = at, lo = at;
      hi(i, j) += step;
      lo(i, j) -= step;
      g(i, j) = (f(hi) - f(lo)) / (2.0 * step);
    }
  }
  return g;
}

struct MomentStats {
  double mean = 0.0;
  double var = 0.0;
  double std_err = 0.0;
};

inline MomentStats moments(const std::vector<double>& xs) {
  MomentStats s;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) s.mean += x;
  s.mean /= n;
  for (double x : xs) s.var += (x - s.mean) * (x - s.mean);
  s.var /= (n - 1.0);
  s.std_err = std::sqrt(s.var / n);
  return s;
}

/// Spearman rank correlation with midranks for ties.
inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      double mid = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = mid;
      i = j + 1;
    }
    return r;
  };
  auto rx = ranks(xs);
  auto ry = ranks(ys);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(rx.size());
  my /= static_cast<double>(ry.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracles
