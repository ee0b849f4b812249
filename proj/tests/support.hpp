/**
 * @file support.hpp
 * @brief Shared helpers for the test suites: RNG wrappers and oracles that
 *        are intentionally independent of the library implementations.
 */
#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

namespace testsupport {

inline std::mt19937_64 rng(uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline double gaussian(std::mt19937_64& g) {
  return std::normal_distribution<double>(0.0, 1.0)(g);
}

/// Random symmetric positive definite matrix with moderate spread.
inline Eigen::MatrixXd random_spd(std::mt19937_64& g, int d) {
  Eigen::MatrixXd B(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) B(i, j) = gaussian(g);
  return B.transpose() * B + 0.05 * Eigen::MatrixXd::Identity(d, d);
}

inline Eigen::VectorXd random_unit(std::mt19937_64& g, int d) {
  Eigen::VectorXd v(d);
  do {
    for (int i = 0; i < d; ++i) v(i) = gaussian(g);
  } while (v.norm() < 1e-8);
  return v / v.norm();
}

/// Power-series Bessel J_n for small/moderate arguments; independent of the
/// library's implementation. Adequate for x <= ~12 at n <= 2.
inline double series_bessel_j(int n, double x) {
  double term = 1.0;
  for (int i = 1; i <= n; ++i) term *= 0.5 * x / i;
  double sum = term;
  const double q = 0.25 * x * x;
  for (int m = 1; m <= 60; ++m) {
    term *= -q / (m * (m + n));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum) + 1e-300) break;
  }
  return sum;
}

/// Central-difference Jacobian of a 2D map.
template <typename F>
Eigen::Matrix2d fd_jacobian(const F& f, const Eigen::Vector2d& x, double h = 1e-6) {
  Eigen::Matrix2d J;
  for (int j = 0; j < 2; ++j) {
    Eigen::Vector2d e = Eigen::Vector2d::Zero();
    e(j) = h;
    const Eigen::Vector2d fp = f(x + e), fm = f(x - e);
    J.col(j) = (fp - fm) / (2.0 * h);
  }
  return J;
}

}  // namespace testsupport
