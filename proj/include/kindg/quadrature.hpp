#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "kindg/errors.hpp"

namespace kindg {

/// Legendre polynomial P_n(x) and its derivative, by the three-term recurrence.
template <typename Scalar>
std::pair<Scalar, Scalar> legendre(int n, Scalar x) {
  Scalar p0 = 1, p1 = x;
  if (n == 0) return {Scalar(1), Scalar(0)};
  for (int k = 2; k <= n; ++k) {
    const Scalar pk = (Scalar(2 * k - 1) * x * p1 - Scalar(k - 1) * p0) / Scalar(k);
    p0 = p1;
    p1 = pk;
  }
  // P_n' from the derivative identity; the endpoint form avoids 1 - x^2 = 0.
  Scalar dp;
  if (std::abs(x) == Scalar(1)) {
    dp = (x > 0 ? Scalar(1) : (n % 2 == 0 ? Scalar(-1) : Scalar(1))) * Scalar(n) * Scalar(n + 1) / 2;
  } else {
    dp = Scalar(n) * (p0 - x * p1) / (Scalar(1) - x * x);
  }
  return {p1, dp};
}

/// Legendre polynomial scaled to unit norm under the averaged measure dx/2 on [-1,1].
template <typename Scalar>
std::pair<Scalar, Scalar> legendre_normalized(int n, Scalar x) {
  const auto [p, dp] = legendre(n, x);
  const Scalar s = std::sqrt(Scalar(2 * n + 1));
  return {s * p, s * dp};
}

template <typename Scalar = double>
struct GaussRule {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;  // sum to 2

  Eigen::Index size() const { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on [-1, 1]; exact for degree <= 2n - 1.
template <typename Scalar = double>
GaussRule<Scalar> gauss_rule(int n) {
  if (n < 1) throw ConfigError("gauss_rule: n must be >= 1");
  GaussRule<Scalar> rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, x);
      const Scalar step = p / dp;
      x -= step;
      if (std::abs(step) <= Scalar(4) * std::numeric_limits<Scalar>::epsilon()) break;
    }
    const Scalar dp = legendre(n, x).second;
    const Scalar w = Scalar(2) / ((Scalar(1) - x * x) * dp * dp);
    rule.nodes(i) = -x;
    rule.nodes(n - 1 - i) = x;
    rule.weights(i) = w;
    rule.weights(n - 1 - i) = w;
  }
  if (n % 2 == 1) rule.nodes(n / 2) = 0;
  return rule;
}

}  // namespace kindg
