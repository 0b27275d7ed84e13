#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "metivier/error.hpp"

namespace metivier {

using cplx = std::complex<double>;
template <int N>
using CPoint = std::array<cplx, N>;

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre nodes and weights on [-1, 1], Newton on the Legendre recurrence.
inline Rule1D gauss_legendre(int count) {
  require(count >= 1, ErrorCode::kInvalidArgument, "gauss_legendre needs at least one node");
  Rule1D rule;
  rule.nodes.resize(count);
  rule.weights.resize(count);
  // returns P_count(x) and its derivative
  auto legendre = [count](double x) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= count; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, count * (x * p1 - p0) / (x * x - 1.0)};
  };
  for (int i = 0; i < (count + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[count - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[count - 1 - i] = w;
  }
  return rule;
}

/// Gauss-Legendre rule mapped to [a, b].
inline Rule1D gauss_legendre(int count, double a, double b) {
  Rule1D rule = gauss_legendre(count);
  const double half = 0.5 * (b - a);
  for (int i = 0; i < count; ++i) {
    rule.nodes[i] = a + half * (rule.nodes[i] + 1.0);
    rule.weights[i] *= half;
  }
  return rule;
}

/// Gauss-Hermite rule for weight e^{-x^2} (Golub-Welsch).
inline Rule1D gauss_hermite(int count) {
  require(count >= 1, ErrorCode::kInvalidArgument, "gauss_hermite needs at least one node");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(count);
  Eigen::VectorXd off(std::max(count - 1, 0));
  for (int i = 1; i < count; ++i) off(i - 1) = std::sqrt(0.5 * i);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) fail(ErrorCode::kNonConvergence, "Gauss-Hermite eigen-solve");
  Rule1D rule;
  for (int i = 0; i < count; ++i) {
    rule.nodes.push_back(solver.eigenvalues()(i));
    const double v = solver.eigenvectors()(0, i);
    rule.weights.push_back(std::sqrt(std::numbers::pi) * v * v);
  }
  return rule;
}

/// Discrete normalized surface measure on the sphere |w| = r in C^N.
template <int N>
struct SphereRule {
  double r = 0.0;
  int order = 0;
  std::vector<CPoint<N>> nodes;
  std::vector<double> weights;
};

/// N=1: equispaced circle. N=2: Hopf coordinates w = r(sqrt(1-s) e^{i a}, sqrt(s) e^{i b})
/// with Gauss-Legendre in s and trapezoid in both angles.
template <int N>
SphereRule<N> build_sphere_rule(double r, int order) {
  static_assert(N == 1 || N == 2, "sphere rules exist for n = 1, 2");
  require(std::isfinite(r) && r > 0.0, ErrorCode::kInvalidArgument, "sphere radius must be positive");
  require(order >= 1 && order <= 64, ErrorCode::kRangeExceeded, "sphere rule order outside [1, 64]");
  SphereRule<N> rule;
  rule.r = r;
  rule.order = order;
  const double two_pi = 2.0 * std::numbers::pi;
  if constexpr (N == 1) {
    for (int j = 0; j < order; ++j) {
      rule.nodes.push_back({std::polar(r, two_pi * j / order)});
      rule.weights.push_back(1.0 / order);
    }
  } else {
    const int gl = std::max(1, order / 2);
    const Rule1D s_rule = gauss_legendre(gl, 0.0, 1.0);
    for (int i = 0; i < gl; ++i) {
      const double s = s_rule.nodes[i];
      const double a1 = r * std::sqrt(1.0 - s);
      const double a2 = r * std::sqrt(s);
      for (int p = 0; p < order; ++p)
        for (int q = 0; q < order; ++q) {
          rule.nodes.push_back({std::polar(a1, two_pi * p / order), std::polar(a2, two_pi * q / order)});
          rule.weights.push_back(s_rule.weights[i] / (double(order) * order));
        }
    }
  }
  return rule;
}

/// Runtime dimension guard for paths where n arrives as data.
inline void check_dimension(int n) {
  require(n == 1 || n == 2, ErrorCode::kUnsupportedDimension,
          "only n = 1 and n = 2 are supported, got n = " + std::to_string(n));
}

}  // namespace metivier
