#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "metivier/error.hpp"

namespace metivier {

using cplx = std::complex<double>;

inline constexpr int kMaxHermiteDegree = 200;
inline constexpr int kMaxLaguerreDegree = 500;
inline constexpr int kMaxSpecialHermiteIndex = 100;
inline constexpr int kMaxZeroDegree = 200;
inline constexpr int kMaxBesselZeros = 100;
inline constexpr double kMaxBesselArgument = 1e4;

namespace detail {

inline void check_positive(std::span<const double> lambda_prime) {
  for (double l : lambda_prime)
    require(std::isfinite(l) && l > 0.0, ErrorCode::kInvalidArgument,
            "lambda' components must be strictly positive");
}

}  // namespace detail

/// L2-normalized Hermite function h_k(x) = (2^k k! sqrt(pi))^{-1/2} H_k(x) e^{-x^2/2}.
inline double hermite_h(int k, double x) {
  require(k >= 0 && k <= kMaxHermiteDegree, ErrorCode::kRangeExceeded,
          "hermite_h degree " + std::to_string(k) + " outside [0, 200]");
  double h0 = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
  if (k == 0) return h0;
  double h1 = std::sqrt(2.0) * x * h0;
  for (int j = 1; j < k; ++j) {
    const double h2 = std::sqrt(2.0 / (j + 1)) * x * h1 - std::sqrt(double(j) / (j + 1)) * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

/// Scaled Hermite eigenfunction prod_j lambda'_j^{1/4} h_{alpha_j}(sqrt(lambda'_j) x_j).
inline double psi_alpha(std::span<const int> alpha, std::span<const double> lambda_prime,
                        std::span<const double> x) {
  require(alpha.size() == lambda_prime.size() && x.size() == alpha.size(),
          ErrorCode::kDimensionMismatch, "psi_alpha: alpha, lambda' and x lengths differ");
  detail::check_positive(lambda_prime);
  double v = 1.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    const double s = std::sqrt(lambda_prime[j]);
    v *= std::sqrt(s) * hermite_h(alpha[j], s * x[j]);
  }
  return v;
}

/// Generalized Laguerre polynomial L_k^a(x) by the three-term recurrence in k.
inline double laguerre_L(int k, int a, double x) {
  require(k >= 0 && k <= kMaxLaguerreDegree, ErrorCode::kRangeExceeded,
          "laguerre_L degree " + std::to_string(k) + " outside [0, 500]");
  require(a >= 0, ErrorCode::kInvalidArgument, "laguerre_L type must be non-negative");
  double l0 = 1.0;
  if (k == 0) return l0;
  double l1 = 1.0 + a - x;
  for (int j = 1; j < k; ++j) {
    const double l2 = ((2.0 * j + a + 1.0 - x) * l1 - (j + a) * l0) / (j + 1.0);
    l0 = l1;
    l1 = l2;
  }
  return l1;
}

/// Derivative d/dx L_k^a(x) = -L_{k-1}^{a+1}(x).
inline double laguerre_L_derivative(int k, int a, double x) {
  return k == 0 ? 0.0 : -laguerre_L(k - 1, a + 1, x);
}

/// L_k^a(x) e^{-x/2}, evaluated with the damping folded into the recurrence.
inline double laguerre_function(int k, int a, double x) {
  require(k >= 0 && k <= kMaxLaguerreDegree, ErrorCode::kRangeExceeded,
          "laguerre_function degree " + std::to_string(k) + " outside [0, 500]");
  const double e = std::exp(-0.5 * x);
  double l0 = e;
  if (k == 0) return l0;
  double l1 = (1.0 + a - x) * e;
  for (int j = 1; j < k; ++j) {
    const double l2 = ((2.0 * j + a + 1.0 - x) * l1 - (j + a) * l0) / (j + 1.0);
    l0 = l1;
    l1 = l2;
  }
  return l1;
}

/// phi_k^{n-1}(z) = L_k^{n-1}(|z|^2/2) e^{-|z|^2/4}.
inline double phi_k(int k, int n, std::span<const cplx> z) {
  require(n >= 1 && static_cast<int>(z.size()) == n, ErrorCode::kDimensionMismatch,
          "phi_k: z must have n components");
  double s = 0.0;
  for (const auto& c : z) s += std::norm(c);
  return laguerre_function(k, n - 1, 0.5 * s);
}

/// theta_{k,lambda'}(z) = phi_k^{n-1}(sqrt(lambda'_1) z_1, ..., sqrt(lambda'_n) z_n).
inline double theta_k(int k, std::span<const double> lambda_prime, std::span<const cplx> z) {
  require(lambda_prime.size() == z.size() && !z.empty(), ErrorCode::kDimensionMismatch,
          "theta_k: lambda' and z lengths differ");
  detail::check_positive(lambda_prime);
  double s = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) s += lambda_prime[j] * std::norm(z[j]);
  return laguerre_function(k, static_cast<int>(z.size()) - 1, 0.5 * s);
}

/// Radial profile of theta_k for isotropic lambda' = (c, ..., c) at |z| = r.
inline double theta_radial(int k, int n, double c, double r) {
  require(c > 0.0, ErrorCode::kInvalidArgument, "lambda' must be positive");
  return laguerre_function(k, n - 1, 0.5 * c * r * r);
}

/// One-dimensional special Hermite function
/// sqrt(lam / 2pi) (pi_lam(z) Psi_j, Psi_k) with pi_lam(x + iy) phi(xi) = e^{i lam (x xi + xy/2)} phi(xi + y).
inline cplx special_hermite_1d(int j, int k, double lam, cplx z) {
  require(j >= 0 && k >= 0 && j <= kMaxSpecialHermiteIndex && k <= kMaxSpecialHermiteIndex,
          ErrorCode::kRangeExceeded, "special_hermite_1d indices outside [0, 100]");
  require(std::isfinite(lam) && lam > 0.0, ErrorCode::kInvalidArgument,
          "special_hermite_1d: lam must be positive");
  const cplx zeta = std::sqrt(lam) * z;
  const double rho2 = std::norm(zeta);
  const int lo = std::min(j, k);
  const int hi = std::max(j, k);
  const int d = hi - lo;
  const double base = std::sqrt(lam / (2.0 * std::numbers::pi));
  const double lag = laguerre_L(lo, d, 0.5 * rho2);
  if (d == 0) return base * lag * std::exp(-0.25 * rho2);
  const double rho = std::sqrt(rho2);
  if (rho == 0.0) return 0.0;
  // magnitude in log form, phase from i^d and (w/|w|)^d
  const double log_mag = 0.5 * (std::lgamma(lo + 1.0) - std::lgamma(hi + 1.0)) +
                         d * std::log(rho / std::sqrt(2.0)) - 0.25 * rho2;
  const cplx w = j > k ? std::conj(zeta) : zeta;
  const double arg = d * (0.5 * std::numbers::pi + std::arg(w));
  return base * lag * std::exp(log_mag) * std::polar(1.0, arg);
}

/// Psi_{alpha beta}^{lambda'}(z) as the product of one-dimensional factors.
inline cplx psi_alpha_beta(std::span<const int> alpha, std::span<const int> beta,
                           std::span<const double> lambda_prime, std::span<const cplx> z) {
  require(alpha.size() == beta.size() && alpha.size() == lambda_prime.size() &&
              alpha.size() == z.size(),
          ErrorCode::kDimensionMismatch, "psi_alpha_beta: argument lengths differ");
  detail::check_positive(lambda_prime);
  cplx v = 1.0;
  for (std::size_t j = 0; j < alpha.size(); ++j)
    v *= special_hermite_1d(alpha[j], beta[j], lambda_prime[j], z[j]);
  return v;
}

/// sum over |alpha| = k of Psi_{alpha alpha}^{lambda'}(z), n <= 2.
inline cplx diagonal_sum(int k, std::span<const double> lambda_prime, std::span<const cplx> z) {
  const int n = static_cast<int>(z.size());
  require(n == 1 || n == 2, ErrorCode::kUnsupportedDimension, "diagonal_sum: n must be 1 or 2");
  require(k >= 0, ErrorCode::kInvalidArgument, "diagonal_sum: k must be nonnegative");
  if (n == 1) {
    const std::array<int, 1> a{k};
    return psi_alpha_beta(a, a, lambda_prime, z);
  }
  cplx s = 0.0;
  for (int j = 0; j <= k; ++j) {
    const std::array<int, 2> a{j, k - j};
    s += psi_alpha_beta(a, a, lambda_prime, z);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Bessel functions of the first kind, integer order.

namespace detail {

inline double bessel_series(int nu, double x) {
  const double h = 0.5 * x;
  double term = std::exp(nu * std::log(h) - std::lgamma(nu + 1.0));
  double sum = term;
  const double q = -h * h;
  for (int k = 1; k < 500; ++k) {
    term *= q / (double(k) * (k + nu));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum) && k > 2) break;
  }
  return sum;
}

inline double bessel_asymptotic(int nu, double x) {
  const double mu = 4.0 * nu * nu;
  double p = 1.0, q = 0.0;
  double term = 1.0;
  double last = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (k * 8.0 * x);
    if (std::abs(term) > last && k > 2) break;
    last = std::abs(term);
    switch (k % 4) {
      case 1: q += term; break;
      case 2: p -= term; break;
      case 3: q -= term; break;
      default: p += term; break;
    }
    if (std::abs(term) < 1e-17) break;
  }
  const double chi = x - (0.5 * nu + 0.25) * std::numbers::pi;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

// Miller's downward recurrence normalized by J_0 + 2 sum J_{2k} = 1.
inline double bessel_miller(int nu, double x) {
  const double top = std::max<double>(nu, x);
  int start = static_cast<int>(top + 12.0 * std::cbrt(top) + 20.0);
  if (start % 2) ++start;
  double jp1 = 0.0, j = 1e-300, result = 0.0, norm = 0.0;
  for (int k = start; k >= 1; --k) {
    const double jm1 = 2.0 * k / x * j - jp1;
    jp1 = j;
    j = jm1;
    if (k - 1 == nu) result = j;
    if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * j;
    if (std::abs(j) > 1e250) {
      j *= 1e-250;
      jp1 *= 1e-250;
      result *= 1e-250;
      norm *= 1e-250;
    }
  }
  norm += j;
  return result / norm;
}

}  // namespace detail

inline double bessel_j(int nu, double x) {
  require(nu >= 0, ErrorCode::kInvalidArgument, "bessel_j: order must be non-negative");
  require(std::isfinite(x) && x >= 0.0 && x <= kMaxBesselArgument, ErrorCode::kRangeExceeded,
          "bessel_j: argument outside [0, 1e4]");
  if (x == 0.0) return nu == 0 ? 1.0 : 0.0;
  if (x <= 5.0) return detail::bessel_series(nu, x);
  if (x >= 30.0 && x >= double(nu) * nu) return detail::bessel_asymptotic(nu, x);
  return detail::bessel_miller(nu, x);
}

inline double bessel_j_derivative(int nu, double x) {
  if (nu == 0) return -bessel_j(1, x);
  return 0.5 * (bessel_j(nu - 1, x) - bessel_j(nu + 1, x));
}

// ---------------------------------------------------------------------------
// Zero tables.

struct LaguerreZeroTable {
  int degree = 0;
  int type = 0;
  std::vector<double> zeros;
  /// |L_k^a(x)| e^{-x/2} at each zero
  std::vector<double> residuals;
};

struct BesselZeroTable {
  int order = 0;
  std::vector<double> zeros;
  std::vector<double> residuals;
};

/// Zeros of L_k^a from the symmetric Jacobi matrix, then one Newton step each.
inline LaguerreZeroTable laguerre_zeros(int k, int a) {
  require(k >= 0 && k <= kMaxZeroDegree, ErrorCode::kRangeExceeded,
          "laguerre_zeros degree outside [0, 200]");
  require(a >= 0, ErrorCode::kInvalidArgument, "laguerre_zeros: type must be non-negative");
  LaguerreZeroTable table{k, a, {}, {}};
  if (k == 0) return table;
  Eigen::VectorXd diag(k), off(std::max(k - 1, 1));
  for (int i = 0; i < k; ++i) diag(i) = 2.0 * i + a + 1.0;
  for (int i = 1; i < k; ++i) off(i - 1) = std::sqrt(double(i) * (i + a));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, off.head(k - 1), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) fail(ErrorCode::kNonConvergence, "Jacobi eigen-solve failed");
  table.zeros.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + k);
  std::sort(table.zeros.begin(), table.zeros.end());
  for (double& x : table.zeros) {
    const double f = laguerre_L(k, a, x);
    const double df = laguerre_L_derivative(k, a, x);
    if (df != 0.0) {
      const double step = f / df;
      if (std::abs(step) < 1e-6 * std::max(1.0, x)) x -= step;
    }
    table.residuals.push_back(std::abs(laguerre_function(k, a, x)));
  }
  for (std::size_t i = 1; i < table.zeros.size(); ++i)
    if (!(table.zeros[i] > table.zeros[i - 1]))
      fail(ErrorCode::kNonConvergence, "Laguerre zeros not strictly increasing");
  return table;
}

/// First `count` positive zeros of J_nu: scan with step <= 1, bisection, Newton polish.
inline BesselZeroTable bessel_zeros(int nu, int count) {
  require(nu >= 0, ErrorCode::kInvalidArgument, "bessel_zeros: order must be non-negative");
  require(count >= 1 && count <= kMaxBesselZeros, ErrorCode::kRangeExceeded,
          "bessel_zeros count outside [1, 100]");
  BesselZeroTable table{nu, {}, {}};
  const double step = 0.25;
  double a = nu == 0 ? 1e-3 : 0.5 * nu + 1e-3;
  double fa = bessel_j(nu, a);
  while (static_cast<int>(table.zeros.size()) < count) {
    const double b = a + step;
    require(b <= kMaxBesselArgument, ErrorCode::kNonConvergence, "bessel_zeros scan exhausted");
    const double fb = bessel_j(nu, b);
    if (fa == 0.0 || (fa < 0.0) != (fb < 0.0)) {
      double lo = a, hi = b, flo = fa;
      for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, lo); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = bessel_j(nu, mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      double x = 0.5 * (lo + hi);
      const double d = bessel_j_derivative(nu, x);
      if (d != 0.0) {
        const double nx = x - bessel_j(nu, x) / d;
        if (nx >= a && nx <= b) x = nx;
      }
      table.zeros.push_back(x);
      table.residuals.push_back(std::abs(bessel_j(nu, x)));
    }
    a = b;
    fa = fb;
  }
  return table;
}

inline void write_csv(const LaguerreZeroTable& t, std::ostream& os) {
  os << "index,zero,residual\n";
  os.precision(17);
  for (std::size_t i = 0; i < t.zeros.size(); ++i)
    os << i + 1 << ',' << t.zeros[i] << ',' << t.residuals[i] << '\n';
}

inline void write_csv(const BesselZeroTable& t, std::ostream& os) {
  os << "index,zero,residual\n";
  os.precision(17);
  for (std::size_t i = 0; i < t.zeros.size(); ++i)
    os << i + 1 << ',' << t.zeros[i] << ',' << t.residuals[i] << '\n';
}

}  // namespace metivier
