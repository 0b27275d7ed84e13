#pragma once

// Reference values computed without the library: std:: special functions,
// brute-force quadrature and bisection.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

inline double factorial(int k) { return std::tgamma(k + 1.0); }

// k! (n-1)! / (k+n-1)!
inline double mean_constant(int k, int n) { return factorial(k) * factorial(n - 1) / factorial(k + n - 1); }

inline double laguerre(int k, int a, double x) { return std::assoc_laguerre(k, a, x); }

inline double hermite_function(int k, double x) {
  const double norm = std::sqrt(std::pow(2.0, k) * factorial(k) * std::sqrt(std::numbers::pi));
  return std::hermite(k, x) * std::exp(-0.5 * x * x) / norm;
}

inline double bessel(int nu, double x) { return std::cyl_bessel_j(double(nu), x); }

inline double bisect(const std::function<double(double)>& f, double a, double b) {
  double fa = f(a);
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

// first `count` positive zeros of J_nu by sign scan
inline std::vector<double> bessel_zeros(int nu, int count) {
  std::vector<double> out;
  auto f = [nu](double x) { return bessel(nu, x); };
  double x = 0.5;
  while (static_cast<int>(out.size()) < count) {
    if ((f(x) < 0) != (f(x + 0.01) < 0)) out.push_back(bisect(f, x, x + 0.01));
    x += 0.01;
  }
  return out;
}

// zeros of L_k^a by sign scan on [0, 4k + 2a + 10]
inline std::vector<double> laguerre_zeros(int k, int a) {
  std::vector<double> out;
  auto f = [k, a](double x) { return laguerre(k, a, x); };
  const double top = 4.0 * k + 2.0 * a + 10.0;
  const double step = 1e-3;
  for (double x = 1e-9; x < top; x += step)
    if ((f(x) < 0) != (f(x + step) < 0)) out.push_back(bisect(f, x, x + step));
  return out;
}

// theta_k radial profile phi_k^{n-1} at lambda' |z|^2 = s
inline double theta(int k, int n, double s) { return laguerre(k, n - 1, 0.5 * s) * std::exp(-0.25 * s); }

// sqrt(lam/2pi) int e^{i lam (x xi + x y / 2)} Psi_j(xi + y) Psi_k(xi) d xi, trapezoid on a wide box
inline cplx special_hermite(int j, int k, double lam, cplx z) {
  const double x = z.real(), y = z.imag();
  const double s = std::sqrt(lam);
  auto psi = [s](int m, double t) { return std::sqrt(s) * hermite_function(m, s * t); };
  const double half = 14.0 / s + std::abs(y);
  const int count = 8000;
  const double h = 2.0 * half / count;
  cplx sum = 0.0;
  for (int i = 0; i <= count; ++i) {
    const double xi = -half + i * h;
    sum += std::polar(1.0, lam * (x * xi + 0.5 * x * y)) * psi(j, xi + y) * psi(k, xi);
  }
  return std::sqrt(lam / (2.0 * std::numbers::pi)) * sum * h;
}

// int_R f(x) dx by composite Simpson
inline double simpson(const std::function<double(double)>& f, double a, double b, int intervals) {
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace oracle
