#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "metivier/error.hpp"
#include "metivier/parallel.hpp"
#include "metivier/quadrature.hpp"

namespace metivier {

template <int N>
using RVec = std::array<double, N>;

inline bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

/// Product of per-coordinate polar grids on C^N. Each coordinate has
/// Gauss-Legendre radii on (0, r_max] and equispaced angles.
template <int N>
class PolarGrid {
 public:
  static_assert(N == 1 || N == 2, "polar grids exist for n = 1, 2");

  PolarGrid() = default;

  PolarGrid(std::array<int, N> radial, std::array<int, N> angular, double r_max)
      : radial_count_(radial), angular_count_(angular), r_max_(r_max) {
    require(std::isfinite(r_max) && r_max > 0.0, ErrorCode::kInvalidArgument, "r_max must be positive");
    for (int j = 0; j < N; ++j) {
      require(radial[j] >= 1, ErrorCode::kInvalidArgument, "radial count must be positive");
      require(angular[j] >= 4 && is_power_of_two(angular[j]), ErrorCode::kInvalidArgument,
              "angular count must be a power of two >= 4");
      Rule1D rule = gauss_legendre(radial[j], 0.0, r_max);
      radii_[j] = std::move(rule.nodes);
      radial_weights_[j] = std::move(rule.weights);
    }
  }

  static PolarGrid uniform(int radial, int angular, double r_max) {
    std::array<int, N> r{}, a{};
    r.fill(radial);
    a.fill(angular);
    return PolarGrid(r, a, r_max);
  }

  /// 96 x 256 on R_max 12 for n = 1, 48 x 64 per coordinate on R_max 8 for n = 2.
  static PolarGrid default_grid() {
    if constexpr (N == 1) return uniform(96, 256, 12.0);
    else return uniform(48, 64, 8.0);
  }

  int radial_count(int j) const { return radial_count_[j]; }
  int angular_count(int j) const { return angular_count_[j]; }
  double r_max() const { return r_max_; }
  const std::vector<double>& radii(int j) const { return radii_[j]; }
  const std::vector<double>& radial_weights(int j) const { return radial_weights_[j]; }

  std::size_t size() const {
    std::size_t s = 1;
    for (int j = 0; j < N; ++j) s *= std::size_t(radial_count_[j]) * angular_count_[j];
    return s;
  }

  /// Points per coordinate block (radial x angular).
  std::size_t block(int j) const { return std::size_t(radial_count_[j]) * angular_count_[j]; }

  double angle(int j, int a) const { return 2.0 * std::numbers::pi * a / angular_count_[j]; }

  /// Splits a flat index into (radial, angular) pairs per coordinate.
  std::array<std::pair<int, int>, N> unflatten(std::size_t idx) const {
    std::array<std::pair<int, int>, N> out{};
    for (int j = N - 1; j >= 0; --j) {
      const int a = static_cast<int>(idx % angular_count_[j]);
      idx /= angular_count_[j];
      const int i = static_cast<int>(idx % radial_count_[j]);
      idx /= radial_count_[j];
      out[j] = {i, a};
    }
    return out;
  }

  std::size_t flatten(const std::array<std::pair<int, int>, N>& ia) const {
    std::size_t idx = 0;
    for (int j = 0; j < N; ++j)
      idx = (idx * radial_count_[j] + ia[j].first) * angular_count_[j] + ia[j].second;
    return idx;
  }

  CPoint<N> point(std::size_t idx) const {
    const auto ia = unflatten(idx);
    CPoint<N> z{};
    for (int j = 0; j < N; ++j) z[j] = std::polar(radii_[j][ia[j].first], angle(j, ia[j].second));
    return z;
  }

  /// Volume quadrature weight: radial weight x r x 2pi/A per coordinate.
  double weight(std::size_t idx) const {
    const auto ia = unflatten(idx);
    double w = 1.0;
    for (int j = 0; j < N; ++j)
      w *= radial_weights_[j][ia[j].first] * radii_[j][ia[j].first] * 2.0 * std::numbers::pi /
           angular_count_[j];
    return w;
  }

  bool operator==(const PolarGrid& o) const {
    return radial_count_ == o.radial_count_ && angular_count_ == o.angular_count_ && r_max_ == o.r_max_;
  }

  /// Truncation bound e^{-R_max^2/4} recorded in field metadata.
  double truncation_bound() const { return std::exp(-0.25 * r_max_ * r_max_); }

 private:
  std::array<int, N> radial_count_{};
  std::array<int, N> angular_count_{};
  double r_max_ = 0.0;
  std::array<std::vector<double>, N> radii_;
  std::array<std::vector<double>, N> radial_weights_;
};

template <int N>
struct SampledField {
  PolarGrid<N> grid;
  std::vector<cplx> values;
  std::string metadata;

  SampledField() = default;
  SampledField(PolarGrid<N> g, std::string meta = {})
      : grid(std::move(g)), values(grid.size(), cplx(0.0)), metadata(std::move(meta)) {}
  SampledField(PolarGrid<N> g, std::vector<cplx> v, std::string meta = {})
      : grid(std::move(g)), values(std::move(v)), metadata(std::move(meta)) {
    require(values.size() == grid.size(), ErrorCode::kGridMismatch, "value count does not match grid");
  }

  std::size_t size() const { return values.size(); }
};

/// Field on C^N x T^m with t-samples t_q = 2 pi q / T per centre coordinate.
/// Layout: spatial index outer, centre multi-index inner (row-major).
template <int N>
struct PeriodicField {
  PolarGrid<N> grid;
  int m = 1;
  std::vector<int> t_count;
  std::vector<cplx> values;
  std::string metadata;

  std::size_t center_size() const {
    std::size_t s = 1;
    for (int t : t_count) s *= t;
    return s;
  }

  /// Spatial slice at a fixed centre multi-index.
  SampledField<N> slice(std::size_t c) const {
    SampledField<N> f(grid, metadata);
    const std::size_t cs = center_size();
    for (std::size_t i = 0; i < grid.size(); ++i) f.values[i] = values[i * cs + c];
    return f;
  }

  std::vector<double> center_point(std::size_t c) const {
    std::vector<double> t(m);
    for (int k = m - 1; k >= 0; --k) {
      t[k] = 2.0 * std::numbers::pi * double(c % t_count[k]) / t_count[k];
      c /= t_count[k];
    }
    return t;
  }
};

template <int N>
inline void validate_periodic(const PeriodicField<N>& f) {
  require(f.m >= 1 && static_cast<int>(f.t_count.size()) == f.m, ErrorCode::kDimensionMismatch,
          "centre sample counts must list m entries");
  for (int t : f.t_count)
    require(t >= 4 && is_power_of_two(t), ErrorCode::kInvalidArgument,
            "centre sample count must be a power of two >= 4");
  require(f.values.size() == f.grid.size() * f.center_size(), ErrorCode::kGridMismatch,
          "periodic field value count does not match grid");
}

/// Evaluates expr at every grid node.
template <int N, class Expr>
SampledField<N> sample(Expr&& expr, const PolarGrid<N>& grid, std::string metadata = {}) {
  SampledField<N> f(grid, std::move(metadata));
  parallel_for(grid.size(), [&](std::size_t i) { f.values[i] = cplx(expr(grid.point(i))); });
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!std::isfinite(f.values[i].real()) || !std::isfinite(f.values[i].imag())) {
      const auto z = grid.point(i);
      std::string where;
      for (const auto& c : z) where += "(" + std::to_string(c.real()) + "," + std::to_string(c.imag()) + ")";
      fail(ErrorCode::kNonFiniteValue, "non-finite sample at node " + std::to_string(i) + " z=" + where);
    }
  return f;
}

/// Samples expr(z, t) with t a std::vector<double> of length m.
template <int N, class Expr>
PeriodicField<N> sample_periodic(Expr&& expr, const PolarGrid<N>& grid, std::vector<int> t_count,
                                 std::string metadata = {}) {
  PeriodicField<N> f;
  f.grid = grid;
  f.m = static_cast<int>(t_count.size());
  f.t_count = std::move(t_count);
  f.metadata = std::move(metadata);
  f.values.assign(grid.size() * f.center_size(), cplx(0.0));
  validate_periodic(f);
  const std::size_t cs = f.center_size();
  parallel_for(grid.size(), [&](std::size_t i) {
    const auto z = grid.point(i);
    for (std::size_t c = 0; c < cs; ++c) f.values[i * cs + c] = cplx(expr(z, f.center_point(c)));
  });
  for (const auto& v : f.values)
    require(std::isfinite(v.real()) && std::isfinite(v.imag()), ErrorCode::kNonFiniteValue,
            "non-finite periodic sample");
  return f;
}

/// Integral of f conj(g) by the grid's product quadrature, summed in index order.
template <int N>
cplx inner_product(const SampledField<N>& f, const SampledField<N>& g) {
  require(f.grid == g.grid, ErrorCode::kGridMismatch, "inner_product: grids differ");
  cplx s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f.grid.weight(i) * f.values[i] * std::conj(g.values[i]);
  return s;
}

template <int N>
double l2_norm(const SampledField<N>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f.grid.weight(i) * std::norm(f.values[i]);
  return std::sqrt(s);
}

template <int N>
double max_abs(const SampledField<N>& f) {
  double m = 0.0;
  for (const auto& v : f.values) m = std::max(m, std::abs(v));
  return m;
}

template <int N>
double l2_distance(const SampledField<N>& f, const SampledField<N>& g) {
  require(f.grid == g.grid, ErrorCode::kGridMismatch, "l2_distance: grids differ");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f.grid.weight(i) * std::norm(f.values[i] - g.values[i]);
  return std::sqrt(s);
}

template <int N>
double max_distance(const SampledField<N>& f, const SampledField<N>& g) {
  require(f.grid == g.grid, ErrorCode::kGridMismatch, "max_distance: grids differ");
  double m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f.values[i] - g.values[i]));
  return m;
}

// ---------------------------------------------------------------------------
// Interpolation.

enum class OutsidePolicy { kZero, kThrow };

/// Local Lagrange interpolation in (r, angle) per coordinate. The radial
/// stencil reflects through the origin (r -> -r with angle + pi), the angular
/// stencil wraps periodically. order = 4 is the bicubic default.
template <int N>
class Interpolant {
 public:
  struct Tap {
    int i;
    int a;
    double w;
  };

  Interpolant(const PolarGrid<N>& grid, int order = 4, OutsidePolicy outside = OutsidePolicy::kZero)
      : grid_(&grid), order_(order), outside_(outside) {
    require(order >= 2 && order <= 16, ErrorCode::kInvalidArgument, "interpolation order outside [2, 16]");
    for (int j = 0; j < N; ++j)
      require(grid.angular_count(j) >= order, ErrorCode::kInvalidArgument,
              "angular count below interpolation order");
  }

  int order() const { return order_; }

  /// Stencil taps for coordinate j at point w. Returns false when outside support.
  bool taps(int j, cplx w, std::vector<Tap>& out) const {
    out.clear();
    const double rho = std::abs(w);
    const double rmax = grid_->r_max();
    if (rho > rmax * (1.0 + 1e-12)) {
      if (outside_ == OutsidePolicy::kThrow)
        fail(ErrorCode::kOutOfDomain, "point with |z_j| = " + std::to_string(rho) + " beyond r_max");
      return false;
    }
    const auto& r = grid_->radii(j);
    const int R = grid_->radial_count(j);
    const int A = grid_->angular_count(j);
    const int p = std::min(order_, 2 * R);
    // extended nodes e_k, k in [0, 2R): e_k = -r_{R-1-k} for k < R, r_{k-R} otherwise
    auto ext = [&](int k) { return k < R ? -r[R - 1 - k] : r[k - R]; };
    const int pos = static_cast<int>(std::lower_bound(r.begin(), r.end(), rho) - r.begin()) + R;
    int start = pos - p / 2;
    start = std::clamp(start, 0, 2 * R - p);
    double rw[16];
    for (int s = 0; s < p; ++s) {
      double w_s = 1.0;
      const double xs = ext(start + s);
      for (int t = 0; t < p; ++t)
        if (t != s) w_s *= (rho - ext(start + t)) / (xs - ext(start + t));
      rw[s] = w_s;
    }
    const double two_pi = 2.0 * std::numbers::pi;
    double phi = rho > 0.0 ? std::arg(w) : 0.0;
    if (phi < 0.0) phi += two_pi;
    const double u = phi / two_pi * A;
    const int q = order_;
    const int a0 = static_cast<int>(std::floor(u)) - (q / 2 - 1);
    double aw[16];
    for (int s = 0; s < q; ++s) {
      double w_s = 1.0;
      const double xs = a0 + s;
      for (int t = 0; t < q; ++t)
        if (t != s) w_s *= (u - (a0 + t)) / (xs - (a0 + t));
      aw[s] = w_s;
    }
    for (int s = 0; s < p; ++s) {
      const int k = start + s;
      const bool flip = k < R;
      const int i = flip ? R - 1 - k : k - R;
      const int shift = flip ? A / 2 : 0;
      for (int t = 0; t < q; ++t) {
        const int a = (((a0 + t + shift) % A) + A) % A;
        out.push_back({i, a, rw[s] * aw[t]});
      }
    }
    return true;
  }

  cplx operator()(const std::vector<cplx>& values, const CPoint<N>& z) const {
    thread_local std::vector<Tap> t0, t1;
    if (!taps(0, z[0], t0)) return 0.0;
    const int A0 = grid_->angular_count(0);
    if constexpr (N == 1) {
      cplx s = 0.0;
      for (const auto& t : t0) s += t.w * values[std::size_t(t.i) * A0 + t.a];
      return s;
    } else {
      if (!taps(1, z[1], t1)) return 0.0;
      const std::size_t b1 = grid_->block(1);
      const int A1 = grid_->angular_count(1);
      cplx s = 0.0;
      for (const auto& u : t0) {
        const std::size_t base = (std::size_t(u.i) * A0 + u.a) * b1;
        cplx inner = 0.0;
        for (const auto& t : t1) inner += t.w * values[base + std::size_t(t.i) * A1 + t.a];
        s += u.w * inner;
      }
      return s;
    }
  }

 private:
  const PolarGrid<N>* grid_;
  int order_;
  OutsidePolicy outside_;
};

/// Callable view of a sampled field through an Interpolant.
template <int N>
class FieldFunction {
 public:
  FieldFunction(const SampledField<N>& f, int order = 4, OutsidePolicy outside = OutsidePolicy::kZero)
      : f_(&f), interp_(f.grid, order, outside) {}
  cplx operator()(const CPoint<N>& z) const { return interp_(f_->values, z); }

 private:
  const SampledField<N>* f_;
  Interpolant<N> interp_;
};

}  // namespace metivier
