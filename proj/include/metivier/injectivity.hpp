#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "metivier/error.hpp"
#include "metivier/group_algebra.hpp"
#include "metivier/polar_grid.hpp"
#include "metivier/quadrature.hpp"
#include "metivier/special_functions.hpp"
#include "metivier/twisted_transforms.hpp"

namespace metivier {

/// Finite atomic rotation-invariant measure sum w_i mu_{r_i} with r_i > 0.
struct RadialMeasure {
  std::vector<double> radii;
  std::vector<double> weights;
  bool normalized = true;
};

inline RadialMeasure make_measure(std::vector<std::pair<double, double>> atoms, bool normalize = true) {
  require(!atoms.empty(), ErrorCode::kInvalidArgument, "measure needs at least one atom");
  RadialMeasure mu;
  double total = 0.0;
  for (const auto& [r, w] : atoms) {
    require(std::isfinite(r) && r > 0.0, ErrorCode::kInvalidArgument, "atom radius must be positive");
    require(std::isfinite(w) && w > 0.0, ErrorCode::kInvalidArgument, "atom weight must be positive");
    for (double q : mu.radii) require(q != r, ErrorCode::kInvalidArgument, "atom radii must be distinct");
    mu.radii.push_back(r);
    mu.weights.push_back(w);
    total += w;
  }
  if (normalize) {
    for (double& w : mu.weights) w /= total;
  }
  mu.normalized = normalize;
  return mu;
}

/// Common value c of an isotropic lambda' = (c, ..., c).
inline double isotropic_scale(std::span<const double> lambda_prime) {
  require(!lambda_prime.empty(), ErrorCode::kDimensionMismatch, "lambda' is empty");
  detail::check_positive(lambda_prime);
  const double c = lambda_prime[0];
  for (double l : lambda_prime)
    require(std::abs(l - c) <= 1e-12 * c, ErrorCode::kInvalidArgument,
            "degree-wise inversion needs isotropic lambda' (all components equal)");
  return c;
}

/// k! (n-1)! / (k+n-1)!
inline double mean_factor(int k, int n) {
  return std::exp(std::lgamma(k + 1.0) + std::lgamma(double(n)) - std::lgamma(double(k + n)));
}

/// sum_i w_i theta_{k,lambda'}(r_i).
inline double mu_hat_theta(const RadialMeasure& mu, int k, std::span<const double> lambda_prime) {
  const double c = isotropic_scale(lambda_prime);
  const int n = static_cast<int>(lambda_prime.size());
  double s = 0.0;
  for (std::size_t i = 0; i < mu.radii.size(); ++i) s += mu.weights[i] * theta_radial(k, n, c, mu.radii[i]);
  return s;
}

inline constexpr int kDefaultRuleOrder = 64;

template <int N>
constexpr int default_rule_order() {
  return N == 1 ? 64 : 32;
}

/// sum_i w_i (f x_{lambda'} mu_{r_i}).
template <int N>
SampledField<N> measure_mean(const SampledField<N>& f, const RadialMeasure& mu, std::span<const double> lambda_prime,
                             int rule_order = default_rule_order<N>(), const MeanOptions& opts = {}) {
  check_lambda_prime(lambda_prime, N);
  SampledField<N> out(f.grid, f.metadata);
  for (std::size_t i = 0; i < mu.radii.size(); ++i) {
    const auto rule = build_sphere_rule<N>(mu.radii[i], rule_order);
    const auto part = lambda_prime_mean(f, lambda_prime, rule, opts);
    for (std::size_t p = 0; p < out.size(); ++p) out.values[p] += mu.weights[i] * part.values[p];
  }
  return out;
}

struct DegreeRecovery {
  int k = 0;
  /// c_k theta_k(r) or c_k mu_hat(k) used for the division
  double multiplier = 0.0;
  double condition = std::numeric_limits<double>::infinity();
  double recovered_norm = 0.0;
  /// radius used, NaN in measure mode
  double radius = std::numeric_limits<double>::quiet_NaN();
  bool recovered = false;
};

template <int N>
struct Reconstruction {
  SampledField<N> field;
  std::vector<DegreeRecovery> degrees;
  std::vector<int> unrecoverable;
};

struct RecoveryOptions {
  double threshold = 1e-8;
};

namespace detail {

template <int N>
Reconstruction<N> assemble_recovery(const PolarGrid<N>& grid, std::span<const double> lambda_prime,
                                    std::vector<DegreeRecovery> degrees,
                                    const std::vector<const SampledField<N>*>& sources) {
  Reconstruction<N> rec;
  rec.field = SampledField<N>(grid);
  const double pre = spectral_prefactor(lambda_prime);
  bool any = false;
  for (std::size_t k = 0; k < degrees.size(); ++k) {
    auto& d = degrees[k];
    if (!d.recovered) {
      rec.unrecoverable.push_back(d.k);
      continue;
    }
    any = true;
    const auto& p = *sources[k];
    double nrm = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const cplx v = p.values[i] / d.multiplier;
      rec.field.values[i] += pre * v;
      nrm += grid.weight(i) * std::norm(pre * v);
    }
    d.recovered_norm = std::sqrt(nrm);
  }
  require(any, ErrorCode::kNoUsableRadius, "no degree is recoverable from the supplied radii");
  rec.degrees = std::move(degrees);
  return rec;
}

}  // namespace detail

/// Degree-wise inversion from per-radius means f x mu_{r}: the degree-k projection
/// of the mean is c_k theta_k(r) times that of f.
template <int N>
Reconstruction<N> reconstruct_from_means(const std::vector<std::pair<double, SampledField<N>>>& means,
                                         std::span<const double> lambda_prime, int K,
                                         const RecoveryOptions& opts = {}) {
  require(!means.empty(), ErrorCode::kInvalidArgument, "at least one radius is required");
  require(K >= 0 && K <= max_truncation<N>(), ErrorCode::kRangeExceeded, "truncation K out of range");
  const double c = isotropic_scale(lambda_prime);
  check_lambda_prime(lambda_prime, N);
  std::vector<std::vector<SampledField<N>>> proj;
  for (const auto& [r, m] : means) {
    require(r > 0.0, ErrorCode::kInvalidArgument, "radius must be positive");
    require(m.grid == means.front().second.grid, ErrorCode::kGridMismatch, "means use different grids");
    proj.push_back(laguerre_projections(m, lambda_prime, K));
  }
  std::vector<DegreeRecovery> degrees;
  std::vector<const SampledField<N>*> sources;
  for (int k = 0; k <= K; ++k) {
    DegreeRecovery d;
    d.k = k;
    std::size_t best = 0;
    double best_val = -1.0;
    for (std::size_t i = 0; i < means.size(); ++i) {
      const double t = std::abs(theta_radial(k, N, c, means[i].first));
      if (t > best_val) {
        best_val = t;
        best = i;
      }
    }
    if (best_val >= opts.threshold) {
      d.recovered = true;
      d.radius = means[best].first;
      d.multiplier = mean_factor(k, N) * theta_radial(k, N, c, d.radius);
      d.condition = 1.0 / best_val;
    }
    degrees.push_back(d);
    sources.push_back(&proj[best][k]);
  }
  return detail::assemble_recovery(means.front().second.grid, lambda_prime, std::move(degrees), sources);
}

/// Inversion of a measure mean: multiplier c_k mu_hat(k).
template <int N>
Reconstruction<N> reconstruct_from_measure_mean(const SampledField<N>& mean, const RadialMeasure& mu,
                                                std::span<const double> lambda_prime, int K,
                                                const RecoveryOptions& opts = {}) {
  require(K >= 0 && K <= max_truncation<N>(), ErrorCode::kRangeExceeded, "truncation K out of range");
  check_lambda_prime(lambda_prime, N);
  const auto proj = laguerre_projections(mean, lambda_prime, K);
  std::vector<DegreeRecovery> degrees;
  std::vector<const SampledField<N>*> sources;
  for (int k = 0; k <= K; ++k) {
    DegreeRecovery d;
    d.k = k;
    const double mh = mu_hat_theta(mu, k, lambda_prime);
    if (std::abs(mh) >= opts.threshold) {
      d.recovered = true;
      d.multiplier = mean_factor(k, N) * mh;
      d.condition = 1.0 / std::abs(mh);
    }
    degrees.push_back(d);
    sources.push_back(&proj[k]);
  }
  return detail::assemble_recovery(mean.grid, lambda_prime, std::move(degrees), sources);
}

/// Radii sqrt(2 x / c) at the zeros x of L_l^{n-1}, where theta_{l,lambda'} vanishes.
inline std::vector<double> theta_zero_radii(int l, int n, double c) {
  require(l >= 1, ErrorCode::kInvalidArgument, "degree must be >= 1: L_0 has no zeros");
  require(l <= kMaxZeroDegree, ErrorCode::kRangeExceeded, "degree too large for the zero table");
  const auto table = laguerre_zeros(l, n - 1);
  std::vector<double> radii;
  for (double x : table.zeros) radii.push_back(std::sqrt(2.0 * x / c));
  return radii;
}

template <int N>
struct Counterexample {
  SampledField<N> field;
  /// smallest annihilating radius
  double r = 0.0;
  std::vector<double> radii;
  /// max |theta_l x mu_r| over the evaluation set
  double residual = 0.0;
};

/// Deterministic evaluation points inside |z_j| <= extent.
template <int N>
std::vector<CPoint<N>> test_points(int count, double extent, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  auto u = [&] { return (double(rng() >> 11) + 0.5) * 0x1.0p-53; };
  std::vector<CPoint<N>> pts;
  for (int i = 0; i < count; ++i) {
    CPoint<N> z{};
    for (int j = 0; j < N; ++j) z[j] = std::polar(extent * std::sqrt(u()), 2.0 * std::numbers::pi * u());
    pts.push_back(z);
  }
  return pts;
}

/// theta_l with a radius where it vanishes, plus the measured annihilation residual.
/// n = 1 evaluates the field-level mean on the whole grid, n = 2 at 40 test points.
template <int N>
Counterexample<N> one_radius_counterexample(int l, std::span<const double> lambda_prime,
                                            const PolarGrid<N>& grid = PolarGrid<N>::default_grid(),
                                            int rule_order = default_rule_order<N>()) {
  check_lambda_prime(lambda_prime, N);
  const double c = isotropic_scale(lambda_prime);
  Counterexample<N> ce;
  ce.radii = theta_zero_radii(l, N, c);
  ce.r = ce.radii.front();
  const std::vector<double> lp(lambda_prime.begin(), lambda_prime.end());
  ce.field = sample([&](const CPoint<N>& z) { return theta_k(l, lp, z); }, grid,
                    "theta_" + std::to_string(l));
  const auto rule = build_sphere_rule<N>(ce.r, rule_order);
  if constexpr (N == 1) {
    ce.residual = max_abs(lambda_prime_mean(ce.field, lambda_prime, rule));
  } else {
    const FieldFunction<N> fn(ce.field, 8);
    for (const auto& z : test_points<N>(40, 0.5 * grid.r_max()))
      ce.residual = std::max(ce.residual, std::abs(lambda_prime_mean_at<N>(fn, lambda_prime, rule, z)));
  }
  return ce;
}

struct WeightedNormReport {
  double p = 2.0;
  double value = 0.0;
  double log_value = 0.0;
  /// share of the p-th power sum (or the maximizer for p = inf) on the outermost radial ring
  double boundary_fraction = 0.0;
  bool boundary_dominated = false;
  double r_max = 0.0;
};

/// || f(z) e^{|J z_lambda|^2 / 4} ||_p over the grid, accumulated in log form.
template <int N>
WeightedNormReport weighted_norm(const SampledField<N>& f, const SymplecticSpectrum& spec, double p) {
  require(spec.n() == N, ErrorCode::kDimensionMismatch, "spectrum dimension differs from field dimension");
  require(p >= 1.0, ErrorCode::kInvalidArgument, "p must lie in [1, inf]");
  WeightedNormReport rep;
  rep.p = p;
  rep.r_max = f.grid.r_max();
  const Eigen::Matrix<double, 2 * N, 2 * N> at = spec.a_mat.transpose();
  std::vector<double> logs(f.size(), -std::numeric_limits<double>::infinity());
  std::vector<char> edge(f.size(), 0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto y = at * to_real<N>(f.grid.point(i));
    double weight_exp = 0.0;
    for (int j = 0; j < N; ++j) weight_exp += spec.mu[j] * spec.mu[j] * (y(j) * y(j) + y(N + j) * y(N + j));
    weight_exp *= 0.25;
    const double a = std::abs(f.values[i]);
    const auto ia = f.grid.unflatten(i);
    for (int j = 0; j < N; ++j) edge[i] = edge[i] || ia[j].first == f.grid.radial_count(j) - 1;
    if (a == 0.0) continue;
    logs[i] = std::isinf(p) ? std::log(a) + weight_exp : std::log(f.grid.weight(i)) + p * (std::log(a) + weight_exp);
  }
  const auto it = std::max_element(logs.begin(), logs.end());
  const double top = *it;
  if (std::isinf(top)) {
    rep.log_value = -std::numeric_limits<double>::infinity();
    rep.value = 0.0;
    return rep;
  }
  if (std::isinf(p)) {
    rep.log_value = top;
    rep.boundary_fraction = edge[it - logs.begin()] ? 1.0 : 0.0;
  } else {
    double total = 0.0, at_edge = 0.0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
      const double e = std::exp(logs[i] - top);
      total += e;
      if (edge[i]) at_edge += e;
    }
    rep.log_value = (top + std::log(total)) / p;
    rep.boundary_fraction = at_edge / total;
  }
  rep.value = rep.log_value > 700.0 ? std::numeric_limits<double>::infinity() : std::exp(rep.log_value);
  rep.boundary_dominated = rep.boundary_fraction > 1e-3;
  return rep;
}

// ---------------------------------------------------------------------------
// Two radii.

struct RadiiBounds {
  int k_max = 40;
  int n_max = 40;
  double tol = 1e-9;
};

struct LaguerreConflict {
  int k_a, index_a, k_b, index_b;
  double ratio;
};

struct BesselConflict {
  int index_a, index_b;
  double ratio;
};

struct RadiiVerdict {
  double r1 = 0.0, r2 = 0.0;
  int n = 1;
  std::vector<LaguerreConflict> laguerre_conflicts;
  std::vector<BesselConflict> bessel_conflicts;
  bool admissible_within_bounds = true;
  RadiiBounds bounds;
};

/// Bounded scan of the two-radii conditions: r1^2/r2^2 against every quotient of zeros of
/// L_k^{n-1} (k <= k_max, pairs across degrees included) and r1/r2 against quotients of the
/// first n_max zeros of J_{n-1}. The quotients do not depend on lambda'.
inline RadiiVerdict two_radii_check(double r1, double r2, int n, std::span<const double> lambda_prime,
                                    const RadiiBounds& bounds = {}) {
  require(std::isfinite(r1) && std::isfinite(r2) && r1 > 0.0 && r2 > 0.0, ErrorCode::kInvalidArgument,
          "radii must be positive");
  require(n >= 1, ErrorCode::kInvalidArgument, "n must be positive");
  require(bounds.k_max >= 1 && bounds.k_max <= kMaxZeroDegree && bounds.n_max >= 1 &&
              bounds.n_max <= kMaxBesselZeros && bounds.tol > 0.0,
          ErrorCode::kRangeExceeded, "search bounds out of range");
  if (!lambda_prime.empty()) detail::check_positive(lambda_prime);
  RadiiVerdict v;
  v.r1 = r1;
  v.r2 = r2;
  v.n = n;
  v.bounds = bounds;
  struct Zero {
    int k, index;
    double x;
  };
  std::vector<Zero> zeros;
  for (int k = 1; k <= bounds.k_max; ++k) {
    const auto t = laguerre_zeros(k, n - 1);
    for (std::size_t i = 0; i < t.zeros.size(); ++i) zeros.push_back({k, static_cast<int>(i) + 1, t.zeros[i]});
  }
  const double q2 = r1 * r1 / (r2 * r2);
  for (const auto& a : zeros)
    for (const auto& b : zeros) {
      const double ratio = a.x / b.x;
      if (std::abs(q2 - ratio) < bounds.tol) v.laguerre_conflicts.push_back({a.k, a.index, b.k, b.index, ratio});
    }
  const auto bz = bessel_zeros(n - 1, bounds.n_max);
  const double q = r1 / r2;
  for (int a = 0; a < bounds.n_max; ++a)
    for (int b = 0; b < bounds.n_max; ++b) {
      const double ratio = bz.zeros[a] / bz.zeros[b];
      if (std::abs(q - ratio) < bounds.tol) v.bessel_conflicts.push_back({a + 1, b + 1, ratio});
    }
  v.admissible_within_bounds = v.laguerre_conflicts.empty() && v.bessel_conflicts.empty();
  return v;
}

inline void write_conflicts_csv(const RadiiVerdict& v, std::ostream& os) {
  os << "kind,k_a,index_a,k_b,index_b,ratio\n";
  os.precision(17);
  for (const auto& c : v.laguerre_conflicts)
    os << "laguerre," << c.k_a << ',' << c.index_a << ',' << c.k_b << ',' << c.index_b << ',' << c.ratio << '\n';
  for (const auto& c : v.bessel_conflicts)
    os << "bessel,," << c.index_a << ",," << c.index_b << ',' << c.ratio << '\n';
}

struct TwoRadiiRow {
  std::vector<int> l;
  /// degree, or -1 for the Euclidean (l = 0) row
  int k = 0;
  double condition = 0.0;
  double recovered_norm = 0.0;
  double radius = std::numeric_limits<double>::quiet_NaN();
  bool recovered = false;
};

template <int N>
struct TwoRadiiReport {
  PeriodicField<N> reconstructed;
  std::vector<TwoRadiiRow> rows;
  std::vector<std::pair<std::vector<int>, int>> unrecoverable;
  double relative_error = 0.0;
  RadiiVerdict verdict;
};

struct TwoRadiiOptions {
  int rule_order = 0;  // 0 picks default_rule_order
  int interpolation_order = 8;
  bool check_admissible = true;
  RadiiBounds bounds;
  double threshold = 1e-8;
  /// Euclidean (l = 0) path: frequency cut-off and Gauss-Legendre node count
  double k_max = 16.0;
  int k_nodes = 160;
};

namespace detail {

/// Spherical function of the unit sphere in R^{2n} at frequency rho, radius r:
/// Gamma(n) (2 / (r rho))^{n-1} J_{n-1}(r rho).
inline double sphere_multiplier(int n, double r, double rho) {
  const double x = r * rho;
  if (x == 0.0) return 1.0;
  return std::exp(std::lgamma(double(n)) + (n - 1) * std::log(2.0 / x)) * bessel_j(n - 1, x);
}

/// Euclidean two-radii inversion: per angular mode Hankel transforms in each coordinate,
/// division by the sphere multiplier at whichever radius has the larger value.
template <int N>
SampledField<N> euclidean_two_radii(const SampledField<N>& m1, const SampledField<N>& m2, double r1, double r2,
                                    const TwoRadiiOptions& opts, double& worst_multiplier) {
  const auto& g = m1.grid;
  const Rule1D kr = gauss_legendre(opts.k_nodes, 0.0, opts.k_max);
  const int P = opts.k_nodes;
  // angular DFT of both means
  std::array<std::vector<cplx>, 2> spec{m1.values, m2.values};
  for (auto& s : spec)
    for (int j = 0; j < N; ++j) fft_axis(s, axis_layout(g, j), true);
  worst_multiplier = std::numeric_limits<double>::infinity();
  // multiplier per frequency node tuple
  auto pick = [&](double rho, double& mult) {
    const double a = sphere_multiplier(N, r1, rho), b = sphere_multiplier(N, r2, rho);
    mult = std::abs(a) >= std::abs(b) ? a : b;
    worst_multiplier = std::min(worst_multiplier, std::abs(mult));
    return std::abs(a) >= std::abs(b) ? 0 : 1;
  };
  // forward Hankel matrix F[p][i] = w_i r_i J_m(k_p r_i), inverse B[i][p] = omega_p k_p J_m(k_p r_i)
  auto hankel = [&](int j, int mode, Eigen::MatrixXd& fwd, Eigen::MatrixXd& inv) {
    const auto& r = g.radii(j);
    const auto& w = g.radial_weights(j);
    const int R = g.radial_count(j);
    const int am = std::abs(mode);
    const double sign = (mode < 0 && am % 2) ? -1.0 : 1.0;
    fwd.resize(P, R);
    inv.resize(R, P);
    for (int p = 0; p < P; ++p)
      for (int i = 0; i < R; ++i) {
        const double jv = sign * bessel_j(am, kr.nodes[p] * r[i]);
        fwd(p, i) = w[i] * r[i] * jv;
        inv(i, p) = kr.weights[p] * kr.nodes[p] * jv;
      }
  };
  std::vector<cplx> out(g.size(), cplx(0.0));
  auto mode_of = [](int a, int A) { return a <= A / 2 ? a : a - A; };
  if constexpr (N == 1) {
    const int R = g.radial_count(0), A = g.angular_count(0);
    double scale = 0.0;
    for (const auto& v : spec[0]) scale = std::max(scale, std::abs(v));
    std::vector<double> mult(P);
    std::vector<int> choice(P);
    for (int p = 0; p < P; ++p) choice[p] = pick(kr.nodes[p], mult[p]);
    parallel_for(A, [&](std::size_t a) {
      double peak = 0.0;
      for (int i = 0; i < R; ++i)
        peak = std::max({peak, std::abs(spec[0][i * A + a]), std::abs(spec[1][i * A + a])});
      if (peak <= 1e-15 * scale || 2 * int(a) == A) return;
      Eigen::MatrixXd fwd, inv;
      hankel(0, mode_of(int(a), A), fwd, inv);
      Eigen::VectorXcd v0(R), v1(R);
      for (int i = 0; i < R; ++i) {
        v0(i) = spec[0][i * A + a];
        v1(i) = spec[1][i * A + a];
      }
      const Eigen::VectorXcd h0 = fwd.cast<cplx>() * v0, h1 = fwd.cast<cplx>() * v1;
      Eigen::VectorXcd h(P);
      for (int p = 0; p < P; ++p) h(p) = (choice[p] == 0 ? h0(p) : h1(p)) / mult[p];
      const Eigen::VectorXcd back = inv.cast<cplx>() * h;
      for (int i = 0; i < R; ++i) out[i * A + a] = back(i);
    });
  } else {
    const int R0 = g.radial_count(0), A0 = g.angular_count(0);
    const int R1 = g.radial_count(1), A1 = g.angular_count(1);
    double scale = 0.0;
    for (const auto& v : spec[0]) scale = std::max(scale, std::abs(v));
    Eigen::MatrixXd mult(P, P);
    Eigen::MatrixXi choice(P, P);
    for (int p = 0; p < P; ++p)
      for (int q = 0; q < P; ++q) {
        double mm;
        choice(p, q) = pick(std::hypot(kr.nodes[p], kr.nodes[q]), mm);
        mult(p, q) = mm;
      }
    auto at = [&](int i0, int a0, int i1, int a1) {
      return (std::size_t(i0) * A0 + a0) * (std::size_t(R1) * A1) + std::size_t(i1) * A1 + a1;
    };
    parallel_for(std::size_t(A0) * A1, [&](std::size_t idx) {
      const int a0 = int(idx / A1), a1 = int(idx % A1);
      if (2 * a0 == A0 || 2 * a1 == A1) return;
      double peak = 0.0;
      for (int i0 = 0; i0 < R0; ++i0)
        for (int i1 = 0; i1 < R1; ++i1)
          peak = std::max({peak, std::abs(spec[0][at(i0, a0, i1, a1)]), std::abs(spec[1][at(i0, a0, i1, a1)])});
      if (peak <= 1e-15 * scale) return;
      Eigen::MatrixXd f0, b0, f1, b1;
      hankel(0, mode_of(a0, A0), f0, b0);
      hankel(1, mode_of(a1, A1), f1, b1);
      std::array<Eigen::MatrixXcd, 2> h;
      for (int s = 0; s < 2; ++s) {
        Eigen::MatrixXcd v(R0, R1);
        for (int i0 = 0; i0 < R0; ++i0)
          for (int i1 = 0; i1 < R1; ++i1) v(i0, i1) = spec[s][at(i0, a0, i1, a1)];
        h[s] = f0.cast<cplx>() * v * f1.cast<cplx>().transpose();
      }
      Eigen::MatrixXcd rec(P, P);
      for (int p = 0; p < P; ++p)
        for (int q = 0; q < P; ++q) rec(p, q) = h[choice(p, q)](p, q) / mult(p, q);
      const Eigen::MatrixXcd back = b0.cast<cplx>() * rec * b1.cast<cplx>().transpose();
      for (int i0 = 0; i0 < R0; ++i0)
        for (int i1 = 0; i1 < R1; ++i1) out[at(i0, a0, i1, a1)] = back(i0, i1);
    });
  }
  for (int j = 0; j < N; ++j) fft_axis(out, axis_layout(g, j), false);
  return SampledField<N>(g, std::move(out), m1.metadata);
}

inline std::vector<std::vector<int>> center_modes(int m, int L) {
  std::vector<std::vector<int>> out{{}};
  for (int k = 0; k < m; ++k) {
    std::vector<std::vector<int>> next;
    for (const auto& v : out)
      for (int l = -L; l <= L; ++l) {
        auto w = v;
        w.push_back(l);
        next.push_back(w);
      }
    out = std::move(next);
  }
  return out;
}

}  // namespace detail

/// Two-radii reconstruction of f on C^N x T^m from group spherical means at r1, r2.
/// l != 0: rotate the l-twisted means by A_l, recover degree by degree, rotate back.
/// l = 0: Euclidean recovery per angular mode (labeled as this library's realization).
template <int N>
TwoRadiiReport<N> two_radii_reconstruct(const PeriodicField<N>& f, const MetivierStructure& s, double r1, double r2,
                                        int K, int L, const TwoRadiiOptions& opts = {}) {
  validate_periodic(f);
  require(s.n == N && s.m == f.m, ErrorCode::kDimensionMismatch, "structure does not match field dimensions");
  require(K >= 0 && K <= max_truncation<N>(), ErrorCode::kRangeExceeded, "truncation K out of range");
  require(L >= 0, ErrorCode::kInvalidArgument, "band limit L must be non-negative");
  for (int k = 0; k < f.m; ++k)
    require(f.t_count[k] > 2 * L, ErrorCode::kNyquistViolation, "centre grid does not resolve the band limit");
  TwoRadiiReport<N> rep;
  rep.verdict = two_radii_check(r1, r2, N, {}, opts.bounds);
  if (opts.check_admissible)
    require(rep.verdict.admissible_within_bounds, ErrorCode::kInadmissibleRadii,
            "radii (" + std::to_string(r1) + ", " + std::to_string(r2) + ") are inadmissible within the scan bounds");
  const int order = opts.rule_order > 0 ? opts.rule_order : default_rule_order<N>();
  MeanOptions mo{opts.interpolation_order, OutsidePolicy::kZero};
  const auto g1 = group_spherical_mean(f, s, build_sphere_rule<N>(r1, order), mo);
  const auto g2 = group_spherical_mean(f, s, build_sphere_rule<N>(r2, order), mo);

  const std::size_t cs = f.center_size();
  PeriodicField<N> out = f;
  std::fill(out.values.begin(), out.values.end(), cplx(0.0));
  const double norm_c = std::pow(2.0 * std::numbers::pi, -f.m);
  for (const auto& l : detail::center_modes(f.m, L)) {
    const auto m1 = fourier_coefficient_center(g1, l);
    const auto m2 = fourier_coefficient_center(g2, l);
    SampledField<N> fl;
    bool zero = true;
    for (int v : l) zero = zero && v == 0;
    if (zero) {
      double worst = 0.0;
      fl = detail::euclidean_two_radii(m1, m2, r1, r2, opts, worst);
      TwoRadiiRow row;
      row.l = l;
      row.k = -1;
      row.condition = 1.0 / worst;
      row.recovered = worst >= opts.threshold;
      row.recovered_norm = l2_norm(fl);
      rep.rows.push_back(row);
      if (!row.recovered) rep.unrecoverable.push_back({l, -1});
    } else {
      std::vector<double> lam(l.begin(), l.end());
      const auto spec = symplectic_spectrum(s, lam);
      const auto lp = lambda_prime_of(spec);
      RotateOptions ro{opts.interpolation_order, OutsidePolicy::kZero};
      std::vector<std::pair<double, SampledField<N>>> means{
          {r1, rotate_field(m1, spec, Direction::kForward, ro)}, {r2, rotate_field(m2, spec, Direction::kForward, ro)}};
      const auto rec = reconstruct_from_means(means, lp, K, RecoveryOptions{opts.threshold});
      for (const auto& d : rec.degrees) {
        TwoRadiiRow row;
        row.l = l;
        row.k = d.k;
        row.condition = d.condition;
        row.recovered_norm = d.recovered_norm;
        row.radius = d.radius;
        row.recovered = d.recovered;
        rep.rows.push_back(row);
      }
      for (int k : rec.unrecoverable) rep.unrecoverable.push_back({l, k});
      fl = rotate_field(rec.field, spec, Direction::kInverse, ro);
    }
    for (std::size_t c = 0; c < cs; ++c) {
      const auto t = f.center_point(c);
      double ph = 0.0;
      for (int k = 0; k < f.m; ++k) ph -= l[k] * t[k];
      const cplx e = norm_c * std::polar(1.0, ph);
      for (std::size_t i = 0; i < f.grid.size(); ++i) out.values[i * cs + c] += fl.values[i] * e;
    }
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < f.grid.size(); ++i) {
    const double w = f.grid.weight(i);
    for (std::size_t c = 0; c < cs; ++c) {
      num += w * std::norm(out.values[i * cs + c] - f.values[i * cs + c]);
      den += w * std::norm(f.values[i * cs + c]);
    }
  }
  rep.relative_error = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  rep.reconstructed = std::move(out);
  return rep;
}

}  // namespace metivier
