#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>
#include <unsupported/Eigen/FFT>

#include "metivier/error.hpp"
#include "metivier/field_io.hpp"
#include "metivier/group_algebra.hpp"
#include "metivier/parallel.hpp"
#include "metivier/polar_grid.hpp"
#include "metivier/quadrature.hpp"
#include "metivier/special_functions.hpp"

namespace metivier {

template <int N>
using PhaseMatrix = Eigen::Matrix<double, 2 * N, 2 * N>;

inline void check_lambda_prime(std::span<const double> lambda_prime, int n) {
  require(static_cast<int>(lambda_prime.size()) == n, ErrorCode::kDimensionMismatch,
          "lambda' must have " + std::to_string(n) + " components");
  detail::check_positive(lambda_prime);
}

/// Phase matrix V_lambda for the structure's lambda-twisted mean.
template <int N>
PhaseMatrix<N> phase_from_structure(const MetivierStructure& s, std::span<const double> lambda) {
  require(s.n == N, ErrorCode::kDimensionMismatch, "structure dimension differs from field dimension");
  return v_lambda(s, lambda);
}

/// Phase matrix [[0, -diag(lambda')], [diag(lambda'), 0]]: <x, B xi> = sum lambda'_j Im(z_j conj(w_j)).
template <int N>
PhaseMatrix<N> phase_from_lambda_prime(std::span<const double> lambda_prime) {
  check_lambda_prime(lambda_prime, N);
  return normal_block(lambda_prime);
}

/// sum_q w_q f(z - w_q) exp((i/2) <x, B xi_q>) with x, xi_q the real forms of z, w_q.
template <int N, class F>
cplx spherical_mean_at(const F& f, const PhaseMatrix<N>& b, const SphereRule<N>& rule, const CPoint<N>& z) {
  const Eigen::Matrix<double, 1, 2 * N> xb = to_real<N>(z).transpose() * b;
  cplx s = 0.0;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const auto& w = rule.nodes[q];
    CPoint<N> shifted{};
    for (int j = 0; j < N; ++j) shifted[j] = z[j] - w[j];
    s += rule.weights[q] * cplx(f(shifted)) * std::polar(1.0, 0.5 * xb.dot(to_real<N>(w)));
  }
  return s;
}

struct MeanOptions {
  /// Lagrange order of the off-grid interpolant (4 is bicubic)
  int interpolation_order = 8;
  OutsidePolicy outside = OutsidePolicy::kZero;
};

/// Field version of spherical_mean_at on f's own grid.
template <int N>
SampledField<N> spherical_mean(const SampledField<N>& f, const PhaseMatrix<N>& b, const SphereRule<N>& rule,
                               const MeanOptions& opts = {}) {
  const FieldFunction<N> fn(f, opts.interpolation_order, opts.outside);
  SampledField<N> out(f.grid, f.metadata);
  parallel_for(f.size(), [&](std::size_t i) { out.values[i] = spherical_mean_at<N>(fn, b, rule, f.grid.point(i)); });
  return out;
}

inline void check_nonzero(std::span<const double> lambda) {
  bool nonzero = false;
  for (double l : lambda) nonzero = nonzero || l != 0.0;
  require(nonzero, ErrorCode::kInvalidArgument, "lambda must be nonzero");
}

template <int N>
SampledField<N> twisted_spherical_mean(const SampledField<N>& f, const MetivierStructure& s,
                                       std::span<const double> lambda, const SphereRule<N>& rule,
                                       const MeanOptions& opts = {}) {
  check_nonzero(lambda);
  return spherical_mean(f, phase_from_structure<N>(s, lambda), rule, opts);
}

template <int N, class F>
cplx twisted_spherical_mean_at(const F& f, const MetivierStructure& s, std::span<const double> lambda,
                               const SphereRule<N>& rule, const CPoint<N>& z) {
  check_nonzero(lambda);
  return spherical_mean_at<N>(f, phase_from_structure<N>(s, lambda), rule, z);
}

/// lambda'-twisted spherical mean f x_{lambda'} mu_r.
template <int N>
SampledField<N> lambda_prime_mean(const SampledField<N>& f, std::span<const double> lambda_prime,
                                  const SphereRule<N>& rule, const MeanOptions& opts = {}) {
  return spherical_mean(f, phase_from_lambda_prime<N>(lambda_prime), rule, opts);
}

template <int N, class F>
cplx lambda_prime_mean_at(const F& f, std::span<const double> lambda_prime, const SphereRule<N>& rule,
                          const CPoint<N>& z) {
  return spherical_mean_at<N>(f, phase_from_lambda_prime<N>(lambda_prime), rule, z);
}

/// Modified mean of f_lambda = f o A_lambda: phase sum mu_j Im(z_j conj(w_j)).
template <int N>
SampledField<N> modified_twisted_mean(const SampledField<N>& f_lambda, const SymplecticSpectrum& spec,
                                      const SphereRule<N>& rule, const MeanOptions& opts = {}) {
  require(spec.n() == N, ErrorCode::kDimensionMismatch, "spectrum dimension differs from field dimension");
  return lambda_prime_mean(f_lambda, lambda_prime_of(spec), rule, opts);
}

template <int N, class F>
cplx modified_twisted_mean_at(const F& f_lambda, const SymplecticSpectrum& spec, const SphereRule<N>& rule,
                              const CPoint<N>& z) {
  require(spec.n() == N, ErrorCode::kDimensionMismatch, "spectrum dimension differs from field dimension");
  return lambda_prime_mean_at<N>(f_lambda, lambda_prime_of(spec), rule, z);
}

/// Plain Euclidean spherical mean (zero phase).
template <int N>
SampledField<N> euclidean_spherical_mean(const SampledField<N>& f, const SphereRule<N>& rule,
                                         const MeanOptions& opts = {}) {
  return spherical_mean(f, PhaseMatrix<N>::Zero(), rule, opts);
}

// ---------------------------------------------------------------------------
// Twisted convolution by direct quadrature over f's grid.

/// (f x g)(z) = sum_u W_u f(u) g(z - u) exp(-(i/2) sum lambda'_j Im(z_j conj(u_j))).
template <int N, class G>
cplx twisted_convolution_at(const SampledField<N>& f, const G& g, std::span<const double> lambda_prime,
                            const CPoint<N>& z) {
  check_lambda_prime(lambda_prime, N);
  cplx s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.values[i] == cplx(0.0)) continue;
    const auto u = f.grid.point(i);
    CPoint<N> d{};
    double phase = 0.0;
    for (int j = 0; j < N; ++j) {
      d[j] = z[j] - u[j];
      phase -= 0.5 * lambda_prime[j] * std::imag(z[j] * std::conj(u[j]));
    }
    s += f.grid.weight(i) * f.values[i] * cplx(g(d)) * std::polar(1.0, phase);
  }
  return s;
}

struct ConvolutionOptions {
  double truncation_tolerance = 1e-6;
  int interpolation_order = 4;
  /// refuse the direct O(size^2) path above this many kernel evaluations
  double max_work = 4e9;
};

/// max |f| on the outermost radial ring relative to max |f|.
template <int N>
double boundary_ratio(const SampledField<N>& f) {
  const double peak = max_abs(f);
  if (peak == 0.0) return 0.0;
  double edge = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto ia = f.grid.unflatten(i);
    for (int j = 0; j < N; ++j)
      if (ia[j].first == f.grid.radial_count(j) - 1) edge = std::max(edge, std::abs(f.values[i]));
  }
  return edge / peak;
}

template <int N>
SampledField<N> twisted_convolution(const SampledField<N>& f, const SampledField<N>& g,
                                    std::span<const double> lambda_prime, const ConvolutionOptions& opts = {}) {
  check_lambda_prime(lambda_prime, N);
  require(f.grid == g.grid, ErrorCode::kGridMismatch, "twisted_convolution: grids differ");
  for (const auto* h : {&f, &g}) {
    const double ratio = boundary_ratio(*h);
    require(ratio <= opts.truncation_tolerance, ErrorCode::kTruncationDominates,
            "field magnitude at r_max is " + std::to_string(ratio) + " of its peak");
  }
  require(double(f.size()) * double(f.size()) <= opts.max_work, ErrorCode::kInvalidArgument,
          "grid too large for the direct convolution path");
  const FieldFunction<N> gf(g, opts.interpolation_order, OutsidePolicy::kZero);
  SampledField<N> out(f.grid, f.metadata);
  parallel_for(f.size(), [&](std::size_t i) {
    out.values[i] = twisted_convolution_at<N>(f, gf, lambda_prime, f.grid.point(i));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Laguerre projections f x theta_k via angular diagonalization.

namespace detail {

inline Eigen::FFT<double>& local_fft() {
  thread_local Eigen::FFT<double> fft;
  return fft;
}

/// Strided layout of one coordinate inside a flat array: index =
/// ((o * R + i) * A + a) * inner + t.
struct AxisLayout {
  std::size_t outer, inner;
  int R, A;
};

template <int N>
AxisLayout axis_layout(const PolarGrid<N>& g, int j) {
  AxisLayout l{1, 1, g.radial_count(j), g.angular_count(j)};
  for (int k = 0; k < j; ++k) l.outer *= g.block(k);
  for (int k = j + 1; k < N; ++k) l.inner *= g.block(k);
  return l;
}

/// In-place DFT over the angular index of one coordinate.
inline void fft_axis(std::vector<cplx>& data, const AxisLayout& l, bool forward) {
  const std::size_t lines = l.outer * l.R * l.inner;
  parallel_for(lines, [&](std::size_t line) {
    const std::size_t t = line % l.inner;
    const std::size_t oi = line / l.inner;
    const std::size_t base = oi * l.A * l.inner + t;
    thread_local std::vector<cplx> in, out;
    in.resize(l.A);
    out.resize(l.A);
    for (int a = 0; a < l.A; ++a) in[a] = data[base + a * l.inner];
    if (forward) local_fft().fwd(out, in);
    else local_fft().inv(out, in);
    for (int a = 0; a < l.A; ++a) data[base + a * l.inner] = out[a];
  });
}

/// out[o, a, m, t] = sum_c S[(a R + c) A + m] in[o, c, m, t] on Fourier-domain data.
inline void apply_axis(const std::vector<cplx>& spectra, const std::vector<cplx>& in, std::vector<cplx>& out,
                       const AxisLayout& l) {
  out.assign(in.size(), cplx(0.0));
  const std::size_t lines = l.outer * std::size_t(l.A) * l.inner;
  parallel_for(lines, [&](std::size_t line) {
    const std::size_t t = line % l.inner;
    const std::size_t m = (line / l.inner) % l.A;
    const std::size_t o = line / (l.inner * l.A);
    const std::size_t slab = o * l.R * l.A * l.inner;
    for (int a = 0; a < l.R; ++a) {
      cplx s = 0.0;
      const cplx* row = spectra.data() + (std::size_t(a) * l.R) * l.A + m;
      for (int c = 0; c < l.R; ++c) s += row[std::size_t(c) * l.A] * in[slab + (c * l.A + m) * l.inner + t];
      out[slab + (a * l.A + m) * l.inner + t] = s;
    }
  });
}

}  // namespace detail

/// One-coordinate twisted convolution operator with kernel
/// theta_j(w) = L_j^0(lam |w|^2 / 2) e^{-lam |w|^2 / 4}, advanced degree by degree
/// with the Laguerre recurrence carried per kernel sample.
class LaguerreAxisOperator {
 public:
  LaguerreAxisOperator(const std::vector<double>& radii, const std::vector<double>& radial_weights, int angular,
                       double lam)
      : R_(static_cast<int>(radii.size())), A_(angular), lam_(lam) {
    require(lam > 0.0, ErrorCode::kInvalidArgument, "lambda' must be positive");
    const std::size_t total = std::size_t(R_) * R_ * A_;
    x_.resize(total);
    kernel_phase_.resize(total);
    prev_.assign(total, 0.0);
    cur_.assign(total, 0.0);
    spectra_.assign(total, cplx(0.0));
    for (int a = 0; a < R_; ++a)
      for (int c = 0; c < R_; ++c) {
        const double ra = radii[a], rc = radii[c];
        const double wc = radial_weights[c] * rc * 2.0 * std::numbers::pi / A_;
        for (int d = 0; d < A_; ++d) {
          const double delta = 2.0 * std::numbers::pi * d / A_;
          const std::size_t idx = (std::size_t(a) * R_ + c) * A_ + d;
          x_[idx] = 0.5 * lam * (ra * ra + rc * rc - 2.0 * ra * rc * std::cos(delta));
          kernel_phase_[idx] = wc * std::polar(1.0, 0.5 * lam * ra * rc * std::sin(delta));
        }
      }
  }

  int degree() const { return degree_; }
  int radial_count() const { return R_; }
  int angular_count() const { return A_; }

  /// Moves to the next degree (the first call gives degree 0) and rebuilds spectra().
  void advance() {
    const std::size_t total = x_.size();
    const int j = degree_;
    for (std::size_t i = 0; i < total; ++i) {
      double next;
      if (j < 0) next = std::exp(-0.5 * x_[i]);
      else if (j == 0) next = (1.0 - x_[i]) * cur_[i];
      else next = ((2.0 * j + 1.0 - x_[i]) * cur_[i] - j * prev_[i]) / (j + 1.0);
      prev_[i] = cur_[i];
      cur_[i] = next;
    }
    ++degree_;
    parallel_for(std::size_t(R_) * R_, [&](std::size_t ac) {
      thread_local std::vector<cplx> in, out;
      in.resize(A_);
      out.resize(A_);
      const std::size_t base = ac * A_;
      // spectrum S[m] = sum_d K(d) e^{+2 pi i m d / A}, taken as the forward DFT of K(-d)
      for (int d = 0; d < A_; ++d) {
        const int src = (A_ - d) % A_;
        in[d] = cur_[base + src] * kernel_phase_[base + src];
      }
      detail::local_fft().fwd(out, in);
      for (int m = 0; m < A_; ++m) spectra_[base + m] = out[m];
    });
  }

  const std::vector<cplx>& spectra() const { return spectra_; }

 private:
  int R_, A_;
  double lam_;
  int degree_ = -1;
  std::vector<double> x_;
  std::vector<cplx> kernel_phase_;
  std::vector<double> prev_, cur_;
  std::vector<cplx> spectra_;
};

inline constexpr int kMaxProjectionDegree = 200;

/// All projections f x_{lambda'} theta_{k,lambda'} for k = 0..K (unnormalized).
/// For n = 2 theta_k(w) = sum_j theta_j(w_1) theta_{k-j}(w_2) (Laguerre addition formula).
template <int N>
std::vector<SampledField<N>> laguerre_projections(const SampledField<N>& f, std::span<const double> lambda_prime,
                                                  int K) {
  check_lambda_prime(lambda_prime, N);
  require(K >= 0 && K <= kMaxProjectionDegree, ErrorCode::kRangeExceeded, "projection degree out of range");
  const auto& g = f.grid;
  std::vector<SampledField<N>> out;
  out.reserve(K + 1);
  std::vector<cplx> spectral = f.values;
  for (int j = 0; j < N; ++j) detail::fft_axis(spectral, detail::axis_layout(g, j), true);
  if constexpr (N == 1) {
    const auto layout = detail::axis_layout(g, 0);
    LaguerreAxisOperator op(g.radii(0), g.radial_weights(0), g.angular_count(0), lambda_prime[0]);
    std::vector<cplx> tmp;
    for (int k = 0; k <= K; ++k) {
      op.advance();
      detail::apply_axis(op.spectra(), spectral, tmp, layout);
      detail::fft_axis(tmp, layout, false);
      out.emplace_back(g, tmp, f.metadata);
    }
  } else {
    std::array<std::vector<std::vector<cplx>>, 2> spectra;
    for (int c = 0; c < 2; ++c) {
      LaguerreAxisOperator op(g.radii(c), g.radial_weights(c), g.angular_count(c), lambda_prime[c]);
      for (int k = 0; k <= K; ++k) {
        op.advance();
        spectra[c].push_back(op.spectra());
      }
    }
    const auto l0 = detail::axis_layout(g, 0);
    const auto l1 = detail::axis_layout(g, 1);
    std::vector<cplx> inner, outer, acc;
    for (int k = 0; k <= K; ++k) {
      acc.assign(spectral.size(), cplx(0.0));
      for (int j = 0; j <= k; ++j) {
        detail::apply_axis(spectra[1][k - j], spectral, inner, l1);
        detail::apply_axis(spectra[0][j], inner, outer, l0);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += outer[i];
      }
      detail::fft_axis(acc, l0, false);
      detail::fft_axis(acc, l1, false);
      out.emplace_back(g, acc, f.metadata);
    }
  }
  return out;
}

/// f x_{lambda'} theta_{k,lambda'}, unnormalized.
template <int N>
SampledField<N> spectral_projection(const SampledField<N>& f, int k, std::span<const double> lambda_prime) {
  require(k >= 0, ErrorCode::kInvalidArgument, "degree must be non-negative");
  auto all = laguerre_projections(f, lambda_prime, k);
  return std::move(all.back());
}

/// prod_j lambda'_j / (2 pi).
inline double spectral_prefactor(std::span<const double> lambda_prime) {
  double p = 1.0;
  for (double l : lambda_prime) p *= l / (2.0 * std::numbers::pi);
  return p;
}

template <int N>
struct LaguerreSpectrum {
  std::vector<double> lambda_prime;
  int K = 0;
  std::vector<SampledField<N>> projections;
  /// true once prod lambda'/2pi has been applied to every projection
  bool normalized = false;
  /// prefactor-weighted norm of the last projection over the norm of f
  double tail_relative = 0.0;
};

template <int N>
constexpr int max_truncation() {
  return N == 1 ? 40 : 12;
}

template <int N>
constexpr int default_truncation() {
  return N == 1 ? 30 : 10;
}

struct DecomposeOptions {
  double tail_tolerance = std::numeric_limits<double>::infinity();
};

template <int N>
LaguerreSpectrum<N> decompose(const SampledField<N>& f, std::span<const double> lambda_prime, int K,
                              const DecomposeOptions& opts = {}) {
  require(K >= 0 && K <= max_truncation<N>(), ErrorCode::kRangeExceeded,
          "truncation K = " + std::to_string(K) + " outside [0, " + std::to_string(max_truncation<N>()) + "]");
  LaguerreSpectrum<N> spec;
  spec.lambda_prime.assign(lambda_prime.begin(), lambda_prime.end());
  spec.K = K;
  spec.projections = laguerre_projections(f, lambda_prime, K);
  const double fn = l2_norm(f);
  spec.tail_relative = fn > 0.0 ? spectral_prefactor(lambda_prime) * l2_norm(spec.projections.back()) / fn : 0.0;
  require(spec.tail_relative <= opts.tail_tolerance, ErrorCode::kTruncationDominates,
          "last projection carries " + std::to_string(spec.tail_relative) + " of the norm");
  return spec;
}

template <int N>
SampledField<N> synthesize(const LaguerreSpectrum<N>& spec) {
  require(!spec.projections.empty(), ErrorCode::kInvalidArgument, "empty spectrum");
  const double c = spec.normalized ? 1.0 : spectral_prefactor(spec.lambda_prime);
  SampledField<N> out(spec.projections.front().grid, spec.projections.front().metadata);
  for (const auto& p : spec.projections) {
    require(p.grid == out.grid, ErrorCode::kGridMismatch, "spectrum projections use different grids");
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += c * p.values[i];
  }
  return out;
}

template <int N>
void normalize(LaguerreSpectrum<N>& spec) {
  if (spec.normalized) return;
  const double c = spectral_prefactor(spec.lambda_prime);
  for (auto& p : spec.projections)
    for (auto& v : p.values) v *= c;
  spec.normalized = true;
}

/// ||f - synthesize(spec)||_2 / ||f||_2.
template <int N>
double round_trip_residual(const SampledField<N>& f, const LaguerreSpectrum<N>& spec) {
  const double fn = l2_norm(f);
  const double d = l2_distance(f, synthesize(spec));
  return fn > 0.0 ? d / fn : d;
}

/// Directory with one field file per degree plus manifest.json.
template <int N>
void write_spectrum(const LaguerreSpectrum<N>& spec, const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["version"] = kFieldFileVersion;
  manifest["n"] = N;
  manifest["lambda_prime"] = spec.lambda_prime;
  manifest["K"] = spec.K;
  manifest["normalized"] = spec.normalized;
  manifest["tail_relative"] = spec.tail_relative;
  manifest["terms"] = nlohmann::json::array();
  for (int k = 0; k <= spec.K; ++k) {
    const std::string name = "k" + std::to_string(k) + ".field";
    write_field(spec.projections[k], (std::filesystem::path(dir) / name).string());
    manifest["terms"].push_back({{"k", k}, {"file", name}, {"norm", l2_norm(spec.projections[k])}});
  }
  std::ofstream(std::filesystem::path(dir) / "manifest.json") << manifest.dump(2) << '\n';
}

template <int N>
LaguerreSpectrum<N> read_spectrum(const std::string& dir) {
  std::ifstream in(std::filesystem::path(dir) / "manifest.json");
  if (!in) fail(ErrorCode::kInvalidArgument, "missing manifest.json in '" + dir + "'");
  LaguerreSpectrum<N> spec;
  try {
    const auto m = nlohmann::json::parse(in);
    if (m.at("version").get<int>() != kFieldFileVersion) fail(ErrorCode::kVersionMismatch, "spectrum manifest version");
    require(m.at("n").get<int>() == N, ErrorCode::kDimensionMismatch, "spectrum dimension differs");
    spec.lambda_prime = m.at("lambda_prime").get<std::vector<double>>();
    spec.K = m.at("K").get<int>();
    spec.normalized = m.at("normalized").get<bool>();
    spec.tail_relative = m.value("tail_relative", 0.0);
    for (const auto& t : m.at("terms"))
      spec.projections.push_back(
          read_sampled<N>((std::filesystem::path(dir) / t.at("file").get<std::string>()).string()));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformedFile, std::string("manifest.json: ") + e.what());
  }
  require(static_cast<int>(spec.projections.size()) == spec.K + 1, ErrorCode::kMalformedFile,
          "manifest lists a different number of terms than K + 1");
  return spec;
}

// ---------------------------------------------------------------------------
// Angular structure.

/// R_m f by the discrete angular Fourier transform per coordinate.
template <int N>
SampledField<N> m_radialize(const SampledField<N>& f, const std::type_identity_t<std::array<int, N>>& m_index) {
  for (int j = 0; j < N; ++j)
    require(f.grid.angular_count(j) > 2 * std::abs(m_index[j]), ErrorCode::kNyquistViolation,
            "angular count " + std::to_string(f.grid.angular_count(j)) + " does not resolve m = " +
                std::to_string(m_index[j]));
  std::vector<cplx> data = f.values;
  for (int j = 0; j < N; ++j) {
    const auto l = detail::axis_layout(f.grid, j);
    detail::fft_axis(data, l, true);
    const int keep = ((m_index[j] % l.A) + l.A) % l.A;
    for (std::size_t o = 0; o < l.outer * l.R; ++o)
      for (int a = 0; a < l.A; ++a)
        if (a != keep)
          for (std::size_t t = 0; t < l.inner; ++t) data[(o * l.A + a) * l.inner + t] = 0.0;
    detail::fft_axis(data, l, false);
  }
  return SampledField<N>(f.grid, std::move(data), f.metadata);
}

template <int N>
struct HomogeneousTerm {
  std::array<int, N> beta{};
  cplx coefficient;
};

template <int N>
struct HomogeneousExpansion {
  std::array<int, N> m{};
  int k = 0;
  std::vector<double> lambda_prime;
  std::vector<HomogeneousTerm<N>> terms;
};

template <int N>
SampledField<N> sample_psi_alpha_beta(const std::array<int, N>& alpha, const std::array<int, N>& beta,
                                      std::span<const double> lambda_prime, const PolarGrid<N>& grid) {
  const std::vector<double> lp(lambda_prime.begin(), lambda_prime.end());
  return sample([&](const CPoint<N>& z) { return psi_alpha_beta(alpha, beta, lp, z); }, grid);
}

/// Coefficients (f, Psi_{beta - m, beta}) over |beta| = k for m-homogeneous f.
template <int N>
HomogeneousExpansion<N> homogeneous_projection_expand(const SampledField<N>& f, const std::type_identity_t<std::array<int, N>>& m,
                                                      int k, std::span<const double> lambda_prime) {
  check_lambda_prime(lambda_prime, N);
  require(k >= 0, ErrorCode::kInvalidArgument, "degree must be non-negative");
  const double dev = max_distance(m_radialize(f, m), f);
  require(dev <= 1e-8 * std::max(1.0, max_abs(f)), ErrorCode::kNotHomogeneous,
          "R_m f differs from f by " + std::to_string(dev));
  HomogeneousExpansion<N> ex;
  ex.m = m;
  ex.k = k;
  ex.lambda_prime.assign(lambda_prime.begin(), lambda_prime.end());
  std::array<int, N> beta{};
  auto visit = [&](const std::array<int, N>& b) {
    std::array<int, N> alpha{};
    for (int j = 0; j < N; ++j) {
      alpha[j] = b[j] - m[j];
      if (alpha[j] < 0) return;
    }
    ex.terms.push_back({b, inner_product(f, sample_psi_alpha_beta<N>(alpha, b, lambda_prime, f.grid))});
  };
  if constexpr (N == 1) {
    beta[0] = k;
    visit(beta);
  } else {
    for (int b0 = k; b0 >= 0; --b0) visit({b0, k - b0});
  }
  return ex;
}

/// prod_j (2 pi / lambda'_j) sum_beta c_beta Psi_{beta - m, beta}, which equals f x theta_k.
template <int N>
SampledField<N> reconstruct_homogeneous_projection(const HomogeneousExpansion<N>& ex, const PolarGrid<N>& grid) {
  double c = 1.0;
  for (double l : ex.lambda_prime) c *= 2.0 * std::numbers::pi / l;
  SampledField<N> out(grid);
  for (const auto& t : ex.terms) {
    std::array<int, N> alpha{};
    for (int j = 0; j < N; ++j) alpha[j] = t.beta[j] - ex.m[j];
    const auto psi = sample_psi_alpha_beta<N>(alpha, t.beta, ex.lambda_prime, grid);
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += c * t.coefficient * psi.values[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Twisted Laplacian.

struct LaplacianOptions {
  double h = 1.0 / 64.0;
  double tolerance = 1e-3;
};

/// L f = -Laplace f + (1/4) sum lambda'_j^2 |z_j|^2 f + i sum lambda'_j (x_j d/dy_j - y_j d/dx_j) f
/// at z by central differences with step h.
template <int N, class F>
cplx twisted_laplacian_at(const F& f, std::span<const double> lambda_prime, const CPoint<N>& z, double h) {
  const cplx f0 = f(z);
  cplx lap = 0.0, rot = 0.0;
  double pot = 0.0;
  for (int j = 0; j < N; ++j) {
    auto shifted = [&](cplx d) {
      CPoint<N> w = z;
      w[j] += d;
      return cplx(f(w));
    };
    const cplx fxp = shifted({h, 0}), fxm = shifted({-h, 0});
    const cplx fyp = shifted({0, h}), fym = shifted({0, -h});
    lap += (fxp + fxm + fyp + fym - 4.0 * f0) / (h * h);
    const cplx dx = (fxp - fxm) / (2.0 * h);
    const cplx dy = (fyp - fym) / (2.0 * h);
    rot += lambda_prime[j] * (z[j].real() * dy - z[j].imag() * dx);
    pot += 0.25 * lambda_prime[j] * lambda_prime[j] * std::norm(z[j]);
  }
  return -lap + pot * f0 + cplx(0.0, 1.0) * rot;
}

template <int N, class F>
SampledField<N> apply_twisted_laplacian(const F& f, std::span<const double> lambda_prime, const PolarGrid<N>& grid,
                                        const LaplacianOptions& opts = {}) {
  check_lambda_prime(lambda_prime, N);
  SampledField<N> out(grid);
  std::vector<double> gap(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const auto z = grid.point(i);
    const cplx a = twisted_laplacian_at<N>(f, lambda_prime, z, opts.h);
    const cplx b = twisted_laplacian_at<N>(f, lambda_prime, z, 0.5 * opts.h);
    out.values[i] = a;
    gap[i] = std::abs(a - b);
  });
  const double worst = *std::max_element(gap.begin(), gap.end());
  require(worst <= opts.tolerance, ErrorCode::kGridTooCoarse,
          "finite-difference steps h and h/2 disagree by " + std::to_string(worst));
  return out;
}

// ---------------------------------------------------------------------------
// Centre variable.

/// f^l(z) = int f(z, t) e^{i l.t} dt by the discrete transform over the centre grid.
template <int N>
SampledField<N> fourier_coefficient_center(const PeriodicField<N>& f, std::span<const int> l) {
  validate_periodic(f);
  require(static_cast<int>(l.size()) == f.m, ErrorCode::kDimensionMismatch, "l must have m components");
  for (int k = 0; k < f.m; ++k)
    require(f.t_count[k] > 2 * std::abs(l[k]), ErrorCode::kNyquistViolation,
            "centre sample count " + std::to_string(f.t_count[k]) + " does not resolve l = " + std::to_string(l[k]));
  const std::size_t cs = f.center_size();
  std::vector<cplx> phase(cs);
  for (std::size_t c = 0; c < cs; ++c) {
    const auto t = f.center_point(c);
    double s = 0.0;
    for (int k = 0; k < f.m; ++k) s += l[k] * t[k];
    phase[c] = std::polar(std::pow(2.0 * std::numbers::pi, f.m) / double(cs), s);
  }
  SampledField<N> out(f.grid, f.metadata);
  parallel_for(f.grid.size(), [&](std::size_t i) {
    cplx s = 0.0;
    for (std::size_t c = 0; c < cs; ++c) s += f.values[i * cs + c] * phase[c];
    out.values[i] = s;
  });
  return out;
}

/// Group spherical mean (f * mu_r)(x, t) = sum_q w_q f(x - xi_q, t - (1/2) <x, U xi_q>),
/// spatial interpolation at order `interpolation_order` and trigonometric interpolation in t.
template <int N>
PeriodicField<N> group_spherical_mean(const PeriodicField<N>& f, const MetivierStructure& s,
                                      const SphereRule<N>& rule, const MeanOptions& opts = {}) {
  validate_periodic(f);
  require(s.n == N && s.m == f.m, ErrorCode::kDimensionMismatch, "structure does not match field dimensions");
  const std::size_t cs = f.center_size();
  const int m = f.m;
  // centre frequencies per coordinate in FFT order
  std::vector<std::vector<int>> freq(m);
  for (int k = 0; k < m; ++k)
    for (int q = 0; q < f.t_count[k]; ++q) freq[k].push_back(q <= f.t_count[k] / 2 ? q : q - f.t_count[k]);
  // dense DFT matrices over the multi-index (cs is small)
  std::vector<cplx> fwd(cs * cs), inv(cs * cs);
  std::vector<std::vector<int>> modes(cs, std::vector<int>(m));
  std::vector<std::vector<bool>> nyquist(cs, std::vector<bool>(m));
  for (std::size_t c = 0; c < cs; ++c) {
    std::size_t r = c;
    for (int k = m - 1; k >= 0; --k) {
      const int q = static_cast<int>(r % f.t_count[k]);
      r /= f.t_count[k];
      modes[c][k] = freq[k][q];
      nyquist[c][k] = 2 * q == f.t_count[k];
    }
  }
  for (std::size_t c = 0; c < cs; ++c) {
    const auto t = f.center_point(c);
    for (std::size_t q = 0; q < cs; ++q) {
      double s = 0.0;
      for (int k = 0; k < m; ++k) s += modes[q][k] * t[k];
      fwd[q * cs + c] = std::polar(1.0 / double(cs), -s);
      inv[c * cs + q] = std::polar(1.0, s);
    }
  }
  std::vector<Eigen::Matrix<double, 2 * N, 2 * N>> u(m);
  for (int k = 0; k < m; ++k) u[k] = s.u[k];
  const Interpolant<N> interp(f.grid, opts.interpolation_order, opts.outside);
  PeriodicField<N> out = f;
  parallel_for(f.grid.size(), [&](std::size_t i) {
    const auto z = f.grid.point(i);
    const auto x = to_real<N>(z);
    std::vector<cplx> acc(cs, 0.0), slice(cs), coef(cs);
    thread_local std::vector<typename Interpolant<N>::Tap> t0, t1;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const auto& w = rule.nodes[q];
      CPoint<N> p{};
      for (int j = 0; j < N; ++j) p[j] = z[j] - w[j];
      std::fill(slice.begin(), slice.end(), cplx(0.0));
      if (!interp.taps(0, p[0], t0)) continue;
      if constexpr (N == 1) {
        for (const auto& t : t0) {
          const std::size_t base = (std::size_t(t.i) * f.grid.angular_count(0) + t.a) * cs;
          for (std::size_t c = 0; c < cs; ++c) slice[c] += t.w * f.values[base + c];
        }
      } else {
        if (!interp.taps(1, p[1], t1)) continue;
        for (const auto& a : t0)
          for (const auto& b : t1) {
            const std::size_t idx = f.grid.flatten({std::pair{a.i, a.a}, std::pair{b.i, b.a}});
            const double wt = a.w * b.w;
            for (std::size_t c = 0; c < cs; ++c) slice[c] += wt * f.values[idx * cs + c];
          }
      }
      // shift t by (1/2) <x, U^(k) xi>
      const auto xi = to_real<N>(w);
      std::vector<double> shift(m);
      for (int k = 0; k < m; ++k) shift[k] = 0.5 * x.dot(u[k] * xi);
      for (std::size_t qq = 0; qq < cs; ++qq) {
        cplx s = 0.0;
        for (std::size_t c = 0; c < cs; ++c) s += fwd[qq * cs + c] * slice[c];
        double factor_re = 1.0;
        double ph = 0.0;
        for (int k = 0; k < m; ++k) {
          if (nyquist[qq][k]) factor_re *= std::cos(modes[qq][k] * shift[k]);
          else ph -= modes[qq][k] * shift[k];
        }
        coef[qq] = s * factor_re * std::polar(1.0, ph);
      }
      for (std::size_t c = 0; c < cs; ++c) {
        cplx s = 0.0;
        for (std::size_t qq = 0; qq < cs; ++qq) s += inv[c * cs + qq] * coef[qq];
        acc[c] += rule.weights[q] * s;
      }
    }
    for (std::size_t c = 0; c < cs; ++c) out.values[i * cs + c] = acc[c];
  });
  return out;
}

}  // namespace metivier
