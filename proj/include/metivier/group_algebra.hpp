#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "metivier/error.hpp"
#include "metivier/polar_grid.hpp"

namespace metivier {

/// Structure matrices U^(k) of a step-two group with 2n-dimensional first
/// layer and m-dimensional centre.
struct MetivierStructure {
  int n = 0;
  int m = 0;
  std::vector<Eigen::MatrixXd> u;
  std::string name;
};

inline constexpr double kSkewTolerance = 1e-12;
inline constexpr double kSingularDetThreshold = 1e-10;

inline MetivierStructure validate_structure(int n, int m, std::vector<Eigen::MatrixXd> u,
                                            std::string name = {}) {
  require(n >= 1 && m >= 1, ErrorCode::kDimensionMismatch, "n and m must be positive");
  require(static_cast<int>(u.size()) == m, ErrorCode::kDimensionMismatch,
          "expected " + std::to_string(m) + " structure matrices, got " + std::to_string(u.size()));
  for (int k = 0; k < m; ++k) {
    require(u[k].rows() == 2 * n && u[k].cols() == 2 * n, ErrorCode::kDimensionMismatch,
            "U^(" + std::to_string(k + 1) + ") is not " + std::to_string(2 * n) + "x" + std::to_string(2 * n));
    require(u[k].allFinite(), ErrorCode::kNonFiniteValue, "U^(" + std::to_string(k + 1) + ") has non-finite entries");
    const double skew = (u[k] + u[k].transpose()).cwiseAbs().maxCoeff();
    require(skew <= kSkewTolerance, ErrorCode::kNotSkewSymmetric,
            "U^(" + std::to_string(k + 1) + ") has |U + U^T|_max = " + std::to_string(skew));
  }
  Eigen::MatrixXd stack(m, 4 * n * n);
  for (int k = 0; k < m; ++k) stack.row(k) = Eigen::Map<const Eigen::RowVectorXd>(u[k].data(), 4 * n * n);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(stack);
  lu.setThreshold(1e-10);
  require(lu.rank() == m, ErrorCode::kDependentStructureMatrices,
          "structure matrices have rank " + std::to_string(lu.rank()) + " < m = " + std::to_string(m));
  return MetivierStructure{n, m, std::move(u), std::move(name)};
}

/// Standard symplectic matrix [[0, -I], [I, 0]] of order 2n.
inline Eigen::MatrixXd standard_symplectic(int n) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  j.topRightCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
  j.bottomLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
  return j;
}

/// Built-in structures: "heisenberg:<n>", "quaternionic", "product-counterexample",
/// "anisotropic" (diag-block(J, 2J), n = 2, m = 1).
inline MetivierStructure builtin_structure(const std::string& name) {
  Eigen::Matrix2d jm;
  jm << 0, -1, 1, 0;
  if (name.rfind("heisenberg:", 0) == 0) {
    int n = 0;
    try {
      n = std::stoi(name.substr(11));
    } catch (...) {
      fail(ErrorCode::kInvalidArgument, "bad heisenberg dimension in '" + name + "'");
    }
    require(n >= 1, ErrorCode::kInvalidArgument, "heisenberg dimension must be positive");
    return validate_structure(n, 1, {standard_symplectic(n)}, name);
  }
  if (name == "quaternionic") {
    Eigen::Matrix4d li, lj, lk;
    li << 0, -1, 0, 0, 1, 0, 0, 0, 0, 0, 0, -1, 0, 0, 1, 0;
    lj << 0, 0, -1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, -1, 0, 0;
    lk << 0, 0, 0, -1, 0, 0, -1, 0, 0, 1, 0, 0, 1, 0, 0, 0;
    return validate_structure(2, 3, {li, lj, lk}, name);
  }
  if (name == "product-counterexample") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4), b = Eigen::MatrixXd::Zero(4, 4);
    a.topLeftCorner(2, 2) = jm;
    b.bottomRightCorner(2, 2) = jm;
    return validate_structure(2, 2, {a, b}, name);
  }
  if (name == "anisotropic") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
    a.topLeftCorner(2, 2) = jm;
    a.bottomRightCorner(2, 2) = 2.0 * jm;
    return validate_structure(2, 1, {a}, name);
  }
  fail(ErrorCode::kInvalidArgument, "unknown built-in structure '" + name + "'");
}

/// Structure file: {"n": int, "m": int, "u": [m row-major 2n x 2n arrays]}.
inline MetivierStructure structure_from_json(const nlohmann::json& j) {
  try {
    const int n = j.at("n").get<int>();
    const int m = j.at("m").get<int>();
    require(n >= 1 && m >= 1, ErrorCode::kDimensionMismatch, "n and m must be positive");
    std::vector<Eigen::MatrixXd> u;
    for (const auto& mat : j.at("u")) {
      require(mat.is_array() && static_cast<int>(mat.size()) == 2 * n, ErrorCode::kDimensionMismatch,
              "structure matrix must have 2n rows");
      Eigen::MatrixXd a(2 * n, 2 * n);
      for (int r = 0; r < 2 * n; ++r) {
        require(mat[r].is_array() && static_cast<int>(mat[r].size()) == 2 * n, ErrorCode::kDimensionMismatch,
                "structure matrix row must have 2n entries");
        for (int c = 0; c < 2 * n; ++c) a(r, c) = mat[r][c].get<double>();
      }
      u.push_back(std::move(a));
    }
    return validate_structure(n, m, std::move(u), j.value("name", std::string("file")));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("structure JSON: ") + e.what());
  }
}

inline nlohmann::json structure_to_json(const MetivierStructure& s) {
  nlohmann::json j;
  j["n"] = s.n;
  j["m"] = s.m;
  j["u"] = nlohmann::json::array();
  for (const auto& a : s.u) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < a.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
      rows.push_back(row);
    }
    j["u"].push_back(rows);
  }
  return j;
}

inline Eigen::MatrixXd v_lambda(const MetivierStructure& s, std::span<const double> lambda) {
  require(static_cast<int>(lambda.size()) == s.m, ErrorCode::kDimensionMismatch,
          "lambda has length " + std::to_string(lambda.size()) + ", structure has m = " + std::to_string(s.m));
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(2 * s.n, 2 * s.n);
  for (int k = 0; k < s.m; ++k) v += lambda[k] * s.u[k];
  return v;
}

/// |det V| after scaling V to unit max-norm; 0 for V = 0.
inline double normalized_abs_det(const Eigen::MatrixXd& v) {
  const double scale = v.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return std::abs((v / scale).determinant());
}

struct ProbePlan {
  int count = 2000;
  std::uint64_t seed = 0;
  bool include_coordinate_directions = true;
};

struct MetivierReport {
  bool is_metivier_on_probes = true;
  std::vector<double> worst_lambda;
  double min_abs_det = 0.0;
  int probes = 0;
};

/// Seeded pseudo-random directions on the unit sphere in R^m (Gaussian
/// vectors by Box-Muller over mt19937_64, normalized).
inline std::vector<std::vector<double>> sphere_probes(int m, const ProbePlan& plan) {
  std::vector<std::vector<double>> out;
  if (plan.include_coordinate_directions)
    for (int k = 0; k < m; ++k) {
      std::vector<double> e(m, 0.0);
      e[k] = 1.0;
      out.push_back(e);
    }
  std::mt19937_64 rng(plan.seed);
  auto uniform = [&] { return (double(rng() >> 11) + 0.5) * 0x1.0p-53; };
  for (int p = 0; p < plan.count; ++p) {
    std::vector<double> v(m);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (int k = 0; k < m; ++k) {
        v[k] = std::sqrt(-2.0 * std::log(uniform())) * std::cos(2.0 * std::numbers::pi * uniform());
        norm += v[k] * v[k];
      }
    } while (norm < 1e-20);
    for (double& x : v) x /= std::sqrt(norm);
    out.push_back(std::move(v));
  }
  return out;
}

inline MetivierReport metivier_check(const MetivierStructure& s, const ProbePlan& plan = {}) {
  const auto probes = sphere_probes(s.m, plan);
  require(!probes.empty(), ErrorCode::kInvalidArgument, "probe set is empty");
  MetivierReport report;
  report.min_abs_det = std::numeric_limits<double>::infinity();
  for (const auto& lam : probes) {
    const double d = normalized_abs_det(v_lambda(s, lam));
    if (d < report.min_abs_det) {
      report.min_abs_det = d;
      report.worst_lambda = lam;
    }
  }
  report.probes = static_cast<int>(probes.size());
  report.is_metivier_on_probes = report.min_abs_det >= kSingularDetThreshold;
  return report;
}

struct SymplecticSpectrum {
  std::vector<double> lambda;
  /// A_lambda, columns (p_1..p_n, q_1..q_n) with V p_j = mu_j q_j, V q_j = -mu_j p_j
  Eigen::MatrixXd a_mat;
  std::vector<double> mu;
  /// [[0, -J], [J, 0]] with J = diag(mu)
  Eigen::MatrixXd u_normal;

  int n() const { return static_cast<int>(mu.size()); }
};

inline Eigen::MatrixXd normal_block(std::span<const double> mu) {
  const int n = static_cast<int>(mu.size());
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    u(j, n + j) = -mu[j];
    u(n + j, j) = mu[j];
  }
  return u;
}

/// A_lambda from the real Schur form of V_lambda.
inline SymplecticSpectrum symplectic_spectrum(const MetivierStructure& s, std::span<const double> lambda) {
  const Eigen::MatrixXd v = v_lambda(s, lambda);
  bool nonzero = false;
  for (double l : lambda) nonzero = nonzero || l != 0.0;
  require(nonzero, ErrorCode::kSingularPencil, "lambda = 0 gives V = 0");
  const double det = normalized_abs_det(v);
  require(det >= kSingularDetThreshold, ErrorCode::kSingularPencil,
          "V_lambda numerically singular (|det| = " + std::to_string(det) + " after normalization)");
  const int n = s.n;
  Eigen::RealSchur<Eigen::MatrixXd> schur(v);
  if (schur.info() != Eigen::Success) fail(ErrorCode::kNonConvergence, "real Schur decomposition failed");
  const Eigen::MatrixXd& t = schur.matrixT();
  const Eigen::MatrixXd& z = schur.matrixU();

  struct Pair {
    double mu;
    Eigen::VectorXd p, q;
  };
  std::vector<Pair> pairs;
  const double scale = v.cwiseAbs().maxCoeff();
  for (int i = 0; i < 2 * n;) {
    if (i + 1 >= 2 * n || std::abs(t(i + 1, i)) <= 1e-14 * scale)
      fail(ErrorCode::kSingularPencil, "V_lambda has a real eigenvalue block");
    const double beta = 0.5 * (t(i, i + 1) - t(i + 1, i));
    Pair pr;
    pr.mu = std::abs(beta);
    if (beta > 0) {
      pr.q = z.col(i);
      pr.p = z.col(i + 1);
    } else {
      pr.p = z.col(i);
      pr.q = z.col(i + 1);
    }
    for (int k = 0; k < 2 * n; ++k)
      if (std::abs(pr.p(k)) > 1e-8) {
        if (pr.p(k) < 0) {
          pr.p = -pr.p;
          pr.q = -pr.q;
        }
        break;
      }
    pairs.push_back(std::move(pr));
    i += 2;
  }
  std::stable_sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) {
    if (std::abs(a.mu - b.mu) > 1e-12 * scale) return a.mu > b.mu;
    for (int k = 0; k < 2 * n; ++k) {
      const double x = std::abs(a.p(k)), y = std::abs(b.p(k));
      if (std::abs(x - y) > 1e-12) return x > y;
    }
    return false;
  });
  SymplecticSpectrum spec;
  spec.lambda.assign(lambda.begin(), lambda.end());
  spec.a_mat.resize(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    spec.a_mat.col(j) = pairs[j].p;
    spec.a_mat.col(n + j) = pairs[j].q;
    spec.mu.push_back(pairs[j].mu);
  }
  spec.u_normal = normal_block(spec.mu);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2 * n, 2 * n);
  const double orth = (spec.a_mat * spec.a_mat.transpose() - eye).cwiseAbs().maxCoeff();
  const double inter = (v * spec.a_mat - spec.a_mat * spec.u_normal).cwiseAbs().maxCoeff();
  if (orth > 1e-10 || inter > 1e-8)
    fail(ErrorCode::kNonConvergence, "normal form residuals too large (orthogonality " + std::to_string(orth) +
                                         ", intertwining " + std::to_string(inter) + ")");
  return spec;
}

inline std::vector<double> lambda_prime_of(const SymplecticSpectrum& spec) { return spec.mu; }

/// Real form x in R^{2N} of z in C^N: x_j = Re z_j, x_{N+j} = Im z_j.
template <int N>
Eigen::Matrix<double, 2 * N, 1> to_real(const CPoint<N>& z) {
  Eigen::Matrix<double, 2 * N, 1> x;
  for (int j = 0; j < N; ++j) {
    x(j) = z[j].real();
    x(N + j) = z[j].imag();
  }
  return x;
}

template <int N>
CPoint<N> to_complex(const Eigen::Matrix<double, 2 * N, 1>& x) {
  CPoint<N> z{};
  for (int j = 0; j < N; ++j) z[j] = cplx(x(j), x(N + j));
  return z;
}

enum class Direction { kForward, kInverse };

struct RotateOptions {
  int interpolation_order = 4;
  OutsidePolicy outside = OutsidePolicy::kZero;
};

/// Samples x -> f(A x) (forward) or f(A^T x) (inverse) on f's grid.
template <int N>
SampledField<N> rotate_field(const SampledField<N>& f, const SymplecticSpectrum& spec, Direction dir,
                             const RotateOptions& opts = {}) {
  require(spec.n() == N, ErrorCode::kDimensionMismatch, "spectrum dimension differs from field dimension");
  const Eigen::Matrix<double, 2 * N, 2 * N> a =
      dir == Direction::kForward ? spec.a_mat : Eigen::MatrixXd(spec.a_mat.transpose());
  const Interpolant<N> interp(f.grid, opts.interpolation_order, opts.outside);
  SampledField<N> out(f.grid, f.metadata);
  parallel_for(f.size(), [&](std::size_t i) {
    const auto x = to_real<N>(f.grid.point(i));
    out.values[i] = interp(f.values, to_complex<N>(a * x));
  });
  return out;
}

}  // namespace metivier
