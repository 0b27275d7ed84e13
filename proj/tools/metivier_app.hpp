#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "metivier/metivier.hpp"

namespace metivier::app {

using nlohmann::json;

enum Exit { kOk = 0, kValidation = 1, kPrecondition = 2, kIdentityFailure = 3 };

/// Merged configuration: config file first, command-line flags on top.
struct RunConfig {
  std::string command;
  std::string structure = "heisenberg:1";
  std::vector<double> lambda;
  std::vector<double> lambda_prime;
  int n = 1;
  std::optional<int> radial, angular;
  std::optional<double> r_max;
  std::vector<double> radii;
  std::vector<double> weights;
  double r1 = 0.0, r2 = 0.0;
  std::optional<int> K;
  int L = 1;
  int l = 1;
  RadiiBounds bounds;
  std::optional<double> tolerance;
  std::string output = "metivier_out";
  std::uint64_t seed = 0;
  std::string input;
  std::string field = "gaussian";
  int rule_order = 0;
  std::string encoding = "binary";
  std::string kind = "laguerre";
  int degree = 10;
  int type = 0;
  int count = 20;
};

inline json matrix_json(const Eigen::MatrixXd& a) {
  json rows = json::array();
  for (int r = 0; r < a.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
    rows.push_back(row);
  }
  return rows;
}

template <class T>
void take(const json& j, const char* key, T& dst) {
  if (j.contains(key) && !j.at(key).is_null()) dst = j.at(key).get<T>();
}

template <class T>
void take(const json& j, const char* key, std::optional<T>& dst) {
  if (j.contains(key) && !j.at(key).is_null()) dst = j.at(key).get<T>();
}

inline RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    take(j, "command", c.command);
    take(j, "structure", c.structure);
    take(j, "lambda", c.lambda);
    take(j, "lambda_prime", c.lambda_prime);
    take(j, "n", c.n);
    if (j.contains("grid")) {
      take(j.at("grid"), "radial", c.radial);
      take(j.at("grid"), "angular", c.angular);
      take(j.at("grid"), "r_max", c.r_max);
    }
    take(j, "radii", c.radii);
    take(j, "weights", c.weights);
    take(j, "r1", c.r1);
    take(j, "r2", c.r2);
    take(j, "K", c.K);
    take(j, "L", c.L);
    take(j, "l", c.l);
    take(j, "k_max", c.bounds.k_max);
    take(j, "n_max", c.bounds.n_max);
    take(j, "tol", c.bounds.tol);
    take(j, "tolerance", c.tolerance);
    take(j, "output", c.output);
    take(j, "seed", c.seed);
    take(j, "input", c.input);
    take(j, "field", c.field);
    take(j, "rule_order", c.rule_order);
    take(j, "encoding", c.encoding);
    take(j, "kind", c.kind);
    take(j, "degree", c.degree);
    take(j, "type", c.type);
    take(j, "count", c.count);
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("config: ") + e.what());
  }
  return c;
}

inline MetivierStructure load_structure(const std::string& ref) {
  if (std::filesystem::exists(ref)) {
    std::ifstream in(ref);
    try {
      return structure_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
      fail(ErrorCode::kInvalidArgument, "structure file '" + ref + "': " + e.what());
    }
  }
  return builtin_structure(ref);
}

template <int N>
PolarGrid<N> grid_of(const RunConfig& c) {
  const auto d = PolarGrid<N>::default_grid();
  return PolarGrid<N>::uniform(c.radial.value_or(d.radial_count(0)), c.angular.value_or(d.angular_count(0)),
                               c.r_max.value_or(d.r_max()));
}

inline std::vector<double> lambda_prime_or_default(const RunConfig& c, int n) {
  if (c.lambda_prime.empty()) return std::vector<double>(n, 1.0);
  return c.lambda_prime;
}

struct Outcome {
  int code = kOk;
  json report;
  std::string summary;
};

inline void write_report(const RunConfig& c, const Outcome& o) {
  std::filesystem::create_directories(c.output);
  std::ofstream(std::filesystem::path(c.output) / (c.command + "_report.json")) << o.report.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

inline Outcome cmd_spectrum(const RunConfig& c) {
  const auto s = load_structure(c.structure);
  std::vector<double> lambda = c.lambda;
  if (lambda.empty()) {
    lambda.assign(s.m, 0.0);
    lambda[0] = 1.0;
  }
  Outcome o;
  const auto check = metivier_check(s, ProbePlan{2000, c.seed, true});
  o.report["structure"] = s.name;
  o.report["n"] = s.n;
  o.report["m"] = s.m;
  o.report["lambda"] = lambda;
  o.report["metivier_check"] = {{"is_metivier_on_probes", check.is_metivier_on_probes},
                                {"min_abs_det", check.min_abs_det},
                                {"worst_lambda", check.worst_lambda},
                                {"probes", check.probes}};
  const auto spec = symplectic_spectrum(s, lambda);
  const Eigen::MatrixXd v = v_lambda(s, lambda);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2 * s.n, 2 * s.n);
  o.report["mu"] = spec.mu;
  o.report["lambda_prime"] = lambda_prime_of(spec);
  o.report["a_mat"] = matrix_json(spec.a_mat);
  o.report["orthogonality_residual"] = (spec.a_mat.transpose() * spec.a_mat - eye).cwiseAbs().maxCoeff();
  o.report["intertwining_residual"] = (v * spec.a_mat - spec.a_mat * spec.u_normal).cwiseAbs().maxCoeff();
  std::ostringstream ss;
  ss << "structure " << s.name << ", mu =";
  for (double m : spec.mu) ss << ' ' << m;
  o.summary = ss.str();
  return o;
}

/// Twisted mean at A z against the modified mean of f o A, analytic Gaussian test field.
template <int N>
double rotation_gap(const MetivierStructure& s, std::span<const double> lambda, const SymplecticSpectrum& spec,
                          std::uint64_t seed) {
  const Eigen::MatrixXd a = spec.a_mat;
  auto f = [](const CPoint<N>& z) {
    double q = 0.0;
    for (int j = 0; j < N; ++j) q += std::norm(z[j] - cplx(0.3 * (j + 1), -0.2));
    return cplx(std::exp(-q), 0.0);
  };
  auto fa = [&](const CPoint<N>& z) {
    const Eigen::Matrix<double, 2 * N, 1> x = a * to_real<N>(z);
    return f(to_complex<N>(x));
  };
  double worst = 0.0;
  for (double r : {0.5, 1.0, 2.0}) {
    const auto rule = build_sphere_rule<N>(r, N == 1 ? 64 : 32);
    for (const auto& z : test_points<N>(N == 1 ? 20 : 6, 2.0, seed + 3)) {
      const Eigen::Matrix<double, 2 * N, 1> x = a * to_real<N>(z);
      const cplx lhs = twisted_spherical_mean_at<N>(f, s, lambda, rule, to_complex<N>(x));
      const cplx rhs = modified_twisted_mean_at<N>(fa, spec, rule, z);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return worst;
}

struct SuiteResult {
  std::string name;
  double max_error;
  double tolerance;
};

/// Identity suites in the forms that hold; see the README for the constants.
inline std::vector<SuiteResult> run_identity_suites(const RunConfig& c) {
  std::vector<SuiteResult> out;
  const int K = c.K.value_or(30);
  require(K >= 0 && K <= max_truncation<1>(), ErrorCode::kRangeExceeded,
          "K = " + std::to_string(K) + " beyond the truncation bound 40");
  auto tol = [&](double t) { return c.tolerance.value_or(t); };

  {  // factorization of the mean of theta_k, n = 1, lambda' = 1, sampled on the default grid
    const std::vector<double> lp{1.0};
    const auto g = PolarGrid<1>::default_grid();
    double worst = 0.0;
    const auto pts = test_points<1>(40, 4.0, c.seed + 7);
    for (int k = 0; k <= 8; ++k) {
      const auto th = sample([&](const CPoint<1>& z) { return theta_k(k, lp, z); }, g);
      const FieldFunction<1> fn(th, 12);
      for (double r : {0.5, 1.0, 2.0}) {
        const auto rule = build_sphere_rule<1>(r, 64);
        for (const auto& z : pts) {
          const cplx v = lambda_prime_mean_at<1>(fn, lp, rule, z);
          worst = std::max(worst, std::abs(v - mean_factor(k, 1) * theta_k(k, lp, z) * theta_radial(k, 1, 1.0, r)));
        }
      }
    }
    out.push_back({"mean_factorization_n1", worst, tol(1e-6)});
  }
  {  // same at n = 2, isotropic lambda' = (2, 2), analytic theta_k
    const std::vector<double> lp{2.0, 2.0};
    double worst = 0.0;
    const auto pts = test_points<2>(40, 2.0, c.seed + 7);
    for (int k = 0; k <= 8; ++k) {
      auto th = [&](const CPoint<2>& z) { return theta_k(k, lp, z); };
      for (double r : {0.5, 1.0, 2.0}) {
        const auto rule = build_sphere_rule<2>(r, 32);
        for (const auto& z : pts) {
          const cplx v = lambda_prime_mean_at<2>(th, lp, rule, z);
          worst = std::max(worst, std::abs(v - mean_factor(k, 2) * theta_k(k, lp, z) * theta_radial(k, 2, 2.0, r)));
        }
      }
    }
    out.push_back({"mean_factorization_n2_isotropic", worst, tol(1e-6)});
  }
  {  // twisted mean at A z against the modified mean of f o A
    double worst = 0.0;
    std::mt19937_64 rng(c.seed + 11);
    std::normal_distribution<double> gauss;
    for (const std::string name : {"heisenberg:1", "quaternionic", "anisotropic"}) {
      const auto s = builtin_structure(name);
      for (int t = 0; t < 5; ++t) {
        std::vector<double> lambda(s.m);
        for (double& x : lambda) x = gauss(rng);
        const auto spec = symplectic_spectrum(s, lambda);
        if (s.n == 1) {
          worst = std::max(worst, rotation_gap<1>(s, lambda, spec, c.seed));
        } else {
          worst = std::max(worst, rotation_gap<2>(s, lambda, spec, c.seed));
        }
      }
    }
    out.push_back({"rotation_intertwining", worst, tol(1e-6)});
  }
  {  // sum over |alpha| = k of Psi_{alpha alpha} = prod sqrt(lambda') (2 pi)^{-n/2} theta_k
    std::mt19937_64 rng(c.seed + 13);
    std::uniform_real_distribution<double> lam(0.5, 3.0), coord(-2.0, 2.0);
    double worst = 0.0;
    for (int n : {1, 2})
      for (int k = 0; k <= 8; ++k)
        for (int t = 0; t < 20; ++t) {
          std::vector<double> lp(n);
          for (double& x : lp) x = lam(rng);
          std::vector<cplx> z(n);
          for (auto& x : z) x = cplx(coord(rng), coord(rng));
          double scale = std::pow(2.0 * std::numbers::pi, -0.5 * n);
          for (double x : lp) scale *= std::sqrt(x);
          worst = std::max(worst, std::abs(diagonal_sum(k, lp, z) - scale * theta_k(k, lp, z)));
        }
    out.push_back({"diagonal_sum", worst, tol(1e-9)});
  }
  {  // L Psi_ab = (2a + 1) lambda' Psi_ab
    const std::vector<double> lp{1.0};
    const auto g = PolarGrid<1>::default_grid();
    double worst = 0.0;
    for (int a = 0; a <= 3; ++a)
      for (int b = 0; b <= 3; ++b) {
        const std::array<int, 1> al{a}, be{b};
        auto psi = [&](const CPoint<1>& z) { return psi_alpha_beta(al, be, lp, z); };
        const auto lf = apply_twisted_laplacian<1>(psi, lp, g);
        const auto pf = sample(psi, g);
        for (std::size_t i = 0; i < pf.size(); ++i)
          worst = std::max(worst, std::abs(lf.values[i] - (2.0 * a + 1.0) * pf.values[i]));
      }
    out.push_back({"laplacian_eigenvalues", worst, tol(1e-3)});
  }
  {  // decompose / synthesize of e^{-|z|^2}
    const std::vector<double> lp{1.0};
    const auto f = sample([](const CPoint<1>& z) { return std::exp(-std::norm(z[0])); }, PolarGrid<1>::default_grid());
    out.push_back({"spectral_round_trip", round_trip_residual(f, decompose(f, lp, K)), tol(1e-4)});
  }
  return out;
}

inline Outcome cmd_verify(const RunConfig& c) {
  Outcome o;
  const auto suites = run_identity_suites(c);
  json arr = json::array();
  std::vector<std::string> failed;
  for (const auto& s : suites) {
    const bool pass = s.max_error <= s.tolerance;
    arr.push_back({{"name", s.name}, {"max_error", s.max_error}, {"tolerance", s.tolerance}, {"pass", pass}});
    if (!pass) failed.push_back(s.name);
  }
  o.report["suites"] = arr;
  o.report["all_pass"] = failed.empty();
  o.report["seed"] = c.seed;
  std::ostringstream ss;
  for (const auto& s : suites)
    ss << (s.max_error <= s.tolerance ? "pass " : "FAIL ") << s.name << " max_error=" << s.max_error
       << " tolerance=" << s.tolerance << '\n';
  if (!failed.empty()) {
    o.code = kIdentityFailure;
    ss << "identity failures:";
    for (const auto& f : failed) ss << ' ' << f;
  } else {
    ss << "all identities within tolerance";
  }
  o.summary = ss.str();
  return o;
}

template <int N>
Outcome reconstruct_impl(const RunConfig& c, const SampledField<N>& f) {
  Outcome o;
  require(!c.radii.empty(), ErrorCode::kInvalidArgument, "reconstruct needs measure radii");
  std::vector<double> w = c.weights;
  if (w.empty()) w.assign(c.radii.size(), 1.0);
  require(w.size() == c.radii.size(), ErrorCode::kInvalidArgument, "radii and weights differ in length");
  std::vector<std::pair<double, double>> atoms;
  for (std::size_t i = 0; i < w.size(); ++i) atoms.push_back({c.radii[i], w[i]});
  const auto mu = make_measure(atoms);
  const auto lp = lambda_prime_or_default(c, N);
  const int K = c.K.value_or(N == 1 ? 25 : default_truncation<N>());
  require(K >= 0 && K <= max_truncation<N>(), ErrorCode::kRangeExceeded, "K beyond the truncation bound");
  const int order = c.rule_order > 0 ? c.rule_order : default_rule_order<N>();
  const auto mean = measure_mean(f, mu, lp, order);
  const auto rec = reconstruct_from_measure_mean(mean, mu, lp, K);
  std::filesystem::create_directories(c.output);
  const auto out_path = (std::filesystem::path(c.output) / "reconstructed.field").string();
  auto field = rec.field;
  field.metadata = "reconstruction from measure mean";
  write_field(field, out_path);
  const double rel = l2_distance(rec.field, f) / std::max(l2_norm(f), 1e-300);
  json degrees = json::array();
  for (const auto& d : rec.degrees)
    degrees.push_back({{"k", d.k},
                       {"recovered", d.recovered},
                       {"multiplier", d.multiplier},
                       {"condition", d.recovered ? json(d.condition) : json(nullptr)},
                       {"recovered_norm", d.recovered_norm}});
  o.report["degrees"] = degrees;
  o.report["unrecoverable"] = rec.unrecoverable;
  o.report["relative_residual"] = rel;
  o.report["output_field"] = out_path;
  o.report["K"] = K;
  o.report["lambda_prime"] = lp;
  o.report["radii"] = mu.radii;
  o.report["weights"] = mu.weights;
  std::ostringstream ss;
  ss << "relative L2 residual " << rel << ", unrecoverable degrees:";
  if (rec.unrecoverable.empty()) ss << " none";
  for (int k : rec.unrecoverable) ss << ' ' << k;
  o.summary = ss.str();
  return o;
}

inline Outcome cmd_reconstruct(const RunConfig& c) {
  require(!c.input.empty(), ErrorCode::kInvalidArgument, "reconstruct needs an input field file");
  require(std::filesystem::exists(c.input), ErrorCode::kInvalidArgument, "input file '" + c.input + "' not found");
  auto any = read_field(c.input);
  if (auto* f1 = std::get_if<SampledField<1>>(&any)) return reconstruct_impl<1>(c, *f1);
  if (auto* f2 = std::get_if<SampledField<2>>(&any)) return reconstruct_impl<2>(c, *f2);
  fail(ErrorCode::kInvalidArgument, "reconstruct expects a sampled (non-periodic) field");
}

inline Outcome cmd_radii(const RunConfig& c) {
  Outcome o;
  const auto v = two_radii_check(c.r1, c.r2, c.n, lambda_prime_or_default(c, c.n), c.bounds);
  json lag = json::array(), bes = json::array();
  for (const auto& x : v.laguerre_conflicts)
    lag.push_back({{"k_a", x.k_a}, {"index_a", x.index_a}, {"k_b", x.k_b}, {"index_b", x.index_b}, {"ratio", x.ratio}});
  for (const auto& x : v.bessel_conflicts)
    bes.push_back({{"index_a", x.index_a}, {"index_b", x.index_b}, {"ratio", x.ratio}});
  o.report = {{"r1", v.r1},
              {"r2", v.r2},
              {"n", v.n},
              {"laguerre_conflicts", lag},
              {"bessel_conflicts", bes},
              {"admissible_within_bounds", v.admissible_within_bounds},
              {"search_bounds", {{"K_max", v.bounds.k_max}, {"N_max", v.bounds.n_max}, {"tol", v.bounds.tol}}}};
  std::filesystem::create_directories(c.output);
  std::ofstream csv(std::filesystem::path(c.output) / "radii_conflicts.csv");
  write_conflicts_csv(v, csv);
  std::ostringstream ss;
  ss << "r1=" << v.r1 << " r2=" << v.r2 << ": "
     << (v.admissible_within_bounds ? "admissible" : "inadmissible") << " within K_max=" << v.bounds.k_max
     << " N_max=" << v.bounds.n_max << " (" << v.laguerre_conflicts.size() << " Laguerre, "
     << v.bessel_conflicts.size() << " Bessel conflicts)";
  o.summary = ss.str();
  return o;
}

template <int N>
Outcome counterexample_impl(const RunConfig& c) {
  Outcome o;
  const auto lp = lambda_prime_or_default(c, N);
  const int order = c.rule_order > 0 ? c.rule_order : default_rule_order<N>();
  const auto ce = one_radius_counterexample<N>(c.l, lp, grid_of<N>(c), order);
  std::filesystem::create_directories(c.output);
  const auto path = (std::filesystem::path(c.output) / "counterexample.field").string();
  write_field(ce.field, path);
  o.report = {{"l", c.l}, {"n", N}, {"lambda_prime", lp}, {"radius", ce.r}, {"radii", ce.radii},
              {"annihilation_residual", ce.residual}, {"output_field", path}};
  std::ostringstream ss;
  ss << "theta_" << c.l << " annihilated at r=" << ce.r << ", residual " << ce.residual;
  o.summary = ss.str();
  return o;
}

inline Outcome cmd_counterexample(const RunConfig& c) {
  check_dimension(c.n);
  return c.n == 1 ? counterexample_impl<1>(c) : counterexample_impl<2>(c);
}

template <int N>
Outcome sample_impl(const RunConfig& c) {
  Outcome o;
  const auto g = grid_of<N>(c);
  const auto lp = lambda_prime_or_default(c, N);
  SampledField<N> f;
  if (c.field == "gaussian") {
    f = sample([](const CPoint<N>& z) {
      double s = 0.0;
      for (const auto& v : z) s += std::norm(v);
      return std::exp(-s);
    }, g, "gaussian exp(-|z|^2)");
  } else if (c.field.rfind("theta:", 0) == 0) {
    const int k = std::stoi(c.field.substr(6));
    f = sample([&](const CPoint<N>& z) { return theta_k(k, lp, z); }, g, c.field);
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown field '" + c.field + "' (gaussian | theta:<k>)");
  }
  std::filesystem::create_directories(c.output);
  const auto path = (std::filesystem::path(c.output) / "sample.field").string();
  write_field(f, path, c.encoding == "base64" ? Encoding::kBase64 : Encoding::kBinary);
  o.report = {{"field", c.field}, {"n", N}, {"output_field", path}, {"points", f.size()}};
  o.summary = "wrote " + path;
  return o;
}

inline Outcome cmd_sample(const RunConfig& c) {
  check_dimension(c.n);
  return c.n == 1 ? sample_impl<1>(c) : sample_impl<2>(c);
}

inline Outcome cmd_zeros(const RunConfig& c) {
  Outcome o;
  std::filesystem::create_directories(c.output);
  std::ofstream csv(std::filesystem::path(c.output) / "zeros.csv");
  if (c.kind == "laguerre") {
    const auto t = laguerre_zeros(c.degree, c.type);
    write_csv(t, csv);
    o.report = {{"kind", "laguerre"}, {"degree", t.degree}, {"type", t.type}, {"zeros", t.zeros}, {"residuals", t.residuals}};
  } else if (c.kind == "bessel") {
    const auto t = bessel_zeros(c.type, c.count);
    write_csv(t, csv);
    o.report = {{"kind", "bessel"}, {"order", t.order}, {"zeros", t.zeros}, {"residuals", t.residuals}};
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown zero table kind '" + c.kind + "'");
  }
  o.summary = "wrote zeros.csv";
  return o;
}

inline Outcome dispatch(const RunConfig& c) {
  if (c.command == "spectrum") return cmd_spectrum(c);
  if (c.command == "verify") return cmd_verify(c);
  if (c.command == "reconstruct") return cmd_reconstruct(c);
  if (c.command == "radii") return cmd_radii(c);
  if (c.command == "counterexample") return cmd_counterexample(c);
  if (c.command == "sample") return cmd_sample(c);
  if (c.command == "zeros") return cmd_zeros(c);
  fail(ErrorCode::kInvalidArgument, "unknown command '" + c.command + "'");
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorCode::kInvalidArgument, "bad number '" + item + "' in list '" + s + "'");
    }
  }
  return out;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App cli{"metivier: spherical means and twisted convolutions on Metivier groups"};
  std::string command, config_path;
  std::map<std::string, std::string> flags;
  cli.add_option("command", command,
                 "spectrum | verify | reconstruct | radii | counterexample | sample | zeros")->required();
  cli.add_option("--config", config_path, "JSON config file; flags override its keys");
  const std::vector<std::pair<std::string, std::string>> keys = {
      {"structure", "built-in name or structure JSON file"}, {"lambda", "comma list"},
      {"lambda-prime", "comma list"}, {"n", "complex dimension"}, {"radial", "radial nodes"},
      {"angular", "angular nodes"}, {"r-max", "grid radius"}, {"radii", "comma list"},
      {"weights", "comma list"}, {"r1", "radius"}, {"r2", "radius"}, {"K", "truncation degree"},
      {"L", "centre band limit"}, {"l", "degree"}, {"k-max", "Laguerre scan bound"},
      {"n-max", "Bessel scan bound"}, {"tol", "ratio tolerance"}, {"tolerance", "identity tolerance override"},
      {"output", "output directory"}, {"seed", "seed"}, {"input", "input field file"},
      {"field", "gaussian | theta:<k>"}, {"rule-order", "sphere rule order"},
      {"encoding", "binary | base64"}, {"kind", "laguerre | bessel"}, {"degree", "zero table degree"},
      {"type", "Laguerre type or Bessel order"}, {"count", "Bessel zero count"}};
  for (const auto& [k, help] : keys) cli.add_option("--" + k, flags[k], help);
  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }
  RunConfig cfg;
  try {
    json j = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) fail(ErrorCode::kInvalidArgument, "cannot open config '" + config_path + "'");
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        fail(ErrorCode::kInvalidArgument, std::string("config is not valid JSON: ") + e.what());
      }
    }
    j["command"] = command;
    auto key = [](std::string k) {
      for (auto& ch : k)
        if (ch == '-') ch = '_';
      return k;
    };
    for (const auto& [k, v] : flags) {
      if (v.empty()) continue;
      const std::string jk = key(k);
      if (k == "lambda" || k == "lambda-prime" || k == "radii" || k == "weights") {
        j[jk] = parse_list(v);
      } else if (k == "radial" || k == "angular") {
        j["grid"][jk] = static_cast<int>(parse_list(v).at(0));
      } else if (k == "r-max") {
        j["grid"]["r_max"] = parse_list(v).at(0);
      } else if (k == "n" || k == "K" || k == "L" || k == "l" || k == "k-max" || k == "n-max" ||
                 k == "rule-order" || k == "degree" || k == "type" || k == "count") {
        const double d = parse_list(v).at(0);
        if (d != std::floor(d)) fail(ErrorCode::kInvalidArgument, "--" + k + " expects an integer");
        j[jk] = static_cast<long long>(d);
      } else if (k == "seed") {
        j[jk] = static_cast<std::uint64_t>(parse_list(v).at(0));
      } else if (k == "r1" || k == "r2" || k == "tol" || k == "tolerance") {
        j[jk] = parse_list(v).at(0);
      } else {
        j[jk] = v;
      }
    }
    cfg = config_from_json(j);
    Outcome o = dispatch(cfg);
    write_report(cfg, o);
    out << o.summary << '\n';
    return o.code;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_mathematical(e.code()) ? kPrecondition : kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }
}

}  // namespace metivier::app
