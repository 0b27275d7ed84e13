#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "metivier/metivier.hpp"
#include "metivier_app.hpp"
#include "oracles.hpp"

using namespace metivier;

namespace {

const std::vector<double> kUnit{1.0};

SampledField<1> gaussian1() {
  return sample([](const CPoint<1>& z) { return std::exp(-std::norm(z[0])); }, PolarGrid<1>::default_grid());
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kInvalidArgument;
}

int run_cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "metivier");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = app::run(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str() + e.str();
  return code;
}

std::string scratch_dir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / "metivier_cli_unit" / name;
  std::filesystem::create_directories(d);
  return d.string();
}

}  // namespace

TEST(TwistedTransforms, MeanOfThetaFactorizes) {
  const auto rule = build_sphere_rule<1>(1.0, 64);
  auto th = [](const CPoint<1>& z) { return theta_k(2, kUnit, z); };
  for (cplx z : {cplx(0.2, 0.3), cplx(-1.5, 0.4)}) {
    const cplx v = lambda_prime_mean_at<1>(th, kUnit, rule, CPoint<1>{z});
    EXPECT_LT(std::abs(v - oracle::theta(2, 1, std::norm(z)) * oracle::theta(2, 1, 1.0)), 1e-12);
  }
}

TEST(TwistedTransforms, ThetaOneAnnihilatedAtSqrtTwo) {
  const auto rule = build_sphere_rule<1>(std::sqrt(2.0), 64);
  auto th = [](const CPoint<1>& z) { return theta_k(1, kUnit, z); };
  EXPECT_LT(std::abs(lambda_prime_mean_at<1>(th, kUnit, rule, CPoint<1>{cplx(0.7, -0.1)})), 1e-13);
}

TEST(TwistedTransforms, ZeroLambdaRejected) {
  const auto s = builtin_structure("heisenberg:1");
  const std::vector<double> lam{0.0};
  const auto rule = build_sphere_rule<1>(1.0, 8);
  EXPECT_EQ(code_of([&] { twisted_spherical_mean(gaussian1(), s, lam, rule); }), ErrorCode::kInvalidArgument);
}

TEST(TwistedTransforms, ConvolutionWithThetaIsProjection) {
  const auto g = PolarGrid<1>::uniform(56, 64, 11.0);
  const auto f = sample([](const CPoint<1>& z) { return std::exp(-std::norm(z[0] - cplx(0.4, 0.0))); }, g);
  const auto th = sample([](const CPoint<1>& z) { return theta_k(2, kUnit, z); }, g);
  ConvolutionOptions opts;
  opts.interpolation_order = 10;
  const auto direct = twisted_convolution(f, th, kUnit, opts);
  const auto proj = spectral_projection(f, 2, kUnit);
  EXPECT_LT(max_distance(direct, proj), 1e-5);
}

TEST(TwistedTransforms, ProjectionsSumToField) {
  const auto f = gaussian1();
  const auto spec = decompose(f, kUnit, 30);
  EXPECT_LT(round_trip_residual(f, spec), 1e-4);
  EXPECT_EQ(code_of([&] { decompose(f, kUnit, 41); }), ErrorCode::kRangeExceeded);
}

TEST(TwistedTransforms, SpectrumFiles) {
  const auto f = sample([](const CPoint<1>& z) { return theta_k(1, kUnit, z); }, PolarGrid<1>::uniform(32, 32, 8.0));
  const auto spec = decompose(f, kUnit, 4);
  const auto dir = scratch_dir("spectrum");
  write_spectrum(spec, dir);
  const auto back = read_spectrum<1>(dir);
  ASSERT_EQ(back.projections.size(), spec.projections.size());
  EXPECT_EQ(back.projections[1].values, spec.projections[1].values);
}

TEST(TwistedTransforms, RadializationAndHomogeneousProjection) {
  const auto g = PolarGrid<1>::default_grid();
  const std::array<int, 1> a{1}, b{3};
  const auto psi = sample_psi_alpha_beta<1>(a, b, kUnit, g);
  const std::array<int, 1> m{2};
  EXPECT_LT(max_distance(m_radialize(psi, m), psi), 1e-10);
  const auto ex = homogeneous_projection_expand(psi, m, 3, kUnit);
  const auto rec = reconstruct_homogeneous_projection(ex, g);
  const auto proj = spectral_projection(psi, 3, kUnit);
  EXPECT_LT(max_distance(rec, proj), 1e-6);
  EXPECT_EQ(code_of([&] { homogeneous_projection_expand(gaussian1(), m, 2, kUnit); }), ErrorCode::kNotHomogeneous);
}

TEST(TwistedTransforms, LaplacianEigenvalue) {
  const std::array<int, 1> a{2}, b{0};
  auto psi = [&](const CPoint<1>& z) { return psi_alpha_beta(a, b, kUnit, z); };
  const CPoint<1> z{cplx(0.4, 0.9)};
  EXPECT_LT(std::abs(twisted_laplacian_at<1>(psi, kUnit, z, 1.0 / 64) - 5.0 * psi(z)), 1e-3);
}

TEST(Injectivity, MeasureReconstruction) {
  const auto f = gaussian1();
  const auto mu = make_measure({{1.0, 0.5}, {1.7, 0.5}});
  const auto rec = reconstruct_from_measure_mean(measure_mean(f, mu, kUnit), mu, kUnit, 25);
  EXPECT_TRUE(rec.unrecoverable.empty());
  EXPECT_LT(l2_distance(rec.field, f) / l2_norm(f), 1e-3);
}

TEST(Injectivity, MeasureMultiplier) {
  const auto mu = make_measure({{1.0, 0.5}, {2.0, 0.5}});
  const double expect = 0.5 * (oracle::theta(3, 1, 1.0) + oracle::theta(3, 1, 4.0));
  EXPECT_NEAR(mu_hat_theta(mu, 3, kUnit), expect, 1e-14);
}

TEST(Injectivity, ZeroRadii) {
  const std::vector<double> two{2.0};
  const auto r = theta_zero_radii(3, 1, 2.0);
  const auto z = oracle::laguerre_zeros(3, 0);
  ASSERT_EQ(r.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(r[i], std::sqrt(z[i]), 1e-10);
  EXPECT_EQ(code_of([] { theta_zero_radii(0, 1, 1.0); }), ErrorCode::kInvalidArgument);
}

TEST(Injectivity, AnisotropicInversionRejected) {
  const std::vector<double> lp{1.0, 2.0};
  EXPECT_EQ(code_of([&] { isotropic_scale(lp); }), ErrorCode::kInvalidArgument);
}

TEST(Injectivity, RadiiVerdicts) {
  const auto j0 = oracle::bessel_zeros(0, 3);
  EXPECT_FALSE(two_radii_check(j0[0], j0[2], 1, {}).admissible_within_bounds);
  EXPECT_TRUE(two_radii_check(1.0, 2.0, 1, {}).admissible_within_bounds);
  const auto lz = oracle::laguerre_zeros(4, 0);
  EXPECT_FALSE(two_radii_check(std::sqrt(lz[0]), std::sqrt(lz[2]), 1, {}).admissible_within_bounds);
  EXPECT_EQ(code_of([] { two_radii_check(1.0, 0.0, 1, {}); }), ErrorCode::kInvalidArgument);
}

TEST(Injectivity, WeightedNormIsFinite) {
  const auto s = builtin_structure("heisenberg:1");
  const std::vector<double> lam{1.0};
  const auto rep = weighted_norm(gaussian1(), symplectic_spectrum(s, lam), 2.0);
  EXPECT_TRUE(std::isfinite(rep.value));
  EXPECT_FALSE(rep.boundary_dominated);
}

TEST(Cli, Spectrum) {
  const auto dir = scratch_dir("spectrum_cmd");
  EXPECT_EQ(run_cli({"spectrum", "--structure", "quaternionic", "--lambda", "0,0,2", "--output", dir}), 0);
  std::ifstream in(std::filesystem::path(dir) / "spectrum_report.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_NEAR(j["mu"][0].get<double>(), 2.0, 1e-12);
  EXPECT_EQ(run_cli({"spectrum", "--structure", "product-counterexample", "--lambda", "1,0", "--output", dir}), 2);
}

TEST(Cli, ValidationErrors) {
  const auto dir = scratch_dir("validation");
  EXPECT_EQ(run_cli({"radii", "--r1", "1", "--r2", "0", "--output", dir}), 1);
  EXPECT_EQ(run_cli({"counterexample", "--l", "0", "--output", dir}), 1);
  EXPECT_EQ(run_cli({"reconstruct", "--input", "/nonexistent.field", "--radii", "1", "--output", dir}), 1);
  EXPECT_EQ(run_cli({"nope", "--output", dir}), 1);
  EXPECT_EQ(run_cli({"verify", "--K", "41", "--output", dir}), 1);
}

TEST(Cli, ConfigAndFlagOverride) {
  const auto dir = scratch_dir("config");
  const auto cfg = (std::filesystem::path(dir) / "c.json").string();
  std::ofstream(cfg) << R"({"r1": 2.404825557695773, "r2": 5.520078110286311})";
  EXPECT_EQ(run_cli({"radii", "--config", cfg, "--output", dir}), 0);
  std::ifstream in(std::filesystem::path(dir) / "radii_report.json");
  EXPECT_FALSE(nlohmann::json::parse(in)["admissible_within_bounds"].get<bool>());
  EXPECT_EQ(run_cli({"radii", "--config", cfg, "--r2", "2", "--r1", "1", "--output", dir}), 0);
  std::ifstream in2(std::filesystem::path(dir) / "radii_report.json");
  EXPECT_TRUE(nlohmann::json::parse(in2)["admissible_within_bounds"].get<bool>());
}

TEST(Cli, ReconstructSingleRadius) {
  const auto dir = scratch_dir("reconstruct");
  ASSERT_EQ(run_cli({"sample", "--field", "gaussian", "--output", dir}), 0);
  const auto input = (std::filesystem::path(dir) / "sample.field").string();
  EXPECT_EQ(run_cli({"reconstruct", "--input", input, "--radii", "1", "--output", dir}), 0);
  std::ifstream in(std::filesystem::path(dir) / "reconstruct_report.json");
  EXPECT_LT(nlohmann::json::parse(in)["relative_residual"].get<double>(), 1e-3);
  EXPECT_EQ(run_cli({"reconstruct", "--input", input, "--radii", "1.4142135623730951", "--output", dir}), 0);
  std::ifstream in2(std::filesystem::path(dir) / "reconstruct_report.json");
  EXPECT_EQ(nlohmann::json::parse(in2)["unrecoverable"], nlohmann::json::array({1}));
}

TEST(Cli, CounterexampleRadii) {
  const auto dir = scratch_dir("counterexample");
  EXPECT_EQ(run_cli({"counterexample", "--l", "3", "--lambda-prime", "2", "--output", dir}), 0);
  std::ifstream in(std::filesystem::path(dir) / "counterexample_report.json");
  const auto radii = nlohmann::json::parse(in)["radii"].get<std::vector<double>>();
  const auto z = oracle::laguerre_zeros(3, 0);
  ASSERT_EQ(radii.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(radii[i], std::sqrt(z[i]), 1e-10);
}

TEST(Cli, ZeroTables) {
  const auto dir = scratch_dir("zeros");
  EXPECT_EQ(run_cli({"zeros", "--kind", "bessel", "--type", "0", "--count", "2", "--output", dir}), 0);
  std::ifstream in(std::filesystem::path(dir) / "zeros_report.json");
  EXPECT_NEAR(nlohmann::json::parse(in)["zeros"][1].get<double>(), 5.520078110286311, 1e-10);
}
