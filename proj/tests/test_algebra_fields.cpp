#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "metivier/metivier.hpp"

using namespace metivier;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kInvalidArgument;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "metivier_unit";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(GroupAlgebra, HeisenbergSpectrum) {
  const auto s = builtin_structure("heisenberg:1");
  const std::vector<double> lam{1.0};
  const auto sp = symplectic_spectrum(s, lam);
  ASSERT_EQ(sp.mu.size(), 1u);
  EXPECT_NEAR(sp.mu[0], 1.0, 1e-14);
}

TEST(GroupAlgebra, QuaternionicSpectrum) {
  const auto s = builtin_structure("quaternionic");
  const std::vector<double> lam{0.0, 0.0, 2.0};
  const auto sp = symplectic_spectrum(s, lam);
  EXPECT_NEAR(sp.mu[0], 2.0, 1e-12);
  EXPECT_NEAR(sp.mu[1], 2.0, 1e-12);
}

TEST(GroupAlgebra, AnisotropicOrdering) {
  const auto s = builtin_structure("anisotropic");
  const std::vector<double> lam{-1.5};
  const auto sp = symplectic_spectrum(s, lam);
  EXPECT_NEAR(sp.mu[0], 3.0, 1e-12);
  EXPECT_NEAR(sp.mu[1], 1.5, 1e-12);
}

TEST(GroupAlgebra, ProductStructureIsNotMetivier) {
  const auto s = builtin_structure("product-counterexample");
  EXPECT_FALSE(metivier_check(s).is_metivier_on_probes);
  const std::vector<double> lam{1.0, 0.0};
  EXPECT_EQ(code_of([&] { symplectic_spectrum(s, lam); }), ErrorCode::kSingularPencil);
  EXPECT_TRUE(metivier_check(builtin_structure("quaternionic")).is_metivier_on_probes);
}

TEST(GroupAlgebra, ValidationErrors) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 1) = 1.0;
  EXPECT_EQ(code_of([&] { validate_structure(1, 1, {a}); }), ErrorCode::kNotSkewSymmetric);
  a(1, 0) = -1.0;
  EXPECT_EQ(code_of([&] { validate_structure(1, 2, {a, 2.0 * a}); }), ErrorCode::kDependentStructureMatrices);
  EXPECT_EQ(code_of([&] { validate_structure(2, 1, {a}); }), ErrorCode::kDimensionMismatch);
  EXPECT_EQ(code_of([] { builtin_structure("nope"); }), ErrorCode::kInvalidArgument);
}

TEST(GroupAlgebra, JsonRoundTrip) {
  const auto s = builtin_structure("quaternionic");
  const auto back = structure_from_json(structure_to_json(s));
  ASSERT_EQ(back.m, 3);
  for (int k = 0; k < 3; ++k) EXPECT_EQ((back.u[k] - s.u[k]).cwiseAbs().maxCoeff(), 0.0);
}

TEST(GroupAlgebra, ProbesAreSeeded) {
  ProbePlan p;
  p.count = 10;
  p.seed = 5;
  EXPECT_EQ(sphere_probes(3, p), sphere_probes(3, p));
}

TEST(PolarGrid, WeightsIntegrateGaussian) {
  const auto g = PolarGrid<1>::default_grid();
  const auto f = sample([](const CPoint<1>& z) { return std::exp(-std::norm(z[0])); }, g);
  EXPECT_NEAR(l2_norm(f), std::sqrt(std::numbers::pi / 2.0), 1e-10);
  const auto g2 = PolarGrid<2>::default_grid();
  const auto f2 = sample([](const CPoint<2>& z) { return std::exp(-std::norm(z[0]) - std::norm(z[1])); }, g2);
  EXPECT_NEAR(l2_norm(f2), std::numbers::pi / 2.0, 1e-9);
}

TEST(PolarGrid, InterpolationIsAccurate) {
  const auto g = PolarGrid<1>::default_grid();
  auto expr = [](const CPoint<1>& z) { return std::exp(-std::norm(z[0] - cplx(0.5, 0.2))) * cplx(1.0, z[0].imag()); };
  const auto f = sample(expr, g);
  const Interpolant<1> in(g, 8);
  for (cplx z : {cplx(0.01, 0.0), cplx(1.3, -0.7), cplx(-2.2, 0.4)})
    EXPECT_LT(std::abs(in(f.values, CPoint<1>{z}) - expr(CPoint<1>{z})), 1e-7);
  EXPECT_EQ(in(f.values, CPoint<1>{cplx(20.0, 0.0)}), cplx(0.0));
  const Interpolant<1> strict(g, 8, OutsidePolicy::kThrow);
  EXPECT_EQ(code_of([&] { strict(f.values, CPoint<1>{cplx(20.0, 0.0)}); }), ErrorCode::kOutOfDomain);
}

TEST(PolarGrid, NonFiniteSample) {
  const auto g = PolarGrid<1>::uniform(8, 8, 2.0);
  EXPECT_EQ(code_of([&] { sample([](const CPoint<1>&) { return cplx(std::nan(""), 0.0); }, g); }),
            ErrorCode::kNonFiniteValue);
}

TEST(FieldIo, BinaryAndBase64RoundTrip) {
  const auto g = PolarGrid<2>::uniform(6, 8, 3.0);
  const auto f = sample([](const CPoint<2>& z) { return z[0] * std::conj(z[1]) + 1.0; }, g, "probe");
  for (auto enc : {Encoding::kBinary, Encoding::kBase64}) {
    const auto p = scratch("rt.field").string();
    write_field(f, p, enc);
    const auto back = read_sampled<2>(p);
    EXPECT_TRUE(back.grid == f.grid);
    EXPECT_EQ(back.values, f.values);
    EXPECT_EQ(back.metadata, "probe");
  }
}

TEST(FieldIo, PeriodicRoundTrip) {
  const auto g = PolarGrid<1>::uniform(6, 8, 3.0);
  const auto f = sample_periodic<1>([](const CPoint<1>& z, const std::vector<double>& t) { return z[0] * std::cos(t[0]); },
                                    g, {4});
  const auto p = scratch("per.field").string();
  write_field(f, p);
  const auto back = read_periodic<1>(p);
  EXPECT_EQ(back.values, f.values);
  EXPECT_EQ(back.t_count, f.t_count);
}

TEST(FieldIo, MalformedFiles) {
  const auto g = PolarGrid<1>::uniform(4, 4, 1.0);
  const auto f = sample([](const CPoint<1>& z) { return z[0]; }, g);
  const auto p = scratch("bad.field").string();
  write_field(f, p);
  std::filesystem::resize_file(p, std::filesystem::file_size(p) - 5);
  EXPECT_EQ(code_of([&] { read_field(p); }), ErrorCode::kMalformedFile);
  std::ofstream(p) << "{not json\n";
  EXPECT_EQ(code_of([&] { read_field(p); }), ErrorCode::kMalformedFile);
  write_field(f, p);
  std::string text;
  {
    std::ifstream in(p, std::ios::binary);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  const auto pos = text.find("\"version\":1");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 11, "\"version\":2");
  std::ofstream(p, std::ios::binary) << text;
  EXPECT_EQ(code_of([&] { read_field(p); }), ErrorCode::kVersionMismatch);
}

TEST(FieldIo, RotationRoundTrip) {
  const auto s = builtin_structure("heisenberg:1");
  const std::vector<double> lam{-0.7};
  const auto sp = symplectic_spectrum(s, lam);
  const auto g = PolarGrid<1>::default_grid();
  const auto f = sample([](const CPoint<1>& z) { return std::exp(-std::norm(z[0] - cplx(0.3, 0.6))); }, g);
  const auto there = rotate_field(f, sp, Direction::kForward, {8, OutsidePolicy::kZero});
  const auto back = rotate_field(there, sp, Direction::kInverse, {8, OutsidePolicy::kZero});
  EXPECT_LT(max_distance(back, f), 1e-6);
}
