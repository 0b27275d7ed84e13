// Acceptance run: one [PASS]/[FAIL] line per criterion.
// usage: acceptance <criterion 1..10 | all> [path to metivier binary]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

#include "metivier/metivier.hpp"
#include "oracles.hpp"

using namespace metivier;

namespace {

std::string cli_path;

struct Clock {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

bool check(bool ok, const std::string& what) {
  std::cout << "    " << (ok ? "ok   " : "miss ") << what << '\n';
  return ok;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

bool criterion1() {
  Clock clock;
  bool ok = true;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  double ortho = 0.0, inter = 0.0, quat = 0.0;
  int trials = 0;
  for (const std::string name : {"heisenberg:2", "quaternionic", "anisotropic"}) {
    const auto s = builtin_structure(name);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2 * s.n, 2 * s.n);
    for (int t = 0; t < 40; ++t, ++trials) {
      std::vector<double> lambda(s.m);
      for (double& x : lambda) x = g(rng);
      const auto sp = symplectic_spectrum(s, lambda);
      ortho = std::max(ortho, (sp.a_mat.transpose() * sp.a_mat - eye).cwiseAbs().maxCoeff());
      inter = std::max(inter, (v_lambda(s, lambda) * sp.a_mat - sp.a_mat * sp.u_normal).cwiseAbs().maxCoeff());
      if (name == "quaternionic") {
        double norm = 0.0;
        for (double x : lambda) norm += x * x;
        norm = std::sqrt(norm);
        for (double m : sp.mu) quat = std::max(quat, std::abs(m - norm));
      }
    }
  }
  ok &= check(trials >= 100, std::to_string(trials) + " random lambda over 3 structures");
  ok &= check(ortho <= 1e-10, "|A^T A - I| = " + num(ortho));
  ok &= check(inter <= 1e-8, "|V A - A U| = " + num(inter));
  ok &= check(quat <= 1e-10, "quaternionic mu = (|lambda|, |lambda|) within " + num(quat));
  const auto prod = builtin_structure("product-counterexample");
  const bool probes = metivier_check(prod).is_metivier_on_probes;
  bool singular = false;
  try {
    const std::vector<double> lam{1.0, 0.0};
    symplectic_spectrum(prod, lam);
  } catch (const Error& e) {
    singular = e.code() == ErrorCode::kSingularPencil;
  }
  ok &= check(!probes && singular, "product structure fails the check, singular at lambda = (1, 0)");
  ok &= check(clock.seconds() < 5.0, "runtime " + num(clock.seconds()) + " s");
  return ok;
}

// c_k theta_k(z) theta_k(r) with the constant (prod lambda'^{-1/2}) k!(n-1)!/(k+n-1)!
template <int N, class Mean>
double factorization_gap(const std::vector<double>& lp, int points, Mean&& mean, bool with_prod) {
  double prod = 1.0;
  for (double x : lp) prod /= std::sqrt(x);
  double worst = 0.0;
  for (int k = 0; k <= 8; ++k)
    for (double r : {0.5, 1.0, 2.0}) {
      const auto rule = build_sphere_rule<N>(r, N == 1 ? 64 : 32);
      for (const auto& z : test_points<N>(points, N == 1 ? 4.0 : 2.0)) {
        double sz = 0.0;
        for (int j = 0; j < N; ++j) sz += lp[j] * std::norm(z[j]);
        const double th_r = oracle::theta(k, N, lp[0] * r * r);
        const double expect = (with_prod ? prod : 1.0) * oracle::mean_constant(k, N) * oracle::theta(k, N, sz) * th_r;
        worst = std::max(worst, std::abs(mean(k, rule, z) - expect));
      }
    }
  return worst;
}

bool criterion2() {
  Clock clock;
  bool ok = true;
  {
    const std::vector<double> lp{1.0};
    const auto grid = PolarGrid<1>::default_grid();
    std::vector<SampledField<1>> th;
    for (int k = 0; k <= 8; ++k) th.push_back(sample([&](const CPoint<1>& z) { return theta_k(k, lp, z); }, grid));
    const double e = factorization_gap<1>(lp, 40, [&](int k, const SphereRule<1>& rule, const CPoint<1>& z) {
      return lambda_prime_mean_at<1>(FieldFunction<1>(th[k], 12), lp, rule, z);
    }, true);
    ok &= check(e < 1e-6, "n = 1, lambda' = (1), sampled theta_k: max error " + num(e));
  }
  auto analytic = [](const std::vector<double>& lp) {
    return [lp](int k, const SphereRule<2>& rule, const CPoint<2>& z) {
      return lambda_prime_mean_at<2>([&](const CPoint<2>& w) { return theta_k(k, lp, w); }, lp, rule, z);
    };
  };
  {
    const std::vector<double> lp{1.0, 2.0};
    const double e = factorization_gap<2>(lp, 40, analytic(lp), true);
    ok &= check(e < 1e-6, "n = 2, lambda' = (1, 2), printed constant, theta_k(r) at (r, 0): max error " + num(e));
  }
  {
    const std::vector<double> lp{2.0, 2.0};
    const double e = factorization_gap<2>(lp, 40, analytic(lp), false);
    std::cout << "    info n = 2, lambda' = (2, 2), constant without the lambda' product: max error " << num(e) << '\n';
  }
  ok &= check(clock.seconds() < 120.0, "runtime " + num(clock.seconds()) + " s");
  return ok;
}

cplx off_centre_gaussian1(const CPoint<1>& z) { return std::exp(-std::norm(z[0] - cplx(0.4, -0.3))); }

cplx off_centre_gaussian2(const CPoint<2>& z) {
  return std::exp(-std::norm(z[0] - cplx(0.3, -0.2)) - std::norm(z[1] - cplx(-0.1, 0.4)));
}

bool criterion3() {
  Clock clock;
  bool ok = true;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  double worst1 = 0.0, worst2 = 0.0;
  const auto grid = PolarGrid<1>::default_grid();
  const auto f1 = sample(off_centre_gaussian1, grid);
  for (const std::string name : {"heisenberg:1", "quaternionic", "anisotropic"}) {
    const auto s = builtin_structure(name);
    for (int t = 0; t < 5; ++t) {
      std::vector<double> lambda(s.m);
      for (double& x : lambda) x = g(rng);
      const auto sp = symplectic_spectrum(s, lambda);
      for (double r : {0.5, 1.0, 2.0}) {
        if (s.n == 1) {
          const auto rule = build_sphere_rule<1>(r, 64);
          const auto f_rot = rotate_field(f1, sp, Direction::kForward, {8, OutsidePolicy::kZero});
          const FieldFunction<1> fa(f1, 8), fb(f_rot, 8);
          for (const auto& z : test_points<1>(40, 3.0, 11)) {
            const auto az = to_complex<1>(sp.a_mat * to_real<1>(z));
            worst1 = std::max(worst1, std::abs(twisted_spherical_mean_at<1>(fa, s, lambda, rule, az) -
                                               modified_twisted_mean_at<1>(fb, sp, rule, z)));
          }
        } else {
          const auto rule = build_sphere_rule<2>(r, 32);
          auto rotated = [&](const CPoint<2>& z) { return off_centre_gaussian2(to_complex<2>(sp.a_mat * to_real<2>(z))); };
          for (const auto& z : test_points<2>(8, 2.0, 11)) {
            const auto az = to_complex<2>(sp.a_mat * to_real<2>(z));
            worst2 = std::max(worst2, std::abs(twisted_spherical_mean_at<2>(off_centre_gaussian2, s, lambda, rule, az) -
                                               modified_twisted_mean_at<2>(rotated, sp, rule, z)));
          }
        }
      }
    }
  }
  ok &= check(worst1 < 1e-6, "n = 1 sampled fields, rotated on the grid: max error " + num(worst1));
  ok &= check(worst2 < 1e-6, "n = 2 analytic fields: max error " + num(worst2));
  ok &= check(clock.seconds() < 120.0, "runtime " + num(clock.seconds()) + " s");
  return ok;
}

bool criterion4() {
  Clock clock;
  bool ok = true;
  const std::vector<double> lp{1.0};
  const auto grid = PolarGrid<1>::default_grid();
  const auto f = sample([](const CPoint<1>& z) { return std::exp(-std::norm(z[0])); }, grid);
  const double e = round_trip_residual(f, decompose(f, lp, 30));
  ok &= check(e < 1e-4, "gaussian, K = 30: relative residual " + num(e));
  const auto t3 = sample([&](const CPoint<1>& z) { return theta_k(3, lp, z); }, grid);
  const double e3 = round_trip_residual(t3, decompose(t3, lp, 10));
  ok &= check(e3 < 1e-6, "theta_3: relative residual " + num(e3));
  ok &= check(clock.seconds() < 60.0, "runtime " + num(clock.seconds()) + " s");
  return ok;
}

bool criterion5() {
  Clock clock;
  const std::vector<double> lp{1.0};
  const auto grid = PolarGrid<1>::default_grid();
  double worst = 0.0;
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; b <= 3; ++b) {
      const std::array<int, 1> al{a}, be{b};
      auto psi_fast = [&](const CPoint<1>& z) { return psi_alpha_beta(al, be, lp, z); };
      const auto lf = apply_twisted_laplacian<1>(psi_fast, lp, grid);
      const auto pf = sample(psi_fast, grid);
      for (std::size_t i = 0; i < pf.size(); ++i)
        worst = std::max(worst, std::abs(lf.values[i] - (2.0 * a + 1.0) * pf.values[i]));
    }
  bool ok = check(worst < 1e-3, "|L Psi_ab - (2a + 1) Psi_ab| = " + num(worst));
  ok &= check(clock.seconds() < 30.0, "runtime " + num(clock.seconds()) + " s");
  return ok;
}

bool criterion6() {
  Clock clock;
  bool ok = true;
  const std::vector<double> lp{1.0};
  const auto grid = PolarGrid<1>::default_grid();
  const auto f = sample([](const CPoint<1>& z) { return std::exp(-std::norm(z[0])); }, grid);
  const auto mu = make_measure({{1.0, 0.5}, {1.7, 0.5}});
  const auto rec = reconstruct_from_measure_mean(measure_mean(f, mu, lp), mu, lp, 25);
  const double e = l2_distance(rec.field, f) / l2_norm(f);
  ok &= check(e < 1e-3, "relative L2 error " + num(e));
  ok &= check(rec.unrecoverable.empty(), std::to_string(rec.unrecoverable.size()) + " unrecoverable degrees");
  bool both = false;
  for (int k = 1; k <= 25; ++k) {
    const auto t = laguerre_zeros(k, 0);
    bool at1 = false, at2 = false;
    for (double x : t.zeros) {
      at1 = at1 || std::abs(x - 0.5) < 1e-9;
      at2 = at2 || std::abs(x - 0.5 * 1.7 * 1.7) < 1e-9;
    }
    both = both || (at1 && at2);
  }
  ok &= check(!both, "no theta_k, k <= 25, vanishes at both radii");
  ok &= check(clock.seconds() < 180.0, "runtime " + num(clock.seconds()) + " s");
  return ok;
}

bool criterion7() {
  Clock clock;
  bool ok = true;
  const std::vector<double> lp{1.0};
  const auto ce = one_radius_counterexample<1>(1, lp);
  ok &= check(std::abs(ce.r - std::sqrt(2.0)) < 1e-12, "annihilating radius " + num(ce.r));
  ok &= check(ce.residual < 1e-8, "|theta_1 x mu_sqrt2| = " + num(ce.residual));
  const auto grid = PolarGrid<1>::default_grid();
  const auto f = sample([](const CPoint<1>& z) { return std::exp(-std::norm(z[0])); }, grid);
  const double r = std::sqrt(2.0);
  const auto mean = lambda_prime_mean(f, lp, build_sphere_rule<1>(r, 64));
  const auto rec = reconstruct_from_means<1>({{r, mean}}, lp, 25);
  ok &= check(rec.unrecoverable == std::vector<int>{1}, "unrecoverable degrees at r = sqrt 2: {1}");
  ok &= check(clock.seconds() < 30.0, "runtime " + num(clock.seconds()) + " s");
  return ok;
}

bool criterion8() {
  Clock clock;
  bool ok = true;
  const auto j0 = oracle::bessel_zeros(0, 2);
  const std::vector<double> lp{1.0};
  const auto bad = two_radii_check(j0[0], j0[1], 1, lp, {40, 40, 1e-9});
  ok &= check(!bad.admissible_within_bounds, "r1/r2 = j_{0,1}/j_{0,2} (" + num(j0[0]) + ", " + num(j0[1]) +
                                                 ") inadmissible");
  const auto good = two_radii_check(1.0, 2.0, 1, lp, {40, 40, 1e-9});
  ok &= check(good.admissible_within_bounds, "(1, 2) admissible");
  const auto grid = PolarGrid<1>::default_grid();
  const auto f = sample_periodic<1>(
      [&](const CPoint<1>& z, const std::vector<double>& t) { return theta_k(2, lp, z) * std::cos(t[0]); }, grid, {8});
  const auto rep = two_radii_reconstruct(f, builtin_structure("heisenberg:1"), 1.0, 2.0, 10, 1);
  ok &= check(rep.relative_error < 1e-3, "theta_2(z) cos t at radii (1, 2): relative L2 error " + num(rep.relative_error));
  ok &= check(clock.seconds() < 180.0, "runtime " + num(clock.seconds()) + " s");
  return ok;
}

bool criterion9() {
  Clock clock;
  bool ok = true;
  double zr = 0.0, zo = 0.0;
  for (int a : {0, 1})
    for (int k = 1; k <= 50; ++k) {
      const auto t = laguerre_zeros(k, a);
      for (double r : t.residuals) zr = std::max(zr, r);
      if (k <= 12) {
        const auto ref = oracle::laguerre_zeros(k, a);
        if (ref.size() != t.zeros.size()) zo = 1.0;
        for (std::size_t i = 0; i < ref.size() && i < t.zeros.size(); ++i)
          zo = std::max(zo, std::abs(ref[i] - t.zeros[i]));
      }
    }
  ok &= check(zr < 1e-10, "Laguerre zero residuals, k <= 50: " + num(zr));
  ok &= check(zo < 1e-8, "Laguerre zeros against sign-scan oracle, k <= 12: " + num(zo));
  double orth = 0.0;
  for (int j = 0; j <= 15; ++j)
    for (int k = j; k <= 15; ++k) {
      const double v = oracle::simpson([&](double x) { return hermite_h(j, x) * hermite_h(k, x); }, -14.0, 14.0, 4000);
      orth = std::max(orth, std::abs(v - (j == k ? 1.0 : 0.0)));
    }
  ok &= check(orth < 1e-10, "Hermite orthonormality, j, k <= 15: " + num(orth));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> lam(0.5, 3.0), coord(-2.0, 2.0);
  double printed = 0.0, scaled = 0.0;
  for (int n : {1, 2})
    for (int k = 0; k <= 8; ++k)
      for (int t = 0; t < 20; ++t) {
        std::vector<double> lp(n);
        for (double& x : lp) x = lam(rng);
        std::vector<cplx> z(n);
        double s = 0.0, prod = 1.0;
        for (int j = 0; j < n; ++j) {
          z[j] = cplx(coord(rng), coord(rng));
          s += lp[j] * std::norm(z[j]);
          prod *= std::sqrt(lp[j]);
        }
        const cplx sum = diagonal_sum(k, lp, z);
        const double rhs = std::pow(2.0 * std::numbers::pi, -0.5 * n) * oracle::theta(k, n, s);
        printed = std::max(printed, std::abs(prod * sum - rhs));
        scaled = std::max(scaled, std::abs(sum - prod * rhs));
      }
  ok &= check(printed < 1e-9, "diagonal sum, (prod sqrt lambda') sum Psi_aa = (2 pi)^{-n/2} theta_k: " + num(printed));
  std::cout << "    info diagonal sum with the lambda' product on the right: " << num(scaled) << '\n';
  double sh = 0.0;
  for (int j = 0; j <= 6; ++j)
    for (int k = 0; k <= 6; ++k)
      for (double l : {0.7, 1.0, 2.5})
        for (cplx z : {cplx(0.3, -0.8), cplx(-1.2, 0.5), cplx(1.9, 1.1)})
          sh = std::max(sh, std::abs(special_hermite_1d(j, k, l, z) - oracle::special_hermite(j, k, l, z)));
  ok &= check(sh < 1e-8, "special Hermite closed form against quadrature: " + num(sh));
  ok &= check(clock.seconds() < 60.0, "runtime " + num(clock.seconds()) + " s");
  return ok;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool criterion10() {
  if (cli_path.empty()) return check(false, "no metivier binary given");
  const auto base = std::filesystem::temp_directory_path() / ("metivier_det_" + std::to_string(::getpid()));
  std::filesystem::create_directories(base);
  std::ofstream(base / "config.json") << R"({"seed": 4, "K": 30})";
  int codes[2];
  for (int i = 0; i < 2; ++i) {
    const std::string cmd = "\"" + cli_path + "\" verify --config \"" + (base / "config.json").string() +
                            "\" --output \"" + (base / ("run" + std::to_string(i))).string() + "\" > /dev/null";
    codes[i] = std::system(cmd.c_str());
  }
  const std::string a = slurp(base / "run0" / "verify_report.json");
  const std::string b = slurp(base / "run1" / "verify_report.json");
  bool ok = check(codes[0] == 0 && codes[1] == 0, "both runs exit 0");
  ok &= check(!a.empty() && a == b, "reports byte-identical (" + std::to_string(a.size()) + " bytes)");
  std::filesystem::remove_all(base);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string which = argc > 1 ? argv[1] : "all";
  if (argc > 2) cli_path = argv[2];
  bool (*const criteria[])() = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                criterion6, criterion7, criterion8, criterion9, criterion10};
  bool all = true;
  for (int i = 1; i <= 10; ++i) {
    if (which != "all" && which != std::to_string(i)) continue;
    bool pass = false;
    try {
      pass = criteria[i - 1]();
    } catch (const std::exception& e) {
      std::cout << "    error " << e.what() << '\n';
    }
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << i << std::endl;
    all = all && pass;
  }
  return all ? 0 : 1;
}
