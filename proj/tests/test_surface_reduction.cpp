#include <doctest.h>

#include <algorithm>
#include <set>

#include "glg/surface_reduction.hpp"
#include "oracles.hpp"

using namespace glg;
using oracle::cd;

namespace {

WeightFields ones(const TorusGrid& g) { return {RVec::Ones(g.size()), RVec::Ones(g.size())}; }

// Smooth positive weights and a smooth right-hand side.
WeightFields bumpy(const TorusGrid& g) {
  WeightFields w{RVec(g.size()), RVec(g.size())};
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double x = 2 * M_PI * i * g.h / g.Lx, y = 2 * M_PI * j * g.h / g.Ly;
      w.w_plus(g.idx(i, j)) = 1 + 0.5 * std::sin(x) * std::cos(y);
      w.w_minus(g.idx(i, j)) = 0.8 + 0.3 * std::cos(x + y);
    }
  return w;
}

RVec wave(const TorusGrid& g, double amp, int kx, int ky) {
  RVec f(g.size());
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      f(g.idx(i, j)) = amp * std::cos(2 * M_PI * (kx * i * g.h / g.Lx + ky * j * g.h / g.Ly));
  return f;
}

// Numerator of sum_j a_j / (z - p_j) after clearing denominators, evaluated directly.
cd numerator(const std::vector<cd>& p, const std::vector<cd>& a, cd z) {
  cd s = 0;
  for (size_t j = 0; j < p.size(); ++j) {
    cd prod = a[j];
    for (size_t k = 0; k < p.size(); ++k)
      if (k != j) prod *= z - p[k];
    s += prod;
  }
  return s;
}

}  // namespace

TEST_CASE("torus grid and Laplacian") {
  auto g = TorusGrid::make(2.0, 3.0, 16);
  CHECK(g.ny == 24);
  CHECK(g.idx(-1, 0) == g.idx(15, 0));
  CHECK(g.idx(0, 24) == g.idx(0, 0));
  CHECK_THROWS_AS(TorusGrid::make(1.0, 1.35, 10), Error);

  CHECK(torus_laplacian(g, RVec::Constant(g.size(), 3.7)).cwiseAbs().maxCoeff() < 1e-12);
  // Fourier eigenvalue of the periodic 5-point stencil.
  RVec f = wave(g, 1.0, 2, 1);
  double kx = 2 * M_PI * 2 / g.Lx, ky = 2 * M_PI * 1 / g.Ly;
  double ev = (2 - 2 * std::cos(kx * g.h) + 2 - 2 * std::cos(ky * g.h)) / (g.h * g.h);
  CHECK((torus_laplacian(g, f) - ev * f).cwiseAbs().maxCoeff() < 1e-10);
  // Self-adjoint and positive.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  RVec a(g.size()), b(g.size());
  for (int o = 0; o < g.size(); ++o) {
    a(o) = n01(rng);
    b(o) = n01(rng);
  }
  CHECK(std::abs(a.dot(torus_laplacian(g, b)) - b.dot(torus_laplacian(g, a))) < 1e-9 * a.norm() * b.norm() * ev);
  CHECK(a.dot(torus_laplacian(g, a)) > 0);
}

TEST_CASE("kw_operator on constants") {
  auto g = TorusGrid::make(1.0, 1.0, 8);
  for (double c : {-0.7, 0.0, 0.4}) {
    RVec r = kw_operator(g, ones(g), RVec::Constant(g.size(), c));
    CHECK((r.array() - std::sinh(2 * c)).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("kazdan_warner_solve") {
  auto g = TorusGrid::make(2.0, 2.0, 24);
  auto w = bumpy(g);

  auto z = kazdan_warner_solve(g, w, RVec::Zero(g.size()));
  CHECK(z.alpha.cwiseAbs().maxCoeff() < 1e-12);

  RVec rhs = wave(g, 0.8, 1, 2) + RVec::Constant(g.size(), 0.3);
  auto s = kazdan_warner_solve(g, w, rhs);
  CHECK(s.residual < 1e-10);
  CHECK((kw_operator(g, w, s.alpha) - rhs).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(s.report.passed());

  // Independent of the starting point.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 2; ++trial) {
    RVec init(g.size());
    for (int o = 0; o < g.size(); ++o) init(o) = u(rng);
    auto si = kazdan_warner_solve(g, w, rhs, &init);
    CHECK((si.alpha - s.alpha).cwiseAbs().maxCoeff() < 1e-8);
  }

  // Constant data: sinh(2 alpha) = c.
  for (double c : {-2.0, 0.5, 3.0}) {
    auto sc = kazdan_warner_solve(g, ones(g), RVec::Constant(g.size(), c));
    double root = oracle::bisect([c](double x) { return 0.5 * (std::exp(2 * x) - std::exp(-2 * x)) - c; }, -5, 5);
    CHECK((sc.alpha.array() - root).abs().maxCoeff() < 1e-10);
    CHECK((sc.alpha.array() - 0.5 * std::asinh(c)).abs().maxCoeff() < 1e-10);
  }

  // Comparison: larger data gives a larger solution.
  RVec rhs2 = rhs + wave(g, 0.2, 0, 1).cwiseAbs();
  auto s2 = kazdan_warner_solve(g, w, rhs2);
  CHECK((s2.alpha - s.alpha).minCoeff() >= -1e-8);

  WeightFields dead{RVec::Zero(g.size()), w.w_minus};
  CHECK_THROWS_AS(kazdan_warner_solve(g, dead, rhs), Error);
  CHECK_THROWS_AS(kazdan_warner_solve(g, w, RVec::Zero(3)), Error);
}

TEST_CASE("critical_orbit_slice") {
  auto g = TorusGrid::make(1.0, 1.0, 20);
  const int N = g.size();
  CriticalOrbitInput in{RVec::Constant(N, 1.5), RVec::Constant(N, 0.5), wave(g, 0.1, 1, 1), RVec()};
  // The level of the reference configuration itself.
  in.delta = 0.5 * (in.psi_plus2 - in.psi_minus2) + in.curvature;
  auto s0 = critical_orbit_slice(g, in);
  CHECK(s0.alpha.cwiseAbs().maxCoeff() < 1e-12);

  CriticalOrbitInput c{RVec::Ones(N), RVec::Ones(N), RVec::Zero(N), RVec::Constant(N, 0.75)};
  auto sc = critical_orbit_slice(g, c);
  CHECK((sc.alpha.array() - 0.5 * std::asinh(0.75)).abs().maxCoeff() < 1e-10);

  in.delta = wave(g, 0.6, 2, 1) + RVec::Constant(N, 0.2);
  auto sv = critical_orbit_slice(g, in);
  // Substitute back into the original equation, test-side.
  RVec r = torus_laplacian(g, sv.alpha);
  for (int o = 0; o < N; ++o)
    r(o) += 0.5 * (std::exp(2 * sv.alpha(o)) * in.psi_plus2(o) - std::exp(-2 * sv.alpha(o)) * in.psi_minus2(o)) +
            in.curvature(o) - in.delta(o);
  CHECK(r.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(sv.report.scalars["critical_orbit_residual"].get<double>() < 1e-10);
}

TEST_CASE("torus_constant_solution") {
  cd a(0.6, -0.8);
  auto s0 = torus_constant_solution(a, 0.0);
  CHECK(s0.c == doctest::Approx(std::sqrt(2.0)));
  CHECK(s0.p == s0.c);
  CHECK(s0.q == s0.c);

  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 50; ++trial) {
    cd aa(u(rng), u(rng));
    double delta = u(rng);
    auto s = torus_constant_solution(aa, delta);
    double c = std::sqrt(2.0) * std::abs(aa);
    // Quadratic p^2 - 2 delta p - c^2 = 0.
    double p = delta + std::sqrt(delta * delta + c * c);
    CHECK(s.p == doctest::Approx(p).epsilon(1e-12));
    CHECK(s.p >= 0);
    CHECK(s.q >= 0);
    CHECK(std::abs(std::sqrt(s.p * s.q) - c) < 1e-12 * std::max(1.0, c));
    CHECK(std::abs(0.5 * (s.p - s.q) - delta) < 1e-12 * std::max(1.0, std::abs(delta)));
    CHECK(s.residual_product < 1e-12 * std::max(1.0, c));
    CHECK(s.residual_level < 1e-12 * std::max(1.0, std::abs(delta)));
    // The other root of the quadratic is negative.
    CHECK(s.other_root < 0);
    CHECK(s.other_root == doctest::Approx(delta - std::sqrt(delta * delta + c * c)).epsilon(1e-10));
  }
  try {
    torus_constant_solution(0.0, 1.0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateForm);
  }
}

TEST_CASE("count_critical_orbits") {
  CHECK(count_critical_orbits(2, 1) == 2);
  CHECK(count_critical_orbits(1, 0) == 1);
  CHECK(count_critical_orbits(0, 1, 3) == 1);
  for (int g = 1; g <= 4; ++g)
    for (int d = 0; d <= 2 * g - 2; ++d) {
      CHECK(count_critical_orbits(g, d) == oracle::pascal(2 * g - 2, d));
      auto subsets = enumerate_zero_subsets(g, d);
      CHECK((long long)subsets.size() == oracle::pascal(2 * g - 2, d));
      std::set<std::vector<int>> distinct(subsets.begin(), subsets.end());
      CHECK(distinct.size() == subsets.size());
      for (auto& s : subsets) CHECK((int)s.size() == d);
    }
  for (int n = 2; n <= 6; ++n)
    for (int d = 0; d <= n - 2; ++d) CHECK(count_critical_orbits(0, d, n) == oracle::pascal(n - 2, d));
  auto expect_range = [](int g, int d, int n) {
    try {
      count_critical_orbits(g, d, n);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::OutOfRange);
    }
  };
  expect_range(2, 3, 0);
  expect_range(2, -1, 0);
  expect_range(0, 0, 0);
}

TEST_CASE("punctured_sphere_zeros") {
  auto one = punctured_sphere_zeros({0.0, 1.0}, {1.0, 1.0});
  REQUIRE(one.zeros.size() == 1);
  CHECK(std::abs(one.zeros[0] - 0.5) < 1e-12);
  CHECK(one.all_simple);

  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<cd> p, a;
    for (int j = 0; j < 4; ++j) {
      p.push_back(3.0 * oracle::rand_c(rng));
      a.push_back(oracle::rand_c(rng) + cd(0.2, 0));
    }
    auto r = punctured_sphere_zeros(p, a);
    CHECK(r.zeros.size() == 3);
    CHECK(r.all_simple);
    CHECK(r.residue_error < 1e-8);
    for (auto z : r.zeros) {
      cd den = 1;
      for (auto pj : p) den *= z - pj;
      CHECK(std::abs(numerator(p, a, z)) < 1e-9 * std::abs(den) + 1e-9);
    }
  }

  // (z - 2)^2 from punctures -1, 0, 1.
  std::vector<cd> pd{-1.0, 0.0, 1.0}, ad{4.5, -4.0, 0.5};
  CHECK(std::abs(numerator(pd, ad, 2.0)) < 1e-14);
  auto dbl = punctured_sphere_zeros(pd, ad);
  CHECK_FALSE(dbl.all_simple);
  for (auto z : dbl.zeros) CHECK(std::abs(z - 2.0) < 1e-6);

  try {
    punctured_sphere_zeros({0.0, 1.0}, {1.0, -1.0});
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateResidues);
  }
}

TEST_CASE("goodness_check") {
  auto irr = goodness_check({1.0, std::sqrt(2.0)}, 10000);
  CHECK(irr.good);
  CHECK_FALSE(irr.witness.has_value());
  // Brute-force minimum over a small box.
  double best = INFINITY;
  const double nl = std::sqrt(3.0);
  for (int c1 = -200; c1 <= 200; ++c1)
    for (int c2 = -200; c2 <= 200; ++c2)
      if (c1 || c2) best = std::min(best, std::abs(c1 + c2 * std::sqrt(2.0)) / nl);
  auto small = goodness_check({1.0, std::sqrt(2.0)}, 200);
  CHECK(small.min_pairing == doctest::Approx(best).epsilon(1e-9));

  auto rat = goodness_check({2.0, 4.0}, 100);
  CHECK_FALSE(rat.good);
  REQUIRE(rat.witness.has_value());
  CHECK((*rat.witness)[0] == 2);
  CHECK((*rat.witness)[1] == -1);

  auto axis = goodness_check({1.0, 0.0}, 10);
  CHECK_FALSE(axis.good);
  REQUIRE(axis.witness.has_value());
  CHECK((*axis.witness)[0] == 0);
  CHECK((*axis.witness)[1] == 1);
}
