#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "glg/stability.hpp"
#include "oracles.hpp"

using namespace glg;
using oracle::cd;

namespace {

CVec pt(std::initializer_list<cd> v) {
  CVec z(v.size());
  int i = 0;
  for (auto x : v) z(i++) = x;
  return z;
}

// Extended Hessian from central differences of mu and grad L only.
RMat fd_extended_hessian(const LGModel& m, const CVec& z) {
  const int n = m.n, k = m.k, N = 2 * k + 2 * n;
  const double h = 1e-6;
  RMat D = RMat::Zero(N, N);
  for (int c = 0; c < 2 * n; ++c) {
    RVec ec = RVec::Zero(2 * n);
    ec(c) = 1.0;
    CVec e = to_complex(ec);
    D.block(0, 2 * k + c, k, 1) = (moment_map(m, z + h * e) - moment_map(m, z - h * e)) / (2 * h);
    D.block(k, 2 * k + c, k, 1) =
        -(moment_map(m, z + h * cd(0, 1) * e) - moment_map(m, z - h * cd(0, 1) * e)) / (2 * h);
    D.block(2 * k, 2 * k + c, 2 * n, 1) = to_real(CVec((grad_L(m, z + h * e) - grad_L(m, z - h * e)) / (2 * h)));
  }
  D.block(2 * k, 0, 2 * n, 2 * k) = D.block(0, 2 * k, 2 * k, 2 * n).transpose();
  return D;
}

RVec sorted_eigs(const RMat& A) {
  Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace

TEST_CASE("find_critical_points") {
  auto m1 = fundamental_model(1.0);
  auto r = find_critical_points(m1, {pt({1.1, 0.9, 0.05}), pt({cd(0.8, 0.3), cd(1.2, -0.2), cd(0, 0.1)})});
  REQUIRE(!r.points.empty());
  for (auto& p : r.points) {
    CHECK(std::abs(p.z(2)) < 1e-10);
    CHECK(std::abs(p.z(0) * p.z(1) - 1.0) < 1e-10);
    CHECK(grad_L(m1, p.z).norm() < 1e-10);
  }
  // Points on one real orbit are merged.
  CVec a = pt({1.0, 1.0, 0.0});
  auto dup = find_critical_points(m1, {a, gauge_act(m1, RVec::Constant(1, 0.7), a)});
  CHECK(dup.points.size() == 1);

  auto q = find_critical_points(quadratic_model(), {pt({cd(0.7, -0.4)}), pt({cd(-2, 1)})});
  REQUIRE(q.points.size() == 1);
  CHECK(std::abs(q.points[0].z(0)) < 1e-12);

  auto m0 = fundamental_model(0.0);
  auto z0 = find_critical_points(m0, {pt({0.9, 0.05, 0.0}), pt({0.0, 0.05, 1.1}), pt({0.1, 0.0, 0.7})});
  REQUIRE(!z0.points.empty());
  for (auto& p : z0.points) {
    cd x = p.z(0), y = p.z(1), b = p.z(2);
    // Union of the three coordinate planes where two of x, y, b vanish pairwise.
    CHECK(std::abs(x * y) + std::abs(x * b) + std::abs(y * b) < 1e-9);
  }
}

TEST_CASE("morse_bott_check") {
  auto r1 = morse_bott_check(fundamental_model(1.0), pt({1.0, 1.0, 0.0}));
  CHECK(r1.ok);
  CHECK(r1.kernel_dim == 2);
  CHECK(r1.orbit_dim == 2);
  auto r0 = morse_bott_check(fundamental_model(0.0), CVec::Zero(3));
  CHECK_FALSE(r0.ok);
  CHECK(r0.kernel_dim == 6);
  auto rq = morse_bott_check(quadratic_model(), CVec::Zero(1));
  CHECK(rq.ok);
  CHECK(rq.kernel_dim == 0);
  CHECK(rq.orbit_dim == 0);
  CHECK_THROWS_AS(morse_bott_check(fundamental_model(1.0), pt({1.0, 2.0, 0.3})), Error);
}

TEST_CASE("extended Hessian against finite differences") {
  std::mt19937_64 rng(53);
  for (const auto& m : {xy_model(), fundamental_model(1.0), vortex_model(), cubic_model()}) {
    for (int t = 0; t < 3; ++t) {
      CVec z = oracle::rand_cvec(rng, m.n);
      auto eh = assemble_extended_hessian(m, z);
      RMat D = fd_extended_hessian(m, z);
      CHECK((eh.matrix - D).norm() < 1e-7 * std::max(1.0, D.norm()));
      const int N = (int)eh.sigma.rows();
      CHECK((eh.sigma * eh.sigma + RMat::Identity(N, N)).norm() == 0.0);
      CHECK(eh.sigma_square_residual == 0.0);
      CHECK((eh.sigma * eh.matrix + eh.matrix * eh.sigma).norm() < 1e-12);
      RVec ev = sorted_eigs(eh.matrix);
      for (int i = 0; i < N; ++i) CHECK(std::abs(ev(i) + ev(N - 1 - i)) < 1e-9);
    }
  }
  auto eq = assemble_extended_hessian(quadratic_model(), CVec::Zero(1));
  RVec ev = sorted_eigs(eq.matrix);
  REQUIRE(ev.size() == 2);
  CHECK(ev(0) == doctest::Approx(-2.0));
  CHECK(ev(1) == doctest::Approx(2.0));
  // Singular at the origin when lambda = 0.
  CHECK(sorted_eigs(assemble_extended_hessian(fundamental_model(0.0), CVec::Zero(3)).matrix).cwiseAbs().minCoeff() <
        1e-12);
}

TEST_CASE("spectral_gap") {
  // SVD oracle for zeta1: the map xi -> sum xi_a grad mu_a into T_qM, with
  // grad mu_a taken by finite differences.
  auto zeta1_oracle = [](const LGModel& m, const CVec& q) {
    RMat A(2 * m.n, m.k);
    for (int a = 0; a < m.k; ++a) {
      auto mu_a = [&](const CVec& z) { return moment_map(m, z)(a); };
      A.col(a) = to_real(oracle::fd_gradient(mu_a, q));
    }
    Eigen::JacobiSVD<RMat> svd(A);
    return svd.singularValues().minCoeff();
  };
  auto vm = vortex_model();
  auto sv = spectral_gap(vm, pt({1.0}));
  REQUIRE(sv.zeta1.has_value());
  CHECK(*sv.zeta1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*sv.zeta1 == doctest::Approx(zeta1_oracle(vm, pt({1.0}))).epsilon(1e-8));

  auto fm = fundamental_model(1.0);
  CVec q = pt({1.0, 1.0, 0.0});
  auto sf = spectral_gap(fm, q);
  REQUIRE(sf.zeta1.has_value());
  CHECK(*sf.zeta1 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(*sf.zeta1 == doctest::Approx(zeta1_oracle(fm, q)).epsilon(1e-8));
  CHECK(sf.zeta2 > 0);
  CHECK(sf.zeta == doctest::Approx(std::min(*sf.zeta1, sf.zeta2)));
  CHECK(sf.lambda1 == doctest::Approx(sorted_eigs(fd_extended_hessian(fm, q)).cwiseAbs().minCoeff()).epsilon(1e-6));
  CHECK(sf.lambda1 > 1e-6);
  CHECK(sf.pairing_error < 1e-9);

  auto sq = spectral_gap(quadratic_model(), CVec::Zero(1));
  CHECK_FALSE(sq.zeta1.has_value());
  CHECK(sq.zeta == doctest::Approx(2.0));
  CHECK(sq.lambda1 == doctest::Approx(2.0));

  CHECK_THROWS_AS(spectral_gap(xy_model(), CVec::Zero(2)), Error);
}

TEST_CASE("solve_delta_slice") {
  auto fm = fundamental_model(1.0);
  CVec q = pt({1.0, 1.0, 0.0});
  auto s0 = solve_delta_slice(fm, q, RVec::Zero(1));
  CHECK(std::abs(s0.alpha(0)) < 1e-14);

  auto s = solve_delta_slice(fm, q, RVec::Constant(1, 1.5));
  double a = oracle::bisect([](double x) { return 0.5 * (std::exp(2 * x) - std::exp(-2 * x)) - 1.5; }, -5, 5);
  CHECK(s.alpha(0) == doctest::Approx(a).epsilon(1e-10));
  CHECK(s.alpha(0) == doctest::Approx(0.5 * std::asinh(1.5)).epsilon(1e-10));
  CHECK(std::abs(moment_map(fm, s.point)(0) - 1.5) < 1e-10);
  CHECK(std::abs(eval_W(fm, s.point) - eval_W(fm, q)) < 1e-10);

  // |z|^2 e^{2 alpha} / 2 = 2 at |z| = 1.
  auto vs = solve_delta_slice(vortex_model(), pt({1.0}), RVec::Constant(1, 2.0));
  double av = oracle::bisect([](double x) { return 0.5 * std::exp(2 * x) - 2.0; }, -5, 5);
  CHECK(vs.alpha(0) == doctest::Approx(av).epsilon(1e-10));
  CHECK(vs.alpha(0) == doctest::Approx(std::log(2.0)).epsilon(1e-10));

  // Negative levels are out of reach for a weight-1 circle action.
  CHECK_THROWS_AS(solve_delta_slice(vortex_model(), pt({1.0}), RVec::Constant(1, -1.0)), Error);
}

TEST_CASE("same_real_orbit") {
  auto fm = fundamental_model(1.0);
  CVec q = pt({1.0, 1.0, 0.0});
  CHECK(same_real_orbit(fm, q, gauge_act(fm, RVec::Constant(1, 2.1), q)));
  CHECK_FALSE(same_real_orbit(fm, q, real_gauge_act(fm, RVec::Constant(1, 0.3), q)));
  RMat T = orbit_tangent_matrix(fm, q);
  CHECK(T.rows() == 6);
  CHECK(T.cols() == 2);
  Eigen::JacobiSVD<RMat> svd(T);
  CHECK(svd.singularValues().minCoeff() > 0.5);
}
