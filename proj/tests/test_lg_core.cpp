#include <doctest.h>

#include "glg/lg_core.hpp"
#include "oracles.hpp"

using namespace glg;
using oracle::cd;

namespace {

const cd I(0, 1);

LGModel single(int weight, std::vector<Monomial> terms) {
  Eigen::MatrixXi w(1, 1);
  w << weight;
  return LGModel("single", w, Superpotential(1, std::move(terms)), RVec::Zero(1));
}

LGModel square_model() { return quadratic_model(1.0); }

}  // namespace

TEST_CASE("validate_model") {
  CHECK(validate_model(fundamental_model(1.0)).empty());
  CHECK(validate_model(fundamental_model(0.0)).empty());
  CHECK(validate_model(xy_model()).empty());
  CHECK(validate_model(vortex_model()).empty());
  CHECK_FALSE(validate_model(single(1, {{{1}, 1.0}})).empty());
  // Trivial group: any polynomial is invariant.
  CHECK(validate_model(LGModel("free", Eigen::MatrixXi(0, 1), Superpotential(1, {{{5}, 2.0}, {{1}, 1.0}}), RVec()))
            .empty());
  CHECK_THROWS_AS(require_valid(single(1, {{{1}, 1.0}})), Error);
}

TEST_CASE("model JSON round trip keeps the hash") {
  auto m = fundamental_model(0.7);
  auto back = model_from_json(model_to_json(m));
  CHECK(model_hash(back) == model_hash(m));
  CHECK(model_hash(fundamental_model(0.7)) != model_hash(fundamental_model(0.8)));
  nlohmann::json j = {{"n", 1}, {"weights", {{1}}}, {"W", {{{"exp", {1}}, {"re", 1.0}, {"im", 0.0}}}}, {"delta", {0.5}}};
  CHECK_FALSE(validate_model(model_from_json(j)).empty());
  CHECK_THROWS_AS(require_valid(model_from_json(j)), Error);
}

TEST_CASE("eval_W examples") {
  CVec z(3);
  z << 1.0, 1.0, 0.0;
  CHECK(std::abs(eval_W(fundamental_model(1.0), z)) == 0.0);
  CHECK(std::abs(eval_W(square_model(), CVec::Zero(1))) == 0.0);
  CVec w(2);
  w << 2.0, cd(0, 3);
  CHECK(std::abs(eval_W(xy_model(), w) - cd(0, 6)) < 1e-15);
}

TEST_CASE("grad_L examples and FD oracle") {
  CVec z(3);
  z << 1.0, 1.0, 0.0;
  CHECK(grad_L(fundamental_model(1.0), z).norm() == 0.0);
  CVec z1(1);
  z1 << cd(1, 1);
  CHECK(std::abs(grad_L(square_model(), z1)(0) - 2.0 * cd(1, -1)) < 1e-14);

  std::mt19937_64 rng(17);
  for (const auto& m : {xy_model(), fundamental_model(1.0), cubic_model(), vortex_model()}) {
    for (int t = 0; t < 5; ++t) {
      CVec p = oracle::rand_cvec(rng, m.n);
      auto reW = [&](const CVec& x) { return eval_W(m, x).real(); };
      CVec fd = oracle::fd_gradient(reW, p, 1e-5);
      CVec g = grad_L(m, p);
      CHECK((g - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
      // H = Im W.
      auto imW = [&](const CVec& x) { return eval_W(m, x).imag(); };
      CVec fdh = oracle::fd_gradient(imW, p, 1e-5);
      CHECK((grad_H(m, p) - fdh).norm() <= 1e-6 * std::max(1.0, fdh.norm()));
      CHECK(std::abs(eval_L(m, p) - eval_W(m, p).real()) < 1e-14);
    }
  }
}

TEST_CASE("hess_L_apply matches the explicit fundamental matrix") {
  auto m = fundamental_model(1.0);
  std::mt19937_64 rng(23);
  for (int t = 0; t < 5; ++t) {
    CVec z = oracle::rand_cvec(rng, 3), v = oracle::rand_cvec(rng, 3);
    cd x = z(0), y = z(1), b = z(2);
    CMat H(3, 3);
    H << 0, b, y, b, 0, x, y, x, 0;
    CVec expect = (H * v).conjugate();
    CHECK((hess_L_apply(m, z, v) - expect).norm() < 1e-13);
  }
  CVec one(1);
  one << 1.0;
  CHECK(std::abs(hess_L_apply(square_model(), CVec::Zero(1), one)(0) - 2.0) < 1e-14);
  auto m0 = fundamental_model(0.0);
  CHECK(hess_L_apply(m0, CVec::Zero(3), oracle::rand_cvec(rng, 3)).norm() == 0.0);
}

TEST_CASE("Hessians against differences of the gradients") {
  std::mt19937_64 rng(29);
  const double h = 1e-6;
  for (const auto& m : {xy_model(), fundamental_model(1.0), cubic_model()}) {
    CVec z = oracle::rand_cvec(rng, m.n), v = oracle::rand_cvec(rng, m.n), T = oracle::rand_cvec(rng, m.n);
    CVec fdL = (grad_L(m, z + h * v) - grad_L(m, z - h * v)) / (2 * h);
    CHECK((hess_L_apply(m, z, v) - fdL).norm() < 1e-7);
    CVec fdH = (grad_H(m, z + h * v) - grad_H(m, z - h * v)) / (2 * h);
    CHECK((hess_H_apply(m, z, v) - fdH).norm() < 1e-7);
    CVec fdT = (hess_H_apply(m, z + h * T, v) - hess_H_apply(m, z - h * T, v)) / (2 * h);
    CHECK((dhess_H_apply(m, z, T, v) - fdT).norm() < 1e-7);
    // Real matrix is symmetric and acts like hess_L_apply.
    RMat R = hess_L_real(m, z);
    CHECK((R - R.transpose()).norm() < 1e-14);
    CHECK((to_complex(R * to_real(v)) - hess_L_apply(m, z, v)).norm() < 1e-13);
  }
}

TEST_CASE("moment map and infinitesimal action") {
  auto vm = vortex_model();
  CVec two(1);
  two << 2.0;
  CHECK(moment_map(vm, two)(0) == doctest::Approx(2.0));
  CVec z(3);
  z << 1.0, 1.0, 0.0;
  auto fm = fundamental_model(1.0);
  CHECK(moment_map(fm, z)(0) == 0.0);
  CHECK(moment_map(fm, CVec::Zero(3))(0) == 0.0);

  RVec one = RVec::Ones(1), zero = RVec::Zero(1);
  CVec u(1);
  u << 1.0;
  CHECK(std::abs(infinitesimal_action(vm, u, one)(0) - I) < 1e-15);
  CVec w(3);
  w << 1.0, 1.0, 1.0;
  CVec xi = infinitesimal_action(fm, w, one);
  CHECK(std::abs(xi(0) - I) < 1e-15);
  CHECK(std::abs(xi(1) + I) < 1e-15);
  CHECK(std::abs(xi(2)) < 1e-15);
  CHECK(infinitesimal_action(fm, w, zero).norm() == 0.0);

  std::mt19937_64 rng(31);
  CVec p = oracle::rand_cvec(rng, 1), v = oracle::rand_cvec(rng, 1);
  CHECK((grad_mu_pair(vm, p, one) - p).norm() < 1e-15);
  CHECK((hess_mu_pair(vm, p, v, one) - v).norm() < 1e-15);
  CHECK(grad_mu_pair(vm, p, zero).norm() == 0.0);

  // <grad mu_a, v> is the derivative of mu_a along v.
  for (const auto& m : {xy_model(), fundamental_model(1.0)}) {
    CVec q = oracle::rand_cvec(rng, m.n), t = oracle::rand_cvec(rng, m.n);
    const double h = 1e-6;
    RVec fd = (moment_map(m, q + h * t) - moment_map(m, q - h * t)) / (2 * h);
    CHECK((mu_pairing(m, q, t) - fd).norm() < 1e-8);
    // The action is the derivative of the gauge orbit.
    RVec th = RVec::Constant(m.k, 0.3);
    CVec fda = (gauge_act(m, h * th, q) - gauge_act(m, -h * th, q)) / (2 * h);
    CHECK((infinitesimal_action(m, q, th) - fda).norm() < 1e-8);
  }
}

TEST_CASE("d_operator") {
  auto fm = fundamental_model(1.0);
  std::mt19937_64 rng(37);
  CVec z = oracle::rand_cvec(rng, 3);
  auto d0 = d_operator(fm, z, CVec::Zero(3));
  CHECK(d0.hessH.norm() == 0.0);
  CHECK(d0.pair.norm() == 0.0);
  CHECK(d0.pairJ.norm() == 0.0);
  auto vm = vortex_model();
  CVec one(1);
  one << 1.0;
  auto d = d_operator(vm, one, one);
  CHECK(d.hessH.norm() == 0.0);
  CHECK(d.pair(0) == doctest::Approx(1.0));
  CHECK(std::abs(d.pairJ(0)) < 1e-15);
  RMat D = d_operator_real(fm, z);
  CHECK(D.rows() == 2 * 3 + 2);
  CHECK(D.cols() == 6);
}

TEST_CASE("identity suite") {
  std::mt19937_64 rng(41);
  for (const auto& m : {vortex_model(), xy_model(), fundamental_model(1.0), fundamental_model(0.0)}) {
    std::vector<CVec> pts, tans;
    std::vector<RVec> lie;
    for (int i = 0; i < 20; ++i) pts.push_back(oracle::rand_cvec(rng, m.n));
    for (int i = 0; i < 3; ++i) {
      tans.push_back(oracle::rand_cvec(rng, m.n));
      lie.push_back(RVec::Constant(m.k, 0.5 + i));
    }
    CHECK(identity_suite(m, pts, lie, tans).max_residual() < 1e-10);
    auto zr = identity_suite(m, {CVec::Zero(m.n)}, lie, tans);
    CHECK(zr.max_residual() == 0.0);
  }
  // W = z with weight 1 is not invariant.
  auto bad = single(1, {{{1}, 1.0}});
  auto r = identity_suite(bad, {oracle::rand_cvec(rng, 1)}, {RVec::Ones(1)}, {oracle::rand_cvec(rng, 1)});
  CHECK(std::max(r.residual[4], r.residual[5]) > 1e-3);
}

TEST_CASE("gauge actions") {
  auto fm = fundamental_model(1.0);
  std::mt19937_64 rng(43);
  CVec z = oracle::rand_cvec(rng, 3);
  CHECK((gauge_act(fm, RVec::Constant(1, 2 * M_PI), z) - z).norm() < 1e-14);
  RVec a = RVec::Constant(1, 0.4), th = RVec::Constant(1, -1.1);
  CHECK((complex_gauge_act(fm, a, th, z) - gauge_act(fm, th, real_gauge_act(fm, a, z))).norm() < 1e-14);
  // L and H are invariant under the complexified group.
  CHECK(std::abs(eval_W(fm, complex_gauge_act(fm, a, th, z)) - eval_W(fm, z)) < 1e-13);
  // |x|^2 - |y|^2 scales as expected under the real part.
  CVec e = real_gauge_act(fm, a, z);
  CHECK(std::norm(e(0)) == doctest::Approx(std::exp(0.8) * std::norm(z(0))));
  CHECK(std::norm(e(1)) == doctest::Approx(std::exp(-0.8) * std::norm(z(1))));
}

TEST_CASE("real and complex coordinates") {
  std::mt19937_64 rng(47);
  CVec z = oracle::rand_cvec(rng, 4);
  RVec x = to_real(z);
  CHECK(x(0) == z(0).real());
  CHECK(x(1) == z(0).imag());
  CHECK((to_complex(x) - z).norm() == 0.0);
  RMat J = j_matrix(4);
  CHECK((to_complex(J * x) - I * z).norm() < 1e-15);
  CHECK((J * J + RMat::Identity(8, 8)).norm() == 0.0);
}
