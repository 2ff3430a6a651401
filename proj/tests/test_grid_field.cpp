#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "glg/grid_field.hpp"
#include "glg/stability.hpp"
#include "oracles.hpp"

using namespace glg;
using oracle::cd;

namespace {

CVec fundamental_q() {
  CVec q(3);
  q << 1.0, 1.0, 0.0;
  return q;
}

// Smooth P on the grid for the fundamental model, with its exact t-derivative.
void smooth_field(const Grid2D& g, CMat& P, CMat& Pt) {
  P.resize(3, g.size());
  Pt.resize(3, g.size());
  for (int j = 0; j < g.ns; ++j)
    for (int i = 0; i < g.nt; ++i) {
      double t = g.t(i), s = g.s(j);
      int o = g.idx(i, j);
      P(0, o) = cd(1 + 0.3 * std::sin(t), 0.2 * s);
      P(1, o) = cd(0.5 * std::cos(t + s), 0.1 * t * t);
      P(2, o) = cd(0.4 * std::sin(2 * t), -0.3);
      Pt(0, o) = cd(0.3 * std::cos(t), 0);
      Pt(1, o) = cd(-0.5 * std::sin(t + s), 0.2 * t);
      Pt(2, o) = cd(0.8 * std::cos(2 * t), 0);
    }
}

RMat smooth_gauge(const Grid2D& g) {
  RMat u(1, g.size());
  for (int j = 0; j < g.ns; ++j)
    for (int i = 0; i < g.nt; ++i) u(0, g.idx(i, j)) = 0.5 * std::sin(g.t(i)) * std::cos(0.7 * g.s(j));
  return u;
}

}  // namespace

TEST_CASE("grid construction") {
  auto g = Grid2D::square(2.0, 9);
  CHECK(g.nt == 9);
  CHECK(g.ns == 9);
  CHECK(g.h == doctest::Approx(0.5));
  double area = 0;
  for (int j = 0; j < g.ns; ++j)
    for (int i = 0; i < g.nt; ++i) area += g.weight(i, j);
  CHECK(area == doctest::Approx(16.0));
  auto s = Grid2D::make(GridKind::strip, -1, 1, 0, 3, 5);
  CHECK(s.ns == 7);
  CHECK_THROWS_AS(Grid2D::make(GridKind::strip, 0, 1, 0, 0.3, 5), Error);
}

TEST_CASE("differences are exact on quadratics") {
  auto g = Grid2D::make(GridKind::plane, -1, 2, 0, 1.5, 13);
  RMat X(1, g.size()), Xt(1, g.size()), Xs(1, g.size());
  for (int j = 0; j < g.ns; ++j)
    for (int i = 0; i < g.nt; ++i) {
      double t = g.t(i), s = g.s(j);
      X(0, g.idx(i, j)) = 3 * t * t - t * s + 2 * s * s + 1;
      Xt(0, g.idx(i, j)) = 6 * t - s;
      Xs(0, g.idx(i, j)) = -t + 4 * s;
    }
  CHECK((diff_t(g, X) - Xt).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((diff_s(g, X) - Xs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("constant configuration") {
  auto m = fundamental_model(1.0);
  auto g = Grid2D::square(3.0, 13);
  auto c = FieldConfig::constant(m, g, fundamental_q());
  auto d = covariant_derivatives(m, g, c);
  CHECK(d.T.norm() == 0.0);
  CHECK(d.S.norm() == 0.0);
  CHECK(d.F.norm() == 0.0);
  auto r = residual(m, g, c);
  CHECK(r.max_norm == 0.0);
  auto e = energies(m, g, c);
  CHECK(e.total == 0.0);
  CHECK(e.local == 0.0);
  CHECK(energy_density(m, g, c).norm() == 0.0);
}

TEST_CASE("linear connection has constant curvature") {
  auto m = fundamental_model(1.0);
  auto g = Grid2D::square(2.0, 11);
  auto c = FieldConfig::constant(m, g, fundamental_q());
  for (int j = 0; j < g.ns; ++j)
    for (int i = 0; i < g.nt; ++i) c.at(0, g.idx(i, j)) = g.s(j);
  auto d = covariant_derivatives(m, g, c);
  for (int j = 1; j < g.ns - 1; ++j)
    for (int i = 1; i < g.nt - 1; ++i) CHECK(d.F(0, g.idx(i, j)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("random configuration has a positive residual") {
  auto m = fundamental_model(1.0);
  auto g = Grid2D::square(2.0, 17);
  CMat P, Pt;
  smooth_field(g, P, Pt);
  FieldConfig c{P, RMat::Constant(1, g.size(), 0.2), RMat::Zero(1, g.size())};
  CHECK(residual(m, g, c).max_norm > 1e-2);
  CHECK(residual(m, g, c).l2_norm > 1e-2);
}

TEST_CASE("pure gauge transform of the constant solution: second order") {
  auto m = fundamental_model(1.0);
  std::vector<double> err;
  for (int nodes : {41, 81, 161}) {
    auto g = Grid2D::square(2.0, nodes);
    auto c = apply_gauge(m, g, FieldConfig::constant(m, g, fundamental_q()), smooth_gauge(g));
    auto r = residual(m, g, c);
    err.push_back(r.max_norm);
  }
  CHECK(err[0] > 0);
  CHECK(err[0] / err[1] > 3.5);
  CHECK(err[1] / err[2] > 3.5);
}

TEST_CASE("apply_gauge") {
  auto m = fundamental_model(1.0);
  auto g = Grid2D::square(1.0, 9);
  CMat P, Pt;
  smooth_field(g, P, Pt);
  FieldConfig c{P, RMat::Constant(1, g.size(), 0.3), RMat::Constant(1, g.size(), -0.1)};
  auto same = apply_gauge(m, g, c, RMat::Zero(1, g.size()));
  CHECK((same.P - c.P).norm() == 0.0);
  CHECK((same.at - c.at).norm() == 0.0);
  CHECK((same.as - c.as).norm() == 0.0);
  // Energy density is gauge invariant up to the difference error.
  auto g2 = Grid2D::square(1.0, 81);
  CMat P2, Pt2;
  smooth_field(g2, P2, Pt2);
  FieldConfig c2{P2, RMat::Constant(1, g2.size(), 0.3), RMat::Constant(1, g2.size(), -0.1)};
  RVec U0 = energy_density(m, g2, c2), U1 = energy_density(m, g2, apply_gauge(m, g2, c2, smooth_gauge(g2)));
  CHECK((U0 - U1).cwiseAbs().maxCoeff() < 1e-2 * U0.cwiseAbs().maxCoeff());
  CHECK_THROWS_AS(apply_gauge(m, g, c, RMat::Zero(2, g.size())), Error);
}

TEST_CASE("covariant vector derivative") {
  auto m = fundamental_model(1.0);
  auto g = Grid2D::square(1.0, 9);
  auto c = FieldConfig::constant(m, g, fundamental_q());
  CMat v = CVec::Constant(3, cd(0.3, -0.2)).replicate(1, g.size());
  CHECK(covariant_vector_derivative(m, g, c, v, Direction::t).norm() < 1e-13);
  CHECK(covariant_vector_derivative(m, g, c, v, Direction::s).norm() < 1e-13);

  // d_t (grad H o P) = Hess H (d_t P), to second order.
  std::vector<double> err;
  for (int nodes : {21, 41}) {
    auto gg = Grid2D::square(1.0, nodes);
    CMat P, Pt;
    smooth_field(gg, P, Pt);
    FieldConfig cc{P, RMat::Zero(1, gg.size()), RMat::Zero(1, gg.size())};
    CMat gH(3, gg.size()), expect(3, gg.size());
    for (int o = 0; o < gg.size(); ++o) {
      gH.col(o) = grad_H(m, P.col(o));
      expect.col(o) = hess_H_apply(m, P.col(o), Pt.col(o));
    }
    CMat got = covariant_vector_derivative(m, gg, cc, gH, Direction::t);
    err.push_back((got - expect).cwiseAbs().maxCoeff());
  }
  CHECK(err[1] < 1e-2);
  CHECK(err[0] / err[1] > 3.5);
  CHECK_THROWS_AS(covariant_vector_derivative(m, g, c, CMat::Zero(2, g.size()), Direction::t), Error);
}

TEST_CASE("shape and region errors") {
  auto m = fundamental_model(1.0);
  auto g = Grid2D::square(3.0, 13);
  auto c = FieldConfig::constant(m, g, fundamental_q());
  FieldConfig bad = c;
  bad.at.resize(2, g.size());
  CHECK_THROWS_AS(check_shapes(m, g, bad), Error);
  CHECK_THROWS_AS(residual(m, g, bad), Error);
  Region w = window(0, -1.0);
  CHECK(w.t0 == -2.0);
  CHECK(w.t1 == 2.0);
  CHECK(w.s1 - w.s0 == 4.0);
  CHECK_NOTHROW(energies(m, g, c, &w));
  Region out = window(3, 0.0);
  try {
    energies(m, g, c, &out);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RegionOutOfBounds);
  }
}

TEST_CASE("l2_of_density") {
  auto g = Grid2D::square(1.0, 21);
  RVec ones = RVec::Ones(g.size());
  CHECK(l2_of_density(g, ones) == doctest::Approx(2.0));
  // Margin of 5 nodes leaves [-0.5, 0.5]^2.
  CHECK(l2_of_density(g, ones, 5) == doctest::Approx(1.0));
}

TEST_CASE("snapshot and density CSV") {
  auto m = fundamental_model(1.0);
  auto g = Grid2D::square(1.0, 5);
  auto c = FieldConfig::constant(m, g, fundamental_q());
  std::string snap = "glg_test_snapshot.bin", csv = "glg_test_density.csv";
  write_field_snapshot(snap, m, g, c);
  write_density_csv(csv, g, energy_density(m, g, c));
  std::ifstream fs(snap, std::ios::binary | std::ios::ate), fc(csv);
  CHECK(fs.good());
  // Payload: per node 2n + 2k doubles.
  CHECK((long)fs.tellg() >= (long)(g.size() * (2 * 3 + 2) * sizeof(double)));
  std::string header;
  std::getline(fc, header);
  CHECK(header.find(',') != std::string::npos);
  int rows = 0;
  for (std::string line; std::getline(fc, line);) ++rows;
  CHECK(rows == g.size());
  std::remove(snap.c_str());
  std::remove(csv.c_str());
}
