#include <doctest.h>

#include "glg/suite.hpp"
#include "glg/witten_flow.hpp"

using namespace glg;

// Direct factorization and the iterative path must agree on a 65 x 65 strip.
TEST_CASE("direct and iterative Newton solves agree on 65x65") {
  auto m = fundamental_model(1.0);
  CVec q = slice_critical_point(m);
  auto g = Grid2D::make(GridKind::strip, -3.2, 3.2, 0, 6.4, 65);
  REQUIRE(g.ns == 65);
  std::vector<char> mask(g.size(), 0);
  RMat al = RMat::Zero(1, g.size());
  for (int j = 0; j < g.ns; ++j)
    for (int i = 0; i < g.nt; ++i) {
      if (!g.on_boundary(i, j)) mask[g.idx(i, j)] = 1;
      double c = std::cos(g.t(i) * M_PI / 6.4);
      if (j == 0) al(0, g.idx(i, j)) = 0.05 * c * c;
    }
  auto red = solve_scalar_reduction(m, q, g, mask, al, 1e-13);
  auto ref = orbit_sector_config(m, q, g, red.alpha);
  auto init = FieldConfig::constant(m, g, q);
  for (int o = 0; o < g.size(); ++o)
    if (!mask[o]) init.P.col(o) = ref.P.col(o);

  SolveOptions a;
  a.linear = LinearSolver::direct;
  a.tol = 1e-12;
  SolveOptions b = a;
  b.linear = LinearSolver::iterative;
  auto rd = solve_witten(m, g, ref, init, a);
  auto ri = solve_witten(m, g, ref, init, b);
  CHECK(rd.converged);
  CHECK(ri.converged);
  CHECK((rd.cfg.P - ri.cfg.P).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((rd.cfg.at - ri.cfg.at).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((rd.cfg.as - ri.cfg.as).cwiseAbs().maxCoeff() < 1e-8);
  // Automatic mode picks the direct path at this size.
  SolveOptions c = a;
  c.linear = LinearSolver::automatic;
  c.max_iter = 1;
  auto rc = solve_witten(m, g, ref, init, c);
  CHECK(rc.report.scalars["linear_solver"] == "direct");
  CHECK(ri.report.scalars["linear_solver"] == "iterative");
}
