#include <doctest.h>

#include "glg/vortex.hpp"
#include "oracles.hpp"

using namespace glg;

namespace {

// Residual of u_xx = r^2 (e^u - 1), the radial equation in x = log r, by
// second differences on the profile's own nodes.
double ode_residual(const VortexProfile& p) {
  double worst = 0;
  for (size_t i = 1; i + 1 < p.x.size(); ++i) {
    double dx = p.x[i + 1] - p.x[i];
    double uxx = (p.u[i + 1] - 2 * p.u[i] + p.u[i - 1]) / (dx * dx);
    worst = std::max(worst, std::abs(uxx - p.r[i] * p.r[i] * (std::exp(p.u[i]) - 1)));
  }
  return worst;
}

}  // namespace

TEST_CASE("n = 0 is the vacuum") {
  auto p = solve_radial_vortex(0);
  for (double u : p.u) CHECK(u == 0.0);
  CHECK(vortex_energy(p) == 0.0);
  auto g = Grid2D::square(5.0, 21);
  auto c = embed_vortex(p, g);
  CHECK(residual(vortex_model(), g, c).max_norm == 0.0);
  auto fit = vortex_decay_fit(p);
  CHECK(fit.scalars["skipped"] == true);
}

TEST_CASE("radial profiles satisfy the ODE") {
  for (int n : {1, 2, 3}) {
    auto p = solve_radial_vortex(n);
    CHECK(p.residual < 1e-10);
    CHECK(ode_residual(p) < 1e-6);
    // u ~ 2n log r at the origin: r du/dr -> 2n.
    CHECK(p.ux.front() == doctest::Approx(2.0 * n).epsilon(1e-3));
    CHECK(p.r_du_at(p.r_min) == doctest::Approx(2.0 * n).epsilon(1e-3));
    // |P| increases monotonically to 1.
    for (size_t i = 1; i < p.u.size(); ++i) CHECK(p.u[i] >= p.u[i - 1]);
    CHECK(std::abs(p.u.back()) < 1e-6);
  }
  auto p1 = solve_radial_vortex(1);
  CHECK(1 - std::exp(p1.u.front()) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(p1.u_at(1.0) == doctest::Approx(p1.u[std::lower_bound(p1.r.begin(), p1.r.end(), 1.0) - p1.r.begin()])
                            .epsilon(1e-2));
  CHECK_THROWS_AS(solve_radial_vortex(-1), Error);
}

TEST_CASE("energy is 2 pi n") {
  for (int n : {1, 2, 3}) {
    double E = vortex_energy(solve_radial_vortex(n));
    CHECK(std::abs(E - 2 * M_PI * n) / (2 * M_PI * n) < 0.01);
  }
  auto g = Grid2D::square(12.0, 161);
  double Eg = vortex_energy(g, embed_vortex(solve_radial_vortex(1), g));
  CHECK(std::abs(Eg - 2 * M_PI) / (2 * M_PI) < 0.01);
}

TEST_CASE("embedded vortex: residual is second order") {
  auto p = solve_radial_vortex(1);
  auto vm = vortex_model();
  std::vector<double> res;
  for (int nodes : {81, 161}) {
    auto g = Grid2D::square(12.0, nodes);
    res.push_back(residual(vm, g, embed_vortex(p, g)).l2_norm);
  }
  CHECK(res[1] < res[0]);
  CHECK(res[0] / res[1] > 3.0);
  auto big = Grid2D::square(30.0, 21);
  try {
    embed_vortex(p, big);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::GridExceedsProfile);
  }
}

TEST_CASE("exponential decay of the curvature") {
  for (int n : {1, 2}) {
    auto p = solve_radial_vortex(n);
    auto rep = vortex_decay_fit(p);
    CHECK(rep.passed());
    CHECK(rep.scalars["fitted_rate"].get<double>() >= 0.9);
    // Test-side slope of log((1 - |P|^2)/2) over [6, 10].
    std::vector<double> x, y;
    for (size_t i = 0; i < p.r.size(); ++i)
      if (p.r[i] >= 6 && p.r[i] <= 10) {
        x.push_back(p.r[i]);
        y.push_back(std::log(0.5 * (1 - std::exp(p.u[i]))));
      }
    CHECK(-oracle::slope(x, y) == doctest::Approx(rep.scalars["fitted_rate"].get<double>()).epsilon(1e-9));
  }
}

TEST_CASE("fit_line") {
  auto f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
}
