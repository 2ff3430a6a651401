#pragma once

#include <vector>

#include "glg/grid_field.hpp"
#include "glg/report.hpp"

namespace glg {

// Radial n-vortex of the weight-1 model; u = log|P|^2 on a log-spaced r grid.
struct VortexProfile {
  int n = 0;
  double r_min = 1e-3, r_max = 20;
  std::vector<double> x;   // log r, uniform
  std::vector<double> r;
  std::vector<double> u;
  std::vector<double> ux;  // du/dlog r = r du/dr
  double c0 = 0;           // u - 2n log r near the origin
  double residual = 0;
  int iterations = 0;

  double u_at(double rr) const;
  double r_du_at(double rr) const;  // r du/dr
};

VortexProfile solve_radial_vortex(int n, double r_min = 1e-3, double r_max = 20.0, int nodes = 8000);

// P = e^{u/2} e^{i n theta}, connection fixed so that the first-order system holds.
FieldConfig embed_vortex(const VortexProfile& p, const Grid2D& g);

double vortex_energy(const VortexProfile& p);
double vortex_energy(const Grid2D& g, const FieldConfig& c);

ExperimentReport vortex_decay_fit(const VortexProfile& p, double r_lo = 6.0, double r_hi = 10.0);

struct LinearFit {
  double slope = 0, intercept = 0, r2 = 0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace glg
