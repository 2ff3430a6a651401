#pragma once

#include <array>
#include <optional>
#include <vector>

#include "glg/common.hpp"
#include "glg/report.hpp"

namespace glg {

// Periodic grid on [0, Lx) x [0, Ly), square cells, node (i, j) at (i h, j h).
struct TorusGrid {
  double Lx = 1, Ly = 1;
  int nx = 3, ny = 3;
  double h = 1.0 / 3;

  static TorusGrid make(double Lx, double Ly, int nx);
  int size() const { return nx * ny; }
  int idx(int i, int j) const { return ((j % ny + ny) % ny) * nx + ((i % nx + nx) % nx); }
  double area() const { return Lx * Ly; }
};

struct WeightFields {
  RVec w_plus, w_minus;
};

// Positive discrete Laplacian, -(5-point), periodic.
RVec torus_laplacian(const TorusGrid& g, const RVec& a);
// eta(alpha) = Lap alpha + (e^{2a} - 1) w+^2 / 2 + (1 - e^{-2a}) w-^2 / 2.
RVec kw_operator(const TorusGrid& g, const WeightFields& w, const RVec& alpha);

struct KWResult {
  RVec alpha;
  ExperimentReport report;
  double residual = 0;
  std::vector<double> residual_log;
};
KWResult kazdan_warner_solve(const TorusGrid& g, const WeightFields& w, const RVec& rhs,
                             const RVec* init = nullptr, double tol = 1e-10);

// Equation placing a critical representative on the delta slice:
// Lap a + (e^{2a}|psi+|^2 - e^{-2a}|psi-|^2)/2 + curvature = delta.
struct CriticalOrbitInput {
  RVec psi_plus2, psi_minus2, curvature, delta;
};
RVec critical_orbit_residual(const TorusGrid& g, const CriticalOrbitInput& in, const RVec& alpha);
KWResult critical_orbit_slice(const TorusGrid& g, const CriticalOrbitInput& in);

struct TorusConstant {
  double p = 0, q = 0;   // |psi+|^2, |psi-|^2
  double c = 0, t = 0;   // sqrt(pq), p - q
  double other_root = 0;
  double phase_minus = 0;  // arg psi- with psi+ real positive
  double residual_product = 0, residual_level = 0;
};
TorusConstant torus_constant_solution(cd a, double delta);

long long count_critical_orbits(int genus, int d, int punctures = 0);
std::vector<std::vector<int>> enumerate_zero_subsets(int genus, int d, int punctures = 0);

struct SphereZeros {
  std::vector<cd> zeros;
  std::vector<double> eta_prime_abs;
  double min_pair_distance = 0;
  double scale = 0;
  bool all_simple = true;
  int rejected = 0;             // roots colliding with punctures
  double residue_error = 0;     // max |contour integral - 2 pi i a_j|
};
SphereZeros punctured_sphere_zeros(const std::vector<cd>& punctures, const std::vector<cd>& residues);
cd eta_form(const std::vector<cd>& punctures, const std::vector<cd>& residues, cd z);

struct Goodness {
  bool good = true;
  std::optional<std::array<long long, 2>> witness;
  double min_pairing = 0;  // min |c1 mu2 - c2 mu1| over the search (unit-normalized periods)
  double pairing_scale = 4 * M_PI * M_PI;
};
Goodness goodness_check(std::array<double, 2> periods, long long max_denominator, double tol = 1e-9);

}  // namespace glg
