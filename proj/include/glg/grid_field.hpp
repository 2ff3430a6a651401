#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "glg/lg_core.hpp"

namespace glg {

enum class GridKind { plane, half_plane, strip };
const char* to_string(GridKind k);

// Uniform square-cell grid, node (i, j) at (t0 + i h, s0 + j h), t fastest.
struct Grid2D {
  GridKind kind = GridKind::plane;
  double t0 = 0, t1 = 1, s0 = 0, s1 = 1;
  int nt = 3, ns = 3;
  double h = 0.5;

  static Grid2D make(GridKind kind, double t0, double t1, double s0, double s1, int nt);
  static Grid2D square(double half_width, int nodes);  // plane truncation [-R,R]^2

  int size() const { return nt * ns; }
  int idx(int i, int j) const { return j * nt + i; }
  double t(int i) const { return t0 + i * h; }
  double s(int j) const { return s0 + j * h; }
  bool on_boundary(int i, int j) const { return i == 0 || j == 0 || i == nt - 1 || j == ns - 1; }
  // Trapezoid quadrature weight of node (i, j).
  double weight(int i, int j) const;
  nlohmann::json to_json() const;
};

struct FieldConfig {
  CMat P;   // n x N
  RMat at;  // k x N
  RMat as;  // k x N

  static FieldConfig constant(const LGModel& m, const Grid2D& g, const CVec& q);
};

struct DerivedFields {
  CMat T, S;
  RMat F, mu;
};

void check_shapes(const LGModel& m, const Grid2D& g, const FieldConfig& c);

// Second-order differences along t or s; one-sided second order at the edges.
RMat diff_t(const Grid2D& g, const RMat& X);
RMat diff_s(const Grid2D& g, const RMat& X);
CMat diff_t(const Grid2D& g, const CMat& X);
CMat diff_s(const Grid2D& g, const CMat& X);

// Pointwise a~(a) applied to a tangent field: i (sum_a a_a w_aj) v_j.
CMat gauge_rotate(const LGModel& m, const RMat& a, const CMat& v);

DerivedFields covariant_derivatives(const LGModel& m, const Grid2D& g, const FieldConfig& c);

struct ResidualField {
  RMat moment;  // F + mu - delta, k x N
  CMat holo;    // T + JS + grad H, n x N
  double max_norm = 0;
  double l2_norm = 0;
};
ResidualField residual(const LGModel& m, const Grid2D& g, const FieldConfig& c);

// Trapezoid L2 norm of a nodal scalar density (already squared) restricted to
// nodes at least `margin` away from every edge.
double l2_of_density(const Grid2D& g, const RVec& dens2, int margin = 0);

struct Region {
  double t0, t1, s0, s1;
};
// Omega_{n,R}: unit translate of the 4 x 4 reference rectangle.
Region window(int n, double R);

struct EnergyBreakdown {
  double e_T = 0, e_JSH = 0, e_F = 0, e_mu = 0, total = 0;
  double local = 0;  // integral of |grad_A P|^2 + |grad H|^2 + |F|^2 + |delta - mu|^2
};
EnergyBreakdown energies(const LGModel& m, const Grid2D& g, const FieldConfig& c, const Region* region = nullptr);
// Energy density U = |T|^2 + |S|^2 + |grad H|^2 + |F|^2 + |delta - mu|^2 per node.
RVec energy_density(const LGModel& m, const Grid2D& g, const FieldConfig& c);

// u holds k angles per node.
FieldConfig apply_gauge(const LGModel& m, const Grid2D& g, const FieldConfig& c, const RMat& u);

enum class Direction { t, s };
CMat covariant_vector_derivative(const LGModel& m, const Grid2D& g, const FieldConfig& c, const CMat& v,
                                 Direction d);

void write_field_snapshot(const std::string& path, const LGModel& m, const Grid2D& g, const FieldConfig& c);
void write_density_csv(const std::string& path, const Grid2D& g, const RVec& u);

}  // namespace glg
