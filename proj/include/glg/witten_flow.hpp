#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Sparse>

#include "glg/grid_field.hpp"
#include "glg/report.hpp"

namespace glg {

enum class SolveMethod { newton, descent };
enum class GaugeFix { coulomb, temporal, none };
enum class LinearSolver { automatic, direct, iterative };

struct SolveOptions {
  SolveMethod method = SolveMethod::newton;
  GaugeFix gauge_fix = GaugeFix::coulomb;
  LinearSolver linear = LinearSolver::automatic;
  double tol = 1e-10;
  int max_iter = 60;
  double damping = 0.0;        // initial Levenberg-Marquardt parameter
  double cg_tol = 1e-13;       // relative tolerance of the iterative linear solve
  int cg_max_iter = 20000;
};

struct SolveResult {
  FieldConfig cfg;             // best iterate
  ExperimentReport report;
  bool converged = false;
  int iterations = 0;
  double residual = 0;         // L2 of the equations over interior nodes
  double gauge_residual = 0;   // L2 of the gauge-fixing rows
};

// Boundary nodes of `boundary` are held fixed; interior nodes start from `init`.
// Equations are imposed at interior nodes with central differences.
SolveResult solve_witten(const LGModel& m, const Grid2D& g, const FieldConfig& boundary, const FieldConfig& init,
                         const SolveOptions& opts = {});

// Stacked interior residual (scaled by h) and its Jacobian with respect to the
// interior unknowns (Re P, Im P per component, then a_t, a_s).
struct WittenSystem {
  RVec r;
  Eigen::SparseMatrix<double> J;
  double equation_l2 = 0, gauge_l2 = 0;
};
WittenSystem witten_system(const LGModel& m, const Grid2D& g, const FieldConfig& c, GaugeFix gf, bool jacobian);
RVec pack_interior(const LGModel& m, const Grid2D& g, const FieldConfig& c);
void unpack_interior(const LGModel& m, const Grid2D& g, const RVec& x, FieldConfig& c);

// Scalar reduction  Lap alpha + mu(e^alpha q) - mu(q) = 0  (Lap = -(d_t^2 + d_s^2))
// at nodes with mask != 0; every other node keeps its value from `alpha`.
struct ScalarSolve {
  RMat alpha;  // k x N
  int iterations = 0;
  double residual = 0;  // max norm
  std::vector<double> log;
  bool converged = false;
};
ScalarSolve solve_scalar_reduction(const LGModel& m, const CVec& q, const Grid2D& g, const std::vector<char>& mask,
                                   const RMat& alpha, double tol = 1e-10, int max_iter = 100);
RMat scalar_reduction_residual(const LGModel& m, const CVec& q, const Grid2D& g, const std::vector<char>& mask,
                               const RMat& alpha);

// Uniform random fields in [-amplitude, amplitude] from a 64-bit seed.
std::vector<RMat> random_inits(int k, const Grid2D& g, int count, std::uint64_t seed, double amplitude);

ExperimentReport triviality_experiment(const LGModel& m, const CVec& q, const Grid2D& g, double radius,
                                       const std::vector<RMat>& inits, double tol = 1e-13);

// Exact solution family P = e^alpha q, a_t = -d_s alpha, a_s = d_t alpha on a grid.
FieldConfig orbit_sector_config(const LGModel& m, const CVec& q, const Grid2D& g, const RMat& alpha);

struct DecayOptions {
  double t_half = 6.0;
  double S = 12.0;
  double h = 0.2;
  double amplitude = 0.05;
  double s0 = 2.0;
  double fit_lo = 0.25, fit_hi = 0.75;  // fractions of S
  SolveOptions solve{SolveMethod::newton, GaugeFix::coulomb, LinearSolver::automatic, 1e-12, 60};
};
struct DecayResult {
  ExperimentReport report;
  Grid2D grid;
  FieldConfig cfg;
  RVec U;
};
DecayResult decay_experiment(const LGModel& m, const CVec& q, const DecayOptions& opts = {});
ExperimentReport decay_amplitude_scan(const LGModel& m, const CVec& q, const DecayOptions& base,
                                      const std::vector<double>& amplitudes);

enum class EnvelopeKind { halfplane, strip };
struct EnvelopeOptions {
  EnvelopeKind kind = EnvelopeKind::halfplane;
  double R = 0;        // strip: s in [0, 2R]
  double s_shift = 0;  // halfplane: envelope K e^{-zeta (s - s_shift)} on s >= s_shift
  double tol_h = 1e-8;
  bool strict = true;  // throw HypothesisViolated
};
ExperimentReport max_principle_envelope(const Grid2D& g, const RVec& u, double zeta, double K,
                                        const EnvelopeOptions& opts = {});

// Flowline strip: t-independent downward flowline from q + eps v (v the top
// eigenvector of Hess L), delta moved to mu(p0), then a harmonic gauge
// theta = gauge_eps e^{-s} cos t.
struct StripBuild {
  LGModel model;
  Grid2D grid;
  FieldConfig exact;
  SolveResult solved;
};
StripBuild flowline_strip(const LGModel& m, const CVec& q, double h, double eps = 0.3, double gauge_eps = 0.2,
                          double t_half = 2.0, double S = 2.0);

struct IdentityLevel {
  Grid2D grid;
  FieldConfig cfg;
};

struct BochnerResiduals {
  double b8 = 0, b7_1 = 0, b7_2 = 0, b7_3 = 0;  // interior L2
  double scale = 0;                            // L2 of the Laplacian side of B8
  double input_residual = 0;
};
BochnerResiduals bochner_residuals(const LGModel& m, const Grid2D& g, const FieldConfig& c, double margin);

struct IdentityOptions {
  double margin = 1.0;          // physical distance excluded at every edge
  double solution_tol = 0.05;   // InputNotSolution above this interior residual
  bool require_solution = true;
  double floor = 1e-11;         // both levels below: identity satisfied identically
  double min_order = 1.0;
};
ExperimentReport bochner_verify(const LGModel& m, const std::vector<IdentityLevel>& levels,
                                const IdentityOptions& opts = {});

// Nodewise (d_t + i d_s)(W o P) + i |grad H|^2.
CVec holomorphy_defect(const LGModel& m, const Grid2D& g, const FieldConfig& c);
double holomorphy_residual(const LGModel& m, const Grid2D& g, const FieldConfig& c, double margin);
ExperimentReport holomorphy_check(const LGModel& m, const std::vector<IdentityLevel>& levels,
                                  const IdentityOptions& opts = {});

// Smooth random non-solution: q plus a few low Fourier modes.
FieldConfig random_smooth_config(const LGModel& m, const CVec& q, const Grid2D& g, std::uint64_t seed,
                                 double amplitude = 0.3);

struct Path1D {
  RVec s;     // uniform, odd node count
  CMat p;     // n x N
  RMat a_s;   // k x N
};
double action_functional(const LGModel& m, const Path1D& path, const RVec& delta);
struct ActionGradient {
  CMat gp;
  RMat ga;
};
ActionGradient action_gradient(const LGModel& m, const Path1D& path, const RVec& delta);
// L2 pairing of a gradient with a tangent direction (Simpson).
double action_pairing(const Path1D& path, const ActionGradient& g, const CMat& dp, const RMat& da);
ExperimentReport action_gradient_check(const LGModel& m, const Path1D& path, const RVec& delta, std::uint64_t seed,
                                       int directions = 3);
// C-infinity bump supported in (a, b), with derivative.
double bump(double s, double a, double b);
double bump_derivative(double s, double a, double b);

struct Flowline {
  std::vector<double> s;
  std::vector<CVec> p;
  ExperimentReport report;
};
Flowline gradient_flowline(const LGModel& m, const CVec& p0, double s_max, double dt);

}  // namespace glg
