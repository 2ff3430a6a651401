#pragma once

#include <optional>
#include <vector>

#include "glg/lg_core.hpp"

namespace glg {

struct CriticalPoint {
  CVec z;
  double grad_norm = 0;
  int hess_kernel_dim = 0;
  int orbit_tangent_dim = 0;
  bool is_free_orbit = false;
  int seed_index = -1;
};

struct CriticalSearch {
  std::vector<CriticalPoint> points;       // deduplicated
  std::vector<int> failed_seeds;           // NonConvergence per seed
};

CriticalSearch find_critical_points(const LGModel& m, const std::vector<CVec>& seeds);

// True if z2 lies on the real-gauge orbit of z1 (within tol).
bool same_real_orbit(const LGModel& m, const CVec& z1, const CVec& z2, double tol = 1e-8);

struct MorseBottResult {
  bool ok = false;
  int kernel_dim = 0;
  int orbit_dim = 0;
};
MorseBottResult morse_bott_check(const LGModel& m, const CVec& q);

// Real basis of span{xi~_a, J xi~_a}, as columns (2n x 2k).
RMat orbit_tangent_matrix(const LGModel& m, const CVec& q);

struct ExtendedHessian {
  RMat matrix;
  RMat sigma;
  double symmetry_residual = 0;
  double sigma_square_residual = 0;
  double anticommutator_residual = 0;
};
ExtendedHessian assemble_extended_hessian(const LGModel& m, const CVec& q);

struct SpectralReport {
  std::vector<double> eigenvalues;
  double lambda1 = 0;
  std::optional<double> zeta1;
  double zeta2 = 0;
  double zeta = 0;
  double pairing_error = 0;  // max |lambda + lambda'| over the paired spectrum
};
SpectralReport spectral_gap(const LGModel& m, const CVec& q);

struct DeltaSlice {
  RVec alpha;
  CVec point;
  double residual = 0;
  int iterations = 0;
};
DeltaSlice solve_delta_slice(const LGModel& m, const CVec& q, const RVec& delta);

}  // namespace glg
