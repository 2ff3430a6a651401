#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "glg/common.hpp"

namespace glg {

struct Monomial {
  std::vector<int> exp;
  cd coeff;
};

// Sparse polynomial W(z) = sum coeff * z^exp.
class Superpotential {
 public:
  Superpotential() = default;
  Superpotential(int n, std::vector<Monomial> terms);

  int dim() const { return n_; }
  const std::vector<Monomial>& terms() const { return terms_; }

  cd value(const CVec& z) const;
  CVec gradient(const CVec& z) const;                           // dW/dz_j
  CMat hessian(const CVec& z) const;                            // d2W/dz_i dz_j
  CVec third(const CVec& z, const CVec& u, const CVec& v) const;  // sum_jk W_ijk u_j v_k

 private:
  int n_ = 0;
  std::vector<Monomial> terms_;
};

struct LGModel {
  std::string name;
  int n = 1;
  int k = 0;
  Eigen::MatrixXi weights;  // k x n
  Superpotential W;
  RVec delta;      // size k
  RVec mu_offset;  // size k

  LGModel() = default;
  LGModel(std::string name, Eigen::MatrixXi weights, Superpotential W, RVec delta, RVec mu_offset = RVec());
};

// Presets.
LGModel vortex_model();                  // C, weight 1, W = 0, delta = 1/2
LGModel xy_model();                      // C^2, weights (1,-1), W = xy
LGModel fundamental_model(double lambda);  // C^3, weights (1,-1,0), W = (xy - lambda) b
LGModel quadratic_model(double c = 1.0);   // C, trivial group, W = c z^2
LGModel cubic_model();                     // C, trivial group, W = z^3/3 - z
LGModel preset(const std::string& name, double lambda = 1.0);

LGModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const LGModel& m);
std::string model_hash(const LGModel& m);

// Returns a description of every violated invariant; empty iff valid.
std::vector<std::string> validate_model(const LGModel& m);
void require_valid(const LGModel& m);

cd eval_W(const LGModel& m, const CVec& z);
double eval_L(const LGModel& m, const CVec& z);
double eval_H(const LGModel& m, const CVec& z);
CVec grad_L(const LGModel& m, const CVec& z);
CVec grad_H(const LGModel& m, const CVec& z);  // J grad L
CVec hess_L_apply(const LGModel& m, const CVec& z, const CVec& v);
CVec hess_H_apply(const LGModel& m, const CVec& z, const CVec& v);
// (grad_T Hess H)(v): derivative of Hess H along T, applied to v.
CVec dhess_H_apply(const LGModel& m, const CVec& z, const CVec& T, const CVec& v);
RMat hess_L_real(const LGModel& m, const CVec& z);  // 2n x 2n symmetric

RVec moment_map(const LGModel& m, const CVec& z);
CVec infinitesimal_action(const LGModel& m, const CVec& z, const RVec& xi);
CVec grad_mu_pair(const LGModel& m, const CVec& z, const RVec& xi);
CVec hess_mu_pair(const LGModel& m, const CVec& z, const CVec& v, const RVec& xi);
// <grad mu_a, v> for each generator a.
RVec mu_pairing(const LGModel& m, const CVec& z, const CVec& v);

struct DOperatorValue {
  CVec hessH;
  RVec pair;   // <grad mu, v>
  RVec pairJ;  // <grad mu, J v>
};
DOperatorValue d_operator(const LGModel& m, const CVec& z, const CVec& v);
RMat d_operator_real(const LGModel& m, const CVec& z);  // (2n + 2k) x 2n

struct IdentityReport {
  double residual[6] = {0, 0, 0, 0, 0, 0};
  double max_residual() const;
};
IdentityReport identity_suite(const LGModel& m, const std::vector<CVec>& points, const std::vector<RVec>& lie,
                              const std::vector<CVec>& tangents);

CVec gauge_act(const LGModel& m, const RVec& theta, const CVec& z);
CVec complex_gauge_act(const LGModel& m, const RVec& alpha, const RVec& theta, const CVec& z);
// exp(sum_a alpha_a w_aj) factor used by the real part of complex gauge.
CVec real_gauge_act(const LGModel& m, const RVec& alpha, const CVec& z);

}  // namespace glg
