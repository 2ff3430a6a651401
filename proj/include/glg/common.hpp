#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace glg {

using cd = std::complex<double>;
using CVec = Eigen::VectorXcd;  // point of C^n or tangent vector
using RVec = Eigen::VectorXd;   // Lie algebra element, real coefficients of i
using RMat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

inline constexpr const char* kVersion = "0.1.0";

enum class ErrorKind {
  InvalidModel,
  ShapeMismatch,
  NonConvergence,
  NotCritical,
  NotFreeOrbit,
  Unattainable,
  RegionOutOfBounds,
  InputNotSolution,
  FitUnstable,
  HypothesisViolated,
  EndpointNotDecayed,
  StepTooLarge,
  GridExceedsProfile,
  DegenerateForm,
  DegenerateResidues,
  OutOfRange,
  ConfigError,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Real inner product Re <u, v> on C^n.
inline double rdot(const CVec& u, const CVec& v) { return (u.conjugate().cwiseProduct(v)).sum().real(); }

// C^n <-> R^{2n}, interleaved (Re z_1, Im z_1, ...).
RVec to_real(const CVec& z);
CVec to_complex(const RVec& x);

// Matrix of J = multiplication by i in the interleaved real basis.
RMat j_matrix(int n);

}  // namespace glg
