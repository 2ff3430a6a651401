#include "glg/stability.hpp"

#include <algorithm>
#include <cmath>

namespace glg {

namespace {

constexpr double kKernelRel = 1e-8;

int numerical_rank(const Eigen::JacobiSVD<RMat>& svd, double ref) {
  int r = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > kKernelRel * ref) ++r;
  return r;
}

}  // namespace

RMat orbit_tangent_matrix(const LGModel& m, const CVec& q) {
  RMat B(2 * m.n, 2 * m.k);
  for (int a = 0; a < m.k; ++a) {
    RVec e = RVec::Zero(m.k);
    e(a) = 1.0;
    CVec x = infinitesimal_action(m, q, e);
    B.col(2 * a) = to_real(x);
    B.col(2 * a + 1) = to_real(cd(0, 1) * x);
  }
  return B;
}

CriticalSearch find_critical_points(const LGModel& m, const std::vector<CVec>& seeds) {
  require_valid(m);
  CriticalSearch out;
  for (size_t si = 0; si < seeds.size(); ++si) {
    CVec z = seeds[si];
    auto f = [&](const CVec& p) { return to_real(grad_L(m, p)); };
    RVec r = f(z);
    double phi = r.squaredNorm();
    bool conv = r.norm() < 1e-12;
    for (int it = 0; it < 200 && !conv; ++it) {
      RMat Jm = hess_L_real(m, z);
      // Minimum-norm step handles Morse-Bott kernels.
      RVec step = -Jm.completeOrthogonalDecomposition().solve(r);
      double t = 1.0;
      CVec zn;
      RVec rn;
      bool accepted = false;
      for (int ls = 0; ls < 40; ++ls) {
        zn = z + to_complex(t * step);
        rn = f(zn);
        if (rn.squaredNorm() <= (1.0 - 1e-4 * t) * phi) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;
      z = zn;
      r = rn;
      phi = r.squaredNorm();
      conv = r.norm() < 1e-12;
    }
    if (!conv && r.norm() >= 1e-10) {
      out.failed_seeds.push_back((int)si);
      continue;
    }
    bool dup = false;
    for (auto& p : out.points)
      if (same_real_orbit(m, p.z, z)) dup = true;
    if (dup) continue;
    CriticalPoint cp;
    cp.z = z;
    cp.grad_norm = r.norm();
    cp.seed_index = (int)si;
    RMat H = hess_L_real(m, z);
    Eigen::JacobiSVD<RMat> sh(H);
    double hmax = sh.singularValues().size() ? sh.singularValues()(0) : 0.0;
    cp.hess_kernel_dim = (int)H.rows() - (hmax > 0 ? numerical_rank(sh, hmax) : 0);
    if (m.k > 0) {
      RMat B = orbit_tangent_matrix(m, z);
      Eigen::JacobiSVD<RMat> sb(B);
      double bmax = sb.singularValues()(0);
      cp.orbit_tangent_dim = bmax > 1e-12 ? numerical_rank(sb, bmax) : 0;
    }
    cp.is_free_orbit = cp.orbit_tangent_dim == 2 * m.k;
    out.points.push_back(cp);
  }
  return out;
}

bool same_real_orbit(const LGModel& m, const CVec& z1, const CVec& z2, double tol) {
  for (int j = 0; j < m.n; ++j)
    if (std::abs(std::abs(z1(j)) - std::abs(z2(j))) > tol) return false;
  if ((z1 - z2).norm() < tol) return true;
  if (m.k == 0) return false;
  // Phase matching: minimise |u(theta) z1 - z2|^2 over the torus by
  // Gauss-Newton from a grid of starting angles.
  const int k = m.k;
  const int per = k == 1 ? 16 : (k == 2 ? 8 : 4);
  int total = 1;
  for (int a = 0; a < k; ++a) total *= per;
  for (int s = 0; s < total; ++s) {
    RVec th(k);
    int c = s;
    for (int a = 0; a < k; ++a) {
      th(a) = 2 * M_PI * (c % per) / per;
      c /= per;
    }
    for (int it = 0; it < 50; ++it) {
      CVec r = gauge_act(m, th, z1) - z2;
      RMat Jm(2 * m.n, k);
      for (int a = 0; a < k; ++a) {
        RVec e = RVec::Zero(k);
        e(a) = 1.0;
        Jm.col(a) = to_real(infinitesimal_action(m, gauge_act(m, th, z1), e));
      }
      RVec step = Jm.completeOrthogonalDecomposition().solve(-to_real(r));
      th += step;
      if (step.norm() < 1e-14) break;
    }
    if ((gauge_act(m, th, z1) - z2).norm() < tol) return true;
  }
  return false;
}

MorseBottResult morse_bott_check(const LGModel& m, const CVec& q) {
  if (grad_L(m, q).norm() >= 1e-8) throw Error(ErrorKind::NotCritical, "grad L does not vanish at q");
  MorseBottResult res;
  RMat H = hess_L_real(m, q);
  Eigen::JacobiSVD<RMat> sh(H, Eigen::ComputeFullV);
  double hmax = sh.singularValues()(0);
  int rank = hmax > 0 ? numerical_rank(sh, hmax) : 0;
  res.kernel_dim = (int)H.rows() - rank;
  RMat K = sh.matrixV().rightCols(res.kernel_dim);  // orthonormal kernel basis
  RMat B;
  if (m.k > 0) {
    RMat T = orbit_tangent_matrix(m, q);
    Eigen::JacobiSVD<RMat> sb(T, Eigen::ComputeThinU);
    double bmax = sb.singularValues()(0);
    res.orbit_dim = bmax > 1e-12 ? numerical_rank(sb, bmax) : 0;
    B = sb.matrixU().leftCols(res.orbit_dim);
  }
  if (res.kernel_dim != res.orbit_dim) return res;
  if (res.kernel_dim == 0) {
    res.ok = true;
    return res;
  }
  // Largest principal angle: sin = norm of the component of B outside span K.
  RMat resid = B - K * (K.transpose() * B);
  Eigen::JacobiSVD<RMat> sr(resid);
  res.ok = sr.singularValues()(0) < 1e-6;
  return res;
}

ExtendedHessian assemble_extended_hessian(const LGModel& m, const CVec& q) {
  const int n = m.n, k = m.k, N = 2 * k + 2 * n;
  RMat A(k, 2 * n), Bm(k, 2 * n);
  for (int a = 0; a < k; ++a) {
    RVec e = RVec::Zero(k);
    e(a) = 1.0;
    CVec g = grad_mu_pair(m, q, e);
    A.row(a) = to_real(g).transpose();
    Bm.row(a) = to_real(cd(0, 1) * g).transpose();
  }
  ExtendedHessian eh;
  eh.matrix = RMat::Zero(N, N);
  eh.matrix.block(0, 2 * k, k, 2 * n) = A;
  eh.matrix.block(k, 2 * k, k, 2 * n) = Bm;
  eh.matrix.block(2 * k, 0, 2 * n, k) = A.transpose();
  eh.matrix.block(2 * k, k, 2 * n, k) = Bm.transpose();
  eh.matrix.block(2 * k, 2 * k, 2 * n, 2 * n) = hess_L_real(m, q);
  eh.sigma = RMat::Zero(N, N);
  eh.sigma.block(0, k, k, k) = RMat::Identity(k, k);
  eh.sigma.block(k, 0, k, k) = -RMat::Identity(k, k);
  eh.sigma.block(2 * k, 2 * k, 2 * n, 2 * n) = j_matrix(n);
  eh.symmetry_residual = (eh.matrix - eh.matrix.transpose()).cwiseAbs().maxCoeff();
  eh.sigma_square_residual = (eh.sigma * eh.sigma + RMat::Identity(N, N)).cwiseAbs().maxCoeff();
  eh.anticommutator_residual = (eh.sigma * eh.matrix + eh.matrix * eh.sigma).cwiseAbs().maxCoeff();
  return eh;
}

SpectralReport spectral_gap(const LGModel& m, const CVec& q) {
  SpectralReport rep;
  auto eh = assemble_extended_hessian(m, q);
  Eigen::SelfAdjointEigenSolver<RMat> es(eh.matrix);
  RVec ev = es.eigenvalues();
  rep.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  rep.lambda1 = ev.cwiseAbs().minCoeff();
  for (size_t i = 0; i < rep.eigenvalues.size(); ++i)
    rep.pairing_error =
        std::max(rep.pairing_error, std::abs(rep.eigenvalues[i] + rep.eigenvalues[rep.eigenvalues.size() - 1 - i]));
  if (m.k > 0) {
    RMat G(2 * m.n, m.k);
    for (int a = 0; a < m.k; ++a) {
      RVec e = RVec::Zero(m.k);
      e(a) = 1.0;
      G.col(a) = to_real(grad_mu_pair(m, q, e));
    }
    Eigen::JacobiSVD<RMat> sg(G);
    double z1 = sg.singularValues()(m.k - 1);
    if (z1 < 1e-8) throw Error(ErrorKind::NotFreeOrbit, "infinitesimal action degenerate at q");
    rep.zeta1 = z1;
  }
  Eigen::JacobiSVD<RMat> sd(d_operator_real(m, q));
  rep.zeta2 = sd.singularValues()(sd.singularValues().size() - 1);
  rep.zeta = rep.zeta1 ? std::min(*rep.zeta1, rep.zeta2) : rep.zeta2;
  return rep;
}

DeltaSlice solve_delta_slice(const LGModel& m, const CVec& q, const RVec& delta) {
  const int k = m.k;
  if (delta.size() != k) throw Error(ErrorKind::ShapeMismatch, "delta size != k");
  DeltaSlice out;
  out.alpha = RVec::Zero(k);
  auto resid = [&](const RVec& al) { return RVec(moment_map(m, real_gauge_act(m, al, q)) - delta); };
  RVec r = resid(out.alpha);
  for (int it = 0; it < 200 && r.norm() >= 1e-13; ++it) {
    CVec z = real_gauge_act(m, out.alpha, q);
    RMat Jm = RMat::Zero(k, k);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        for (int j = 0; j < m.n; ++j) Jm(a, b) += double(m.weights(a, j)) * m.weights(b, j) * std::norm(z(j));
    Eigen::SelfAdjointEigenSolver<RMat> es(Jm);
    if (es.eigenvalues()(0) < 1e-14 * std::max(1.0, es.eigenvalues()(k - 1)))
      throw Error(ErrorKind::Unattainable, "moment map Jacobian degenerate along the orbit");
    RVec step = -Jm.ldlt().solve(r);
    double t = 1.0, r0 = r.norm();
    RVec an, rn;
    for (int ls = 0; ls < 60; ++ls) {
      an = out.alpha + t * step;
      rn = resid(an);
      if (rn.allFinite() && rn.norm() <= (1 - 1e-4 * t) * r0) break;
      t *= 0.5;
    }
    if (!rn.allFinite() || rn.norm() > r0) throw Error(ErrorKind::Unattainable, "line search failed");
    out.alpha = an;
    r = rn;
    out.iterations = it + 1;
    if (out.alpha.cwiseAbs().maxCoeff() > 50) throw Error(ErrorKind::Unattainable, "alpha diverges");
  }
  out.residual = r.norm();
  if (out.residual >= 1e-10) throw Error(ErrorKind::Unattainable, "delta not reached");
  out.point = real_gauge_act(m, out.alpha, q);
  return out;
}

}  // namespace glg
