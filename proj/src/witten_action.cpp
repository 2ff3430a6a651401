#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "glg/witten_flow.hpp"

namespace glg {

namespace {

void check_path(const LGModel& m, const Path1D& p) {
  const auto N = p.s.size();
  if (N < 5 || N % 2 == 0) throw Error(ErrorKind::ShapeMismatch, "path needs an odd node count >= 5");
  if (p.p.rows() != m.n || p.p.cols() != N || p.a_s.rows() != m.k || p.a_s.cols() != N)
    throw Error(ErrorKind::ShapeMismatch, "path arrays do not match the model");
  const double h = p.s(1) - p.s(0);
  for (Eigen::Index i = 1; i < N; ++i)
    if (std::abs(p.s(i) - p.s(i - 1) - h) > 1e-9 * h) throw Error(ErrorKind::ShapeMismatch, "path grid not uniform");
}

// Fourth-order first derivative along the columns.
CMat d4(const CMat& X, double h) {
  const Eigen::Index N = X.cols();
  CMat D(X.rows(), N);
  const double c = 1.0 / (12 * h);
  D.col(0) = c * (-25.0 * X.col(0) + 48.0 * X.col(1) - 36.0 * X.col(2) + 16.0 * X.col(3) - 3.0 * X.col(4));
  D.col(1) = c * (-3.0 * X.col(0) - 10.0 * X.col(1) + 18.0 * X.col(2) - 6.0 * X.col(3) + X.col(4));
  for (Eigen::Index i = 2; i < N - 2; ++i)
    D.col(i) = c * (-X.col(i + 2) + 8.0 * X.col(i + 1) - 8.0 * X.col(i - 1) + X.col(i - 2));
  D.col(N - 2) = -c * (-3.0 * X.col(N - 1) - 10.0 * X.col(N - 2) + 18.0 * X.col(N - 3) - 6.0 * X.col(N - 4) +
                       X.col(N - 5));
  D.col(N - 1) = -c * (-25.0 * X.col(N - 1) + 48.0 * X.col(N - 2) - 36.0 * X.col(N - 3) + 16.0 * X.col(N - 4) -
                       3.0 * X.col(N - 5));
  return D;
}

double simpson(const RVec& f, double h) {
  const Eigen::Index N = f.size();
  double s = f(0) + f(N - 1);
  for (Eigen::Index i = 1; i < N - 1; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i);
  return s * h / 3;
}

void check_endpoint(const LGModel& m, const Path1D& p, const RVec& delta) {
  CVec e = p.p.col(p.p.cols() - 1);
  double d = grad_L(m, e).norm() + (m.k ? (moment_map(m, e) - delta).norm() : 0.0);
  if (d > 1e-6) throw Error(ErrorKind::EndpointNotDecayed, "path endpoint off the critical delta slice");
}

}  // namespace

double bump(double s, double a, double b) {
  if (s <= a || s >= b) return 0.0;
  double x = (s - a) / (b - a);
  return std::exp(-1.0 / (x * (1 - x)) + 4.0);
}

double bump_derivative(double s, double a, double b) {
  if (s <= a || s >= b) return 0.0;
  double L = b - a, x = (s - a) / L;
  double q = x * (1 - x);
  return bump(s, a, b) * (1 - 2 * x) / (q * q) / L;
}

double action_functional(const LGModel& m, const Path1D& path, const RVec& delta) {
  check_path(m, path);
  check_endpoint(m, path, delta);
  const Eigen::Index N = path.s.size();
  const double h = path.s(1) - path.s(0);
  CMat dp = d4(path.p, h);
  RVec f(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    CVec p = path.p.col(i);
    // p^* theta with theta = (1/2) sum (x dy - y dx).
    double theta = 0.5 * (p.conjugate().cwiseProduct(dp.col(i))).sum().imag();
    double pair = m.k ? path.a_s.col(i).dot(delta - moment_map(m, p)) : 0.0;
    f(i) = -theta + eval_H(m, p) + pair;
  }
  return simpson(f, h);
}

ActionGradient action_gradient(const LGModel& m, const Path1D& path, const RVec& delta) {
  check_path(m, path);
  const Eigen::Index N = path.s.size();
  const double h = path.s(1) - path.s(0);
  CMat dp = d4(path.p, h);
  const cd I(0, 1);
  ActionGradient g;
  g.gp.resize(m.n, N);
  g.ga.resize(m.k, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    CVec p = path.p.col(i);
    CVec cov = dp.col(i) + infinitesimal_action(m, p, path.a_s.col(i));
    g.gp.col(i) = I * cov + grad_H(m, p);
    if (m.k) g.ga.col(i) = delta - moment_map(m, p);
  }
  return g;
}

double action_pairing(const Path1D& path, const ActionGradient& g, const CMat& dp, const RMat& da) {
  const Eigen::Index N = path.s.size();
  RVec f(N);
  for (Eigen::Index i = 0; i < N; ++i)
    f(i) = rdot(g.gp.col(i), dp.col(i)) + (da.rows() ? g.ga.col(i).dot(da.col(i)) : 0.0);
  return simpson(f, path.s(1) - path.s(0));
}

ExperimentReport action_gradient_check(const LGModel& m, const Path1D& path, const RVec& delta, std::uint64_t seed,
                                       int directions) {
  check_path(m, path);
  check_endpoint(m, path, delta);
  ExperimentReport rep;
  rep.name = "action_check";
  rep.inputs = {{"model_hash", model_hash(m)}, {"nodes", (int)path.s.size()},
                {"s_range", {path.s(0), path.s(path.s.size() - 1)}}, {"seed", seed}, {"directions", directions}};
  std::mt19937_64 rng(seed);
  auto uni = [&] { return (double)(rng() >> 11) * 0x1.0p-53 * 2 - 1; };
  const Eigen::Index N = path.s.size();
  const double s0 = path.s(0), s1 = path.s(N - 1), L = s1 - s0;
  auto grad = action_gradient(m, path, delta);
  rep.set("action", action_functional(m, path, delta));
  double worst = 0;
  ojson rows = ojson::array();
  for (int d = 0; d < directions; ++d) {
    // Direction: random coefficients times bumps vanishing near both ends.
    CVec cp(m.n);
    for (int l = 0; l < m.n; ++l) cp(l) = cd(uni(), uni());
    RVec ca(m.k);
    for (int a = 0; a < m.k; ++a) ca(a) = uni();
    double a0 = s0 + 0.1 * L + 0.1 * L * (uni() + 1) / 2, b0 = s1 - 0.1 * L - 0.1 * L * (uni() + 1) / 2;
    CMat dp(m.n, N);
    RMat da(m.k, N);
    for (Eigen::Index i = 0; i < N; ++i) {
      double b = bump(path.s(i), a0, b0);
      dp.col(i) = b * cp;
      da.col(i) = b * ca;
    }
    double an = action_pairing(path, grad, dp, da);
    const double eps = 1e-5;
    Path1D pp = path, pm = path;
    pp.p += eps * dp;
    pp.a_s += eps * da;
    pm.p -= eps * dp;
    pm.a_s -= eps * da;
    double fd = (action_functional(m, pp, delta) - action_functional(m, pm, delta)) / (2 * eps);
    double scale = std::max(std::abs(an), 1e-8);
    double rel = std::abs(fd - an) / scale;
    worst = std::max(worst, rel);
    rows.push_back({{"analytic", an}, {"finite_difference", fd}, {"relative_error", rel}});
  }
  rep.set("directions_detail", rows);
  rep.set("gradient_relative_error", worst);
  rep.set("gradient_max_abs", std::max(grad.gp.cwiseAbs().maxCoeff(), grad.ga.size() ? grad.ga.cwiseAbs().maxCoeff() : 0.0));
  rep.flag("gradient_matches_fd", worst < 1e-5);

  // Gauge invariance under u = exp(theta), theta compactly supported inside.
  if (m.k > 0) {
    RVec amp(m.k);
    for (int a = 0; a < m.k; ++a) amp(a) = 2 * uni();
    double a0 = s0 + 0.15 * L, b0 = s1 - 0.15 * L;
    Path1D gp = path;
    for (Eigen::Index i = 0; i < N; ++i) {
      RVec th = amp * bump(path.s(i), a0, b0);
      gp.p.col(i) = gauge_act(m, th, path.p.col(i));
      gp.a_s.col(i) -= amp * bump_derivative(path.s(i), a0, b0);
    }
    double diff = std::abs(action_functional(m, gp, delta) - action_functional(m, path, delta));
    rep.set("gauge_difference", diff);
    rep.flag("gauge_invariant", diff < 1e-8);
  }
  return rep;
}

Flowline gradient_flowline(const LGModel& m, const CVec& p0, double s_max, double dt) {
  if (!(dt > 0) || !(s_max >= 0)) throw Error(ErrorKind::OutOfRange, "dt and s_max must be positive");
  Eigen::SelfAdjointEigenSolver<RMat> es(hess_L_real(m, p0), Eigen::EigenvaluesOnly);
  double hn = es.eigenvalues().cwiseAbs().maxCoeff();
  if (dt * hn >= 0.1) throw Error(ErrorKind::StepTooLarge, "dt * |Hess L| >= 0.1");
  const int steps = (int)std::lround(s_max / dt);
  Flowline fl;
  fl.report.name = "flowline";
  fl.report.inputs = {{"model_hash", model_hash(m)}, {"s_max", s_max}, {"dt", dt}, {"steps", steps}};
  auto f = [&](const CVec& p) -> CVec { return -grad_L(m, p); };
  CVec p = p0;
  const double H0 = eval_H(m, p0);
  double Lprev = eval_L(m, p0), dH = 0, worst_inc = 0;
  int violations = 0;
  fl.s.push_back(0.0);
  fl.p.push_back(p);
  for (int k = 1; k <= steps; ++k) {
    CVec k1 = f(p), k2 = f(p + 0.5 * dt * k1), k3 = f(p + 0.5 * dt * k2), k4 = f(p + dt * k3);
    p += dt / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!p.allFinite()) throw Error(ErrorKind::NonConvergence, "flowline left every bounded set");
    double L = eval_L(m, p);
    dH = std::max(dH, std::abs(eval_H(m, p) - H0));
    if (L > Lprev + 1e-10) ++violations;
    worst_inc = std::max(worst_inc, L - Lprev);
    Lprev = L;
    fl.s.push_back(k * dt);
    fl.p.push_back(p);
  }
  fl.report.set("max_abs_dH", dH);
  fl.report.set("L_start", eval_L(m, p0));
  fl.report.set("L_end", Lprev);
  fl.report.set("max_L_increase", worst_inc);
  fl.report.set("L_violations", violations);
  fl.report.set("final_grad_norm", grad_L(m, p).norm());
  fl.report.flag("H_conserved", dH < 1e-8);
  fl.report.flag("L_nonincreasing", violations == 0);
  return fl;
}

}  // namespace glg
