#include <cmath>
#include <random>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "glg/witten_flow.hpp"

namespace glg {

namespace {

using Trip = Eigen::Triplet<double>;

// Interior node numbering, -1 on the boundary.
std::vector<int> interior_index(const Grid2D& g) {
  std::vector<int> id(g.size(), -1);
  int c = 0;
  for (int j = 1; j < g.ns - 1; ++j)
    for (int i = 1; i < g.nt - 1; ++i) id[g.idx(i, j)] = c++;
  return id;
}

// Real 2x2 block of z -> c z (linear) or z -> c conj(z) (antilinear).
void put_block(std::vector<Trip>& tr, int r, int col, cd c, bool anti, double s) {
  if (!anti) {
    tr.emplace_back(r, col, s * c.real());
    tr.emplace_back(r, col + 1, -s * c.imag());
    tr.emplace_back(r + 1, col, s * c.imag());
    tr.emplace_back(r + 1, col + 1, s * c.real());
  } else {
    tr.emplace_back(r, col, s * c.real());
    tr.emplace_back(r, col + 1, s * c.imag());
    tr.emplace_back(r + 1, col, s * c.imag());
    tr.emplace_back(r + 1, col + 1, -s * c.real());
  }
}

// Damped least-squares step: (J^T J + lambda I) dx = -J^T r, by CGLS on J.
RVec cgls(const Eigen::SparseMatrix<double>& J, const RVec& r, double lambda, double tol, int max_iter, int& used) {
  const Eigen::Index n = J.cols();
  RVec x = RVec::Zero(n);
  RVec res = -r;                       // b - J x
  RVec s = J.transpose() * res;        // normal-equation residual
  RVec p = s;
  double gamma = s.squaredNorm(), g0 = gamma;
  used = 0;
  for (; used < max_iter && gamma > tol * tol * g0; ++used) {
    RVec q = J * p;
    double denom = q.squaredNorm() + lambda * p.squaredNorm();
    double a = gamma / denom;
    x += a * p;
    res -= a * q;
    s = J.transpose() * res - lambda * x;
    double gn = s.squaredNorm();
    p = s + (gn / gamma) * p;
    gamma = gn;
  }
  return x;
}

}  // namespace

RVec pack_interior(const LGModel& m, const Grid2D& g, const FieldConfig& c) {
  const int b = 2 * m.n + 2 * m.k;
  RVec x((g.nt - 2) * (g.ns - 2) * b);
  int u = 0;
  for (int j = 1; j < g.ns - 1; ++j)
    for (int i = 1; i < g.nt - 1; ++i) {
      int o = g.idx(i, j);
      for (int l = 0; l < m.n; ++l) {
        x(u++) = c.P(l, o).real();
        x(u++) = c.P(l, o).imag();
      }
      for (int a = 0; a < m.k; ++a) x(u++) = c.at(a, o);
      for (int a = 0; a < m.k; ++a) x(u++) = c.as(a, o);
    }
  return x;
}

void unpack_interior(const LGModel& m, const Grid2D& g, const RVec& x, FieldConfig& c) {
  int u = 0;
  for (int j = 1; j < g.ns - 1; ++j)
    for (int i = 1; i < g.nt - 1; ++i) {
      int o = g.idx(i, j);
      for (int l = 0; l < m.n; ++l) {
        c.P(l, o) = cd(x(u), x(u + 1));
        u += 2;
      }
      for (int a = 0; a < m.k; ++a) c.at(a, o) = x(u++);
      for (int a = 0; a < m.k; ++a) c.as(a, o) = x(u++);
    }
}

WittenSystem witten_system(const LGModel& m, const Grid2D& g, const FieldConfig& c, GaugeFix gf, bool jacobian) {
  check_shapes(m, g, c);
  const int n = m.n, k = m.k, b = 2 * n + 2 * k;
  const int rows_per = 2 * n + k + (gf == GaugeFix::none ? 0 : k);
  const auto id = interior_index(g);
  const int NI = (g.nt - 2) * (g.ns - 2);
  const double h = g.h, c2 = 1.0 / (2 * h);
  const RMat w = m.weights.cast<double>();
  const cd I(0, 1);
  WittenSystem sys;
  sys.r.resize((Eigen::Index)NI * rows_per);
  std::vector<Trip> tr;
  if (jacobian) tr.reserve((size_t)NI * rows_per * (4 * 2 + 2 * n + 2 * k + 4));
  double eq2 = 0, ga2 = 0;
  // Column of variable `off` at node o, or -1 if the node is fixed.
  auto col = [&](int o, int off) { return id[o] < 0 ? -1 : id[o] * b + off; };
  for (int j = 1; j < g.ns - 1; ++j)
    for (int i = 1; i < g.nt - 1; ++i) {
      const int o = g.idx(i, j), E = g.idx(i + 1, j), W = g.idx(i - 1, j), N = g.idx(i, j + 1), S = g.idx(i, j - 1);
      const int r0 = id[o] * rows_per;
      const CVec P = c.P.col(o);
      const RVec ct = w.transpose() * c.at.col(o), cs = w.transpose() * c.as.col(o);
      CVec gh = grad_H(m, P);
      CMat hw = m.W.hessian(P);
      for (int l = 0; l < n; ++l) {
        cd v = (c.P(l, E) - c.P(l, W)) * c2 + I * (c.P(l, N) - c.P(l, S)) * c2 + (I * ct(l) - cs(l)) * P(l) + gh(l);
        sys.r(r0 + 2 * l) = h * v.real();
        sys.r(r0 + 2 * l + 1) = h * v.imag();
        eq2 += h * h * std::norm(v);
        if (!jacobian) continue;
        const int rr = r0 + 2 * l;
        const std::pair<int, cd> nb[4] = {{E, c2}, {W, -c2}, {N, I * c2}, {S, -I * c2}};
        for (auto& [node, coef] : nb)
          if (int cc = col(node, 2 * l); cc >= 0) put_block(tr, rr, cc, coef, false, h);
        put_block(tr, rr, col(o, 2 * l), I * ct(l) - cs(l), false, h);
        for (int p = 0; p < n; ++p)
          if (hw(l, p) != 0.0) put_block(tr, rr, col(o, 2 * p), I * std::conj(hw(l, p)), true, h);
        for (int a = 0; a < k; ++a) {
          if (w(a, l) == 0.0) continue;
          cd dt = I * w(a, l) * P(l), ds = -w(a, l) * P(l);
          tr.emplace_back(rr, col(o, 2 * n + a), h * dt.real());
          tr.emplace_back(rr + 1, col(o, 2 * n + a), h * dt.imag());
          tr.emplace_back(rr, col(o, 2 * n + k + a), h * ds.real());
          tr.emplace_back(rr + 1, col(o, 2 * n + k + a), h * ds.imag());
        }
      }
      RVec mu = moment_map(m, P);
      for (int a = 0; a < k; ++a) {
        const int rr = r0 + 2 * n + a;
        double v = (c.at(a, N) - c.at(a, S)) * c2 - (c.as(a, E) - c.as(a, W)) * c2 + mu(a) - m.delta(a);
        sys.r(rr) = h * v;
        eq2 += h * h * v * v;
        if (!jacobian) continue;
        const int ta = 2 * n + a, sa = 2 * n + k + a;
        if (int cc = col(N, ta); cc >= 0) tr.emplace_back(rr, cc, h * c2);
        if (int cc = col(S, ta); cc >= 0) tr.emplace_back(rr, cc, -h * c2);
        if (int cc = col(E, sa); cc >= 0) tr.emplace_back(rr, cc, -h * c2);
        if (int cc = col(W, sa); cc >= 0) tr.emplace_back(rr, cc, h * c2);
        for (int l = 0; l < n; ++l) {
          if (w(a, l) == 0.0) continue;
          tr.emplace_back(rr, col(o, 2 * l), h * w(a, l) * P(l).real());
          tr.emplace_back(rr, col(o, 2 * l + 1), h * w(a, l) * P(l).imag());
        }
      }
      if (gf == GaugeFix::none) continue;
      for (int a = 0; a < k; ++a) {
        const int rr = r0 + 2 * n + k + a;
        const int ta = 2 * n + a, sa = 2 * n + k + a;
        double v;
        if (gf == GaugeFix::coulomb) {
          v = (c.at(a, E) - c.at(a, W)) * c2 + (c.as(a, N) - c.as(a, S)) * c2;
          if (jacobian) {
            if (int cc = col(E, ta); cc >= 0) tr.emplace_back(rr, cc, h * c2);
            if (int cc = col(W, ta); cc >= 0) tr.emplace_back(rr, cc, -h * c2);
            if (int cc = col(N, sa); cc >= 0) tr.emplace_back(rr, cc, h * c2);
            if (int cc = col(S, sa); cc >= 0) tr.emplace_back(rr, cc, -h * c2);
          }
          // Central differences do not see a checkerboard gauge rotation of P.
          // <xi~_a(P), Y> with Y = (h^2/8)(compact - wide Laplacian) P is O(1)
          // on that mode and O(h^4) on smooth fields.
          if (i >= 2 && j >= 2 && i <= g.nt - 3 && j <= g.ns - 3) {
            const int far[4] = {g.idx(i + 2, j), g.idx(i - 2, j), g.idx(i, j + 2), g.idx(i, j - 2)};
            const int near[4] = {E, W, N, S};
            for (int l = 0; l < n; ++l) {
              if (w(a, l) == 0.0) continue;
              cd Y = -0.375 * P(l);
              for (int q = 0; q < 4; ++q) Y += 0.125 * c.P(l, near[q]) - 0.03125 * c.P(l, far[q]);
              v += w(a, l) * (std::conj(P(l)) * Y).imag();
              if (!jacobian) continue;
              // d Im(conj(p) y) = (Im y, -Re y).dp + (-Im p, Re p).dy
              auto add = [&](int node, double coef) {
                if (int cc = col(node, 2 * l); cc >= 0) {
                  tr.emplace_back(rr, cc, h * w(a, l) * coef * -P(l).imag());
                  tr.emplace_back(rr, cc + 1, h * w(a, l) * coef * P(l).real());
                }
              };
              tr.emplace_back(rr, col(o, 2 * l), h * w(a, l) * Y.imag());
              tr.emplace_back(rr, col(o, 2 * l + 1), h * w(a, l) * -Y.real());
              add(o, -0.375);
              for (int q = 0; q < 4; ++q) {
                add(near[q], 0.125);
                add(far[q], -0.03125);
              }
            }
          }
        } else {
          v = c.at(a, o);
          if (jacobian) tr.emplace_back(rr, col(o, ta), h);
        }
        sys.r(rr) = h * v;
        ga2 += h * h * v * v;
      }
    }
  sys.equation_l2 = std::sqrt(eq2);
  sys.gauge_l2 = std::sqrt(ga2);
  if (jacobian) {
    sys.J.resize(sys.r.size(), (Eigen::Index)NI * b);
    sys.J.setFromTriplets(tr.begin(), tr.end());
  }
  return sys;
}

SolveResult solve_witten(const LGModel& m, const Grid2D& g, const FieldConfig& boundary, const FieldConfig& init,
                         const SolveOptions& opts) {
  if (!(opts.tol > 0)) throw Error(ErrorKind::ConfigError, "tol must be positive");
  check_shapes(m, g, boundary);
  check_shapes(m, g, init);
  if (!boundary.P.allFinite() || !boundary.at.allFinite() || !boundary.as.allFinite())
    throw Error(ErrorKind::ConfigError, "boundary data not finite");
  FieldConfig c = boundary;
  unpack_interior(m, g, pack_interior(m, g, init), c);

  const bool direct = opts.linear == LinearSolver::direct ||
                      (opts.linear == LinearSolver::automatic && g.nt <= 257 && g.ns <= 257);
  SolveResult res;
  res.report.name = "solve_witten";
  res.report.inputs = {{"model_hash", model_hash(m)}, {"grid", g.to_json()},
                       {"method", opts.method == SolveMethod::newton ? "newton" : "descent"},
                       {"gauge_fix", opts.gauge_fix == GaugeFix::coulomb    ? "coulomb"
                                     : opts.gauge_fix == GaugeFix::temporal ? "temporal"
                                                                            : "none"},
                       {"linear_solver", direct ? "direct" : "iterative"},
                       {"tol", opts.tol}};
  auto sys = witten_system(m, g, c, opts.gauge_fix, false);
  double f = sys.r.squaredNorm();
  RVec x = pack_interior(m, g, c);
  double lambda = opts.damping, step = 1.0;
  int it = 0, linear_iters = 0;
  res.report.log.push_back(sys.equation_l2);
  for (; it < opts.max_iter && !(sys.equation_l2 < opts.tol && sys.gauge_l2 < opts.tol); ++it) {
    auto full = witten_system(m, g, c, opts.gauge_fix, true);
    RVec grad = full.J.transpose() * full.r;
    // Search direction for a given damping; empty on factorization failure.
    auto direction = [&](double lam) -> RVec {
      if (opts.method == SolveMethod::descent) return -grad;
      if (!direct) {
        int used = 0;
        RVec d = cgls(full.J, full.r, lam, opts.cg_tol, opts.cg_max_iter, used);
        linear_iters += used;
        return d;
      }
      if (lam == 0 && full.J.rows() == full.J.cols()) {
        // Square undamped system: factor J itself, cheaper than J^T J.
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(full.J);
        if (lu.info() != Eigen::Success) return RVec();
        return lu.solve(-full.r);
      }
      Eigen::SparseMatrix<double> A = full.J.transpose() * full.J;
      if (lam > 0) {
        Eigen::SparseMatrix<double> Id(A.rows(), A.cols());
        Id.setIdentity();
        A += lam * Id;
      }
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
      if (ldlt.info() != Eigen::Success) return RVec();
      return ldlt.solve(-grad);
    };
    // Backtracking along d; descent uses an Armijo condition.
    auto search = [&](const RVec& d, double t0) {
      const double slope = grad.dot(d);
      for (double t = t0; t > 1e-12; t *= 0.5) {
        FieldConfig trial = c;
        unpack_interior(m, g, x + t * d, trial);
        auto ts = witten_system(m, g, trial, opts.gauge_fix, false);
        double ft = ts.r.squaredNorm();
        bool ok = std::isfinite(ft) && (opts.method == SolveMethod::descent ? ft <= f + 1e-4 * t * slope : ft < f);
        if (ok) {
          x += t * d;
          c = std::move(trial);
          sys = std::move(ts);
          f = ft;
          return t;
        }
      }
      return 0.0;
    };
    bool accepted = false;
    RVec d = direction(lambda);
    if (d.size()) {
      double t = search(d, opts.method == SolveMethod::descent ? step : 1.0);
      accepted = t > 0;
      if (opts.method == SolveMethod::descent) step = accepted ? 2 * t : step;
    }
    if (!accepted && opts.method == SolveMethod::newton) {
      // One damped retry before giving up.
      lambda = lambda > 0 ? 10 * lambda : 1e-8 * (1 + grad.norm());
      d = direction(lambda);
      accepted = d.size() && search(d, 1.0) > 0;
    } else if (accepted && opts.method == SolveMethod::newton) {
      lambda = lambda > 1e-12 ? lambda / 10 : 0.0;
    }
    res.report.log.push_back(sys.equation_l2);
    if (!accepted) break;
  }
  res.cfg = std::move(c);
  res.iterations = it;
  res.residual = sys.equation_l2;
  res.gauge_residual = sys.gauge_l2;
  res.converged = sys.equation_l2 < opts.tol && sys.gauge_l2 < opts.tol;
  res.report.set("iterations", it);
  res.report.set("residual_l2", res.residual);
  res.report.set("gauge_residual_l2", res.gauge_residual);
  if (opts.method == SolveMethod::newton) {
    res.report.set("linear_solver", direct ? "direct" : "iterative");
    if (!direct) res.report.set("linear_iterations", linear_iters);
  }
  res.report.flag("converged", res.converged);
  if (!res.converged) res.report.notes.push_back("NonConvergence: returning best iterate");
  return res;
}

RMat scalar_reduction_residual(const LGModel& m, const CVec& q, const Grid2D& g, const std::vector<char>& mask,
                               const RMat& alpha) {
  RMat r = RMat::Zero(m.k, g.size());
  const RVec mu_q = moment_map(m, q);
  const double ih2 = 1.0 / (g.h * g.h);
  for (int j = 1; j < g.ns - 1; ++j)
    for (int i = 1; i < g.nt - 1; ++i) {
      int o = g.idx(i, j);
      if (!mask[o]) continue;
      RVec lap = ih2 * (4.0 * alpha.col(o) - alpha.col(g.idx(i + 1, j)) - alpha.col(g.idx(i - 1, j)) -
                        alpha.col(g.idx(i, j + 1)) - alpha.col(g.idx(i, j - 1)));
      r.col(o) = lap + moment_map(m, real_gauge_act(m, alpha.col(o), q)) - mu_q;
    }
  return r;
}

ScalarSolve solve_scalar_reduction(const LGModel& m, const CVec& q, const Grid2D& g, const std::vector<char>& mask,
                                   const RMat& alpha0, double tol, int max_iter) {
  if ((int)mask.size() != g.size() || alpha0.rows() != m.k || alpha0.cols() != g.size())
    throw Error(ErrorKind::ShapeMismatch, "scalar reduction shapes");
  for (int j = 0; j < g.ns; ++j)
    for (int i = 0; i < g.nt; ++i)
      if (mask[g.idx(i, j)] && g.on_boundary(i, j))
        throw Error(ErrorKind::ShapeMismatch, "mask includes a grid-edge node");
  const int k = m.k;
  std::vector<int> id(g.size(), -1);
  int NI = 0;
  for (int o = 0; o < g.size(); ++o)
    if (mask[o]) id[o] = NI++;
  const RMat w = m.weights.cast<double>();
  RVec q2 = q.cwiseAbs2();
  const double ih2 = 1.0 / (g.h * g.h);
  ScalarSolve out;
  out.alpha = alpha0;
  RMat r = scalar_reduction_residual(m, q, g, mask, out.alpha);
  auto maxn = [](const RMat& x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; };
  double rn = maxn(r);
  out.log.push_back(rn);
  int it = 0;
  for (; it < max_iter && rn >= tol; ++it) {
    std::vector<Trip> tr;
    tr.reserve((size_t)NI * (5 * k + k * k));
    RVec b(NI * k);
    for (int j = 1; j < g.ns - 1; ++j)
      for (int i = 1; i < g.nt - 1; ++i) {
        int o = g.idx(i, j);
        if (id[o] < 0) continue;
        int r0 = id[o] * k;
        for (int a = 0; a < k; ++a) {
          b(r0 + a) = -r(a, o);
          tr.emplace_back(r0 + a, r0 + a, 4 * ih2);
          for (int nb : {g.idx(i + 1, j), g.idx(i - 1, j), g.idx(i, j + 1), g.idx(i, j - 1)})
            if (id[nb] >= 0) tr.emplace_back(r0 + a, id[nb] * k + a, -ih2);
        }
        RVec e = (2.0 * (w.transpose() * out.alpha.col(o))).array().exp();
        for (int a = 0; a < k; ++a)
          for (int c = 0; c < k; ++c) {
            double d = 0;
            for (int l = 0; l < m.n; ++l) d += w(a, l) * w(c, l) * q2(l) * e(l);
            tr.emplace_back(r0 + a, r0 + c, d);
          }
      }
    Eigen::SparseMatrix<double> A(NI * k, NI * k);
    A.setFromTriplets(tr.begin(), tr.end());
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(A);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::NonConvergence, "scalar reduction Jacobian not SPD");
    RVec d = llt.solve(b);
    double t = 1.0, r0n = r.norm();
    RMat trial;
    RMat rt;
    bool ok = false;
    for (int ls = 0; ls < 40; ++ls) {
      trial = out.alpha;
      for (int o = 0; o < g.size(); ++o)
        if (id[o] >= 0) trial.col(o) += t * d.segment(id[o] * k, k);
      rt = scalar_reduction_residual(m, q, g, mask, trial);
      if (rt.allFinite() && rt.norm() < (1 - 1e-4 * t) * r0n) {
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) break;
    out.alpha = std::move(trial);
    r = std::move(rt);
    rn = maxn(r);
    out.log.push_back(rn);
  }
  out.iterations = it;
  out.residual = rn;
  out.converged = rn < tol;
  return out;
}

std::vector<RMat> random_inits(int k, const Grid2D& g, int count, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::vector<RMat> out;
  for (int c = 0; c < count; ++c) {
    RMat a(k, g.size());
    for (int o = 0; o < g.size(); ++o)
      for (int r = 0; r < k; ++r) {
        double u = (double)(rng() >> 11) * 0x1.0p-53;  // [0, 1)
        a(r, o) = amplitude * (2 * u - 1);
      }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace glg
