#include <cmath>
#include <limits>

#include "glg/witten_flow.hpp"

namespace glg {

namespace {

// Interior L2 over nodes at distance >= margin from every edge.
double interior_l2(const Grid2D& g, const RVec& dens2, double margin) {
  double s = 0;
  const double e = 1e-9 * g.h;
  for (int j = 0; j < g.ns; ++j)
    for (int i = 0; i < g.nt; ++i) {
      double t = g.t(i), ss = g.s(j);
      if (t < g.t0 + margin - e || t > g.t1 - margin + e || ss < g.s0 + margin - e || ss > g.s1 - margin + e)
        continue;
      s += g.h * g.h * dens2(g.idx(i, j));
    }
  return std::sqrt(s);
}

RVec colsq(const CMat& X) { return X.colwise().squaredNorm().transpose(); }
RVec colsq(const RMat& X) { return X.colwise().squaredNorm().transpose(); }

// Positive Laplacian by composed central differences.
RVec lap(const Grid2D& g, const RVec& f) {
  RMat F = f.transpose();
  RMat r = -(diff_t(g, diff_t(g, F)) + diff_s(g, diff_s(g, F)));
  return r.transpose();
}

// <Hess mu(X), Y (x) F> = sum_a F_a Re sum_j w_aj conj(X_j) Y_j, nodewise.
RVec hmu(const LGModel& m, const CMat& X, const CMat& Y, const RMat& F) {
  RVec r = RVec::Zero(X.cols());
  for (Eigen::Index o = 0; o < X.cols(); ++o)
    for (int a = 0; a < m.k; ++a) {
      double s = 0;
      for (int j = 0; j < m.n; ++j) s += m.weights(a, j) * (std::conj(X(j, o)) * Y(j, o)).real();
      r(o) += F(a, o) * s;
    }
  return r;
}

RVec dsq(const LGModel& m, const CMat& P, const CMat& V) {
  RVec r(P.cols());
  for (Eigen::Index o = 0; o < P.cols(); ++o) {
    auto d = d_operator(m, P.col(o), V.col(o));
    r(o) = d.hessH.squaredNorm() + d.pair.squaredNorm() + d.pairJ.squaredNorm();
  }
  return r;
}

RVec dhess_term(const LGModel& m, const CMat& P, const CMat& V) {
  RVec r(P.cols());
  for (Eigen::Index o = 0; o < P.cols(); ++o) {
    CVec p = P.col(o), v = V.col(o);
    r(o) = rdot(dhess_H_apply(m, p, v, grad_H(m, p)), v);
  }
  return r;
}

double interior_equation_residual(const LGModel& m, const Grid2D& g, const FieldConfig& c, double margin) {
  auto res = residual(m, g, c);
  RVec d = colsq(res.moment) + colsq(res.holo);
  return interior_l2(g, d, margin);
}

struct OrderRow {
  std::vector<double> values;
  double order = 0;
  bool identically = false;
  bool pass = false;
};

OrderRow orders(const std::vector<Grid2D>& grids, const std::vector<double>& v, const IdentityOptions& o) {
  OrderRow r;
  r.values = v;
  bool all_small = true;
  for (double x : v) all_small = all_small && x < o.floor;
  if (all_small) {
    r.identically = true;
    r.order = std::numeric_limits<double>::infinity();
    r.pass = true;
    return r;
  }
  r.order = std::numeric_limits<double>::infinity();
  for (size_t l = 1; l < v.size(); ++l) {
    double ord = std::log(v[l - 1] / v[l]) / std::log(grids[l - 1].h / grids[l].h);
    if (v[l] < o.floor && v[l - 1] >= o.floor) ord = std::numeric_limits<double>::infinity();
    r.order = std::min(r.order, ord);
  }
  r.pass = r.order >= o.min_order;
  return r;
}

void check_levels(const std::vector<IdentityLevel>& levels) {
  if (levels.size() < 2) throw Error(ErrorKind::ConfigError, "refinement study needs at least two levels");
  for (size_t l = 1; l < levels.size(); ++l)
    if (!(levels[l].grid.h < levels[l - 1].grid.h)) throw Error(ErrorKind::ConfigError, "levels must refine h");
}

}  // namespace

BochnerResiduals bochner_residuals(const LGModel& m, const Grid2D& g, const FieldConfig& c, double margin) {
  auto d = covariant_derivatives(m, g, c);
  const CMat &T = d.T, &S = d.S;
  const RMat& F = d.F;
  auto cvd = [&](const CMat& V, Direction dir) { return covariant_vector_derivative(m, g, c, V, dir); };
  CMat Tt = cvd(T, Direction::t), Ts = cvd(T, Direction::s);
  CMat St = cvd(S, Direction::t), Ss = cvd(S, Direction::s);
  RMat Ft = diff_t(g, F), Fs = diff_s(g, F);
  const cd I(0, 1);
  RVec T2 = colsq(T), S2 = colsq(S), F2 = colsq(F);
  RVec LT = lap(g, T2), LS = lap(g, S2), LF = lap(g, F2);
  RVec DT = dsq(m, c.P, T), DS = dsq(m, c.P, S);
  RVec HT = dhess_term(m, c.P, T), HS = dhess_term(m, c.P, S);
  RVec muF(g.size());
  for (int o = 0; o < g.size(); ++o) {
    CVec s = CVec::Zero(m.n);
    for (int a = 0; a < m.k; ++a) s += grad_mu_pair(m, c.P.col(o), RVec::Unit(m.k, a) * F(a, o));
    muF(o) = s.squaredNorm();
  }
  RVec JS_T = hmu(m, I * S, T, F), T_T = hmu(m, T, T, F), S_S = hmu(m, S, S, F), JT_S = hmu(m, I * T, S, F);

  // Each identity written as (-1/2 Lap |X|^2) - rhs, Lap positive.
  RVec r1 = -0.5 * LT - (colsq(Ts) + colsq(Tt) + DT + HT + 2 * JS_T - T_T);
  RVec r2 = -0.5 * LS - (colsq(St) + colsq(Ss) + DS + HS - 2 * JT_S - S_S);
  RVec r3 = -0.5 * LF - (colsq(Ft) + colsq(Fs) + muF + 2 * JS_T);
  RVec lhs8 = 0.5 * (LT + LS + LF);
  RVec r8 = lhs8 + colsq(Tt) + colsq(Ts) + colsq(St) + colsq(Ss) + colsq(Ft) + colsq(Fs) + DT + DS + muF + HT +
            HS + 6 * JS_T - T_T - S_S;
  BochnerResiduals out;
  out.b8 = interior_l2(g, r8.cwiseAbs2(), margin);
  out.b7_1 = interior_l2(g, r1.cwiseAbs2(), margin);
  out.b7_2 = interior_l2(g, r2.cwiseAbs2(), margin);
  out.b7_3 = interior_l2(g, r3.cwiseAbs2(), margin);
  out.scale = interior_l2(g, lhs8.cwiseAbs2(), margin);
  out.input_residual = interior_equation_residual(m, g, c, margin);
  return out;
}

ExperimentReport bochner_verify(const LGModel& m, const std::vector<IdentityLevel>& levels,
                                const IdentityOptions& o) {
  check_levels(levels);
  ExperimentReport rep;
  rep.name = "bochner";
  ojson grids = ojson::array();
  for (auto& l : levels) grids.push_back(ojson::parse(l.grid.to_json().dump()));
  rep.inputs = {{"model_hash", model_hash(m)}, {"grids", grids}, {"margin", o.margin}};
  std::vector<Grid2D> gs;
  std::vector<double> b8, b1, b2, b3, inp, sc;
  for (auto& l : levels) {
    auto r = bochner_residuals(m, l.grid, l.cfg, o.margin);
    if (o.require_solution && r.input_residual > o.solution_tol)
      throw Error(ErrorKind::InputNotSolution,
                  "interior equation residual " + std::to_string(r.input_residual) + " exceeds tolerance");
    gs.push_back(l.grid);
    b8.push_back(r.b8);
    b1.push_back(r.b7_1);
    b2.push_back(r.b7_2);
    b3.push_back(r.b7_3);
    inp.push_back(r.input_residual);
    sc.push_back(r.scale);
  }
  rep.set("input_residual", inp);
  rep.set("laplacian_scale", sc);
  const std::pair<const char*, std::vector<double>*> rows[] = {
      {"laplacian_identity", &b8}, {"identity_T", &b1}, {"identity_S", &b2}, {"identity_F", &b3}};
  for (auto& [name, v] : rows) {
    auto r = orders(gs, *v, o);
    rep.set(std::string(name) + "_residual", r.values);
    rep.set(std::string(name) + "_order", r.order);
    if (r.identically) rep.notes.push_back(std::string(name) + ": identically satisfied at every level");
    rep.flag(std::string(name) + "_order_ok", r.pass);
  }
  return rep;
}

CVec holomorphy_defect(const LGModel& m, const Grid2D& g, const FieldConfig& c) {
  check_shapes(m, g, c);
  CMat Wp(1, g.size());
  RVec gh2(g.size());
  for (int o = 0; o < g.size(); ++o) {
    Wp(0, o) = eval_W(m, c.P.col(o));
    gh2(o) = grad_H(m, c.P.col(o)).squaredNorm();
  }
  const cd I(0, 1);
  CMat d = diff_t(g, Wp) + I * diff_s(g, Wp);
  CVec r(g.size());
  for (int o = 0; o < g.size(); ++o) r(o) = d(0, o) + I * gh2(o);
  return r;
}

double holomorphy_residual(const LGModel& m, const Grid2D& g, const FieldConfig& c, double margin) {
  return interior_l2(g, holomorphy_defect(m, g, c).cwiseAbs2(), margin);
}

ExperimentReport holomorphy_check(const LGModel& m, const std::vector<IdentityLevel>& levels,
                                  const IdentityOptions& o) {
  check_levels(levels);
  ExperimentReport rep;
  rep.name = "holomorphy";
  ojson grids = ojson::array();
  for (auto& l : levels) grids.push_back(ojson::parse(l.grid.to_json().dump()));
  rep.inputs = {{"model_hash", model_hash(m)}, {"grids", grids}, {"margin", o.margin}};
  std::vector<Grid2D> gs;
  std::vector<double> v, inp;
  for (auto& l : levels) {
    double ir = interior_equation_residual(m, l.grid, l.cfg, o.margin);
    if (o.require_solution && ir > o.solution_tol)
      throw Error(ErrorKind::InputNotSolution, "interior equation residual " + std::to_string(ir) +
                                                   " exceeds tolerance");
    gs.push_back(l.grid);
    v.push_back(holomorphy_residual(m, l.grid, l.cfg, o.margin));
    inp.push_back(ir);
  }
  auto r = orders(gs, v, o);
  rep.set("input_residual", inp);
  rep.set("residual", r.values);
  rep.set("order", r.order);
  if (r.identically) rep.notes.push_back("identically satisfied at every level");
  rep.flag("order_ok", r.pass);
  return rep;
}

}  // namespace glg
