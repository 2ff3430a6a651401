#include "glg/grid_field.hpp"

#include <cmath>
#include <fstream>

#include "glg/report.hpp"

namespace glg {

const char* to_string(GridKind k) {
  switch (k) {
    case GridKind::plane: return "plane";
    case GridKind::half_plane: return "half_plane";
    case GridKind::strip: return "strip";
  }
  return "plane";
}

Grid2D Grid2D::make(GridKind kind, double t0, double t1, double s0, double s1, int nt) {
  if (nt < 3) throw Error(ErrorKind::ShapeMismatch, "nt must be >= 3");
  Grid2D g;
  g.kind = kind;
  g.t0 = t0;
  g.t1 = t1;
  g.nt = nt;
  g.h = (t1 - t0) / (nt - 1);
  double ns = (s1 - s0) / g.h;
  g.ns = (int)std::lround(ns) + 1;
  if (std::abs((g.ns - 1) * g.h - (s1 - s0)) > 1e-12 * std::max(1.0, s1 - s0))
    throw Error(ErrorKind::ShapeMismatch, "s-extent is not a multiple of h");
  if (g.ns < 3) throw Error(ErrorKind::ShapeMismatch, "ns must be >= 3");
  g.s0 = s0;
  g.s1 = s1;
  return g;
}

Grid2D Grid2D::square(double R, int nodes) { return make(GridKind::plane, -R, R, -R, R, nodes); }

double Grid2D::weight(int i, int j) const {
  double w = h * h;
  if (i == 0 || i == nt - 1) w *= 0.5;
  if (j == 0 || j == ns - 1) w *= 0.5;
  return w;
}

nlohmann::json Grid2D::to_json() const {
  return {{"kind", to_string(kind)}, {"t_range", {t0, t1}}, {"s_range", {s0, s1}},
          {"nt", nt}, {"ns", ns}, {"h", h}};
}

FieldConfig FieldConfig::constant(const LGModel& m, const Grid2D& g, const CVec& q) {
  FieldConfig c;
  c.P = q.replicate(1, g.size());
  c.at = RMat::Zero(m.k, g.size());
  c.as = RMat::Zero(m.k, g.size());
  return c;
}

void check_shapes(const LGModel& m, const Grid2D& g, const FieldConfig& c) {
  if (c.P.rows() != m.n || c.P.cols() != g.size() || c.at.rows() != m.k || c.at.cols() != g.size() ||
      c.as.rows() != m.k || c.as.cols() != g.size())
    throw Error(ErrorKind::ShapeMismatch, "field arrays do not match model/grid");
}

namespace {

template <class M>
M diff_along(const Grid2D& g, const M& X, bool along_t) {
  M D(X.rows(), X.cols());
  const double c = 1.0 / (2 * g.h);
  const int n1 = along_t ? g.nt : g.ns;
  for (int j = 0; j < g.ns; ++j)
    for (int i = 0; i < g.nt; ++i) {
      int p = along_t ? i : j;
      auto at = [&](int q) { return along_t ? g.idx(q, j) : g.idx(i, q); };
      int o = g.idx(i, j);
      if (p == 0)
        D.col(o) = c * (-3.0 * X.col(at(0)) + 4.0 * X.col(at(1)) - X.col(at(2)));
      else if (p == n1 - 1)
        D.col(o) = c * (3.0 * X.col(at(p)) - 4.0 * X.col(at(p - 1)) + X.col(at(p - 2)));
      else
        D.col(o) = c * (X.col(at(p + 1)) - X.col(at(p - 1)));
    }
  return D;
}

}  // namespace

RMat diff_t(const Grid2D& g, const RMat& X) { return diff_along(g, X, true); }
RMat diff_s(const Grid2D& g, const RMat& X) { return diff_along(g, X, false); }
CMat diff_t(const Grid2D& g, const CMat& X) { return diff_along(g, X, true); }
CMat diff_s(const Grid2D& g, const CMat& X) { return diff_along(g, X, false); }

CMat gauge_rotate(const LGModel& m, const RMat& a, const CMat& v) {
  // weights^T a gives sum_a a_a w_aj per node.
  RMat c = m.weights.cast<double>().transpose() * a;
  CMat r(v.rows(), v.cols());
  for (Eigen::Index o = 0; o < v.cols(); ++o)
    for (Eigen::Index j = 0; j < v.rows(); ++j) r(j, o) = cd(0, c(j, o)) * v(j, o);
  return r;
}

DerivedFields covariant_derivatives(const LGModel& m, const Grid2D& g, const FieldConfig& c) {
  check_shapes(m, g, c);
  DerivedFields d;
  d.T = diff_t(g, c.P) + gauge_rotate(m, c.at, c.P);
  d.S = diff_s(g, c.P) + gauge_rotate(m, c.as, c.P);
  d.F = diff_s(g, c.at) - diff_t(g, c.as);
  d.mu.resize(m.k, g.size());
  for (int o = 0; o < g.size(); ++o) d.mu.col(o) = moment_map(m, c.P.col(o));
  return d;
}

double l2_of_density(const Grid2D& g, const RVec& dens2, int margin) {
  double s = 0;
  for (int j = margin; j < g.ns - margin; ++j)
    for (int i = margin; i < g.nt - margin; ++i) {
      double w = g.h * g.h;
      if (i == margin || i == g.nt - 1 - margin) w *= 0.5;
      if (j == margin || j == g.ns - 1 - margin) w *= 0.5;
      s += w * dens2(g.idx(i, j));
    }
  return std::sqrt(s);
}

ResidualField residual(const LGModel& m, const Grid2D& g, const FieldConfig& c) {
  auto d = covariant_derivatives(m, g, c);
  ResidualField r;
  r.moment = d.F + d.mu - m.delta.replicate(1, g.size());
  r.holo = d.T + cd(0, 1) * d.S;
  for (int o = 0; o < g.size(); ++o) r.holo.col(o) += grad_H(m, c.P.col(o));
  RVec dens(g.size());
  for (int o = 0; o < g.size(); ++o) {
    dens(o) = r.moment.col(o).squaredNorm() + r.holo.col(o).squaredNorm();
    r.max_norm = std::max(r.max_norm, std::sqrt(dens(o)));
  }
  r.l2_norm = l2_of_density(g, dens);
  return r;
}

Region window(int n, double R) { return Region{n - 2.0, n + 2.0, R, R + 4.0}; }

RVec energy_density(const LGModel& m, const Grid2D& g, const FieldConfig& c) {
  auto d = covariant_derivatives(m, g, c);
  RVec U(g.size());
  for (int o = 0; o < g.size(); ++o)
    U(o) = d.T.col(o).squaredNorm() + d.S.col(o).squaredNorm() + grad_H(m, c.P.col(o)).squaredNorm() +
           d.F.col(o).squaredNorm() + (m.delta - d.mu.col(o)).squaredNorm();
  return U;
}

EnergyBreakdown energies(const LGModel& m, const Grid2D& g, const FieldConfig& c, const Region* region) {
  int i0 = 0, i1 = g.nt - 1, j0 = 0, j1 = g.ns - 1;
  if (region) {
    const double eps = 1e-9 * g.h;
    if (region->t0 < g.t0 - eps || region->t1 > g.t1 + eps || region->s0 < g.s0 - eps || region->s1 > g.s1 + eps ||
        region->t0 > region->t1 || region->s0 > region->s1)
      throw Error(ErrorKind::RegionOutOfBounds, "region outside the grid");
    i0 = (int)std::ceil((region->t0 - g.t0) / g.h - 1e-9);
    i1 = (int)std::floor((region->t1 - g.t0) / g.h + 1e-9);
    j0 = (int)std::ceil((region->s0 - g.s0) / g.h - 1e-9);
    j1 = (int)std::floor((region->s1 - g.s0) / g.h + 1e-9);
  }
  auto d = covariant_derivatives(m, g, c);
  EnergyBreakdown e;
  for (int j = j0; j <= j1; ++j)
    for (int i = i0; i <= i1; ++i) {
      double w = g.h * g.h;
      if (i0 != i1 && (i == i0 || i == i1)) w *= 0.5;
      if (j0 != j1 && (j == j0 || j == j1)) w *= 0.5;
      int o = g.idx(i, j);
      CVec gh = grad_H(m, c.P.col(o));
      double t2 = d.T.col(o).squaredNorm(), s2 = d.S.col(o).squaredNorm();
      double f2 = d.F.col(o).squaredNorm(), m2 = (m.delta - d.mu.col(o)).squaredNorm();
      e.e_T += w * t2;
      e.e_JSH += w * (cd(0, 1) * d.S.col(o) + gh).squaredNorm();
      e.e_F += w * f2;
      e.e_mu += w * m2;
      e.local += w * (t2 + s2 + gh.squaredNorm() + f2 + m2);
    }
  e.total = e.e_T + e.e_JSH + e.e_F + e.e_mu;
  return e;
}

FieldConfig apply_gauge(const LGModel& m, const Grid2D& g, const FieldConfig& c, const RMat& u) {
  check_shapes(m, g, c);
  if (u.rows() != m.k || u.cols() != g.size()) throw Error(ErrorKind::ShapeMismatch, "gauge field shape");
  FieldConfig r = c;
  for (int o = 0; o < g.size(); ++o) r.P.col(o) = gauge_act(m, u.col(o), c.P.col(o));
  r.at = c.at - diff_t(g, u);
  r.as = c.as - diff_s(g, u);
  return r;
}

CMat covariant_vector_derivative(const LGModel& m, const Grid2D& g, const FieldConfig& c, const CMat& v,
                                 Direction d) {
  check_shapes(m, g, c);
  if (v.rows() != m.n || v.cols() != g.size()) throw Error(ErrorKind::ShapeMismatch, "vector field shape");
  if (d == Direction::t) return diff_t(g, v) + gauge_rotate(m, c.at, v);
  return diff_s(g, v) + gauge_rotate(m, c.as, v);
}

void write_field_snapshot(const std::string& path, const LGModel& m, const Grid2D& g, const FieldConfig& c) {
  nlohmann::json hdr;
  hdr["grid"] = g.to_json();
  hdr["model_hash"] = model_hash(m);
  hdr["layout"] = "row-major, t fastest; per node: P (n complex as re,im), a_t (k), a_s (k); float64 little-endian";
  hdr["n"] = m.n;
  hdr["k"] = m.k;
  std::string h = hdr.dump();
  std::string body;
  body.reserve(h.size() + 1 + sizeof(double) * g.size() * (2 * m.n + 2 * m.k));
  body += h;
  body += '\n';
  auto put = [&](double x) { body.append(reinterpret_cast<const char*>(&x), sizeof x); };
  for (int o = 0; o < g.size(); ++o) {
    for (int j = 0; j < m.n; ++j) {
      put(c.P(j, o).real());
      put(c.P(j, o).imag());
    }
    for (int a = 0; a < m.k; ++a) put(c.at(a, o));
    for (int a = 0; a < m.k; ++a) put(c.as(a, o));
  }
  write_atomic(path, body);
}

void write_density_csv(const std::string& path, const Grid2D& g, const RVec& u) {
  std::string out = "t,s,U\n";
  char buf[96];
  for (int j = 0; j < g.ns; ++j)
    for (int i = 0; i < g.nt; ++i) {
      std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.17g\n", g.t(i), g.s(j), u(g.idx(i, j)));
      out += buf;
    }
  write_atomic(path, out);
}

}  // namespace glg
