#include "glg/vortex.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Sparse>

namespace glg {

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double N = (double)x.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= N;
  my /= N;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

namespace {

// Ratio K1/K0 used by the Robin condition at r_max (u ~ C K0(r)).
double k_ratio(double r) { return std::cyl_bessel_k(1.0, r) / std::cyl_bessel_k(0.0, r); }

}  // namespace

VortexProfile solve_radial_vortex(int n, double r_min, double r_max, int nodes) {
  if (n < 0 || r_min <= 0 || r_min >= 0.1 || r_max < 12 || nodes < 10)
    throw Error(ErrorKind::OutOfRange, "vortex parameters out of range");
  VortexProfile p;
  p.n = n;
  p.r_min = r_min;
  p.r_max = r_max;
  const int N = nodes;
  const double x0 = std::log(r_min), x1 = std::log(r_max), dx = (x1 - x0) / (N - 1);
  p.x.resize(N);
  p.r.resize(N);
  for (int i = 0; i < N; ++i) {
    p.x[i] = x0 + i * dx;
    p.r[i] = std::exp(p.x[i]);
  }
  Eigen::VectorXd u(N);
  for (int i = 0; i < N; ++i) u(i) = n * std::log(p.r[i] * p.r[i] / (1 + p.r[i] * p.r[i]));
  // u_xx = r^2 (e^u - 1); left: u_x = 2n - r^2/2; right: u_x = -r K1/K0 u.
  // Rows are kept in stencil form (multiplied by dx^2, resp. 2 dx) so the
  // residual is not dominated by 1/dx^2 roundoff.
  const double left = n > 0 ? 2.0 * n - 0.5 * r_min * r_min : 0.0;
  const double rob = r_max * k_ratio(r_max);
  auto F = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd f(N);
    f(0) = -3 * v(0) + 4 * v(1) - v(2) - 2 * dx * left;
    for (int i = 1; i < N - 1; ++i)
      f(i) = v(i + 1) - 2 * v(i) + v(i - 1) - dx * dx * p.r[i] * p.r[i] * (std::exp(v(i)) - 1);
    f(N - 1) = 3 * v(N - 1) - 4 * v(N - 2) + v(N - 3) + 2 * dx * rob * v(N - 1);
    return f;
  };
  if (n == 0) u.setZero();
  Eigen::VectorXd f = F(u);
  int it = 0;
  for (; it < 200 && f.cwiseAbs().maxCoeff() >= 1e-13; ++it) {
    std::vector<Eigen::Triplet<double>> tr;
    tr.reserve(3 * N + 6);
    tr.emplace_back(0, 0, -3.0);
    tr.emplace_back(0, 1, 4.0);
    tr.emplace_back(0, 2, -1.0);
    for (int i = 1; i < N - 1; ++i) {
      tr.emplace_back(i, i - 1, 1.0);
      tr.emplace_back(i, i, -2.0 - dx * dx * p.r[i] * p.r[i] * std::exp(u(i)));
      tr.emplace_back(i, i + 1, 1.0);
    }
    tr.emplace_back(N - 1, N - 1, 3.0 + 2 * dx * rob);
    tr.emplace_back(N - 1, N - 2, -4.0);
    tr.emplace_back(N - 1, N - 3, 1.0);
    Eigen::SparseMatrix<double> Jm(N, N);
    Jm.setFromTriplets(tr.begin(), tr.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(Jm);
    if (lu.info() != Eigen::Success) throw Error(ErrorKind::NonConvergence, "vortex Jacobian singular");
    Eigen::VectorXd du = lu.solve(-f);
    double t = 1.0, f0 = f.norm();
    Eigen::VectorXd un, fn;
    for (int ls = 0; ls < 50; ++ls) {
      un = u + t * du;
      fn = F(un);
      if (fn.allFinite() && fn.norm() < (1 - 1e-4 * t) * f0) break;
      t *= 0.5;
    }
    if (!(fn.norm() < f0)) break;
    u = un;
    f = fn;
  }
  p.iterations = it;
  p.residual = f.cwiseAbs().maxCoeff();
  if (!(p.residual < 1e-10)) throw Error(ErrorKind::NonConvergence, "radial vortex Newton did not converge");
  p.u.assign(u.data(), u.data() + N);
  p.ux.resize(N);
  for (int i = 1; i < N - 1; ++i) p.ux[i] = (u(i + 1) - u(i - 1)) / (2 * dx);
  p.ux[0] = left;
  p.ux[N - 1] = -rob * u(N - 1);
  p.c0 = u(0) - 2.0 * n * std::log(r_min) + (n > 0 ? 0.25 * r_min * r_min : 0.0);
  return p;
}

double VortexProfile::u_at(double rr) const {
  if (rr <= r_min) return n > 0 ? 2.0 * n * std::log(rr) + c0 - 0.25 * rr * rr : c0;
  if (rr >= r_max) return u.back() * std::cyl_bessel_k(0.0, rr) / std::cyl_bessel_k(0.0, r_max);
  const double dx = x[1] - x[0];
  double xx = std::log(rr);
  int i = std::min((int)((xx - x[0]) / dx), (int)x.size() - 2);
  double s = (xx - x[i]) / dx;
  double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return h00 * u[i] + h10 * dx * ux[i] + h01 * u[i + 1] + h11 * dx * ux[i + 1];
}

double VortexProfile::r_du_at(double rr) const {
  if (rr <= r_min) return n > 0 ? 2.0 * n - 0.5 * rr * rr : 0.0;
  if (rr >= r_max) return -rr * std::cyl_bessel_k(1.0, rr) / std::cyl_bessel_k(0.0, rr) * u_at(rr);
  const double dx = x[1] - x[0];
  double xx = std::log(rr);
  int i = std::min((int)((xx - x[0]) / dx), (int)x.size() - 2);
  double s = (xx - x[i]) / dx;
  // Derivatives of the Hermite basis with respect to s, divided by dx.
  double d00 = 6 * s * s - 6 * s, d10 = 3 * s * s - 4 * s + 1, d01 = -6 * s * s + 6 * s, d11 = 3 * s * s - 2 * s;
  return (d00 * u[i] + d10 * dx * ux[i] + d01 * u[i + 1] + d11 * dx * ux[i + 1]) / dx;
}

FieldConfig embed_vortex(const VortexProfile& p, const Grid2D& g) {
  double rmax = 0;
  for (double t : {g.t0, g.t1})
    for (double s : {g.s0, g.s1}) rmax = std::max(rmax, std::hypot(t, s));
  if (rmax > p.r_max * (1 + 1e-12)) throw Error(ErrorKind::GridExceedsProfile, "grid radius exceeds r_max");
  FieldConfig c;
  c.P.resize(1, g.size());
  c.at.resize(1, g.size());
  c.as.resize(1, g.size());
  for (int j = 0; j < g.ns; ++j)
    for (int i = 0; i < g.nt; ++i) {
      int o = g.idx(i, j);
      double t = g.t(i), s = g.s(j), r = std::hypot(t, s);
      cd zeta(t, s);
      double kappa;
      if (r <= p.r_min) {
        cd zn = 1.0;
        for (int q = 0; q < p.n; ++q) zn *= zeta;
        c.P(0, o) = std::exp(0.5 * (p.c0 - (p.n > 0 ? 0.25 * r * r : 0.0))) * zn;
        kappa = p.n > 0 ? 0.25 : 0.0;
      } else {
        c.P(0, o) = std::exp(0.5 * p.u_at(r)) * std::pow(zeta / r, p.n);
        kappa = (p.n - 0.5 * p.r_du_at(r)) / (r * r);
      }
      c.at(0, o) = kappa * s;
      c.as(0, o) = -kappa * t;
    }
  return c;
}

double vortex_energy(const VortexProfile& p) {
  // E = 2 pi int [ e^u u_x^2 / 2 + r^2 (1 - e^u)^2 / 2 ] dx, plus the disc r < r_min.
  const double dx = p.x[1] - p.x[0];
  double s = 0;
  for (size_t i = 0; i < p.x.size(); ++i) {
    double eu = std::exp(p.u[i]);
    double f = 0.5 * eu * p.ux[i] * p.ux[i] + 0.5 * p.r[i] * p.r[i] * (1 - eu) * (1 - eu);
    s += (i == 0 || i + 1 == p.x.size() ? 0.5 : 1.0) * f * dx;
  }
  double core = p.n * std::exp(p.c0) * std::pow(p.r_min, 2 * p.n) + 0.25 * p.r_min * p.r_min;
  if (p.n == 0) core = 0;
  return 2 * M_PI * (s + core);
}

double vortex_energy(const Grid2D& g, const FieldConfig& c) { return energies(vortex_model(), g, c).total; }

ExperimentReport vortex_decay_fit(const VortexProfile& p, double r_lo, double r_hi) {
  ExperimentReport rep;
  rep.name = "vortex_decay_fit";
  rep.inputs = {{"n", p.n}, {"r_lo", r_lo}, {"r_hi", r_hi}, {"r_max", p.r_max}};
  double minF = 0;
  for (double uu : p.u) minF = std::min(minF, 0.5 * (1 - std::exp(uu)));
  rep.set("min_half_one_minus_P2", minF);
  rep.flag("nonnegative_curvature", minF >= 0);
  if (p.n == 0) {
    rep.notes.push_back("n = 0: vacuum profile, decay fit skipped");
    rep.set("skipped", true);
    return rep;
  }
  std::vector<double> xs, ys;
  for (size_t i = 0; i < p.r.size(); ++i)
    if (p.r[i] >= r_lo && p.r[i] <= r_hi) {
      xs.push_back(p.r[i]);
      ys.push_back(std::log(0.5 * (1 - std::exp(p.u[i]))));
    }
  if (xs.size() < 3) throw Error(ErrorKind::FitUnstable, "too few nodes in the fit window");
  auto f = fit_line(xs, ys);
  rep.set("fitted_rate", -f.slope);
  rep.set("r_squared", f.r2);
  if (f.r2 < 0.99) throw Error(ErrorKind::FitUnstable, "R^2 below 0.99");
  rep.flag("rate_at_least_0.9", -f.slope >= 0.9);
  return rep;
}

}  // namespace glg
