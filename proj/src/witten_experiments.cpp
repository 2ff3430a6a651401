#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

#include "glg/stability.hpp"
#include "glg/vortex.hpp"
#include "glg/witten_flow.hpp"

namespace glg {

namespace {

void require_on_slice(const LGModel& m, const CVec& q) {
  if (grad_L(m, q).norm() >= 1e-8) throw Error(ErrorKind::NotCritical, "q is not a critical point of L");
  if (m.k > 0 && (moment_map(m, q) - m.delta).norm() >= 1e-8)
    throw Error(ErrorKind::HypothesisViolated, "q is not on the delta level of mu");
}

}  // namespace

ExperimentReport triviality_experiment(const LGModel& m, const CVec& q, const Grid2D& g, double radius,
                                       const std::vector<RMat>& inits, double tol) {
  if (m.k != 1) throw Error(ErrorKind::InvalidModel, "triviality experiment needs gauge rank 1");
  require_on_slice(m, q);
  if (infinitesimal_action(m, q, RVec::Ones(1)).norm() < 1e-8)
    throw Error(ErrorKind::NotFreeOrbit, "the circle action is not free at q");
  ExperimentReport rep;
  rep.name = "triviality";
  rep.inputs = {{"model_hash", model_hash(m)}, {"grid", g.to_json()}, {"radius", radius},
                {"inits", (int)inits.size()}, {"tol", tol}};
  std::vector<char> mask(g.size(), 0);
  int interior = 0;
  for (int j = 1; j < g.ns - 1; ++j)
    for (int i = 1; i < g.nt - 1; ++i)
      if (std::hypot(g.t(i), g.s(j)) < radius) {
        mask[g.idx(i, j)] = 1;
        ++interior;
      }
  rep.set("interior_nodes", interior);
  ojson sups = ojson::array(), iters = ojson::array();
  bool all_conv = true, all_small = true, maxp = true;
  double worst = 0;
  for (const auto& a0 : inits) {
    RMat start = a0;
    for (int o = 0; o < g.size(); ++o)
      if (!mask[o]) start.col(o).setZero();
    auto sol = solve_scalar_reduction(m, q, g, mask, start, tol);
    double sup = 0, in_max = -INFINITY, in_min = INFINITY, bd_max = -INFINITY, bd_min = INFINITY;
    for (int o = 0; o < g.size(); ++o) {
      double v = sol.alpha(0, o);
      if (mask[o]) {
        sup = std::max(sup, std::abs(v));
        in_max = std::max(in_max, v);
        in_min = std::min(in_min, v);
      } else {
        bd_max = std::max(bd_max, v);
        bd_min = std::min(bd_min, v);
      }
    }
    sups.push_back(sup);
    iters.push_back(sol.iterations);
    worst = std::max(worst, sup);
    all_conv = all_conv && sol.converged;
    all_small = all_small && sup < 1e-6;
    maxp = maxp && in_max <= bd_max + 1e-12 && in_min >= bd_min - 1e-12;
    for (double v : sol.log) rep.log.push_back(v);
  }
  rep.set("sup_alpha", sups);
  rep.set("iterations", iters);
  rep.set("max_sup_alpha", worst);
  rep.flag("all_converged", all_conv);
  rep.flag("sup_alpha_below_1e-6", all_small);
  rep.flag("maximum_principle", maxp);
  if (!all_conv) rep.notes.push_back("NonConvergence for at least one initialization");
  return rep;
}

FieldConfig orbit_sector_config(const LGModel& m, const CVec& q, const Grid2D& g, const RMat& alpha) {
  FieldConfig c;
  c.P.resize(m.n, g.size());
  for (int o = 0; o < g.size(); ++o) c.P.col(o) = real_gauge_act(m, alpha.col(o), q);
  c.at = -diff_s(g, alpha);
  c.as = diff_t(g, alpha);
  return c;
}

namespace {

double bump_t(double t, double T) {
  if (std::abs(t) >= T) return 0.0;
  double c = std::cos(M_PI * t / (2 * T));
  return c * c;
}

}  // namespace

DecayResult decay_experiment(const LGModel& m, const CVec& q, const DecayOptions& o) {
  require_on_slice(m, q);
  if (m.k < 1) throw Error(ErrorKind::InvalidModel, "decay experiment needs a gauge group");
  const int nt = (int)std::lround(2 * o.t_half / o.h) + 1;
  DecayResult out;
  out.grid = Grid2D::make(GridKind::strip, -o.t_half, o.t_half, 0.0, o.S, nt);
  const Grid2D& g = out.grid;
  ExperimentReport& rep = out.report;
  rep.name = "decay";
  rep.inputs = {{"model_hash", model_hash(m)}, {"grid", g.to_json()}, {"amplitude", o.amplitude},
                {"s0", o.s0}, {"fit_band", {o.fit_lo * o.S, o.fit_hi * o.S}}};
  auto gap = spectral_gap(m, q);
  const double zeta = gap.zeta;
  rep.set("zeta", zeta);
  if (gap.zeta1) rep.set("zeta1", *gap.zeta1);
  rep.set("zeta2", gap.zeta2);
  rep.set("lambda1", gap.lambda1);

  // Reference: exact orbit-sector solution with alpha(t, 0) = amplitude * bump.
  std::vector<char> mask(g.size(), 0);
  RMat alpha = RMat::Zero(m.k, g.size());
  for (int j = 0; j < g.ns; ++j)
    for (int i = 0; i < g.nt; ++i) {
      if (!g.on_boundary(i, j)) mask[g.idx(i, j)] = 1;
      if (j == 0) alpha.col(g.idx(i, j)).setConstant(o.amplitude * bump_t(g.t(i), o.t_half));
    }
  auto red = solve_scalar_reduction(m, q, g, mask, alpha, 1e-13);
  rep.set("reference_residual", red.residual);
  FieldConfig ref = orbit_sector_config(m, q, g, red.alpha);
  auto sol = solve_witten(m, g, ref, ref, o.solve);
  out.cfg = sol.cfg;
  rep.log = sol.report.log;
  rep.set("solve_iterations", sol.iterations);
  rep.set("solve_residual_l2", sol.residual);
  rep.set("deviation_from_reference", (sol.cfg.P - ref.P).cwiseAbs().maxCoeff());
  rep.flag("solve_converged", sol.converged);

  out.U = energy_density(m, g, out.cfg);
  const RVec& U = out.U;
  double K = 0;
  for (int i = 0; i < g.nt; ++i) K = std::max(K, U(g.idx(i, 0)));
  rep.set("K", K);
  if (o.amplitude == 0.0 || K == 0.0) {
    // P = q everywhere; U is zero up to round-off in q and in the differences of a constant.
    rep.set("max_U", U.cwiseAbs().maxCoeff());
    rep.set("trivial", true);
    rep.notes.push_back("zero amplitude: U vanishes to round-off");
    rep.flag("trivial_decay", U.cwiseAbs().maxCoeff() < 1e-24);
    return out;
  }
  std::vector<double> xs, ys;
  for (int j = 0; j < g.ns; ++j) {
    double s = g.s(j);
    if (s < o.fit_lo * o.S - 1e-12 || s > o.fit_hi * o.S + 1e-12) continue;
    // Edge columns carry Dirichlet data, not solution values.
    double mx = 0;
    for (int i = 1; i < g.nt - 1; ++i) mx = std::max(mx, U(g.idx(i, j)));
    if (!(mx > 0)) throw Error(ErrorKind::FitUnstable, "energy density underflows in the fit band");
    xs.push_back(s);
    ys.push_back(std::log(mx));
  }
  if (xs.size() < 3) throw Error(ErrorKind::FitUnstable, "too few rows in the fit band");
  auto fit = fit_line(xs, ys);
  rep.set("fitted_rate", -fit.slope);
  rep.set("r_squared", fit.r2);
  rep.set("rate_over_zeta", -fit.slope / zeta);
  if (fit.r2 < 0.99) throw Error(ErrorKind::FitUnstable, "R^2 below 0.99 over the fit band");
  rep.flag("rate_at_least_0.85_zeta", -fit.slope >= 0.85 * zeta);

  EnvelopeOptions eo;
  eo.kind = EnvelopeKind::halfplane;
  eo.s_shift = o.s0;
  eo.strict = false;
  auto env = max_principle_envelope(g, U, zeta, K, eo);
  rep.set("envelope_min_margin", env.scalars["min_margin"]);
  rep.set("hypothesis_max", env.scalars["hypothesis_max"]);
  rep.flag("envelope_margin", env.flags["margin"].get<bool>());
  return out;
}

ExperimentReport decay_amplitude_scan(const LGModel& m, const CVec& q, const DecayOptions& base,
                                      const std::vector<double>& amplitudes) {
  ExperimentReport rep;
  rep.name = "decay_amplitude_scan";
  rep.inputs = {{"model_hash", model_hash(m)}, {"amplitudes", amplitudes}};
  double largest = 0;
  ojson rows = ojson::array();
  for (double a : amplitudes) {
    DecayOptions o = base;
    o.amplitude = a;
    ojson row = {{"amplitude", a}};
    try {
      auto r = decay_experiment(m, q, o);
      row["pass"] = r.report.passed();
      row["fitted_rate"] = r.report.scalars.value("fitted_rate", 0.0);
      if (r.report.passed()) largest = std::max(largest, a);
    } catch (const Error& e) {
      row["pass"] = false;
      row["error"] = e.what();
    }
    rows.push_back(row);
  }
  rep.set("runs", rows);
  rep.set("largest_passing_amplitude", largest);
  rep.notes.push_back("largest passing amplitude is observational, not the theoretical threshold");
  return rep;
}

ExperimentReport max_principle_envelope(const Grid2D& g, const RVec& u, double zeta, double K,
                                        const EnvelopeOptions& o) {
  if (!u.allFinite()) throw Error(ErrorKind::ConfigError, "u not finite");
  if (!(zeta > 0) || !(K > 0)) throw Error(ErrorKind::OutOfRange, "zeta and K must be positive");
  if (u.size() != g.size()) throw Error(ErrorKind::ShapeMismatch, "u does not match the grid");
  ExperimentReport rep;
  rep.name = "max_principle_envelope";
  rep.inputs = {{"grid", g.to_json()}, {"zeta", zeta}, {"K", K},
                {"kind", o.kind == EnvelopeKind::halfplane ? "halfplane" : "strip"}};
  if (o.kind == EnvelopeKind::strip) rep.inputs["R"] = o.R;
  if (o.kind == EnvelopeKind::halfplane) rep.inputs["s_shift"] = o.s_shift;
  auto env = [&](double s) {
    if (o.kind == EnvelopeKind::halfplane) return K * std::exp(-zeta * (s - o.s_shift));
    return K * std::cosh(zeta * (s - o.R)) / std::cosh(zeta * o.R);
  };
  auto in_range = [&](double s) {
    if (o.kind == EnvelopeKind::halfplane) return s >= o.s_shift - 1e-12;
    return s >= -1e-12 && s <= 2 * o.R + 1e-12;
  };
  double min_margin = INFINITY, hyp = -INFINITY;
  int wi = -1, wj = -1;
  const double ih2 = 1.0 / (g.h * g.h);
  for (int j = 0; j < g.ns; ++j)
    for (int i = 0; i < g.nt; ++i) {
      if (!in_range(g.s(j))) continue;
      min_margin = std::min(min_margin, env(g.s(j)) - u(g.idx(i, j)));
      if (g.on_boundary(i, j)) continue;
      double lap = ih2 * (4 * u(g.idx(i, j)) - u(g.idx(i + 1, j)) - u(g.idx(i - 1, j)) - u(g.idx(i, j + 1)) -
                          u(g.idx(i, j - 1)));
      double v = lap + zeta * zeta * u(g.idx(i, j));
      if (v > hyp) {
        hyp = v;
        wi = i;
        wj = j;
      }
    }
  rep.set("min_margin", min_margin);
  rep.set("hypothesis_max", hyp);
  if (wi >= 0) rep.set("hypothesis_worst_node", {g.t(wi), g.s(wj)});
  rep.flag("margin", min_margin >= -1e-8);
  bool hyp_ok = !(hyp > o.tol_h);
  if (o.strict) {
    if (!hyp_ok)
      throw Error(ErrorKind::HypothesisViolated, "(Lap + zeta^2) u > tol at t=" + std::to_string(g.t(wi)) +
                                                     " s=" + std::to_string(g.s(wj)));
    rep.flag("hypothesis", true);
  } else {
    rep.set("hypothesis_holds", hyp_ok);
  }
  return rep;
}

StripBuild flowline_strip(const LGModel& m, const CVec& q, double h, double eps, double gauge_eps, double t_half,
                          double S) {
  if (grad_L(m, q).norm() >= 1e-8) throw Error(ErrorKind::NotCritical, "q is not a critical point of L");
  StripBuild b;
  Eigen::SelfAdjointEigenSolver<RMat> es(hess_L_real(m, q));
  CVec v = to_complex(es.eigenvectors().col(2 * m.n - 1));
  CVec p0 = q + eps * v;
  b.model = m;
  if (m.k > 0) b.model.delta = moment_map(m, p0);
  const int nt = (int)std::lround(2 * t_half / h) + 1;
  b.grid = Grid2D::make(GridKind::strip, -t_half, t_half, 0.0, S, nt);
  const Grid2D& g = b.grid;
  // Flowline sampled at the grid rows; RK4 substeps of h / sub.
  const double hn = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  int sub = 1;
  while (h / sub * hn * 4 >= 0.1) sub *= 2;
  auto fl = gradient_flowline(m, p0, S, h / sub);
  b.exact.P.resize(m.n, g.size());
  b.exact.at.resize(m.k, g.size());
  b.exact.as.resize(m.k, g.size());
  for (int j = 0; j < g.ns; ++j)
    for (int i = 0; i < g.nt; ++i) {
      int o = g.idx(i, j);
      double t = g.t(i), s = g.s(j);
      RVec th(m.k);
      for (int a = 0; a < m.k; ++a) {
        double e = gauge_eps * std::exp(-s);
        th(a) = e * std::cos(t + a);
        b.exact.at(a, o) = e * std::sin(t + a);  // -d_t theta
        b.exact.as(a, o) = e * std::cos(t + a);  // -d_s theta
      }
      b.exact.P.col(o) = gauge_act(m, th, fl.p[(size_t)j * sub]);
    }
  b.solved = solve_witten(b.model, g, b.exact, b.exact, SolveOptions{});
  return b;
}

FieldConfig random_smooth_config(const LGModel& m, const CVec& q, const Grid2D& g, std::uint64_t seed,
                                 double amplitude) {
  std::mt19937_64 rng(seed);
  auto uni = [&] { return (double)(rng() >> 11) * 0x1.0p-53 * 2 - 1; };
  FieldConfig c = FieldConfig::constant(m, g, q);
  const double Lt = g.t1 - g.t0, Ls = g.s1 - g.s0;
  for (int mode = 1; mode <= 3; ++mode) {
    CVec cp(m.n);
    for (int l = 0; l < m.n; ++l) cp(l) = cd(uni(), uni());
    RVec ct(m.k), cs(m.k);
    for (int a = 0; a < m.k; ++a) {
      ct(a) = uni();
      cs(a) = uni();
    }
    double ph1 = uni() * M_PI, ph2 = uni() * M_PI;
    for (int j = 0; j < g.ns; ++j)
      for (int i = 0; i < g.nt; ++i) {
        int o = g.idx(i, j);
        double f = std::sin(2 * M_PI * mode * (g.t(i) - g.t0) / Lt + ph1) *
                   std::cos(2 * M_PI * mode * (g.s(j) - g.s0) / Ls + ph2);
        c.P.col(o) += amplitude * f * cp;
        c.at.col(o) += amplitude * f * ct;
        c.as.col(o) += amplitude * f * cs;
      }
  }
  return c;
}

}  // namespace glg
