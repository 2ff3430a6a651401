#include "glg/surface_reduction.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Sparse>

namespace glg {

TorusGrid TorusGrid::make(double Lx, double Ly, int nx) {
  TorusGrid g;
  g.Lx = Lx;
  g.Ly = Ly;
  g.nx = nx;
  g.h = Lx / nx;
  g.ny = (int)std::lround(Ly / g.h);
  if (nx < 3 || g.ny < 3 || std::abs(g.ny * g.h - Ly) > 1e-12 * Ly)
    throw Error(ErrorKind::ShapeMismatch, "torus periods incompatible with square cells");
  return g;
}

RVec torus_laplacian(const TorusGrid& g, const RVec& a) {
  RVec r(g.size());
  const double c = 1.0 / (g.h * g.h);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int o = g.idx(i, j);
      r(o) = c * (4 * a(o) - a(g.idx(i + 1, j)) - a(g.idx(i - 1, j)) - a(g.idx(i, j + 1)) - a(g.idx(i, j - 1)));
    }
  return r;
}

RVec kw_operator(const TorusGrid& g, const WeightFields& w, const RVec& alpha) {
  RVec r = torus_laplacian(g, alpha);
  for (int o = 0; o < g.size(); ++o)
    r(o) += 0.5 * std::expm1(2 * alpha(o)) * w.w_plus(o) * w.w_plus(o) -
            0.5 * std::expm1(-2 * alpha(o)) * w.w_minus(o) * w.w_minus(o);
  return r;
}

KWResult kazdan_warner_solve(const TorusGrid& g, const WeightFields& w, const RVec& rhs, const RVec* init,
                             double tol) {
  const int N = g.size();
  if (w.w_plus.size() != N || w.w_minus.size() != N || rhs.size() != N)
    throw Error(ErrorKind::ShapeMismatch, "weight/rhs fields do not match the torus grid");
  if (w.w_plus.cwiseAbs().maxCoeff() == 0 || w.w_minus.cwiseAbs().maxCoeff() == 0)
    throw Error(ErrorKind::OutOfRange, "weight fields must not vanish identically");
  KWResult out;
  out.alpha = init ? *init : RVec::Zero(N);
  auto res = [&](const RVec& a) { return RVec(kw_operator(g, w, a) - rhs); };
  RVec r = res(out.alpha);
  out.residual_log.push_back(r.cwiseAbs().maxCoeff());
  const double c = 1.0 / (g.h * g.h);
  int gd_steps = 0;
  for (int it = 0; it < 100 && out.residual_log.back() >= tol; ++it) {
    std::vector<Eigen::Triplet<double>> tr;
    tr.reserve(5 * N);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        int o = g.idx(i, j);
        double diag = 4 * c + std::exp(2 * out.alpha(o)) * w.w_plus(o) * w.w_plus(o) +
                      std::exp(-2 * out.alpha(o)) * w.w_minus(o) * w.w_minus(o);
        tr.emplace_back(o, o, diag);
        for (int nb : {g.idx(i + 1, j), g.idx(i - 1, j), g.idx(i, j + 1), g.idx(i, j - 1)}) tr.emplace_back(o, nb, -c);
      }
    Eigen::SparseMatrix<double> Jm(N, N);
    Jm.setFromTriplets(tr.begin(), tr.end());
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(Jm);
    RVec dir;
    if (llt.info() == Eigen::Success) {
      dir = llt.solve(-r);
    } else {
      dir = -(Jm * r);  // steepest descent on |eta - g|^2 / 2
      ++gd_steps;
    }
    double t = 1.0, e0 = r.squaredNorm();
    RVec an, rn;
    bool ok = false;
    for (int ls = 0; ls < 60; ++ls) {
      an = out.alpha + t * dir;
      rn = res(an);
      if (rn.allFinite() && rn.squaredNorm() <= (1 - 1e-4 * t) * e0) {
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) break;
    out.alpha = an;
    r = rn;
    out.residual_log.push_back(r.cwiseAbs().maxCoeff());
  }
  out.residual = out.residual_log.back();
  auto& rep = out.report;
  rep.name = "kazdan_warner_solve";
  rep.inputs = {{"nx", g.nx}, {"ny", g.ny}, {"Lx", g.Lx}, {"Ly", g.Ly}};
  rep.log = out.residual_log;
  rep.set("residual", out.residual);
  rep.set("iterations", (int)out.residual_log.size() - 1);
  rep.set("descent_fallback_steps", gd_steps);
  const auto& L = out.residual_log;
  double worst_ratio = 0;
  for (size_t i = L.size() >= 3 ? L.size() - 2 : 1; i < L.size(); ++i)
    worst_ratio = std::max(worst_ratio, L[i] / L[i - 1]);
  rep.set("final_contraction_ratio", L.size() >= 2 ? worst_ratio : 0.0);
  rep.flag("converged", out.residual < tol);
  if (out.residual >= tol) throw Error(ErrorKind::NonConvergence, "Kazdan-Warner Newton stalled");
  return out;
}

RVec critical_orbit_residual(const TorusGrid& g, const CriticalOrbitInput& in, const RVec& alpha) {
  RVec r = torus_laplacian(g, alpha);
  for (int o = 0; o < g.size(); ++o)
    r(o) += 0.5 * (std::exp(2 * alpha(o)) * in.psi_plus2(o) - std::exp(-2 * alpha(o)) * in.psi_minus2(o)) +
            in.curvature(o) - in.delta(o);
  return r;
}

KWResult critical_orbit_slice(const TorusGrid& g, const CriticalOrbitInput& in) {
  const int N = g.size();
  if (in.psi_plus2.size() != N || in.psi_minus2.size() != N || in.curvature.size() != N || in.delta.size() != N)
    throw Error(ErrorKind::ShapeMismatch, "critical-orbit fields do not match the torus grid");
  WeightFields w{in.psi_plus2.cwiseMax(0.0).cwiseSqrt(), in.psi_minus2.cwiseMax(0.0).cwiseSqrt()};
  RVec rhs = in.delta - in.curvature - 0.5 * (in.psi_plus2 - in.psi_minus2);
  KWResult out = kazdan_warner_solve(g, w, rhs);
  double orig = critical_orbit_residual(g, in, out.alpha).cwiseAbs().maxCoeff();
  out.report.name = "critical_orbit_slice";
  out.report.set("critical_orbit_residual", orig);
  return out;
}

TorusConstant torus_constant_solution(cd a, double delta) {
  if (std::abs(a) == 0) throw Error(ErrorKind::DegenerateForm, "lambda^{1,0} coefficient vanishes");
  TorusConstant s;
  s.c = std::sqrt(2.0) * std::abs(a);
  s.t = 2 * delta;
  const double c2 = s.c * s.c, D = std::sqrt(s.t * s.t + 4 * c2);
  // Cancellation-free forms of the two roots p = (t + D)/2 and q = (D - t)/2.
  s.p = s.t >= 0 ? 0.5 * (s.t + D) : 2 * c2 / (D - s.t);
  s.q = s.t >= 0 ? 2 * c2 / (D + s.t) : 0.5 * (D - s.t);
  s.other_root = s.t >= 0 ? -2 * c2 / (D + s.t) : 0.5 * (s.t - D);
  if (s.t == 0) {
    s.p = s.q = s.c;
    s.other_root = -s.c;
  }
  s.phase_minus = std::arg(-std::conj(a));
  s.residual_product = std::abs(std::sqrt(s.p * s.q) - s.c);
  s.residual_level = std::abs(0.5 * (s.p - s.q) - delta);
  return s;
}

namespace {
void check_count_args(int genus, int d, int punctures) {
  if (genus < 0 || punctures < 0) throw Error(ErrorKind::OutOfRange, "genus and punctures must be >= 0");
  if (punctures == 0 && genus < 1) throw Error(ErrorKind::OutOfRange, "closed case needs genus >= 1");
  if (punctures == 1) throw Error(ErrorKind::OutOfRange, "a single puncture cannot carry a nonzero residue");
  int top = 2 * genus - 2 + punctures;
  if (d < 0 || d > top) throw Error(ErrorKind::OutOfRange, "need 0 <= d <= 2g - 2 + n");
}
}  // namespace

long long count_critical_orbits(int genus, int d, int punctures) {
  check_count_args(genus, d, punctures);
  int N = 2 * genus - 2 + punctures;
  long long b = 1;
  for (int i = 1; i <= d; ++i) b = b * (N - d + i) / i;
  return b;
}

std::vector<std::vector<int>> enumerate_zero_subsets(int genus, int d, int punctures) {
  check_count_args(genus, d, punctures);
  int N = 2 * genus - 2 + punctures;
  std::vector<std::vector<int>> out;
  for (unsigned mask = 0; mask < (1u << N); ++mask) {
    if (__builtin_popcount(mask) != d) continue;
    std::vector<int> s;
    for (int i = 0; i < N; ++i)
      if (mask & (1u << i)) s.push_back(i);
    out.push_back(s);
  }
  return out;
}

cd eta_form(const std::vector<cd>& p, const std::vector<cd>& a, cd z) {
  cd s = 0;
  for (size_t j = 0; j < p.size(); ++j) s += a[j] / (z - p[j]);
  return s;
}

SphereZeros punctured_sphere_zeros(const std::vector<cd>& p, const std::vector<cd>& a) {
  if (p.size() != a.size() || p.empty()) throw Error(ErrorKind::ShapeMismatch, "punctures/residues mismatch");
  const int m = (int)p.size();  // finite punctures, n = m + 1
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (std::abs(p[i] - p[j]) == 0) throw Error(ErrorKind::OutOfRange, "punctures must be distinct");
  SphereZeros out;
  double L = 1;
  double asum = 0;
  for (int j = 0; j < m; ++j) {
    L = std::max(L, 1 + std::abs(p[j]));
    asum += std::abs(a[j]);
  }
  out.scale = asum / (L * L);
  // Numerator N(z) = sum_j a_j prod_{k != j} (z - p_k), coefficients low to high.
  std::vector<cd> num(m, 0.0);
  for (int j = 0; j < m; ++j) {
    std::vector<cd> prod{1.0};
    for (int k = 0; k < m; ++k) {
      if (k == j) continue;
      std::vector<cd> nx(prod.size() + 1, 0.0);
      for (size_t i = 0; i < prod.size(); ++i) {
        nx[i + 1] += prod[i];
        nx[i] -= p[k] * prod[i];
      }
      prod = nx;
    }
    for (size_t i = 0; i < prod.size(); ++i) num[i] += a[j] * prod[i];
  }
  const int deg = m - 1;
  cd lead = num[deg];
  if (std::abs(lead) < 1e-12 * asum) throw Error(ErrorKind::DegenerateResidues, "residue at infinity vanishes");
  std::vector<cd> roots;
  if (deg > 0) {
    CMat C = CMat::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) C(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i) C(i, deg - 1) = -num[i] / lead;
    Eigen::ComplexEigenSolver<CMat> es(C);
    for (int i = 0; i < deg; ++i) roots.push_back(es.eigenvalues()(i));
  }
  auto poly = [&](cd z, cd& dz) {
    cd v = 0;
    dz = 0;
    for (int i = deg; i >= 0; --i) {
      dz = dz * z + v;
      v = v * z + num[i];
    }
    return v;
  };
  // Cluster nearly coincident eigenvalues (a multiple root splits by ~sqrt(eps)).
  const double merge = 1e-5 * L;
  std::vector<int> used(roots.size(), 0);
  for (size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    cd sum = roots[i];
    int cnt = 1;
    for (size_t j = i + 1; j < roots.size(); ++j)
      if (!used[j] && std::abs(roots[j] - roots[i]) < merge) {
        used[j] = 1;
        sum += roots[j];
        ++cnt;
      }
    cd z = sum / double(cnt);
    if (cnt == 1)
      for (int it = 0; it < 3; ++it) {
        cd dz;
        cd v = poly(z, dz);
        if (std::abs(dz) > 0) z -= v / dz;
      }
    bool collide = false;
    for (auto& pj : p)
      if (std::abs(z - pj) < 1e-8 * L) collide = true;
    if (collide) {
      out.rejected += cnt;
      continue;
    }
    cd dz;
    poly(z, dz);
    cd den = 1;
    for (auto& pj : p) den *= (z - pj);
    double ep = std::abs(dz / den);  // eta'(z) = N'(z)/D(z) where N(z) = 0
    for (int c = 0; c < cnt; ++c) {
      out.zeros.push_back(z);
      out.eta_prime_abs.push_back(ep);
    }
    if (cnt > 1 || ep <= 1e-8 * out.scale) out.all_simple = false;
  }
  out.min_pair_distance = INFINITY;
  for (size_t i = 0; i < out.zeros.size(); ++i)
    for (size_t j = i + 1; j < out.zeros.size(); ++j)
      out.min_pair_distance = std::min(out.min_pair_distance, std::abs(out.zeros[i] - out.zeros[j]));
  // Residue check: trapezoid rule on circles is spectrally accurate.
  const int M = 256;
  for (int j = 0; j < m; ++j) {
    double rho = 1.0;
    for (int k = 0; k < m; ++k)
      if (k != j) rho = std::min(rho, 0.5 * std::abs(p[k] - p[j]));
    cd I = 0;
    for (int q = 0; q < M; ++q) {
      cd e = std::polar(1.0, 2 * M_PI * q / M);
      I += eta_form(p, a, p[j] + rho * e) * cd(0, 1) * rho * e;
    }
    I *= 2 * M_PI / M;
    out.residue_error = std::max(out.residue_error, std::abs(I - cd(0, 2 * M_PI) * a[j]));
  }
  return out;
}

Goodness goodness_check(std::array<double, 2> l, long long N, double tol) {
  double nl = std::hypot(l[0], l[1]);
  if (!(nl > 0) || !std::isfinite(nl)) throw Error(ErrorKind::DegenerateForm, "lambda periods must be nonzero");
  Goodness g;
  g.min_pairing = INFINITY;
  // Normalized periods mu = (-l2, l1)/|l|; then c1 mu2 - c2 mu1 = (c . l)/|l|.
  int small = std::abs(l[0]) <= std::abs(l[1]) ? 0 : 1, big = 1 - small;
  for (long long cs = 0; cs <= N; ++cs) {
    double exact = -cs * l[small] / l[big];
    long long base = (long long)std::llround(exact);
    for (long long cb : {base - 1, base, base + 1}) {
      if (cs == 0 && cb == 0) continue;
      if (std::llabs(cb) > N) continue;
      double pair = std::abs(cs * l[small] + cb * l[big]) / nl;
      g.min_pairing = std::min(g.min_pairing, pair);
      if (pair < tol && !g.witness) {
        std::array<long long, 2> c{};
        c[small] = cs;
        c[big] = cb;
        if (c[0] < 0 || (c[0] == 0 && c[1] < 0)) c = {-c[0], -c[1]};
        g.witness = c;
        g.good = false;
      }
    }
    if (g.witness) break;
  }
  return g;
}

}  // namespace glg
