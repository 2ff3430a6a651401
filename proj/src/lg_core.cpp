#include "glg/lg_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace glg {

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::NotCritical: return "NotCritical";
    case ErrorKind::NotFreeOrbit: return "NotFreeOrbit";
    case ErrorKind::Unattainable: return "Unattainable";
    case ErrorKind::RegionOutOfBounds: return "RegionOutOfBounds";
    case ErrorKind::InputNotSolution: return "InputNotSolution";
    case ErrorKind::FitUnstable: return "FitUnstable";
    case ErrorKind::HypothesisViolated: return "HypothesisViolated";
    case ErrorKind::EndpointNotDecayed: return "EndpointNotDecayed";
    case ErrorKind::StepTooLarge: return "StepTooLarge";
    case ErrorKind::GridExceedsProfile: return "GridExceedsProfile";
    case ErrorKind::DegenerateForm: return "DegenerateForm";
    case ErrorKind::DegenerateResidues: return "DegenerateResidues";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Error";
}

RVec to_real(const CVec& z) {
  RVec x(2 * z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    x(2 * j) = z(j).real();
    x(2 * j + 1) = z(j).imag();
  }
  return x;
}

CVec to_complex(const RVec& x) {
  CVec z(x.size() / 2);
  for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = cd(x(2 * j), x(2 * j + 1));
  return z;
}

RMat j_matrix(int n) {
  RMat J = RMat::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    J(2 * j, 2 * j + 1) = -1.0;
    J(2 * j + 1, 2 * j) = 1.0;
  }
  return J;
}

// ---------------------------------------------------------------- polynomial

namespace {

cd ipow(cd z, int e) {
  cd r = 1.0;
  for (int i = 0; i < e; ++i) r *= z;
  return r;
}

// Coefficient times the derivative of z^exp by the multi-index d.
cd mono_deriv(const Monomial& mo, const CVec& z, const std::vector<int>& d) {
  cd r = mo.coeff;
  for (size_t j = 0; j < mo.exp.size(); ++j) {
    int e = mo.exp[j];
    if (d[j] > e) return 0.0;
    for (int q = 0; q < d[j]; ++q) r *= double(e - q);
    r *= ipow(z(j), e - d[j]);
  }
  return r;
}

}  // namespace

Superpotential::Superpotential(int n, std::vector<Monomial> terms) : n_(n) {
  std::set<std::vector<int>> seen;
  for (auto& t : terms) {
    if ((int)t.exp.size() != n) throw Error(ErrorKind::InvalidModel, "monomial exponent length != n");
    for (int e : t.exp)
      if (e < 0) throw Error(ErrorKind::InvalidModel, "negative exponent");
    if (!seen.insert(t.exp).second) throw Error(ErrorKind::InvalidModel, "duplicate exponent vector");
    terms_.push_back(t);
  }
}

cd Superpotential::value(const CVec& z) const {
  std::vector<int> d(n_, 0);
  cd s = 0.0;
  for (auto& t : terms_) s += mono_deriv(t, z, d);
  return s;
}

CVec Superpotential::gradient(const CVec& z) const {
  CVec g = CVec::Zero(n_);
  std::vector<int> d(n_, 0);
  for (int j = 0; j < n_; ++j) {
    d[j] = 1;
    for (auto& t : terms_) g(j) += mono_deriv(t, z, d);
    d[j] = 0;
  }
  return g;
}

CMat Superpotential::hessian(const CVec& z) const {
  CMat h = CMat::Zero(n_, n_);
  std::vector<int> d(n_, 0);
  for (int i = 0; i < n_; ++i)
    for (int j = i; j < n_; ++j) {
      d[i] += 1;
      d[j] += 1;
      cd s = 0.0;
      for (auto& t : terms_) s += mono_deriv(t, z, d);
      h(i, j) = h(j, i) = s;
      d[i] -= 1;
      d[j] -= 1;
    }
  return h;
}

CVec Superpotential::third(const CVec& z, const CVec& u, const CVec& v) const {
  CVec r = CVec::Zero(n_);
  std::vector<int> d(n_, 0);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k) {
        if (u(j) == 0.0 || v(k) == 0.0) continue;
        d[i] += 1;
        d[j] += 1;
        d[k] += 1;
        cd s = 0.0;
        for (auto& t : terms_) s += mono_deriv(t, z, d);
        r(i) += s * u(j) * v(k);
        d[i] -= 1;
        d[j] -= 1;
        d[k] -= 1;
      }
  return r;
}

// ---------------------------------------------------------------- model

LGModel::LGModel(std::string nm, Eigen::MatrixXi w, Superpotential sp, RVec d, RVec off)
    : name(std::move(nm)), n(sp.dim()), k((int)w.rows()), weights(std::move(w)), W(std::move(sp)),
      delta(std::move(d)), mu_offset(std::move(off)) {
  if (weights.cols() != n && k > 0) throw Error(ErrorKind::InvalidModel, "weight matrix must be k x n");
  if (k == 0) weights.resize(0, n);
  if (delta.size() == 0) delta = RVec::Zero(k);
  if (mu_offset.size() == 0) mu_offset = RVec::Zero(k);
  if (delta.size() != k || mu_offset.size() != k) throw Error(ErrorKind::InvalidModel, "delta/mu_offset size != k");
}

LGModel vortex_model() {
  Eigen::MatrixXi w(1, 1);
  w << 1;
  RVec d(1);
  d << 0.5;
  return LGModel("vortex", w, Superpotential(1, {}), d);
}

LGModel xy_model() {
  Eigen::MatrixXi w(1, 2);
  w << 1, -1;
  return LGModel("xy", w, Superpotential(2, {{{1, 1}, 1.0}}), RVec::Zero(1));
}

LGModel fundamental_model(double lambda) {
  Eigen::MatrixXi w(1, 3);
  w << 1, -1, 0;
  std::vector<Monomial> t{{{1, 1, 1}, 1.0}};
  if (lambda != 0.0) t.push_back({{0, 0, 1}, -lambda});
  LGModel m("fundamental", w, Superpotential(3, t), RVec::Zero(1));
  return m;
}

LGModel quadratic_model(double c) {
  return LGModel("quadratic", Eigen::MatrixXi(0, 1), Superpotential(1, {{{2}, c}}), RVec());
}

LGModel cubic_model() {
  return LGModel("cubic", Eigen::MatrixXi(0, 1), Superpotential(1, {{{3}, 1.0 / 3.0}, {{1}, -1.0}}), RVec());
}

LGModel preset(const std::string& name, double lambda) {
  if (name == "vortex") return vortex_model();
  if (name == "xy") return xy_model();
  if (name == "fundamental") return fundamental_model(lambda);
  if (name == "quadratic") return quadratic_model();
  if (name == "cubic") return cubic_model();
  throw Error(ErrorKind::ConfigError, "unknown preset '" + name + "'");
}

LGModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.contains("preset")) return preset(j.at("preset").get<std::string>(), j.value("lambda", 1.0));
    int n = j.at("n").get<int>();
    std::vector<std::vector<int>> wrows = j.value("weights", std::vector<std::vector<int>>{});
    Eigen::MatrixXi w((int)wrows.size(), n);
    for (size_t a = 0; a < wrows.size(); ++a) {
      if ((int)wrows[a].size() != n) throw Error(ErrorKind::ConfigError, "weight row length != n");
      for (int c = 0; c < n; ++c) w(a, c) = wrows[a][c];
    }
    std::vector<Monomial> terms;
    for (auto& t : j.value("W", nlohmann::json::array())) {
      terms.push_back({t.at("exp").get<std::vector<int>>(), cd(t.value("re", 0.0), t.value("im", 0.0))});
    }
    auto vec = [&](const char* key) {
      std::vector<double> v = j.value(key, std::vector<double>{});
      RVec r(v.size());
      for (size_t i = 0; i < v.size(); ++i) r(i) = v[i];
      return r;
    };
    return LGModel(j.value("name", std::string("custom")), w, Superpotential(n, terms), vec("delta"), vec("mu_offset"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("model json: ") + e.what());
  }
}

nlohmann::json model_to_json(const LGModel& m) {
  nlohmann::json j;
  j["name"] = m.name;
  j["n"] = m.n;
  auto w = nlohmann::json::array();
  for (int a = 0; a < m.k; ++a) {
    std::vector<int> row(m.n);
    for (int c = 0; c < m.n; ++c) row[c] = m.weights(a, c);
    w.push_back(row);
  }
  j["weights"] = w;
  auto W = nlohmann::json::array();
  for (auto& t : m.W.terms()) W.push_back({{"exp", t.exp}, {"re", t.coeff.real()}, {"im", t.coeff.imag()}});
  j["W"] = W;
  j["delta"] = std::vector<double>(m.delta.data(), m.delta.data() + m.k);
  j["mu_offset"] = std::vector<double>(m.mu_offset.data(), m.mu_offset.data() + m.k);
  return j;
}

std::string model_hash(const LGModel& m) {
  std::string s = model_to_json(m).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return buf;
}

std::vector<std::string> validate_model(const LGModel& m) {
  std::vector<std::string> out;
  if (m.n < 1) out.push_back("n must be >= 1");
  if (m.k < 0) out.push_back("k must be >= 0");
  for (size_t t = 0; t < m.W.terms().size(); ++t) {
    const auto& e = m.W.terms()[t].exp;
    for (int a = 0; a < m.k; ++a) {
      long s = 0;
      for (int j = 0; j < m.n; ++j) s += long(m.weights(a, j)) * e[j];
      if (s != 0)
        out.push_back("monomial " + std::to_string(t) + " has weight " + std::to_string(s) + " under generator " +
                      std::to_string(a));
    }
  }
  return out;
}

void require_valid(const LGModel& m) {
  auto v = validate_model(m);
  if (!v.empty()) throw Error(ErrorKind::InvalidModel, v.front());
}

// ---------------------------------------------------------------- pointwise calculus

cd eval_W(const LGModel& m, const CVec& z) { return m.W.value(z); }
double eval_L(const LGModel& m, const CVec& z) { return m.W.value(z).real(); }
double eval_H(const LGModel& m, const CVec& z) { return m.W.value(z).imag(); }

CVec grad_L(const LGModel& m, const CVec& z) { return m.W.gradient(z).conjugate(); }

CVec grad_H(const LGModel& m, const CVec& z) { return cd(0, 1) * grad_L(m, z); }

CVec hess_L_apply(const LGModel& m, const CVec& z, const CVec& v) {
  return m.W.hessian(z).conjugate() * v.conjugate();
}

CVec hess_H_apply(const LGModel& m, const CVec& z, const CVec& v) { return cd(0, 1) * hess_L_apply(m, z, v); }

CVec dhess_H_apply(const LGModel& m, const CVec& z, const CVec& T, const CVec& v) {
  return cd(0, 1) * m.W.third(z, T, v).conjugate();
}

RMat hess_L_real(const LGModel& m, const CVec& z) {
  CMat c = m.W.hessian(z).conjugate();
  RMat R(2 * m.n, 2 * m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) {
      double a = c(i, j).real(), b = c(i, j).imag();
      R(2 * i, 2 * j) = a;
      R(2 * i, 2 * j + 1) = b;
      R(2 * i + 1, 2 * j) = b;
      R(2 * i + 1, 2 * j + 1) = -a;
    }
  return R;
}

RVec moment_map(const LGModel& m, const CVec& z) {
  RVec mu = m.mu_offset;
  for (int a = 0; a < m.k; ++a)
    for (int j = 0; j < m.n; ++j) mu(a) += 0.5 * m.weights(a, j) * std::norm(z(j));
  return mu;
}

namespace {
// sum_a xi_a w_aj for each j.
RVec weight_combo(const LGModel& m, const RVec& xi) {
  RVec c = RVec::Zero(m.n);
  for (int a = 0; a < m.k; ++a)
    for (int j = 0; j < m.n; ++j) c(j) += xi(a) * m.weights(a, j);
  return c;
}
}  // namespace

CVec infinitesimal_action(const LGModel& m, const CVec& z, const RVec& xi) {
  RVec c = weight_combo(m, xi);
  CVec r(m.n);
  for (int j = 0; j < m.n; ++j) r(j) = cd(0, c(j)) * z(j);
  return r;
}

CVec grad_mu_pair(const LGModel& m, const CVec& z, const RVec& xi) {
  RVec c = weight_combo(m, xi);
  return c.cast<cd>().cwiseProduct(z);
}

CVec hess_mu_pair(const LGModel& m, const CVec&, const CVec& v, const RVec& xi) {
  RVec c = weight_combo(m, xi);
  return c.cast<cd>().cwiseProduct(v);
}

RVec mu_pairing(const LGModel& m, const CVec& z, const CVec& v) {
  RVec r(m.k);
  for (int a = 0; a < m.k; ++a) {
    double s = 0;
    for (int j = 0; j < m.n; ++j) s += m.weights(a, j) * (std::conj(z(j)) * v(j)).real();
    r(a) = s;
  }
  return r;
}

DOperatorValue d_operator(const LGModel& m, const CVec& z, const CVec& v) {
  return {hess_H_apply(m, z, v), mu_pairing(m, z, v), mu_pairing(m, z, cd(0, 1) * v)};
}

RMat d_operator_real(const LGModel& m, const CVec& z) {
  const int n = m.n, k = m.k;
  RMat D = RMat::Zero(2 * n + 2 * k, 2 * n);
  for (int c = 0; c < 2 * n; ++c) {
    RVec e = RVec::Zero(2 * n);
    e(c) = 1.0;
    auto d = d_operator(m, z, to_complex(e));
    D.block(0, c, 2 * n, 1) = to_real(d.hessH);
    D.block(2 * n, c, k, 1) = d.pair;
    D.block(2 * n + k, c, k, 1) = d.pairJ;
  }
  return D;
}

double IdentityReport::max_residual() const { return *std::max_element(residual, residual + 6); }

IdentityReport identity_suite(const LGModel& m, const std::vector<CVec>& points, const std::vector<RVec>& lie,
                              const std::vector<CVec>& tangents) {
  IdentityReport rep;
  const cd I(0, 1);
  // grad H from Im W directly: H = Re(-i W), so grad H = conj(d(-iW)).
  auto gradH_direct = [&](const CVec& z) { return CVec((-I * m.W.gradient(z)).conjugate()); };
  auto hessH_direct = [&](const CVec& z, const CVec& v) {
    return CVec((-I * m.W.hessian(z)).conjugate() * v.conjugate());
  };
  auto upd = [&](int i, double r) { rep.residual[i] = std::max(rep.residual[i], r); };
  for (const auto& z : points) {
    CVec gL = grad_L(m, z), gH = gradH_direct(z);
    upd(0, (gL + I * gH).cwiseAbs().maxCoeff());
    for (const auto& v : tangents) {
      upd(1, (hess_L_apply(m, z, v) + I * hessH_direct(z, v)).cwiseAbs().maxCoeff());
      upd(2, (I * hessH_direct(z, v) + hessH_direct(z, I * v)).cwiseAbs().maxCoeff());
      for (const auto& xi : lie)
        upd(3, (I * hess_mu_pair(m, z, v, xi) - hess_mu_pair(m, z, I * v, xi)).cwiseAbs().maxCoeff());
    }
    for (int a = 0; a < m.k; ++a) {
      RVec e = RVec::Zero(m.k);
      e(a) = 1.0;
      CVec gm = grad_mu_pair(m, z, e);
      upd(4, std::abs(rdot(gm, gH)));
      upd(4, std::abs(rdot(I * gm, gH)));
      for (const auto& xi : lie) upd(5, std::abs(rdot(gm, infinitesimal_action(m, z, xi))));
    }
  }
  return rep;
}

CVec complex_gauge_act(const LGModel& m, const RVec& alpha, const RVec& theta, const CVec& z) {
  RVec ca = weight_combo(m, alpha), ct = weight_combo(m, theta);
  CVec r(m.n);
  for (int j = 0; j < m.n; ++j) r(j) = std::exp(cd(ca(j), ct(j))) * z(j);
  return r;
}

CVec gauge_act(const LGModel& m, const RVec& theta, const CVec& z) {
  RVec ct = weight_combo(m, theta);
  CVec r(m.n);
  for (int j = 0; j < m.n; ++j) r(j) = std::polar(1.0, ct(j)) * z(j);
  return r;
}

CVec real_gauge_act(const LGModel& m, const RVec& alpha, const CVec& z) {
  RVec ca = weight_combo(m, alpha);
  CVec r(m.n);
  for (int j = 0; j < m.n; ++j) r(j) = std::exp(ca(j)) * z(j);
  return r;
}

}  // namespace glg
