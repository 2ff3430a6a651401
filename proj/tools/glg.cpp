#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "glg/stability.hpp"
#include "glg/suite.hpp"
#include "glg/surface_reduction.hpp"
#include "glg/vortex.hpp"

using namespace glg;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string out = ".";
  std::string model = "fundamental";
  double lambda = 1.0;
};

LGModel load_model(const Common& c) {
  if (fs::exists(c.model)) {
    std::ifstream f(c.model);
    nlohmann::json j;
    try {
      f >> j;
    } catch (const std::exception& e) {
      throw Error(ErrorKind::ConfigError, "cannot parse model file " + c.model + ": " + e.what());
    }
    LGModel m;
    try {
      m = model_from_json(j);
      require_valid(m);
    } catch (const Error& e) {
      throw Error(ErrorKind::ConfigError, e.what());
    }
    return m;
  }
  try {
    return preset(c.model, c.lambda);
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigError, "unknown model '" + c.model + "' (preset name or JSON path)");
  }
}

CVec complex_list(const std::vector<double>& v, int n, const char* what) {
  if ((int)v.size() != 2 * n)
    throw Error(ErrorKind::ConfigError, std::string(what) + " needs " + std::to_string(2 * n) + " numbers (re im ...)");
  CVec z(n);
  for (int j = 0; j < n; ++j) z(j) = cd(v[2 * j], v[2 * j + 1]);
  return z;
}

std::vector<cd> complex_vector(const std::vector<double>& v, const char* what) {
  if (v.size() % 2) throw Error(ErrorKind::ConfigError, std::string(what) + " needs re/im pairs");
  std::vector<cd> z;
  for (size_t j = 0; j < v.size(); j += 2) z.emplace_back(v[j], v[j + 1]);
  return z;
}

ojson cjson(const CVec& z) {
  ojson a = ojson::array();
  for (Eigen::Index j = 0; j < z.size(); ++j) a.push_back({z(j).real(), z(j).imag()});
  return a;
}

std::string path_in(const Common& c, const std::string& file) { return (fs::path(c.out) / file).string(); }

// Fills the reproducibility keys, writes the report and prints the summary line.
int emit(const Common& c, const std::string& cmd, ExperimentReport rep, const LGModel* m = nullptr) {
  if (!rep.inputs.contains("model_hash")) rep.inputs["model_hash"] = m ? ojson(model_hash(*m)) : ojson(nullptr);
  if (!rep.inputs.contains("grid")) rep.inputs["grid"] = nullptr;
  if (!rep.inputs.contains("seed")) rep.inputs["seed"] = nullptr;
  fs::create_directories(c.out);
  write_atomic(path_in(c, cmd + ".json"), rep.to_json().dump(2) + "\n");
  bool pass = rep.passed();
  std::cout << (pass ? "PASS " : "FAIL ") << cmd;
  if (!pass) {
    std::cout << ":";
    for (auto& [k, v] : rep.flags.items())
      if (!v.get<bool>()) std::cout << " " << k;
  }
  std::cout << " -> " << path_in(c, cmd + ".json") << "\n";
  return pass ? 0 : 2;
}

// Appends "--key value" from a JSON parameter file for keys not given on the command line.
std::vector<std::string> expand_params(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  for (size_t i = 1; i < args.size(); ++i) {
    if (args[i] != "--params") continue;
    if (i + 1 >= args.size()) throw Error(ErrorKind::ConfigError, "--params needs a file");
    std::string file = args[i + 1];
    args.erase(args.begin() + i, args.begin() + i + 2);
    std::ifstream f(file);
    if (!f) throw Error(ErrorKind::ConfigError, "cannot open " + file);
    nlohmann::json j;
    try {
      f >> j;
    } catch (const std::exception& e) {
      throw Error(ErrorKind::ConfigError, "cannot parse " + file + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::ConfigError, "parameter file must hold a JSON object");
    std::set<std::string> given(args.begin(), args.end());
    auto scalar = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    for (auto& [k, v] : j.items()) {
      std::string flag = "--" + k;
      if (given.count(flag)) continue;
      if (v.is_boolean()) {
        if (v.get<bool>()) args.push_back(flag);
        continue;
      }
      args.push_back(flag);
      if (v.is_array())
        for (auto& e : v) args.push_back(scalar(e));
      else
        args.push_back(scalar(v));
    }
    break;
  }
  return args;
}

int threads_from_env() {
  const char* s = std::getenv("GLG_THREADS");
  if (!s) return 1;
  char* end = nullptr;
  long n = std::strtol(s, &end, 10);
  if (!*s || *end || n < 1) throw Error(ErrorKind::ConfigError, "GLG_THREADS must be a positive integer");
  return (int)n;
}

GridKind grid_kind(const std::string& s) {
  if (s == "plane") return GridKind::plane;
  if (s == "half-plane") return GridKind::half_plane;
  return GridKind::strip;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments for finite-dimensional gauged Landau-Ginzburg models"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  Common c;
  app.add_option("--out", c.out, "Output directory for reports and CSV files")->capture_default_str();
  app.add_option("--model", c.model, "Preset (vortex, xy, fundamental, quadratic, cubic) or model JSON path")
      ->capture_default_str();
  app.add_option("--lambda", c.lambda, "Parameter of the fundamental preset")->capture_default_str();
  app.footer(
      "Any subcommand accepts --params FILE: a JSON object whose keys are option names without dashes.\n"
      "Exit codes: 0 pass, 2 experiment failed, 1 usage or configuration error. GLG_THREADS caps workers.");

  std::function<int()> action;

  // check-identities
  auto* ci = app.add_subcommand("check-identities", "Pointwise identity suite at random points");
  int ci_points = 100;
  std::uint64_t ci_seed = 1;
  ci->add_option("--points", ci_points)->capture_default_str();
  ci->add_option("--seed", ci_seed)->capture_default_str();
  ci->callback([&] {
    action = [&] {
      auto m = load_model(c);
      std::mt19937_64 rng(ci_seed);
      auto rp = [&](int n) {
        CVec z(n);
        for (int j = 0; j < n; ++j) {
          double re = uniform_pm1(rng), im = uniform_pm1(rng);
          z(j) = cd(re, im);
        }
        return z;
      };
      std::vector<CVec> pts, tans;
      std::vector<RVec> lie;
      for (int i = 0; i < ci_points; ++i) pts.push_back(rp(m.n));
      for (int i = 0; i < 3; ++i) {
        tans.push_back(rp(m.n));
        RVec x(m.k);
        for (int a = 0; a < m.k; ++a) x(a) = uniform_pm1(rng);
        lie.push_back(x);
      }
      auto ir = identity_suite(m, pts, lie, tans);
      ExperimentReport rep;
      rep.name = "check_identities";
      rep.inputs = {{"points", ci_points}, {"seed", ci_seed}};
      rep.set("residuals", std::vector<double>(ir.residual, ir.residual + 6));
      rep.set("max_residual", ir.max_residual());
      rep.flag("below_1e-10", ir.max_residual() < 1e-10);
      return emit(c, "check-identities", rep, &m);
    };
  });

  // stability
  auto* st = app.add_subcommand("stability", "Critical orbits, Morse-Bott check and spectral constants");
  std::vector<double> st_point;
  int st_seeds = 8;
  std::uint64_t st_seed = 1;
  st->add_option("--point", st_point, "Critical point as re im pairs (skips the search)");
  st->add_option("--seeds", st_seeds)->capture_default_str();
  st->add_option("--seed", st_seed)->capture_default_str();
  st->callback([&] {
    action = [&] {
      auto m = load_model(c);
      std::vector<CVec> pts;
      ExperimentReport rep;
      rep.name = "stability";
      rep.inputs = {{"seed", st_seed}, {"seeds", st_seeds}};
      int failed = 0;
      if (!st_point.empty()) {
        pts.push_back(complex_list(st_point, m.n, "--point"));
        rep.inputs["point"] = cjson(pts[0]);
      } else {
        std::mt19937_64 rng(st_seed);
        std::vector<CVec> seeds;
        for (int i = 0; i < st_seeds; ++i) {
          CVec z(m.n);
          for (int j = 0; j < m.n; ++j) {
            double re = uniform_pm1(rng), im = uniform_pm1(rng);
            z(j) = 1.5 * cd(re, im);
          }
          seeds.push_back(z);
        }
        auto cs = find_critical_points(m, seeds);
        for (auto& p : cs.points) pts.push_back(p.z);
        failed = (int)cs.failed_seeds.size();
      }
      ojson rows = ojson::array();
      std::vector<CVec> orbits;  // slice representatives of free Morse-Bott orbits
      bool all_mb = true;
      for (auto& z : pts) {
        ojson row;
        row["point"] = cjson(z);
        try {
          auto mb = morse_bott_check(m, z);
          row["morse_bott"] = mb.ok;
          row["hess_kernel_dim"] = mb.kernel_dim;
          row["orbit_dim"] = mb.orbit_dim;
          all_mb = all_mb && mb.ok;
          CVec q = z;
          if (m.k > 0) {
            q = solve_delta_slice(m, z, m.delta).point;
            row["slice_point"] = cjson(q);
          }
          auto sp = spectral_gap(m, q);
          auto eh = assemble_extended_hessian(m, q);
          row["eigenvalues"] = sp.eigenvalues;
          row["lambda1"] = sp.lambda1;
          row["zeta1"] = sp.zeta1 ? ojson(*sp.zeta1) : ojson(nullptr);
          row["zeta2"] = sp.zeta2;
          row["zeta"] = sp.zeta;
          row["pairing_error"] = sp.pairing_error;
          row["sigma_square_residual"] = eh.sigma_square_residual;
          row["anticommutator_residual"] = eh.anticommutator_residual;
          if (mb.ok && sp.lambda1 > 1e-8) {
            bool seen = false;
            for (auto& o : orbits) seen = seen || same_real_orbit(m, o, q, 1e-6);
            if (!seen) orbits.push_back(q);
          }
        } catch (const Error& e) {
          row["error"] = e.what();
          all_mb = false;
        }
        rows.push_back(row);
      }
      rep.set("critical_points", rows);
      rep.set("failed_seeds", failed);
      rep.flag("critical_point_found", !pts.empty());
      rep.flag("morse_bott_everywhere", all_mb);
      rep.set("distinct_free_orbits", (int)orbits.size());
      rep.flag("stable", all_mb && orbits.size() == 1);
      return emit(c, "stability", rep, &m);
    };
  });

  // solve-witten
  auto* sw = app.add_subcommand("solve-witten", "Newton solve of the gauged Witten equations on a grid");
  std::string sw_kind = "strip", sw_gauge = "coulomb", sw_linear = "automatic", sw_method = "newton";
  std::vector<double> sw_t{-2, 2}, sw_s{0, 2};
  int sw_nodes = 41, sw_maxit = 60;
  double sw_amp = 0.1, sw_tol = 1e-10;
  std::uint64_t sw_seed = 3;
  std::string sw_snapshot;
  bool sw_csv = false;
  sw->add_option("--grid-kind", sw_kind)->check(CLI::IsMember({"plane", "half-plane", "strip"}))->capture_default_str();
  sw->add_option("--t-range", sw_t)->expected(2)->capture_default_str();
  sw->add_option("--s-range", sw_s)->expected(2)->capture_default_str();
  sw->add_option("--nodes", sw_nodes, "Nodes along t")->capture_default_str();
  sw->add_option("--amplitude", sw_amp, "Size of the random initial perturbation")->capture_default_str();
  sw->add_option("--seed", sw_seed)->capture_default_str();
  sw->add_option("--method", sw_method)->check(CLI::IsMember({"newton", "descent"}))->capture_default_str();
  sw->add_option("--gauge", sw_gauge)->check(CLI::IsMember({"coulomb", "temporal", "none"}))->capture_default_str();
  sw->add_option("--linear", sw_linear)->check(CLI::IsMember({"automatic", "direct", "iterative"}))->capture_default_str();
  sw->add_option("--tol", sw_tol)->capture_default_str();
  sw->add_option("--max-iter", sw_maxit)->capture_default_str();
  sw->add_option("--snapshot", sw_snapshot, "Binary field snapshot file name (inside --out)");
  sw->add_flag("--csv", sw_csv, "Write the energy density CSV");
  sw->callback([&] {
    action = [&] {
      auto m = load_model(c);
      auto g = Grid2D::make(grid_kind(sw_kind), sw_t[0], sw_t[1], sw_s[0], sw_s[1], sw_nodes);
      CVec q = slice_critical_point(m);
      auto bnd = FieldConfig::constant(m, g, q);
      auto init = random_smooth_config(m, q, g, sw_seed, sw_amp);
      SolveOptions o;
      o.method = sw_method == "newton" ? SolveMethod::newton : SolveMethod::descent;
      o.gauge_fix = sw_gauge == "coulomb" ? GaugeFix::coulomb : sw_gauge == "temporal" ? GaugeFix::temporal : GaugeFix::none;
      o.linear = sw_linear == "direct"      ? LinearSolver::direct
                 : sw_linear == "iterative" ? LinearSolver::iterative
                                            : LinearSolver::automatic;
      o.tol = sw_tol;
      o.max_iter = sw_maxit;
      auto r = solve_witten(m, g, bnd, init, o);
      r.report.inputs["seed"] = sw_seed;
      r.report.inputs["amplitude"] = sw_amp;
      r.report.set("max_deviation_from_constant", (r.cfg.P - bnd.P).cwiseAbs().maxCoeff());
      fs::create_directories(c.out);
      if (!sw_snapshot.empty()) write_field_snapshot(path_in(c, sw_snapshot), m, g, r.cfg);
      if (sw_csv) write_density_csv(path_in(c, "solve-witten_density.csv"), g, energy_density(m, g, r.cfg));
      return emit(c, "solve-witten", r.report, &m);
    };
  });

  // triviality
  auto* tr = app.add_subcommand("triviality", "Point-like solutions via the scalar reduction on a disc");
  int tr_grid = 129, tr_seeds = 10;
  double tr_radius = 10, tr_amp = 1.0, tr_tol = 1e-13;
  std::uint64_t tr_seed = 42;
  tr->add_option("--grid", tr_grid, "Nodes per side")->capture_default_str();
  tr->add_option("--radius", tr_radius)->capture_default_str();
  tr->add_option("--seeds", tr_seeds, "Number of random initializations")->capture_default_str();
  tr->add_option("--seed", tr_seed)->capture_default_str();
  tr->add_option("--amplitude", tr_amp)->capture_default_str();
  tr->add_option("--tol", tr_tol)->capture_default_str();
  tr->callback([&] {
    action = [&] {
      auto m = load_model(c);
      if (tr_amp > 1.0 || tr_amp < 0) throw Error(ErrorKind::ConfigError, "--amplitude must lie in [0, 1]");
      CVec q = slice_critical_point(m);
      auto g = Grid2D::square(tr_radius, tr_grid);
      auto inits = random_inits(m.k, g, tr_seeds, tr_seed, tr_amp);
      auto rep = triviality_experiment(m, q, g, tr_radius, inits, tr_tol);
      rep.inputs["seed"] = tr_seed;
      rep.inputs["amplitude"] = tr_amp;
      return emit(c, "triviality", rep, &m);
    };
  });

  // decay
  auto* de = app.add_subcommand("decay", "Exponential decay on a half-strip against the spectral gap");
  DecayOptions de_o;
  std::vector<double> de_scan;
  bool de_csv = false;
  de->add_option("--amplitude", de_o.amplitude)->capture_default_str();
  de->add_option("--t-half", de_o.t_half)->capture_default_str();
  de->add_option("--length", de_o.S, "Strip length S")->capture_default_str();
  de->set_help_flag("--help", "Print this help message and exit");
  de->add_option("--h", de_o.h, "Grid spacing")->capture_default_str();
  de->add_option("--s0", de_o.s0, "Envelope shift")->capture_default_str();
  de->add_option("--scan", de_scan, "Amplitudes for a threshold scan");
  de->add_flag("--csv", de_csv, "Write the energy density CSV");
  de->callback([&] {
    action = [&] {
      auto m = load_model(c);
      CVec q = slice_critical_point(m);
      if (!de_scan.empty()) return emit(c, "decay", decay_amplitude_scan(m, q, de_o, de_scan), &m);
      auto r = decay_experiment(m, q, de_o);
      if (de_csv) {
        fs::create_directories(c.out);
        write_density_csv(path_in(c, "decay_density.csv"), r.grid, r.U);
      }
      return emit(c, "decay", r.report, &m);
    };
  });

  // bochner / holomorphy share their inputs
  struct IdentityArgs {
    std::string target = "vortex";
    std::vector<double> levels;
    double margin = -1;
    int n = 1;
    std::uint64_t seed = 7;
  };
  IdentityArgs bo, ho;
  auto identity_opts = [](CLI::App* s, IdentityArgs& a) {
    s->add_option("--target", a.target, "vortex, strip or control (random non-solution)")
        ->check(CLI::IsMember({"vortex", "strip", "control"}))
        ->capture_default_str();
    s->add_option("--levels", a.levels, "vortex: nodes per side (121 241); strip/control: spacings (0.1 0.05)");
    s->add_option("--margin", a.margin, "Excluded edge width (default 1.0 vortex, 0.5 strip)");
    s->add_option("--n", a.n, "Vortex winding number")->capture_default_str();
    s->add_option("--seed", a.seed, "Seed of the control configuration")->capture_default_str();
  };
  auto identity_levels = [&](const IdentityArgs& a, LGModel& m, IdentityOptions& io) {
    std::vector<IdentityLevel> L;
    if (a.target == "vortex") {
      m = vortex_model();
      auto p = solve_radial_vortex(a.n);
      std::vector<double> lv = a.levels.empty() ? std::vector<double>{121, 241} : a.levels;
      for (double nodes : lv) {
        auto g = Grid2D::square(6.0, (int)nodes);
        L.push_back({g, embed_vortex(p, g)});
      }
      io.margin = a.margin >= 0 ? a.margin : 1.0;
      return L;
    }
    auto base = load_model(c);
    CVec q = slice_critical_point(base);
    std::vector<double> lv = a.levels.empty() ? std::vector<double>{0.1, 0.05} : a.levels;
    for (double h : lv) {
      auto b = flowline_strip(base, q, h);
      m = b.model;
      L.push_back({b.grid, a.target == "strip" ? b.solved.cfg : random_smooth_config(b.model, q, b.grid, a.seed)});
    }
    io.margin = a.margin >= 0 ? a.margin : 0.5;
    io.require_solution = a.target == "strip";
    return L;
  };
  // On a non-solution the identities must visibly fail; that is the pass condition.
  auto control_verdict = [](ExperimentReport& rep, const char* key) {
    double lo = INFINITY;
    for (auto& v : rep.scalars[key]) lo = std::min(lo, v.get<double>());
    rep.flags = ojson::object();
    rep.flag("control_residual_order_one", lo >= 0.1);
  };
  auto* bc = app.add_subcommand("bochner", "Bochner identities under grid refinement");
  identity_opts(bc, bo);
  bc->callback([&] {
    action = [&] {
      LGModel m;
      IdentityOptions io;
      auto L = identity_levels(bo, m, io);
      auto rep = bochner_verify(m, L, io);
      rep.inputs["target"] = bo.target;
      if (bo.target == "control") {
        rep.inputs["seed"] = bo.seed;
        control_verdict(rep, "laplacian_identity_residual");
      }
      return emit(c, "bochner", rep, &m);
    };
  });
  auto* hc = app.add_subcommand("holomorphy", "Holomorphy identity under grid refinement");
  identity_opts(hc, ho);
  hc->callback([&] {
    action = [&] {
      LGModel m;
      IdentityOptions io;
      auto L = identity_levels(ho, m, io);
      auto rep = holomorphy_check(m, L, io);
      rep.inputs["target"] = ho.target;
      if (ho.target == "control") {
        rep.inputs["seed"] = ho.seed;
        control_verdict(rep, "residual");
      }
      return emit(c, "holomorphy", rep, &m);
    };
  });

  // action-check
  auto* ac = app.add_subcommand("action-check", "Action gradient against finite differences; gauge invariance");
  int ac_nodes = 2001, ac_dirs = 3;
  double ac_len = 10;
  std::uint64_t ac_seed = 5;
  ac->add_option("--nodes", ac_nodes, "Odd node count")->capture_default_str();
  ac->add_option("--length", ac_len)->capture_default_str();
  ac->add_option("--directions", ac_dirs)->capture_default_str();
  ac->add_option("--seed", ac_seed)->capture_default_str();
  ac->callback([&] {
    action = [&] {
      auto m = load_model(c);
      CVec q = slice_critical_point(m);
      auto rep = action_gradient_check(m, perturbed_path(m, q, ac_seed, ac_nodes, ac_len), m.delta, ac_seed, ac_dirs);
      return emit(c, "action-check", rep, &m);
    };
  });

  // flowline
  auto* fl = app.add_subcommand("flowline", "Downward gradient flow of L with conservation of H");
  std::vector<double> fl_point;
  double fl_smax = 5, fl_dt = 1e-3, fl_eps = 1e-4;
  std::uint64_t fl_seed = 11;
  bool fl_csv = false;
  fl->add_option("--point", fl_point, "Start point as re im pairs");
  fl->add_option("--eps", fl_eps, "Without --point: distance of the start from a critical point")->capture_default_str();
  fl->add_option("--seed", fl_seed)->capture_default_str();
  fl->add_option("--s-max", fl_smax)->capture_default_str();
  fl->add_option("--dt", fl_dt)->capture_default_str();
  fl->add_flag("--csv", fl_csv, "Write the trajectory CSV");
  fl->callback([&] {
    action = [&] {
      auto m = load_model(c);
      CVec p0;
      if (!fl_point.empty()) {
        p0 = complex_list(fl_point, m.n, "--point");
      } else {
        std::mt19937_64 rng(fl_seed);
        CVec d(m.n);
        for (int j = 0; j < m.n; ++j) {
          double re = uniform_pm1(rng), im = uniform_pm1(rng);
          d(j) = cd(re, im);
        }
        p0 = slice_critical_point(m) + fl_eps * d;
      }
      auto f = gradient_flowline(m, p0, fl_smax, fl_dt);
      f.report.inputs["p0"] = cjson(p0);
      f.report.inputs["seed"] = fl_point.empty() ? ojson(fl_seed) : ojson(nullptr);
      if (fl_csv) {
        std::string out = "s,L,H";
        for (int j = 0; j < m.n; ++j) out += ",re_p" + std::to_string(j) + ",im_p" + std::to_string(j);
        out += "\n";
        char buf[128];
        for (size_t i = 0; i < f.s.size(); ++i) {
          std::snprintf(buf, sizeof buf, "%.10g,%.17g,%.17g", f.s[i], eval_L(m, f.p[i]), eval_H(m, f.p[i]));
          out += buf;
          for (int j = 0; j < m.n; ++j) {
            std::snprintf(buf, sizeof buf, ",%.17g,%.17g", f.p[i](j).real(), f.p[i](j).imag());
            out += buf;
          }
          out += "\n";
        }
        fs::create_directories(c.out);
        write_atomic(path_in(c, "flowline.csv"), out);
      }
      return emit(c, "flowline", f.report, &m);
    };
  });

  // vortex
  auto* vx = app.add_subcommand("vortex", "Radial n-vortex: energy quantization and decay");
  int vx_n = 1, vx_nodes = 8000, vx_grid = 0;
  double vx_rmin = 1e-3, vx_rmax = 20, vx_lo = 6, vx_hi = 10;
  vx->add_option("--n", vx_n)->capture_default_str();
  vx->add_option("--rmin", vx_rmin)->capture_default_str();
  vx->add_option("--rmax", vx_rmax)->capture_default_str();
  vx->add_option("--nodes", vx_nodes, "Radial nodes")->capture_default_str();
  vx->add_option("--fit-lo", vx_lo)->capture_default_str();
  vx->add_option("--fit-hi", vx_hi)->capture_default_str();
  vx->add_option("--grid-check", vx_grid, "Also embed on a square grid of this many nodes (radius 12)");
  vx->callback([&] {
    action = [&] {
      auto vm = vortex_model();
      auto p = solve_radial_vortex(vx_n, vx_rmin, vx_rmax, vx_nodes);
      ExperimentReport rep = vortex_decay_fit(p, vx_lo, vx_hi);
      rep.name = "vortex";
      rep.inputs["nodes"] = vx_nodes;
      rep.inputs["r_min"] = vx_rmin;
      double E = vortex_energy(p);
      rep.set("energy", E);
      rep.set("ode_residual", p.residual);
      if (vx_n > 0) {
        double rel = std::abs(E - 2 * M_PI * vx_n) / (2 * M_PI * vx_n);
        rep.set("energy_relative_error", rel);
        rep.flag("energy_quantized", rel < 0.01);
      } else {
        rep.flag("vacuum_energy_zero", E == 0.0);
      }
      if (vx_grid > 0) {
        auto g = Grid2D::square(12.0, vx_grid);
        auto cfg = embed_vortex(p, g);
        rep.inputs["grid"] = g.to_json();
        rep.set("grid_energy", vortex_energy(g, cfg));
        rep.set("grid_residual_l2", residual(vm, g, cfg).l2_norm);
      }
      std::string out = "r,u,abs_P,half_one_minus_P2\n";
      char buf[128];
      for (size_t i = 0; i < p.r.size(); ++i) {
        double P2 = std::exp(p.u[i]);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", p.r[i], p.u[i], std::sqrt(P2), 0.5 * (1 - P2));
        out += buf;
      }
      fs::create_directories(c.out);
      write_atomic(path_in(c, "vortex_profile.csv"), out);
      return emit(c, "vortex", rep, &vm);
    };
  });

  // kw-solve
  auto* kw = app.add_subcommand("kw-solve", "Kazdan-Warner type equation on a periodic torus");
  int kw_nx = 64, kw_inits = 5;
  std::vector<double> kw_periods{1, 1};
  std::string kw_weights = "smooth", kw_rhs = "smooth";
  double kw_value = 0.7;
  std::uint64_t kw_seed = 808;
  kw->add_option("--nx", kw_nx)->capture_default_str();
  kw->add_option("--periods", kw_periods)->expected(2)->capture_default_str();
  kw->add_option("--weights", kw_weights, "smooth or constant (w+ = w- = 1)")
      ->check(CLI::IsMember({"smooth", "constant"}))
      ->capture_default_str();
  kw->add_option("--rhs", kw_rhs, "zero, constant (--value) or smooth")
      ->check(CLI::IsMember({"zero", "constant", "smooth"}))
      ->capture_default_str();
  kw->add_option("--value", kw_value)->capture_default_str();
  kw->add_option("--inits", kw_inits, "Random initializations for the uniqueness check")->capture_default_str();
  kw->add_option("--seed", kw_seed)->capture_default_str();
  kw->callback([&] {
    action = [&] {
      auto g = TorusGrid::make(kw_periods[0], kw_periods[1], kw_nx);
      WeightFields w{RVec::Ones(g.size()), RVec::Ones(g.size())};
      RVec rhs = RVec::Zero(g.size());
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          double x = i * g.h / g.Lx, y = j * g.h / g.Ly;
          int o = g.idx(i, j);
          if (kw_weights == "smooth") {
            w.w_plus(o) = 1.0 + 0.5 * std::sin(2 * M_PI * x) * std::cos(2 * M_PI * y);
            w.w_minus(o) = 0.8 + 0.3 * std::cos(2 * M_PI * x + 1.0);
          }
          if (kw_rhs == "constant") rhs(o) = kw_value;
          if (kw_rhs == "smooth") rhs(o) = 0.1 + 0.4 * std::cos(2 * M_PI * x) * std::sin(2 * M_PI * y);
        }
      auto r = kazdan_warner_solve(g, w, rhs);
      auto& rep = r.report;
      rep.inputs["weights"] = kw_weights;
      rep.inputs["rhs"] = kw_rhs;
      rep.inputs["seed"] = kw_seed;
      rep.inputs["grid"] = {{"nx", g.nx}, {"ny", g.ny}, {"periods", {g.Lx, g.Ly}}};
      std::mt19937_64 rng(kw_seed);
      double spread = 0;
      for (int t = 0; t < kw_inits; ++t) {
        RVec a0(g.size());
        for (int o = 0; o < g.size(); ++o) a0(o) = uniform_pm1(rng);
        spread = std::max(spread, (kazdan_warner_solve(g, w, rhs, &a0).alpha - r.alpha).cwiseAbs().maxCoeff());
      }
      rep.set("initialization_spread", spread);
      rep.flag("unique_across_inits", spread < 1e-8);
      if (kw_weights == "constant" && kw_rhs == "constant") {
        double e = (r.alpha.array() - 0.5 * std::asinh(kw_value)).abs().maxCoeff();
        rep.set("closed_form_error", e);
        rep.flag("closed_form", e < 1e-10);
      }
      std::string out = "x,y,alpha\n";
      char buf[128];
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.17g\n", i * g.h, j * g.h, r.alpha(g.idx(i, j)));
          out += buf;
        }
      fs::create_directories(c.out);
      write_atomic(path_in(c, "kw-solve_alpha.csv"), out);
      return emit(c, "kw-solve", rep);
    };
  });

  // torus-crit
  auto* tc = app.add_subcommand("torus-crit", "Constant torus solutions and the critical-orbit slice");
  std::vector<double> tc_a{0.5, 0.0};
  double tc_delta = 0.3, tc_vary = 0.0;
  int tc_nx = 32;
  tc->add_option("--a", tc_a, "Coefficient of the (1,0) form, re im")->expected(2)->capture_default_str();
  tc->add_option("--delta", tc_delta)->capture_default_str();
  tc->add_option("--vary", tc_vary, "Amplitude of a varying delta for the slice solve (0 skips)")->capture_default_str();
  tc->add_option("--nx", tc_nx)->capture_default_str();
  tc->callback([&] {
    action = [&] {
      auto s = torus_constant_solution(cd(tc_a[0], tc_a[1]), tc_delta);
      ExperimentReport rep;
      rep.name = "torus_crit";
      rep.inputs = {{"a", tc_a}, {"delta", tc_delta}, {"vary", tc_vary}};
      rep.set("psi_plus2", s.p);
      rep.set("psi_minus2", s.q);
      rep.set("c", s.c);
      rep.set("phase_minus", s.phase_minus);
      rep.set("other_root", s.other_root);
      rep.set("residual_product", s.residual_product);
      rep.set("residual_level", s.residual_level);
      rep.flag("substitution_below_1e-12", s.residual_product < 1e-12 && s.residual_level < 1e-12);
      rep.flag("other_root_rejected", s.other_root < 0);
      if (tc_vary != 0) {
        auto g = TorusGrid::make(1.0, 1.0, tc_nx);
        CriticalOrbitInput in{RVec::Constant(g.size(), s.p), RVec::Constant(g.size(), s.q), RVec::Zero(g.size()),
                              RVec(g.size())};
        for (int j = 0; j < g.ny; ++j)
          for (int i = 0; i < g.nx; ++i) in.delta(g.idx(i, j)) = tc_delta + tc_vary * std::cos(2 * M_PI * i * g.h);
        auto r = critical_orbit_slice(g, in);
        double res = critical_orbit_residual(g, in, r.alpha).cwiseAbs().maxCoeff();
        rep.inputs["grid"] = {{"nx", g.nx}, {"ny", g.ny}};
        rep.set("slice_residual", res);
        rep.flag("slice_residual_below_1e-10", res < 1e-10);
      }
      return emit(c, "torus-crit", rep);
    };
  });

  // count-orbits
  auto* co = app.add_subcommand("count-orbits", "Number of critical orbits against the subset enumerator");
  int co_g = 2, co_d = 1, co_n = 0;
  co->add_option("--genus", co_g)->capture_default_str();
  co->add_option("--d", co_d)->capture_default_str();
  co->add_option("--punctures", co_n)->capture_default_str();
  co->callback([&] {
    action = [&] {
      long long k = count_critical_orbits(co_g, co_d, co_n);
      auto e = enumerate_zero_subsets(co_g, co_d, co_n);
      ExperimentReport rep;
      rep.name = "count_orbits";
      rep.inputs = {{"genus", co_g}, {"d", co_d}, {"punctures", co_n}};
      rep.set("count", k);
      rep.set("enumerated", (long long)e.size());
      rep.flag("count_matches_enumerator", k == (long long)e.size());
      return emit(c, "count-orbits", rep);
    };
  });

  // sphere-zeros
  auto* sz = app.add_subcommand("sphere-zeros", "Zeros of the explicit 1-form on a punctured sphere");
  std::vector<double> sz_p, sz_a;
  int sz_random = 0, sz_trials = 20;
  std::uint64_t sz_seed = 1010;
  sz->add_option("--punctures", sz_p, "Finite punctures, re im pairs");
  sz->add_option("--residues", sz_a, "Residues at the finite punctures, re im pairs");
  sz->add_option("--random", sz_random, "Random trials with this total puncture count n (including infinity)");
  sz->add_option("--trials", sz_trials)->capture_default_str();
  sz->add_option("--seed", sz_seed)->capture_default_str();
  sz->callback([&] {
    action = [&] {
      ExperimentReport rep;
      rep.name = "sphere_zeros";
      if (sz_random > 0) {
        if (sz_random < 3) throw Error(ErrorKind::ConfigError, "--random needs n >= 3");
        rep.inputs = {{"n", sz_random}, {"trials", sz_trials}, {"seed", sz_seed}};
        std::mt19937_64 rng(sz_seed);
        int wrong = 0, not_simple = 0;
        double rerr = 0;
        for (int t = 0; t < sz_trials; ++t) {
          std::vector<cd> p, a;
          for (int j = 0; j < sz_random - 1; ++j) {
            double x = uniform_pm1(rng), y = uniform_pm1(rng), ar = uniform_pm1(rng), ai = uniform_pm1(rng);
            p.push_back(2.0 * cd(x, y));
            a.push_back(cd(ar, ai));
          }
          auto z = punctured_sphere_zeros(p, a);
          wrong += (int)z.zeros.size() != sz_random - 2;
          not_simple += !z.all_simple;
          rerr = std::max(rerr, z.residue_error);
        }
        rep.set("wrong_zero_counts", wrong);
        rep.set("non_simple_trials", not_simple);
        rep.set("residue_error", rerr);
        rep.flag("zero_count_n_minus_2", wrong == 0);
        rep.flag("zeros_simple", not_simple == 0);
        rep.flag("residue_theorem_1e-8", rerr < 1e-8);
      } else {
        auto p = complex_vector(sz_p, "--punctures"), a = complex_vector(sz_a, "--residues");
        if (p.empty()) throw Error(ErrorKind::ConfigError, "give --punctures/--residues or --random");
        auto z = punctured_sphere_zeros(p, a);
        rep.inputs = {{"punctures", sz_p}, {"residues", sz_a}};
        ojson zs = ojson::array();
        for (auto& x : z.zeros) zs.push_back({x.real(), x.imag()});
        rep.set("zeros", zs);
        rep.set("eta_prime_abs", z.eta_prime_abs);
        rep.set("min_pair_distance", z.min_pair_distance);
        rep.set("all_simple", z.all_simple);
        rep.set("rejected", z.rejected);
        rep.set("residue_error", z.residue_error);
        rep.flag("zero_count_n_minus_2", (int)z.zeros.size() + z.rejected == (int)p.size() - 1);
        rep.flag("residue_theorem_1e-8", z.residue_error < 1e-8);
      }
      return emit(c, "sphere-zeros", rep);
    };
  });

  // goodness
  auto* gd = app.add_subcommand("goodness", "Good H-surface test for a torus 1-form");
  std::vector<double> gd_periods{1.0, std::sqrt(2.0)};
  long long gd_max = 10000;
  gd->add_option("--periods", gd_periods)->expected(2)->capture_default_str();
  gd->add_option("--max-denominator", gd_max)->capture_default_str();
  gd->callback([&] {
    action = [&] {
      auto r = goodness_check({gd_periods[0], gd_periods[1]}, gd_max);
      ExperimentReport rep;
      rep.name = "goodness";
      rep.inputs = {{"periods", gd_periods}, {"max_denominator", gd_max}};
      rep.set("good", r.good);
      rep.set("witness", r.witness ? ojson{(*r.witness)[0], (*r.witness)[1]} : ojson(nullptr));
      rep.set("min_pairing", r.min_pairing);
      rep.set("pairing_scale", r.pairing_scale);
      if (r.good) rep.notes.push_back("no integral relation found up to the denominator cap");
      return emit(c, "goodness", rep);
    };
  });

  // suite
  auto* su = app.add_subcommand("suite", "Acceptance battery with a JSON scorecard");
  std::string su_profile = "quick";
  su->add_option("profile", su_profile, "quick or full")->check(CLI::IsMember({"quick", "full"}))->capture_default_str();
  su->callback([&] {
    action = [&] {
      auto p = su_profile == "full" ? SuiteProfile::full : SuiteProfile::quick;
      auto entries = run_suite(p, [](const SuiteEntry& e) {
        bool pass = e.error.empty() && e.report.passed();
        std::printf("%s criterion %d %s (%.2f s)%s%s\n", pass ? "PASS" : "FAIL", e.id, e.name.c_str(), e.seconds,
                    e.error.empty() ? "" : ": ", e.error.c_str());
        std::fflush(stdout);
      });
      auto card = scorecard(p, entries);
      fs::create_directories(c.out);
      write_atomic(path_in(c, "suite.json"), card.dump(2) + "\n");
      bool pass = card["pass"].get<bool>();
      std::cout << (pass ? "PASS" : "FAIL") << " suite " << su_profile << " -> " << path_in(c, "suite.json") << "\n";
      return pass ? 0 : 2;
    };
  });

  try {
    auto args = expand_params(argc, argv);
    std::vector<char*> av;
    for (auto& s : args) av.push_back(s.data());
    try {
      app.parse((int)av.size(), av.data());
    } catch (const CLI::ParseError& e) {
      int code = app.exit(e);
      if (code == 0) return 0;
      if (dynamic_cast<const CLI::ExtrasError*>(&e) || dynamic_cast<const CLI::RequiredError*>(&e))
        std::cerr << app.help();
      return 1;
    }
    Eigen::setNbThreads(threads_from_env());
    // A bad --model is a configuration error even for subcommands with a fixed model.
    if (app.get_option("--model")->count() > 0) load_model(c);
    return action();
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::ConfigError:
      case ErrorKind::OutOfRange:
      case ErrorKind::ShapeMismatch:
      case ErrorKind::InvalidModel:
        return 1;
      default:
        std::cout << "FAIL " << e.what() << "\n";
        return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}
