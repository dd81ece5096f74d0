// Command-line front end: JSON in, JSON (or CSV for region traces) out.
// Exit status: 0 success, 1 a reported check failed, 2 input or numerical error.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "extremal/extremal.hpp"
#include "extremal/json_io.hpp"

using namespace extremal;
using io::json;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kInputError = 2;

struct RunConfig {
  std::uint64_t seed = 0x5eedULL;
  std::map<std::string, double> tol;
  io::Units units;
  int parallelism = 0;  // 0 = auto
  std::string out;

  double tolerance(const std::string& key, double fallback) const {
    const auto it = tol.find(key);
    return it == tol.end() ? fallback : it->second;
  }

  EstimatorConfig estimator() const {
    EstimatorConfig c;
    c.seed = seed;
    c.parallelism = parallelism;
    c.quad_tol_1d = tolerance("quad_1d", c.quad_tol_1d);
    c.quad_tol_2d = tolerance("quad_2d", c.quad_tol_2d);
    c.mc_samples = static_cast<std::size_t>(tolerance("mc_samples", static_cast<double>(c.mc_samples)));
    return c;
  }

  SolverConfig solver() const {
    SolverConfig c;
    c.seed = seed;
    c.parallelism = parallelism;
    c.kkt_tol = tolerance("kkt", c.kkt_tol);
    c.feasibility_tol = tolerance("feasibility", c.feasibility_tol);
    return c;
  }
};

const std::vector<std::string> kTolKeys = {"kkt",         "feasibility", "quad_1d", "quad_2d",        "mc_samples",
                                           "enhancement", "proportionality", "epi", "path_derivative"};

std::uint64_t parse_seed(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used, 0);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError(what + ": not an unsigned 64-bit integer: '" + s + "'");
  }
}

/// Strips --tol.KEY=VAL arguments from argv into the tolerance map.
std::vector<std::string> extract_tolerances(int argc, char** argv, std::map<std::string, double>& tol) {
  std::vector<std::string> rest;
  for (int i = 0; i < argc; ++i) {
    const std::string a = argv[i];
    if (a.rfind("--tol.", 0) != 0) {
      rest.push_back(a);
      continue;
    }
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw InputError(a + ": expected --tol.KEY=VALUE");
    const std::string key = a.substr(6, eq - 6);
    if (std::find(kTolKeys.begin(), kTolKeys.end(), key) == kTolKeys.end()) {
      std::string known;
      for (const auto& k : kTolKeys) known += " " + k;
      throw InputError("unknown tolerance key '" + key + "'; known keys:" + known);
    }
    try {
      std::size_t used = 0;
      const double v = std::stod(a.substr(eq + 1), &used);
      if (used != a.size() - eq - 1 || !(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(a);
      tol[key] = v;
    } catch (const std::exception&) {
      throw InputError(a + ": tolerance must be a positive number");
    }
  }
  return rest;
}

void emit(const RunConfig& rc, const std::string& text) {
  if (rc.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(rc.out);
  if (!f) throw InputError("cannot write '" + rc.out + "'");
  f << text;
}

void emit_json(const RunConfig& rc, const json& j) { emit(rc, j.dump(2) + "\n"); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json entropy_json(const EntropyEstimate& e, const io::Units& u, const std::string& base) {
  json j{{u.key(base), u(e.value)}, {u.key(base + "_stderr"), u(e.stderr_)}, {"method", to_string(e.method)}};
  if (e.flagged) j["flagged"] = true;
  if (!e.note.empty()) j["note"] = e.note;
  return j;
}

json solution_json(const KktSolution& s, const ExtremalInstance& inst, const io::Units& u) {
  return {{"kx", io::from_sym(s.kx)},
          {"m1", io::from_sym(s.m1)},
          {"m2", io::from_sym(s.m2)},
          {u.key("objective"), u(s.objective)},
          {"kkt_residual", kkt_residual(s, inst)},
          {"stationarity_residual", s.stationarity_residual},
          {"slack1_residual", s.slack1},
          {"slack2_residual", s.slack2},
          {"certified", s.certified},
          {"degenerate", s.degenerate}};
}

int status(bool passed) { return passed ? kOk : kCheckFailed; }

// ---- subcommands ----

int run_solve(const RunConfig& rc, const std::string& instance_path) {
  const auto inst = io::to_instance(io::load_json(instance_path));
  const auto run = solve_all(inst, rc.solver());
  json j = solution_json(run.best, inst, rc.units);
  j["distinct_kkt_points"] = run.kkt_points.size();
  emit_json(rc, j);
  return status(run.best.certified);
}

int run_enhance(const RunConfig& rc, const std::string& instance_path, const std::string& solution_path) {
  const auto inst = io::to_instance(io::load_json(instance_path));
  KktSolution sol;
  if (solution_path.empty()) {
    sol = solve(inst, rc.solver());
  } else {
    const json s = io::load_json(solution_path);
    sol.kx = io::to_sym(io::field(s, "kx", "solution"), "solution.kx");
    sol.m1 = io::to_sym(io::field(s, "m1", "solution"), "solution.m1");
    sol.m2 = io::to_sym(io::field(s, "m2", "solution"), "solution.m2");
    SymMatrix::check_same_dim(sol.kx, inst.s, "solution");
    SymMatrix::check_same_dim(sol.m1, inst.s, "solution");
    SymMatrix::check_same_dim(sol.m2, inst.s, "solution");
    sol.objective = gaussian_objective(sol.kx, inst);
    sol.certified = kkt_residual(sol, inst) < rc.solver().kkt_tol;
  }
  const auto e = enhance(inst, sol, rc.solver().kkt_tol);
  const double tol = rc.tolerance("enhancement", 1e-8);
  const std::vector<CheckReport> reports{check_orderings(e, tol),
                                         check_proportionality(e, rc.tolerance("proportionality", 1e-7)),
                                         check_value_equality(e, tol), epi_tightness_check(e, rc.tolerance("epi", 1e-9))};
  json j{{"ktz1", io::from_sym(e.ktz1)},
         {"ktz2", io::from_sym(e.ktz2)},
         {rc.units.key("f"), rc.units(e.f)},
         {"solution", solution_json(sol, inst, rc.units)}};
  bool ok = true;
  for (const auto& r : reports) {
    j["reports"].push_back(io::from_report(r));
    ok = ok && r.passed();
  }
  j["passed"] = ok;
  emit_json(rc, j);
  return status(ok);
}

int run_verify(const RunConfig& rc, const std::string& instance_path, const std::string& battery) {
  if (battery != "std") throw InputError("--battery: only 'std' is available");
  const auto inst = io::to_instance(io::load_json(instance_path));
  if (inst.dim() > 2) throw InputError("verify-extremal: the candidate battery covers dimensions 1 and 2 only");
  const auto cfg = rc.estimator();
  const auto scfg = rc.solver();
  const auto sol = solve(inst, scfg);
  const auto cands = standard_battery(inst.s, sol.kx, rc.seed);
  const CheckReport r = inst.mu >= 1.0 ? gaussian_optimality_harness(inst, cands, cfg, scfg)
                                       : degraded_decomposition_check(inst, cands, cfg, scfg);
  json j{{"candidates", cands.size()},
         {"gaussian_optimum", solution_json(sol, inst, rc.units)},
         {"report", io::from_report(r, &rc.units)}};
  emit_json(rc, j);
  return status(r.passed());
}

int run_path(const RunConfig& rc, const std::string& instance_path, const std::string& dist_path,
             const std::string& csv_path) {
  const auto inst = io::to_instance(io::load_json(instance_path));
  const auto x0 = io::to_mixture(io::load_json(dist_path), "dist");
  const auto t = trace_path(x0, inst, default_path_grid(), rc.estimator(), rc.solver());
  const auto& u = rc.units;
  const auto mono = path_monotonicity_check(t);
  bool ok = mono.passed();
  bool inconclusive = mono.inconclusive;
  json pts = json::array();
  json derivs = json::array();
  for (std::size_t i = 0; i < t.points.size(); ++i) {
    const auto& p = t.points[i];
    pts.push_back({{"lambda", p.lambda},
                   {u.key("gbar"), u(p.gbar.value)},
                   {u.key("gbar_stderr"), u(p.gbar.stderr_)},
                   {u.key("gbar_prime_analytic"), u(p.gbar_prime_analytic)},
                   {u.key("gbar_prime_analytic_stderr"), u(p.gbar_prime_analytic_stderr)},
                   {u.key("gbar_prime_fd"), u(p.gbar_prime_fd)},
                   {u.key("gbar_prime_fd_stderr"), u(p.gbar_prime_fd_stderr)}});
    if (i == 0) continue;
    const auto d = path_derivative_check(p, rc.tolerance("path_derivative", 1e-7));
    ok = ok && d.passed();
    inconclusive = inconclusive || d.inconclusive;
    derivs.push_back(io::from_report(d, &u));
  }
  json j{{"points", pts},
         {"ktz1", io::from_sym(t.enhanced.ktz1)},
         {"ktz2", io::from_sym(t.enhanced.ktz2)},
         {u.key("start_objective"), u(t.start_objective)},
         {u.key("start_objective_stderr"), u(t.start_objective_stderr)},
         {u.key("endpoint_value"), u(t.endpoint_value)},
         {"regularized", t.regularized},
         {"monotonicity", io::from_report(mono, &u)},
         {"derivatives", derivs},
         {"passed", ok},
         {"inconclusive", inconclusive}};
  if (!csv_path.empty()) {
    std::ofstream f(csv_path);
    if (!f) throw InputError("cannot write '" + csv_path + "'");
    f << "lambda," << u.key("gbar") << "," << u.key("gbar_stderr") << "," << u.key("gbar_prime_analytic") << ","
      << u.key("gbar_prime_fd") << "\n";
    for (const auto& p : t.points) {
      f << fmt(p.lambda) << "," << fmt(u(p.gbar.value)) << "," << fmt(u(p.gbar.stderr_)) << ","
        << fmt(u(p.gbar_prime_analytic)) << "," << fmt(u(p.gbar_prime_fd)) << "\n";
    }
  }
  emit_json(rc, j);
  return status(ok);
}

int run_counterexample(const RunConfig& rc, const std::string& spec_path) {
  const auto spec = io::to_counterexample_spec(io::load_json(spec_path));
  CounterexampleWitness w;
  const auto r = counterexample_construct(spec, rc.estimator(), rc.solver(), &w);
  const auto& u = rc.units;
  json j{{"found", w.found},
         {"kx_star", counterexample_kx_star(spec)},
         {"witness",
          {{"weights", {0.5, 0.5}},
           {"means", {-w.offset, w.offset}},
           {"variance", w.variance},
           {u.key("entropy_mismatch"), u(w.entropy_mismatch)},
           {"gap", entropy_json(w.gap, u, "value")}}},
         {u.key("stationary_objective"), u(w.stationary_objective)},
         {u.key("witness_objective"), u(w.witness_objective)},
         {u.key("gaussian_optimum_objective"), u(w.gaussian_optimum_objective)},
         {"gaussian_optimum_kx", w.gaussian_optimum_kx},
         {"report", io::from_report(r, &u)}};
  emit_json(rc, j);
  return status(r.passed());
}

int run_bc_region(const RunConfig& rc, const std::string& instance_path, int points) {
  const auto inst = io::to_bc_instance(io::load_json(instance_path));
  const auto pts = bc_region_sweep(inst, points, rc.solver());
  const auto& u = rc.units;
  std::ostringstream os;
  os << "theta,mu1,mu2," << u.key("r1") << "," << u.key("r2") << "," << u.key("bound") << "\n";
  for (const auto& p : pts) {
    os << fmt(p.theta) << "," << fmt(p.mu1) << "," << fmt(p.mu2) << "," << fmt(u(p.r1)) << "," << fmt(u(p.r2)) << ","
       << fmt(u(p.bound)) << "\n";
  }
  emit(rc, os.str());
  return kOk;
}

int run_dsc(const RunConfig& rc, const std::string& instance_path, double mu1, double mu2) {
  const auto inst = io::to_dsc_instance(io::load_json(instance_path));
  const auto b = dsc_weighted_bound(inst, mu1, mu2, rc.solver());
  const auto& u = rc.units;
  json j{{u.key("value"), u(b.value)},
         {"k", io::from_sym(b.k)},
         {"bite_flag", b.bite},
         {"bite_margin", b.bite_margin},
         {"mu1", mu1},
         {"mu2", mu2}};
  if (!b.bite) {
    const auto r = dsc_separation_rates(inst, b.k, mu1, mu2);
    j["separation"] = {{u.key("r1"), u(r.r1)}, {u.key("r2"), u(r.r2)}, {u.key("weighted_sum"), u(r.bound)}};
  }
  emit_json(rc, j);
  return kOk;
}

int run_fii(const RunConfig& rc, const std::string& u_path, const std::string& v_path, const std::string& a_path) {
  const auto u = io::to_mixture(io::load_json(u_path), "u");
  const auto v = io::to_mixture(io::load_json(v_path), "v");
  const Matrix a = a_path.empty() ? Matrix(0.5 * Matrix::Identity(u.dim(), u.dim()))
                                  : io::to_matrix(io::load_json(a_path), "a");
  const auto r = fii_check(u, v, a, rc.estimator());
  emit_json(rc, {{"a", io::from_matrix(a)}, {"report", io::from_report(r)}});
  return status(r.passed());
}

int run_crb(const RunConfig& rc, const std::string& dist_path) {
  const auto m = io::to_mixture(io::load_json(dist_path), "dist");
  const auto cfg = rc.estimator();
  const auto j = fisher_matrix(m, cfg);
  const auto r = cramer_rao_check(m, cfg);
  json out{{"fisher", io::from_sym(j.j)},
           {"fisher_method", to_string(j.method)},
           {"covariance", io::from_sym(m.covariance())},
           {"report", io::from_report(r)}};
  if (j.stderr_) out["fisher_stderr"] = io::from_sym(*j.stderr_);
  emit_json(rc, out);
  return status(r.passed());
}

int run_debruijn(const RunConfig& rc, const std::string& dist_path, const std::string& noise_path, double t) {
  const auto x = io::to_mixture(io::load_json(dist_path), "dist");
  const SymMatrix kz = noise_path.empty() ? SymMatrix::identity(x.dim()) : io::to_sym(io::load_json(noise_path), "noise");
  const auto r = debruijn_check(x, kz, t, rc.estimator());
  emit_json(rc, {{"t", t}, {"noise", io::from_sym(kz)}, {"report", io::from_report(r, &rc.units)}});
  return status(r.passed());
}

int run_entropy(const RunConfig& rc, const std::string& dist_path, const std::string& samples_path,
                const std::string& method, int k, int n) {
  const auto cfg = rc.estimator();
  EntropyEstimate e;
  json j{{"method_requested", method}};
  if (method == "knn") {
    std::vector<Vector> pts;
    if (!samples_path.empty()) {
      pts = io::read_csv_samples(samples_path);
    } else {
      if (dist_path.empty()) throw InputError("entropy-est: --method knn needs --samples or --dist");
      const auto m = io::to_mixture(io::load_json(dist_path), "dist");
      auto rng = stream_engine(rc.seed, 0x6b6e6eULL);
      for (int i = 0; i < n; ++i) pts.push_back(m.sample(rng));
    }
    j["samples"] = pts.size();
    j["k"] = k;
    e = knn_entropy(std::move(pts), k, rc.seed);
  } else {
    if (dist_path.empty()) throw InputError("entropy-est: --method " + method + " needs --dist");
    if (!samples_path.empty()) throw InputError("entropy-est: --samples applies to --method knn only");
    const auto m = io::to_mixture(io::load_json(dist_path), "dist");
    e = mixture_entropy(m, cfg, method == "quad" ? EntropyMethod::Quadrature : EntropyMethod::MonteCarlo);
  }
  j.update(entropy_json(e, rc.units, "entropy"));
  emit_json(rc, j);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig rc;
  CLI::App app{"Extremal entropy solver, verifier and rate-region tool"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::optional<std::string> seed_arg;
  std::string parallelism = "auto";
  bool bits = false;
  app.add_option("--seed", seed_arg, "Seed for every stochastic estimate (default: $EXTREMAL_SEED or 0x5eed)");
  app.add_option("--parallelism", parallelism, "Worker threads, or 'auto'");
  app.add_flag("--bits", bits, "Emit information quantities in bits instead of nats");
  app.add_option("--out", rc.out, "Write output to this file instead of stdout");
  app.footer("Tolerances: --tol.KEY=VALUE with KEY in {kkt, feasibility, quad_1d, quad_2d, mc_samples, enhancement, "
             "proportionality, epi, path_derivative}.\n"
             "Exit status: 0 success, 1 a check failed, 2 input or numerical error.");

  std::string instance, spec, solution, dist, samples, u_path, v_path, a_path, noise, csv, battery = "std";
  std::string method = "quad";
  int points = 33, k = 4, n = 20000;
  double mu1 = 1.0, mu2 = 1.0, t = 1.0;

  auto need_instance = [&](CLI::App* s, const char* what) {
    s->add_option("--instance", instance, what)->required()->check(CLI::ExistingFile);
  };
  auto* solve_cmd = app.add_subcommand("solve", "Solve the Gaussian-restricted problem and certify KKT");
  need_instance(solve_cmd, "Instance JSON {kz1, kz2, s, mu}");
  auto* enhance_cmd = app.add_subcommand("enhance", "Build enhanced noise covariances and check their identities");
  need_instance(enhance_cmd, "Instance JSON {kz1, kz2, s, mu}");
  enhance_cmd->add_option("--solution", solution, "Solution JSON {kx, m1, m2}; solved afresh if omitted")
      ->check(CLI::ExistingFile);
  auto* verify_cmd = app.add_subcommand("verify-extremal", "Compare the Gaussian optimum against a candidate battery");
  need_instance(verify_cmd, "Instance JSON {kz1, kz2, s, mu}");
  verify_cmd->add_option("--battery", battery, "Candidate battery (std)");
  auto* path_cmd = app.add_subcommand("path-check", "Trace the covariance-preserving perturbation path");
  need_instance(path_cmd, "Instance JSON {kz1, kz2, s, mu}");
  path_cmd->add_option("--dist", dist, "Starting mixture JSON {weights, means, covs}")->required()->check(CLI::ExistingFile);
  path_cmd->add_option("--csv", csv, "Also write the trace as CSV");
  auto* cex_cmd = app.add_subcommand("counterexample", "Construct the small-mu non-Gaussian witness");
  cex_cmd->add_option("--spec", spec, "Spec JSON {kz2, kz, s, mu}")->required()->check(CLI::ExistingFile);
  auto* bc_cmd = app.add_subcommand("bc-region", "Trace the two-user broadcast capacity region (CSV)");
  need_instance(bc_cmd, "Instance JSON {kz1, kz2, s}");
  bc_cmd->add_option("--points", points, "Number of boundary points")->check(CLI::Range(3, 100000));
  auto* dsc_cmd = app.add_subcommand("dsc-bound", "Weighted-sum bound for distributed source coding");
  need_instance(dsc_cmd, "Instance JSON {ky1, ky2, d}");
  dsc_cmd->add_option("--mu1", mu1, "Weight of R1");
  dsc_cmd->add_option("--mu2", mu2, "Weight of R2");
  auto* fii_cmd = app.add_subcommand("fii-check", "Matrix Fisher information inequality");
  fii_cmd->add_option("--u", u_path, "Mixture JSON for U")->required()->check(CLI::ExistingFile);
  fii_cmd->add_option("--v", v_path, "Mixture JSON for V")->required()->check(CLI::ExistingFile);
  fii_cmd->add_option("--a", a_path, "Square matrix JSON for A (default I/2)")->check(CLI::ExistingFile);
  auto* crb_cmd = app.add_subcommand("crb-check", "Cramer-Rao bound J >= Cov^-1");
  crb_cmd->add_option("--dist", dist, "Mixture JSON")->required()->check(CLI::ExistingFile);
  auto* db_cmd = app.add_subcommand("debruijn-check", "Entropy derivative along added Gaussian noise");
  db_cmd->add_option("--dist", dist, "Mixture JSON")->required()->check(CLI::ExistingFile);
  db_cmd->add_option("--noise", noise, "Noise covariance JSON (default identity)")->check(CLI::ExistingFile);
  db_cmd->add_option("--t", t, "Noise scale t > 0");
  auto* ent_cmd = app.add_subcommand("entropy-est", "Differential entropy estimate");
  ent_cmd->add_option("--dist", dist, "Mixture JSON")->check(CLI::ExistingFile);
  ent_cmd->add_option("--samples", samples, "CSV sample file (knn only)")->check(CLI::ExistingFile);
  ent_cmd->add_option("--method", method, "quad, mc or knn")->check(CLI::IsMember({"quad", "mc", "knn"}));
  ent_cmd->add_option("--k", k, "Neighbour order for knn")->check(CLI::PositiveNumber);
  ent_cmd->add_option("--n", n, "Samples drawn from --dist for knn")->check(CLI::PositiveNumber);

  try {
    auto args = extract_tolerances(argc, argv, rc.tol);
    std::vector<char*> av;
    for (auto& a : args) av.push_back(a.data());
    if (args.size() > 1 && args[1].rfind("-", 0) != 0 && !app.get_subcommand_no_throw(args[1])) {
      std::cerr << "error: unknown subcommand '" << args[1] << "'\n\n" << app.help();
      return kInputError;
    }
    app.parse(static_cast<int>(av.size()), av.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kInputError;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (seed_arg) {
      rc.seed = parse_seed(*seed_arg, "--seed");
    } else if (const char* env = std::getenv("EXTREMAL_SEED"); env && *env) {
      rc.seed = parse_seed(env, "EXTREMAL_SEED");
    }
    if (parallelism == "auto") {
      rc.parallelism = 0;
    } else {
      try {
        std::size_t used = 0;
        rc.parallelism = std::stoi(parallelism, &used);
        if (used != parallelism.size() || rc.parallelism < 1) throw std::invalid_argument(parallelism);
      } catch (const std::exception&) {
        throw InputError("--parallelism: expected a positive integer or 'auto'");
      }
    }
    rc.units.bits = bits;

    if (solve_cmd->parsed()) return run_solve(rc, instance);
    if (enhance_cmd->parsed()) return run_enhance(rc, instance, solution);
    if (verify_cmd->parsed()) return run_verify(rc, instance, battery);
    if (path_cmd->parsed()) return run_path(rc, instance, dist, csv);
    if (cex_cmd->parsed()) return run_counterexample(rc, spec);
    if (bc_cmd->parsed()) return run_bc_region(rc, instance, points);
    if (dsc_cmd->parsed()) return run_dsc(rc, instance, mu1, mu2);
    if (fii_cmd->parsed()) return run_fii(rc, u_path, v_path, a_path);
    if (crb_cmd->parsed()) return run_crb(rc, dist);
    if (db_cmd->parsed()) return run_debruijn(rc, dist, noise, t);
    if (ent_cmd->parsed()) return run_entropy(rc, dist, samples, method, k, n);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const Error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kInputError;
  }
  std::cerr << app.help();
  return kInputError;
}
