#include "zeroflow/runner.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "zeroflow/burgers.hpp"
#include "zeroflow/ensemble.hpp"
#include "zeroflow/errors.hpp"
#include "zeroflow/nodal.hpp"
#include "zeroflow/suite.hpp"

namespace zeroflow {

using nlohmann::json;

namespace {

struct Run {
  const ExperimentConfig& cfg;
  std::ostream& log;
  std::vector<std::string> artifacts;
  json summary = json::object();
  int status = exit_ok;

  std::ofstream open(const std::string& name) {
    std::ofstream out(cfg.output / name);
    if (!out) throw std::runtime_error("cannot write " + (cfg.output / name).string());
    out.precision(17);
    artifacts.push_back(name);
    return out;
  }

  void fail(const std::string& why) {
    log << "violation: " << why << '\n';
    status = exit_violation;
  }
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

void require_kind(const ExperimentConfig& c, const std::string& kind) {
  if (c.nonlinearity.kind != kind) {
    throw ConfigError(c.experiment + " needs nonlinearity.kind = " + kind + ", got " + c.nonlinearity.kind);
  }
}

std::string trimmed(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (!std::isspace(static_cast<unsigned char>(ch))) out += ch;
  }
  return out;
}

// ---------------------------------------------------------------------------

void simulate(Run& r) {
  const auto& c = r.cfg;
  const Nonlinearity nl = build_nonlinearity(c.nonlinearity);
  const Field u0 = sample(profile_function(c.simulate.initial, "simulate.initial"), c.grid);
  const Trajectory traj = evolve(u0, nl, c.simulate.t0, c.simulate.t1, c.stepper, c.probes, c.snapshot_stride);

  auto snaps = r.open("snapshots.csv");
  snaps << "t,x,u\n";
  for (const auto& s : traj.snapshots) {
    for (std::size_t j = 0; j < s.u.size(); ++j) snaps << s.t << ',' << c.grid.node(j) << ',' << s.u[j] << '\n';
  }
  auto probes = r.open("probes.csv");
  probes << "step,t";
  for (const auto& p : traj.probes) probes << ",u@" << p.x;
  probes << '\n';
  if (!c.probes.empty()) {
    const auto times = probe_times(traj);
    for (std::size_t k = 0; k < times.size(); ++k) {
      probes << k << ',' << times[k];
      for (const auto& p : traj.probes) probes << ',' << p.series[k];
      probes << '\n';
    }
  }
  auto final_state = r.open("final.csv");
  write_csv(traj.final_state(), final_state);

  r.summary["snapshots"] = traj.snapshots.size();
  r.summary["sup_norm_final"] = traj.final_state().sup_norm();
  if (nl.kind == Nonlinearity::Kind::burgers) r.summary["mass_drift"] = check_mass_invariance(traj, nl);
}

void balance(Run& r) {
  const auto& c = r.cfg;
  const auto& b = c.balance;
  LedgerWindow window{b.x_left, b.x_right.value_or(c.grid.circumference()), b.t_start, b.t_end};
  std::vector<double> probes = {std::fmod(window.x_left, c.grid.circumference())};
  const double right = std::fmod(window.x_right, c.grid.circumference());
  if (right != probes.front()) probes.push_back(right);

  Trajectory w;
  if (!b.w.empty()) {
    const Expression e = parse_expression(b.w);
    w = sample_trajectory([e](double x, double t) { return e(t, x, 0.0); }, c.grid, b.t_start, b.t_end,
                          c.stepper.dt, probes);
  } else {
    const Nonlinearity nl = build_nonlinearity(c.nonlinearity);
    const Field u0 = sample(profile_function(b.u, "balance.u"), c.grid);
    const Field v0 = sample(profile_function(b.v, "balance.v"), c.grid);
    Stepper stepper(c.grid, nl, c.stepper);
    w = difference(stepper.evolve(u0, b.t_start, b.t_end, probes, 1), stepper.evolve(v0, b.t_start, b.t_end, probes, 1));
  }
  const ZeroLedger ledger = balance_ledger(w, window);
  const NodalAnalysis curves = match_curves(w.snapshots, {window.x_left, window.x_right});

  auto out = r.open("ledger.jsonl");
  write_ledger_jsonl({ledger}, out);
  auto curve_file = r.open("curves.csv");
  write_curves_csv(curves.curves, curve_file);
  r.summary = {{"Z_start", ledger.Z_start}, {"Z_end", ledger.Z_end}, {"F_left", ledger.F_left},
               {"F_right", ledger.F_right}, {"D", ledger.D},         {"residual", ledger.residual}};
  r.log << "Z " << ledger.Z_start << " -> " << ledger.Z_end << ", F_left " << ledger.F_left << ", F_right "
        << ledger.F_right << ", D " << ledger.D << ", residual " << ledger.residual << '\n';
}

void vfamily(Run& r) {
  const auto& c = r.cfg;
  require_kind(c, "burgers");
  VFamilyOptions vo;
  vo.tol = c.tolerances.fixed_point;
  vo.max_iter = c.vfamily.max_iter;
  vo.damping = c.vfamily.damping;
  const VFamily family = solve_v_family(build_nonlinearity(c.nonlinearity), c.vfamily.ys, c.grid, c.stepper, vo);
  write_family(family, c.output / "family");
  r.artifacts.push_back("family/family.json");
  r.summary = {{"orbits", family.orbits.size()},
               {"min_gap", family.orbits.size() > 1 ? json(family.min_gap()) : json(nullptr)},
               {"strictly_ordered", family.strictly_ordered()}};
  r.log << family.orbits.size() << " orbits, strictly ordered: " << (family.strictly_ordered() ? "yes" : "no")
        << '\n';
  if (!family.strictly_ordered()) r.fail("v^y profiles are not strictly ordered");
}

void colehopf(Run& r) {
  const auto& c = r.cfg;
  require_kind(c, "burgers");
  if (trimmed(c.nonlinearity.h) != "u") throw ConfigError("colehopf needs classical Burgers, nonlinearity.h = u");
  Nonlinearity::SpaceTimeFn forcing;
  if (!c.nonlinearity.forcing.empty()) {
    const Expression f = parse_expression(c.nonlinearity.forcing);
    forcing = [f](double t, double x) { return f(t, x, 0.0); };
  }
  const Field u0 = sample(profile_function(c.colehopf.initial, "colehopf.initial"), c.grid);
  const ColeHopfResult res = cole_hopf_crosscheck(u0, forcing, c.colehopf.t_end, c.stepper);
  auto csv = r.open("colehopf.csv");
  csv << "x,burgers,cole_hopf\n";
  for (std::size_t j = 0; j < u0.size(); ++j) {
    csv << c.grid.node(j) << ',' << res.burgers[j] << ',' << res.cole_hopf[j] << '\n';
  }
  r.summary = {{"relative_error", res.relative_error},
               {"absolute_error", res.absolute_error},
               {"min_phi", res.min_phi},
               {"t_end", c.colehopf.t_end}};
  auto out = r.open("colehopf.jsonl");
  out << r.summary.dump() << '\n';
  r.log << "relative sup error " << res.relative_error << '\n';
}

void ensemble(Run& r) {
  const auto& c = r.cfg;
  const auto& s = c.ensemble;
  const Nonlinearity nl = build_nonlinearity(c.nonlinearity);
  BernoulliOptions bo;
  bo.block_cells = s.block_cells;
  bo.jitter = s.jitter;
  bo.antithetic = s.antithetic;
  const Ensemble e = bernoulli_ensemble(profile_function(s.profile0, "ensemble.profile0"),
                                        profile_function(s.profile1, "ensemble.profile1"), c.grid, s.members,
                                        c.seed, bo);
  EnsembleOptions eo;
  eo.tolerance = c.tolerances.monotone;
  eo.epsilon = c.tolerances.epsilon;
  eo.threads = s.threads;
  if (s.target_y) {
    require_kind(c, "burgers");
    Stepper one_cell(make_grid(1, c.grid.points_per_cell), nl, c.stepper);
    VFamilyOptions vo;
    vo.tol = c.tolerances.fixed_point;
    eo.target = solve_periodic_orbit(one_cell, *s.target_y, vo).profile;
    if (s.stop_early) eo.stop_below = c.tolerances.weakstar;
  }
  const auto [report, final_ensemble] = evolve_ensemble(e, nl, s.iterates, c.stepper, eo);

  auto manifest = r.open("ensemble.jsonl");
  write_ensemble_jsonl(e, manifest);
  write_ensemble_jsonl(final_ensemble, manifest);
  auto rep = r.open("report.jsonl");
  write_report_jsonl(report, rep);
  auto series = r.open("series.csv");
  write_series_csv(report, series);

  r.summary = {{"Z_mu_initial", report.Z_mu.front()},
               {"Z_mu_final", report.Z_mu.back()},
               {"iterates", report.iterates},
               {"violations", report.violations}};
  if (!report.weakstar_dist.empty()) r.summary["weakstar_final"] = report.weakstar_dist.back();
  r.log << "Z_mu " << report.Z_mu.front() << " -> " << report.Z_mu.back() << " over " << report.iterates
        << " iterates\n";
  if (!report.violations.empty()) {
    r.fail("Z_mu increased at iterate " + std::to_string(report.violations.front()));
  }
}

void allencahn(Run& r) {
  const auto& c = r.cfg;
  const auto& s = c.allencahn;
  require_kind(c, "gradient");
  BernoulliOptions bo;
  bo.block_cells = s.block_cells;
  bo.jitter = s.jitter;
  bo.antithetic = s.antithetic;
  const Ensemble e = bernoulli_ensemble(profile_function(s.profile0, "allencahn.profile0"),
                                        profile_function(s.profile1, "allencahn.profile1"), c.grid, s.members,
                                        c.seed, bo);
  const EnergyTrace trace = evolve_gradient_ensemble(e, build_nonlinearity(c.nonlinearity), s.horizon, c.stepper);
  const auto [plus, minus] = plateau_fractions(trace.final, s.level, s.plateau_tol);

  auto energy = r.open("energy.csv");
  energy << "member,step,energy\n";
  for (std::size_t m = 0; m < trace.energies.size(); ++m) {
    for (std::size_t k = 0; k < trace.energies[m].size(); ++k) energy << m << ',' << k << ',' << trace.energies[m][k] << '\n';
  }
  r.summary = {{"fraction_plus", plus}, {"fraction_minus", minus}, {"max_energy_increase", trace.max_increase}};
  auto rep = r.open("report.jsonl");
  rep << r.summary.dump() << '\n';
  r.log << "plateau fractions +" << s.level << ": " << plus << ", -" << s.level << ": " << minus
        << ", max energy increase " << trace.max_increase << '\n';
  if (trace.max_increase > c.tolerances.energy_slack) r.fail("gradient energy increased");
}

void check(Run& r) {
  const auto& c = r.cfg;
  SuiteOptions so;
  so.quick = c.check.quick;
  so.only = c.check.only;
  so.seed = c.seed;
  std::vector<CheckResult> results;
  try {
    results = run_suite(so, [&](const CheckResult& res) { r.log << format_result(res) << std::endl; });
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("check.only: ") + err.what());
  }
  auto out = r.open("suite.jsonl");
  int passed = 0;
  for (const auto& res : results) {
    // Timings vary between runs; they go to the manifest, not the artifact.
    out << json{{"name", res.name}, {"passed", res.passed}, {"detail", res.detail}}.dump() << '\n';
    r.summary[res.name] = {{"passed", res.passed}, {"seconds", res.seconds}};
    passed += res.passed;
  }
  r.log << passed << "/" << results.size() << " invariants hold\n";
  if (passed != static_cast<int>(results.size())) r.fail("invariant suite reported failures");
}

}  // namespace

int run(const ExperimentConfig& config, std::ostream& log) {
  Run r{config, log, {}, json::object(), exit_ok};
  std::string error;
  try {
    std::filesystem::create_directories(config.output);
    const auto& e = config.experiment;
    if (e == "simulate") {
      simulate(r);
    } else if (e == "balance") {
      balance(r);
    } else if (e == "vfamily") {
      vfamily(r);
    } else if (e == "colehopf") {
      colehopf(r);
    } else if (e == "ensemble") {
      ensemble(r);
    } else if (e == "allencahn") {
      allencahn(r);
    } else if (e == "check") {
      check(r);
    } else {
      throw ConfigError("unknown experiment '" + e + "'");
    }
  } catch (const ConfigError& err) {
    log << "config error: " << err.what() << '\n';
    return exit_config;
  } catch (const PreconditionError& err) {
    log << "config error: " << err.what() << '\n';
    return exit_config;
  } catch (const UnresolvedMatchingError& err) {
    error = std::string("unresolved: ") + err.what();
  } catch (const NumericalError& err) {
    error = std::string("numerical failure: ") + err.what();
  } catch (const std::exception& err) {
    error = std::string("failure: ") + err.what();
  }
  if (!error.empty()) {
    log << error << '\n';
    r.status = exit_violation;
  }

  const json manifest = {{"tool", "zeroflow"},
                         {"created", utc_timestamp()},
                         {"config", to_json(config)},
                         {"exit_code", r.status},
                         {"error", error.empty() ? json(nullptr) : json(error)},
                         {"artifacts", r.artifacts},
                         {"summary", r.summary}};
  std::ofstream out(config.output / "manifest.json");
  if (!out) {
    log << "cannot write manifest in " << config.output << '\n';
    return exit_violation;
  }
  out << manifest.dump(2) << '\n';
  return r.status;
}

}  // namespace zeroflow
