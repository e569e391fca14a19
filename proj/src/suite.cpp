#include "zeroflow/suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include "zeroflow/burgers.hpp"
#include "zeroflow/dynamics.hpp"
#include "zeroflow/ensemble.hpp"
#include "zeroflow/nodal.hpp"

namespace zeroflow {

using std::numbers::pi;

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "balance_heat_annihilation", "balance_translating_flux", "zero_number_monotone", "mass_invariance",
      "apriori_band",              "vfamily_ordering",         "convergence_to_orbit", "cole_hopf_oracle",
      "measure_monotone",          "weakstar_convergence",     "allen_cahn_plateaus",  "projection_injective",
      "omega_visits"};
  return names;
}

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

StepperConfig with_dt(double dt) {
  StepperConfig cfg;
  cfg.dt = dt;
  return cfg;
}

Nonlinearity forced_burgers() {
  return Nonlinearity::classical_burgers(
      [](double t, double x) { return 0.2 * std::sin(2 * pi * x) * std::cos(2 * pi * t); });
}

Field constant(double c, GridSpec g) {
  return sample([c](double) { return c; }, g);
}

// Mean plus four Fourier modes with amplitudes up to 0.3 / k.
Field random_profile(GridSpec g, std::mt19937_64& rng, double mean) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  double a[4], b[4];
  for (int k = 0; k < 4; ++k) {
    a[k] = 0.3 * d(rng) / (k + 1);
    b[k] = 0.3 * d(rng) / (k + 1);
  }
  return sample(
      [&](double x) {
        double s = mean;
        for (int k = 0; k < 4; ++k) {
          s += a[k] * std::sin(2 * pi * (k + 1) * x) + b[k] * std::cos(2 * pi * (k + 1) * x);
        }
        return s;
      },
      g);
}

class Suite {
 public:
  explicit Suite(const SuiteOptions& o) : opt_(o) {}

  Outcome run(const std::string& name) {
    if (name == "balance_heat_annihilation") return balance_heat();
    if (name == "balance_translating_flux") return balance_translating();
    if (name == "zero_number_monotone") return zero_number();
    if (name == "mass_invariance") return mass_drift();
    if (name == "apriori_band") return band();
    if (name == "vfamily_ordering") return vfamily();
    if (name == "convergence_to_orbit") return convergence();
    if (name == "cole_hopf_oracle") return cole_hopf();
    if (name == "measure_monotone") return measure_monotone();
    if (name == "weakstar_convergence") return weakstar();
    if (name == "allen_cahn_plateaus") return allen_cahn();
    if (name == "projection_injective") return projection();
    if (name == "omega_visits") return omega();
    return {false, "unknown invariant"};
  }

 private:
  SuiteOptions opt_;

  // Pair runs shared by the zero-number and mass checks.
  struct PairRuns {
    int pairs = 0;
    int iterates = 0;
    int violations = 0;
    int first_violation_pair = -1;
    int initial_zeros = 0;
    int final_zeros = 0;
    double drift_rate = 0.0;
  };
  std::optional<PairRuns> pair_runs_;

  [[nodiscard]] bool quick() const { return opt_.quick; }

  Outcome balance_heat() {
    const auto g = make_grid(1, 512);
    const double probes[] = {0.0};
    const Field w0 = sample([](double x) { return std::sin(2 * pi * x) + 0.6 * std::sin(4 * pi * x); }, g);
    const auto traj = evolve(w0, Nonlinearity::heat(), 0.0, 0.01, with_dt(1e-5), probes, 1);
    const auto l = balance_ledger(traj, {0.0, 1.0, 0.0, 0.01});
    std::ostringstream d;
    d << "Z " << l.Z_start << " -> " << l.Z_end << ", F_left " << l.F_left << ", F_right " << l.F_right << ", D "
      << l.D << ", residual " << l.residual;
    const bool ok = l.Z_start == 4 && l.Z_end == 2 && l.F_left == l.F_right && l.D == 2 && l.residual == 0;
    return {ok, d.str()};
  }

  Outcome balance_translating() {
    const double probes[] = {0.0, 0.5};
    const auto traj = sample_trajectory([](double x, double t) { return std::sin(2 * pi * (x - t)); },
                                        make_grid(1, 128), 0.0, 0.25, 1e-3, probes);
    const auto l = balance_ledger(traj, {0.0, 0.5, 0.0, 0.25});
    std::ostringstream d;
    d << "Z " << l.Z_start << " -> " << l.Z_end << ", F_left " << l.F_left << ", F_right " << l.F_right << ", D "
      << l.D << ", residual " << l.residual;
    return {l.residual == 0 && l.D == 0 && (l.F_left != 0 || l.F_right != 0), d.str()};
  }

  const PairRuns& pair_runs() {
    if (pair_runs_) return *pair_runs_;
    PairRuns r;
    r.pairs = quick() ? 8 : 100;
    r.iterates = quick() ? 4 : 20;
    const auto g = make_grid(1, quick() ? 128 : 256);
    Stepper stepper(g, forced_burgers(), with_dt(quick() ? 1e-3 : 1e-4));
    std::mt19937_64 rng(opt_.seed);
    std::uniform_real_distribution<double> mean(-0.5, 0.5);
    for (int p = 0; p < r.pairs; ++p) {
      const double mu = mean(rng);
      double mv = mean(rng);
      while (std::abs(mv - mu) < 0.05) mv = mean(rng);
      Field u = random_profile(g, rng, mu);
      Field v = random_profile(g, rng, mv);
      const double mu0 = mass(u), mv0 = mass(v);
      int z = zero_count(u, v, {0.0, 1.0});
      r.initial_zeros += z;
      for (int k = 1; k <= r.iterates; ++k) {
        const double t0 = static_cast<double>(k - 1);
        u = stepper.time_one_map(u, t0);
        v = stepper.time_one_map(v, t0);
        const int next = zero_count(u, v, {0.0, 1.0});
        if (next > z) {
          ++r.violations;
          if (r.first_violation_pair < 0) r.first_violation_pair = p;
        }
        z = next;
        const double drift = std::max(std::abs(mass(u) - mu0), std::abs(mass(v) - mv0)) / k;
        r.drift_rate = std::max(r.drift_rate, drift);
      }
      r.final_zeros += z;
    }
    pair_runs_ = r;
    return *pair_runs_;
  }

  Outcome zero_number() {
    const auto& r = pair_runs();
    std::ostringstream d;
    d << r.pairs << " pairs x " << r.iterates << " iterates, " << r.violations << " violations, total zeroes "
      << r.initial_zeros << " -> " << r.final_zeros;
    if (r.first_violation_pair >= 0) d << ", first in pair " << r.first_violation_pair;
    return {r.violations == 0, d.str()};
  }

  Outcome mass_drift() {
    const auto& r = pair_runs();
    std::ostringstream d;
    d << std::scientific << std::setprecision(2) << "max drift " << r.drift_rate << " per unit time over "
      << 2 * r.pairs << " runs";
    return {r.drift_rate <= 1e-11, d.str()};
  }

  Outcome band() {
    const auto g = make_grid(1, 256);
    const double dt = 1e-4;
    const auto nl = forced_burgers();
    const auto b = apriori_band(nl, g, dt);
    double table_error = 0.0;
    for (int p = b.p_first; p <= b.p_last(); ++p) {
      table_error = std::max(table_error, std::abs(b.at(p) - band_constant(p, b.c0)));
    }
    const double horizon = quick() ? 2.0 : 10.0;
    Stepper stepper(g, nl, with_dt(dt));
    int held = 0, runs = 0;
    for (double y : {-0.5, 0.0, 0.3}) {
      const Field u0 = sample(
          [y](double x) { return y + 0.2 * (0.7 * std::sin(2 * pi * x) + 0.3 * std::cos(6 * pi * x)); }, g);
      ++runs;
      held += check_band(stepper.evolve(u0, 0.0, horizon, {}, 10), y, b, 1e-6);
    }
    std::ostringstream d;
    d << "c0 " << b.c0 << ", band held in " << held << "/" << runs << " runs over t <= " << horizon
      << ", table error " << std::scientific << std::setprecision(1) << table_error;
    const bool ok = std::abs(b.c0 - 0.2) <= 1e-15 && b.monotone && table_error <= 1e-14 && held == runs;
    return {ok, d.str()};
  }

  Outcome vfamily() {
    const auto g = quick() ? make_grid(1, 64) : make_grid(1, 256);
    const auto cfg = with_dt(quick() ? 1e-3 : 1e-4);
    const auto nl = forced_burgers();
    const std::vector<double> ys = {-0.5, -0.25, 0.0, 0.25, 0.5};
    VFamilyOptions vo;
    vo.tol = 1e-8;
    const auto family = solve_v_family(nl, ys, g, cfg, vo);
    VFamilyOptions perturbed = vo;
    perturbed.seed = [](double y, GridSpec grid) {
      return sample([y](double x) { return y + 0.05 * std::sin(2 * pi * x) + 0.03 * std::cos(4 * pi * x); }, grid);
    };
    const auto again = solve_v_family(nl, ys, g, cfg, perturbed);
    double worst_residual = 0.0, restart = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      worst_residual = std::max(worst_residual, family.orbits[i].residual);
      restart = std::max(restart, sup_distance(family.orbits[i].profile, again.orbits[i].profile));
    }
    std::ostringstream d;
    d << std::scientific << std::setprecision(2) << "max residual " << worst_residual << ", min gap "
      << family.min_gap() << ", restart distance " << restart;
    return {worst_residual <= 1e-8 && family.strictly_ordered() && family.min_gap() > 0.0 && restart <= 1e-7,
            d.str()};
  }

  Outcome convergence() {
    const auto g = quick() ? make_grid(1, 64) : make_grid(1, 256);
    Stepper stepper(g, forced_burgers(), with_dt(quick() ? 1e-3 : 1e-4));
    VFamilyOptions vo;
    vo.tol = 1e-10;
    const auto orbit = solve_periodic_orbit(stepper, 0.2, vo);
    const Field u0 = sample([](double x) { return 0.2 + 0.4 * std::sin(2 * pi * x); }, g);
    const auto s = converge_to_vy(u0, stepper, orbit, 500, 1e-6);
    std::ostringstream d;
    if (s.first_hit) {
      d << "distance <= 1e-6 at k = " << *s.first_hit;
    } else {
      d << "no hit within 500 iterates";
    }
    d << ", transient " << s.transient;
    return {s.first_hit && *s.first_hit <= 500 && s.transient <= 5, d.str()};
  }

  static double cole_hopf_error(int n, double dt, double t_end, bool forced) {
    const auto g = make_grid(1, n);
    const Field u0 = sample([](double x) { return std::sin(2 * pi * x); }, g);
    Nonlinearity::SpaceTimeFn f;
    if (forced) f = [](double t, double x) { return 0.2 * std::sin(2 * pi * x) * std::cos(2 * pi * t); };
    return cole_hopf_crosscheck(u0, f, t_end, with_dt(dt)).relative_error;
  }

  Outcome cole_hopf() {
    const double unforced = cole_hopf_error(256, 1e-4, 0.1, false);
    const double forced = cole_hopf_error(256, 1e-4, 0.5, true);
    // dt and dx halve together; coarser levels are still pre-asymptotic.
    const double e1 = cole_hopf_error(128, 1e-3, 0.1, false);
    const double e2 = cole_hopf_error(256, 5e-4, 0.1, false);
    const double e3 = cole_hopf_error(512, 2.5e-4, 0.1, false);
    const double order = std::min(std::log2(e1 / e2), std::log2(e2 / e3));
    std::ostringstream d;
    d << std::scientific << std::setprecision(2) << "unforced " << unforced << ", forced " << forced
      << std::fixed << ", order " << order;
    return {unforced <= 1e-4 && forced <= 1e-3 && order >= 1.8, d.str()};
  }

  Outcome measure_monotone() {
    const auto g = make_grid(8, 32);
    const int members = quick() ? 16 : 64;
    const int iterates = quick() ? 10 : 50;
    const auto p0 = [](double x) { return 0.4 * std::sin(pi * x) * std::sin(pi * x); };
    const auto p1 = [&](double x) { return -p0(x); };
    const auto e = bernoulli_ensemble(p0, p1, g, members, opt_.seed);
    std::map<int, double> brute;
    EnsembleOptions eo;
    eo.tolerance = 1e-12;
    eo.observer = [&](int k, const Ensemble& current) {
      if (k == 0 || k == iterates / 2 || k == iterates) brute[k] = zero_functional_bruteforce(current);
    };
    const auto [report, out] = evolve_ensemble(e, forced_burgers(), iterates, with_dt(1e-3), eo);
    bool exact = brute.size() == 3;
    for (const auto& [k, z] : brute) exact = exact && z == report.Z_mu[static_cast<std::size_t>(k)];
    std::ostringstream d;
    d << members << " members, Z_mu " << report.Z_mu.front() << " -> " << report.Z_mu.back() << ", "
      << report.violations.size() << " increases, brute force " << (exact ? "exact" : "MISMATCH") << " at 0, "
      << iterates / 2 << ", " << iterates;
    return {report.violations.empty() && exact, d.str()};
  }

  Outcome weakstar() {
    const auto g = make_grid(8, 32);
    const auto cfg = with_dt(1e-3);
    const auto nl = forced_burgers();
    Stepper one_cell(make_grid(1, 32), nl, cfg);
    VFamilyOptions vo;
    vo.tol = 1e-12;
    const auto v0 = solve_periodic_orbit(one_cell, 0.0, vo);

    const auto p0 = [](double x) { return 0.4 * std::sin(2 * pi * x) * std::sin(pi * x) * std::sin(pi * x); };
    const auto p1 = [&](double x) { return -p0(x); };
    const auto e = bernoulli_ensemble(p0, p1, g, quick() ? 16 : 64, opt_.seed);
    EnsembleOptions eo;
    eo.target = v0.profile;
    eo.stop_below = 1e-4;
    const auto [report, out] = evolve_ensemble(e, nl, 200, cfg, eo);
    const double reached = report.weakstar_dist.back();

    const auto control = make_ensemble({constant(-0.1, g), constant(-0.05, g), constant(0.05, g), constant(0.1, g)},
                                       opt_.seed, "constants");
    EnsembleOptions co;
    co.target = v0.profile;
    const int control_iterates = quick() ? 20 : 200;
    const auto [control_report, control_out] = evolve_ensemble(control, nl, control_iterates, cfg, co);
    const auto& cd = control_report.weakstar_dist;
    const double control_min = *std::min_element(cd.begin(), cd.end());

    std::ostringstream d;
    d << std::scientific << std::setprecision(2) << "mass-0 ensemble " << reached << " after "
      << report.iterates << " iterates; control min " << control_min << ", final " << cd.back();
    return {reached < 1e-4 && report.iterates <= 200 && control_min > 1e-2, d.str()};
  }

  Outcome allen_cahn() {
    const double block = 16.0;
    const auto p0 = [block](double x) { return -0.99 * std::tanh(2 * x) * std::tanh(2 * (block - x)); };
    const auto p1 = [&](double x) { return -p0(x); };
    BernoulliOptions bo;
    bo.block_cells = 16;
    bo.antithetic = true;
    const auto e = bernoulli_ensemble(p0, p1, make_grid(16, 16), quick() ? 4 : 16, opt_.seed, bo);
    const auto nl = Nonlinearity::gradient([](double, double u) { return 0.25 * u * u * u * u - 0.5 * u * u; },
                                           [](double, double u) { return u * u * u - u; });
    const double horizon = quick() ? 5.0 : 50.0;
    const auto trace = evolve_gradient_ensemble(e, nl, horizon, with_dt(1e-2));
    const auto [plus, minus] = plateau_fractions(trace.final, 1.0, 0.1);
    std::ostringstream d;
    d << "fractions +1: " << plus << ", -1: " << minus << std::scientific << std::setprecision(1)
      << ", max energy increase " << trace.max_increase;
    const bool ok = std::abs(plus - 0.5) <= 0.1 && std::abs(minus - 0.5) <= 0.1 && trace.max_increase <= 1e-9;
    return {ok, d.str()};
  }

  Outcome projection() {
    std::vector<double> ys;
    const int count = quick() ? 5 : 21;
    for (int i = 0; i < count; ++i) ys.push_back(-1.0 + 2.0 * i / (count - 1));
    VFamilyOptions vo;
    vo.tol = 1e-10;
    const auto family = solve_v_family(forced_burgers(), ys, make_grid(1, 64), with_dt(1e-3), vo);
    std::vector<Field> profiles;
    for (const auto& o : family.orbits) profiles.push_back(o.profile);
    const auto r = injectivity_report(profiles);
    std::ostringstream d;
    d << count << " orbits, first coordinate " << (r.first_coordinate_increasing ? "increasing" : "NOT increasing")
      << ", min distance " << r.min_distance;
    return {r.first_coordinate_increasing && r.min_distance > 0.0, d.str()};
  }

  Outcome omega() {
    const auto g = make_grid(1, 64);
    Stepper stepper(g, forced_burgers(), with_dt(1e-3));
    VFamilyOptions vo;
    vo.tol = 1e-11;
    const double y0 = 0.1;
    const auto orbit = solve_periodic_orbit(stepper, y0, vo);
    Field u = sample([y0](double x) { return y0 + 0.3 * std::sin(2 * pi * x) + 0.1 * std::cos(4 * pi * x); }, g);
    const int iterates = quick() ? 100 : 500;
    std::vector<Field> states;
    for (int k = 1; k <= iterates; ++k) {
      u = stepper.time_one_map(u, static_cast<double>(k - 1));
      states.push_back(u);
    }
    const double freq = omega_average_stats(states, orbit.profile, 1e-3);
    std::ostringstream d;
    d << "visit frequency " << freq << " over " << iterates << " iterates";
    return {freq >= 0.9, d.str()};
  }
};

double budget_for(const std::string& name) {
  if (name == "balance_heat_annihilation") return 10.0;
  if (name == "balance_translating_flux") return 1.0;
  if (name == "zero_number_monotone") return 300.0;
  if (name == "vfamily_ordering") return 600.0;
  return 0.0;
}

}  // namespace

std::vector<CheckResult> run_suite(const SuiteOptions& options,
                                   const std::function<void(const CheckResult&)>& on_result) {
  for (const auto& name : options.only) {
    const auto& names = suite_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw std::invalid_argument("unknown invariant '" + name + "'");
    }
  }
  Suite suite(options);
  std::vector<CheckResult> results;
  for (const auto& name : suite_names()) {
    if (!options.only.empty() && std::find(options.only.begin(), options.only.end(), name) == options.only.end()) {
      continue;
    }
    CheckResult r;
    r.name = name;
    r.budget_seconds = budget_for(name);
    const auto start = std::chrono::steady_clock::now();
    try {
      const Outcome o = suite.run(name);
      r.passed = o.passed;
      r.detail = o.detail;
    } catch (const std::exception& err) {
      r.passed = false;
      r.detail = std::string("error: ") + err.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (r.budget_seconds > 0.0 && r.seconds >= r.budget_seconds) {
      r.passed = false;
      r.detail += " (over the time budget)";
    }
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  }
  return results;
}

std::string format_result(const CheckResult& r) {
  std::ostringstream out;
  out << (r.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(26) << r.name << std::right << std::fixed
      << std::setprecision(2) << std::setw(8) << r.seconds << " s";
  if (r.budget_seconds > 0.0) out << " (limit " << std::setprecision(0) << r.budget_seconds << " s)";
  out << "  " << r.detail;
  return out.str();
}

}  // namespace zeroflow
