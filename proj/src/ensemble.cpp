#include "zeroflow/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "zeroflow/errors.hpp"
#include "zeroflow/nodal.hpp"

namespace zeroflow {

const GridSpec& Ensemble::grid() const {
  if (members.empty()) throw PreconditionError("empty ensemble has no grid");
  return members.front().grid();
}

void validate(const Ensemble& e) {
  if (e.members.empty()) throw PreconditionError("ensemble needs at least one member");
  if (e.weights.size() != e.members.size()) throw PreconditionError("one weight per member required");
  const GridSpec& g = e.members.front().grid();
  if (g.cells < 2) throw PreconditionError("ensembles live on tori with at least 2 cells");
  double total = 0.0;
  for (std::size_t i = 0; i < e.members.size(); ++i) {
    if (!(e.members[i].grid() == g)) throw PreconditionError("ensemble members must share one grid");
    if (!(e.weights[i] >= 0.0)) throw PreconditionError("ensemble weights must be non-negative");
    total += e.weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12) throw PreconditionError("ensemble weights must sum to 1");
}

Ensemble make_ensemble(std::vector<Field> members, std::uint64_t seed, std::string lineage) {
  Ensemble e;
  const double w = members.empty() ? 0.0 : 1.0 / static_cast<double>(members.size());
  e.weights.assign(members.size(), w);
  e.members = std::move(members);
  e.seed = seed;
  e.lineage = std::move(lineage);
  validate(e);
  return e;
}

// ---------------------------------------------------------------------------
// Bernoulli construction

namespace {

double slope(const std::function<double(double)>& f, double x, double h) { return (f(x + h) - f(x)) / h; }

}  // namespace

Ensemble bernoulli_ensemble(const std::function<double(double)>& p0, const std::function<double(double)>& p1,
                            GridSpec grid, int count, std::uint64_t seed, const BernoulliOptions& options) {
  if (count < 2) throw PreconditionError("a Bernoulli ensemble needs at least 2 members");
  if (options.antithetic && count % 2 != 0) throw PreconditionError("antithetic ensembles need an even count");
  if (options.block_cells < 1 || grid.cells % options.block_cells != 0) {
    throw PreconditionError("block_cells must divide the number of cells");
  }
  if (!(options.jitter >= 0.0 && options.jitter < 1.0)) throw PreconditionError("jitter must lie in [0, 1)");
  grid = make_grid(grid.cells, grid.points_per_cell);

  const double B = options.block_cells;
  const double c = p0(0.0);
  for (double v : {p0(B), p1(0.0), p1(B)}) {
    if (std::abs(v - c) > 1e-12) {
      std::ostringstream msg;
      msg << "profiles disagree at the block ends: " << c << " vs " << v;
      throw PreconditionError(msg.str());
    }
  }
  if (options.match_derivatives) {
    const double h = 1e-6;
    const double d0 = slope(p0, 0.0, h), d1 = slope(p1, 0.0, h);
    const double e0 = slope(p0, B - h, h), e1 = slope(p1, B - h, h);
    if (std::abs(d0 - d1) > 1e-4 || std::abs(e0 - e1) > 1e-4 || std::abs(d0 - e0) > 1e-4) {
      throw PreconditionError("profiles have different slopes at the block ends");
    }
  }

  const auto n = static_cast<std::size_t>(grid.points_per_cell);
  const std::size_t block_nodes = n * static_cast<std::size_t>(options.block_cells);
  const std::size_t blocks = grid.size() / block_nodes;
  std::vector<double> s0(block_nodes), s1(block_nodes);
  for (std::size_t j = 0; j < block_nodes; ++j) {
    s0[j] = p0(grid.node(j)) - c;
    s1[j] = p1(grid.node(j)) - c;
  }

  std::mt19937_64 rng(seed);
  auto build = [&](const std::vector<int>& letters, const std::vector<double>& eps) {
    std::vector<double> values(grid.size());
    for (std::size_t b = 0; b < blocks; ++b) {
      const auto& s = letters[b] == 0 ? s0 : s1;
      for (std::size_t j = 0; j < block_nodes; ++j) values[b * block_nodes + j] = c + (1.0 + eps[b]) * s[j];
    }
    return Field(grid, std::move(values));
  };

  std::vector<Field> members;
  std::vector<int> letters(blocks);
  std::vector<double> eps(blocks);
  while (static_cast<int>(members.size()) < count) {
    for (std::size_t b = 0; b < blocks; ++b) {
      letters[b] = static_cast<int>(rng() >> 63);
      const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      eps[b] = options.jitter * (2.0 * unit - 1.0);
    }
    members.push_back(build(letters, eps));
    if (options.antithetic) {
      for (int& l : letters) l = 1 - l;
      members.push_back(build(letters, eps));
    }
  }

  std::ostringstream lineage;
  lineage << "bernoulli(count=" << count << ", cells=" << grid.cells << ", n=" << grid.points_per_cell
          << ", block_cells=" << options.block_cells << ", jitter=" << options.jitter
          << ", antithetic=" << (options.antithetic ? "true" : "false") << ", seed=" << seed << ")";
  return make_ensemble(std::move(members), seed, lineage.str());
}

// ---------------------------------------------------------------------------
// Zero functionals

double density_of_zeroes(const Field& u, const Field& v) {
  if (!(u.grid() == v.grid())) throw PreconditionError("fields live on different grids");
  const double L = u.grid().cells;
  return zero_count(u, v, {0.0, L}) / L;
}

double zero_functional(const Ensemble& e, const Ensemble& f) {
  validate(e);
  validate(f);
  if (!(e.grid() == f.grid())) throw PreconditionError("ensembles live on different grids");
  double z = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t j = 0; j < f.size(); ++j) {
      z += e.weights[i] * f.weights[j] * density_of_zeroes(e.members[i], f.members[j]);
    }
  }
  return z;
}

double zero_functional(const Ensemble& e) {
  validate(e);
  const std::size_t m = e.size();
  const double L = e.grid().cells;
  // Not symmetric in general: where u_i - u_j vanishes exactly at a node,
  // sgn(0) = + treats the two orderings differently. Self-pairs count 0.
  std::vector<int> counts(m * m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i != j) counts[i * m + j] = zero_count(e.members[i], e.members[j], {0.0, L});
    }
  }
  double z = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) z += e.weights[i] * e.weights[j] * (counts[i * m + j] / L);
  }
  return z;
}

double zero_functional(const Ensemble& e, const Field& f) {
  validate(e);
  double z = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) z += e.weights[i] * density_of_zeroes(e.members[i], f);
  return z;
}

double zero_functional_bruteforce(const Ensemble& e) {
  validate(e);
  const int L = e.grid().cells;
  std::vector<std::vector<Field>> shifted(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (int k = 0; k < L; ++k) shifted[i].push_back(shift_cell(e.members[i], k));
  }
  double z = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t j = 0; j < e.size(); ++j) {
      int total = 0;
      for (int k = 0; k < L; ++k) total += zero_count(shifted[i][k], shifted[j][k], {0.0, 1.0});
      z += e.weights[i] * e.weights[j] * (total / static_cast<double>(L));
    }
  }
  return z;
}

namespace {

Field fit_to(const Field& target, const GridSpec& grid) {
  if (target.grid() == grid) return target;
  if (target.grid().points_per_cell != grid.points_per_cell) {
    throw PreconditionError("target resolution differs from the ensemble grid");
  }
  return tile(target, grid.cells);
}

}  // namespace

double weakstar_distance(const Ensemble& e, const Field& target) {
  validate(e);
  const Field v = fit_to(target, e.grid());
  double d = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) d += e.weights[i] * sup_distance(e.members[i], v);
  return d;
}

double weakstar_distance(const Ensemble& e, const PeriodicOrbit& orbit) {
  return weakstar_distance(e, orbit.profile);
}

// ---------------------------------------------------------------------------
// Evolution

namespace {

// Applies T once to every member, splitting members across workers by index.
void apply_time_one(std::vector<Field>& members, std::vector<Stepper>& steppers, double t0) {
  const std::size_t workers = steppers.size();
  std::vector<std::string> errors(members.size());
  auto work = [&](std::size_t w) {
    for (std::size_t i = w; i < members.size(); i += workers) {
      try {
        members[i] = steppers[w].time_one_map(members[i], t0);
      } catch (const NumericalError& err) {
        errors[i] = err.what();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) throw NumericalError("member " + std::to_string(i) + ": " + errors[i]);
  }
}

double max_pair_density(const Ensemble& e) {
  double m = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t j = i + 1; j < e.size(); ++j) m = std::max(m, density_of_zeroes(e.members[i], e.members[j]));
  }
  return m;
}

}  // namespace

std::pair<EnsembleReport, Ensemble> evolve_ensemble(const Ensemble& e, const Nonlinearity& nl, int iterates,
                                                     const StepperConfig& cfg, const EnsembleOptions& options) {
  validate(e);
  if (iterates < 0) throw PreconditionError("iterates must be non-negative");
  unsigned threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
  threads = std::min<unsigned>(threads, static_cast<unsigned>(e.size()));
  std::vector<Stepper> steppers;
  for (unsigned w = 0; w < threads; ++w) steppers.emplace_back(e.grid(), nl, cfg);

  std::optional<Field> target;
  if (options.target) target = fit_to(*options.target, e.grid());

  EnsembleReport report;
  Ensemble current = e;
  std::size_t visits = 0;
  auto record = [&](int k) {
    report.Z_mu.push_back(zero_functional(current));
    if (target) {
      report.weakstar_dist.push_back(weakstar_distance(current, *target));
      if (k > 0) {
        for (const auto& u : current.members) visits += sup_distance(u, *target) < options.epsilon;
      }
    }
    if (k > 0 && report.Z_mu[k] > report.Z_mu[k - 1] + options.tolerance) report.violations.push_back(k);
    if (options.observer) options.observer(k, current);
  };

  record(0);
  for (int k = 1; k <= iterates; ++k) {
    apply_time_one(current.members, steppers, static_cast<double>(k - 1));
    record(k);
    report.iterates = k;
    if (target && options.stop_below > 0.0 && report.weakstar_dist.back() <= options.stop_below) break;
  }
  report.zeta_hat = max_pair_density(current);
  if (target && report.iterates > 0) {
    report.visit_freq =
        static_cast<double>(visits) / (static_cast<double>(report.iterates) * static_cast<double>(e.size()));
  }
  std::ostringstream lineage;
  lineage << e.lineage << " |> T^" << report.iterates;
  current.lineage = lineage.str();
  return {std::move(report), std::move(current)};
}

double omega_average_stats(std::span<const Field> states, const Field& target, double epsilon) {
  if (!(epsilon > 0.0)) throw PreconditionError("epsilon must be positive");
  if (states.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& u : states) hits += sup_distance(u, target) < epsilon;
  return static_cast<double>(hits) / static_cast<double>(states.size());
}

double omega_average_stats(const Trajectory& traj, const Field& target, double epsilon) {
  std::vector<Field> states;
  for (const auto& s : traj.snapshots) states.push_back(s.u);
  return omega_average_stats(states, target, epsilon);
}

// ---------------------------------------------------------------------------
// Gradient case

double gradient_energy(const Field& u, const Nonlinearity::PotentialFn& V) {
  if (!V) throw PreconditionError("gradient energy needs a potential");
  const Field ux = derivative(u);
  double sum = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) sum += 0.5 * ux[j] * ux[j] + V(u.grid().node(j), u[j]);
  return sum * u.grid().dx() / u.grid().cells;
}

EnergyTrace evolve_gradient_ensemble(const Ensemble& e, const Nonlinearity& nl, double t1, const StepperConfig& cfg) {
  validate(e);
  if (nl.kind != Nonlinearity::Kind::gradient) throw PreconditionError("energy tracking needs a gradient nonlinearity");
  Stepper stepper(e.grid(), nl, cfg);
  EnergyTrace trace;
  trace.final = e;
  for (std::size_t m = 0; m < e.size(); ++m) {
    const Trajectory traj = stepper.evolve(e.members[m], 0.0, t1, {}, 1);
    std::vector<double> energy;
    energy.reserve(traj.snapshots.size());
    for (const auto& s : traj.snapshots) {
      energy.push_back(gradient_energy(s.u, nl.potential));
      if (energy.size() > 1) trace.max_increase = std::max(trace.max_increase, energy.back() - energy[energy.size() - 2]);
    }
    trace.energies.push_back(std::move(energy));
    trace.final.members[m] = traj.final_state();
  }
  std::ostringstream lineage;
  lineage << e.lineage << " |> gradient flow to t=" << t1;
  trace.final.lineage = lineage.str();
  return trace;
}

std::pair<double, double> plateau_fractions(const Ensemble& e, double level, double tol) {
  validate(e);
  double plus = 0.0, minus = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    std::size_t p = 0, q = 0;
    for (double v : e.members[i].values()) {
      p += std::abs(v - level) < tol;
      q += std::abs(v + level) < tol;
    }
    const double n = static_cast<double>(e.members[i].size());
    plus += e.weights[i] * static_cast<double>(p) / n;
    minus += e.weights[i] * static_cast<double>(q) / n;
  }
  return {plus, minus};
}

// ---------------------------------------------------------------------------
// Projection

std::pair<double, double> projection_pi(const Field& u) { return {u[0], derivative(u)[0]}; }

InjectivityReport injectivity_report(std::span<const Field> fields) {
  InjectivityReport r;
  r.min_distance = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> pts;
  for (const auto& f : fields) pts.push_back(projection_pi(f));
  r.first_coordinate_increasing = true;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i > 0 && !(pts[i].first > pts[i - 1].first)) r.first_coordinate_increasing = false;
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double d = std::hypot(pts[i].first - pts[j].first, pts[i].second - pts[j].second);
      if (d < r.min_distance) {
        r.min_distance = d;
        r.first = i;
        r.second = j;
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Export

void write_ensemble_jsonl(const Ensemble& e, std::ostream& out) {
  const nlohmann::json record = {{"seed", e.seed},
                                 {"lineage", e.lineage},
                                 {"members", e.size()},
                                 {"cells", e.grid().cells},
                                 {"points_per_cell", e.grid().points_per_cell},
                                 {"weights", e.weights}};
  out << record.dump() << '\n';
}

void write_report_jsonl(const EnsembleReport& r, std::ostream& out) {
  nlohmann::json record = {{"Z_mu", r.Z_mu},
                           {"zeta_hat", r.zeta_hat},
                           {"visit_freq", r.visit_freq},
                           {"iterates", r.iterates},
                           {"violations", r.violations}};
  if (!r.weakstar_dist.empty()) record["weakstar_dist"] = r.weakstar_dist;
  out << record.dump() << '\n';
}

void write_series_csv(const EnsembleReport& r, std::ostream& out) {
  const bool with_distance = !r.weakstar_dist.empty();
  out << "iterate,Z_mu" << (with_distance ? ",weakstar" : "") << '\n';
  out.precision(17);
  for (std::size_t k = 0; k < r.Z_mu.size(); ++k) {
    out << k << ',' << r.Z_mu[k];
    if (with_distance) out << ',' << r.weakstar_dist[k];
    out << '\n';
  }
}

}  // namespace zeroflow
