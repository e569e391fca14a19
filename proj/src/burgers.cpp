#include "zeroflow/burgers.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "json.hpp"
#include "zeroflow/errors.hpp"

namespace zeroflow {

using std::numbers::pi;

double band_constant(int p, double c0) {
  const double pp = p;
  return std::pow(pp * pp / ((2.0 * pp - 1.0) * pi * pi), 1.0 / (2.0 * pp)) * c0;
}

double AprioriBand::at(int p) const {
  if (p < p_first || p > p_last()) throw PreconditionError("p outside the stored band range");
  return c2p[static_cast<std::size_t>(p - p_first)];
}

double check_mass_invariance(const Trajectory& traj, const Nonlinearity& nl) {
  if (nl.kind != Nonlinearity::Kind::burgers) {
    throw PreconditionError("mass invariance applies to burgers nonlinearities, got " + nl.kind_name());
  }
  if (traj.snapshots.empty()) return 0.0;
  const double m0 = mass(traj.snapshots.front().u);
  double drift = 0.0;
  for (const auto& s : traj.snapshots) drift = std::max(drift, std::abs(mass(s.u) - m0));
  return drift;
}

AprioriBand apriori_band(const Nonlinearity& nl, GridSpec grid, double dt, int p_first, int p_last) {
  if (nl.kind != Nonlinearity::Kind::burgers) throw PreconditionError("a-priori band needs a burgers nonlinearity");
  if (p_first < 1 || p_last < p_first) throw PreconditionError("invalid band range");
  if (!(dt > 0.0)) throw PreconditionError("dt must be positive");
  AprioriBand band;
  band.p_first = p_first;
  if (nl.forcing) {
    const long long phases = nl.autonomous ? 1 : static_cast<long long>(std::ceil(1.0 / dt - 1e-9));
    std::vector<double> row(grid.size());
    for (long long k = 0; k < phases; ++k) {
      const double t = static_cast<double>(k) * dt;
      double mean = 0.0;
      for (std::size_t j = 0; j < row.size(); ++j) {
        row[j] = nl.forcing(t, grid.node(j));
        mean += row[j];
      }
      mean /= static_cast<double>(row.size());
      for (double v : row) band.c0 = std::max(band.c0, std::abs(v - mean));
    }
  }
  // Log form of the closed expression; band_constant evaluates it with pow.
  for (int p = p_first; p <= p_last; ++p) {
    const double pp = p;
    const double log_ratio = 2.0 * std::log(pp) - std::log(2.0 * pp - 1.0) - 2.0 * std::log(pi);
    band.c2p.push_back(std::exp(log_ratio / (2.0 * pp)) * band.c0);
  }
  band.monotone = true;
  for (std::size_t i = 0; i < band.c2p.size(); ++i) {
    if (band.c2p[i] < band.c0) band.monotone = false;
    if (i > 0 && band.c0 > 0.0 && !(band.c2p[i] < band.c2p[i - 1])) band.monotone = false;
  }
  return band;
}

bool check_band(const Trajectory& traj, double y, const AprioriBand& band, double slack) {
  for (const auto& s : traj.snapshots) {
    for (double v : s.u.values()) {
      if (std::abs(v - y) > band.c0 + slack) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// v^y family

bool VFamily::strictly_ordered() const {
  return std::all_of(gaps.begin(), gaps.end(), [](double g) { return g > 0.0; });
}

double VFamily::min_gap() const {
  if (gaps.empty()) return std::numeric_limits<double>::infinity();
  return *std::min_element(gaps.begin(), gaps.end());
}

PeriodicOrbit solve_periodic_orbit(Stepper& stepper, double y, const VFamilyOptions& options) {
  if (!(options.tol > 0.0)) throw PreconditionError("tolerance must be positive");
  if (!(options.damping > 0.0 && options.damping <= 1.0)) throw PreconditionError("damping must lie in (0, 1]");
  const GridSpec grid = stepper.grid();
  Field u = options.seed ? options.seed(y, grid) : sample([y](double) { return y; }, grid);
  if (std::abs(mass(u) - y) > 1e-12) {
    std::ostringstream msg;
    msg << "seed for y = " << y << " has mass " << mass(u);
    throw PreconditionError(msg.str());
  }
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= options.max_iter; ++it) {
    Field image = stepper.time_one_map(u, 0.0);
    residual = sup_distance(image, u);
    if (residual <= options.tol) return {y, std::move(u), residual, it};
    if (it == options.max_iter) break;
    if (options.damping == 1.0) {
      u = std::move(image);
    } else {
      u = u * (1.0 - options.damping) + image * options.damping;
    }
  }
  std::ostringstream msg;
  msg << "fixed-point iteration for y = " << y << " did not reach " << options.tol << " within "
      << options.max_iter << " iterates (residual " << residual << ")";
  throw NumericalError(msg.str());
}

VFamily solve_v_family(const Nonlinearity& nl, std::vector<double> ys, GridSpec grid, const StepperConfig& cfg,
                       const VFamilyOptions& options) {
  std::sort(ys.begin(), ys.end());
  Stepper stepper(grid, nl, cfg);
  VFamily family;
  for (double y : ys) family.orbits.push_back(solve_periodic_orbit(stepper, y, options));
  for (std::size_t i = 1; i < family.orbits.size(); ++i) {
    const Field& lo = family.orbits[i - 1].profile;
    const Field& hi = family.orbits[i].profile;
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < lo.size(); ++j) gap = std::min(gap, hi[j] - lo[j]);
    family.gaps.push_back(gap);
  }
  return family;
}

ConvergenceSeries converge_to_vy(const Field& u0, Stepper& stepper, const PeriodicOrbit& orbit, int max_n,
                                 double threshold) {
  if (std::abs(mass(u0) - orbit.y) > 1e-12) {
    std::ostringstream msg;
    msg << "mass mismatch: initial mass " << mass(u0) << " but the orbit lies on y = " << orbit.y;
    throw PreconditionError(msg.str());
  }
  ConvergenceSeries series;
  Field u = u0;
  series.distances.push_back(sup_distance(u, orbit.profile));
  for (int k = 0; k <= max_n; ++k) {
    if (series.distances.back() <= threshold) {
      series.first_hit = k;
      break;
    }
    if (k == max_n) break;
    u = stepper.time_one_map(u, 0.0);
    series.distances.push_back(sup_distance(u, orbit.profile));
  }
  const auto& d = series.distances;
  int transient = static_cast<int>(d.size()) - 1;
  while (transient > 0 && d[static_cast<std::size_t>(transient) - 1] > d[static_cast<std::size_t>(transient)]) {
    --transient;
  }
  series.transient = transient;
  return series;
}

// ---------------------------------------------------------------------------
// Cole-Hopf

Field antiderivative(const Field& u) {
  const std::size_t n = u.size();
  const double length = u.grid().circumference();
  const double m = mass(u);
  if (std::abs(m) > 1e-12) throw PreconditionError("antiderivative needs a zero-mean field");
  // Fourier coefficients; the Nyquist mode has no well-defined antiderivative
  // on the grid and is dropped.
  const std::size_t half = n / 2;
  std::vector<std::complex<double>> coef(half + 1);
  for (std::size_t k = 1; k <= half; ++k) {
    std::complex<double> s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double angle = -2.0 * pi * static_cast<double>(k * j % n) / static_cast<double>(n);
      s += u[j] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    coef[k] = s / static_cast<double>(n);
  }
  Field out(u.grid());
  for (std::size_t j = 0; j < n; ++j) {
    const double x = u.grid().node(j);
    double value = 0.0;
    for (std::size_t k = 1; k < half || (k == half && n % 2 == 1); ++k) {
      const double omega = 2.0 * pi * static_cast<double>(k) / length;
      const std::complex<double> e(std::cos(omega * x) - 1.0, std::sin(omega * x));
      // Real field: modes k and -k combine to twice the real part.
      value += 2.0 * (coef[k] * e / std::complex<double>(0.0, omega)).real();
    }
    out[j] = value;
  }
  return out;
}

double forcing_potential(const Nonlinearity::SpaceTimeFn& forcing, double t, double x, double cells) {
  using Rule = boost::math::quadrature::gauss<double, 15>;
  auto f = [&](double y) { return forcing(t, y); };
  // Cell by cell, so the rule only ever sees one period of the integrand.
  auto integral = [&](double upper) {
    double sum = 0.0;
    double a = 0.0;
    for (; a + 1.0 <= upper; a += 1.0) sum += Rule::integrate(f, a, a + 1.0);
    if (upper > a) sum += Rule::integrate(f, a, upper);
    return sum;
  };
  return integral(x) - x * integral(cells) / cells;
}

ColeHopfResult cole_hopf_crosscheck(const Field& u0, const Nonlinearity::SpaceTimeFn& forcing, double t_end,
                                    const StepperConfig& cfg) {
  if (std::abs(mass(u0)) > 1e-12) {
    throw PreconditionError("Cole-Hopf needs mass(u0) = 0, got " + std::to_string(mass(u0)));
  }
  const GridSpec grid = u0.grid();
  ColeHopfResult result;

  Nonlinearity burgers = Nonlinearity::classical_burgers(forcing);
  result.burgers = evolve(u0, burgers, 0.0, t_end, cfg).final_state();

  const Field primitive = antiderivative(u0);
  Field phi0(grid);
  for (std::size_t j = 0; j < grid.size(); ++j) phi0[j] = std::exp(-0.5 * primitive[j]);
  Nonlinearity linear = Nonlinearity::heat();
  if (forcing) {
    const double cells = grid.circumference();
    linear = Nonlinearity::reaction_term(
        [forcing, cells](double t, double x, double phi) { return -0.5 * forcing_potential(forcing, t, x, cells) * phi; },
        false);
  }
  const Trajectory phi_traj = evolve(phi0, linear, 0.0, t_end, cfg);
  result.min_phi = std::numeric_limits<double>::infinity();
  for (const auto& s : phi_traj.snapshots) {
    for (double v : s.u.values()) result.min_phi = std::min(result.min_phi, v);
  }
  if (!(result.min_phi > 0.0)) {
    throw NumericalError("phi lost strict positivity (min " + std::to_string(result.min_phi) + ")");
  }
  const Field& phi = phi_traj.final_state();
  const Field phi_x = derivative(phi);
  result.cole_hopf = Field(grid);
  for (std::size_t j = 0; j < grid.size(); ++j) result.cole_hopf[j] = -2.0 * phi_x[j] / phi[j];

  result.absolute_error = sup_distance(result.burgers, result.cole_hopf);
  const double scale = result.burgers.sup_norm();
  result.relative_error = scale > 0.0 ? result.absolute_error / scale : result.absolute_error;
  return result;
}

// ---------------------------------------------------------------------------
// Archives

namespace {

nlohmann::json orbit_record(const PeriodicOrbit& orbit, const std::string& profile_file) {
  return {{"y", orbit.y},
          {"residual", orbit.residual},
          {"iterations", orbit.iterations},
          {"cells", orbit.profile.grid().cells},
          {"points_per_cell", orbit.profile.grid().points_per_cell},
          {"profile", profile_file}};
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

void write_orbit(const PeriodicOrbit& orbit, const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  write_csv(orbit.profile, dir / (stem + ".csv"));
  write_json(orbit_record(orbit, stem + ".csv"), dir / (stem + ".json"));
}

void write_family(const VFamily& family, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json orbits = nlohmann::json::array();
  for (std::size_t i = 0; i < family.orbits.size(); ++i) {
    const std::string stem = "orbit_" + std::to_string(i);
    write_orbit(family.orbits[i], dir, stem);
    orbits.push_back(orbit_record(family.orbits[i], stem + ".csv"));
  }
  const nlohmann::json record = {{"orbits", orbits},
                                 {"min_pointwise_gaps", family.gaps},
                                 {"strictly_ordered", family.strictly_ordered()}};
  write_json(record, dir / "family.json");
}

}  // namespace zeroflow
