#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "zeroflow/dynamics.hpp"
#include "zeroflow/field.hpp"

namespace zeroflow {

/// A T-invariant profile v^y at phase t = 0.
struct PeriodicOrbit {
  double y = 0.0;
  Field profile;
  /// ||T(profile) - profile||_inf
  double residual = 0.0;
  int iterations = 0;
};

/// Sup-norm band radius c0 = sup|ghat| and the constants
/// c_{2p} = (p^2 / ((2p - 1) pi^2))^{1/(2p)} c0 for p in [p_first, p_last].
struct AprioriBand {
  double c0 = 0.0;
  int p_first = 54;
  std::vector<double> c2p;
  /// c_{2p} is decreasing over the stored range and stays above c0.
  bool monotone = false;

  [[nodiscard]] int p_last() const { return p_first + static_cast<int>(c2p.size()) - 1; }
  [[nodiscard]] double at(int p) const;
};

/// Closed form of c_{2p} for a given c0.
double band_constant(int p, double c0);

/// max over snapshots of |mass(u(t)) - mass(u(t0))|. Throws unless `nl` is
/// a burgers nonlinearity.
double check_mass_invariance(const Trajectory& traj, const Nonlinearity& nl);

/// c0 is the sup of the re-centred forcing over the grid nodes and the
/// phases k*dt of one period (a single phase when autonomous).
AprioriBand apriori_band(const Nonlinearity& nl, GridSpec grid, double dt, int p_first = 54, int p_last = 400);

/// True iff ||u(t) - y||_inf <= c0 + slack at every snapshot.
bool check_band(const Trajectory& traj, double y, const AprioriBand& band, double slack = 1e-6);

struct VFamilyOptions {
  double tol = 1e-8;
  int max_iter = 200;
  /// Picard weight: u <- (1 - damping) u + damping T(u).
  double damping = 1.0;
  /// Starting profile for mass y; defaults to the constant y. The seed must
  /// have mass y.
  std::function<Field(double y, GridSpec grid)> seed;
};

struct VFamily {
  std::vector<PeriodicOrbit> orbits;  // sorted by y
  /// gaps[i] = min_x (v^{y_{i+1}} - v^{y_i})
  std::vector<double> gaps;

  [[nodiscard]] bool strictly_ordered() const;
  [[nodiscard]] double min_gap() const;
};

/// Fixed point of T on the mass slice y by plain (optionally damped)
/// iteration. Throws NumericalError with the last residual if tol is not
/// reached within max_iter.
PeriodicOrbit solve_periodic_orbit(Stepper& stepper, double y, const VFamilyOptions& options = {});
VFamily solve_v_family(const Nonlinearity& nl, std::vector<double> ys, GridSpec grid, const StepperConfig& cfg,
                       const VFamilyOptions& options = {});

struct ConvergenceSeries {
  /// d_k = ||T^k u0 - v^y||_inf, k = 0 .. (first hit or max_n).
  std::vector<double> distances;
  std::optional<int> first_hit;
  /// Smallest k such that d is strictly decreasing from k on.
  int transient = 0;
};

/// Iterates T from u0 and records the distance to the orbit profile until it
/// drops to `threshold` (default 1e-6) or max_n iterates have been taken.
/// The series stops at the first hit: beyond it only round-off remains.
ConvergenceSeries converge_to_vy(const Field& u0, Stepper& stepper, const PeriodicOrbit& orbit, int max_n,
                                 double threshold = 1e-6);

struct ColeHopfResult {
  double relative_error = 0.0;
  double absolute_error = 0.0;
  double min_phi = 0.0;
  Field burgers;     // direct solution at t_end
  Field cole_hopf;   // -2 phi_x / phi at t_end
};

/// Spectral antiderivative x -> int_0^x u of a zero-mean field.
Field antiderivative(const Field& u);

/// G(t, x) = int_0^x ghat(t, y) dy with ghat re-centred to zero mean over
/// the circle of circumference `cells`, so G is periodic in x.
double forcing_potential(const Nonlinearity::SpaceTimeFn& forcing, double t, double x, double cells);

/// Evolves classical Burgers directly and through phi_t = phi_xx - G phi / 2
/// with phi0 = exp(-int_0^x u0 / 2), G_x = ghat, and compares at t_end.
/// `forcing` may be empty.
ColeHopfResult cole_hopf_crosscheck(const Field& u0, const Nonlinearity::SpaceTimeFn& forcing, double t_end,
                                    const StepperConfig& cfg);

/// Orbit archive: <stem>.csv with the profile, and a JSON record with y,
/// residual, iterations and the profile file name.
void write_orbit(const PeriodicOrbit& orbit, const std::filesystem::path& dir, const std::string& stem);
/// Family archive: one orbit archive per y plus family.json carrying the
/// ordering certificate.
void write_family(const VFamily& family, const std::filesystem::path& dir);

}  // namespace zeroflow
