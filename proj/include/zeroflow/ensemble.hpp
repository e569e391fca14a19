#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zeroflow/burgers.hpp"
#include "zeroflow/dynamics.hpp"
#include "zeroflow/field.hpp"

namespace zeroflow {

/// Finite weighted family of fields on a shared L-cell torus, standing in
/// for a shift-invariant measure. Every expectation is additionally averaged
/// over the L cyclic cell shifts of each member, so empirical shift
/// invariance holds exactly.
struct Ensemble {
  std::vector<Field> members;
  std::vector<double> weights;
  std::uint64_t seed = 0;
  std::string lineage;

  [[nodiscard]] const GridSpec& grid() const;
  [[nodiscard]] std::size_t size() const { return members.size(); }
};

/// Equal weights; checks the grid and weight invariants.
Ensemble make_ensemble(std::vector<Field> members, std::uint64_t seed = 0, std::string lineage = "explicit");
void validate(const Ensemble& e);

struct BernoulliOptions {
  /// Cells covered by one letter; the profiles live on [0, block_cells].
  int block_cells = 1;
  /// Relative amplitude jitter, drawn uniformly in [-jitter, jitter] once
  /// per letter block and applied about the common endpoint value.
  double jitter = 1e-3;
  /// Members come in pairs with complementary letters and equal jitter.
  bool antithetic = false;
  /// Also require matching one-sided derivatives at the block ends.
  bool match_derivatives = false;
};

/// Members are concatenations of i.i.d. fair letters choosing p0 or p1 on
/// each block. Both profiles must take the same value at 0 and block_cells.
Ensemble bernoulli_ensemble(const std::function<double(double)>& p0, const std::function<double(double)>& p1,
                            GridSpec grid, int count, std::uint64_t seed, const BernoulliOptions& options = {});

/// Zero density of a pair on the torus: total circle count / L, i.e. the
/// exact average over the L shifts of the one-cell count.
double density_of_zeroes(const Field& u, const Field& v);

/// Z(mu) = sum_{i,j} w_i w_j density(u_i, u_j) over ordered pairs including
/// self-pairs.
double zero_functional(const Ensemble& e);
/// Mixed form sum_{i,j} w_i w'_j density(u_i, v_j).
double zero_functional(const Ensemble& e, const Ensemble& f);
double zero_functional(const Ensemble& e, const Field& f);
/// Same value as zero_functional(e), recomputed by shifting every member
/// through all L cells and counting on [0, 1) pair by pair.
double zero_functional_bruteforce(const Ensemble& e);

/// Weighted mean over members of ||u - v||_inf on the full torus. A profile
/// on fewer cells is tiled first.
double weakstar_distance(const Ensemble& e, const Field& target);
double weakstar_distance(const Ensemble& e, const PeriodicOrbit& orbit);

struct EnsembleOptions {
  /// Allowed increase of Z_mu between iterates.
  double tolerance = 1e-12;
  /// Weak* target; when set, the report carries the distance series and
  /// the visit frequency of its epsilon-neighbourhood.
  std::optional<Field> target;
  double epsilon = 1e-3;
  /// Stop as soon as the weak* distance drops to this value (0 disables).
  double stop_below = 0.0;
  /// Worker threads for member evolution; 0 picks the hardware count.
  unsigned threads = 1;
  /// Called after every iterate with (iterate, ensemble).
  std::function<void(int, const Ensemble&)> observer;
};

struct EnsembleReport {
  std::vector<double> Z_mu;           // index = iterate, 0 .. iterates
  std::vector<double> weakstar_dist;  // empty without a target
  /// Largest pair density at the last iterate; finite on any torus.
  double zeta_hat = 0.0;
  /// Fraction of (member, iterate >= 1) within epsilon of the target.
  double visit_freq = 0.0;
  /// Iterates actually taken (fewer than requested after an early stop).
  int iterates = 0;
  /// Iterates k with Z_mu[k] > Z_mu[k-1] + tolerance.
  std::vector<int> violations;
};

/// Applies T to every member `iterates` times. A member blowing up is
/// reported as a NumericalError naming the member.
std::pair<EnsembleReport, Ensemble> evolve_ensemble(const Ensemble& e, const Nonlinearity& nl, int iterates,
                                                     const StepperConfig& cfg, const EnsembleOptions& options = {});

/// Fraction of recorded states with ||u - target||_inf < epsilon.
double omega_average_stats(std::span<const Field> states, const Field& target, double epsilon);
double omega_average_stats(const Trajectory& traj, const Field& target, double epsilon);

/// (1/L) * integral of u_x^2 / 2 + V(x, u) over the torus.
double gradient_energy(const Field& u, const Nonlinearity::PotentialFn& V);

struct EnergyTrace {
  /// energies[m][k]: member m after k steps.
  std::vector<std::vector<double>> energies;
  Ensemble final;
  /// Largest step-to-step increase over all members.
  double max_increase = 0.0;
};

/// Evolves every member of a gradient-flow ensemble over [0, t1] and records
/// the energy after every step.
EnergyTrace evolve_gradient_ensemble(const Ensemble& e, const Nonlinearity& nl, double t1, const StepperConfig& cfg);

/// Pooled fractions of grid points within tol of +level and of -level.
std::pair<double, double> plateau_fractions(const Ensemble& e, double level = 1.0, double tol = 0.1);

/// pi(u) = (u(0), u_x(0)).
std::pair<double, double> projection_pi(const Field& u);

struct InjectivityReport {
  double min_distance = 0.0;
  std::size_t first = 0;
  std::size_t second = 0;
  /// u_i(0) strictly increasing in list order.
  bool first_coordinate_increasing = false;
};

InjectivityReport injectivity_report(std::span<const Field> fields);

/// Manifest record: seed, lineage, weights, grid.
void write_ensemble_jsonl(const Ensemble& e, std::ostream& out);
void write_report_jsonl(const EnsembleReport& r, std::ostream& out);
/// iterate,Z_mu[,weakstar]
void write_series_csv(const EnsembleReport& r, std::ostream& out);

}  // namespace zeroflow
