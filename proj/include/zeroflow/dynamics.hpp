#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "zeroflow/field.hpp"

namespace zeroflow {

/// Right-hand side g(t, x, u, u_x) of u_t = u_xx + g.
///
/// Three families are supported:
///  - burgers:  g = -h(u) u_x + ghat(t, x), advected in flux form -(H(u))_x
///              with H' = h, H(0) = 0; ghat is re-centred to zero spatial mean
///              at every evaluation time, so the total mass is invariant.
///  - reaction: g = g(t, x, u).
///  - gradient: g = -dV/du(x, u) for a potential V(x, u).
struct Nonlinearity {
  enum class Kind { burgers, reaction, gradient };

  using ScalarFn = std::function<double(double)>;
  using SpaceTimeFn = std::function<double(double t, double x)>;
  using ReactionFn = std::function<double(double t, double x, double u)>;
  using PotentialFn = std::function<double(double x, double u)>;

  Kind kind = Kind::reaction;
  bool autonomous = true;
  /// Non-autonomous terms repeat with period 1 in t. Clear this for
  /// aperiodic forcing (e.g. manufactured solutions) so nothing is tabulated.
  bool periodic_in_time = true;

  ScalarFn h;
  ScalarFn H;
  SpaceTimeFn forcing;
  /// Set by classical_burgers(); the stepper then evaluates h and H inline.
  bool classical = false;

  ReactionFn reaction;

  PotentialFn potential;
  PotentialFn potential_du;

  /// h with its antiderivative H; `forcing` may be empty (no forcing).
  static Nonlinearity burgers(ScalarFn h, ScalarFn H, SpaceTimeFn forcing = {}, bool autonomous = false);
  /// h only; H(u) = int_0^u h is evaluated by adaptive Gauss-Kronrod
  /// quadrature to 1e-12 relative tolerance. Much slower than an analytic H.
  static Nonlinearity burgers_quadrature(ScalarFn h, SpaceTimeFn forcing = {}, bool autonomous = false);
  /// Classical viscous Burgers h(u) = u, H(u) = u^2/2.
  static Nonlinearity classical_burgers(SpaceTimeFn forcing = {}, bool autonomous = false);
  static Nonlinearity reaction_term(ReactionFn g, bool autonomous = true);
  static Nonlinearity heat();
  static Nonlinearity gradient(PotentialFn V, PotentialFn dV_du);

  [[nodiscard]] std::string kind_name() const;
};

enum class Scheme { imex_cn_heun };

/// Crank-Nicolson diffusion with Heun (explicit trapezoid) for g.
struct StepperConfig {
  double dt = 1e-4;
  Scheme scheme = Scheme::imex_cn_heun;
  /// Largest admissible dt * sup|h(u)| / dx before a step is split in half.
  double cfl_guard = 0.5;
  int max_halvings = 8;
};

struct Snapshot {
  double t = 0.0;
  Field u;
};

struct Probe {
  double x = 0.0;
  /// One value per accepted step, plus the initial value.
  std::vector<double> series;
};

struct Trajectory {
  double t0 = 0.0;
  double t1 = 0.0;
  double dt = 0.0;
  std::vector<Snapshot> snapshots;
  std::vector<Probe> probes;

  [[nodiscard]] std::size_t steps() const { return probes.empty() ? 0 : probes.front().series.size() - 1; }
  [[nodiscard]] const Field& final_state() const { return snapshots.back().u; }
};

/// Reusable time integrator for one (grid, nonlinearity, config) triple.
///
/// The diffusion operator is the periodic 4th-order 5-point Laplacian. It is
/// circulant, so each Crank-Nicolson solve is done exactly in Fourier space.
/// A Stepper owns FFT buffers and is not safe to share between threads;
/// create one per worker.
class Stepper {
 public:
  Stepper(GridSpec grid, Nonlinearity nl, StepperConfig cfg);
  ~Stepper();
  Stepper(Stepper&&) noexcept;
  Stepper& operator=(Stepper&&) noexcept;
  Stepper(const Stepper&) = delete;
  Stepper& operator=(const Stepper&) = delete;

  [[nodiscard]] const GridSpec& grid() const;
  [[nodiscard]] const Nonlinearity& nonlinearity() const;
  [[nodiscard]] const StepperConfig& config() const;

  /// One step of length cfg.dt starting at time t.
  Field step(const Field& u, double t);

  /// Final state at t1, nothing recorded.
  Field advance(const Field& u0, double t0, double t1);

  Trajectory evolve(const Field& u0, double t0, double t1, std::span<const double> probes = {},
                    int snapshot_stride = 1);

  /// T(u0): evolution over [t0, t0 + 1]. Requires 1/dt to be an integer.
  Field time_one_map(const Field& u0, double t0 = 0.0);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Field step(const Field& u, const Nonlinearity& nl, double t, const StepperConfig& cfg);
Trajectory evolve(const Field& u0, const Nonlinearity& nl, double t0, double t1, const StepperConfig& cfg,
                  std::span<const double> probes = {}, int snapshot_stride = 1);
Field time_one_map(const Field& u0, const Nonlinearity& nl, double t0, const StepperConfig& cfg);

/// Number of steps of size dt covering [t0, t1]; a non-integral ratio adds
/// one shortened final step.
long long step_count(double t0, double t1, double dt);

}  // namespace zeroflow
