#include "zeroflow/dynamics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "zeroflow/errors.hpp"

namespace zeroflow {

// ---------------------------------------------------------------------------
// Nonlinearity factories

Nonlinearity Nonlinearity::burgers(ScalarFn h, ScalarFn H, SpaceTimeFn forcing, bool autonomous) {
  if (!h || !H) throw PreconditionError("burgers nonlinearity needs h and H");
  Nonlinearity nl;
  nl.kind = Kind::burgers;
  nl.autonomous = autonomous || !forcing;
  const double offset = H(0.0);
  if (offset != 0.0) {
    nl.H = [H = std::move(H), offset](double u) { return H(u) - offset; };
  } else {
    nl.H = std::move(H);
  }
  nl.h = std::move(h);
  nl.forcing = std::move(forcing);
  return nl;
}

Nonlinearity Nonlinearity::burgers_quadrature(ScalarFn h, SpaceTimeFn forcing, bool autonomous) {
  if (!h) throw PreconditionError("burgers nonlinearity needs h");
  ScalarFn H = [h](double u) {
    if (u == 0.0) return 0.0;
    double error = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(h, 0.0, u, 15, 1e-12, &error);
  };
  return burgers(std::move(h), std::move(H), std::move(forcing), autonomous);
}

Nonlinearity Nonlinearity::classical_burgers(SpaceTimeFn forcing, bool autonomous) {
  Nonlinearity nl = burgers([](double u) { return u; }, [](double u) { return 0.5 * u * u; }, std::move(forcing),
                            autonomous);
  nl.classical = true;
  return nl;
}

Nonlinearity Nonlinearity::reaction_term(ReactionFn g, bool autonomous) {
  if (!g) throw PreconditionError("reaction nonlinearity needs g");
  Nonlinearity nl;
  nl.kind = Kind::reaction;
  nl.autonomous = autonomous;
  nl.reaction = std::move(g);
  return nl;
}

Nonlinearity Nonlinearity::heat() {
  return reaction_term([](double, double, double) { return 0.0; }, true);
}

Nonlinearity Nonlinearity::gradient(PotentialFn V, PotentialFn dV_du) {
  if (!V || !dV_du) throw PreconditionError("gradient nonlinearity needs V and dV/du");
  Nonlinearity nl;
  nl.kind = Kind::gradient;
  nl.autonomous = true;
  nl.potential = std::move(V);
  nl.potential_du = std::move(dV_du);
  return nl;
}

std::string Nonlinearity::kind_name() const {
  switch (kind) {
    case Kind::burgers: return "burgers";
    case Kind::reaction: return "reaction";
    case Kind::gradient: return "gradient";
  }
  return "unknown";
}

namespace {

// Length of step k out of `steps` covering [t0, t1]. Every step has length
// dt unless the interval is not a whole number of steps.
double step_length(long long k, long long steps, double t0, double t1, double dt) {
  if (k + 1 < steps) return dt;
  const double rest = t1 - (t0 + static_cast<double>(k) * dt);
  if (std::abs(rest - dt) <= 1e-9 * dt) return dt;
  return rest > 0.0 ? rest : dt;
}

}  // namespace

long long step_count(double t0, double t1, double dt) {
  if (!(dt > 0.0)) throw PreconditionError("dt must be positive");
  if (t1 < t0) throw PreconditionError("evolution needs t1 >= t0");
  const double ratio = (t1 - t0) / dt;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio)) return static_cast<long long>(nearest);
  return static_cast<long long>(std::ceil(ratio));
}

// ---------------------------------------------------------------------------
// Stepper

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

// Largest forcing table a stepper keeps (doubles).
constexpr std::size_t kMaxForcingTable = std::size_t{8} << 20;

}  // namespace

struct Stepper::Impl {
  GridSpec grid;
  Nonlinearity nl;
  StepperConfig cfg;
  std::size_t n = 0;
  std::size_t modes = 0;

  FftwBuffer<double> real_buf;
  FftwBuffer<fftw_complex> spec_buf;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  std::vector<double> laplacian_symbol;

  struct Factors {
    std::vector<double> explicit_part;  // (1 + dt/2 l) / (1 - dt/2 l) / N
    std::vector<double> source_part;    // dt / (1 - dt/2 l) / N
  };
  std::map<double, Factors> factors;
  double last_dt = 0.0;
  const Factors* last_factors = nullptr;

  // Re-centred forcing rows at phases k*dt, filled lazily.
  long long steps_per_period = 0;
  std::vector<std::vector<double>> forcing_rows;

  // All FFT inputs and outputs live in fftw_malloc'd (aligned) buffers so the
  // plans can be re-executed on any of them.
  FftwBuffer<fftw_complex> u_hat, n0_hat, n1_hat;
  FftwBuffer<double> predicted;
  std::vector<double> flux, stage;

  Impl(GridSpec g, Nonlinearity nonlin, StepperConfig c) : grid(g), nl(std::move(nonlin)), cfg(c) {
    if (!(cfg.dt > 0.0)) throw PreconditionError("dt must be positive");
    if (cfg.max_halvings < 0) throw PreconditionError("max_halvings must be non-negative");
    grid = make_grid(g.cells, g.points_per_cell);
    n = grid.size();
    modes = n / 2 + 1;
    real_buf = fftw_buffer<double>(n);
    spec_buf = fftw_buffer<fftw_complex>(modes);
    {
      std::lock_guard lock(planner_mutex());
      forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_buf.get(), spec_buf.get(), FFTW_ESTIMATE);
      backward = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec_buf.get(), real_buf.get(), FFTW_ESTIMATE);
    }
    if (forward == nullptr || backward == nullptr) throw NumericalError("FFT planning failed");

    const double dx = grid.dx();
    laplacian_symbol.resize(modes);
    for (std::size_t k = 0; k < modes; ++k) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      laplacian_symbol[k] = (-2.0 * std::cos(2.0 * theta) + 32.0 * std::cos(theta) - 30.0) / (12.0 * dx * dx);
    }
    laplacian_symbol[0] = 0.0;

    if (nl.kind == Nonlinearity::Kind::burgers && nl.forcing && (nl.autonomous || nl.periodic_in_time)) {
      const double per = 1.0 / cfg.dt;
      const double rounded = std::round(per);
      const long long rows = nl.autonomous ? 1 : static_cast<long long>(rounded);
      if ((nl.autonomous || std::abs(per - rounded) <= 1e-9 * per) &&
          static_cast<std::size_t>(rows) * n <= kMaxForcingTable) {
        steps_per_period = rows;
        forcing_rows.resize(static_cast<std::size_t>(rows));
      }
    }

    u_hat = fftw_buffer<fftw_complex>(modes);
    n0_hat = fftw_buffer<fftw_complex>(modes);
    n1_hat = fftw_buffer<fftw_complex>(modes);
    predicted = fftw_buffer<double>(n);
    flux.resize(n + 4);
    stage.resize(n);
  }

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (forward != nullptr) fftw_destroy_plan(forward);
    if (backward != nullptr) fftw_destroy_plan(backward);
  }

  const Factors& factors_for(double dt) {
    if (last_factors != nullptr && dt == last_dt) return *last_factors;
    auto it = factors.find(dt);
    if (it != factors.end()) {
      last_dt = dt;
      last_factors = &it->second;
      return it->second;
    }
    Factors f;
    f.explicit_part.resize(modes);
    f.source_part.resize(modes);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < modes; ++k) {
      const double half = 0.5 * dt * laplacian_symbol[k];
      f.explicit_part[k] = (1.0 + half) / (1.0 - half) * inv_n;
      f.source_part[k] = dt / (1.0 - half) * inv_n;
    }
    last_dt = dt;
    last_factors = &factors.emplace(dt, std::move(f)).first->second;
    return *last_factors;
  }

  void centered_forcing(double t, std::span<double> out) const {
    for (std::size_t j = 0; j < n; ++j) out[j] = nl.forcing(t, grid.node(j));
    double ref = out[0];
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += out[j] - ref;
    const double mean = ref + s / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) out[j] -= mean;
  }

  // Forcing row at time t, from the table when t sits on the phase grid.
  const double* forcing_at(double t) {
    if (steps_per_period > 0) {
      std::size_t row = 0;
      bool tabulated = true;
      if (!nl.autonomous) {
        const double phase = t - std::floor(t);
        const double idx = std::round(phase / cfg.dt);
        tabulated = std::abs(phase - idx * cfg.dt) <= 1e-9 * cfg.dt;
        row = static_cast<std::size_t>(static_cast<long long>(idx) % steps_per_period);
      }
      if (tabulated) {
        auto& r = forcing_rows[row];
        if (r.empty()) {
          r.resize(n);
          // Fill from the canonical phase so rows do not depend on which
          // period first touched them.
          centered_forcing(static_cast<double>(row) * cfg.dt, r);
        }
        return r.data();
      }
    }
    centered_forcing(t, stage);
    return stage.data();
  }

  // out = g(t, x, u, u_x) evaluated on the grid.
  void evaluate_rhs(double t, std::span<const double> u, std::span<double> out) {
    switch (nl.kind) {
      case Nonlinearity::Kind::burgers: {
        // flux holds H(u) with two ghost values on each side.
        double* __restrict F = flux.data();
        const double* __restrict in = u.data();
        double* __restrict o = out.data();
        if (nl.classical) {
          for (std::size_t j = 0; j < n; ++j) F[j + 2] = 0.5 * in[j] * in[j];
        } else {
          for (std::size_t j = 0; j < n; ++j) F[j + 2] = nl.H(in[j]);
        }
        F[0] = F[n];
        F[1] = F[n + 1];
        F[n + 2] = F[2];
        F[n + 3] = F[3];
        const double inv = 1.0 / (12.0 * grid.dx());
        // F is offset by two ghost cells: F[j + 2] is node j.
        for (std::size_t j = 0; j < n; ++j) {
          o[j] = -(8.0 * (F[j + 3] - F[j + 1]) - (F[j + 4] - F[j])) * inv;
        }
        if (nl.forcing) {
          const double* __restrict f = forcing_at(t);
          for (std::size_t j = 0; j < n; ++j) o[j] += f[j];
        }
        break;
      }
      case Nonlinearity::Kind::reaction:
        for (std::size_t j = 0; j < n; ++j) out[j] = nl.reaction(t, grid.node(j), u[j]);
        break;
      case Nonlinearity::Kind::gradient:
        for (std::size_t j = 0; j < n; ++j) out[j] = -nl.potential_du(grid.node(j), u[j]);
        break;
    }
  }

  double max_speed(std::span<const double> u) const {
    if (nl.kind != Nonlinearity::Kind::burgers) return 0.0;
    double m = 0.0;
    if (nl.classical) {
      double lane[4] = {0.0, 0.0, 0.0, 0.0};
      std::size_t j = 0;
      for (; j + 4 <= u.size(); j += 4) {
        for (int l = 0; l < 4; ++l) lane[l] = std::max(lane[l], std::abs(u[j + l]));
      }
      for (; j < u.size(); ++j) lane[0] = std::max(lane[0], std::abs(u[j]));
      m = std::max(std::max(lane[0], lane[1]), std::max(lane[2], lane[3]));
    } else {
      for (double v : u) m = std::max(m, std::abs(nl.h(v)));
    }
    return m;
  }

  // One IMEX step of length dt, in place.
  void imex_step(std::span<double> u, double t, double dt) {
    const Factors& f = factors_for(dt);
    const double* a = f.explicit_part.data();
    const double* b = f.source_part.data();
    double* work = real_buf.get();
    const std::span<double> work_span(work, n);

    // Complex arrays viewed as interleaved doubles.
    double* __restrict spec = &spec_buf[0][0];
    const double* __restrict uh = &u_hat[0][0];
    const double* __restrict n0 = &n0_hat[0][0];
    const double* __restrict n1 = &n1_hat[0][0];

    std::copy(u.begin(), u.end(), work);
    fftw_execute_dft_r2c(forward, work, u_hat.get());
    evaluate_rhs(t, u, work_span);
    fftw_execute_dft_r2c(forward, work, n0_hat.get());

    // Predictor: CN diffusion, explicit Euler source.
    for (std::size_t k = 0; k < modes; ++k) {
      spec[2 * k] = a[k] * uh[2 * k] + b[k] * n0[2 * k];
      spec[2 * k + 1] = a[k] * uh[2 * k + 1] + b[k] * n0[2 * k + 1];
    }
    fftw_execute_dft_c2r(backward, spec_buf.get(), predicted.get());
    evaluate_rhs(t + dt, std::span<const double>(predicted.get(), n), work_span);
    fftw_execute_dft_r2c(forward, work, n1_hat.get());

    // Corrector: CN diffusion, trapezoidal source.
    for (std::size_t k = 0; k < modes; ++k) {
      spec[2 * k] = a[k] * uh[2 * k] + b[k] * (0.5 * (n0[2 * k] + n1[2 * k]));
      spec[2 * k + 1] = a[k] * uh[2 * k + 1] + b[k] * (0.5 * (n0[2 * k + 1] + n1[2 * k + 1]));
    }
    fftw_execute_dft_c2r(backward, spec_buf.get(), work);
    std::copy(work, work + n, u.begin());
  }

  void advance_one(std::span<double> u, double t, double dt, int depth) {
    const double speed = max_speed(u);
    if (speed * dt / grid.dx() > cfg.cfl_guard) {
      if (depth >= cfg.max_halvings) {
        double sup = 0.0;
        for (double v : u) sup = std::max(sup, std::abs(v));
        std::ostringstream msg;
        msg << "step rejection cascade exhausted at t = " << t << " (sup|u| = " << sup << ")";
        throw NumericalError(msg.str());
      }
      advance_one(u, t, 0.5 * dt, depth + 1);
      advance_one(u, t + 0.5 * dt, 0.5 * dt, depth + 1);
      return;
    }
    imex_step(u, t, dt);
    // A single non-finite entry poisons the sum. Four partial sums break the
    // add dependency chain; only finiteness is used.
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t j = 0;
    for (; j + 4 <= u.size(); j += 4) {
      for (int l = 0; l < 4; ++l) lane[l] += u[j + l];
    }
    for (; j < u.size(); ++j) lane[0] += u[j];
    if (!std::isfinite(lane[0] + lane[1] + lane[2] + lane[3])) {
      std::ostringstream msg;
      msg << "non-finite state after step at t = " << t << " (blow-up)";
      throw NumericalError(msg.str());
    }
  }

  void check_grid(const Field& u) const {
    if (!(u.grid() == grid)) throw PreconditionError("field grid does not match stepper grid");
  }
};

Stepper::Stepper(GridSpec grid, Nonlinearity nl, StepperConfig cfg)
    : impl_(std::make_unique<Impl>(grid, std::move(nl), cfg)) {}
Stepper::~Stepper() = default;
Stepper::Stepper(Stepper&&) noexcept = default;
Stepper& Stepper::operator=(Stepper&&) noexcept = default;

const GridSpec& Stepper::grid() const { return impl_->grid; }
const Nonlinearity& Stepper::nonlinearity() const { return impl_->nl; }
const StepperConfig& Stepper::config() const { return impl_->cfg; }

Field Stepper::step(const Field& u, double t) {
  impl_->check_grid(u);
  Field out = u;
  impl_->advance_one(out.values(), t, impl_->cfg.dt, 0);
  return out;
}

Field Stepper::advance(const Field& u0, double t0, double t1) {
  impl_->check_grid(u0);
  const double dt = impl_->cfg.dt;
  const long long steps = step_count(t0, t1, dt);
  Field u = u0;
  for (long long k = 0; k < steps; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    impl_->advance_one(u.values(), t, step_length(k, steps, t0, t1, dt), 0);
  }
  return u;
}

Trajectory Stepper::evolve(const Field& u0, double t0, double t1, std::span<const double> probes,
                           int snapshot_stride) {
  impl_->check_grid(u0);
  if (snapshot_stride < 1) throw PreconditionError("snapshot_stride must be >= 1");
  const double dt = impl_->cfg.dt;
  const long long steps = step_count(t0, t1, dt);

  Trajectory traj;
  traj.t0 = t0;
  traj.t1 = t1;
  traj.dt = dt;
  traj.probes.reserve(probes.size());
  for (double x : probes) {
    Probe p;
    p.x = x;
    p.series.reserve(static_cast<std::size_t>(steps) + 1);
    p.series.push_back(u0.interpolate(x));
    traj.probes.push_back(std::move(p));
  }
  traj.snapshots.push_back({t0, u0});

  Field u = u0;
  for (long long k = 0; k < steps; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    impl_->advance_one(u.values(), t, step_length(k, steps, t0, t1, dt), 0);
    for (auto& p : traj.probes) p.series.push_back(u.interpolate(p.x));
    if ((k + 1) % snapshot_stride == 0 || k + 1 == steps) {
      const double tk = (k + 1 == steps) ? t1 : t0 + static_cast<double>(k + 1) * dt;
      traj.snapshots.push_back({tk, u});
    }
  }
  return traj;
}

Field Stepper::time_one_map(const Field& u0, double t0) {
  const double per = 1.0 / impl_->cfg.dt;
  if (std::abs(per - std::round(per)) > 1e-9 * per) {
    throw PreconditionError("time-one map needs 1/dt to be an integer");
  }
  return advance(u0, t0, t0 + 1.0);
}

Field step(const Field& u, const Nonlinearity& nl, double t, const StepperConfig& cfg) {
  Stepper s(u.grid(), nl, cfg);
  return s.step(u, t);
}

Trajectory evolve(const Field& u0, const Nonlinearity& nl, double t0, double t1, const StepperConfig& cfg,
                  std::span<const double> probes, int snapshot_stride) {
  Stepper s(u0.grid(), nl, cfg);
  return s.evolve(u0, t0, t1, probes, snapshot_stride);
}

Field time_one_map(const Field& u0, const Nonlinearity& nl, double t0, const StepperConfig& cfg) {
  Stepper s(u0.grid(), nl, cfg);
  return s.time_one_map(u0, t0);
}

}  // namespace zeroflow
