#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "zeroflow/dynamics.hpp"
#include "zeroflow/errors.hpp"
#include "zeroflow/field.hpp"

using namespace zeroflow;
using std::numbers::pi;

namespace {

int sign_changes(const Field& w) {
  int c = 0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const bool a = w[j] >= 0.0;
    const bool b = w[(j + 1) % w.size()] >= 0.0;
    c += a != b;
  }
  return c;
}

// Smooth random profile: a few Fourier modes with decaying amplitudes.
Field smooth_random(GridSpec g, std::mt19937_64& rng, double mean, double amplitude) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  double a[4], b[4];
  for (int k = 0; k < 4; ++k) {
    a[k] = d(rng) * amplitude / (k + 1);
    b[k] = d(rng) * amplitude / (k + 1);
  }
  return sample(
      [&](double x) {
        double s = mean;
        for (int k = 0; k < 4; ++k) s += a[k] * std::sin(2 * pi * (k + 1) * x) + b[k] * std::cos(2 * pi * (k + 1) * x);
        return s;
      },
      g);
}

Nonlinearity forced_burgers(double amp = 0.2) {
  return Nonlinearity::classical_burgers(
      [amp](double t, double x) { return amp * std::sin(2 * pi * x) * std::cos(2 * pi * t); });
}

}  // namespace

TEST_CASE("heat decay of a single mode") {
  const auto g = make_grid(1, 128);
  const Field u0 = sample([](double x) { return std::sin(2 * pi * x); }, g);
  StepperConfig cfg;
  cfg.dt = 1e-4;
  const auto traj = evolve(u0, Nonlinearity::heat(), 0.0, 0.1, cfg, {}, 1000);
  CHECK(std::abs(traj.final_state().sup_norm() - std::exp(-4 * pi * pi * 0.1)) < 1e-4);
}

TEST_CASE("constants are preserved exactly") {
  const auto g = make_grid(1, 256);
  StepperConfig cfg;
  cfg.dt = 1e-3;
  const Field c = sample([](double) { return 0.3; }, g);
  Stepper burgers(g, Nonlinearity::classical_burgers(), cfg);
  Field u = c;
  for (int k = 0; k < 3; ++k) u = burgers.time_one_map(u, k);
  CHECK(u == c);

  const Field zero(g);
  const auto ac = Nonlinearity::reaction_term([](double, double, double v) { return v - v * v * v; });
  CHECK(time_one_map(zero, ac, 0.0, cfg) == zero);
  CHECK(time_one_map(c, Nonlinearity::heat(), 0.0, cfg) == c);
}

TEST_CASE("evolve over an empty interval") {
  const auto g = make_grid(1, 64);
  const Field u0 = sample([](double x) { return std::cos(2 * pi * x); }, g);
  const double probes[] = {0.25};
  const auto traj = evolve(u0, Nonlinearity::heat(), 0.0, 0.0, StepperConfig{}, probes);
  REQUIRE(traj.snapshots.size() == 1);
  CHECK(traj.snapshots[0].u == u0);
  CHECK(traj.probes[0].series.size() == 1);
}

TEST_CASE("heat: mode-2 pair annihilates before t = 0.01") {
  // Analytic solution sin(2 pi x) e^{-4pi^2 t} + 0.6 sin(4 pi x) e^{-16 pi^2 t}
  // loses its inner pair of zeroes at t* = ln(1.2)/(12 pi^2) ~ 0.00154.
  const auto g = make_grid(1, 512);
  const Field u0 = sample([](double x) { return std::sin(2 * pi * x) + 0.6 * std::sin(4 * pi * x); }, g);
  CHECK(sign_changes(u0) == 4);
  StepperConfig cfg;
  cfg.dt = 1e-5;
  const double probes[] = {0.0, 0.25};
  const auto traj = evolve(u0, Nonlinearity::heat(), 0.0, 0.01, cfg, probes, 100);
  CHECK(sign_changes(traj.final_state()) == 2);
  CHECK(traj.probes[0].series.size() == 1001);
  CHECK(traj.steps() == 1000);
  for (std::size_t k = 1; k < traj.snapshots.size(); ++k) CHECK(traj.snapshots[k].t > traj.snapshots[k - 1].t);
}

TEST_CASE("determinism: T(T(u)) equals evolution over [0, 2] bit for bit") {
  const auto g = make_grid(1, 128);
  std::mt19937_64 rng(5);
  const Field u0 = smooth_random(g, rng, 0.1, 0.5);
  StepperConfig cfg;
  cfg.dt = 1e-3;
  const auto nl = forced_burgers();
  const Field twice = time_one_map(time_one_map(u0, nl, 0.0, cfg), nl, 1.0, cfg);
  const Field direct = evolve(u0, nl, 0.0, 2.0, cfg, {}, 1000).final_state();
  CHECK(twice == direct);
  CHECK(evolve(u0, nl, 0.0, 2.0, cfg, {}, 1000).final_state() == direct);
}

TEST_CASE("time-one map rejects dt not dividing 1") {
  const auto g = make_grid(1, 64);
  StepperConfig cfg;
  cfg.dt = 0.3;
  CHECK_THROWS_AS(time_one_map(Field(g), Nonlinearity::heat(), 0.0, cfg), PreconditionError);
}

TEST_CASE("mass conservation in flux form") {
  const auto g = make_grid(1, 256);
  StepperConfig cfg;
  cfg.dt = 1e-4;
  const Field u0 = sample([](double x) { return 0.3 + 0.1 * std::sin(2 * pi * x); }, g);
  const auto traj = evolve(u0, forced_burgers(), 0.0, 2.0, cfg, {}, 1000);
  double drift = 0.0;
  for (const auto& s : traj.snapshots) drift = std::max(drift, std::abs(mass(s.u) - mass(u0)));
  CHECK(drift <= 1e-12 * 2.0);
}

TEST_CASE("comparison principle on random ordered pairs") {
  const auto g = make_grid(1, 128);
  StepperConfig cfg;
  cfg.dt = 1e-3;
  Stepper stepper(g, forced_burgers(), cfg);
  std::mt19937_64 rng(2024);
  int violations = 0;
  for (int pair = 0; pair < 50; ++pair) {
    const Field u0 = smooth_random(g, rng, 0.0, 0.6);
    Field gap = smooth_random(g, rng, 0.0, 0.3);
    const double lift = -*std::min_element(gap.values().begin(), gap.values().end());
    for (double& v : gap.values()) v += lift;  // gap >= 0, touching zero somewhere
    const Field v0 = u0 + gap;
    const auto tu = stepper.evolve(u0, 0.0, 1.0, {}, 100);
    const auto tv = stepper.evolve(v0, 0.0, 1.0, {}, 100);
    for (std::size_t k = 0; k < tu.snapshots.size(); ++k) {
      const Field& a = tu.snapshots[k].u;
      const Field& b = tv.snapshots[k].u;
      for (std::size_t j = 0; j < a.size(); ++j) violations += a[j] > b[j] + 1e-9;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("manufactured solution converges at second order") {
  // u* = e^{-t} sin(2 pi x) solves u_t = u_xx - u u_x + ghat with
  // ghat = (4 pi^2 - 1) e^{-t} sin(2 pi x) + pi e^{-2t} sin(4 pi x).
  auto nl = Nonlinearity::classical_burgers([](double t, double x) {
    return (4 * pi * pi - 1) * std::exp(-t) * std::sin(2 * pi * x) + pi * std::exp(-2 * t) * std::sin(4 * pi * x);
  });
  nl.periodic_in_time = false;
  const double t_end = 0.5;
  std::vector<double> errors;
  for (int level = 0; level < 3; ++level) {
    const int n = 16 << level;
    StepperConfig cfg;
    cfg.dt = 0.01 / (1 << level);
    const auto g = make_grid(1, n);
    const Field u0 = sample([](double x) { return std::sin(2 * pi * x); }, g);
    const Field u = Stepper(g, nl, cfg).advance(u0, 0.0, t_end);
    const Field exact = sample([&](double x) { return std::exp(-t_end) * std::sin(2 * pi * x); }, g);
    errors.push_back(sup_distance(u, exact));
  }
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double order = std::log2(errors[i - 1] / errors[i]);
    INFO("errors ", errors[i - 1], " -> ", errors[i]);
    CHECK(order >= 1.8);
  }
}

TEST_CASE("CFL guard splits steps and reports an exhausted cascade") {
  const auto g = make_grid(1, 64);
  const Field big = sample([](double x) { return 50.0 * std::sin(2 * pi * x); }, g);
  StepperConfig cfg;
  cfg.dt = 1e-2;
  cfg.cfl_guard = 0.5;
  cfg.max_halvings = 2;
  CHECK_THROWS_AS(step(big, Nonlinearity::classical_burgers(), 0.0, cfg), NumericalError);
  cfg.max_halvings = 8;
  const Field stepped = step(big, Nonlinearity::classical_burgers(), 0.0, cfg);
  CHECK(std::abs(mass(stepped)) < 1e-12);
}

TEST_CASE("blow-up is reported") {
  const auto g = make_grid(1, 16);
  const Field u0 = sample([](double) { return 2.0; }, g);
  StepperConfig cfg;
  cfg.dt = 0.5;
  const auto explosive = Nonlinearity::reaction_term([](double, double, double v) { return v * v * v * v; });
  CHECK_THROWS_AS(evolve(u0, explosive, 0.0, 50.0, cfg), NumericalError);
}

TEST_CASE("a-priori band for forced Burgers") {
  const auto g = make_grid(1, 128);
  StepperConfig cfg;
  cfg.dt = 1e-3;
  const double y = 0.1, c0 = 0.2;
  const Field u0 = sample([&](double x) { return y + c0 * std::sin(2 * pi * x); }, g);
  const auto traj = evolve(u0, forced_burgers(c0), 0.0, 3.0, cfg, {}, 10);
  for (const auto& s : traj.snapshots) {
    double d = 0.0;
    for (double v : s.u.values()) d = std::max(d, std::abs(v - y));
    CHECK(d <= c0 + 1e-6);
  }
}

TEST_CASE("quadrature antiderivative matches the analytic one") {
  const auto g = make_grid(1, 64);
  StepperConfig cfg;
  cfg.dt = 1e-3;
  const Field u0 = sample([](double x) { return 0.4 * std::sin(2 * pi * x); }, g);
  const auto analytic = Nonlinearity::burgers([](double u) { return u * u; }, [](double u) { return u * u * u / 3; });
  const auto quad = Nonlinearity::burgers_quadrature([](double u) { return u * u; });
  const Field a = evolve(u0, analytic, 0.0, 0.05, cfg).final_state();
  const Field b = evolve(u0, quad, 0.0, 0.05, cfg).final_state();
  CHECK(sup_distance(a, b) < 1e-12);
}

TEST_CASE("timing: one time-one map at reference resolution") {
  const auto g = make_grid(1, 256);
  StepperConfig cfg;
  cfg.dt = 1e-4;
  Stepper stepper(g, forced_burgers(), cfg);
  const Field u0 = sample([](double x) { return 0.2 + 0.4 * std::sin(2 * pi * x); }, g);
  const auto start = std::chrono::steady_clock::now();
  const Field u1 = stepper.time_one_map(u0, 0.0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("T at (1,256), dt=1e-4: ", secs, " s");
  CHECK(std::isfinite(u1.sup_norm()));
}
