#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "zeroflow/ensemble.hpp"
#include "zeroflow/errors.hpp"

using namespace zeroflow;
using std::numbers::pi;

namespace {

double bump(double x) { return 0.4 * std::sin(pi * x) * std::sin(pi * x); }
double dip(double x) { return -bump(x); }

Field constant(double c, GridSpec g) {
  return sample([c](double) { return c; }, g);
}

StepperConfig with_dt(double dt) {
  StepperConfig cfg;
  cfg.dt = dt;
  return cfg;
}

}  // namespace

TEST_CASE("bernoulli preconditions") {
  const auto g = make_grid(8, 16);
  CHECK_THROWS_AS(bernoulli_ensemble(bump, dip, g, 1, 0), PreconditionError);
  CHECK_THROWS_AS(bernoulli_ensemble(bump, [](double x) { return 0.1 + dip(x); }, g, 4, 0), PreconditionError);
  BernoulliOptions odd;
  odd.antithetic = true;
  CHECK_THROWS_AS(bernoulli_ensemble(bump, dip, g, 3, 0, odd), PreconditionError);
  BernoulliOptions wide;
  wide.block_cells = 3;
  CHECK_THROWS_AS(bernoulli_ensemble(bump, dip, g, 4, 0, wide), PreconditionError);
  CHECK_THROWS_AS(make_ensemble({constant(0, make_grid(1, 16))}), PreconditionError);
  CHECK_THROWS_AS(make_ensemble({constant(0, g), constant(0, make_grid(8, 8))}), PreconditionError);
}

TEST_CASE("bernoulli cells carry one of two masses") {
  const auto g = make_grid(8, 32);
  const auto e = bernoulli_ensemble(bump, dip, g, 10, 42);
  REQUIRE(e.size() == 10);
  CHECK(e.weights[3] == doctest::Approx(0.1));
  int plus = 0, minus = 0;
  for (const auto& u : e.members) {
    for (double m : mass_per_cell(u)) {
      CHECK(std::abs(std::abs(m) - 0.2) <= 0.2e-3 + 1e-12);
      (m > 0 ? plus : minus)++;
    }
  }
  CHECK(plus + minus == 80);
  CHECK(plus > 20);
  CHECK(minus > 20);

  const auto again = bernoulli_ensemble(bump, dip, g, 10, 42);
  for (std::size_t i = 0; i < e.size(); ++i) CHECK(sup_distance(e.members[i], again.members[i]) == 0.0);
  CHECK(sup_distance(e.members[0], bernoulli_ensemble(bump, dip, g, 10, 43).members[0]) > 0.0);

  // Equal profiles: every member is the tiled profile up to the jitter.
  const auto same = bernoulli_ensemble(bump, bump, g, 4, 7);
  const Field tiled = sample(bump, g);
  for (const auto& u : same.members) CHECK(sup_distance(u, tiled) <= 0.4e-3 + 1e-15);
}

TEST_CASE("antithetic partners are mirror images") {
  BernoulliOptions opts;
  opts.antithetic = true;
  opts.jitter = 0.0;
  const auto e = bernoulli_ensemble(bump, dip, make_grid(4, 16), 6, 1, opts);
  for (std::size_t i = 0; i < e.size(); i += 2) {
    CHECK(sup_distance(e.members[i], e.members[i + 1] * -1.0) == 0.0);
  }
}

TEST_CASE("zero functional") {
  const auto g = make_grid(8, 32);
  const Field wave = sample([](double x) { return std::sin(2 * pi * x + 0.3); }, g);
  CHECK(density_of_zeroes(wave, constant(0, g)) == 2.0);

  CHECK(zero_functional(make_ensemble({wave, wave, wave})) == 0.0);
  // Off-diagonal pairs carry weight 1/4 each.
  CHECK(zero_functional(make_ensemble({wave, constant(0, g)})) == doctest::Approx(1.0));
  CHECK(zero_functional(make_ensemble({constant(-1, g), constant(0, g), constant(2, g)})) == 0.0);

  const auto e = bernoulli_ensemble(bump, dip, g, 12, 5);
  const double fast = zero_functional(e);
  CHECK(fast > 0.0);
  CHECK(zero_functional_bruteforce(e) == fast);
  CHECK(zero_functional(e, e) == doctest::Approx(fast).epsilon(1e-14));
}

TEST_CASE("ordered constants never cross") {
  const auto g = make_grid(2, 16);
  const auto nl = Nonlinearity::classical_burgers(
      [](double t, double x) { return 0.2 * std::sin(2 * pi * x) * std::cos(2 * pi * t); });
  const auto e = make_ensemble({constant(-0.3, g), constant(0.0, g), constant(0.3, g)});
  const auto [report, out] = evolve_ensemble(e, nl, 3, with_dt(1e-2));
  CHECK(report.iterates == 3);
  CHECK(report.Z_mu.size() == 4);
  for (double z : report.Z_mu) CHECK(z == 0.0);
  CHECK(report.violations.empty());
  CHECK(report.zeta_hat == 0.0);
  CHECK(out.lineage.find("T^3") != std::string::npos);
}

TEST_CASE("weak star distance and early stop") {
  const auto g = make_grid(4, 16);
  const Field one_cell = sample([](double x) { return 0.1 * std::sin(2 * pi * x); }, make_grid(1, 16));
  const Field tiled = tile(one_cell, 4);
  CHECK(weakstar_distance(make_ensemble({tiled, tiled}), one_cell) == 0.0);
  CHECK(weakstar_distance(make_ensemble({tiled, constant(0, g)}), tiled) == doctest::Approx(0.05));
  CHECK_THROWS_AS(weakstar_distance(make_ensemble({tiled, tiled}), constant(0, make_grid(1, 8))),
                  PreconditionError);

  // Heat flow drives every zero-mass member to 0.
  EnsembleOptions opts;
  opts.target = constant(0, make_grid(1, 16));
  opts.stop_below = 1e-3;
  opts.epsilon = 1e-3;
  const auto [report, out] = evolve_ensemble(make_ensemble({tiled, tiled * -1.0}), Nonlinearity::heat(), 10,
                                             with_dt(1e-2), opts);
  CHECK(report.iterates == 1);
  CHECK(report.weakstar_dist.size() == 2);
  CHECK(report.weakstar_dist.back() < 1e-3);
  CHECK(report.visit_freq == 1.0);
}

TEST_CASE("blow-up names the member") {
  const auto g = make_grid(2, 8);
  const auto nl = Nonlinearity::reaction_term([](double, double, double u) { return u * u; });
  const auto e = make_ensemble({constant(0, g), constant(50, g)});
  try {
    (void)evolve_ensemble(e, nl, 1, with_dt(1e-2));
    FAIL("expected a numerical error");
  } catch (const NumericalError& err) {
    CHECK(std::string(err.what()).find("member 1") != std::string::npos);
  }
}

TEST_CASE("omega average frequency") {
  const auto g = make_grid(1, 8);
  const std::vector<Field> states = {constant(0.5, g), constant(1e-4, g), constant(0, g), constant(-2e-4, g)};
  CHECK(omega_average_stats(states, constant(0, g), 1e-3) == 0.75);
  CHECK(omega_average_stats(states, constant(7, g), 1e-3) == 0.0);
  CHECK_THROWS_AS(omega_average_stats(states, constant(0, g), 0.0), PreconditionError);
}

TEST_CASE("gradient energy and plateaus") {
  const auto V = [](double, double u) { return -0.5 * u * u + 0.25 * u * u * u * u; };
  const auto g = make_grid(2, 16);
  CHECK(gradient_energy(constant(1, g), V) == doctest::Approx(-0.25));
  CHECK(gradient_energy(constant(-1, g), V) == doctest::Approx(-0.25));
  CHECK(gradient_energy(constant(0, g), V) == 0.0);
  // u = sin(2 pi x): mean of u_x^2 / 2 is pi^2, mean of V is -1/4 + 3/32.
  const Field wave = sample([](double x) { return std::sin(2 * pi * x); }, make_grid(1, 256));
  CHECK(gradient_energy(wave, V) == doctest::Approx(pi * pi - 0.25 + 3.0 / 32.0).epsilon(1e-6));

  const auto [plus, minus] = plateau_fractions(make_ensemble({constant(1, g), constant(-1, g)}));
  CHECK(plus == 0.5);
  CHECK(minus == 0.5);

  const auto nl = Nonlinearity::gradient(V, [](double, double u) { return -u + u * u * u; });
  const auto e = make_ensemble({sample([](double x) { return 0.5 * std::cos(pi * x); }, g), constant(0.2, g)});
  const auto trace = evolve_gradient_ensemble(e, nl, 1.0, with_dt(1e-2));
  CHECK(trace.energies.size() == 2);
  CHECK(trace.energies[0].size() == 101);
  CHECK(trace.max_increase <= 1e-12);
  CHECK(trace.energies[1].back() < trace.energies[1].front());
  CHECK_THROWS_AS(evolve_gradient_ensemble(e, Nonlinearity::heat(), 1.0, with_dt(1e-2)), PreconditionError);
}

TEST_CASE("projection of constants and a collision") {
  const auto g = make_grid(1, 64);
  std::vector<Field> constants;
  for (double c : {-0.5, 0.0, 0.25}) constants.push_back(constant(c, g));
  const auto pc = projection_pi(constants[2]);
  CHECK(pc.first == 0.25);
  CHECK(pc.second == 0.0);
  const auto ok = injectivity_report(constants);
  CHECK(ok.first_coordinate_increasing);
  CHECK(ok.min_distance == doctest::Approx(0.25));

  // Two distinct fields with the same value and slope at 0.
  const Field a = sample([](double x) { return std::sin(2 * pi * x); }, g);
  const Field b = sample([](double x) { return std::sin(2 * pi * x) + 0.1 * std::pow(std::sin(2 * pi * x), 2); }, g);
  const std::vector<Field> pair = {a, b};
  const auto bad = injectivity_report(pair);
  CHECK(bad.min_distance < 1e-12);
  CHECK(!bad.first_coordinate_increasing);
  CHECK(sup_distance(a, b) == doctest::Approx(0.1));
}

TEST_CASE("ensemble exports") {
  const auto e = bernoulli_ensemble(bump, dip, make_grid(4, 8), 4, 99);
  std::ostringstream manifest;
  write_ensemble_jsonl(e, manifest);
  const auto j = nlohmann::json::parse(manifest.str());
  CHECK(j["seed"] == 99);
  CHECK(j["members"] == 4);
  CHECK(j["weights"].size() == 4);
  CHECK(j["lineage"].get<std::string>().find("bernoulli") == 0);

  EnsembleReport r;
  r.Z_mu = {1.0, 0.5};
  r.weakstar_dist = {0.2, 0.1};
  r.iterates = 1;
  std::ostringstream series, record;
  write_series_csv(r, series);
  CHECK(series.str() == "iterate,Z_mu,weakstar\n0,1,0.20000000000000001\n1,0.5,0.10000000000000001\n");
  write_report_jsonl(r, record);
  const auto rj = nlohmann::json::parse(record.str());
  CHECK(rj["Z_mu"][1] == 0.5);
  CHECK(rj["iterates"] == 1);
}
