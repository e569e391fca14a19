#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <tuple>

#include "doctest.h"
#include "json.hpp"
#include "zeroflow/burgers.hpp"
#include "zeroflow/errors.hpp"

using namespace zeroflow;
using std::numbers::pi;

namespace {

Nonlinearity forced(double amp = 0.2) {
  return Nonlinearity::classical_burgers(
      [amp](double t, double x) { return amp * std::sin(2 * pi * x) * std::cos(2 * pi * t); });
}

StepperConfig with_dt(double dt) {
  StepperConfig cfg;
  cfg.dt = dt;
  return cfg;
}

}  // namespace

TEST_CASE("band constants") {
  // (4 / (3 pi^2))^{1/4} * 0.2
  CHECK(band_constant(2, 0.2) == doctest::Approx(0.121252232465693).epsilon(1e-14));
  const auto band = apriori_band(forced(), make_grid(1, 64), 1e-2);
  CHECK(std::abs(band.c0 - 0.2) < 1e-15);
  CHECK(band.p_first == 54);
  CHECK(band.p_last() == 400);
  CHECK(band.monotone);
  for (int p = band.p_first; p <= band.p_last(); ++p) {
    CHECK(std::abs(band.at(p) - band_constant(p, band.c0)) <= 1e-14 * band.c0);
  }
  CHECK_THROWS_AS(std::ignore = band.at(10), PreconditionError);
  // Below p = 54 the sequence still increases.
  CHECK(!apriori_band(forced(), make_grid(1, 64), 1e-2, 20, 60).monotone);
  CHECK_THROWS_AS(apriori_band(Nonlinearity::heat(), make_grid(1, 64), 1e-2), PreconditionError);
}

TEST_CASE("mass invariance") {
  const auto g = make_grid(1, 64);
  const Field u0 = sample([](double x) { return 0.3 + 0.1 * std::sin(2 * pi * x); }, g);
  const auto free = Nonlinearity::classical_burgers();
  CHECK(check_mass_invariance(evolve(u0, free, 0, 5, with_dt(1e-3), {}, 100), free) <= 1e-12);
  const auto f = forced();
  CHECK(check_mass_invariance(evolve(u0, f, 0, 5, with_dt(1e-3), {}, 100), f) <= 1e-11);
  CHECK_THROWS_AS(check_mass_invariance(evolve(u0, Nonlinearity::heat(), 0, 0.1, with_dt(1e-2)), Nonlinearity::heat()),
                  PreconditionError);
}

TEST_CASE("band holds") {
  const auto g = make_grid(1, 64);
  const auto nl = forced();
  const auto band = apriori_band(nl, g, 1e-2);
  const Field at_y = sample([](double) { return 0.1; }, g);
  CHECK(check_band(evolve(at_y, nl, 0, 2, with_dt(1e-2), {}, 10), 0.1, band));
  const Field offset = sample([](double) { return 0.19; }, g);
  CHECK(check_band(evolve(offset, nl, 0, 10, with_dt(1e-2), {}, 10), 0.0, band));
  const Field outside = sample([](double) { return 0.5; }, g);
  CHECK(!check_band(evolve(outside, nl, 0, 1, with_dt(1e-2), {}, 10), 0.0, band));
}

TEST_CASE("v^y for unforced Burgers is the constant") {
  const auto family = solve_v_family(Nonlinearity::classical_burgers(), {0.3, -0.2}, make_grid(1, 32), with_dt(1e-2));
  REQUIRE(family.orbits.size() == 2);
  CHECK(family.orbits[0].y == -0.2);
  for (const auto& o : family.orbits) {
    CHECK(o.iterations == 0);
    CHECK(o.residual == 0.0);
    CHECK(o.profile.sup_norm() == std::abs(o.y));
  }
  CHECK(family.gaps.size() == 1);
  CHECK(family.gaps[0] == doctest::Approx(0.5));
}

TEST_CASE("v^y for autonomous forcing") {
  const auto g = make_grid(1, 64);
  const auto nl = Nonlinearity::classical_burgers([](double, double x) { return 0.5 * std::sin(2 * pi * x); }, true);
  VFamilyOptions opt;
  opt.tol = 1e-8;
  const auto family = solve_v_family(nl, {-0.5, 0.0, 0.5}, g, with_dt(1e-3), opt);
  for (const auto& o : family.orbits) {
    CHECK(o.residual <= 1e-8);
    CHECK(std::abs(mass(o.profile) - o.y) <= 1e-12);
  }
  const Field& v0 = family.orbits[1].profile;
  const auto [lo, hi] = std::minmax_element(v0.values().begin(), v0.values().end());
  CHECK(*hi - *lo > 1e-3);
  CHECK(family.strictly_ordered());
  CHECK(family.min_gap() > 0.0);

  SUBCASE("a perturbed seed reaches the same orbit") {
    VFamilyOptions other = opt;
    other.seed = [](double y, GridSpec grid) {
      return sample([y](double x) { return y + 0.3 * std::sin(2 * pi * x); }, grid);
    };
    const auto again = solve_v_family(nl, {0.0}, g, with_dt(1e-3), other);
    CHECK(sup_distance(again.orbits[0].profile, v0) <= 10 * opt.tol);
  }
  SUBCASE("damped iteration converges too") {
    VFamilyOptions damped = opt;
    damped.damping = 0.5;
    const auto again = solve_v_family(nl, {0.0}, g, with_dt(1e-3), damped);
    CHECK(sup_distance(again.orbits[0].profile, v0) <= 10 * opt.tol);
    CHECK(again.orbits[0].iterations > family.orbits[1].iterations);
  }
}

TEST_CASE("non-convergence is reported") {
  VFamilyOptions opt;
  opt.max_iter = 0;
  CHECK_THROWS_AS(solve_v_family(forced(), {0.0}, make_grid(1, 32), with_dt(1e-2), opt), NumericalError);
  opt.max_iter = 10;
  opt.seed = [](double, GridSpec grid) { return sample([](double) { return 1.0; }, grid); };
  CHECK_THROWS_AS(solve_v_family(forced(), {0.0}, make_grid(1, 32), with_dt(1e-2), opt), PreconditionError);
}

TEST_CASE("convergence to v^y") {
  const auto g = make_grid(1, 64);
  Stepper stepper(g, forced(), with_dt(1e-3));
  VFamilyOptions opt;
  opt.tol = 1e-11;
  const auto orbit = solve_periodic_orbit(stepper, 0.2, opt);

  const auto at_orbit = converge_to_vy(orbit.profile, stepper, orbit, 10);
  REQUIRE(at_orbit.first_hit);
  CHECK(*at_orbit.first_hit == 0);

  const Field u0 = sample([](double x) { return 0.2 + 0.4 * std::sin(2 * pi * x); }, g);
  const auto series = converge_to_vy(u0, stepper, orbit, 500);
  REQUIRE(series.first_hit);
  CHECK(*series.first_hit <= 500);
  CHECK(series.transient <= 5);
  CHECK(series.distances.back() <= 1e-6);

  const Field wrong = sample([](double) { return 0.3; }, g);
  CHECK_THROWS_AS(converge_to_vy(wrong, stepper, orbit, 10), PreconditionError);
}

TEST_CASE("antiderivative") {
  const auto g = make_grid(2, 32);
  const Field c = sample([](double x) { return std::cos(2 * pi * x); }, g);
  const Field s = antiderivative(c);
  for (std::size_t j = 0; j < g.size(); ++j) CHECK(std::abs(s[j] - std::sin(2 * pi * g.node(j)) / (2 * pi)) < 1e-14);
  CHECK_THROWS_AS(antiderivative(sample([](double) { return 1.0; }, g)), PreconditionError);
}

TEST_CASE("Cole-Hopf cross-check") {
  const auto g = make_grid(1, 128);
  const auto zero = cole_hopf_crosscheck(Field(g), {}, 0.1, with_dt(1e-3));
  CHECK(zero.relative_error == 0.0);
  CHECK(zero.min_phi == 1.0);

  const Field u0 = sample([](double x) { return std::sin(2 * pi * x); }, g);
  const auto unforced = cole_hopf_crosscheck(u0, {}, 0.1, with_dt(1e-4));
  CHECK(unforced.relative_error <= 1e-4);
  CHECK(unforced.min_phi > 0.0);

  CHECK_THROWS_AS(cole_hopf_crosscheck(sample([](double) { return 0.1; }, g), {}, 0.1, with_dt(1e-3)),
                  PreconditionError);
}

TEST_CASE("Cole-Hopf with forcing uses the potential of the forcing") {
  const auto f = [](double t, double x) { return 0.2 * std::sin(2 * pi * x) * std::cos(2 * pi * t); };
  // int_0^x of the forcing: 0.2 (1 - cos 2 pi x) cos 2 pi t / (2 pi).
  for (double x : {0.0, 0.3, 0.75, 1.0}) {
    const double exact = 0.2 * (1 - std::cos(2 * pi * x)) * std::cos(2 * pi * 0.1) / (2 * pi);
    CHECK(std::abs(forcing_potential(f, 0.1, x, 1.0) - exact) < 1e-15);
  }
  // A constant part of the forcing is removed before integrating.
  const auto shifted = [&](double t, double x) { return f(t, x) + 0.5; };
  CHECK(std::abs(forcing_potential(shifted, 0.1, 0.3, 1.0) - forcing_potential(f, 0.1, 0.3, 1.0)) < 1e-15);
  CHECK(std::abs(forcing_potential(f, 0.1, 2.0, 2.0)) < 1e-15);

  const auto g = make_grid(1, 128);
  const Field u0 = sample([](double x) { return std::sin(2 * pi * x); }, g);
  const auto forced = cole_hopf_crosscheck(u0, f, 0.5, with_dt(1e-3));
  CHECK(forced.relative_error <= 1e-4);
  CHECK(forced.min_phi > 0.0);
}

TEST_CASE("orbit archives") {
  const auto dir = std::filesystem::temp_directory_path() / "zeroflow_test_family";
  std::filesystem::remove_all(dir);
  const auto family = solve_v_family(Nonlinearity::classical_burgers(), {0.0, 0.1}, make_grid(1, 16), with_dt(0.5));
  write_family(family, dir);
  std::ifstream in(dir / "family.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j["orbits"].size() == 2);
  CHECK(j["strictly_ordered"] == true);
  CHECK(std::filesystem::exists(dir / "orbit_1.csv"));
  std::filesystem::remove_all(dir);
}
