#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "zeroflow/config.hpp"
#include "zeroflow/errors.hpp"
#include "zeroflow/expression.hpp"

using namespace zeroflow;
using nlohmann::json;
using std::numbers::pi;

namespace {

std::string config_error(const json& j) {
  try {
    (void)parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("expressions evaluate like the C++ they spell") {
  const auto f = parse_expression("0.2*sin(2*pi*x)*cos(2*pi*t)");
  CHECK(f(0.3, 0.1, 0.0) == doctest::Approx(0.2 * std::sin(2 * pi * 0.1) * std::cos(2 * pi * 0.3)).epsilon(1e-15));
  CHECK(f.uses('x'));
  CHECK(f.uses('t'));
  CHECK_FALSE(f.uses('u'));

  const auto g = parse_expression("u - u^3");
  CHECK(g(0, 0, 2.0) == -6.0);
  CHECK(parse_expression("-2^2")(0, 0, 0) == -4.0);
  CHECK(parse_expression("2^3^2")(0, 0, 0) == 512.0);
  CHECK(parse_expression("tanh(x) + exp(0) - e + e")(0, 0.5, 0) == doctest::Approx(std::tanh(0.5) + 1.0));
  CHECK(parse_expression("1e-3 * (x + 1) / 2")(0, 1.0, 0) == doctest::Approx(1e-3));
  CHECK(parse_expression(" x ").source() == " x ");
}

TEST_CASE("expression syntax errors carry the offset") {
  try {
    (void)parse_expression("sin(");
    FAIL("expected a syntax error");
  } catch (const ExpressionError& e) {
    CHECK(e.offset() == 4);
    CHECK(std::string(e.what()) == "syntax error at offset 4: unexpected end of input");
  }
  CHECK_THROWS_AS(parse_expression("sinh(x)"), ExpressionError);
  CHECK_THROWS_AS(parse_expression("x y"), ExpressionError);
  CHECK_THROWS_AS(parse_expression(""), ExpressionError);
  CHECK_THROWS_AS(parse_expression("(x"), ExpressionError);
  CHECK_THROWS_AS(parse_expression("x +* 2"), ExpressionError);
}

TEST_CASE("unknown keys are rejected with their path") {
  CHECK(config_error({{"stepper", {{"dt", 1e-3}, {"dt_max", 1e-2}}}}).find("unknown key 'stepper.dt_max'") !=
        std::string::npos);
  CHECK(config_error({{"experimnt", "simulate"}}).find("'experimnt'") != std::string::npos);
  CHECK_THROWS_AS(load_config(std::filesystem::path(ZEROFLOW_TEST_DATA) / "unknown_key.json"), ConfigError);
}

TEST_CASE("config values are type- and range-checked") {
  CHECK_FALSE(config_error({{"stepper", {{"dt", "small"}}}}).empty());
  CHECK_FALSE(config_error({{"stepper", {{"dt", -1.0}}}}).empty());
  CHECK_FALSE(config_error({{"experiment", "explode"}}).empty());
  CHECK_FALSE(config_error({{"grid", {{"cells", 0}}}}).empty());
  // Slot variables: the forcing may not depend on u.
  CHECK_FALSE(config_error({{"nonlinearity", {{"kind", "burgers"}, {"forcing", "u*x"}}}}).empty());
  // Keys that do not belong to the chosen kind.
  CHECK_FALSE(config_error({{"nonlinearity", {{"kind", "heat"}, {"h", "u"}}}}).empty());
  CHECK_FALSE(config_error({{"nonlinearity", {{"kind", "reaction"}}}}).empty());
  CHECK(config_error({{"nonlinearity", {{"kind", "reaction"}, {"g", "u - u^3"}}}}).empty());
}

TEST_CASE("resolved config round-trips through JSON") {
  const json j = {{"experiment", "ensemble"},
                  {"seed", 9},
                  {"grid", {{"cells", 4}, {"points_per_cell", 32}}},
                  {"stepper", {{"dt", 2e-3}, {"probes", {0.0, 0.5}}}},
                  {"nonlinearity", {{"kind", "burgers"}, {"h", "u^2"}}},
                  {"ensemble", {{"members", 8}, {"target_y", 0.1}}},
                  {"balance", {{"x_right", 0.75}}}};
  const ExperimentConfig c = parse_config(j);
  CHECK(c.grid.cells == 4);
  CHECK(c.ensemble.target_y == 0.1);
  CHECK(c.nonlinearity.H.empty());  // custom h without H: quadrature
  const json resolved = to_json(c);
  CHECK(to_json(parse_config(resolved)) == resolved);
  CHECK(to_json(parse_config(to_json(ExperimentConfig{}))) == to_json(ExperimentConfig{}));
}

TEST_CASE("load_config accepts comments") {
  const auto path = std::filesystem::temp_directory_path() / "zeroflow_comment.json";
  {
    std::ofstream out(path);
    out << "{\n  // heat flow\n  \"experiment\": \"balance\",\n  \"nonlinearity\": {\"kind\": \"heat\"}\n}\n";
  }
  const ExperimentConfig c = load_config(path);
  CHECK(c.experiment == "balance");
  CHECK(c.nonlinearity.kind == "heat");
  std::filesystem::remove(path);
}

TEST_CASE("quadrature H matches the closed form") {
  NonlinearitySpec spec;
  spec.h = "u^2";
  spec.H = "";
  const Nonlinearity quad = build_nonlinearity(spec);
  spec.H = "u^3/3";
  const Nonlinearity closed = build_nonlinearity(spec);
  for (double u : {-1.5, 0.0, 0.3, 2.0}) CHECK(quad.H(u) == doctest::Approx(closed.H(u)).epsilon(1e-12));
}
