#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "zeroflow/dynamics.hpp"
#include "zeroflow/expression.hpp"

namespace zeroflow {

/// Nonlinearity descriptor. Expressions use the variables allowed for each
/// slot: h and H in u; forcing in t and x; g in t, x and u; V and dV in x and u.
struct NonlinearitySpec {
  std::string kind = "burgers";  // burgers | reaction | gradient | heat
  std::string h = "u";
  std::string H = "u^2/2";       // empty: quadrature of h
  std::string forcing;           // empty: unforced
  std::string g;
  std::string V;
  std::string dV;
};

struct Tolerances {
  double fixed_point = 1e-8;
  double convergence = 1e-6;
  double monotone = 1e-12;
  double band_slack = 1e-6;
  double energy_slack = 1e-9;
  double weakstar = 1e-4;
  double epsilon = 1e-3;
};

struct SimulateSpec {
  std::string initial = "0";
  double t0 = 0.0;
  double t1 = 1.0;
};

/// Either `w` (an analytic w(x, t), sampled directly) or the pair u, v
/// evolved under the nonlinearity.
struct BalanceSpec {
  std::string u = "0";
  std::string v = "0";
  std::string w;
  double t_start = 0.0;
  double t_end = 0.01;
  double x_left = 0.0;
  std::optional<double> x_right;  // defaults to the circumference
};

struct VFamilySpec {
  std::vector<double> ys = {-0.5, -0.25, 0.0, 0.25, 0.5};
  int max_iter = 200;
  double damping = 1.0;
};

struct ColeHopfSpec {
  std::string initial = "sin(2*pi*x)";
  double t_end = 0.1;
};

struct EnsembleSpec {
  std::string profile0 = "0.4*sin(pi*x)^2";
  std::string profile1 = "-0.4*sin(pi*x)^2";
  int members = 64;
  int block_cells = 1;
  double jitter = 1e-3;
  bool antithetic = false;
  int iterates = 50;
  /// Mass of the weak* target orbit; absent means no target.
  std::optional<double> target_y;
  bool stop_early = false;
  unsigned threads = 1;
};

struct AllenCahnSpec {
  std::string profile0 = "-0.99*tanh(2*x)*tanh(2*(16-x))";
  std::string profile1 = "0.99*tanh(2*x)*tanh(2*(16-x))";
  int members = 16;
  int block_cells = 16;
  double jitter = 1e-3;
  bool antithetic = true;
  double horizon = 50.0;
  double level = 1.0;
  double plateau_tol = 0.1;
};

struct CheckSpec {
  /// Reduced sizes for a fast smoke run.
  bool quick = false;
  /// Restrict to these invariants; empty runs all of them.
  std::vector<std::string> only;
};

struct ExperimentConfig {
  std::string experiment = "simulate";
  std::uint64_t seed = 0;
  std::filesystem::path output = "out";
  GridSpec grid = make_grid(1, 256);
  StepperConfig stepper;
  std::vector<double> probes;
  int snapshot_stride = 1;
  NonlinearitySpec nonlinearity;
  Tolerances tolerances;
  SimulateSpec simulate;
  BalanceSpec balance;
  VFamilySpec vfamily;
  ColeHopfSpec colehopf;
  EnsembleSpec ensemble;
  AllenCahnSpec allencahn;
  CheckSpec check;
};

const std::vector<std::string>& experiment_names();

/// Strict parse: unknown keys, wrong types and malformed expressions raise
/// ConfigError naming the offending key path.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved configuration, defaults included.
nlohmann::json to_json(const ExperimentConfig& c);

/// Builds the nonlinearity from its descriptor.
Nonlinearity build_nonlinearity(const NonlinearitySpec& spec);

/// Initial-profile expressions are functions of x only.
std::function<double(double)> profile_function(const std::string& src, const std::string& key);

}  // namespace zeroflow
