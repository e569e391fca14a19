#include "zeroflow/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "zeroflow/errors.hpp"

namespace zeroflow {

using nlohmann::json;

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"simulate", "balance",   "vfamily", "colehopf",
                                                 "ensemble", "allencahn", "check"};
  return names;
}

namespace {

// One JSON object whose keys must all be consumed before finish().
class Table {
 public:
  Table(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + "expected a table");
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

  Table sub(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Table(j_.contains(key) ? j_.at(key) : empty, child(key));
  }

  void get(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(child(key) + ": expected a number");
      out = v->get<double>();
    }
  }

  void get(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(child(key) + ": expected an integer");
      out = v->get<int>();
    }
  }

  static bool non_negative_integer(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  }

  void get(const std::string& key, unsigned& out) {
    if (const json* v = find(key)) {
      if (!non_negative_integer(*v)) throw ConfigError(child(key) + ": expected a non-negative integer");
      out = v->get<unsigned>();
    }
  }

  void get(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!non_negative_integer(*v)) throw ConfigError(child(key) + ": expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void get(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(child(key) + ": expected true or false");
      out = v->get<bool>();
    }
  }

  void get(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(child(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }

  void get(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      if (!v->is_number()) throw ConfigError(child(key) + ": expected a number or null");
      out = v->get<double>();
    }
  }

  void get(const std::string& key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(child(key) + ": expected a list of numbers");
      out.clear();
      for (const auto& item : *v) {
        if (!item.is_number()) throw ConfigError(child(key) + ": expected a list of numbers");
        out.push_back(item.get<double>());
      }
    }
  }

  void get(const std::string& key, std::vector<std::string>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(child(key) + ": expected a list of strings");
      out.clear();
      for (const auto& item : *v) {
        if (!item.is_string()) throw ConfigError(child(key) + ": expected a list of strings");
        out.push_back(item.get<std::string>());
      }
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key '" + child(key) + "'");
    }
  }

  [[nodiscard]] std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;

  [[nodiscard]] std::string where() const { return path_.empty() ? "" : path_ + ": "; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
};

Expression checked_expression(const std::string& src, const std::string& key, std::string_view allowed) {
  Expression e;
  try {
    e = parse_expression(src);
  } catch (const ExpressionError& err) {
    throw ConfigError(key + ": " + err.what());
  }
  for (char var : {'t', 'x', 'u'}) {
    if (e.uses(var) && allowed.find(var) == std::string_view::npos) {
      throw ConfigError(key + ": variable '" + std::string(1, var) + "' is not available here");
    }
  }
  return e;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

NonlinearitySpec parse_nonlinearity(Table t) {
  NonlinearitySpec s;
  t.get("kind", s.kind);
  const bool custom_h = t.has("h");
  t.get("h", s.h);
  if (custom_h && !t.has("H")) s.H.clear();
  t.get("H", s.H);
  t.get("forcing", s.forcing);
  t.get("g", s.g);
  t.get("V", s.V);
  t.get("dV", s.dV);
  t.finish();

  std::vector<std::string> applicable;
  if (s.kind == "burgers") {
    applicable = {"h", "H", "forcing"};
  } else if (s.kind == "reaction") {
    applicable = {"g"};
  } else if (s.kind == "gradient") {
    applicable = {"V", "dV"};
  } else if (s.kind != "heat") {
    throw ConfigError("nonlinearity.kind: expected burgers, reaction, gradient or heat, got '" + s.kind + "'");
  }
  for (const char* key : {"h", "H", "forcing", "g", "V", "dV"}) {
    const bool ok = std::find(applicable.begin(), applicable.end(), key) != applicable.end();
    if (t.has(key) && !ok) {
      throw ConfigError("nonlinearity." + std::string(key) + " does not apply to kind " + s.kind);
    }
  }
  if (s.kind != "burgers") {
    s.h.clear();
    s.H.clear();
  }
  require(s.kind != "reaction" || !s.g.empty(), "nonlinearity.g is required for kind reaction");
  require(s.kind != "gradient" || (!s.V.empty() && !s.dV.empty()),
          "nonlinearity.V and nonlinearity.dV are required for kind gradient");
  // Validates every expression up front.
  (void)build_nonlinearity(s);
  return s;
}

}  // namespace

Nonlinearity build_nonlinearity(const NonlinearitySpec& s) {
  if (s.kind == "heat") return Nonlinearity::heat();
  if (s.kind == "reaction") {
    const Expression g = checked_expression(s.g, "nonlinearity.g", "txu");
    return Nonlinearity::reaction_term([g](double t, double x, double u) { return g(t, x, u); }, !g.uses('t'));
  }
  if (s.kind == "gradient") {
    const Expression V = checked_expression(s.V, "nonlinearity.V", "xu");
    const Expression dV = checked_expression(s.dV, "nonlinearity.dV", "xu");
    return Nonlinearity::gradient([V](double x, double u) { return V(0.0, x, u); },
                                  [dV](double x, double u) { return dV(0.0, x, u); });
  }
  if (s.kind != "burgers") throw ConfigError("nonlinearity.kind: unknown kind '" + s.kind + "'");

  const Expression h = checked_expression(s.h, "nonlinearity.h", "u");
  Nonlinearity::SpaceTimeFn forcing;
  bool autonomous = true;
  if (!s.forcing.empty()) {
    const Expression f = checked_expression(s.forcing, "nonlinearity.forcing", "tx");
    forcing = [f](double t, double x) { return f(t, x, 0.0); };
    autonomous = !f.uses('t');
  }
  auto h_fn = [h](double u) { return h(0.0, 0.0, u); };
  if (s.H.empty()) return Nonlinearity::burgers_quadrature(h_fn, forcing, autonomous);
  const Expression H = checked_expression(s.H, "nonlinearity.H", "u");
  return Nonlinearity::burgers(h_fn, [H](double u) { return H(0.0, 0.0, u); }, forcing, autonomous);
}

std::function<double(double)> profile_function(const std::string& src, const std::string& key) {
  const Expression e = checked_expression(src, key, "x");
  return [e](double x) { return e(0.0, x, 0.0); };
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  Table root(j, "");
  root.get("experiment", c.experiment);
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
    throw ConfigError("experiment: unknown experiment '" + c.experiment + "'");
  }
  root.get("seed", c.seed);
  std::string output = c.output.string();
  root.get("output", output);
  c.output = output;

  {
    Table t = root.sub("grid");
    int cells = c.grid.cells, n = c.grid.points_per_cell;
    t.get("cells", cells);
    t.get("points_per_cell", n);
    t.finish();
    try {
      c.grid = make_grid(cells, n);
    } catch (const PreconditionError& err) {
      throw ConfigError(std::string("grid: ") + err.what());
    }
  }
  {
    Table t = root.sub("stepper");
    t.get("dt", c.stepper.dt);
    std::string scheme = "imex_cn_heun";
    t.get("scheme", scheme);
    t.get("cfl_guard", c.stepper.cfl_guard);
    t.get("max_halvings", c.stepper.max_halvings);
    t.get("probes", c.probes);
    t.get("snapshot_stride", c.snapshot_stride);
    t.finish();
    require(scheme == "imex_cn_heun", "stepper.scheme: only imex_cn_heun is available");
    require(c.stepper.dt > 0.0, "stepper.dt must be positive");
    require(c.stepper.cfl_guard > 0.0, "stepper.cfl_guard must be positive");
    require(c.stepper.max_halvings >= 0, "stepper.max_halvings must be non-negative");
    require(c.snapshot_stride >= 1, "stepper.snapshot_stride must be at least 1");
  }
  c.nonlinearity = parse_nonlinearity(root.sub("nonlinearity"));
  {
    Table t = root.sub("tolerances");
    auto& tol = c.tolerances;
    t.get("fixed_point", tol.fixed_point);
    t.get("convergence", tol.convergence);
    t.get("monotone", tol.monotone);
    t.get("band_slack", tol.band_slack);
    t.get("energy_slack", tol.energy_slack);
    t.get("weakstar", tol.weakstar);
    t.get("epsilon", tol.epsilon);
    t.finish();
    require(tol.fixed_point > 0.0 && tol.convergence > 0.0 && tol.epsilon > 0.0,
            "tolerances: fixed_point, convergence and epsilon must be positive");
  }
  {
    Table t = root.sub("simulate");
    t.get("initial", c.simulate.initial);
    t.get("t0", c.simulate.t0);
    t.get("t1", c.simulate.t1);
    t.finish();
    (void)checked_expression(c.simulate.initial, "simulate.initial", "x");
    require(c.simulate.t1 >= c.simulate.t0, "simulate: t1 must not precede t0");
  }
  {
    Table t = root.sub("balance");
    auto& b = c.balance;
    t.get("u", b.u);
    t.get("v", b.v);
    t.get("w", b.w);
    t.get("t_start", b.t_start);
    t.get("t_end", b.t_end);
    t.get("x_left", b.x_left);
    t.get("x_right", b.x_right);
    t.finish();
    (void)checked_expression(b.u, "balance.u", "x");
    (void)checked_expression(b.v, "balance.v", "x");
    if (!b.w.empty()) (void)checked_expression(b.w, "balance.w", "tx");
    require(b.t_end > b.t_start, "balance: t_end must exceed t_start");
  }
  {
    Table t = root.sub("vfamily");
    t.get("ys", c.vfamily.ys);
    t.get("max_iter", c.vfamily.max_iter);
    t.get("damping", c.vfamily.damping);
    t.finish();
    require(!c.vfamily.ys.empty(), "vfamily.ys must not be empty");
  }
  {
    Table t = root.sub("colehopf");
    t.get("initial", c.colehopf.initial);
    t.get("t_end", c.colehopf.t_end);
    t.finish();
    (void)checked_expression(c.colehopf.initial, "colehopf.initial", "x");
  }
  {
    Table t = root.sub("ensemble");
    auto& e = c.ensemble;
    t.get("profile0", e.profile0);
    t.get("profile1", e.profile1);
    t.get("members", e.members);
    t.get("block_cells", e.block_cells);
    t.get("jitter", e.jitter);
    t.get("antithetic", e.antithetic);
    t.get("iterates", e.iterates);
    t.get("target_y", e.target_y);
    t.get("stop_early", e.stop_early);
    t.get("threads", e.threads);
    t.finish();
    (void)checked_expression(e.profile0, "ensemble.profile0", "x");
    (void)checked_expression(e.profile1, "ensemble.profile1", "x");
    require(e.iterates >= 0, "ensemble.iterates must be non-negative");
  }
  {
    Table t = root.sub("allencahn");
    auto& a = c.allencahn;
    t.get("profile0", a.profile0);
    t.get("profile1", a.profile1);
    t.get("members", a.members);
    t.get("block_cells", a.block_cells);
    t.get("jitter", a.jitter);
    t.get("antithetic", a.antithetic);
    t.get("horizon", a.horizon);
    t.get("level", a.level);
    t.get("plateau_tol", a.plateau_tol);
    t.finish();
    (void)checked_expression(a.profile0, "allencahn.profile0", "x");
    (void)checked_expression(a.profile1, "allencahn.profile1", "x");
    require(a.horizon >= 0.0, "allencahn.horizon must be non-negative");
  }
  {
    Table t = root.sub("check");
    t.get("quick", c.check.quick);
    t.get("only", c.check.only);
    t.finish();
  }
  root.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& err) {
    throw ConfigError(path.string() + ": " + err.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  const auto& n = c.nonlinearity;
  json nl = {{"kind", n.kind}};
  if (n.kind == "burgers") {
    nl["h"] = n.h;
    nl["H"] = n.H;
    nl["forcing"] = n.forcing;
  } else if (n.kind == "reaction") {
    nl["g"] = n.g;
  } else if (n.kind == "gradient") {
    nl["V"] = n.V;
    nl["dV"] = n.dV;
  }
  const auto& tol = c.tolerances;
  const auto& b = c.balance;
  const auto& e = c.ensemble;
  const auto& a = c.allencahn;
  return {
      {"experiment", c.experiment},
      {"seed", c.seed},
      {"output", c.output.string()},
      {"grid", {{"cells", c.grid.cells}, {"points_per_cell", c.grid.points_per_cell}}},
      {"stepper",
       {{"dt", c.stepper.dt},
        {"scheme", "imex_cn_heun"},
        {"cfl_guard", c.stepper.cfl_guard},
        {"max_halvings", c.stepper.max_halvings},
        {"probes", c.probes},
        {"snapshot_stride", c.snapshot_stride}}},
      {"nonlinearity", nl},
      {"tolerances",
       {{"fixed_point", tol.fixed_point},
        {"convergence", tol.convergence},
        {"monotone", tol.monotone},
        {"band_slack", tol.band_slack},
        {"energy_slack", tol.energy_slack},
        {"weakstar", tol.weakstar},
        {"epsilon", tol.epsilon}}},
      {"simulate", {{"initial", c.simulate.initial}, {"t0", c.simulate.t0}, {"t1", c.simulate.t1}}},
      {"balance",
       {{"u", b.u},
        {"v", b.v},
        {"w", b.w},
        {"t_start", b.t_start},
        {"t_end", b.t_end},
        {"x_left", b.x_left},
        {"x_right", b.x_right ? json(*b.x_right) : json(nullptr)}}},
      {"vfamily", {{"ys", c.vfamily.ys}, {"max_iter", c.vfamily.max_iter}, {"damping", c.vfamily.damping}}},
      {"colehopf", {{"initial", c.colehopf.initial}, {"t_end", c.colehopf.t_end}}},
      {"ensemble",
       {{"profile0", e.profile0},
        {"profile1", e.profile1},
        {"members", e.members},
        {"block_cells", e.block_cells},
        {"jitter", e.jitter},
        {"antithetic", e.antithetic},
        {"iterates", e.iterates},
        {"target_y", e.target_y ? json(*e.target_y) : json(nullptr)},
        {"stop_early", e.stop_early},
        {"threads", e.threads}}},
      {"allencahn",
       {{"profile0", a.profile0},
        {"profile1", a.profile1},
        {"members", a.members},
        {"block_cells", a.block_cells},
        {"jitter", a.jitter},
        {"antithetic", a.antithetic},
        {"horizon", a.horizon},
        {"level", a.level},
        {"plateau_tol", a.plateau_tol}}},
      {"check", {{"quick", c.check.quick}, {"only", c.check.only}}},
  };
}

}  // namespace zeroflow
