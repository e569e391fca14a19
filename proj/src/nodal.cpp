#include "zeroflow/nodal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "zeroflow/errors.hpp"

namespace zeroflow {

namespace {

long long wrap_index(long long j, long long n) {
  const long long r = j % n;
  return r < 0 ? r + n : r;
}

double wrap_position(double x, double length) {
  double r = std::fmod(x, length);
  if (r < 0.0) r += length;
  if (r >= length) r -= length;
  return r;
}

// Forward arc length from x to y on a circle of the given length.
double forward_arc(double x, double y, double length) { return wrap_position(y - x, length); }

double circle_distance(double x, double y, double length) {
  const double d = forward_arc(x, y, length);
  return std::min(d, length - d);
}

bool edge_in(long long edge, const EdgeRange& range, long long n) {
  const long long width = range.last - range.first;
  if (width >= n) return true;
  return wrap_index(edge - range.first, n) < width;
}

void check_same_grid(const Field& u, const Field& v) {
  if (!(u.grid() == v.grid())) throw PreconditionError("fields live on different grids");
}

}  // namespace

EdgeRange edge_range(const GridSpec& grid, CellWindow window) {
  const double n = grid.points_per_cell;
  const double fa = window.a * n;
  const double fb = window.b * n;
  const double ra = std::round(fa);
  const double rb = std::round(fb);
  if (std::abs(fa - ra) > 1e-9 * std::max(1.0, std::abs(fa)) ||
      std::abs(fb - rb) > 1e-9 * std::max(1.0, std::abs(fb))) {
    throw PreconditionError("window ends must fall on grid nodes");
  }
  EdgeRange r{static_cast<long long>(ra), static_cast<long long>(rb)};
  if (r.last < r.first) throw PreconditionError("window must satisfy a <= b");
  if (r.last - r.first > static_cast<long long>(grid.size())) {
    throw PreconditionError("window longer than the circle");
  }
  return r;
}

int zero_count(const Field& w, CellWindow window) {
  const EdgeRange r = edge_range(w.grid(), window);
  int count = 0;
  for (long long e = r.first; e < r.last; ++e) count += positive(w.at(e)) != positive(w.at(e + 1));
  return count;
}

int zero_count(const Field& u, const Field& v, CellWindow window) {
  check_same_grid(u, v);
  return zero_count(u - v, window);
}

std::vector<Zero> locate_zeroes(const Field& w, CellWindow window) {
  const EdgeRange r = edge_range(w.grid(), window);
  const auto n = static_cast<long long>(w.size());
  const double dx = w.grid().dx();
  const double length = w.grid().circumference();
  std::vector<Zero> out;
  for (long long e = r.first; e < r.last; ++e) {
    const double left = w.at(e);
    const double right = w.at(e + 1);
    if (positive(left) == positive(right)) continue;
    Zero z;
    z.edge = wrap_index(e, n);
    z.rising = !positive(left);
    const double offset = dx * left / (left - right);
    z.x = wrap_position(static_cast<double>(z.edge) * dx + offset, length);
    out.push_back(z);
  }
  return out;
}

std::vector<double> subgrid_zeroes(const Field& u, const Field& v, CellWindow window) {
  check_same_grid(u, v);
  std::vector<double> xs;
  for (const Zero& z : locate_zeroes(u - v, window)) xs.push_back(z.x);
  return xs;
}

std::vector<Tangency> tangency_scan(const Field& u, const Field& v, double tol_v, double tol_d) {
  check_same_grid(u, v);
  if (!(tol_v > 0.0) || !(tol_d > 0.0)) throw PreconditionError("tangency tolerances must be positive");
  const Field w = u - v;
  const Field wx = derivative(w);
  std::vector<Tangency> out;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (std::abs(w[j]) < tol_v && std::abs(wx[j]) < tol_d) {
      out.push_back({w.grid().node(j), std::abs(w[j]), std::abs(wx[j])});
    }
  }
  return out;
}

int boundary_flux(std::span<const double> series, std::span<const double> times, double s, double t) {
  if (series.size() != times.size() || series.empty()) {
    throw PreconditionError("probe series and sample times differ in length");
  }
  const double slack = 1e-9 * std::max(1.0, std::abs(times.back() - times.front()));
  if (t < s || s < times.front() - slack || t > times.back() + slack) {
    throw PreconditionError("flux window outside the probe's time range");
  }
  int flux = 0;
  for (std::size_t k = 0; k + 1 < series.size(); ++k) {
    if (times[k] < s - slack || times[k + 1] > t + slack) continue;
    const bool before = positive(series[k]);
    const bool after = positive(series[k + 1]);
    if (before == after) continue;
    flux += before ? 1 : -1;  // -sgn(w_t)
  }
  return flux;
}

std::vector<double> probe_times(const Trajectory& traj) {
  const long long steps = step_count(traj.t0, traj.t1, traj.dt);
  std::vector<double> times(static_cast<std::size_t>(steps) + 1);
  for (long long k = 0; k < steps; ++k) times[static_cast<std::size_t>(k)] = traj.t0 + static_cast<double>(k) * traj.dt;
  times.back() = traj.t1;
  return times;
}

// ---------------------------------------------------------------------------
// Curve matching

namespace {

struct Tracked {
  Zero zero;
  std::size_t curve = 0;
};

// Best orientation-consistent cyclic offset between equally long lists;
// the largest displacement is written to cost_out.
std::size_t best_offset(const std::vector<Zero>& a, const std::vector<Zero>& b, double length, double t,
                        double* cost_out) {
  const std::size_t r = a.size();
  double best_max = std::numeric_limits<double>::infinity();
  double best_sum = best_max;
  std::size_t best = 0;
  for (std::size_t o = 0; o < r; ++o) {
    if (a[0].rising != b[o].rising) continue;
    double worst = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
      const double d = circle_distance(a[i].x, b[(i + o) % r].x, length);
      worst = std::max(worst, d);
      sum += d;
    }
    if (worst < best_max || (worst == best_max && sum < best_sum)) {
      best_max = worst;
      best_sum = sum;
      best = o;
    }
  }
  if (!std::isfinite(best_max)) {
    std::ostringstream msg;
    msg << "no orientation-consistent matching of zeroes at t = " << t;
    throw UnresolvedMatchingError(msg.str());
  }
  if (cost_out != nullptr) *cost_out = best_max;
  return best;
}

// Smallest distance between a zero and the next zero of the same orientation.
double same_orientation_gap(const std::vector<Zero>& a, double length) {
  const std::size_t r = a.size();
  if (r <= 2) return length;
  double gap = length;
  for (std::size_t i = 0; i < r; ++i) {
    const double g = forward_arc(a[i].x, a[(i + 1) % r].x, length) +
                     forward_arc(a[(i + 1) % r].x, a[(i + 2) % r].x, length);
    gap = std::min(gap, g);
  }
  return gap;
}

std::vector<Zero> without(const std::vector<Zero>& list, const std::vector<std::size_t>& removed) {
  std::vector<Zero> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (std::find(removed.begin(), removed.end(), i) == removed.end()) out.push_back(list[i]);
  }
  return out;
}

// Chooses k adjacent pairs of `from` to drop so that the rest matches `to`.
// A single pair is chosen exhaustively by matching cost; several pairs are
// taken greedily, closest adjacent pair first.
std::vector<std::pair<std::size_t, std::size_t>> choose_pairs(const std::vector<Zero>& from,
                                                             const std::vector<Zero>& to, std::size_t k,
                                                             double length, double t) {
  const std::size_t m = from.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (k == 0) return pairs;
  if (2 * k == m) {
    for (std::size_t i = 0; i < m; i += 2) pairs.emplace_back(i, i + 1);
    return pairs;
  }
  if (k == 1) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = (i + 1) % m;
      double cost = 0.0;
      const auto rest = without(from, {i, j});
      best_offset(rest, to, length, t, &cost);
      if (cost < best) {
        best = cost;
        pairs.assign(1, {i, j});
      }
    }
    return pairs;
  }
  std::vector<std::size_t> alive(m);
  std::iota(alive.begin(), alive.end(), 0);
  for (std::size_t p = 0; p < k; ++p) {
    std::size_t best_i = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < alive.size(); ++i) {
      const double g = forward_arc(from[alive[i]].x, from[alive[(i + 1) % alive.size()]].x, length);
      if (g < best) {
        best = g;
        best_i = i;
      }
    }
    const std::size_t j = (best_i + 1) % alive.size();
    pairs.emplace_back(alive[best_i], alive[j]);
    alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(std::max(best_i, j)));
    alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(std::min(best_i, j)));
  }
  return pairs;
}

double pair_midpoint(const Zero& a, const Zero& b, double length) {
  return wrap_position(a.x + 0.5 * forward_arc(a.x, b.x, length), length);
}

bool position_in(double x, CellWindow window, double length) {
  const double width = window.b - window.a;
  if (width >= length) return true;
  return wrap_position(x - window.a, length) < width;
}

}  // namespace

NodalAnalysis match_curves(std::span<const Snapshot> w) {
  if (w.empty()) return {};
  const double length = w.front().u.grid().circumference();
  return match_curves(w, CellWindow{0.0, length});
}

NodalAnalysis match_curves(std::span<const Snapshot> w, CellWindow window) {
  NodalAnalysis all;
  if (w.empty()) return all;
  const GridSpec grid = w.front().u.grid();
  const double length = grid.circumference();
  const CellWindow circle{0.0, length};
  const EdgeRange range = edge_range(grid, window);
  const auto n = static_cast<long long>(grid.size());

  std::vector<Zero> first = locate_zeroes(w.front().u, circle);
  std::sort(first.begin(), first.end(), [](const Zero& l, const Zero& r) { return l.x < r.x; });
  std::vector<Tracked> current;
  for (const Zero& z : first) {
    current.push_back({z, all.curves.size()});
    all.curves.push_back({{{w.front().t, z.x}}, std::nullopt});
  }

  for (std::size_t s = 1; s < w.size(); ++s) {
    if (!(w[s].u.grid() == grid)) throw PreconditionError("snapshots live on different grids");
    const double t = w[s].t;
    if (!(t > w[s - 1].t)) throw PreconditionError("snapshot times must increase");
    std::vector<Zero> next = locate_zeroes(w[s].u, circle);
    std::sort(next.begin(), next.end(), [](const Zero& l, const Zero& r) { return l.x < r.x; });
    std::vector<Zero> prev;
    for (const auto& c : current) prev.push_back(c.zero);

    const std::size_t m = prev.size();
    const std::size_t q = next.size();
    if ((m + q) % 2 != 0) {
      std::ostringstream msg;
      msg << "odd change in the number of zeroes at t = " << t;
      throw UnresolvedMatchingError(msg.str());
    }

    std::vector<std::size_t> dropped_prev, dropped_next;
    if (q < m) {
      for (auto [i, j] : choose_pairs(prev, next, (m - q) / 2, length, t)) {
        const double xd = pair_midpoint(prev[i], prev[j], length);
        all.events.push_back({xd, t, 2, prev[i].edge, prev[j].edge});
        for (std::size_t idx : {i, j}) {
          all.curves[current[idx].curve].annihilated_at = CurveSample{t, xd};
          dropped_prev.push_back(idx);
        }
      }
    } else if (q > m) {
      for (auto [i, j] : choose_pairs(next, prev, (q - m) / 2, length, t)) {
        const double xd = pair_midpoint(next[i], next[j], length);
        all.events.push_back({xd, t, -2, next[i].edge, next[j].edge});
        dropped_next.push_back(i);
        dropped_next.push_back(j);
      }
    }

    std::vector<Tracked> survivors;
    for (std::size_t i = 0; i < m; ++i) {
      if (std::find(dropped_prev.begin(), dropped_prev.end(), i) == dropped_prev.end()) {
        survivors.push_back(current[i]);
      }
    }
    const std::vector<Zero> kept_next = without(next, dropped_next);

    std::vector<Tracked> updated;
    if (!survivors.empty()) {
      std::vector<Zero> a;
      for (const auto& c : survivors) a.push_back(c.zero);
      double cost = 0.0;
      const std::size_t offset = best_offset(a, kept_next, length, t, &cost);
      const double gap = same_orientation_gap(a, length);
      if (!(cost < 0.5 * gap)) {
        std::ostringstream msg;
        msg << "zero displacement " << cost << " is not below half the zero spacing " << gap << " at t = " << t
            << "; refine the snapshot stride";
        throw UnresolvedMatchingError(msg.str());
      }
      for (std::size_t i = 0; i < a.size(); ++i) {
        const Zero& z = kept_next[(i + offset) % a.size()];
        all.curves[survivors[i].curve].samples.push_back({t, z.x});
        updated.push_back({z, survivors[i].curve});
      }
    }
    for (std::size_t idx : dropped_next) {
      updated.push_back({next[idx], all.curves.size()});
      all.curves.push_back({{{t, next[idx].x}}, std::nullopt});
    }
    std::sort(updated.begin(), updated.end(), [](const Tracked& l, const Tracked& r) { return l.zero.x < r.zero.x; });
    current = std::move(updated);
  }

  if (range.last - range.first >= n) return all;

  NodalAnalysis out;
  for (const auto& e : all.events) {
    if (edge_in(e.left_edge, range, n) && edge_in(e.right_edge, range, n)) out.events.push_back(e);
  }
  for (const auto& c : all.curves) {
    NodalCurve clipped;
    for (const auto& p : c.samples) {
      if (position_in(p.x, window, length)) clipped.samples.push_back(p);
    }
    if (clipped.samples.empty()) continue;
    if (c.annihilated_at && position_in(c.annihilated_at->x, window, length)) clipped.annihilated_at = c.annihilated_at;
    out.curves.push_back(std::move(clipped));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Balance ledger

Trajectory difference(const Trajectory& u, const Trajectory& v) {
  if (u.snapshots.size() != v.snapshots.size() || u.probes.size() != v.probes.size()) {
    throw PreconditionError("trajectories differ in snapshots or probes");
  }
  Trajectory w;
  w.t0 = u.t0;
  w.t1 = u.t1;
  w.dt = u.dt;
  for (std::size_t k = 0; k < u.snapshots.size(); ++k) {
    if (u.snapshots[k].t != v.snapshots[k].t) throw PreconditionError("trajectories sampled at different times");
    w.snapshots.push_back({u.snapshots[k].t, u.snapshots[k].u - v.snapshots[k].u});
  }
  for (std::size_t p = 0; p < u.probes.size(); ++p) {
    const auto& a = u.probes[p];
    const auto& b = v.probes[p];
    if (a.x != b.x || a.series.size() != b.series.size()) throw PreconditionError("probes do not line up");
    Probe d;
    d.x = a.x;
    d.series.resize(a.series.size());
    for (std::size_t k = 0; k < a.series.size(); ++k) d.series[k] = a.series[k] - b.series[k];
    w.probes.push_back(std::move(d));
  }
  return w;
}

Trajectory sample_trajectory(const std::function<double(double x, double t)>& w, GridSpec grid, double t0,
                             double t1, double dt, std::span<const double> probes) {
  const long long steps = step_count(t0, t1, dt);
  Trajectory traj;
  traj.t0 = t0;
  traj.t1 = t1;
  traj.dt = dt;
  for (double x : probes) traj.probes.push_back({x, {}});
  for (long long k = 0; k <= steps; ++k) {
    const double t = (k == steps) ? t1 : t0 + static_cast<double>(k) * dt;
    traj.snapshots.push_back({t, sample([&](double x) { return w(x, t); }, grid)});
    for (auto& p : traj.probes) p.series.push_back(w(p.x, t));
  }
  return traj;
}

namespace {

const Probe& find_probe(const Trajectory& traj, double x, double length) {
  for (const auto& p : traj.probes) {
    if (circle_distance(p.x, x, length) <= 1e-12 * std::max(1.0, length)) return p;
  }
  std::ostringstream msg;
  msg << "trajectory has no probe at x = " << x;
  throw PreconditionError(msg.str());
}

std::size_t snapshot_at(const Trajectory& traj, double t) {
  const double tol = 1e-6 * traj.dt;
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    if (std::abs(traj.snapshots[k].t - t) <= tol) return k;
  }
  std::ostringstream msg;
  msg << "no snapshot at t = " << t;
  throw PreconditionError(msg.str());
}

// Oriented flux through node k over snapshots [first, last].
int oriented_flux(const Trajectory& w, const Probe& probe, long long node, std::size_t first, std::size_t last) {
  int flux = 0;
  for (std::size_t m = first; m < last; ++m) {
    const Field& before = w.snapshots[m].u;
    const Field& after = w.snapshots[m + 1].u;
    const bool p0 = positive(probe.series[m]);
    const bool p1 = positive(probe.series[m + 1]);
    if (p0 != positive(before.at(node)) || p1 != positive(after.at(node))) {
      throw PreconditionError("probe series disagrees with the snapshot at its node");
    }
    if (p0 == p1) continue;
    const bool left = positive(before.at(node - 1));
    const bool right = positive(before.at(node + 1));
    if (left != positive(after.at(node - 1)) || right != positive(after.at(node + 1))) {
      std::ostringstream msg;
      msg << "zeroes cross a boundary node and its neighbour in one step at t = " << w.snapshots[m + 1].t;
      throw UnresolvedMatchingError(msg.str());
    }
    if (left == right) {
      std::ostringstream msg;
      msg << "a pair of zeroes appears or vanishes on a window boundary at t = " << w.snapshots[m + 1].t;
      throw UnresolvedMatchingError(msg.str());
    }
    const int wt = p1 ? 1 : -1;
    const int wx = right ? 1 : -1;
    flux += -wt * wx;
  }
  return flux;
}

}  // namespace

ZeroLedger balance_ledger(const Trajectory& w, LedgerWindow window) {
  if (w.snapshots.empty()) throw PreconditionError("empty trajectory");
  if (w.probes.empty() || w.snapshots.size() != w.probes.front().series.size()) {
    throw PreconditionError("balance ledger needs one snapshot per step (snapshot_stride = 1) and probes");
  }
  if (!(window.t_end >= window.t_start)) throw PreconditionError("ledger window needs t_end >= t_start");
  const GridSpec grid = w.snapshots.front().u.grid();
  const double length = grid.circumference();
  const auto n = static_cast<long long>(grid.size());
  const CellWindow cells{window.x_left, window.x_right};
  const EdgeRange range = edge_range(grid, cells);

  const std::size_t is = snapshot_at(w, window.t_start);
  const std::size_t ie = snapshot_at(w, window.t_end);
  const Probe& left_probe = find_probe(w, window.x_left, length);
  const Probe& right_probe = find_probe(w, window.x_right, length);

  ZeroLedger ledger;
  ledger.window = window;
  ledger.Z_start = zero_count(w.snapshots[is].u, cells);
  ledger.Z_end = zero_count(w.snapshots[ie].u, cells);

  const bool full_circle = range.last - range.first == n;
  ledger.F_left = oriented_flux(w, left_probe, range.first, is, ie);
  ledger.F_right = full_circle ? ledger.F_left : oriented_flux(w, right_probe, range.last, is, ie);

  const auto analysis =
      match_curves(std::span<const Snapshot>(w.snapshots).subspan(is, ie - is + 1), CellWindow{0.0, length});
  for (const auto& e : analysis.events) {
    const bool l = edge_in(e.left_edge, range, n);
    const bool r = edge_in(e.right_edge, range, n);
    if (l != r) {
      std::ostringstream msg;
      msg << "pair event at t = " << e.t << " straddles a window boundary";
      throw UnresolvedMatchingError(msg.str());
    }
    if (l) {
      ledger.events.push_back(e);
      ledger.D += e.multiplicity_drop;
    }
  }

  ledger.residual = (ledger.Z_end - ledger.Z_start) - (ledger.F_left - ledger.F_right - ledger.D);
  if (ledger.residual != 0) {
    std::ostringstream msg;
    msg << "zero balance does not close on [" << window.x_left << ", " << window.x_right << ") x ["
        << window.t_start << ", " << window.t_end << "): residual " << ledger.residual;
    throw UnresolvedMatchingError(msg.str());
  }
  return ledger;
}

ZeroLedger balance_ledger(const Trajectory& u, const Trajectory& v, LedgerWindow window) {
  return balance_ledger(difference(u, v), window);
}

// ---------------------------------------------------------------------------
// Export

void write_curves_csv(const std::vector<NodalCurve>& curves, std::ostream& out) {
  out << "curve_id,t,x,terminal\n";
  out.precision(17);
  for (std::size_t id = 0; id < curves.size(); ++id) {
    const auto& c = curves[id];
    for (std::size_t k = 0; k < c.samples.size(); ++k) {
      const bool terminal = c.annihilated_at.has_value() && k + 1 == c.samples.size();
      out << id << ',' << c.samples[k].t << ',' << c.samples[k].x << ',' << (terminal ? 1 : 0) << '\n';
    }
  }
}

void write_curves_csv(const std::vector<NodalCurve>& curves, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  write_curves_csv(curves, out);
}

void write_ledger_jsonl(const std::vector<ZeroLedger>& ledgers, std::ostream& out) {
  for (const auto& l : ledgers) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : l.events) {
      events.push_back({{"x", e.x}, {"t", e.t}, {"multiplicity_drop", e.multiplicity_drop}});
    }
    const nlohmann::json record = {
        {"window",
         {{"x_left", l.window.x_left},
          {"x_right", l.window.x_right},
          {"t_start", l.window.t_start},
          {"t_end", l.window.t_end}}},
        {"Z_start", l.Z_start},
        {"Z_end", l.Z_end},
        {"F_left", l.F_left},
        {"F_right", l.F_right},
        {"D", l.D},
        {"residual", l.residual},
        {"events", events},
    };
    out << record.dump() << '\n';
  }
}

}  // namespace zeroflow
