#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "zeroflow/dynamics.hpp"
#include "zeroflow/field.hpp"

namespace zeroflow {

/// Half-open window [a, b) in cell units. Both ends must fall on grid nodes;
/// they may lie outside [0, L) and are reduced modulo the circumference.
struct CellWindow {
  double a = 0.0;
  double b = 1.0;
};

/// Node indices [first, last) of a window, `last - first` <= grid size.
struct EdgeRange {
  long long first = 0;
  long long last = 0;
};

EdgeRange edge_range(const GridSpec& grid, CellWindow window);

/// Sign with sgn(0) := +. Used for nodes and probes alike.
inline bool positive(double w) { return w >= 0.0; }

/// Strict sign changes of w = u - v across the edges (j, j+1), j in [a n, b n).
int zero_count(const Field& u, const Field& v, CellWindow window);
int zero_count(const Field& w, CellWindow window);

/// A zero located inside edge (j, j+1). `rising` is true when w goes from
/// negative to non-negative.
struct Zero {
  double x = 0.0;
  long long edge = 0;
  bool rising = false;
};

/// Linearly interpolated crossing positions, ordered along the window.
std::vector<Zero> locate_zeroes(const Field& w, CellWindow window);
std::vector<double> subgrid_zeroes(const Field& u, const Field& v, CellWindow window);

struct Tangency {
  double x = 0.0;
  double value = 0.0;  // |w|
  double slope = 0.0;  // |w_x|
};

/// Nodes where |w| < tol_v and |w_x| < tol_d.
std::vector<Tangency> tangency_scan(const Field& u, const Field& v, double tol_v, double tol_d);

/// Net flux of zeroes through a fixed point from its time series alone:
/// the sum over sign flips of -sgn(w_t). A flip between samples k and k+1
/// counts when times[k] >= s and times[k+1] <= t.
int boundary_flux(std::span<const double> series, std::span<const double> times, double s, double t);

/// Sample times of a trajectory's probes (t0 + k dt, the last one t1).
std::vector<double> probe_times(const Trajectory& traj);

struct AnnihilationEvent {
  double x = 0.0;
  double t = 0.0;
  /// 2 for a pair that disappears, -2 for a pair that appears.
  int multiplicity_drop = 2;
  /// Edges that held the pair in the snapshot where it was present.
  long long left_edge = 0;
  long long right_edge = 0;
};

struct CurveSample {
  double t = 0.0;
  double x = 0.0;
};

struct NodalCurve {
  std::vector<CurveSample> samples;
  /// Set when the curve ends in an annihilation; (t_d, x_d).
  std::optional<CurveSample> annihilated_at;
};

struct NodalAnalysis {
  std::vector<NodalCurve> curves;
  std::vector<AnnihilationEvent> events;
};

/// Tracks the zeroes of w through consecutive snapshots on the full circle.
/// Cyclic order and orientation are preserved; when the count changes by 2k
/// the closest adjacent pairs are removed (or created) first. The window only
/// filters the output: curves keep their samples inside it, events are kept
/// when both of their edges lie inside it.
///
/// Throws UnresolvedMatchingError when some zero moves at least half the
/// distance to the next zero of the same orientation.
NodalAnalysis match_curves(std::span<const Snapshot> w, CellWindow window);
NodalAnalysis match_curves(std::span<const Snapshot> w);

struct LedgerWindow {
  double x_left = 0.0;
  double x_right = 1.0;
  double t_start = 0.0;
  double t_end = 1.0;
};

struct ZeroLedger {
  LedgerWindow window;
  int Z_start = 0;
  int Z_end = 0;
  /// Oriented flux through each boundary; rightward crossings count +1.
  int F_left = 0;
  int F_right = 0;
  int D = 0;
  /// (Z_end - Z_start) - (F_left - F_right - D).
  int residual = 0;
  std::vector<AnnihilationEvent> events;
};

/// w = u - v, snapshot by snapshot and probe by probe.
Trajectory difference(const Trajectory& u, const Trajectory& v);

/// Samples an analytic w(x, t) into a trajectory with one snapshot per step
/// and probes at the given points.
Trajectory sample_trajectory(const std::function<double(double x, double t)>& w, GridSpec grid, double t0,
                             double t1, double dt, std::span<const double> probes = {});

/// Zero balance on a space-time window. Needs one snapshot per step and
/// probes at x_left and x_right (modulo the circumference). A nonzero
/// residual, a pair event straddling a boundary, or simultaneous flips at a
/// boundary node and its neighbour raise UnresolvedMatchingError.
ZeroLedger balance_ledger(const Trajectory& w, LedgerWindow window);
ZeroLedger balance_ledger(const Trajectory& u, const Trajectory& v, LedgerWindow window);

/// CSV polylines: curve_id,t,x,terminal (terminal is 1 on the last sample of
/// an annihilated curve).
void write_curves_csv(const std::vector<NodalCurve>& curves, std::ostream& out);
void write_curves_csv(const std::vector<NodalCurve>& curves, const std::filesystem::path& path);

/// One JSON object per line.
void write_ledger_jsonl(const std::vector<ZeroLedger>& ledgers, std::ostream& out);

}  // namespace zeroflow
