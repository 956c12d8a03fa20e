#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sandlab/graph.hpp"

namespace sandlab {

/// Mass field s: V -> R on a graph. Negative mass is a hole.
struct Configuration {
  std::shared_ptr<const Graph> graph;
  std::vector<double> values;

  Configuration() = default;
  /// Rejects a size mismatch or non-finite entries.
  Configuration(std::shared_ptr<const Graph> g, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  double total_mass() const;
};

enum class ToppleStatus { Stabilized, MaxSweepsReached };

const char* to_string(ToppleStatus status);

/// Per-sweep emissions u_t - u_{t-1}, together with the configuration the
/// procedure started from.
struct TopplingTrace {
  std::shared_ptr<const Graph> graph;
  std::vector<double> initial;
  std::vector<std::vector<double>> increments;
};

struct OdometerReport {
  std::vector<double> odometer;
  Configuration final_config;
  std::size_t sweeps = 0;
  ToppleStatus status = ToppleStatus::MaxSweepsReached;
  /// max_x (s_final(x) - 1)^+.
  double max_residual_excess = 0.0;
  /// Mass sent through absorbing stubs.
  double absorbed = 0.0;
  /// |Σ s_final + absorbed - Σ s_initial|.
  double mass_drift = 0.0;
  /// Largest |Σ s_t + absorbed_t - Σ s_0| seen after any parallel sweep.
  double max_sweep_drift = 0.0;
  /// Σ_x (s_t(x) - 1)^+ for t = 0..sweeps (over the active region).
  std::vector<double> excess_history;
  std::optional<TopplingTrace> trace;
};

struct ToppleOptions {
  /// Stop once Σ_x (s_t(x) - 1)^+ < tol * |V| and max_x s_t(x) <= 1 + tol.
  double tol = 1e-10;
  std::size_t max_sweeps = 1'000'000;
  bool record = false;
};

/// Toppling in parallel: every site topples its whole excess at once,
/// u_t(x) - u_{t-1}(x) = (s_{t-1}(x) - 1)^+ / deg(x).
OdometerReport topple_parallel(const Configuration& s, const ToppleOptions& options = {});

enum class NestedEngine {
  /// Parallel toppling restricted to the current volume.
  Parallel,
  /// Projected SOR on the volume's obstacle problem. Reaches the same
  /// odometer (least action) in O(side) rather than O(side²) sweeps.
  ProjectedSor,
};

struct NestedOptions {
  double tol = 1e-10;
  std::size_t max_sweeps = 1'000'000;
  NestedEngine engine = NestedEngine::Parallel;
  /// Relaxation factor for ProjectedSor; 0 picks the optimal factor for the
  /// volume's side length.
  double relaxation = 0.0;
};

/// Toppling in nested volumes V_k = {x : ‖x‖_∞ <= r_k} on a torus or box.
/// Stage k topples only sites of V_k until they are stable; sites outside
/// V_k hold whatever mass they receive. Returns one cumulative report per
/// volume, so odometers are pointwise nondecreasing in k.
std::vector<OdometerReport> topple_nested(const Configuration& s, std::span<const int> radii,
                                          const NestedOptions& options = {});

struct TwoStageReport {
  OdometerReport stage1;
  OdometerReport stage2;
  /// u¹ + u², final configuration s¹ + s² + Δ(u¹ + u²).
  OdometerReport combined;
};

/// Toppling in two stages: stabilize s1 alone, then topple s1_∞ + s2.
/// Requires s2 >= 0; stage 1 runs under the same sweep cap whether or not s1
/// stabilizes, and both stage statuses are reported.
TwoStageReport topple_two_stage(const Configuration& s1, const Configuration& s2,
                                const ToppleOptions& options = {});

class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExactOptions {
  /// Accept |Σ s - |V|| <= mass_tol * |V|.
  double mass_tol = 1e-9;
  /// Raise SolveError if ‖s + Δu - 1‖_∞ exceeds this.
  double residual_limit = 1e-8;
};

struct ExactOdometer {
  std::vector<double> odometer;
  /// ‖s + Δu - 1‖_∞.
  double residual = 0.0;
  enum class Method { Spectral, SparseCholesky, ConjugateGradient } method = Method::Spectral;
};

/// Odometer of a configuration with total mass |V| on a graph without
/// absorption: the unique u with s + Δu = 1 and min u = 0.
ExactOdometer solve_odometer_exact(const Configuration& s, const ExactOptions& options = {});

/// True iff max_x s(x) <= 1 + tol.
bool is_stable(const Configuration& s, double tol = 1e-10);

struct LegalityResult {
  bool legal = true;
  std::size_t sweep = 0;
  Vertex vertex = 0;
  double emitted = 0.0;
  double allowed = 0.0;
};

/// Checks that every recorded emission is within (s_{t-1}(x) - 1)^+/deg(x)
/// plus eps, recomputing s_{t-1} = s_0 + Δu_{t-1} from the trace. Reports
/// the first violation (1-based sweep).
LegalityResult check_legal(const TopplingTrace& trace, double eps = 1e-9);

}  // namespace sandlab
