#pragma once

#include <map>
#include <string>
#include <vector>

#include "ccepec/data_model.hpp"
#include "ccepec/solver/program.hpp"
#include "ccepec/uncertainty.hpp"

namespace ccepec {

struct BenchmarkOptions {
  // Reuse the chance-constrained headroom cones per state on top of the
  // deterministic reserve bounds. Off by default: the centralized model is
  // deterministic, reserves stand in for the uncertainty margin.
  bool chance_headroom = false;
};

// Centralized planning baseline: one continuous program clearing dispatch,
// flows, reserve, and investment for every state at once. No strategic
// layer, no complementarity; solve with solve_lp (or solve when the chance
// headroom cones are on).
struct BenchmarkInstance {
  ConicProgram program;
  int hours = 0;
  int days = 0;
  std::vector<std::string> unit_ids;  // existing units first, then candidates
  std::vector<std::string> cand_ids;  // candidates, data order
  std::vector<int> inv;               // capacity variable per candidate
  std::vector<int> g0;                // dispatch base per unit
  std::vector<int> r0;                // reserve base per unit, -1 for renewables
  std::vector<int> f0;                // flow base per line
  std::vector<int> th0;               // angle base per node
  std::vector<double> reserve_req;    // [e*hours + t]
  SocBuildInfo soc;                   // populated when chance_headroom is on

  int g_var(int u, int t, int e) const { return g0[u] + e * hours + t; }
  int r_var(int u, int t, int e) const { return r0[u] + e * hours + t; }
  int f_var(int l, int t, int e) const { return f0[l] + e * hours + t; }
  int theta_var(int n, int t, int e) const { return th0[n] + e * hours + t; }
};

// Assembles the benchmark over all states. `reserve` is the system reserve
// requirement in MW, day-major [e*hours + t]; every entry must be
// nonnegative. Requires a policy entry for every state on the grid. Throws
// when the requirement provably exceeds the fleet's aggregate headroom.
BenchmarkInstance build_benchmark(const GridModel& grid,
                                  const PolicySet& policies,
                                  const std::vector<double>& reserve,
                                  const BenchmarkOptions& opt = {});

// Flat-requirement convenience.
BenchmarkInstance build_benchmark(const GridModel& grid,
                                  const PolicySet& policies, double reserve,
                                  const BenchmarkOptions& opt = {});

// Reserve level mirroring the chance-constraint margin: the 1 - eta normal
// quantile times the aggregated forecast error stdev of every installed
// renewable on the system.
double default_reserve_requirement(const GridModel& grid, double eta);

// Built capacity aggregated per state and technology class, tagged with the
// scenario it came from so comparisons can refuse apples-to-oranges input.
struct ExpansionSummary {
  std::string scenario;
  std::map<std::string, double> controllable_mw;
  std::map<std::string, double> renewable_mw;
};

// Folds per-candidate built MW (aligned with cand_ids) into per-state sums.
// Every state on the grid gets an entry, including all-zero ones.
ExpansionSummary summarize_expansion(const GridModel& grid,
                                     const std::vector<std::string>& cand_ids,
                                     const std::vector<double>& built_mw,
                                     const std::string& scenario);

struct ExpansionDelta {
  std::string state;
  double controllable_mw = 0.0;  // run minus benchmark
  double renewable_mw = 0.0;
};

// Per-state investment gap of a strategic run against the centralized
// baseline. Throws on mismatched scenario tags or state sets.
std::vector<ExpansionDelta> compare_expansion(const ExpansionSummary& run,
                                              const ExpansionSummary& bench);

}  // namespace ccepec
