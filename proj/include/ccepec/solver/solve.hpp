#pragma once

#include <functional>
#include <optional>
#include <string>

#include "ccepec/solver/program.hpp"

namespace ccepec {

struct BnbOptions {
  double rel_gap = 1e-4;
  double feas_tol = 1e-7;
  double int_tol = 1e-6;
  long max_nodes = 2000000;
  long max_simplex_iters = 200000000;
  double time_limit_seconds = kInf;  // keep infinite for reproducible runs
  int soc_cut_rounds = 40;           // per node
  bool plunge = true;
  std::function<void(const std::string&)> log;  // optional progress sink
};

// Pure-LP solve (no binaries, SOS1 sets or cones). Returns duals and reduced
// costs in the convention documented on ConicProgram.
SolveResult solve_lp(const ConicProgram& p);

// Supporting-hyperplane cut for a violated cone membership at `x`:
//   head >= (v/||v||) . tail(x)
// where v is the tail evaluated at x. Valid for every cone point, violated
// by x when head < ||v|| - tol. Returns nothing when x satisfies the cone.
// A zero tail with negative head yields the cut head >= 0.
std::optional<Row> soc_violation_cut(const std::vector<double>& x,
                                     const SocConstraint& cone,
                                     double tol = 1e-7);

// Best-first branch and bound with plunging dives. LP relaxations per node,
// SOC outer-approximation cuts iterated to feasibility tolerance, branching
// on fractional binaries and on violated SOS1 sets (split at the member with
// the largest LP value). Bounds are required on binaries and on any variable
// whose product linearization or SOS1 role depends on them; free dual
// variables of embedded KKT systems are fine.
SolveResult branch_and_bound(const ConicProgram& p, const BnbOptions& opt = {});

// Dispatches to solve_lp for pure LPs, branch_and_bound otherwise.
SolveResult solve(const ConicProgram& p, const BnbOptions& opt = {});

}  // namespace ccepec
