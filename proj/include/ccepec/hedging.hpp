#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ccepec/data_model.hpp"
#include "ccepec/mpec.hpp"
#include "ccepec/solver/solve.hpp"

namespace ccepec {

// Progressive hedging over the leaders: every state solves its own planning
// problem while multiplier and proximal terms pull the copies of the shared
// lower-level variables (market dispatch and locational prices) toward one
// consensus trajectory.
struct PhOptions {
  double rho_g = 0.7;       // penalty weight on dispatch deviations
  double rho_lambda = 0.7;  // penalty weight on price deviations
  double eps_target = 0.03;
  int max_iter = 100;    // solve rounds including the independent first one
  int breakpoints = 8;   // segments of the piecewise quadratic penalty
  int jobs = 1;          // parallel subproblem solves per round
  MpecOptions mpec;      // forwarded to every actor's problem build
  BnbOptions solver;
  std::function<void(const std::string&)> log;  // optional progress sink
};

// Coordinator state between rounds. Hedged vectors are day-major over the
// shared market layout: dispatch entry (e, u, t) lives at
// (e * units + u) * hours + t and price entry (e, n, t) at
// (e * nodes + n) * hours + t, identical for every actor.
struct PhState {
  int iteration = 0;
  double rho_g = 0.7;
  double rho_lambda = 0.7;
  int units = 0, nodes = 0, hours = 0, days = 0;
  std::vector<std::string> actors;  // states, grid order
  std::vector<std::vector<double>> m_g;       // [actor][dispatch entry]
  std::vector<std::vector<double>> m_lambda;  // [actor][price entry]
  std::vector<double> avg_g, avg_lambda;      // empty until the first round
  std::vector<double> eps_history;
};

// One actor's solution of one round.
struct PhSolveRecord {
  std::string state;
  double objective = 0.0;  // as solved, penalty terms included
  std::vector<double> g;       // hedged dispatch copy
  std::vector<double> lambda;  // hedged price copy
  // point truncated to the unpenalized program's variables, so it can be
  // audited against a fresh build of the actor's own problem
  std::vector<double> x_base;
  std::vector<std::string> cand_ids;
  std::vector<double> built_mw;
  std::vector<std::string> sched_ids;
  std::vector<double> gbar;  // [unit * days*hours + e*hours + t]
};

struct EquilibriumResult {
  std::vector<std::string> actors;
  bool converged = false;
  int iterations = 0;
  double eps = kInf;
  std::vector<double> eps_history;              // one entry per round
  std::vector<std::vector<double>> objectives;  // [round][actor]
  std::vector<double> wall_seconds;             // per round, informational
  std::vector<PhSolveRecord> solutions;         // final round, actor order
  std::vector<double> consensus_g, consensus_lambda;
};

// Zero multipliers, iteration 0, shapes from the grid. Requires at least two
// states (a single planner has nobody to reach consensus with) and a policy
// entry per state. A zero penalty weight is accepted but reported through
// `log` as a warning: without hedging pressure the rounds degenerate to
// repeated independent solves.
PhState ph_initialize(const GridModel& grid, const PolicySet& policies,
                      const PhOptions& opt);

// Round one: every actor's problem solved independently, no penalty terms.
// Throws std::runtime_error naming the actor when a subproblem fails.
std::vector<PhSolveRecord> initial_solve(const GridModel& grid,
                                         const PolicySet& policies,
                                         const PhOptions& opt);

// Entry-wise arithmetic mean across actors (uniform weights). Throws on
// empty input or mismatched lengths.
std::vector<double> consensus_average(
    const std::vector<std::vector<double>>& values);

// Appends the hedging terms for one scalar: objective gains
//   -(multiplier * x) - (rho/2) * q
// where q overestimates (x - center)^2 through tangent cuts at `breakpoints`
// evenly spaced deviations (the chord count; an even count places a cut at
// zero deviation). The approximation is exact at the cut points and below
// the parabola elsewhere, keeping the subproblem linear. Returns the q
// variable, or -1 when rho is zero and only the multiplier term applies.
int append_ph_penalty(ConicProgram& p, int var, double multiplier, double rho,
                      double center, int breakpoints, const std::string& tag);

// One actor's round with the current multipliers and consensus from `st`.
// Requires consensus averages to be present (run the initial round first).
PhSolveRecord augment_and_solve(const GridModel& grid,
                                const PolicySet& policies, int actor,
                                const PhState& st, const PhOptions& opt);

// Standard update m += rho * (value - average) per hedged entry, then
// advances the iteration counter. With uniform averaging the multipliers of
// every entry sum to zero across actors, and stay so.
void update_multipliers(PhState& st,
                        const std::vector<std::vector<double>>& g,
                        const std::vector<std::vector<double>>& lambda,
                        const std::vector<double>& g_avg,
                        const std::vector<double>& lambda_avg);

// Normalized aggregate deviation: sum over actors of the 2-norm distance to
// the average, divided by max(1, 2-norm of the average). Zero exactly when
// every actor agrees entry-wise with the average.
double compute_tolerance(const std::vector<std::vector<double>>& values,
                         const std::vector<double>& avg);

// The full loop: independent first round, then penalized rounds with
// multiplier updates until the tolerance target or the round budget is hit.
// Hitting the budget is not an error; the result comes back flagged.
EquilibriumResult run_ph(const GridModel& grid, const PolicySet& policies,
                         const PhOptions& opt = {});

}  // namespace ccepec
