#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ccepec/data_model.hpp"
#include "ccepec/market.hpp"
#include "ccepec/solver/program.hpp"

namespace ccepec {

// A planner's commitment for one state, as checked against realized forecast
// errors: scheduled output per participating controllable (day-major
// [e*hours + t]) and built capacity per candidate the schedule or the
// recourse rule touches.
struct CcSolution {
  std::string state;
  std::map<std::string, std::vector<double>> gbar;
  std::map<std::string, double> built_mw;
};

// Violation frequency of one output bound of one unit at one hour.
struct CcCheckRow {
  std::string unit;
  int t = 0;
  int e = 0;
  bool upper = false;   // capacity side when true, minimum-output side otherwise
  double bound = 0.0;   // the realized bound in MW
  double rate = 0.0;    // fraction of samples beyond the bound
  double ci = 0.0;      // 95% half-width, normal approximation
};

struct CcCheckReport {
  std::string state;
  int samples = 0;
  double eta = 0.0;
  double max_rate = 0.0;
  std::vector<CcCheckRow> rows;
};

// Simulates the recourse rule against n joint error draws per representative
// day and counts how often each participating unit's adjusted output
//   g = gbar - alpha * sum of realized errors
// leaves its bounds. Days use independent streams derived from `seed`, so
// partial reruns and parallel splits merge to identical counts. Requires
// n >= 10000 (the normal-approximation CI is meaningless below that),
// eta in (0, 0.5), a schedule of length days*hours for every participant,
// and built capacity for every candidate the rule references.
CcCheckReport monte_carlo_cc_check(const GridModel& grid,
                                   const CcSolution& sol, double eta, int n,
                                   std::uint64_t seed);

// Side-by-side solve of one market day: the LP directly, and its KKT
// optimality system as a feasibility program with complementarity left to
// the branch-and-bound backend. Objectives and dispatch must agree for the
// single-level reformulation to be trusted; the price gap is reported but
// not judged, since degenerate clearings admit several valid dual vectors.
struct KktEquivalenceReport {
  double tol = 0.0;
  double lp_objective = 0.0;
  double kkt_objective = 0.0;     // market objective at the KKT point
  double max_dispatch_diff = 0.0;
  double max_price_diff = 0.0;
  bool passed = false;
};

// Throws std::runtime_error when either solve fails. Differences are
// compared against tol scaled by max(1, magnitude of the quantity).
KktEquivalenceReport lp_vs_kkt_equivalence(const GridModel& grid,
                                           const DayOffers& offers,
                                           double tol = 1e-6);

// Constraint-family residual summary of a point against a program. Rows are
// grouped by the prefix of their name before the first underscore; variable
// bounds, cone memberships, SOS1 sets, and binary integrality get synthetic
// families of their own. Residuals are absolute: MW for balance rows, MWh
// for the renewable-share rows, dollars for budget rows.
struct AuditFamily {
  std::string family;
  int count = 0;
  double max_residual = 0.0;
  std::string worst;  // name of the element with the largest residual
  bool passed = false;
};

struct AuditReport {
  double tol = 0.0;
  double max_residual = 0.0;
  bool passed = false;
  std::vector<AuditFamily> families;
};

AuditReport audit_solution(const ConicProgram& p, const std::vector<double>& x,
                           double tol = 1e-6);

}  // namespace ccepec
