#pragma once

#include <map>
#include <string>
#include <vector>

#include "ccepec/data_model.hpp"
#include "ccepec/solver/program.hpp"

namespace ccepec {

// Units in market order: existing generators first, then candidates, each in
// data order. All per-unit vectors in this module use this enumeration.
std::vector<std::string> market_unit_ids(const GridModel& grid);

// Offer quantities for one representative day, [unit * hours + t].
struct DayOffers {
  int day = 0;
  std::vector<double> values;
};

// Offers seen by the market when `state` is the strategic actor: its own
// units offer the scheduled quantities in `gbar` (id -> per-hour MW for this
// day); own renewables left out of `gbar` default to forecast output
// rho * G^max (zero for unbuilt candidates). Rival units offer forecast
// capacity net of reserve, rho * G^max - R, clipped at zero; rival candidates
// are not built and offer zero. Throws when an own existing controllable has
// no schedule or a vector has the wrong length.
DayOffers build_offers(const GridModel& grid, const std::string& state,
                       int day,
                       const std::map<std::string, std::vector<double>>& gbar);

// Wholesale market clearing for one representative day: dispatch g bounded
// by the offers, DC flows through line reactances, one balance row per
// (node, hour) whose dual is the locational price, symmetric flow limits as
// variable bounds, angles free with the lowest-indexed node of each island
// pinned to zero. Objective maximizes -sum C_g * g. Bound duals follow the
// reduced-cost convention documented on ConicProgram.
struct MarketLp {
  ConicProgram lp;
  int day = 0;
  int hours = 0;
  int units = 0;
  int lines = 0;
  int nodes = 0;
  std::vector<double> offers;  // copy of the bound vector, [unit * hours + t]

  // derived tables shared with the KKT builder and the point verifier
  std::vector<std::string> unit_ids, line_ids, node_ids;
  std::vector<int> unit_node;
  std::vector<double> unit_cost;
  std::vector<int> line_from, line_to;
  std::vector<double> line_x, line_cap;

  int g_var(int u, int t) const { return u * hours + t; }
  int f_var(int l, int t) const { return (units + l) * hours + t; }
  int theta_var(int n, int t) const { return (units + lines + n) * hours + t; }
  int flowdef_row(int l, int t) const { return l * hours + t; }
  int balance_row(int n, int t) const { return (lines + n) * hours + t; }
};

// Throws when an island's offers cannot cover its demand in some hour, which
// makes the clearing infeasible no matter the flows (names the nodes).
MarketLp build_market_lp(const GridModel& grid, const DayOffers& offers);

// Index map of one appended KKT system. Variables: primal g/f/theta, balance
// duals lambda (free), flow-definition duals xi (free), bound duals
// gamma/delta (nonnegative), and nonnegative slacks for the three bound
// expressions that are not plain variables (offer - g, f + Fmax, Fmax - f).
struct KktLayout {
  int day = 0;
  int hours = 0;
  int units = 0;
  int lines = 0;
  int nodes = 0;
  // variable bases
  int g0 = -1, f0 = -1, th0 = -1, lam0 = -1, xi0 = -1;
  int glb0 = -1, gub0 = -1, dlb0 = -1, dub0 = -1;
  int sgu0 = -1, sfl0 = -1, sfu0 = -1;
  // row bases
  int r_flow0 = -1, r_bal0 = -1, r_sgu0 = -1, r_sfl0 = -1, r_sfu0 = -1;
  int r_statg0 = -1, r_statf0 = -1, r_statth0 = -1;

  int g_var(int u, int t) const { return g0 + u * hours + t; }
  int f_var(int l, int t) const { return f0 + l * hours + t; }
  int theta_var(int n, int t) const { return th0 + n * hours + t; }
  int lambda_var(int n, int t) const { return lam0 + n * hours + t; }
  int xi_var(int l, int t) const { return xi0 + l * hours + t; }
  int gamma_lb(int u, int t) const { return glb0 + u * hours + t; }
  int gamma_ub(int u, int t) const { return gub0 + u * hours + t; }
  int delta_lb(int l, int t) const { return dlb0 + l * hours + t; }
  int delta_ub(int l, int t) const { return dub0 + l * hours + t; }
  int slack_gub(int u, int t) const { return sgu0 + u * hours + t; }
  int slack_flb(int l, int t) const { return sfl0 + l * hours + t; }
  int slack_fub(int l, int t) const { return sfu0 + l * hours + t; }
  int flowdef_row(int l, int t) const { return r_flow0 + l * hours + t; }
  int balance_row(int n, int t) const { return r_bal0 + n * hours + t; }
};

// Appends the market's KKT conditions for day `day` to `p`: primal equality
// rows, stationarity rows
//   g:     lambda_n + gamma_lb - gamma_ub = C_g
//   f:     xi + lambda_r - lambda_o + delta_lb - delta_ub = 0
//   theta: sum_{l out of n} -xi/X + sum_{l into n} xi/X = 0
// and the four complementarity pairs as SOS1 sets. Offers enter the upper
// dispatch bound as affine expressions over variables already on `p`, so a
// surrounding model may keep them symbolic; pass constants for a standalone
// system. offers[u * hours + t] with constant-only entries must be >= 0.
KktLayout append_kkt_system(ConicProgram& p, const GridModel& grid, int day,
                            const std::vector<LinExpr>& offers);

struct KktSystem {
  ConicProgram program;
  KktLayout layout;
};

// Standalone KKT feasibility system with the LP's numeric offers.
KktSystem build_kkt_system(const MarketLp& m);

// A primal-dual point of the market LP: primal values in the MarketLp
// variable layout, duals per row family, bound duals per (unit|line, hour).
struct MarketPoint {
  std::vector<double> x;
  std::vector<double> lambda;    // [node * hours + t]
  std::vector<double> xi;        // [line * hours + t]
  std::vector<double> gamma_lb;  // [unit * hours + t]
  std::vector<double> gamma_ub;
  std::vector<double> delta_lb;  // [line * hours + t]
  std::vector<double> delta_ub;
};

// Extracts the point from a solved LP: lambda and xi from row duals, bound
// duals split out of the reduced costs by sign.
MarketPoint market_point_from_solve(const MarketLp& m, const SolveResult& res);

// Residuals of the KKT conditions at a candidate point, one maximum per
// family. Complementarity products are scaled by max(1, |a|, |b|).
struct KktReport {
  double primal = 0.0;           // equality rows and bound violations
  double stationarity = 0.0;     // g, f and theta rows
  double complementarity = 0.0;  // the four orthogonality pairs
  double dual_sign = 0.0;        // most negative bound dual, as a magnitude
  bool passed = false;
  std::string worst;  // which condition produced the largest residual

  double max_residual() const;
};

KktReport verify_kkt_point(const MarketLp& m, const MarketPoint& pt,
                           double tol = 1e-6);

}  // namespace ccepec
