#pragma once

#include <map>
#include <string>
#include <vector>

#include "ccepec/data_model.hpp"
#include "ccepec/market.hpp"
#include "ccepec/solver/program.hpp"
#include "ccepec/uncertainty.hpp"

namespace ccepec {

// Binary expansion of one locational price onto a uniform grid
// lambda_min + step * {0, 1, ..., 2^K - 1}. The bits are binary variables on
// the program; the definition row ties the (otherwise free) price variable to
// the grid. Products collects the s variables of every bilinear
// linearization sharing this expansion.
struct PriceExpansion {
  double lambda_min = 0.0;
  double step = 0.0;
  int bits_count = 0;
  int lambda_var = -1;
  std::vector<int> bits;      // binary z variables, least significant first
  std::vector<int> products;  // s variables appended by linearizations
};

// Price value encoded by a bit pattern: lambda_min + step * sum 2^{k-1} z_k.
// Throws when the pattern has the wrong length or a non-binary entry.
double expand_price(double lambda_min, double step, int bits_count,
                    const std::vector<int>& bit_values);

// Adds K binary bit variables and the definition row
//   lambda - step * sum 2^{k-1} z_k = lambda_min
// pinning `lambda_var` to the representable grid. K = 0 fixes the price at
// lambda_min.
PriceExpansion attach_price_expansion(ConicProgram& p, const std::string& tag,
                                      double lambda_min, double step,
                                      int bits_count, int lambda_var);

// Exact linearization of price * x for a nonnegative variable x with finite
// upper bound U: per bit, a product variable s_k with
//   0 <= s_k <= U z_k,   x - U (1 - z_k) <= s_k <= x,
// so s_k = z_k * x at any feasible point. Returns the product as the affine
// expression lambda_min * x + step * sum 2^{k-1} s_k. Throws when x is
// unbounded above or may be negative.
LinExpr linearize_bilinear_price(ConicProgram& p, int x_var,
                                 PriceExpansion& pe);

// Declares "at most one of the pair is nonzero". Plain nonnegative variables
// are used directly; compound expressions get an auxiliary nonnegative
// variable pinned by an equality row (which also enforces expr >= 0).
void sos1_complementarity(ConicProgram& p, const std::string& tag,
                          const LinExpr& a, const LinExpr& b);

struct MpecOptions {
  int price_bits = 10;      // K of the price expansion
  double price_min = 0.0;   // lowest representable price
  double price_cap = -1.0;  // highest; <= 0 derives 1.25 * max unit cost
  bool linearize_prices = true;  // off: drop price products (diagnostic only)
};

// One actor's planning problem over all representative days: investment and
// schedule variables with chance-constrained headroom cones, net-purchase
// accounting per owned node, the market's KKT system per day, and the
// discretized price revenue. Solve `program` with branch_and_bound.
struct MpecInstance {
  std::string state;
  ConicProgram program;
  int hours = 0;
  int days = 0;
  double lambda_min = 0.0;
  double lambda_step = 0.0;
  int price_bits = 0;

  std::vector<std::string> sched_ids;  // own controllables, existing first
  std::vector<char> sched_is_candidate;
  std::vector<int> gbar0;             // base var id per scheduled unit
  std::vector<std::string> cand_ids;  // own candidates, data order
  std::vector<int> inv;               // matching capacity variable ids
  std::vector<int> own_nodes;         // node indices owned by the state
  std::vector<int> pdown0, ptilde0;   // base var ids per own node
  std::vector<KktLayout> kkt;         // one embedded system per day
  SocBuildInfo soc;
  std::vector<PriceExpansion> prices;  // [(own_node * days + e) * hours + t]
  std::vector<std::string> residual_bilinear;
  std::vector<double> day_weight;

  int gbar_var(int su, int t, int e) const {
    return gbar0[su] + e * hours + t;
  }
  int pdown_var(int on, int t, int e) const {
    return pdown0[on] + e * hours + t;
  }
  int ptilde_var(int on, int t, int e) const {
    return ptilde0[on] + e * hours + t;
  }
  const PriceExpansion& price(int on, int t, int e) const {
    return prices[(static_cast<std::size_t>(on) * days + e) * hours + t];
  }
};

// Assembles the actor's full program. `rival_gbar` overrides the default
// forecast-minus-reserve offers of rival units with expected dispatch
// (id -> day-major [e * hours + t] MW); units left out keep the default.
// Throws on unknown state or ids, schedules of the wrong length, a
// non-positive interface limit, and when the renewable share target is
// provably unaffordable under the capital budget (pre-check).
MpecInstance build_mpec(const GridModel& grid, const PolicySet& policies,
                        const std::string& state,
                        const std::map<std::string, std::vector<double>>&
                            rival_gbar = {},
                        const MpecOptions& opt = {});

// Names every price * net-purchase product of the objective that is not
// covered by a PriceExpansion. Must be empty for a faithfully built
// instance; building with linearize_prices = false lists every term.
std::vector<std::string> bilinear_product_terms(const MpecInstance& inst);

}  // namespace ccepec
