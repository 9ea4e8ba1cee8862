#include "ccepec/mpec.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace ccepec {

namespace {

double pow2(int k) { return std::ldexp(1.0, k); }

std::string dt_tag(int e, int t) {
  return "_d" + std::to_string(e) + "_t" + std::to_string(t);
}

}  // namespace

double expand_price(double lambda_min, double step, int bits_count,
                    const std::vector<int>& bit_values) {
  if (static_cast<int>(bit_values.size()) != bits_count) {
    std::ostringstream os;
    os << "expand_price: bit pattern has " << bit_values.size()
       << " entries, expected " << bits_count;
    throw std::invalid_argument(os.str());
  }
  double level = 0.0;
  for (int k = 0; k < bits_count; ++k) {
    if (bit_values[k] != 0 && bit_values[k] != 1)
      throw std::invalid_argument(
          "expand_price: bits must be 0 or 1, got " +
          std::to_string(bit_values[k]));
    level += pow2(k) * bit_values[k];
  }
  return lambda_min + step * level;
}

PriceExpansion attach_price_expansion(ConicProgram& p, const std::string& tag,
                                      double lambda_min, double step,
                                      int bits_count, int lambda_var) {
  if (lambda_var < 0 || lambda_var >= p.num_vars())
    throw std::invalid_argument(
        "attach_price_expansion: price variable is not on the program");
  if (bits_count < 0)
    throw std::invalid_argument(
        "attach_price_expansion: bit count must be nonnegative");
  if (step < 0.0)
    throw std::invalid_argument(
        "attach_price_expansion: step must be nonnegative");

  PriceExpansion pe;
  pe.lambda_min = lambda_min;
  pe.step = step;
  pe.bits_count = bits_count;
  pe.lambda_var = lambda_var;

  std::vector<LinTerm> def{{lambda_var, 1.0}};
  for (int k = 0; k < bits_count; ++k) {
    int z = p.add_var("z" + std::to_string(k) + "_" + tag, 0.0, 1.0,
                      VarKind::Binary);
    pe.bits.push_back(z);
    def.push_back({z, -step * pow2(k)});
  }
  p.add_row("lamdef_" + tag, std::move(def), RowSense::Equal, lambda_min);
  return pe;
}

LinExpr linearize_bilinear_price(ConicProgram& p, int x_var,
                                 PriceExpansion& pe) {
  if (x_var < 0 || x_var >= p.num_vars())
    throw std::invalid_argument(
        "linearize_bilinear_price: product variable is not on the program");
  const Variable& xv = p.vars[x_var];
  if (!std::isfinite(xv.ub))
    throw std::invalid_argument(
        "linearize_bilinear_price: variable '" + xv.name +
        "' has no finite upper bound");
  if (xv.lb < 0.0)
    throw std::invalid_argument(
        "linearize_bilinear_price: variable '" + xv.name +
        "' may be negative; shift it onto [0, ub] first");

  const double u = xv.ub;
  LinExpr product;
  if (pe.lambda_min != 0.0) product.add(x_var, pe.lambda_min);
  for (int k = 0; k < pe.bits_count; ++k) {
    const std::string suffix = std::to_string(k) + "_" + xv.name;
    int s = p.add_var("s" + suffix, 0.0, u);
    pe.products.push_back(s);
    // s_k = z_k * x via the standard four-sided box (lower side s >= 0 is
    // the variable bound): s <= U z, s <= x, s >= x - U (1 - z).
    p.add_row("sz" + suffix, {{s, 1.0}, {pe.bits[k], -u}},
              RowSense::LessEqual, 0.0);
    p.add_row("sx" + suffix, {{s, 1.0}, {x_var, -1.0}}, RowSense::LessEqual,
              0.0);
    p.add_row("sl" + suffix, {{s, 1.0}, {x_var, -1.0}, {pe.bits[k], -u}},
              RowSense::GreaterEqual, -u);
    product.add(s, pe.step * pow2(k));
  }
  return product;
}

void sos1_complementarity(ConicProgram& p, const std::string& tag,
                          const LinExpr& a, const LinExpr& b) {
  auto member = [&p, &tag](const LinExpr& e, const char* side) {
    if (e.terms.size() == 1 && e.terms[0].coef == 1.0 && e.constant == 0.0 &&
        e.terms[0].var >= 0 && e.terms[0].var < p.num_vars() &&
        p.vars[e.terms[0].var].lb >= 0.0)
      return e.terms[0].var;
    for (const auto& t : e.terms)
      if (t.var < 0 || t.var >= p.num_vars())
        throw std::invalid_argument(
            "sos1_complementarity: expression references a variable that is "
            "not on the program");
    // Pin the expression to a fresh nonnegative variable. The equality also
    // enforces expr >= 0, which membership in the pair requires.
    int w = p.add_var(std::string("w") + side + "_" + tag, 0.0, kInf);
    std::vector<LinTerm> def{{w, 1.0}};
    for (const auto& t : e.terms) def.push_back({t.var, -t.coef});
    p.add_row(std::string("wdef") + side + "_" + tag, std::move(def),
              RowSense::Equal, e.constant);
    return w;
  };
  int va = member(a, "a");
  int vb = member(b, "b");
  p.add_sos1("cs_" + tag, {va, vb});
}

MpecInstance build_mpec(const GridModel& grid, const PolicySet& policies,
                        const std::string& state,
                        const std::map<std::string, std::vector<double>>&
                            rival_gbar,
                        const MpecOptions& opt) {
  if (grid.state_index(state) < 0)
    throw std::runtime_error("build_mpec: unknown state '" + state + "'");
  const ActorPolicy* pol = policies.find(state);
  if (!pol)
    throw std::runtime_error("build_mpec: no policy entry for state '" +
                             state + "'");
  const int hours = grid.hours;
  const int days = static_cast<int>(grid.rep_days.size());
  const int nodes = static_cast<int>(grid.nodes.size());
  if (hours < 1 || days < 1)
    throw std::invalid_argument("build_mpec: grid has no hours or days");
  if (!(pol->interface_limit > 0.0) || !std::isfinite(pol->interface_limit))
    throw std::invalid_argument(
        "build_mpec: interface limit for state '" + state +
        "' must be positive and finite");
  if (opt.price_bits < 0 || opt.price_bits > 30)
    throw std::invalid_argument("build_mpec: price bit count out of range");

  // Price grid. A non-positive cap derives one from the costliest unit so the
  // discretization always reaches above marginal cost.
  double price_cap = opt.price_cap;
  if (price_cap <= 0.0) {
    double cmax = 0.0;
    for (const auto& g : grid.existing_gens) cmax = std::max(cmax, g.cost);
    for (const auto& g : grid.candidate_gens) cmax = std::max(cmax, g.cost);
    price_cap = std::max(1.25 * cmax, opt.price_min);
  }
  if (price_cap < opt.price_min)
    throw std::invalid_argument("build_mpec: price cap below price floor");
  const double step =
      opt.price_bits == 0
          ? 0.0
          : (price_cap - opt.price_min) / (pow2(opt.price_bits) - 1.0);

  // Ownership and id tables.
  std::unordered_map<std::string, const Generator*> by_id;
  for (const auto& g : grid.existing_gens) by_id[g.id] = &g;
  for (const auto& g : grid.candidate_gens) by_id[g.id] = &g;
  auto owner = [&grid](const Generator& g) {
    return grid.nodes[grid.node_index(g.node)].state;
  };

  for (const auto& [id, vals] : rival_gbar) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw std::runtime_error("build_mpec: rival schedule for unknown unit '" +
                               id + "'");
    if (owner(*it->second) == state)
      throw std::runtime_error("build_mpec: unit '" + id +
                               "' belongs to state '" + state +
                               "', not a rival");
    if (static_cast<int>(vals.size()) != days * hours) {
      std::ostringstream os;
      os << "build_mpec: rival schedule for unit '" << id << "' has "
         << vals.size() << " entries, expected " << days * hours;
      throw std::invalid_argument(os.str());
    }
    for (double v : vals)
      if (!(v >= 0.0))
        throw std::invalid_argument(
            "build_mpec: rival schedule for unit '" + id +
            "' has a negative or non-numeric entry");
  }

  const int years = static_cast<int>(policies.horizon_years + 0.5);
  const double rate = policies.discount_rate;
  // Capacity tariff arrives in $/kW as published; convert to $/MW before
  // prorating it onto the daily accounting the rest of the model uses.
  const double pct_daily =
      pol->capacity_tariff > 0.0
          ? prorate_capital_cost(pol->capacity_tariff * 1000.0, years, rate)
          : 0.0;

  // Own candidates with daily annuities and buildable caps.
  struct Cand {
    const CandidateGenerator* g = nullptr;
    double daily = 0.0;  // $/MW per day
    double ub = 0.0;     // MW buildable: site cap, tightened by the budget
  };
  std::vector<Cand> cands;
  for (const auto& c : grid.candidate_gens) {
    if (owner(c) != state) continue;
    Cand ci;
    ci.g = &c;
    ci.daily = prorate_capital_cost(c.capital_cost, years, rate);
    ci.ub = c.g_max;
    if (std::isfinite(pol->capital_budget) && ci.daily > 0.0)
      ci.ub = std::min(ci.ub, pol->capital_budget / ci.daily);
    cands.push_back(ci);
  }

  const std::vector<int> own_nodes = grid.nodes_of_state(state);

  // With no renewables in the state there is no forecast error, the cones
  // are vacuous, and every controllable keeps plain deterministic bounds.
  bool stochastic = false;
  for (const auto& g : grid.existing_gens)
    if (g.kind == GenKind::Renewable && owner(g) == state) stochastic = true;
  for (const auto& ci : cands)
    if (ci.g->kind == GenKind::Renewable) stochastic = true;

  // Renewable share pre-check: the target is unreachable when even spending
  // the whole capital budget on the most energy-dense candidates cannot close
  // the gap left by existing renewables. Necessary condition only, so a pass
  // proves nothing, but a failure is a guaranteed infeasibility worth a
  // message instead of a solver "Infeasible".
  if (pol->rps_fraction > 0.0) {
    for (int e = 0; e < days; ++e) {
      double required = 0.0;
      for (int n : own_nodes)
        for (int t = 0; t < hours; ++t) required += grid.demand_at(n, t, e);
      required *= pol->rps_fraction;

      double attainable = 0.0;
      for (const auto& g : grid.existing_gens) {
        if (g.kind != GenKind::Renewable || owner(g) != state) continue;
        for (int t = 0; t < hours; ++t)
          attainable += grid.forecast_factor(g, t, e) * g.g_max;
      }
      struct Item {
        double energy = 0.0;  // MWh per MW built, this day
        double daily = 0.0;
        double ub = 0.0;
      };
      std::vector<Item> items;
      for (const auto& ci : cands) {
        if (ci.g->kind != GenKind::Renewable) continue;
        Item it;
        for (int t = 0; t < hours; ++t)
          it.energy += grid.forecast_factor(*ci.g, t, e);
        it.daily = ci.daily;
        it.ub = ci.ub;
        items.push_back(it);
      }
      std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        // free capacity first, then best energy per dollar
        double ra = a.daily > 0.0 ? a.energy / a.daily : kInf;
        double rb = b.daily > 0.0 ? b.energy / b.daily : kInf;
        return ra > rb;
      });
      double remaining = pol->capital_budget;  // may be infinite
      for (const auto& it : items) {
        double take = it.ub;
        if (std::isfinite(remaining) && it.daily > 0.0)
          take = std::min(take, remaining / it.daily);
        attainable += take * it.energy;
        if (std::isfinite(remaining)) remaining -= take * it.daily;
      }
      if (required > attainable + 1e-6) {
        std::ostringstream os;
        os << "build_mpec: renewable share pre-check failed for state '"
           << state << "' on day " << e << ": target needs " << required
           << " MWh of scheduled renewables but at most " << attainable
           << " MWh is buildable under the capital budget";
        throw std::runtime_error(os.str());
      }
    }
  }

  MpecInstance inst;
  inst.state = state;
  inst.hours = hours;
  inst.days = days;
  inst.lambda_min = opt.price_min;
  inst.lambda_step = step;
  inst.price_bits = opt.price_bits;
  for (const auto& d : grid.rep_days) inst.day_weight.push_back(d.weight);
  ConicProgram& p = inst.program;
  p.name = "mpec_" + state;

  // Investment variables, data order.
  std::unordered_map<std::string, int> inv_index;
  for (const auto& ci : cands) {
    int v = p.add_var("gmax_" + ci.g->id, 0.0, ci.ub);
    inst.cand_ids.push_back(ci.g->id);
    inst.inv.push_back(v);
    inv_index[ci.g->id] = v;
  }

  // Scheduled output per own controllable, existing units first. For zero
  // alpha the plain bounds are already the exact chance constraints.
  std::vector<const Generator*> sched_gen;
  std::unordered_map<std::string, int> sched_index;
  auto add_sched = [&](const Generator& g, bool candidate, double lb,
                       double ub) {
    sched_index[g.id] = static_cast<int>(inst.sched_ids.size());
    inst.sched_ids.push_back(g.id);
    inst.sched_is_candidate.push_back(candidate ? 1 : 0);
    inst.gbar0.push_back(p.num_vars());
    sched_gen.push_back(&g);
    for (int e = 0; e < days; ++e)
      for (int t = 0; t < hours; ++t)
        p.add_var("gbar_" + g.id + dt_tag(e, t), lb, ub);
  };
  for (const auto& g : grid.existing_gens) {
    if (g.kind != GenKind::Controllable || owner(g) != state) continue;
    bool det = g.alpha == 0.0 || !stochastic;
    add_sched(g, false, det ? g.g_min : 0.0, g.g_max);
  }
  for (const auto& ci : cands) {
    if (ci.g->kind != GenKind::Controllable) continue;
    add_sched(*ci.g, true, 0.0, ci.ub);
  }

  // Net purchases per owned node, plus the shifted copy that keeps the price
  // product linearization over a nonnegative range.
  const double pmax = pol->interface_limit;
  inst.own_nodes = own_nodes;
  for (int n : own_nodes) {
    inst.pdown0.push_back(p.num_vars());
    for (int e = 0; e < days; ++e)
      for (int t = 0; t < hours; ++t)
        p.add_var("pd_" + grid.nodes[n].id + dt_tag(e, t), -pmax, pmax);
  }
  for (int n : own_nodes) {
    inst.ptilde0.push_back(p.num_vars());
    for (int e = 0; e < days; ++e)
      for (int t = 0; t < hours; ++t)
        p.add_var("pt_" + grid.nodes[n].id + dt_tag(e, t), 0.0, 2.0 * pmax);
  }

  // Chance-constrained headroom cones on every recourse-participating unit.
  SocVarHooks hooks;
  hooks.dispatch_var = [&inst, &sched_index](const std::string& id, int t,
                                             int e) {
    auto it = sched_index.find(id);
    return it == sched_index.end() ? -1 : inst.gbar_var(it->second, t, e);
  };
  hooks.investment_var = [&inv_index](const std::string& id) {
    auto it = inv_index.find(id);
    return it == inv_index.end() ? -1 : it->second;
  };
  inst.soc = build_soc_constraints(p, grid, *pol, hooks);

  // Deterministic candidate controllables still need their output tied to
  // built capacity (the cones carry this for alpha > 0 units).
  for (std::size_t su = 0; su < inst.sched_ids.size(); ++su) {
    if (!inst.sched_is_candidate[su]) continue;
    if (sched_gen[su]->alpha != 0.0 && stochastic) continue;
    int cap_var = inv_index.at(inst.sched_ids[su]);
    const auto* cg = static_cast<const CandidateGenerator*>(sched_gen[su]);
    for (int e = 0; e < days; ++e)
      for (int t = 0; t < hours; ++t) {
        p.add_row("capfit_" + cg->id + dt_tag(e, t),
                  {{inst.gbar_var(static_cast<int>(su), t, e), 1.0},
                   {cap_var, -1.0}},
                  RowSense::LessEqual, 0.0);
        if (cg->min_output_factor > 0.0)
          p.add_row("minout_" + cg->id + dt_tag(e, t),
                    {{inst.gbar_var(static_cast<int>(su), t, e), 1.0},
                     {cap_var, -cg->min_output_factor}},
                    RowSense::GreaterEqual, 0.0);
      }
  }

  // Hourly ramping on scheduled output, finite sides only.
  for (std::size_t su = 0; su < inst.sched_ids.size(); ++su) {
    const Generator& g = *sched_gen[su];
    if (!std::isfinite(g.ramp_up) && !std::isfinite(g.ramp_down)) continue;
    for (int e = 0; e < days; ++e)
      for (int t = 1; t < hours; ++t) {
        int now = inst.gbar_var(static_cast<int>(su), t, e);
        int prev = inst.gbar_var(static_cast<int>(su), t - 1, e);
        if (std::isfinite(g.ramp_up))
          p.add_row("rampup_" + g.id + dt_tag(e, t),
                    {{now, 1.0}, {prev, -1.0}}, RowSense::LessEqual,
                    g.ramp_up);
        if (std::isfinite(g.ramp_down))
          p.add_row("rampdn_" + g.id + dt_tag(e, t),
                    {{now, 1.0}, {prev, -1.0}}, RowSense::GreaterEqual,
                    g.ramp_down);
      }
  }

  // Zonal adequacy at every owned node: scheduled units there plus net
  // purchases cover local demand. Renewables enter at forecast, candidates
  // scaled by built capacity.
  for (std::size_t on = 0; on < own_nodes.size(); ++on) {
    const int n = own_nodes[on];
    std::vector<int> ctrl_here;
    for (std::size_t su = 0; su < inst.sched_ids.size(); ++su)
      if (sched_gen[su]->node == grid.nodes[n].id)
        ctrl_here.push_back(static_cast<int>(su));
    std::vector<const Cand*> res_cands_here;
    for (const auto& ci : cands)
      if (ci.g->kind == GenKind::Renewable && ci.g->node == grid.nodes[n].id)
        res_cands_here.push_back(&ci);
    std::vector<const Generator*> res_here;
    for (const auto& g : grid.existing_gens)
      if (g.kind == GenKind::Renewable && g.node == grid.nodes[n].id)
        res_here.push_back(&g);

    for (int e = 0; e < days; ++e)
      for (int t = 0; t < hours; ++t) {
        std::vector<LinTerm> terms;
        for (int su : ctrl_here) terms.push_back({inst.gbar_var(su, t, e), 1.0});
        for (const Cand* ci : res_cands_here)
          terms.push_back({inv_index.at(ci->g->id),
                           grid.forecast_factor(*ci->g, t, e)});
        terms.push_back({inst.pdown_var(static_cast<int>(on), t, e), 1.0});
        double rhs = grid.demand_at(n, t, e);
        for (const Generator* g : res_here)
          rhs -= grid.forecast_factor(*g, t, e) * g->g_max;
        p.add_row("zonal_" + grid.nodes[n].id + dt_tag(e, t),
                  std::move(terms), RowSense::Equal, rhs);
        p.add_row("shift_" + grid.nodes[n].id + dt_tag(e, t),
                  {{inst.ptilde_var(static_cast<int>(on), t, e), 1.0},
                   {inst.pdown_var(static_cast<int>(on), t, e), -1.0}},
                  RowSense::Equal, pmax);
      }
  }

  // Renewable share per day: scheduled renewable energy covers the required
  // fraction of the state's demand.
  for (int e = 0; e < days; ++e) {
    std::vector<LinTerm> terms;
    double fixed = 0.0;
    for (const auto& g : grid.existing_gens) {
      if (g.kind != GenKind::Renewable || owner(g) != state) continue;
      for (int t = 0; t < hours; ++t)
        fixed += grid.forecast_factor(g, t, e) * g.g_max;
    }
    for (const auto& ci : cands) {
      if (ci.g->kind != GenKind::Renewable) continue;
      double energy = 0.0;
      for (int t = 0; t < hours; ++t)
        energy += grid.forecast_factor(*ci.g, t, e);
      if (energy > 0.0) terms.push_back({inv_index.at(ci.g->id), energy});
    }
    double required = 0.0;
    for (int n : own_nodes)
      for (int t = 0; t < hours; ++t) required += grid.demand_at(n, t, e);
    required *= pol->rps_fraction;
    p.add_row("rps_" + state + "_d" + std::to_string(e), std::move(terms),
              RowSense::GreaterEqual, required - fixed);
  }

  // Budgets, emitted only when the policy actually sets one.
  if (std::isfinite(pol->capital_budget)) {
    std::vector<LinTerm> terms;
    for (std::size_t j = 0; j < cands.size(); ++j)
      if (cands[j].daily > 0.0) terms.push_back({inst.inv[j], cands[j].daily});
    p.add_row("cap_budget_" + state, std::move(terms), RowSense::LessEqual,
              pol->capital_budget);
  }
  if (std::isfinite(pol->policy_budget)) {
    for (int e = 0; e < days; ++e) {
      std::vector<LinTerm> terms;
      double fixed = 0.0;
      for (const auto& g : grid.existing_gens) {
        if (g.kind != GenKind::Renewable || owner(g) != state) continue;
        for (int t = 0; t < hours; ++t)
          fixed += pol->energy_tariff * grid.forecast_factor(g, t, e) * g.g_max;
      }
      for (std::size_t j = 0; j < cands.size(); ++j) {
        if (cands[j].g->kind != GenKind::Renewable) continue;
        double coef = pct_daily;
        for (int t = 0; t < hours; ++t)
          coef += pol->energy_tariff *
                  grid.forecast_factor(*cands[j].g, t, e);
        if (coef > 0.0) terms.push_back({inst.inv[j], coef});
      }
      p.add_row("pol_budget_" + state + "_d" + std::to_string(e),
                std::move(terms), RowSense::LessEqual,
                pol->policy_budget - fixed);
    }
  }

  // One market optimality system per representative day. Own units offer
  // their schedule (renewables their forecast), rivals offer forecast less
  // reserve unless an explicit schedule overrides it.
  for (int e = 0; e < days; ++e) {
    std::vector<LinExpr> offers;
    offers.reserve(static_cast<std::size_t>(
        (grid.existing_gens.size() + grid.candidate_gens.size()) * hours));
    auto push_offers = [&](const Generator& g, bool candidate) {
      const bool own = owner(g) == state;
      const auto rg = rival_gbar.find(g.id);
      for (int t = 0; t < hours; ++t) {
        if (own) {
          if (g.kind == GenKind::Controllable)
            offers.emplace_back(inst.gbar_var(sched_index.at(g.id), t, e),
                                1.0);
          else if (candidate)
            offers.emplace_back(inv_index.at(g.id),
                                grid.forecast_factor(g, t, e));
          else
            offers.emplace_back(
                LinExpr(grid.forecast_factor(g, t, e) * g.g_max));
        } else if (rg != rival_gbar.end()) {
          offers.emplace_back(LinExpr(rg->second[e * hours + t]));
        } else if (candidate) {
          offers.emplace_back(LinExpr(0.0));
        } else {
          offers.emplace_back(LinExpr(std::max(
              grid.forecast_factor(g, t, e) * g.g_max - g.reserve, 0.0)));
        }
      }
    };
    for (const auto& g : grid.existing_gens) push_offers(g, false);
    for (const auto& g : grid.candidate_gens) push_offers(g, true);
    inst.kkt.push_back(append_kkt_system(p, grid, e, offers));
  }

  // Objective, accumulated per variable so each appears once.
  std::map<int, double> obj;
  double constant = 0.0;

  // Retail revenue from served demand.
  for (int e = 0; e < days; ++e) {
    const double w = grid.rep_days[e].weight;
    for (int n : own_nodes)
      for (int t = 0; t < hours; ++t)
        constant += w * pol->retail_price * grid.demand_at(n, t, e);
  }

  // Expected output corrections: recourse shifts a controllable's mean by
  // -alpha times the total mean forecast error of the state's renewables.
  double mean_fixed = 0.0;  // MW, existing renewables
  for (const auto& g : grid.existing_gens)
    if (g.kind == GenKind::Renewable && owner(g) == state)
      mean_fixed += g.upsilon * g.g_max;

  // Operating cost of existing units at expected output.
  for (const auto& g : grid.existing_gens) {
    if (owner(g) != state) continue;
    if (g.kind == GenKind::Controllable) {
      if (g.cost == 0.0) continue;
      int su = sched_index.at(g.id);
      for (int e = 0; e < days; ++e) {
        const double w = grid.rep_days[e].weight;
        for (int t = 0; t < hours; ++t)
          obj[inst.gbar_var(su, t, e)] -= w * g.cost;
        constant += w * hours * g.cost * g.alpha * mean_fixed;
        for (std::size_t j = 0; j < cands.size(); ++j)
          if (cands[j].g->kind == GenKind::Renewable &&
              cands[j].g->upsilon != 0.0)
            obj[inst.inv[j]] +=
                w * hours * g.cost * g.alpha * cands[j].g->upsilon;
      }
    } else {
      // renewable: operating cost and production tariff on expected output
      const double out_rate = g.cost + pol->energy_tariff;
      if (out_rate == 0.0) continue;
      for (int e = 0; e < days; ++e) {
        const double w = grid.rep_days[e].weight;
        for (int t = 0; t < hours; ++t)
          constant -= w * out_rate * g.g_max *
                      (grid.forecast_factor(g, t, e) + g.upsilon);
      }
    }
  }

  // Candidate renewables: production tariff on expected output, capacity
  // tariff, and the investment annuity. Candidate controllables carry only
  // the annuity; their dispatch is an offer, not an owned cost here.
  for (std::size_t j = 0; j < cands.size(); ++j) {
    const Cand& ci = cands[j];
    if (ci.g->kind == GenKind::Renewable) {
      if (pol->energy_tariff != 0.0)
        for (int e = 0; e < days; ++e) {
          const double w = grid.rep_days[e].weight;
          for (int t = 0; t < hours; ++t)
            obj[inst.inv[j]] -= w * pol->energy_tariff *
                                (grid.forecast_factor(*ci.g, t, e) +
                                 ci.g->upsilon);
        }
      obj[inst.inv[j]] -= pct_daily;
    }
    obj[inst.inv[j]] -= ci.daily;
  }

  // Price revenue on net purchases. The product lambda * pdown is written as
  // the linearized lambda * ptilde minus the linear pmax * lambda, so a zero
  // bit count stays exact (price pinned at the floor).
  if (opt.linearize_prices) {
    inst.prices.reserve(own_nodes.size() * static_cast<std::size_t>(days) *
                        hours);
    for (std::size_t on = 0; on < own_nodes.size(); ++on) {
      const int n = own_nodes[on];
      for (int e = 0; e < days; ++e) {
        const double w = grid.rep_days[e].weight;
        for (int t = 0; t < hours; ++t) {
          const std::string tag = grid.nodes[n].id + dt_tag(e, t);
          PriceExpansion pe =
              attach_price_expansion(p, tag, opt.price_min, step,
                                     opt.price_bits, inst.kkt[e].lambda_var(n, t));
          LinExpr prod = linearize_bilinear_price(
              p, inst.ptilde_var(static_cast<int>(on), t, e), pe);
          for (const auto& term : prod.terms) obj[term.var] -= w * term.coef;
          constant -= w * prod.constant;
          obj[inst.kkt[e].lambda_var(n, t)] += w * pmax;
          inst.prices.push_back(std::move(pe));
        }
      }
    }
  } else {
    for (std::size_t on = 0; on < own_nodes.size(); ++on)
      for (int e = 0; e < days; ++e)
        for (int t = 0; t < hours; ++t)
          inst.residual_bilinear.push_back(
              "lambda_" + grid.nodes[own_nodes[on]].id + dt_tag(e, t) +
              " * pd_" + grid.nodes[own_nodes[on]].id + dt_tag(e, t));
  }

  for (const auto& [var, coef] : obj)
    if (coef != 0.0) p.add_obj(var, coef);
  p.objective_constant = constant;
  return inst;
}

std::vector<std::string> bilinear_product_terms(const MpecInstance& inst) {
  return inst.residual_bilinear;
}

}  // namespace ccepec
