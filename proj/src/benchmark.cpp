#include "ccepec/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace ccepec {

namespace {

std::string dt_tag(int e, int t) {
  return "_d" + std::to_string(e) + "_t" + std::to_string(t);
}

// connected components over node indices; the root of each is its smallest
// member, which doubles as the reference bus
std::vector<int> island_roots(int nodes, const std::vector<int>& from,
                              const std::vector<int>& to) {
  std::vector<int> parent(nodes);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  for (std::size_t l = 0; l < from.size(); ++l) {
    int ra = find(from[l]);
    int rb = find(to[l]);
    if (ra == rb) continue;
    if (rb < ra) std::swap(ra, rb);
    parent[rb] = ra;
  }
  for (int n = 0; n < nodes; ++n) parent[n] = find(n);
  return parent;
}

}  // namespace

BenchmarkInstance build_benchmark(const GridModel& grid,
                                  const PolicySet& policies,
                                  const std::vector<double>& reserve,
                                  const BenchmarkOptions& opt) {
  const int hours = grid.hours;
  const int days = static_cast<int>(grid.rep_days.size());
  const int nodes = static_cast<int>(grid.nodes.size());
  const int lines = static_cast<int>(grid.lines.size());
  if (hours < 1 || days < 1)
    throw std::invalid_argument("build_benchmark: grid has no hours or days");
  if (static_cast<int>(reserve.size()) != days * hours) {
    std::ostringstream os;
    os << "build_benchmark: reserve requirement has " << reserve.size()
       << " entries, expected " << days * hours;
    throw std::invalid_argument(os.str());
  }
  for (double r : reserve)
    if (!(r >= 0.0))
      throw std::invalid_argument(
          "build_benchmark: reserve requirement entries must be nonnegative");

  std::unordered_map<std::string, const ActorPolicy*> pol_of;
  for (const auto& s : grid.states) {
    const ActorPolicy* pol = policies.find(s);
    if (!pol)
      throw std::runtime_error("build_benchmark: no policy entry for state '" +
                               s + "'");
    pol_of[s] = pol;
  }
  auto state_of = [&grid](const Generator& g) {
    return grid.nodes[grid.node_index(g.node)].state;
  };

  const int years = static_cast<int>(policies.horizon_years + 0.5);
  const double rate = policies.discount_rate;
  auto pct_daily = [&](const ActorPolicy& a) {
    return a.capacity_tariff > 0.0
               ? prorate_capital_cost(a.capacity_tariff * 1000.0, years, rate)
               : 0.0;
  };

  struct Cand {
    const CandidateGenerator* g = nullptr;
    double daily = 0.0;
    double ub = 0.0;
  };
  std::vector<Cand> cands;
  for (const auto& c : grid.candidate_gens) {
    Cand ci;
    ci.g = &c;
    ci.daily = prorate_capital_cost(c.capital_cost, years, rate);
    ci.ub = c.g_max;
    const ActorPolicy& a = *pol_of.at(state_of(c));
    if (std::isfinite(a.capital_budget) && ci.daily > 0.0)
      ci.ub = std::min(ci.ub, a.capital_budget / ci.daily);
    cands.push_back(ci);
  }

  // aggregate headroom check: reserve beyond what every controllable could
  // jointly free up is infeasible no matter the dispatch
  double headroom = 0.0;
  for (const auto& g : grid.existing_gens)
    if (g.kind == GenKind::Controllable) headroom += g.g_max - g.g_min;
  for (const auto& ci : cands)
    if (ci.g->kind == GenKind::Controllable)
      headroom += ci.ub * (1.0 - ci.g->min_output_factor);
  for (int e = 0; e < days; ++e)
    for (int t = 0; t < hours; ++t)
      if (reserve[e * hours + t] > headroom + 1e-9) {
        std::ostringstream os;
        os << "build_benchmark: reserve requirement "
           << reserve[e * hours + t] << " MW at day " << e << " hour " << t
           << " exceeds the fleet's total headroom of " << headroom << " MW";
        throw std::runtime_error(os.str());
      }

  BenchmarkInstance inst;
  inst.hours = hours;
  inst.days = days;
  inst.reserve_req = reserve;
  ConicProgram& p = inst.program;
  p.name = "benchmark";

  // investment
  std::unordered_map<std::string, int> inv_index;
  for (const auto& ci : cands) {
    int v = p.add_var("gmax_" + ci.g->id, 0.0, ci.ub);
    inst.cand_ids.push_back(ci.g->id);
    inst.inv.push_back(v);
    inv_index[ci.g->id] = v;
  }

  // dispatch, existing units first to match the market's unit order
  std::unordered_map<std::string, int> unit_index;
  auto add_dispatch = [&](const Generator& g, const Cand* ci) {
    unit_index[g.id] = static_cast<int>(inst.unit_ids.size());
    inst.unit_ids.push_back(g.id);
    inst.g0.push_back(p.num_vars());
    for (int e = 0; e < days; ++e)
      for (int t = 0; t < hours; ++t) {
        double lb = 0.0, ub = kInf;
        if (g.kind == GenKind::Renewable) {
          lb = 0.0;
          ub = grid.forecast_factor(g, t, e) * (ci ? ci->ub : g.g_max);
        } else if (!ci) {
          lb = g.g_min;
          ub = g.g_max;
        } else {
          ub = ci->ub;
        }
        p.add_var("g_" + g.id + dt_tag(e, t), lb, ub);
      }
  };
  for (const auto& g : grid.existing_gens) add_dispatch(g, nullptr);
  for (const auto& ci : cands) add_dispatch(*ci.g, &ci);

  // reserve headroom, controllables only
  for (std::size_t u = 0; u < inst.unit_ids.size(); ++u) {
    const bool candidate = u >= grid.existing_gens.size();
    const Generator& g =
        candidate ? *cands[u - grid.existing_gens.size()].g
                  : grid.existing_gens[u];
    if (g.kind != GenKind::Controllable) {
      inst.r0.push_back(-1);
      continue;
    }
    inst.r0.push_back(p.num_vars());
    double rcap = candidate ? cands[u - grid.existing_gens.size()].ub
                            : g.g_max - g.g_min;
    for (int e = 0; e < days; ++e)
      for (int t = 0; t < hours; ++t)
        p.add_var("r_" + g.id + dt_tag(e, t), 0.0, rcap);
  }

  // network
  for (int l = 0; l < lines; ++l) {
    inst.f0.push_back(p.num_vars());
    for (int e = 0; e < days; ++e)
      for (int t = 0; t < hours; ++t)
        p.add_var("f_" + grid.lines[l].id + dt_tag(e, t),
                  -grid.lines[l].capacity, grid.lines[l].capacity);
  }
  std::vector<int> lfrom, lto;
  for (const auto& l : grid.lines) {
    lfrom.push_back(grid.node_index(l.from));
    lto.push_back(grid.node_index(l.to));
  }
  std::vector<int> root = island_roots(nodes, lfrom, lto);
  for (int n = 0; n < nodes; ++n) {
    inst.th0.push_back(p.num_vars());
    const bool ref = root[n] == n;
    for (int e = 0; e < days; ++e)
      for (int t = 0; t < hours; ++t)
        p.add_var("th_" + grid.nodes[n].id + dt_tag(e, t), ref ? 0.0 : -kInf,
                  ref ? 0.0 : kInf);
  }

  // capacity headroom and candidate output rows
  for (std::size_t u = 0; u < inst.unit_ids.size(); ++u) {
    const bool candidate = u >= grid.existing_gens.size();
    if (!candidate) {
      const Generator& g = grid.existing_gens[u];
      if (g.kind != GenKind::Controllable) continue;
      for (int e = 0; e < days; ++e)
        for (int t = 0; t < hours; ++t)
          p.add_row("caphead_" + g.id + dt_tag(e, t),
                    {{inst.g_var(static_cast<int>(u), t, e), 1.0},
                     {inst.r_var(static_cast<int>(u), t, e), 1.0}},
                    RowSense::LessEqual, g.g_max);
      continue;
    }
    const Cand& ci = cands[u - grid.existing_gens.size()];
    int cap = inv_index.at(ci.g->id);
    for (int e = 0; e < days; ++e)
      for (int t = 0; t < hours; ++t) {
        if (ci.g->kind == GenKind::Controllable) {
          p.add_row("caphead_" + ci.g->id + dt_tag(e, t),
                    {{inst.g_var(static_cast<int>(u), t, e), 1.0},
                     {inst.r_var(static_cast<int>(u), t, e), 1.0},
                     {cap, -1.0}},
                    RowSense::LessEqual, 0.0);
          if (ci.g->min_output_factor > 0.0)
            p.add_row("minout_" + ci.g->id + dt_tag(e, t),
                      {{inst.g_var(static_cast<int>(u), t, e), 1.0},
                       {cap, -ci.g->min_output_factor}},
                      RowSense::GreaterEqual, 0.0);
        } else {
          p.add_row("resfit_" + ci.g->id + dt_tag(e, t),
                    {{inst.g_var(static_cast<int>(u), t, e), 1.0},
                     {cap, -grid.forecast_factor(*ci.g, t, e)}},
                    RowSense::LessEqual, 0.0);
        }
      }
  }

  // DC power flow and nodal balance
  for (int l = 0; l < lines; ++l) {
    const double x = grid.lines[l].reactance;
    for (int e = 0; e < days; ++e)
      for (int t = 0; t < hours; ++t)
        p.add_row("flow_" + grid.lines[l].id + dt_tag(e, t),
                  {{inst.f_var(l, t, e), 1.0},
                   {inst.theta_var(lfrom[l], t, e), -1.0 / x},
                   {inst.theta_var(lto[l], t, e), 1.0 / x}},
                  RowSense::Equal, 0.0);
  }
  for (int n = 0; n < nodes; ++n)
    for (int e = 0; e < days; ++e)
      for (int t = 0; t < hours; ++t) {
        std::vector<LinTerm> terms;
        for (std::size_t u = 0; u < inst.unit_ids.size(); ++u) {
          const Generator& g =
              u < grid.existing_gens.size()
                  ? grid.existing_gens[u]
                  : static_cast<const Generator&>(
                        *cands[u - grid.existing_gens.size()].g);
          if (grid.node_index(g.node) == n)
            terms.push_back({inst.g_var(static_cast<int>(u), t, e), 1.0});
        }
        for (int l = 0; l < lines; ++l) {
          if (lto[l] == n) terms.push_back({inst.f_var(l, t, e), 1.0});
          if (lfrom[l] == n) terms.push_back({inst.f_var(l, t, e), -1.0});
        }
        p.add_row("bal_" + grid.nodes[n].id + dt_tag(e, t), std::move(terms),
                  RowSense::Equal, grid.demand_at(n, t, e));
      }

  // system reserve requirement
  for (int e = 0; e < days; ++e)
    for (int t = 0; t < hours; ++t) {
      std::vector<LinTerm> terms;
      for (std::size_t u = 0; u < inst.unit_ids.size(); ++u)
        if (inst.r0[u] >= 0)
          terms.push_back({inst.r_var(static_cast<int>(u), t, e), 1.0});
      p.add_row("reserve" + dt_tag(e, t), std::move(terms),
                RowSense::GreaterEqual, reserve[e * hours + t]);
    }

  // per-state renewable share and budgets
  for (const auto& s : grid.states) {
    const ActorPolicy& a = *pol_of.at(s);
    const std::vector<int> state_nodes = grid.nodes_of_state(s);
    for (int e = 0; e < days; ++e) {
      std::vector<LinTerm> terms;
      for (std::size_t u = 0; u < inst.unit_ids.size(); ++u) {
        const Generator& g =
            u < grid.existing_gens.size()
                ? grid.existing_gens[u]
                : static_cast<const Generator&>(
                      *cands[u - grid.existing_gens.size()].g);
        if (g.kind == GenKind::Renewable && state_of(g) == s)
          for (int t = 0; t < hours; ++t)
            terms.push_back({inst.g_var(static_cast<int>(u), t, e), 1.0});
      }
      double required = 0.0;
      for (int n : state_nodes)
        for (int t = 0; t < hours; ++t) required += grid.demand_at(n, t, e);
      p.add_row("rps_" + s + "_d" + std::to_string(e), std::move(terms),
                RowSense::GreaterEqual, a.rps_fraction * required);
    }
    if (std::isfinite(a.capital_budget)) {
      std::vector<LinTerm> terms;
      for (std::size_t j = 0; j < cands.size(); ++j)
        if (state_of(*cands[j].g) == s && cands[j].daily > 0.0)
          terms.push_back({inst.inv[j], cands[j].daily});
      p.add_row("cap_budget_" + s, std::move(terms), RowSense::LessEqual,
                a.capital_budget);
    }
    if (std::isfinite(a.policy_budget)) {
      for (int e = 0; e < days; ++e) {
        std::vector<LinTerm> terms;
        if (a.energy_tariff != 0.0)
          for (std::size_t u = 0; u < inst.unit_ids.size(); ++u) {
            const Generator& g =
                u < grid.existing_gens.size()
                    ? grid.existing_gens[u]
                    : static_cast<const Generator&>(
                          *cands[u - grid.existing_gens.size()].g);
            if (g.kind == GenKind::Renewable && state_of(g) == s)
              for (int t = 0; t < hours; ++t)
                terms.push_back(
                    {inst.g_var(static_cast<int>(u), t, e), a.energy_tariff});
          }
        const double pct = pct_daily(a);
        if (pct > 0.0)
          for (std::size_t j = 0; j < cands.size(); ++j)
            if (cands[j].g->kind == GenKind::Renewable &&
                state_of(*cands[j].g) == s)
              terms.push_back({inst.inv[j], pct});
        p.add_row("pol_budget_" + s + "_d" + std::to_string(e),
                  std::move(terms), RowSense::LessEqual, a.policy_budget);
      }
    }
  }

  // optional chance-constrained headroom on top of the reserve bounds
  if (opt.chance_headroom) {
    SocVarHooks hooks;
    hooks.dispatch_var = [&inst, &unit_index](const std::string& id, int t,
                                              int e) {
      auto it = unit_index.find(id);
      return it == unit_index.end() ? -1 : inst.g_var(it->second, t, e);
    };
    hooks.investment_var = [&inv_index](const std::string& id) {
      auto it = inv_index.find(id);
      return it == inv_index.end() ? -1 : it->second;
    };
    for (const auto& s : grid.states) {
      SocBuildInfo info = build_soc_constraints(p, grid, *pol_of.at(s), hooks);
      inst.soc.blocks.insert(inst.soc.blocks.end(), info.blocks.begin(),
                             info.blocks.end());
      inst.soc.deterministic.insert(inst.soc.deterministic.end(),
                                    info.deterministic.begin(),
                                    info.deterministic.end());
    }
  }

  // welfare objective: retail value of served demand less fuel, production
  // tariffs, capacity tariffs, and investment annuities
  double constant = 0.0;
  for (int n = 0; n < nodes; ++n) {
    const ActorPolicy& a = *pol_of.at(grid.nodes[n].state);
    for (int e = 0; e < days; ++e) {
      const double w = grid.rep_days[e].weight;
      for (int t = 0; t < hours; ++t)
        constant += w * a.retail_price * grid.demand_at(n, t, e);
    }
  }
  for (std::size_t u = 0; u < inst.unit_ids.size(); ++u) {
    const Generator& g =
        u < grid.existing_gens.size()
            ? grid.existing_gens[u]
            : static_cast<const Generator&>(
                  *cands[u - grid.existing_gens.size()].g);
    double rate_out = g.cost;
    if (g.kind == GenKind::Renewable)
      rate_out += pol_of.at(state_of(g))->energy_tariff;
    if (rate_out == 0.0) continue;
    for (int e = 0; e < days; ++e) {
      const double w = grid.rep_days[e].weight;
      for (int t = 0; t < hours; ++t)
        p.add_obj(inst.g_var(static_cast<int>(u), t, e), -w * rate_out);
    }
  }
  for (std::size_t j = 0; j < cands.size(); ++j) {
    double coef = cands[j].daily;
    if (cands[j].g->kind == GenKind::Renewable)
      coef += pct_daily(*pol_of.at(state_of(*cands[j].g)));
    if (coef > 0.0) p.add_obj(inst.inv[j], -coef);
  }
  p.objective_constant = constant;
  return inst;
}

BenchmarkInstance build_benchmark(const GridModel& grid,
                                  const PolicySet& policies, double reserve,
                                  const BenchmarkOptions& opt) {
  const std::size_t n =
      grid.rep_days.size() * static_cast<std::size_t>(grid.hours);
  return build_benchmark(grid, policies,
                         std::vector<double>(n, reserve), opt);
}

double default_reserve_requirement(const GridModel& grid, double eta) {
  if (!(eta > 0.0 && eta < 0.5)) {
    std::ostringstream os;
    os << "default_reserve_requirement: tolerance must lie in (0, 0.5), got "
       << eta;
    throw std::invalid_argument(os.str());
  }
  std::vector<std::pair<double, double>> entries;
  for (const auto& g : grid.existing_gens)
    if (g.kind == GenKind::Renewable) entries.push_back({g.g_max, g.sigma});
  return normal_quantile(1.0 - eta) * forecast_stdev(1.0, entries);
}

ExpansionSummary summarize_expansion(const GridModel& grid,
                                     const std::vector<std::string>& cand_ids,
                                     const std::vector<double>& built_mw,
                                     const std::string& scenario) {
  if (cand_ids.size() != built_mw.size()) {
    std::ostringstream os;
    os << "summarize_expansion: " << cand_ids.size() << " candidate ids but "
       << built_mw.size() << " capacity values";
    throw std::invalid_argument(os.str());
  }
  std::unordered_map<std::string, const CandidateGenerator*> by_id;
  for (const auto& c : grid.candidate_gens) by_id[c.id] = &c;

  ExpansionSummary out;
  out.scenario = scenario;
  for (const auto& s : grid.states) {
    out.controllable_mw[s] = 0.0;
    out.renewable_mw[s] = 0.0;
  }
  for (std::size_t j = 0; j < cand_ids.size(); ++j) {
    auto it = by_id.find(cand_ids[j]);
    if (it == by_id.end())
      throw std::runtime_error("summarize_expansion: unknown candidate '" +
                               cand_ids[j] + "'");
    const std::string s =
        grid.nodes[grid.node_index(it->second->node)].state;
    if (it->second->kind == GenKind::Controllable)
      out.controllable_mw[s] += built_mw[j];
    else
      out.renewable_mw[s] += built_mw[j];
  }
  return out;
}

std::vector<ExpansionDelta> compare_expansion(const ExpansionSummary& run,
                                              const ExpansionSummary& bench) {
  if (run.scenario != bench.scenario)
    throw std::runtime_error("compare_expansion: scenario '" + run.scenario +
                             "' does not match benchmark scenario '" +
                             bench.scenario + "'");
  auto check_states = [](const std::map<std::string, double>& a,
                         const std::map<std::string, double>& b) {
    for (const auto& [s, v] : a) {
      (void)v;
      if (!b.count(s))
        throw std::runtime_error("compare_expansion: state '" + s +
                                 "' is missing from one summary");
    }
  };
  check_states(run.controllable_mw, bench.controllable_mw);
  check_states(bench.controllable_mw, run.controllable_mw);
  check_states(run.renewable_mw, bench.renewable_mw);
  check_states(bench.renewable_mw, run.renewable_mw);

  std::vector<ExpansionDelta> out;
  for (const auto& [s, v] : run.controllable_mw) {
    ExpansionDelta d;
    d.state = s;
    d.controllable_mw = v - bench.controllable_mw.at(s);
    d.renewable_mw = run.renewable_mw.at(s) - bench.renewable_mw.at(s);
    out.push_back(d);
  }
  return out;
}

}  // namespace ccepec
