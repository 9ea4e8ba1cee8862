#include "ccepec/market.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace ccepec {

namespace {

// Everything the KKT emitter and the point verifier need about one day's
// market, regardless of whether it came from a GridModel or a MarketLp.
struct Tables {
  int day = 0, hours = 0, units = 0, lines = 0, nodes = 0;
  std::vector<std::string> unit_id, line_id, node_id;
  std::vector<int> unit_node, line_from, line_to;
  std::vector<double> unit_cost, line_x, line_cap;
  std::vector<double> demand;  // [n * hours + t]
  std::vector<char> is_ref;    // island reference flag per node
};

// Union-find that always keeps the smallest node index as the root, so the
// "lowest-indexed node per island" rule falls out of the representative.
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

void check_day(const GridModel& grid, int day) {
  if (day >= 0 && day < static_cast<int>(grid.rep_days.size())) return;
  std::ostringstream os;
  os << "representative day " << day << " out of range, grid has "
     << grid.rep_days.size();
  throw std::invalid_argument(os.str());
}

Tables tables_from_grid(const GridModel& grid, int day) {
  check_day(grid, day);
  Tables tb;
  tb.day = day;
  tb.hours = grid.hours;
  tb.nodes = static_cast<int>(grid.nodes.size());
  tb.lines = static_cast<int>(grid.lines.size());
  tb.units = static_cast<int>(grid.existing_gens.size() +
                              grid.candidate_gens.size());
  for (const auto& n : grid.nodes) tb.node_id.push_back(n.id);
  auto add_unit = [&](const Generator& g) {
    tb.unit_id.push_back(g.id);
    tb.unit_node.push_back(grid.node_index(g.node));
    tb.unit_cost.push_back(g.cost);
  };
  for (const auto& g : grid.existing_gens) add_unit(g);
  for (const auto& g : grid.candidate_gens) add_unit(g);
  for (const auto& l : grid.lines) {
    tb.line_id.push_back(l.id);
    tb.line_from.push_back(grid.node_index(l.from));
    tb.line_to.push_back(grid.node_index(l.to));
    tb.line_x.push_back(l.reactance);
    tb.line_cap.push_back(l.capacity);
  }
  tb.demand.resize(static_cast<std::size_t>(tb.nodes) * tb.hours);
  for (int n = 0; n < tb.nodes; ++n)
    for (int t = 0; t < tb.hours; ++t)
      tb.demand[n * tb.hours + t] = grid.demand_at(n, t, day);
  auto roots = island_roots(tb.nodes, tb.line_from, tb.line_to);
  tb.is_ref.assign(tb.nodes, 0);
  for (int n = 0; n < tb.nodes; ++n)
    if (roots[n] == n) tb.is_ref[n] = 1;
  return tb;
}

Tables tables_from_lp(const MarketLp& m) {
  Tables tb;
  tb.day = m.day;
  tb.hours = m.hours;
  tb.units = m.units;
  tb.lines = m.lines;
  tb.nodes = m.nodes;
  tb.unit_id = m.unit_ids;
  tb.line_id = m.line_ids;
  tb.node_id = m.node_ids;
  tb.unit_node = m.unit_node;
  tb.unit_cost = m.unit_cost;
  tb.line_from = m.line_from;
  tb.line_to = m.line_to;
  tb.line_x = m.line_x;
  tb.line_cap = m.line_cap;
  tb.demand.resize(static_cast<std::size_t>(tb.nodes) * tb.hours);
  for (int n = 0; n < tb.nodes; ++n)
    for (int t = 0; t < tb.hours; ++t)
      tb.demand[n * tb.hours + t] = m.lp.rows[m.balance_row(n, t)].rhs;
  auto roots = island_roots(tb.nodes, tb.line_from, tb.line_to);
  tb.is_ref.assign(tb.nodes, 0);
  for (int n = 0; n < tb.nodes; ++n)
    if (roots[n] == n) tb.is_ref[n] = 1;
  return tb;
}

// Appends the full KKT system described by `tb` (see the header for the row
// catalogue). Offers may reference variables already on `p`.
KktLayout emit_kkt(ConicProgram& p, const Tables& tb,
                   const std::vector<LinExpr>& offers) {
  const int H = tb.hours;
  if (offers.size() != static_cast<std::size_t>(tb.units) * H) {
    std::ostringstream os;
    os << "offer vector has " << offers.size() << " entries, expected "
       << static_cast<std::size_t>(tb.units) * H;
    throw std::invalid_argument(os.str());
  }
  for (std::size_t i = 0; i < offers.size(); ++i) {
    if (offers[i].terms.empty() && offers[i].constant < -1e-9) {
      std::ostringstream os;
      os << "offer for unit '" << tb.unit_id[i / H] << "' at t=" << i % H
         << " is negative: " << offers[i].constant;
      throw std::invalid_argument(os.str());
    }
  }

  KktLayout ly;
  ly.day = tb.day;
  ly.hours = H;
  ly.units = tb.units;
  ly.lines = tb.lines;
  ly.nodes = tb.nodes;

  const std::string dtag = "_d" + std::to_string(tb.day) + "_t";
  auto tag = [&](const char* base, const std::string& id, int t) {
    return base + ("_" + id) + dtag + std::to_string(t);
  };

  ly.g0 = p.num_vars();
  for (int u = 0; u < tb.units; ++u)
    for (int t = 0; t < H; ++t) p.add_var(tag("g", tb.unit_id[u], t), 0.0, kInf);
  ly.f0 = p.num_vars();
  for (int l = 0; l < tb.lines; ++l)
    for (int t = 0; t < H; ++t)
      p.add_var(tag("f", tb.line_id[l], t), -tb.line_cap[l], tb.line_cap[l]);
  ly.th0 = p.num_vars();
  for (int n = 0; n < tb.nodes; ++n)
    for (int t = 0; t < H; ++t) {
      double b = tb.is_ref[n] ? 0.0 : kInf;
      p.add_var(tag("th", tb.node_id[n], t), -b, b);
    }
  ly.lam0 = p.num_vars();
  for (int n = 0; n < tb.nodes; ++n)
    for (int t = 0; t < H; ++t)
      p.add_var(tag("lam", tb.node_id[n], t), -kInf, kInf);
  ly.xi0 = p.num_vars();
  for (int l = 0; l < tb.lines; ++l)
    for (int t = 0; t < H; ++t)
      p.add_var(tag("xi", tb.line_id[l], t), -kInf, kInf);
  ly.glb0 = p.num_vars();
  for (int u = 0; u < tb.units; ++u)
    for (int t = 0; t < H; ++t)
      p.add_var(tag("glb", tb.unit_id[u], t), 0.0, kInf);
  ly.gub0 = p.num_vars();
  for (int u = 0; u < tb.units; ++u)
    for (int t = 0; t < H; ++t)
      p.add_var(tag("gub", tb.unit_id[u], t), 0.0, kInf);
  ly.dlb0 = p.num_vars();
  for (int l = 0; l < tb.lines; ++l)
    for (int t = 0; t < H; ++t)
      p.add_var(tag("dlb", tb.line_id[l], t), 0.0, kInf);
  ly.dub0 = p.num_vars();
  for (int l = 0; l < tb.lines; ++l)
    for (int t = 0; t < H; ++t)
      p.add_var(tag("dub", tb.line_id[l], t), 0.0, kInf);
  ly.sgu0 = p.num_vars();
  for (int u = 0; u < tb.units; ++u)
    for (int t = 0; t < H; ++t)
      p.add_var(tag("sgu", tb.unit_id[u], t), 0.0, kInf);
  ly.sfl0 = p.num_vars();
  for (int l = 0; l < tb.lines; ++l)
    for (int t = 0; t < H; ++t)
      p.add_var(tag("sfl", tb.line_id[l], t), 0.0, 2.0 * tb.line_cap[l]);
  ly.sfu0 = p.num_vars();
  for (int l = 0; l < tb.lines; ++l)
    for (int t = 0; t < H; ++t)
      p.add_var(tag("sfu", tb.line_id[l], t), 0.0, 2.0 * tb.line_cap[l]);

  std::vector<std::vector<int>> units_at(tb.nodes), into(tb.nodes),
      outof(tb.nodes);
  for (int u = 0; u < tb.units; ++u) units_at[tb.unit_node[u]].push_back(u);
  for (int l = 0; l < tb.lines; ++l) {
    outof[tb.line_from[l]].push_back(l);
    into[tb.line_to[l]].push_back(l);
  }

  // primal equalities: flow definition, then nodal balance
  ly.r_flow0 = p.num_rows();
  for (int l = 0; l < tb.lines; ++l)
    for (int t = 0; t < H; ++t) {
      double inv_x = 1.0 / tb.line_x[l];
      p.add_row(tag("flow", tb.line_id[l], t),
                {{ly.f_var(l, t), 1.0},
                 {ly.theta_var(tb.line_from[l], t), -inv_x},
                 {ly.theta_var(tb.line_to[l], t), inv_x}},
                RowSense::Equal, 0.0);
    }
  ly.r_bal0 = p.num_rows();
  for (int n = 0; n < tb.nodes; ++n)
    for (int t = 0; t < H; ++t) {
      std::vector<LinTerm> terms;
      for (int u : units_at[n]) terms.push_back({ly.g_var(u, t), 1.0});
      for (int l : into[n]) terms.push_back({ly.f_var(l, t), 1.0});
      for (int l : outof[n]) terms.push_back({ly.f_var(l, t), -1.0});
      p.add_row(tag("bal", tb.node_id[n], t), std::move(terms), RowSense::Equal,
                tb.demand[n * H + t]);
    }

  // slack definitions turning the three non-variable bound expressions into
  // nonnegative variables the SOS1 sets can reference
  ly.r_sgu0 = p.num_rows();
  for (int u = 0; u < tb.units; ++u)
    for (int t = 0; t < H; ++t) {
      const LinExpr& offer = offers[static_cast<std::size_t>(u) * H + t];
      std::vector<LinTerm> terms{{ly.g_var(u, t), 1.0},
                                 {ly.slack_gub(u, t), 1.0}};
      for (const auto& term : offer.terms)
        terms.push_back({term.var, -term.coef});
      p.add_row(tag("gub_def", tb.unit_id[u], t), std::move(terms),
                RowSense::Equal, offer.constant);
    }
  ly.r_sfl0 = p.num_rows();
  for (int l = 0; l < tb.lines; ++l)
    for (int t = 0; t < H; ++t)
      p.add_row(tag("flb_def", tb.line_id[l], t),
                {{ly.f_var(l, t), 1.0}, {ly.slack_flb(l, t), -1.0}},
                RowSense::Equal, -tb.line_cap[l]);
  ly.r_sfu0 = p.num_rows();
  for (int l = 0; l < tb.lines; ++l)
    for (int t = 0; t < H; ++t)
      p.add_row(tag("fub_def", tb.line_id[l], t),
                {{ly.f_var(l, t), 1.0}, {ly.slack_fub(l, t), 1.0}},
                RowSense::Equal, tb.line_cap[l]);

  // stationarity
  ly.r_statg0 = p.num_rows();
  for (int u = 0; u < tb.units; ++u)
    for (int t = 0; t < H; ++t)
      p.add_row(tag("stat_g", tb.unit_id[u], t),
                {{ly.lambda_var(tb.unit_node[u], t), 1.0},
                 {ly.gamma_lb(u, t), 1.0},
                 {ly.gamma_ub(u, t), -1.0}},
                RowSense::Equal, tb.unit_cost[u]);
  ly.r_statf0 = p.num_rows();
  for (int l = 0; l < tb.lines; ++l)
    for (int t = 0; t < H; ++t)
      p.add_row(tag("stat_f", tb.line_id[l], t),
                {{ly.xi_var(l, t), 1.0},
                 {ly.lambda_var(tb.line_to[l], t), 1.0},
                 {ly.lambda_var(tb.line_from[l], t), -1.0},
                 {ly.delta_lb(l, t), 1.0},
                 {ly.delta_ub(l, t), -1.0}},
                RowSense::Equal, 0.0);
  ly.r_statth0 = p.num_rows();
  for (int n = 0; n < tb.nodes; ++n)
    for (int t = 0; t < H; ++t) {
      std::vector<LinTerm> terms;
      for (int l : outof[n])
        terms.push_back({ly.xi_var(l, t), -1.0 / tb.line_x[l]});
      for (int l : into[n])
        terms.push_back({ly.xi_var(l, t), 1.0 / tb.line_x[l]});
      p.add_row(tag("stat_th", tb.node_id[n], t), std::move(terms),
                RowSense::Equal, 0.0);
    }

  // complementarity pairs
  for (int u = 0; u < tb.units; ++u)
    for (int t = 0; t < H; ++t) {
      p.add_sos1(tag("cs_glb", tb.unit_id[u], t),
                 {ly.g_var(u, t), ly.gamma_lb(u, t)});
      p.add_sos1(tag("cs_gub", tb.unit_id[u], t),
                 {ly.slack_gub(u, t), ly.gamma_ub(u, t)});
    }
  for (int l = 0; l < tb.lines; ++l)
    for (int t = 0; t < H; ++t) {
      p.add_sos1(tag("cs_dlb", tb.line_id[l], t),
                 {ly.slack_flb(l, t), ly.delta_lb(l, t)});
      p.add_sos1(tag("cs_dub", tb.line_id[l], t),
                 {ly.slack_fub(l, t), ly.delta_ub(l, t)});
    }
  return ly;
}

}  // namespace

std::vector<std::string> market_unit_ids(const GridModel& grid) {
  std::vector<std::string> ids;
  ids.reserve(grid.existing_gens.size() + grid.candidate_gens.size());
  for (const auto& g : grid.existing_gens) ids.push_back(g.id);
  for (const auto& g : grid.candidate_gens) ids.push_back(g.id);
  return ids;
}

DayOffers build_offers(const GridModel& grid, const std::string& state,
                       int day,
                       const std::map<std::string, std::vector<double>>& gbar) {
  if (grid.state_index(state) < 0)
    throw std::runtime_error("build_offers: unknown state '" + state + "'");
  check_day(grid, day);

  std::unordered_map<std::string, std::string> node_state;
  for (const auto& n : grid.nodes) node_state[n.id] = n.state;

  const int H = grid.hours;
  DayOffers out;
  out.day = day;
  out.values.reserve(
      (grid.existing_gens.size() + grid.candidate_gens.size()) * H);

  std::unordered_set<std::string> consumed;
  auto push_unit = [&](const Generator& g, bool candidate) {
    bool own = node_state.at(g.node) == state;
    auto it = gbar.find(g.id);
    if (it != gbar.end()) {
      if (!own)
        throw std::runtime_error("build_offers: schedule given for unit '" +
                                 g.id + "', which does not belong to state '" +
                                 state + "'");
      if (static_cast<int>(it->second.size()) != H) {
        std::ostringstream os;
        os << "schedule for unit '" << g.id << "' has " << it->second.size()
           << " entries, expected " << H;
        throw std::invalid_argument(os.str());
      }
      for (int t = 0; t < H; ++t) {
        double v = it->second[t];
        if (v < 0.0) {
          std::ostringstream os;
          os << "scheduled output for unit '" << g.id << "' at t=" << t
             << " is negative: " << v;
          throw std::invalid_argument(os.str());
        }
        out.values.push_back(v);
      }
      consumed.insert(g.id);
      return;
    }
    if (own) {
      if (g.kind == GenKind::Renewable) {
        // default to forecast output; unbuilt candidates have no capacity
        for (int t = 0; t < H; ++t)
          out.values.push_back(
              candidate ? 0.0 : grid.forecast_factor(g, t, day) * g.g_max);
        return;
      }
      if (candidate) {
        for (int t = 0; t < H; ++t) out.values.push_back(0.0);
        return;
      }
      throw std::runtime_error("build_offers: own controllable '" + g.id +
                               "' has no schedule for day " +
                               std::to_string(day));
    }
    // rivals offer forecast capacity net of their reserve margin, floored at
    // zero; rival candidates are not built from this actor's point of view
    for (int t = 0; t < H; ++t) {
      double v = candidate
                     ? 0.0
                     : grid.forecast_factor(g, t, day) * g.g_max - g.reserve;
      out.values.push_back(std::max(v, 0.0));
    }
  };
  for (const auto& g : grid.existing_gens) push_unit(g, false);
  for (const auto& g : grid.candidate_gens) push_unit(g, true);

  for (const auto& kv : gbar)
    if (!consumed.count(kv.first))
      throw std::runtime_error("build_offers: schedule for unknown unit '" +
                               kv.first + "'");
  return out;
}

MarketLp build_market_lp(const GridModel& grid, const DayOffers& offers) {
  Tables tb = tables_from_grid(grid, offers.day);
  const int H = tb.hours;
  if (offers.values.size() != static_cast<std::size_t>(tb.units) * H) {
    std::ostringstream os;
    os << "offer vector has " << offers.values.size() << " entries, expected "
       << static_cast<std::size_t>(tb.units) * H;
    throw std::invalid_argument(os.str());
  }
  for (std::size_t i = 0; i < offers.values.size(); ++i) {
    if (offers.values[i] < 0.0) {
      std::ostringstream os;
      os << "offer for unit '" << tb.unit_id[i / H] << "' at t=" << i % H
         << " is negative: " << offers.values[i];
      throw std::invalid_argument(os.str());
    }
  }

  // an island whose offers cannot cover its demand makes the clearing
  // infeasible no matter the flows; report it with names instead of letting
  // the solver return a bare Infeasible
  auto roots = island_roots(tb.nodes, tb.line_from, tb.line_to);
  for (int t = 0; t < H; ++t) {
    std::unordered_map<int, double> supply, need;
    for (int u = 0; u < tb.units; ++u)
      supply[roots[tb.unit_node[u]]] += offers.values[u * H + t];
    for (int n = 0; n < tb.nodes; ++n) need[roots[n]] += tb.demand[n * H + t];
    for (const auto& [root, dem] : need) {
      double sup = supply.count(root) ? supply.at(root) : 0.0;
      if (sup + 1e-9 >= dem) continue;
      std::ostringstream os;
      os << "market day " << tb.day << ": island {";
      bool first = true;
      for (int n = 0; n < tb.nodes; ++n) {
        if (roots[n] != root) continue;
        os << (first ? "" : ", ") << tb.node_id[n];
        first = false;
      }
      os << "} offers " << sup << " MW at t=" << t << " but demand is " << dem
         << " MW";
      throw std::runtime_error(os.str());
    }
  }

  MarketLp m;
  m.day = tb.day;
  m.hours = H;
  m.units = tb.units;
  m.lines = tb.lines;
  m.nodes = tb.nodes;
  m.offers = offers.values;
  m.unit_ids = tb.unit_id;
  m.line_ids = tb.line_id;
  m.node_ids = tb.node_id;
  m.unit_node = tb.unit_node;
  m.unit_cost = tb.unit_cost;
  m.line_from = tb.line_from;
  m.line_to = tb.line_to;
  m.line_x = tb.line_x;
  m.line_cap = tb.line_cap;

  ConicProgram& p = m.lp;
  p.name = "market_day" + std::to_string(tb.day);
  auto tname = [](const char* base, const std::string& id, int t) {
    return base + ("_" + id) + "_t" + std::to_string(t);
  };
  for (int u = 0; u < tb.units; ++u)
    for (int t = 0; t < H; ++t)
      p.add_var(tname("g", tb.unit_id[u], t), 0.0, offers.values[u * H + t]);
  for (int l = 0; l < tb.lines; ++l)
    for (int t = 0; t < H; ++t)
      p.add_var(tname("f", tb.line_id[l], t), -tb.line_cap[l], tb.line_cap[l]);
  for (int n = 0; n < tb.nodes; ++n)
    for (int t = 0; t < H; ++t) {
      double b = tb.is_ref[n] ? 0.0 : kInf;
      p.add_var(tname("th", tb.node_id[n], t), -b, b);
    }
  for (int u = 0; u < tb.units; ++u)
    if (tb.unit_cost[u] != 0.0)
      for (int t = 0; t < H; ++t) p.add_obj(m.g_var(u, t), -tb.unit_cost[u]);

  std::vector<std::vector<int>> units_at(tb.nodes), into(tb.nodes),
      outof(tb.nodes);
  for (int u = 0; u < tb.units; ++u) units_at[tb.unit_node[u]].push_back(u);
  for (int l = 0; l < tb.lines; ++l) {
    outof[tb.line_from[l]].push_back(l);
    into[tb.line_to[l]].push_back(l);
  }
  for (int l = 0; l < tb.lines; ++l)
    for (int t = 0; t < H; ++t) {
      double inv_x = 1.0 / tb.line_x[l];
      p.add_row(tname("flow", tb.line_id[l], t),
                {{m.f_var(l, t), 1.0},
                 {m.theta_var(tb.line_from[l], t), -inv_x},
                 {m.theta_var(tb.line_to[l], t), inv_x}},
                RowSense::Equal, 0.0);
    }
  for (int n = 0; n < tb.nodes; ++n)
    for (int t = 0; t < H; ++t) {
      std::vector<LinTerm> terms;
      for (int u : units_at[n]) terms.push_back({m.g_var(u, t), 1.0});
      for (int l : into[n]) terms.push_back({m.f_var(l, t), 1.0});
      for (int l : outof[n]) terms.push_back({m.f_var(l, t), -1.0});
      p.add_row(tname("bal", tb.node_id[n], t), std::move(terms),
                RowSense::Equal, tb.demand[n * H + t]);
    }
  return m;
}

KktLayout append_kkt_system(ConicProgram& p, const GridModel& grid, int day,
                            const std::vector<LinExpr>& offers) {
  return emit_kkt(p, tables_from_grid(grid, day), offers);
}

KktSystem build_kkt_system(const MarketLp& m) {
  KktSystem sys;
  sys.program.name = "kkt_day" + std::to_string(m.day);
  std::vector<LinExpr> offers;
  offers.reserve(m.offers.size());
  for (double v : m.offers) offers.emplace_back(v);
  sys.layout = emit_kkt(sys.program, tables_from_lp(m), offers);
  return sys;
}

MarketPoint market_point_from_solve(const MarketLp& m,
                                    const SolveResult& res) {
  const int H = m.hours;
  if (res.x.size() != m.lp.vars.size() ||
      res.row_duals.size() != m.lp.rows.size() ||
      res.reduced_costs.size() != m.lp.vars.size())
    throw std::invalid_argument(
        "market_point_from_solve: result does not carry a full primal-dual "
        "point for this market");
  MarketPoint pt;
  pt.x = res.x;
  pt.lambda.resize(static_cast<std::size_t>(m.nodes) * H);
  pt.xi.resize(static_cast<std::size_t>(m.lines) * H);
  pt.gamma_lb.resize(static_cast<std::size_t>(m.units) * H);
  pt.gamma_ub.resize(static_cast<std::size_t>(m.units) * H);
  pt.delta_lb.resize(static_cast<std::size_t>(m.lines) * H);
  pt.delta_ub.resize(static_cast<std::size_t>(m.lines) * H);
  for (int n = 0; n < m.nodes; ++n)
    for (int t = 0; t < H; ++t)
      pt.lambda[n * H + t] = res.row_duals[m.balance_row(n, t)];
  for (int l = 0; l < m.lines; ++l)
    for (int t = 0; t < H; ++t)
      pt.xi[l * H + t] = res.row_duals[m.flowdef_row(l, t)];
  for (int u = 0; u < m.units; ++u)
    for (int t = 0; t < H; ++t) {
      double rc = res.reduced_costs[m.g_var(u, t)];
      pt.gamma_lb[u * H + t] = std::max(-rc, 0.0);
      pt.gamma_ub[u * H + t] = std::max(rc, 0.0);
    }
  for (int l = 0; l < m.lines; ++l)
    for (int t = 0; t < H; ++t) {
      double rc = res.reduced_costs[m.f_var(l, t)];
      pt.delta_lb[l * H + t] = std::max(-rc, 0.0);
      pt.delta_ub[l * H + t] = std::max(rc, 0.0);
    }
  return pt;
}

double KktReport::max_residual() const {
  return std::max({primal, stationarity, complementarity, dual_sign});
}

KktReport verify_kkt_point(const MarketLp& m, const MarketPoint& pt,
                           double tol) {
  const int H = m.hours;
  auto want = [&](std::size_t got, int count) {
    return got == static_cast<std::size_t>(count) * H;
  };
  if (pt.x.size() != m.lp.vars.size() || !want(pt.lambda.size(), m.nodes) ||
      !want(pt.xi.size(), m.lines) || !want(pt.gamma_lb.size(), m.units) ||
      !want(pt.gamma_ub.size(), m.units) || !want(pt.delta_lb.size(), m.lines) ||
      !want(pt.delta_ub.size(), m.lines))
    throw std::invalid_argument(
        "verify_kkt_point: point does not match the market's shape");

  KktReport rep;
  double worst = -1.0;
  auto bump = [&](double& family, double r, std::string label) {
    if (r > family) family = r;
    if (r > worst) {
      worst = r;
      rep.worst = std::move(label);
    }
  };

  // primal feasibility: every row plus the variable bounds
  for (std::size_t r = 0; r < m.lp.rows.size(); ++r) {
    const Row& row = m.lp.rows[r];
    double act = m.lp.row_activity(static_cast<int>(r), pt.x);
    double res = 0.0;
    if (row.sense == RowSense::Equal)
      res = std::fabs(act - row.rhs);
    else if (row.sense == RowSense::LessEqual)
      res = std::max(0.0, act - row.rhs);
    else
      res = std::max(0.0, row.rhs - act);
    bump(rep.primal, res, "primal " + row.name);
  }
  for (std::size_t v = 0; v < m.lp.vars.size(); ++v) {
    const Variable& var = m.lp.vars[v];
    double res = 0.0;
    if (std::isfinite(var.lb)) res = std::max(res, var.lb - pt.x[v]);
    if (std::isfinite(var.ub)) res = std::max(res, pt.x[v] - var.ub);
    if (res > 0.0) bump(rep.primal, res, "bound " + var.name);
  }

  auto hour = [](int t) { return "_t" + std::to_string(t); };

  // stationarity in g, f and theta
  for (int u = 0; u < m.units; ++u)
    for (int t = 0; t < H; ++t) {
      int i = u * H + t;
      double r = std::fabs(pt.lambda[m.unit_node[u] * H + t] + pt.gamma_lb[i] -
                           pt.gamma_ub[i] - m.unit_cost[u]);
      bump(rep.stationarity, r, "stationarity g_" + m.unit_ids[u] + hour(t));
    }
  for (int l = 0; l < m.lines; ++l)
    for (int t = 0; t < H; ++t) {
      int i = l * H + t;
      double r = std::fabs(pt.xi[i] + pt.lambda[m.line_to[l] * H + t] -
                           pt.lambda[m.line_from[l] * H + t] + pt.delta_lb[i] -
                           pt.delta_ub[i]);
      bump(rep.stationarity, r, "stationarity f_" + m.line_ids[l] + hour(t));
    }
  std::vector<double> th_res(static_cast<std::size_t>(m.nodes) * H, 0.0);
  for (int l = 0; l < m.lines; ++l)
    for (int t = 0; t < H; ++t) {
      double v = pt.xi[l * H + t] / m.line_x[l];
      th_res[m.line_from[l] * H + t] -= v;
      th_res[m.line_to[l] * H + t] += v;
    }
  for (int n = 0; n < m.nodes; ++n)
    for (int t = 0; t < H; ++t)
      bump(rep.stationarity, std::fabs(th_res[n * H + t]),
           "stationarity th_" + m.node_ids[n] + hour(t));

  // complementary slackness, scaled so huge prices do not drown small gaps
  auto comp = [](double a, double b) {
    return std::fabs(a * b) / std::max({1.0, std::fabs(a), std::fabs(b)});
  };
  for (int u = 0; u < m.units; ++u)
    for (int t = 0; t < H; ++t) {
      int i = u * H + t;
      double g = pt.x[m.g_var(u, t)];
      bump(rep.complementarity, comp(g, pt.gamma_lb[i]),
           "complementarity glb_" + m.unit_ids[u] + hour(t));
      bump(rep.complementarity, comp(m.offers[i] - g, pt.gamma_ub[i]),
           "complementarity gub_" + m.unit_ids[u] + hour(t));
    }
  for (int l = 0; l < m.lines; ++l)
    for (int t = 0; t < H; ++t) {
      int i = l * H + t;
      double f = pt.x[m.f_var(l, t)];
      bump(rep.complementarity, comp(f + m.line_cap[l], pt.delta_lb[i]),
           "complementarity dlb_" + m.line_ids[l] + hour(t));
      bump(rep.complementarity, comp(m.line_cap[l] - f, pt.delta_ub[i]),
           "complementarity dub_" + m.line_ids[l] + hour(t));
    }

  // bound duals must be nonnegative
  auto sign_block = [&](const std::vector<double>& vals, const char* base,
                        const std::vector<std::string>& ids) {
    for (std::size_t i = 0; i < vals.size(); ++i)
      if (vals[i] < 0.0)
        bump(rep.dual_sign, -vals[i],
             std::string("sign ") + base + "_" + ids[i / H] +
                 hour(static_cast<int>(i % H)));
  };
  sign_block(pt.gamma_lb, "glb", m.unit_ids);
  sign_block(pt.gamma_ub, "gub", m.unit_ids);
  sign_block(pt.delta_lb, "dlb", m.line_ids);
  sign_block(pt.delta_ub, "dub", m.line_ids);

  rep.passed = rep.primal <= tol && rep.stationarity <= tol &&
               rep.complementarity <= tol && rep.dual_sign <= tol;
  return rep;
}

}  // namespace ccepec
