#include "ccepec/results.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

namespace ccepec {

namespace {

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

// fuel cost per unit id, existing and candidate alike
std::unordered_map<std::string, const Generator*> unit_index(
    const GridModel& grid) {
  std::unordered_map<std::string, const Generator*> by_id;
  for (const auto& g : grid.existing_gens) by_id[g.id] = &g;
  for (const auto& c : grid.candidate_gens) by_id[c.id] = &c;
  return by_id;
}

std::string state_of_unit(const GridModel& grid, const Generator& g) {
  return grid.nodes[static_cast<std::size_t>(grid.node_index(g.node))].state;
}

// sorted per-state rows plus a trailing fleet total
std::vector<CostRow> finish_rows(std::map<std::string, CostRow>&& by_state) {
  std::vector<CostRow> rows;
  CostRow total;
  total.scope = "system";
  for (auto& [state, row] : by_state) {
    row.scope = state;
    total.investment_per_day += row.investment_per_day;
    total.operating_per_day += row.operating_per_day;
    rows.push_back(row);
  }
  rows.push_back(total);
  return rows;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

RunPaths run_layout(const std::string& out_root, const std::string& run_id) {
  RunPaths p;
  p.dir = std::filesystem::path(out_root) / run_id;
  std::filesystem::create_directories(p.dir);
  p.result_json = p.dir / "result.json";
  p.expansion_csv = p.dir / "expansion.csv";
  p.costs_csv = p.dir / "costs.csv";
  p.convergence_csv = p.dir / "convergence.csv";
  p.audit_json = p.dir / "audit.json";
  return p;
}

std::vector<CostRow> mpec_cost_rows(const GridModel& grid,
                                    const PolicySet& policies,
                                    const MpecInstance& inst,
                                    const std::vector<double>& x) {
  auto by_id = unit_index(grid);
  CostRow row;
  row.scope = inst.state;
  for (std::size_t i = 0; i < inst.cand_ids.size(); ++i) {
    const auto* cand =
        static_cast<const CandidateGenerator*>(by_id.at(inst.cand_ids[i]));
    row.investment_per_day +=
        prorate_capital_cost(cand->capital_cost, policies.horizon_years,
                             policies.discount_rate) *
        x[static_cast<std::size_t>(inst.inv[i])];
  }
  // the planning objective pays fuel on its existing units' schedules only
  for (std::size_t su = 0; su < inst.sched_ids.size(); ++su) {
    if (inst.sched_is_candidate[su]) continue;
    const double cost = by_id.at(inst.sched_ids[su])->cost;
    for (int e = 0; e < inst.days; ++e)
      for (int t = 0; t < inst.hours; ++t)
        row.operating_per_day +=
            inst.day_weight[static_cast<std::size_t>(e)] * cost *
            x[static_cast<std::size_t>(inst.gbar_var(static_cast<int>(su), t,
                                                     e))];
  }
  return {row};
}

std::vector<CostRow> benchmark_cost_rows(const GridModel& grid,
                                         const PolicySet& policies,
                                         const BenchmarkInstance& inst,
                                         const std::vector<double>& x) {
  auto by_id = unit_index(grid);
  std::map<std::string, CostRow> by_state;
  for (const auto& node : grid.nodes) by_state[node.state];
  for (std::size_t i = 0; i < inst.cand_ids.size(); ++i) {
    const auto* cand =
        static_cast<const CandidateGenerator*>(by_id.at(inst.cand_ids[i]));
    by_state[state_of_unit(grid, *cand)].investment_per_day +=
        prorate_capital_cost(cand->capital_cost, policies.horizon_years,
                             policies.discount_rate) *
        x[static_cast<std::size_t>(inst.inv[i])];
  }
  for (std::size_t u = 0; u < inst.unit_ids.size(); ++u) {
    const Generator& gen = *by_id.at(inst.unit_ids[u]);
    if (gen.cost == 0.0) continue;
    double energy = 0.0;
    for (int e = 0; e < inst.days; ++e) {
      const double w = grid.rep_days[static_cast<std::size_t>(e)].weight;
      for (int t = 0; t < inst.hours; ++t)
        energy +=
            w * x[static_cast<std::size_t>(inst.g_var(static_cast<int>(u), t,
                                                      e))];
    }
    by_state[state_of_unit(grid, gen)].operating_per_day += gen.cost * energy;
  }
  return finish_rows(std::move(by_state));
}

std::vector<CostRow> epec_cost_rows(const GridModel& grid,
                                    const PolicySet& policies,
                                    const EquilibriumResult& res) {
  auto by_id = unit_index(grid);
  std::map<std::string, CostRow> by_state;
  const int hours = grid.hours;
  const int days = static_cast<int>(grid.rep_days.size());
  for (const auto& sol : res.solutions) {
    CostRow& row = by_state[sol.state];
    for (std::size_t i = 0; i < sol.cand_ids.size(); ++i) {
      const auto* cand =
          static_cast<const CandidateGenerator*>(by_id.at(sol.cand_ids[i]));
      row.investment_per_day +=
          prorate_capital_cost(cand->capital_cost, policies.horizon_years,
                               policies.discount_rate) *
          sol.built_mw[i];
    }
    for (std::size_t su = 0; su < sol.sched_ids.size(); ++su) {
      const Generator& gen = *by_id.at(sol.sched_ids[su]);
      if (gen.kind != GenKind::Controllable || gen.cost == 0.0) continue;
      bool is_candidate = false;
      for (const auto& cid : sol.cand_ids) is_candidate |= cid == gen.id;
      if (is_candidate) continue;
      const std::size_t base = su * static_cast<std::size_t>(days * hours);
      for (int e = 0; e < days; ++e) {
        const double w = grid.rep_days[static_cast<std::size_t>(e)].weight;
        for (int t = 0; t < hours; ++t)
          row.operating_per_day +=
              w * gen.cost *
              sol.gbar[base + static_cast<std::size_t>(e * hours + t)];
      }
    }
  }
  return finish_rows(std::move(by_state));
}

ConvergenceTable epec_convergence(const EquilibriumResult& res) {
  ConvergenceTable table;
  table.actors = res.actors;
  table.eps = res.eps_history;
  table.objectives = res.objectives;
  return table;
}

void write_expansion_csv(const std::filesystem::path& path,
                         const ExpansionSummary& summary) {
  std::string body = "# expansion summary, scenario=" + summary.scenario +
                     ", units=MW\n";
  body += "state,controllable_mw,renewable_mw\n";
  for (const auto& [state, ctrl] : summary.controllable_mw) {
    body += state + "," + format_double(ctrl) + "," +
            format_double(summary.renewable_mw.at(state)) + "\n";
  }
  write_file(path, body);
}

void write_costs_csv(const std::filesystem::path& path,
                     const std::vector<CostRow>& rows) {
  std::string body = "# cost breakdown as charged by the model objective\n";
  body += "scope,investment_per_day,operating_per_day\n";
  for (const auto& row : rows)
    body += row.scope + "," + format_double(row.investment_per_day) + "," +
            format_double(row.operating_per_day) + "\n";
  write_file(path, body);
}

void write_convergence_csv(const std::filesystem::path& path,
                           const ConvergenceTable& table) {
  std::string body = "# hedging trace, eps = consensus deviation over ||avg||\n";
  body += "iteration,eps";
  for (const auto& a : table.actors) body += ",obj_" + a;
  body += "\n";
  for (std::size_t r = 0; r < table.eps.size(); ++r) {
    body += std::to_string(r + 1) + "," + format_double(table.eps[r]);
    for (double obj : table.objectives[r]) body += "," + format_double(obj);
    body += "\n";
  }
  write_file(path, body);
}

void write_audit_json(const std::filesystem::path& path,
                      const AuditReport& report) {
  nlohmann::json doc;
  doc["tol"] = report.tol;
  doc["passed"] = report.passed;
  doc["max_residual"] = report.max_residual;
  doc["families"] = nlohmann::json::array();
  for (const auto& fam : report.families) {
    doc["families"].push_back({{"family", fam.family},
                               {"count", fam.count},
                               {"max_residual", fam.max_residual},
                               {"worst", fam.worst},
                               {"passed", fam.passed}});
  }
  write_file(path, doc.dump(2) + "\n");
}

void write_audit_json(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, AuditReport>>& per_actor) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& [state, report] : per_actor) {
    nlohmann::json one;
    one["state"] = state;
    one["tol"] = report.tol;
    one["passed"] = report.passed;
    one["max_residual"] = report.max_residual;
    one["families"] = nlohmann::json::array();
    for (const auto& fam : report.families)
      one["families"].push_back({{"family", fam.family},
                                 {"count", fam.count},
                                 {"max_residual", fam.max_residual},
                                 {"worst", fam.worst},
                                 {"passed", fam.passed}});
    doc.push_back(one);
  }
  write_file(path, doc.dump(2) + "\n");
}

void write_cc_check_json(const std::filesystem::path& path,
                         const CcCheckReport& report) {
  nlohmann::json doc;
  doc["state"] = report.state;
  doc["eta"] = report.eta;
  doc["samples"] = report.samples;
  doc["max_rate"] = report.max_rate;
  doc["rows"] = nlohmann::json::array();
  for (const auto& row : report.rows) {
    doc["rows"].push_back({{"unit", row.unit},
                           {"hour", row.t},
                           {"day", row.e},
                           {"side", row.upper ? "upper" : "lower"},
                           {"bound", row.bound},
                           {"rate", row.rate},
                           {"ci95", row.ci}});
  }
  write_file(path, doc.dump(2) + "\n");
}

std::string render_cc_check_table(const CcCheckReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line,
                "chance-constraint check, state %s: n=%d, eta=%g, max rate "
                "%.5f\n",
                report.state.c_str(), report.samples, report.eta,
                report.max_rate);
  out << line;
  std::snprintf(line, sizeof line, "%-12s %4s %4s %-6s %12s %9s %9s\n", "unit",
                "day", "hour", "side", "bound", "rate", "ci95");
  out << line;
  for (const auto& row : report.rows) {
    std::snprintf(line, sizeof line, "%-12s %4d %4d %-6s %12.4f %9.5f %9.5f\n",
                  row.unit.c_str(), row.e, row.t,
                  row.upper ? "upper" : "lower", row.bound, row.rate, row.ci);
    out << line;
  }
  return out.str();
}

std::string render_audit_table(const AuditReport& report) {
  std::ostringstream out;
  char line[192];
  std::snprintf(line, sizeof line, "audit at tol %g: %s, max residual %.3e\n",
                report.tol, report.passed ? "PASS" : "FAIL",
                report.max_residual);
  out << line;
  std::snprintf(line, sizeof line, "%-14s %7s %13s %-6s  %s\n", "family",
                "rows", "max_residual", "status", "worst");
  out << line;
  for (const auto& fam : report.families) {
    std::snprintf(line, sizeof line, "%-14s %7d %13.3e %-6s  %s\n",
                  fam.family.c_str(), fam.count, fam.max_residual,
                  fam.passed ? "ok" : "FAIL", fam.worst.c_str());
    out << line;
  }
  return out.str();
}

}  // namespace ccepec
