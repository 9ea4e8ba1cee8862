#include "ccepec/validation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "ccepec/solver/solve.hpp"
#include "ccepec/uncertainty.hpp"

namespace ccepec {

namespace {

// golden-ratio spaced stream per representative day so runs can be split by
// day and merged without touching each other's draws
std::uint64_t day_stream(std::uint64_t seed, int e) {
  return seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(e + 1));
}

}  // namespace

CcCheckReport monte_carlo_cc_check(const GridModel& grid,
                                   const CcSolution& sol, double eta, int n,
                                   std::uint64_t seed) {
  if (n < 10000) {
    std::ostringstream os;
    os << "monte_carlo_cc_check: need at least 10000 samples for the normal "
          "CI approximation, got "
       << n;
    throw std::invalid_argument(os.str());
  }
  if (!(eta > 0.0 && eta < 0.5)) {
    std::ostringstream os;
    os << "monte_carlo_cc_check: tolerance must lie in (0, 0.5), got " << eta;
    throw std::invalid_argument(os.str());
  }
  const int hours = grid.hours;
  const int days = static_cast<int>(grid.rep_days.size());

  AffinePolicy policy = affine_policy_for(grid, sol.state);
  for (auto& src : policy.sources)
    if (src.candidate) {
      auto it = sol.built_mw.find(src.id);
      if (it == sol.built_mw.end())
        throw std::invalid_argument(
            "monte_carlo_cc_check: no built capacity for candidate '" +
            src.id + "'");
      src.capacity = it->second;
    }

  std::unordered_map<std::string, const Generator*> by_id;
  for (const auto& g : grid.existing_gens) by_id[g.id] = &g;
  std::unordered_map<std::string, const CandidateGenerator*> cand_by_id;
  for (const auto& c : grid.candidate_gens) cand_by_id[c.id] = &c;

  struct Checked {
    const AffinePolicy::Participant* part = nullptr;
    const std::vector<double>* sched = nullptr;
    double lb = 0.0, ub = 0.0;
  };
  std::vector<Checked> checked;
  for (const auto& part : policy.participants) {
    Checked c;
    c.part = &part;
    auto it = sol.gbar.find(part.id);
    if (it == sol.gbar.end())
      throw std::invalid_argument(
          "monte_carlo_cc_check: no schedule for participant '" + part.id +
          "'");
    if (static_cast<int>(it->second.size()) != days * hours) {
      std::ostringstream os;
      os << "monte_carlo_cc_check: schedule for '" << part.id << "' has "
         << it->second.size() << " entries, expected " << days * hours;
      throw std::invalid_argument(os.str());
    }
    c.sched = &it->second;
    if (part.candidate) {
      auto built = sol.built_mw.find(part.id);
      if (built == sol.built_mw.end())
        throw std::invalid_argument(
            "monte_carlo_cc_check: no built capacity for candidate '" +
            part.id + "'");
      c.ub = built->second;
      c.lb = cand_by_id.at(part.id)->min_output_factor * built->second;
    } else {
      const Generator& g = *by_id.at(part.id);
      c.lb = g.g_min;
      c.ub = g.g_max;
    }
    checked.push_back(c);
  }

  CcCheckReport report;
  report.state = sol.state;
  report.samples = n;
  report.eta = eta;

  const std::size_t nsrc = policy.sources.size();
  for (int e = 0; e < days; ++e) {
    std::vector<std::vector<double>> draws;
    if (!checked.empty() && nsrc > 0)
      draws = sample_errors(policy.sources, hours, day_stream(seed, e), n);
    // total realized error per (sample, hour)
    std::vector<double> total(static_cast<std::size_t>(n) * hours, 0.0);
    for (int k = 0; k < static_cast<int>(draws.size()); ++k)
      for (std::size_t u = 0; u < nsrc; ++u)
        for (int t = 0; t < hours; ++t)
          total[static_cast<std::size_t>(k) * hours + t] +=
              draws[k][u * hours + t];

    for (const auto& c : checked) {
      for (int t = 0; t < hours; ++t) {
        const double gbar = (*c.sched)[e * hours + t];
        long over = 0, under = 0;
        for (int k = 0; k < n; ++k) {
          const double g =
              gbar -
              c.part->alpha * total[static_cast<std::size_t>(k) * hours + t];
          if (g > c.ub) ++over;
          if (g < c.lb) ++under;
        }
        for (bool upper : {true, false}) {
          CcCheckRow row;
          row.unit = c.part->id;
          row.t = t;
          row.e = e;
          row.upper = upper;
          row.bound = upper ? c.ub : c.lb;
          row.rate = static_cast<double>(upper ? over : under) / n;
          row.ci = 1.96 * std::sqrt(row.rate * (1.0 - row.rate) / n);
          report.max_rate = std::max(report.max_rate, row.rate);
          report.rows.push_back(row);
        }
      }
    }
  }
  return report;
}

KktEquivalenceReport lp_vs_kkt_equivalence(const GridModel& grid,
                                           const DayOffers& offers,
                                           double tol) {
  MarketLp m = build_market_lp(grid, offers);
  SolveResult lp = solve_lp(m.lp);
  if (lp.status != SolveStatus::Optimal)
    throw std::runtime_error(std::string("lp_vs_kkt_equivalence: direct LP "
                                         "solve ended ") +
                             to_string(lp.status));
  KktSystem sys = build_kkt_system(m);
  SolveResult kkt = solve(sys.program);
  if (kkt.status != SolveStatus::Optimal)
    throw std::runtime_error(std::string("lp_vs_kkt_equivalence: KKT "
                                         "feasibility solve ended ") +
                             to_string(kkt.status));

  MarketPoint pt = market_point_from_solve(m, lp);
  const KktLayout& l = sys.layout;

  KktEquivalenceReport rep;
  rep.tol = tol;
  rep.lp_objective = lp.objective;

  double gscale = 1.0, lscale = 1.0;
  for (int u = 0; u < m.units; ++u)
    for (int t = 0; t < m.hours; ++t) {
      const double a = lp.x[m.g_var(u, t)];
      const double b = kkt.x[l.g_var(u, t)];
      rep.kkt_objective -= m.unit_cost[u] * b;
      rep.max_dispatch_diff = std::max(rep.max_dispatch_diff, std::abs(a - b));
      gscale = std::max(gscale, std::abs(a));
    }
  for (int node = 0; node < m.nodes; ++node)
    for (int t = 0; t < m.hours; ++t) {
      const double a = pt.lambda[node * m.hours + t];
      const double b = kkt.x[l.lambda_var(node, t)];
      rep.max_price_diff = std::max(rep.max_price_diff, std::abs(a - b));
      lscale = std::max(lscale, std::abs(a));
    }

  // prices stay informational: on degenerate clearings (a unit pinned at a
  // bound that is exactly marginal) several dual vectors are valid and the
  // two methods may legitimately pick different ones
  (void)lscale;
  rep.passed = std::abs(rep.lp_objective - rep.kkt_objective) <=
                   tol * std::max(1.0, std::abs(rep.lp_objective)) &&
               rep.max_dispatch_diff <= tol * gscale;
  return rep;
}

AuditReport audit_solution(const ConicProgram& p, const std::vector<double>& x,
                           double tol) {
  if (x.size() != p.vars.size()) {
    std::ostringstream os;
    os << "audit_solution: point has " << x.size() << " entries, program has "
       << p.vars.size() << " variables";
    throw std::invalid_argument(os.str());
  }

  AuditReport report;
  report.tol = tol;

  std::vector<AuditFamily> families;
  std::unordered_map<std::string, std::size_t> index;
  auto note = [&](const std::string& family, const std::string& element,
                  double residual) {
    auto it = index.find(family);
    if (it == index.end()) {
      index[family] = families.size();
      families.push_back({family, 0, 0.0, "", true});
      it = index.find(family);
    }
    AuditFamily& f = families[it->second];
    ++f.count;
    if (residual > f.max_residual) {
      f.max_residual = residual;
      f.worst = element;
    }
  };

  for (const auto& row : p.rows) {
    double act = 0.0;
    for (const auto& t : row.terms) act += t.coef * x[t.var];
    double residual = 0.0;
    switch (row.sense) {
      case RowSense::LessEqual:
        residual = std::max(0.0, act - row.rhs);
        break;
      case RowSense::GreaterEqual:
        residual = std::max(0.0, row.rhs - act);
        break;
      case RowSense::Equal:
        residual = std::abs(act - row.rhs);
        break;
    }
    note(row.name.substr(0, row.name.find('_')), row.name, residual);
  }

  for (std::size_t v = 0; v < p.vars.size(); ++v) {
    const Variable& var = p.vars[v];
    const double below = var.lb - x[v];
    const double above = x[v] - var.ub;
    note("bounds", var.name, std::max({0.0, below, above}));
    if (var.kind == VarKind::Binary)
      note("integrality", var.name, std::abs(x[v] - std::round(x[v])));
  }

  for (const auto& cone : p.cones) {
    double norm2 = 0.0;
    for (const auto& expr : cone.tail) {
      const double v = expr.eval(x);
      norm2 += v * v;
    }
    note("cones", cone.name, std::max(0.0, std::sqrt(norm2) - x[cone.head]));
  }

  for (const auto& set : p.sos1) {
    // anything beyond the single largest member is a complementarity breach;
    // negative values are bound violations and counted there
    double total = 0.0, largest = 0.0;
    for (int v : set.vars) {
      const double val = std::max(0.0, x[v]);
      total += val;
      largest = std::max(largest, val);
    }
    note("sos1", set.name, total - largest);
  }

  for (auto& f : families) {
    f.passed = f.max_residual <= tol;
    report.max_residual = std::max(report.max_residual, f.max_residual);
  }
  report.passed = report.max_residual <= tol;
  report.families = std::move(families);
  return report;
}

}  // namespace ccepec
