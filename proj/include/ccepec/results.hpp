#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ccepec/benchmark.hpp"
#include "ccepec/hedging.hpp"
#include "ccepec/mpec.hpp"
#include "ccepec/validation.hpp"

namespace ccepec {

// Shortest decimal text that parses back to exactly v, independent of any
// global locale. All persisted numbers go through this so re-running a
// command reproduces its files byte for byte.
std::string format_double(double v);

// Artifact file names under out_root/run_id. Creates the directory.
struct RunPaths {
  std::filesystem::path dir;
  std::filesystem::path result_json;
  std::filesystem::path expansion_csv;
  std::filesystem::path costs_csv;
  std::filesystem::path convergence_csv;
  std::filesystem::path audit_json;
};
RunPaths run_layout(const std::string& out_root, const std::string& run_id);

// Investment vs operating split per state, in dollars per day, charged the
// way the originating model's objective charges them: investment is the
// annuitized capital of built candidates, operating the expected fuel cost
// of the dispatch the model paid for.
struct CostRow {
  std::string scope;  // state name, or "system" for the fleet total
  double investment_per_day = 0.0;
  double operating_per_day = 0.0;
};

std::vector<CostRow> mpec_cost_rows(const GridModel& grid,
                                    const PolicySet& policies,
                                    const MpecInstance& inst,
                                    const std::vector<double>& x);
std::vector<CostRow> benchmark_cost_rows(const GridModel& grid,
                                         const PolicySet& policies,
                                         const BenchmarkInstance& inst,
                                         const std::vector<double>& x);
std::vector<CostRow> epec_cost_rows(const GridModel& grid,
                                    const PolicySet& policies,
                                    const EquilibriumResult& res);

// Per-round trace of a hedging run: tolerance plus one objective column per
// actor. Wall-clock time is deliberately absent, it lives in result.json so
// the CSV bodies stay reproducible.
struct ConvergenceTable {
  std::vector<std::string> actors;
  std::vector<double> eps;                      // [round]
  std::vector<std::vector<double>> objectives;  // [round][actor]
};
ConvergenceTable epec_convergence(const EquilibriumResult& res);

void write_expansion_csv(const std::filesystem::path& path,
                         const ExpansionSummary& summary);
void write_costs_csv(const std::filesystem::path& path,
                     const std::vector<CostRow>& rows);
void write_convergence_csv(const std::filesystem::path& path,
                           const ConvergenceTable& table);
void write_audit_json(const std::filesystem::path& path,
                      const AuditReport& report);
// Equilibrium form: one report per actor, keyed by state.
void write_audit_json(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, AuditReport>>& per_actor);

// Validation artifacts: machine-readable and a fixed-width console table.
void write_cc_check_json(const std::filesystem::path& path,
                         const CcCheckReport& report);
std::string render_cc_check_table(const CcCheckReport& report);
std::string render_audit_table(const AuditReport& report);

}  // namespace ccepec
