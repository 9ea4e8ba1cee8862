#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "ccepec/benchmark.hpp"
#include "ccepec/data_model.hpp"
#include "ccepec/hedging.hpp"
#include "ccepec/market.hpp"
#include "ccepec/mpec.hpp"
#include "ccepec/results.hpp"
#include "ccepec/solver/lp_file.hpp"
#include "ccepec/solver/solve.hpp"
#include "ccepec/validation.hpp"
#include "json.hpp"

using namespace ccepec;

namespace {

// exit codes: 0 success (including flagged non-convergence), 2 bad input or
// flags, 3 the model is infeasible, 4 the solver gave up
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitSolver = 4;

// CLI11 config reader that accepts either its native TOML-style file or a
// JSON document with the same keys (nested objects select subcommands).
class FlexibleConfig : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::string text((std::istreambuf_iterator<char>(input)), {});
    const std::size_t pos = text.find_first_not_of(" \t\r\n");
    if (pos != std::string::npos && text[pos] == '{') {
      std::vector<CLI::ConfigItem> items;
      flatten(nlohmann::json::parse(text), {}, items);
      return items;
    }
    std::istringstream rest(text);
    return CLI::ConfigTOML::from_config(rest);
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  }
  static void flatten(const nlohmann::json& node,
                      std::vector<std::string> parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : node.items()) {
      if (value.is_object()) {
        auto deeper = parents;
        deeper.push_back(key);
        flatten(value, deeper, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array())
        for (const auto& el : value) item.inputs.push_back(scalar(el));
      else
        item.inputs.push_back(scalar(value));
      items.push_back(std::move(item));
    }
  }
};

struct InputArgs {
  std::string grid;
  std::string policies;
  std::string scenario;
  std::string out = "out";
  std::string run_id;
};

void add_input_options(CLI::App* cmd, InputArgs& in) {
  cmd->add_option("--grid", in.grid,
                  "grid as a csv directory or a single json file")
      ->required();
  cmd->add_option("--policies", in.policies, "policy json file")->required();
  cmd->add_option("--scenario", in.scenario,
                  "retirement recipe name from the policy file");
  cmd->add_option("--out", in.out, "output root directory");
  cmd->add_option("--run-id", in.run_id,
                  "artifact directory under --out (default derived)");
}

struct Loaded {
  GridModel grid;
  PolicySet policies;
  std::string tag;  // scenario label stamped on artifacts
};

Loaded load_inputs(const InputArgs& in) {
  Loaded l;
  l.grid = load_grid(in.grid);
  l.policies = load_policies(in.policies);
  l.tag = in.scenario.empty() ? "base" : in.scenario;
  if (!in.scenario.empty()) {
    RetirementScenario sc = resolve_retirement(l.grid, l.policies, in.scenario);
    l.grid = apply_retirement(l.grid, sc);
  }
  for (const auto& s : l.grid.states)
    if (!l.policies.find(s))
      throw std::runtime_error("no policy entry for state '" + s + "'");
  return l;
}

std::string default_run_id(const std::string& command, const std::string& state,
                           const std::string& scenario) {
  std::string id = command;
  if (!state.empty()) id += "-" + state;
  if (!scenario.empty()) id += "-" + scenario;
  return id;
}

void describe_grid(const Loaded& l) {
  std::cout << "grid: " << l.grid.nodes.size() << " nodes, "
            << l.grid.lines.size() << " lines, " << l.grid.existing_gens.size()
            << " units, " << l.grid.candidate_gens.size() << " candidates, "
            << l.grid.rep_days.size() << " days x " << l.grid.hours
            << " hours, scenario " << l.tag << "\n";
}

int fail_config(const std::exception& e) {
  std::cerr << "error: " << e.what() << "\n";
  return kExitConfig;
}

int fail_infeasible(const std::exception& e) {
  std::cerr << "infeasible: " << e.what() << "\n";
  return kExitInfeasible;
}

// external solutions come back as "name value" lines; '#' starts a comment
// and an "objective" line is ignored (the objective is recomputed)
std::vector<double> parse_solution_file(const ConicProgram& p,
                                        const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read solution file " + path);
  std::map<std::string, int> index;
  for (int i = 0; i < p.num_vars(); ++i)
    index[p.vars[static_cast<std::size_t>(i)].name] = i;
  std::vector<double> x(static_cast<std::size_t>(p.num_vars()), 0.0);
  std::string line;
  int unknown = 0;
  while (std::getline(in, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    std::string name;
    double value;
    if (!(row >> name >> value)) continue;
    if (name == "objective") continue;
    auto it = index.find(name);
    if (it == index.end()) {
      ++unknown;
      continue;
    }
    x[static_cast<std::size_t>(it->second)] = value;
  }
  if (unknown > 0)
    std::cerr << "note: solution file names " << unknown
              << " variables the program does not have\n";
  return x;
}

// shared across commands: solve in-process, or round-trip through an LP file
// and the command in CCEPEC_SOLVER_CMD (invoked as `cmd program.lp out.sol`)
SolveResult dispatch_solve(const ConicProgram& p, const BnbOptions& opt,
                           const std::string& backend,
                           const std::filesystem::path& dir, bool& dumped) {
  dumped = false;
  if (backend == "internal") return solve(p, opt);
  const auto lp_path = dir / "program.lp";
  write_lp_file(p, lp_path.string());
  std::cout << "wrote " << lp_path.string() << "\n";
  const char* cmd = std::getenv("CCEPEC_SOLVER_CMD");
  if (cmd == nullptr || *cmd == '\0') {
    std::cout << "CCEPEC_SOLVER_CMD is not set; stopping after the dump\n";
    dumped = true;
    return {};
  }
  const auto sol_path = dir / "solution.sol";
  const std::string invocation =
      std::string(cmd) + " " + lp_path.string() + " " + sol_path.string();
  const int rc = std::system(invocation.c_str());
  if (rc != 0)
    throw std::runtime_error("external solver exited with status " +
                             std::to_string(rc));
  SolveResult res;
  res.x = parse_solution_file(p, sol_path.string());
  res.objective = p.eval_objective(res.x);
  res.status = SolveStatus::Optimal;  // claimed; the audit gate verifies
  res.message = "external solution via " + std::string(cmd);
  return res;
}

nlohmann::json audit_to_json(const AuditReport& audit) {
  nlohmann::json doc;
  doc["passed"] = audit.passed;
  doc["max_residual"] = audit.max_residual;
  return doc;
}

// ---------------------------------------------------------------- run-mpec

struct MpecArgs {
  std::string state;
  std::string backend = "internal";
  int bits = 10;
  double price_min = 0.0;
  double price_cap = -1.0;
  double rel_gap = 1e-4;
  bool verbose = false;
};

int cmd_run_mpec(const InputArgs& in, const MpecArgs& ma) {
  Loaded l;
  try {
    l = load_inputs(in);
    bool known = false;
    for (const auto& s : l.grid.states) known |= s == ma.state;
    if (!known)
      throw std::runtime_error("unknown state '" + ma.state + "'");
  } catch (const std::exception& e) {
    return fail_config(e);
  }
  describe_grid(l);

  MpecOptions mo;
  mo.price_bits = ma.bits;
  mo.price_min = ma.price_min;
  mo.price_cap = ma.price_cap;
  MpecInstance inst;
  try {
    inst = build_mpec(l.grid, l.policies, ma.state, {}, mo);
  } catch (const std::invalid_argument& e) {
    return fail_config(e);
  } catch (const std::runtime_error& e) {
    return fail_infeasible(e);
  }
  std::cout << "planning problem for " << ma.state << ": "
            << inst.program.num_vars() << " vars, " << inst.program.num_rows()
            << " rows, price grid " << inst.price_bits << " bits from "
            << inst.lambda_min << " step " << inst.lambda_step << "\n";

  const std::string run_id = in.run_id.empty()
                                 ? default_run_id("mpec", ma.state, in.scenario)
                                 : in.run_id;
  RunPaths paths = run_layout(in.out, run_id);

  BnbOptions bo;
  bo.rel_gap = ma.rel_gap;
  if (ma.verbose)
    bo.log = [](const std::string& s) { std::cerr << "  " << s << "\n"; };
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult res;
  bool dumped = false;
  try {
    res = dispatch_solve(inst.program, bo, ma.backend, paths.dir, dumped);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  if (dumped) return 0;
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  std::cout << "solve: " << to_string(res.status) << " in " << wall << " s\n";
  if (res.status == SolveStatus::Infeasible) {
    std::cerr << "infeasible: " << res.message << "\n";
    return kExitInfeasible;
  }
  if (!res.ok()) {
    std::cerr << "error: solver ended " << to_string(res.status) << ": "
              << res.message << "\n";
    return kExitSolver;
  }

  AuditReport audit = audit_solution(inst.program, res.x);
  std::cout << render_audit_table(audit);
  if (ma.backend != "internal" && !audit.passed) {
    std::cerr << "error: external solution fails the feasibility audit\n";
    return kExitSolver;
  }

  std::vector<double> built;
  for (int v : inst.inv) built.push_back(res.x[static_cast<std::size_t>(v)]);
  nlohmann::json doc;
  doc["command"] = "run-mpec";
  doc["state"] = ma.state;
  doc["scenario"] = l.tag;
  doc["status"] = to_string(res.status);
  doc["objective"] = res.objective;
  doc["best_bound"] = res.best_bound;
  doc["wall_seconds"] = wall;
  doc["eta"] = l.policies.find(ma.state)->eta;
  doc["price_grid"] = {{"bits", inst.price_bits},
                       {"min", inst.lambda_min},
                       {"step", inst.lambda_step}};
  doc["audit"] = audit_to_json(audit);
  doc["built"] = nlohmann::json::object();
  for (std::size_t i = 0; i < inst.cand_ids.size(); ++i)
    doc["built"][inst.cand_ids[i]] = built[i];
  doc["gbar"] = nlohmann::json::object();
  for (std::size_t su = 0; su < inst.sched_ids.size(); ++su) {
    std::vector<double> sched;
    for (int e = 0; e < inst.days; ++e)
      for (int t = 0; t < inst.hours; ++t)
        sched.push_back(
            res.x[static_cast<std::size_t>(inst.gbar_var(
                static_cast<int>(su), t, e))]);
    doc["gbar"][inst.sched_ids[su]] = sched;
  }
  {
    std::ofstream out(paths.result_json, std::ios::binary);
    out << doc.dump(2) << "\n";
  }
  write_expansion_csv(paths.expansion_csv,
                      summarize_expansion(l.grid, inst.cand_ids, built, l.tag));
  write_costs_csv(paths.costs_csv, mpec_cost_rows(l.grid, l.policies, inst,
                                                  res.x));
  write_audit_json(paths.audit_json, audit);
  std::cout << "objective " << res.objective << ", artifacts in "
            << paths.dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- run-epec

struct EpecArgs {
  double eps = 0.03;
  double rho_g = 0.7;
  double rho_lambda = 0.7;
  int max_iter = 100;
  int jobs = 0;  // 0 = available parallelism
  int bits = 10;
  double price_min = 0.0;
  double price_cap = -1.0;
  int breakpoints = 8;
  double rel_gap = 1e-4;
  bool verbose = false;
};

int cmd_run_epec(const InputArgs& in, const EpecArgs& ea) {
  Loaded l;
  try {
    l = load_inputs(in);
    if (l.grid.states.size() < 2)
      throw std::runtime_error(
          "equilibrium runs need at least two states in the grid");
  } catch (const std::exception& e) {
    return fail_config(e);
  }
  describe_grid(l);

  PhOptions po;
  po.eps_target = ea.eps;
  po.rho_g = ea.rho_g;
  po.rho_lambda = ea.rho_lambda;
  po.max_iter = ea.max_iter;
  po.breakpoints = ea.breakpoints;
  po.jobs = ea.jobs > 0
                ? ea.jobs
                : static_cast<int>(
                      std::max(1u, std::thread::hardware_concurrency()));
  po.mpec.price_bits = ea.bits;
  po.mpec.price_min = ea.price_min;
  po.mpec.price_cap = ea.price_cap;
  po.solver.rel_gap = ea.rel_gap;
  if (ea.verbose)
    po.log = [](const std::string& s) { std::cerr << "  " << s << "\n"; };

  EquilibriumResult res;
  try {
    res = run_ph(l.grid, l.policies, po);
  } catch (const std::invalid_argument& e) {
    return fail_config(e);
  } catch (const std::runtime_error& e) {
    if (std::string(e.what()).find("Infeasible") != std::string::npos)
      return fail_infeasible(e);
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }

  const std::string run_id =
      in.run_id.empty() ? default_run_id("epec", "", in.scenario) : in.run_id;
  RunPaths paths = run_layout(in.out, run_id);

  // one audit per actor against a fresh unpenalized build of its problem
  std::vector<std::pair<std::string, AuditReport>> audits;
  bool all_pass = true;
  for (const auto& sol : res.solutions) {
    MpecInstance base = build_mpec(l.grid, l.policies, sol.state, {}, po.mpec);
    audits.emplace_back(sol.state, audit_solution(base.program, sol.x_base));
    all_pass &= audits.back().second.passed;
  }

  std::vector<std::string> all_cands;
  std::vector<double> all_built;
  for (const auto& sol : res.solutions) {
    all_cands.insert(all_cands.end(), sol.cand_ids.begin(),
                     sol.cand_ids.end());
    all_built.insert(all_built.end(), sol.built_mw.begin(),
                     sol.built_mw.end());
  }

  double wall = 0.0;
  for (double w : res.wall_seconds) wall += w;

  nlohmann::json doc;
  doc["command"] = "run-epec";
  doc["scenario"] = l.tag;
  doc["converged"] = res.converged;
  doc["iterations"] = res.iterations;
  doc["eps"] = res.eps;
  doc["eps_target"] = ea.eps;
  doc["eps_history"] = res.eps_history;
  doc["wall_seconds"] = wall;
  doc["round_seconds"] = res.wall_seconds;
  doc["audit_passed"] = all_pass;
  doc["actors"] = res.actors;
  doc["objectives"] = nlohmann::json::object();
  doc["built"] = nlohmann::json::object();
  doc["gbar"] = nlohmann::json::object();
  for (std::size_t a = 0; a < res.solutions.size(); ++a) {
    const PhSolveRecord& sol = res.solutions[a];
    doc["objectives"][sol.state] = res.objectives.back()[a];
    nlohmann::json built = nlohmann::json::object();
    for (std::size_t i = 0; i < sol.cand_ids.size(); ++i)
      built[sol.cand_ids[i]] = sol.built_mw[i];
    doc["built"][sol.state] = built;
    nlohmann::json sched = nlohmann::json::object();
    const std::size_t per = sol.sched_ids.empty()
                                ? 0
                                : sol.gbar.size() / sol.sched_ids.size();
    for (std::size_t su = 0; su < sol.sched_ids.size(); ++su)
      sched[sol.sched_ids[su]] = std::vector<double>(
          sol.gbar.begin() + static_cast<long>(su * per),
          sol.gbar.begin() + static_cast<long>((su + 1) * per));
    doc["gbar"][sol.state] = sched;
  }
  {
    std::ofstream out(paths.result_json, std::ios::binary);
    out << doc.dump(2) << "\n";
  }
  write_expansion_csv(paths.expansion_csv,
                      summarize_expansion(l.grid, all_cands, all_built, l.tag));
  write_costs_csv(paths.costs_csv, epec_cost_rows(l.grid, l.policies, res));
  write_convergence_csv(paths.convergence_csv, epec_convergence(res));
  write_audit_json(paths.audit_json, audits);

  std::cout << (res.converged ? "converged" : "NOT converged") << " after "
            << res.iterations << " rounds, eps " << res.eps << " (target "
            << ea.eps << ")\n";
  std::cout << "timing: " << wall << " s total, "
            << wall / std::max(1, res.iterations) << " s per round, jobs "
            << po.jobs << "\n";
  for (std::size_t a = 0; a < res.solutions.size(); ++a)
    std::cout << "  " << res.solutions[a].state << ": objective "
              << res.objectives.back()[a] << ", audit "
              << (audits[a].second.passed ? "ok" : "FAIL") << "\n";
  std::cout << "artifacts in " << paths.dir.string() << "\n";
  return 0;
}

// ----------------------------------------------------------- run-benchmark

struct BenchArgs {
  double reserve = -1.0;  // flat MW; negative derives from --reserve-eta
  double reserve_eta = 0.03;
  bool chance_headroom = false;
  double rel_gap = 1e-4;
  bool verbose = false;
};

int cmd_run_benchmark(const InputArgs& in, const BenchArgs& ba) {
  Loaded l;
  try {
    l = load_inputs(in);
  } catch (const std::exception& e) {
    return fail_config(e);
  }
  describe_grid(l);

  BenchmarkInstance inst;
  double reserve = ba.reserve;
  try {
    if (reserve < 0.0) reserve = default_reserve_requirement(l.grid, ba.reserve_eta);
    BenchmarkOptions bo;
    bo.chance_headroom = ba.chance_headroom;
    inst = build_benchmark(l.grid, l.policies, reserve, bo);
  } catch (const std::invalid_argument& e) {
    return fail_config(e);
  } catch (const std::runtime_error& e) {
    return fail_infeasible(e);
  }
  std::cout << "benchmark: " << inst.program.num_vars() << " vars, "
            << inst.program.num_rows() << " rows, reserve " << reserve
            << " MW\n";

  const std::string run_id =
      in.run_id.empty() ? default_run_id("benchmark", "", in.scenario)
                        : in.run_id;
  RunPaths paths = run_layout(in.out, run_id);

  BnbOptions bo;
  bo.rel_gap = ba.rel_gap;
  if (ba.verbose)
    bo.log = [](const std::string& s) { std::cerr << "  " << s << "\n"; };
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult res = solve(inst.program, bo);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  std::cout << "solve: " << to_string(res.status) << " in " << wall << " s\n";
  if (res.status == SolveStatus::Infeasible) {
    std::cerr << "infeasible: " << res.message << "\n";
    return kExitInfeasible;
  }
  if (!res.ok()) {
    std::cerr << "error: solver ended " << to_string(res.status) << ": "
              << res.message << "\n";
    return kExitSolver;
  }

  AuditReport audit = audit_solution(inst.program, res.x);
  std::cout << render_audit_table(audit);

  std::vector<double> built;
  for (int v : inst.inv) built.push_back(res.x[static_cast<std::size_t>(v)]);
  nlohmann::json doc;
  doc["command"] = "run-benchmark";
  doc["scenario"] = l.tag;
  doc["status"] = to_string(res.status);
  doc["objective"] = res.objective;
  doc["wall_seconds"] = wall;
  doc["reserve_mw"] = reserve;
  doc["chance_headroom"] = ba.chance_headroom;
  doc["audit"] = audit_to_json(audit);
  doc["built"] = nlohmann::json::object();
  for (std::size_t i = 0; i < inst.cand_ids.size(); ++i)
    doc["built"][inst.cand_ids[i]] = built[i];
  {
    std::ofstream out(paths.result_json, std::ios::binary);
    out << doc.dump(2) << "\n";
  }
  write_expansion_csv(paths.expansion_csv,
                      summarize_expansion(l.grid, inst.cand_ids, built, l.tag));
  write_costs_csv(paths.costs_csv,
                  benchmark_cost_rows(l.grid, l.policies, inst, res.x));
  write_audit_json(paths.audit_json, audit);
  std::cout << "objective " << res.objective << ", artifacts in "
            << paths.dir.string() << "\n";
  return 0;
}

// ----------------------------------------------------------------- validate

struct ValidateArgs {
  std::string result;
  std::string state;
  std::string json_out;
  int samples = 100000;
  unsigned long long seed = 20240817ULL;
  double eta = -1.0;  // negative: take the actor policy's value
};

int cmd_validate(const InputArgs& in, const ValidateArgs& va) {
  Loaded l;
  nlohmann::json doc;
  CcSolution sol;
  double eta = va.eta;
  try {
    l = load_inputs(in);
    std::ifstream res_in(va.result);
    if (!res_in)
      throw std::runtime_error("cannot read result file " + va.result);
    doc = nlohmann::json::parse(res_in);
    nlohmann::json gbar, built;
    if (doc.contains("state")) {
      sol.state = doc["state"].get<std::string>();
      if (!va.state.empty() && va.state != sol.state)
        throw std::runtime_error("result holds state '" + sol.state +
                                 "', not '" + va.state + "'");
      if (!doc.contains("gbar"))
        throw std::runtime_error("result has no schedules to check");
      gbar = doc["gbar"];
      built = doc.value("built", nlohmann::json::object());
    } else if (doc.contains("gbar")) {
      // equilibrium result: schedules keyed by state
      if (va.state.empty())
        throw std::runtime_error(
            "equilibrium result needs --state to pick an actor");
      if (!doc["gbar"].contains(va.state))
        throw std::runtime_error("result has no schedules for state '" +
                                 va.state + "'");
      sol.state = va.state;
      gbar = doc["gbar"][va.state];
      built = doc.value("built", nlohmann::json::object())
                  .value(va.state, nlohmann::json::object());
    } else {
      throw std::runtime_error("result has no schedules to check");
    }
    for (const auto& [id, values] : gbar.items())
      sol.gbar[id] = values.get<std::vector<double>>();
    for (const auto& [id, mw] : built.items())
      sol.built_mw[id] = mw.get<double>();
    if (eta < 0.0) eta = l.policies.find(sol.state)->eta;
  } catch (const std::exception& e) {
    return fail_config(e);
  }

  CcCheckReport report;
  try {
    report = monte_carlo_cc_check(l.grid, sol, eta, va.samples, va.seed);
  } catch (const std::exception& e) {
    return fail_config(e);
  }
  std::cout << render_cc_check_table(report);
  std::filesystem::path json_path =
      va.json_out.empty()
          ? std::filesystem::path(va.result).parent_path() /
                ("cc_check_" + sol.state + ".json")
          : std::filesystem::path(va.json_out);
  write_cc_check_json(json_path, report);
  std::cout << "wrote " << json_path.string() << "\n";
  return 0;
}

// ------------------------------------------------------------------- export

struct ExportArgs {
  std::string program;  // mpec | benchmark | market
  std::string state;
  std::string lp_out = "program.lp";
  int day = 0;
  int bits = 10;
  double price_min = 0.0;
  double price_cap = -1.0;
  double reserve = -1.0;
  double reserve_eta = 0.03;
};

int cmd_export(const InputArgs& in, const ExportArgs& xa) {
  Loaded l;
  try {
    l = load_inputs(in);
    if ((xa.program == "mpec" || xa.program == "market") && xa.state.empty())
      throw std::runtime_error("--state is required for " + xa.program);
    if (!xa.state.empty()) {
      bool known = false;
      for (const auto& s : l.grid.states) known |= s == xa.state;
      if (!known) throw std::runtime_error("unknown state '" + xa.state + "'");
    }
  } catch (const std::exception& e) {
    return fail_config(e);
  }

  ConicProgram program;
  try {
    if (xa.program == "mpec") {
      MpecOptions mo;
      mo.price_bits = xa.bits;
      mo.price_min = xa.price_min;
      mo.price_cap = xa.price_cap;
      program = build_mpec(l.grid, l.policies, xa.state, {}, mo).program;
    } else if (xa.program == "benchmark") {
      double reserve = xa.reserve;
      if (reserve < 0.0)
        reserve = default_reserve_requirement(l.grid, xa.reserve_eta);
      program = build_benchmark(l.grid, l.policies, reserve).program;
    } else {
      // market clearing from the actor's viewpoint with its controllables
      // offering full capacity
      std::map<std::string, std::vector<double>> gbar;
      for (const auto& g : l.grid.existing_gens) {
        const auto& node =
            l.grid.nodes[static_cast<std::size_t>(l.grid.node_index(g.node))];
        if (node.state == xa.state && g.kind == GenKind::Controllable)
          gbar[g.id] =
              std::vector<double>(static_cast<std::size_t>(l.grid.hours),
                                  g.g_max);
      }
      DayOffers offers = build_offers(l.grid, xa.state, xa.day, gbar);
      program = build_market_lp(l.grid, offers).lp;
    }
  } catch (const std::invalid_argument& e) {
    return fail_config(e);
  } catch (const std::runtime_error& e) {
    return fail_infeasible(e);
  }

  write_lp_file(program, xa.lp_out);
  std::cout << "wrote " << program.num_vars() << " vars, "
            << program.num_rows() << " rows to " << xa.lp_out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "chance-constrained expansion planning over a DC wholesale market"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "run configuration file, TOML or JSON; flags take precedence");
  app.config_formatter(std::make_shared<FlexibleConfig>());

  InputArgs in_mpec, in_epec, in_bench, in_val, in_exp;
  MpecArgs ma;
  EpecArgs ea;
  BenchArgs ba;
  ValidateArgs va;
  ExportArgs xa;

  CLI::App* mpec = app.add_subcommand(
      "run-mpec", "solve one state's strategic planning problem");
  add_input_options(mpec, in_mpec);
  mpec->add_option("--state", ma.state, "acting state")->required();
  mpec->add_option("--backend", ma.backend,
                   "internal, or lp-file to round-trip through "
                   "CCEPEC_SOLVER_CMD")
      ->check(CLI::IsMember({"internal", "lp-file"}));
  mpec->add_option("--bits", ma.bits, "price discretization bits");
  mpec->add_option("--price-min", ma.price_min, "price grid floor");
  mpec->add_option("--price-cap", ma.price_cap,
                   "price grid cap (negative derives from costs)");
  mpec->add_option("--rel-gap", ma.rel_gap, "relative optimality gap");
  mpec->add_flag("--verbose", ma.verbose, "stream solver progress");

  CLI::App* epec = app.add_subcommand(
      "run-epec", "hedge all states to a market equilibrium");
  add_input_options(epec, in_epec);
  epec->add_option("--eps", ea.eps, "consensus tolerance");
  epec->add_option("--rho-g", ea.rho_g, "dispatch penalty weight");
  epec->add_option("--rho-lambda", ea.rho_lambda, "price penalty weight");
  epec->add_option("--max-iter", ea.max_iter, "round budget");
  epec->add_option("--jobs", ea.jobs,
                   "parallel actor solves (0 = hardware parallelism)");
  epec->add_option("--bits", ea.bits, "price discretization bits");
  epec->add_option("--price-min", ea.price_min, "price grid floor");
  epec->add_option("--price-cap", ea.price_cap,
                   "price grid cap (negative derives from costs)");
  epec->add_option("--breakpoints", ea.breakpoints,
                   "segments of the piecewise penalty");
  epec->add_option("--rel-gap", ea.rel_gap, "per-subproblem relative gap");
  epec->add_flag("--verbose", ea.verbose, "stream round progress");

  CLI::App* bench = app.add_subcommand(
      "run-benchmark", "centralized least-cost planning baseline");
  add_input_options(bench, in_bench);
  bench->add_option("--reserve", ba.reserve,
                    "flat reserve requirement in MW (negative: derive)");
  bench->add_option("--reserve-eta", ba.reserve_eta,
                    "tolerance for the derived reserve level");
  bench->add_flag("--chance-headroom", ba.chance_headroom,
                  "add the chance-constraint headroom cones");
  bench->add_option("--rel-gap", ba.rel_gap, "relative optimality gap");
  bench->add_flag("--verbose", ba.verbose, "stream solver progress");

  CLI::App* val = app.add_subcommand(
      "validate", "Monte Carlo chance-constraint check of a result");
  add_input_options(val, in_val);
  val->add_option("--result", va.result, "result.json from a run")->required();
  val->add_option("--state", va.state, "actor to check (equilibrium results)");
  val->add_option("--samples", va.samples, "Monte Carlo draws per day");
  val->add_option("--seed", va.seed, "sampling seed");
  val->add_option("--eta", va.eta,
                  "tolerance to check against (negative: policy value)");
  val->add_option("--json", va.json_out, "violation report path");

  CLI::App* exp = app.add_subcommand("export", "dump a built program as LP");
  add_input_options(exp, in_exp);
  exp->add_option("--program", xa.program, "mpec, benchmark or market")
      ->required()
      ->check(CLI::IsMember({"mpec", "benchmark", "market"}));
  exp->add_option("--state", xa.state, "acting state (mpec and market)");
  exp->add_option("--lp", xa.lp_out, "output LP path");
  exp->add_option("--day", xa.day, "representative day (market)");
  exp->add_option("--bits", xa.bits, "price discretization bits (mpec)");
  exp->add_option("--price-min", xa.price_min, "price grid floor (mpec)");
  exp->add_option("--price-cap", xa.price_cap, "price grid cap (mpec)");
  exp->add_option("--reserve", xa.reserve, "flat reserve MW (benchmark)");
  exp->add_option("--reserve-eta", xa.reserve_eta,
                  "derived reserve tolerance (benchmark)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (mpec->parsed()) return cmd_run_mpec(in_mpec, ma);
    if (epec->parsed()) return cmd_run_epec(in_epec, ea);
    if (bench->parsed()) return cmd_run_benchmark(in_bench, ba);
    if (val->parsed()) return cmd_validate(in_val, va);
    if (exp->parsed()) return cmd_export(in_exp, xa);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitConfig;
}
