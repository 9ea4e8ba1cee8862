#pragma once

#include <limits>
#include <string>
#include <vector>

namespace ccepec {

struct NetworkNode {
  std::string id;     // zone code (ME, NH, ...)
  std::string state;  // owning actor; several zones may share one state
};

struct Line {
  std::string id;
  std::string from;        // sending node
  std::string to;          // receiving node
  double reactance = 0.0;  // ohm, must be positive
  double capacity = 0.0;   // MW, symmetric thermal limit
};

enum class GenKind { Controllable, Renewable };

// One generation unit. Renewables carry normalized forecast-error statistics
// (sigma, upsilon, both relative to capacity); controllables instead carry a
// recourse participation factor alpha that says what share of the realized
// renewable forecast error they absorb in real time. The availability series
// scales the unit's offered capacity per hour and representative day; an
// empty series means the unit is always available at full capacity.
struct Generator {
  std::string id;
  std::string node;
  GenKind kind = GenKind::Controllable;
  std::string fuel;        // free-form tag (coal, wind, ...); retirements key on it
  double g_min = 0.0;  // MW
  double g_max = 0.0;  // MW
  // MW/h bounds on the hourly change of cleared output; infinite = unlimited.
  double ramp_down = -std::numeric_limits<double>::infinity();
  double ramp_up = std::numeric_limits<double>::infinity();
  double cost = 0.0;       // $/MWh incremental cost
  double alpha = 0.0;      // recourse participation, controllables only
  double sigma = 0.0;      // forecast error stdev / capacity, renewables only
  double upsilon = 0.0;    // forecast error mean / capacity, renewables only
  double reserve = 0.0;    // MW withheld when offered into rival states' markets
  std::vector<double> availability;  // day-major [e*hours + t]; empty = 1.0
};

struct CandidateGenerator : Generator {
  double capital_cost = 0.0;       // $/MW overnight; models prorate it daily
  double min_output_factor = 0.0;  // fraction of built capacity that must run
};

struct RepDay {
  std::string id;
  double weight = 0.0;  // probability; weights sum to 1 across days
};

// Immutable after load; safe to share read-only between concurrent solves.
struct GridModel {
  std::vector<NetworkNode> nodes;
  std::vector<Line> lines;
  std::vector<Generator> existing_gens;
  std::vector<CandidateGenerator> candidate_gens;
  std::vector<std::string> states;  // unique node states, first-appearance order
  std::vector<RepDay> rep_days;
  int hours = 0;               // time steps per representative day
  std::vector<double> demand;  // MW, indexed [(e*hours + t)*nodes.size() + n]
  std::vector<std::string> retired;  // unit ids removed so far, sorted

  int node_index(const std::string& id) const;   // -1 if unknown
  int state_index(const std::string& id) const;  // -1 if unknown
  double demand_at(int node, int t, int e) const;
  double forecast_factor(const Generator& g, int t, int e) const;
  std::vector<int> nodes_of_state(const std::string& state) const;
};

// Per-state planner inputs. Budgets are daily because investment costs enter
// the models as daily annuities; the capacity tariff is quoted in $/kW as
// published and converted/prorated where it is used.
struct ActorPolicy {
  std::string state;
  double rps_fraction = 0.0;     // share of served energy that must be renewable
  // infinity means unbudgeted and suppresses the corresponding row
  double capital_budget = std::numeric_limits<double>::infinity();
  double policy_budget = std::numeric_limits<double>::infinity();
  double energy_tariff = 0.0;    // $/MWh paid per renewable MWh produced
  double capacity_tariff = 0.0;  // $/kW paid on newly built renewable capacity
  double retail_price = 0.0;     // $/MWh collected from served demand
  double interface_limit = 0.0;  // MW bound on net purchases at each owned node
  double eta = 0.03;             // chance-constraint tolerance, in (0, 0.5)
};

struct RetirementScenario {
  std::string name;
  std::vector<std::string> removed;  // unit ids
};

// A policy file bundles every actor plus named retirement recipes. Recipes may
// list explicit unit ids, fuel tags, or both; fuels are expanded against a
// concrete grid by resolve_retirement.
struct PolicySet {
  double horizon_years = 10.0;
  double discount_rate = 0.05;
  std::vector<ActorPolicy> actors;

  struct Retirement {
    std::string name;
    std::vector<std::string> ids;
    std::vector<std::string> fuels;
  };
  std::vector<Retirement> retirements;

  const ActorPolicy* find(const std::string& state) const;
};

// Reads a grid from either a directory of CSV files (nodes.csv, lines.csv,
// generators.csv, candidates.csv, repdays.csv, demand.csv, forecast.csv) or a
// single JSON document with the equivalent content. Validates every
// cross-reference and invariant; throws std::runtime_error naming the file,
// line, and field on any violation.
GridModel load_grid(const std::string& path);

// Writes the CSV-directory form of the grid; load_grid(save_grid(...)) is a
// structural identity.
void save_grid(const GridModel& grid, const std::string& dir);

bool grids_equal(const GridModel& a, const GridModel& b);

PolicySet load_policies(const std::string& path);

// Expands a named retirement recipe from the policy file against a grid.
RetirementScenario resolve_retirement(const GridModel& grid,
                                      const PolicySet& policies,
                                      const std::string& name);

// Returns a copy of the grid without the retired units. Ids already retired
// are accepted and skipped, so reapplying a scenario is a no-op; ids that
// never existed are an error.
GridModel apply_retirement(const GridModel& grid,
                           const RetirementScenario& scenario);

// Daily capital-recovery annuity: cost * r / (1 - (1+r)^-years) / 365, with
// the zero-rate limit cost / years / 365.
double prorate_capital_cost(double cost_per_mw, int years, double rate);

}  // namespace ccepec
