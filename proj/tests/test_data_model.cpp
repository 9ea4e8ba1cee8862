#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

#include "ccepec/data_model.hpp"
#include "doctest.h"

using namespace ccepec;
namespace fs = std::filesystem;

namespace {

// Writes a known-good toy grid as a CSV directory, with optional per-file
// overrides so each validation test can break exactly one thing.
fs::path write_toy_dir(const std::string& tag,
                       const std::map<std::string, std::string>& overrides = {}) {
  std::map<std::string, std::string> files = {
      {"nodes.csv", "node,state\nN1,A\nN2,A\nN3,B\n"},
      {"lines.csv",
       "line,from,to,reactance_ohm,capacity_mw\nL1,N1,N2,1,100\nL2,N2,N3,2,50\n"},
      {"generators.csv",
       "id,node,kind,fuel,g_min_mw,g_max_mw,ramp_down_mw,ramp_up_mw,"
       "cost_usd_per_mwh,alpha,sigma,upsilon,reserve_mw\n"
       "G1,N1,controllable,ng,0,100,-50,50,20,,0,0,0\n"
       "G2,N2,controllable,coal,10,80,,,25,,0,0,5\n"
       "W1,N3,renewable,wind,0,60,,,1.1,0,0.1,-0.02,0\n"},
      {"candidates.csv",
       "id,node,kind,fuel,g_min_mw,g_max_mw,ramp_down_mw,ramp_up_mw,"
       "cost_usd_per_mwh,alpha,sigma,upsilon,reserve_mw,"
       "capital_cost_usd_per_mw,min_output_factor\n"
       "C1,N3,renewable,solar,0,500,,,0.4,,0.2,0,0,2434000,0.1\n"},
      {"repdays.csv", "day,weight\nd1,0.75\nd2,0.25\n"},
      {"demand.csv",
       "node,day,hour,demand_mw\n"
       "N1,d1,0,50\nN2,d1,0,30\nN3,d1,0,20\n"
       "N1,d1,1,60\nN2,d1,1,35\nN3,d1,1,25\n"
       "N1,d2,0,40\nN2,d2,0,25\nN3,d2,0,15\n"
       "N1,d2,1,45\nN2,d2,1,28\nN3,d2,1,18\n"},
      {"forecast.csv",
       "gen,day,hour,factor\n"
       "W1,d1,0,0.5\nW1,d1,1,0.4\nW1,d2,0,0.3\nW1,d2,1,0.6\n"
       "C1,d1,0,0.8\nC1,d1,1,0.2\nC1,d2,0,0.7\nC1,d2,1,0.1\n"},
  };
  for (const auto& [name, body] : overrides) files[name] = body;
  fs::path dir = fs::temp_directory_path() / "ccepec_dm" / tag;
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (const auto& [name, body] : files) {
    if (body.empty()) continue;  // override with "" drops the file
    std::ofstream(dir / name) << body;
  }
  return dir;
}

std::string isone_dir() { return std::string(CCEPEC_SOURCE_DIR) + "/data/isone8"; }

double fuel_capacity(const GridModel& grid, const std::string& state,
                     const std::string& fuel) {
  double sum = 0.0;
  for (const auto& g : grid.existing_gens) {
    int n = grid.node_index(g.node);
    if (g.fuel == fuel && grid.nodes[n].state == state) sum += g.g_max;
  }
  return sum;
}

}  // namespace

TEST_CASE("daily annuity proration") {
  // Oracle: 895000 * 0.05 / (1 - 1.05^-10) / 365, computed independently.
  CHECK(prorate_capital_cost(895000, 10, 0.05) ==
        doctest::Approx(317.55231395639385).epsilon(1e-12));
  CHECK(prorate_capital_cost(895000, 10, 0.0) ==
        doctest::Approx(895000.0 / 10.0 / 365.0).epsilon(1e-15));
  CHECK(prorate_capital_cost(0, 10, 0.05) == 0.0);

  SUBCASE("linear in cost") {
    double one = prorate_capital_cost(1.0, 7, 0.03);
    CHECK(prorate_capital_cost(123456.0, 7, 0.03) ==
          doctest::Approx(123456.0 * one).epsilon(1e-12));
  }
  SUBCASE("monotone increasing in rate") {
    double r0 = prorate_capital_cost(1e6, 10, 0.0);
    double r5 = prorate_capital_cost(1e6, 10, 0.05);
    double r9 = prorate_capital_cost(1e6, 10, 0.09);
    CHECK(r0 < r5);
    CHECK(r5 < r9);
  }
  SUBCASE("rejects bad inputs") {
    CHECK_THROWS_AS(prorate_capital_cost(1e6, 0, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(prorate_capital_cost(1e6, 10, -0.01), std::invalid_argument);
  }
}

TEST_CASE("toy grid loads with defaults filled") {
  GridModel grid = load_grid(write_toy_dir("good").string());

  CHECK(grid.nodes.size() == 3);
  CHECK(grid.states == std::vector<std::string>{"A", "B"});
  CHECK(grid.hours == 2);
  CHECK(grid.lines[1].reactance == 2.0);
  CHECK(grid.demand_at(grid.node_index("N2"), 1, 0) == 35.0);
  CHECK(grid.demand_at(grid.node_index("N3"), 0, 1) == 15.0);

  const Generator& g1 = grid.existing_gens[0];
  CHECK(g1.id == "G1");
  CHECK(g1.ramp_down == -50.0);
  // Empty alpha cells split the recourse evenly across state A's two units.
  CHECK(g1.alpha == doctest::Approx(0.5));
  CHECK(grid.existing_gens[1].alpha == doctest::Approx(0.5));
  // Empty ramp cells mean unconstrained.
  CHECK(std::isinf(grid.existing_gens[1].ramp_down));
  CHECK(std::isinf(grid.existing_gens[1].ramp_up));

  const Generator& w1 = grid.existing_gens[2];
  CHECK(w1.kind == GenKind::Renewable);
  CHECK(w1.upsilon == -0.02);
  CHECK(grid.forecast_factor(w1, 1, 1) == 0.6);

  const CandidateGenerator& c1 = grid.candidate_gens[0];
  CHECK(c1.alpha == 0.0);
  CHECK(c1.capital_cost == 2434000.0);
  CHECK(c1.min_output_factor == 0.1);
  CHECK(grid.forecast_factor(c1, 0, 0) == 0.8);

  // Controllables without a forecast series are always fully available.
  CHECK(grid.forecast_factor(g1, 1, 1) == 1.0);
  CHECK(grid.nodes_of_state("A") == std::vector<int>{0, 1});
}

TEST_CASE("save and reload is a structural identity") {
  GridModel grid = load_grid(write_toy_dir("roundtrip").string());
  fs::path out = fs::temp_directory_path() / "ccepec_dm" / "roundtrip_out";
  fs::remove_all(out);
  save_grid(grid, out.string());
  GridModel again = load_grid(out.string());
  CHECK(grids_equal(grid, again));

  // A retired grid round-trips too (retired ids live in retired.csv).
  RetirementScenario sc{"drop_w1", {"W1"}};
  GridModel reduced = apply_retirement(grid, sc);
  fs::path out2 = fs::temp_directory_path() / "ccepec_dm" / "roundtrip_ret";
  fs::remove_all(out2);
  save_grid(reduced, out2.string());
  CHECK(grids_equal(reduced, load_grid(out2.string())));
  CHECK_FALSE(grids_equal(grid, reduced));
}

TEST_CASE("single JSON document loads the same grid") {
  GridModel from_csv = load_grid(write_toy_dir("json_ref").string());
  fs::path dir = fs::temp_directory_path() / "ccepec_dm";
  fs::create_directories(dir);
  fs::path jpath = dir / "toy_grid.json";
  std::ofstream(jpath) << R"({
    "nodes": [{"id": "N1", "state": "A"}, {"id": "N2", "state": "A"},
              {"id": "N3", "state": "B"}],
    "lines": [
      {"id": "L1", "from": "N1", "to": "N2", "reactance_ohm": 1, "capacity_mw": 100},
      {"id": "L2", "from": "N2", "to": "N3", "reactance_ohm": 2, "capacity_mw": 50}],
    "generators": [
      {"id": "G1", "node": "N1", "kind": "controllable", "fuel": "ng",
       "g_min_mw": 0, "g_max_mw": 100, "ramp_down_mw": -50, "ramp_up_mw": 50,
       "cost_usd_per_mwh": 20},
      {"id": "G2", "node": "N2", "kind": "controllable", "fuel": "coal",
       "g_min_mw": 10, "g_max_mw": 80, "cost_usd_per_mwh": 25, "reserve_mw": 5},
      {"id": "W1", "node": "N3", "kind": "renewable", "fuel": "wind",
       "g_min_mw": 0, "g_max_mw": 60, "cost_usd_per_mwh": 1.1, "alpha": 0,
       "sigma": 0.1, "upsilon": -0.02}],
    "candidates": [
      {"id": "C1", "node": "N3", "kind": "renewable", "fuel": "solar",
       "g_min_mw": 0, "g_max_mw": 500, "cost_usd_per_mwh": 0.4, "sigma": 0.2,
       "capital_cost_usd_per_mw": 2434000, "min_output_factor": 0.1}],
    "repdays": [{"id": "d1", "weight": 0.75}, {"id": "d2", "weight": 0.25}],
    "demand": [
      {"node": "N1", "day": "d1", "hour": 0, "mw": 50},
      {"node": "N2", "day": "d1", "hour": 0, "mw": 30},
      {"node": "N3", "day": "d1", "hour": 0, "mw": 20},
      {"node": "N1", "day": "d1", "hour": 1, "mw": 60},
      {"node": "N2", "day": "d1", "hour": 1, "mw": 35},
      {"node": "N3", "day": "d1", "hour": 1, "mw": 25},
      {"node": "N1", "day": "d2", "hour": 0, "mw": 40},
      {"node": "N2", "day": "d2", "hour": 0, "mw": 25},
      {"node": "N3", "day": "d2", "hour": 0, "mw": 15},
      {"node": "N1", "day": "d2", "hour": 1, "mw": 45},
      {"node": "N2", "day": "d2", "hour": 1, "mw": 28},
      {"node": "N3", "day": "d2", "hour": 1, "mw": 18}],
    "forecast": [
      {"gen": "W1", "day": "d1", "hour": 0, "factor": 0.5},
      {"gen": "W1", "day": "d1", "hour": 1, "factor": 0.4},
      {"gen": "W1", "day": "d2", "hour": 0, "factor": 0.3},
      {"gen": "W1", "day": "d2", "hour": 1, "factor": 0.6},
      {"gen": "C1", "day": "d1", "hour": 0, "factor": 0.8},
      {"gen": "C1", "day": "d1", "hour": 1, "factor": 0.2},
      {"gen": "C1", "day": "d2", "hour": 0, "factor": 0.7},
      {"gen": "C1", "day": "d2", "hour": 1, "factor": 0.1}]
  })";
  GridModel from_json = load_grid(jpath.string());
  CHECK(grids_equal(from_csv, from_json));
}

TEST_CASE("load_grid rejects broken inputs") {
  auto load_broken = [](const std::string& tag,
                        const std::map<std::string, std::string>& ov) {
    return load_grid(write_toy_dir(tag, ov).string());
  };

  SUBCASE("day weights must sum to one") {
    CHECK_THROWS_WITH_AS(
        load_broken("badsum", {{"repdays.csv", "day,weight\nd1,0.5\nd2,0.6\n"}}),
        doctest::Contains("weights sum to 1.1"), std::runtime_error);
  }
  SUBCASE("line endpoint must exist") {
    CHECK_THROWS_WITH_AS(
        load_broken("badline",
                    {{"lines.csv", "line,from,to,reactance_ohm,capacity_mw\n"
                                   "L1,N1,N9,1,100\n"}}),
        doctest::Contains("unknown node 'N9'"), std::runtime_error);
  }
  SUBCASE("renewables cannot participate in recourse") {
    CHECK_THROWS_WITH_AS(
        load_broken("badalpha",
                    {{"generators.csv",
                      "id,node,kind,fuel,g_min_mw,g_max_mw,ramp_down_mw,"
                      "ramp_up_mw,cost_usd_per_mwh,alpha,sigma,upsilon,reserve_mw\n"
                      "W1,N3,renewable,wind,0,60,,,1.1,0.5,0.1,0,0\n"},
                     {"forecast.csv", ""}}),
        doctest::Contains("participation factor"), std::runtime_error);
  }
  SUBCASE("controllables cannot carry forecast noise") {
    CHECK_THROWS_WITH_AS(
        load_broken("badsigma",
                    {{"generators.csv",
                      "id,node,kind,fuel,g_min_mw,g_max_mw,ramp_down_mw,"
                      "ramp_up_mw,cost_usd_per_mwh,alpha,sigma,upsilon,reserve_mw\n"
                      "G1,N1,controllable,ng,0,100,,,20,,0.2,0,0\n"},
                     {"forecast.csv", ""}}),
        doctest::Contains("forecast error statistics"), std::runtime_error);
  }
  SUBCASE("capacity bounds must be ordered") {
    CHECK_THROWS_WITH_AS(
        load_broken("badbounds",
                    {{"generators.csv",
                      "id,node,kind,fuel,g_min_mw,g_max_mw,ramp_down_mw,"
                      "ramp_up_mw,cost_usd_per_mwh,alpha,sigma,upsilon,reserve_mw\n"
                      "G1,N1,controllable,ng,90,80,,,20,,0,0,0\n"},
                     {"forecast.csv", ""}}),
        doctest::Contains("g_min <= g_max"), std::runtime_error);
  }
  SUBCASE("missing column is named") {
    CHECK_THROWS_WITH_AS(
        load_broken("badcols", {{"lines.csv", "line,from,to,reactance_ohm\n"
                                              "L1,N1,N2,1\n"}}),
        doctest::Contains("missing column 'capacity_mw'"), std::runtime_error);
  }
  SUBCASE("non-numeric field is located") {
    CHECK_THROWS_WITH_AS(
        load_broken("badnum", {{"repdays.csv", "day,weight\nd1,lots\nd2,0.25\n"}}),
        doctest::Contains("not a number"), std::runtime_error);
  }
  SUBCASE("demand table must be complete") {
    CHECK_THROWS_WITH_AS(
        load_broken("baddem", {{"demand.csv", "node,day,hour,demand_mw\n"
                                              "N1,d1,0,50\n"}}),
        doctest::Contains("no entry for node"), std::runtime_error);
  }
  SUBCASE("forecast rows must reference known units") {
    CHECK_THROWS_WITH_AS(
        load_broken("badfc", {{"forecast.csv", "gen,day,hour,factor\n"
                                               "NOPE,d1,0,0.5\n"}}),
        doctest::Contains("unknown generator 'NOPE'"), std::runtime_error);
  }
  SUBCASE("partial availability series is rejected") {
    CHECK_THROWS_WITH_AS(
        load_broken("partfc", {{"forecast.csv", "gen,day,hour,factor\n"
                                                "W1,d1,0,0.5\n"}}),
        doctest::Contains("partial availability"), std::runtime_error);
  }
}

TEST_CASE("bundled 8-zone system matches its published sources") {
  GridModel grid = load_grid(isone_dir());

  SUBCASE("network") {
    REQUIRE(grid.nodes.size() == 8);
    CHECK(grid.states ==
          std::vector<std::string>{"ME", "NH", "VT", "MA", "CT", "RI"});
    REQUIRE(grid.lines.size() == 12);
    CHECK(grid.lines[0].id == "1");
    CHECK(grid.lines[0].from == "ME");
    CHECK(grid.lines[0].to == "NH");
    CHECK(grid.lines[0].reactance == 54.05);
    CHECK(grid.lines[0].capacity == 1200.0);
  }

  SUBCASE("fleet") {
    int ctrl = 0, res = 0;
    for (const auto& g : grid.existing_gens)
      (g.kind == GenKind::Controllable ? ctrl : res) += 1;
    CHECK(ctrl == 76);
    CHECK(res == 16);
    CHECK(grid.candidate_gens.size() == 24);

    CHECK(fuel_capacity(grid, "ME", "wind") == doctest::Approx(221.2));
    CHECK(fuel_capacity(grid, "RI", "coal") == doctest::Approx(1099.5));
    CHECK(fuel_capacity(grid, "MA", "solar") == doctest::Approx(1871.26));
    CHECK(fuel_capacity(grid, "CT", "nuclear") == doctest::Approx(2116.0));

    // Wind carries 0.1 normalized stdev, solar 0.2, and recourse weights sum
    // to one inside every state.
    for (const auto& g : grid.existing_gens) {
      if (g.fuel == "wind") CHECK(g.sigma == 0.1);
      if (g.fuel == "solar") CHECK(g.sigma == 0.2);
    }
    for (const auto& s : grid.states) {
      double asum = 0.0;
      for (const auto& g : grid.existing_gens)
        if (grid.nodes[grid.node_index(g.node)].state == s &&
            g.kind == GenKind::Controllable)
          asum += g.alpha;
      CHECK(asum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  SUBCASE("demand has the published average peak") {
    CHECK(grid.hours == 24);
    REQUIRE(grid.rep_days.size() == 2);
    double avg_peak = 0.0;
    for (size_t e = 0; e < grid.rep_days.size(); ++e) {
      double peak = 0.0;
      for (int t = 0; t < grid.hours; ++t) {
        double tot = 0.0;
        for (size_t n = 0; n < grid.nodes.size(); ++n)
          tot += grid.demand_at(static_cast<int>(n), t, static_cast<int>(e));
        peak = std::max(peak, tot);
      }
      avg_peak += grid.rep_days[e].weight * peak;
    }
    CHECK(avg_peak == doctest::Approx(10243.0).epsilon(1e-9));
  }

  SUBCASE("renewables carry full availability series") {
    for (const auto& g : grid.existing_gens)
      if (g.kind == GenKind::Renewable)
        CHECK(g.availability.size() == static_cast<size_t>(grid.hours) * 2);
    const CandidateGenerator* wind = nullptr;
    for (const auto& c : grid.candidate_gens)
      if (c.id == "CAND_WIND_ME") wind = &c;
    REQUIRE(wind != nullptr);
    CHECK(wind->capital_cost == 1630000.0);
    CHECK(wind->cost == 1.1);
    CHECK(wind->sigma == 0.1);
    CHECK(grid.forecast_factor(*wind, 0, 0) > 0.0);
  }

  SUBCASE("big grid round-trips through save_grid") {
    fs::path out = fs::temp_directory_path() / "ccepec_dm" / "isone_out";
    fs::remove_all(out);
    save_grid(grid, out.string());
    CHECK(grids_equal(grid, load_grid(out.string())));
  }
}

TEST_CASE("policies and retirement scenarios") {
  GridModel grid = load_grid(isone_dir());
  PolicySet ps = load_policies(isone_dir() + "/policy.json");

  REQUIRE(ps.actors.size() == 6);
  CHECK(ps.horizon_years == 10.0);
  CHECK(ps.discount_rate == 0.05);
  const ActorPolicy* me = ps.find("ME");
  REQUIRE(me != nullptr);
  CHECK(me->rps_fraction == 0.80);
  CHECK(me->eta == 0.03);
  CHECK(me->energy_tariff == 3.0);
  CHECK(me->capacity_tariff == 300.0);
  CHECK(ps.find("TX") == nullptr);

  SUBCASE("basecase is the identity") {
    RetirementScenario base = resolve_retirement(grid, ps, "basecase");
    CHECK(base.removed.empty());
    CHECK(grids_equal(grid, apply_retirement(grid, base)));
  }

  SUBCASE("coal retirement removes the coal fleet") {
    RetirementScenario coal = resolve_retirement(grid, ps, "coal");
    GridModel reduced = apply_retirement(grid, coal);
    CHECK(fuel_capacity(grid, "RI", "coal") == doctest::Approx(1099.5));
    CHECK(fuel_capacity(reduced, "RI", "coal") == 0.0);
    CHECK(fuel_capacity(reduced, "RI", "ng") ==
          doctest::Approx(fuel_capacity(grid, "RI", "ng")));

    // Reapplying the same scenario is a no-op, not an error.
    CHECK(grids_equal(reduced, apply_retirement(reduced, coal)));
  }

  SUBCASE("coal and nuclear retirement") {
    RetirementScenario both = resolve_retirement(grid, ps, "coal_nuclear");
    GridModel reduced = apply_retirement(grid, both);
    int ctrl = 0;
    for (const auto& g : reduced.existing_gens)
      if (g.kind == GenKind::Controllable) ++ctrl;
    // 20 coal and 16 nuclear units leave the original 76.
    CHECK(ctrl == 40);
  }

  SUBCASE("unknown ids are rejected") {
    CHECK_THROWS_WITH_AS(apply_retirement(grid, {"bogus", {"ZZZ"}}),
                         doctest::Contains("unknown generator 'ZZZ'"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(resolve_retirement(grid, ps, "gas_rush"),
                         doctest::Contains("unknown retirement scenario"),
                         std::runtime_error);
  }

  SUBCASE("policy validation") {
    fs::path dir = fs::temp_directory_path() / "ccepec_dm";
    fs::create_directories(dir);
    fs::path bad = dir / "bad_policy.json";
    std::ofstream(bad) << R"({"actors": {"ME": {"eta": 0.6}}})";
    CHECK_THROWS_WITH_AS(load_policies(bad.string()),
                         doctest::Contains("eta"), std::runtime_error);
    fs::path bad2 = dir / "bad_policy2.json";
    std::ofstream(bad2) << R"({"actors": {"ME": {"rps_fraction": 1.2}}})";
    CHECK_THROWS_WITH_AS(load_policies(bad2.string()),
                         doctest::Contains("rps_fraction"), std::runtime_error);
  }
}
