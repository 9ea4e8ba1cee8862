#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccepec/benchmark.hpp"
#include "ccepec/solver/solve.hpp"
#include "doctest.h"

using namespace ccepec;

namespace {

// One zone, one thermal unit, one hour: demand 50 MW against 100 MW at
// $20/MWh and retail 100. Welfare is 100*50 - 20*50 = 4000. The wind
// candidate only costs money here (no mandate), so it stays on the shelf.
GridModel one_zone_grid() {
  GridModel g;
  g.nodes = {{"N1", "A"}};
  g.states = {"A"};
  g.rep_days = {{"d0", 1.0}};
  g.hours = 1;
  Generator g1;
  g1.id = "G1";
  g1.node = "N1";
  g1.kind = GenKind::Controllable;
  g1.fuel = "gas";
  g1.g_max = 100.0;
  g1.cost = 20.0;
  g.existing_gens = {g1};
  CandidateGenerator w;
  w.id = "W1";
  w.node = "N1";
  w.kind = GenKind::Renewable;
  w.fuel = "wind";
  w.g_max = 50.0;
  w.sigma = 0.05;
  w.capital_cost = 895000.0;
  g.candidate_gens = {w};
  g.demand = {50.0};
  return g;
}

// Two single-node states joined by an uncongested line. Each state carries a
// renewable mandate and a wind candidate at 40% availability, so required
// capacity follows share * energy / (availability * hours) exactly: 25 MW
// for A (20% of 100 MWh) and 30 MW for B (30% of 80 MWh).
GridModel mandate_grid() {
  GridModel g;
  g.nodes = {{"N1", "A"}, {"N2", "B"}};
  g.states = {"A", "B"};
  g.lines = {{"L1", "N1", "N2", 1.0, 100.0}};
  g.rep_days = {{"d0", 1.0}};
  g.hours = 2;
  Generator g1;
  g1.id = "G1";
  g1.node = "N1";
  g1.kind = GenKind::Controllable;
  g1.fuel = "gas";
  g1.g_max = 200.0;
  g1.cost = 20.0;
  Generator g2;
  g2.id = "G2";
  g2.node = "N2";
  g2.kind = GenKind::Controllable;
  g2.fuel = "oil";
  g2.g_max = 200.0;
  g2.cost = 25.0;
  g.existing_gens = {g1, g2};
  CandidateGenerator wa;
  wa.id = "WA";
  wa.node = "N1";
  wa.kind = GenKind::Renewable;
  wa.fuel = "wind";
  wa.g_max = 1000.0;
  wa.sigma = 0.05;
  wa.capital_cost = 895000.0;
  wa.availability = {0.4, 0.4};
  CandidateGenerator wb = wa;
  wb.id = "WB";
  wb.node = "N2";
  g.candidate_gens = {wa, wb};
  g.demand = {50.0, 40.0, 50.0, 40.0};  // (t, node) major: t0 N1 N2, t1 N1 N2
  return g;
}

PolicySet policies_for(std::vector<ActorPolicy> actors) {
  PolicySet ps;
  ps.actors = std::move(actors);
  return ps;
}

ActorPolicy plain_actor(const std::string& state, double retail,
                        double rps = 0.0) {
  ActorPolicy a;
  a.state = state;
  a.retail_price = retail;
  a.rps_fraction = rps;
  return a;
}

int find_row(const ConicProgram& p, const std::string& name) {
  for (int r = 0; r < p.num_rows(); ++r)
    if (p.rows[r].name == name) return r;
  return -1;
}

}  // namespace

TEST_CASE("single zone clears at retail minus fuel") {
  GridModel g = one_zone_grid();
  PolicySet ps = policies_for({plain_actor("A", 100.0)});
  BenchmarkInstance inst = build_benchmark(g, ps, 0.0);
  CHECK(inst.program.validate() == "");
  CHECK(inst.program.is_pure_lp());
  CHECK(inst.unit_ids == std::vector<std::string>{"G1", "W1"});
  CHECK(inst.cand_ids == std::vector<std::string>{"W1"});
  CHECK(inst.r0[0] >= 0);
  CHECK(inst.r0[1] == -1);  // renewables hold no reserve

  SolveResult res = solve_lp(inst.program);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(res.objective == doctest::Approx(4000.0).epsilon(1e-9));
  CHECK(res.x[inst.inv[0]] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(res.x[inst.g_var(0, 0, 0)] == doctest::Approx(50.0).epsilon(1e-9));

  // the mandate row is emitted even at a zero requirement
  CHECK(find_row(inst.program, "rps_A_d0") >= 0);
  // unbudgeted states carry no budget rows
  CHECK(find_row(inst.program, "cap_budget_A") == -1);
  CHECK(find_row(inst.program, "pol_budget_A_d0") == -1);
}

TEST_CASE("renewable mandates size investment to the closed form") {
  GridModel g = mandate_grid();
  PolicySet ps = policies_for(
      {plain_actor("A", 90.0, 0.2), plain_actor("B", 90.0, 0.3)});
  BenchmarkInstance inst = build_benchmark(g, ps, 0.0);
  REQUIRE(inst.program.validate() == "");
  SolveResult res = solve_lp(inst.program);
  REQUIRE(res.status == SolveStatus::Optimal);

  CHECK(res.x[inst.inv[0]] == doctest::Approx(25.0).epsilon(1e-9));
  CHECK(res.x[inst.inv[1]] == doctest::Approx(30.0).epsilon(1e-9));

  // wind is free energy, so both mandate rows bind exactly
  for (const char* name : {"rps_A_d0", "rps_B_d0"}) {
    int r = find_row(inst.program, name);
    REQUIRE(r >= 0);
    CHECK(inst.program.row_activity(r, res.x) ==
          doctest::Approx(inst.program.rows[r].rhs).epsilon(1e-9));
  }

  // the cheap unit at N1 serves both zones across the line: 68 MW each hour
  // of which 28 flow to N2, and the expensive unit stays off
  for (int t = 0; t < 2; ++t) {
    CHECK(res.x[inst.g_var(0, t, 0)] == doctest::Approx(68.0).epsilon(1e-9));
    CHECK(res.x[inst.g_var(1, t, 0)] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(res.x[inst.f_var(0, t, 0)] == doctest::Approx(28.0).epsilon(1e-9));
  }

  // retail 90*90*2 less fuel 20*68*2 less the annuity on 55 MW of wind
  const double daily = prorate_capital_cost(895000.0, 10, 0.05);
  CHECK(daily == doctest::Approx(317.55231395639385).epsilon(1e-12));
  const double expected = 16200.0 - 2720.0 - 55.0 * daily;
  CHECK(res.objective == doctest::Approx(expected).epsilon(1e-9));
  CHECK(res.objective == doctest::Approx(-3985.3772676016617).epsilon(1e-9));
}

TEST_CASE("reserve demands beyond fleet headroom are rejected") {
  GridModel g = one_zone_grid();
  PolicySet ps = policies_for({plain_actor("A", 100.0)});
  // 150 MW of reserve against 100 MW of controllable headroom: no dispatch
  // can ever comply, so the builder refuses up front
  CHECK_THROWS_WITH_AS(build_benchmark(g, ps, 150.0),
                       doctest::Contains("reserve"), std::runtime_error);

  // 60 MW passes the aggregate screen (headroom is 100) but collides with
  // serving 50 MW of demand, which only the solver can see; drop the wind
  // candidate so nothing can be built to relieve the squeeze
  g.candidate_gens.clear();
  BenchmarkInstance inst = build_benchmark(g, ps, 60.0);
  SolveResult res = solve_lp(inst.program);
  CHECK(res.status == SolveStatus::Infeasible);
}

TEST_CASE("reserve requirement holds at the solution") {
  GridModel g = one_zone_grid();
  PolicySet ps = policies_for({plain_actor("A", 100.0)});
  BenchmarkInstance inst = build_benchmark(g, ps, 30.0);
  CHECK(inst.reserve_req == std::vector<double>{30.0});
  SolveResult res = solve_lp(inst.program);
  REQUIRE(res.status == SolveStatus::Optimal);
  // reserve is free here, so welfare is untouched
  CHECK(res.objective == doctest::Approx(4000.0).epsilon(1e-9));
  int r = find_row(inst.program, "reserve_d0_t0");
  REQUIRE(r >= 0);
  CHECK(inst.program.row_activity(r, res.x) >= 30.0 - 1e-9);
}

TEST_CASE("built thermal capacity respects its minimum output") {
  GridModel g;
  g.nodes = {{"N1", "A"}};
  g.states = {"A"};
  g.rep_days = {{"d0", 1.0}};
  g.hours = 1;
  Generator g1;
  g1.id = "G1";
  g1.node = "N1";
  g1.kind = GenKind::Controllable;
  g1.fuel = "hydro";
  g1.g_max = 30.0;
  g1.cost = 10.0;
  g.existing_gens = {g1};
  CandidateGenerator cc;
  cc.id = "CC";
  cc.node = "N1";
  cc.kind = GenKind::Controllable;
  cc.fuel = "gas";
  cc.g_max = 100.0;
  cc.cost = 30.0;
  cc.capital_cost = 895000.0;
  cc.min_output_factor = 0.5;
  g.candidate_gens = {cc};
  g.demand = {50.0};
  PolicySet ps = policies_for({plain_actor("A", 100.0)});

  BenchmarkInstance inst = build_benchmark(g, ps, 0.0);
  CHECK(find_row(inst.program, "minout_CC_d0_t0") >= 0);
  SolveResult res = solve_lp(inst.program);
  REQUIRE(res.status == SolveStatus::Optimal);
  // 20 MW must be built to close the demand gap; at 50% minimum output the
  // unit runs exactly that gap
  CHECK(res.x[inst.inv[0]] == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(res.x[inst.g_var(1, 0, 0)] == doctest::Approx(20.0).epsilon(1e-9));
  const double daily = prorate_capital_cost(895000.0, 10, 0.05);
  CHECK(res.objective ==
        doctest::Approx(5000.0 - 900.0 - 20.0 * daily).epsilon(1e-9));
  CHECK(res.objective == doctest::Approx(-2251.0462791278772).epsilon(1e-9));

  // without a floor the row disappears
  g.candidate_gens[0].min_output_factor = 0.0;
  BenchmarkInstance loose = build_benchmark(g, ps, 0.0);
  CHECK(find_row(loose.program, "minout_CC_d0_t0") == -1);
}

TEST_CASE("budget rows appear exactly for budgeted states") {
  GridModel g = mandate_grid();
  ActorPolicy a = plain_actor("A", 90.0, 0.2);
  const double daily = prorate_capital_cost(895000.0, 10, 0.05);
  a.capital_budget = 40.0 * daily;  // room for 40 MW, mandate needs 25
  a.policy_budget = 1e6;
  a.energy_tariff = 2.0;
  a.capacity_tariff = 300.0;
  PolicySet ps = policies_for({a, plain_actor("B", 90.0, 0.3)});

  BenchmarkInstance inst = build_benchmark(g, ps, 0.0);
  int cb = find_row(inst.program, "cap_budget_A");
  REQUIRE(cb >= 0);
  REQUIRE(inst.program.rows[cb].terms.size() == 1);
  CHECK(inst.program.rows[cb].terms[0].var == inst.inv[0]);
  CHECK(inst.program.rows[cb].terms[0].coef ==
        doctest::Approx(daily).epsilon(1e-12));
  CHECK(inst.program.rows[cb].rhs == doctest::Approx(40.0 * daily));
  CHECK(find_row(inst.program, "cap_budget_B") == -1);

  // support outlays: $2 per wind MWh (two hours) plus the prorated $300/kW
  // capacity payment on the built wind
  int pb = find_row(inst.program, "pol_budget_A_d0");
  REQUIRE(pb >= 0);
  CHECK(inst.program.rows[pb].terms.size() == 3);
  CHECK(inst.program.rows[pb].rhs == doctest::Approx(1e6));
  const double pct = prorate_capital_cost(300.0 * 1000.0, 10, 0.05);
  double inv_coef = 0.0;
  for (const auto& t : inst.program.rows[pb].terms)
    if (t.var == inst.inv[0]) inv_coef = t.coef;
  CHECK(inv_coef == doctest::Approx(pct).epsilon(1e-12));
  CHECK(find_row(inst.program, "pol_budget_B_d0") == -1);

  // budget variable cap: no more than 40 MW of wind can be financed
  CHECK(inst.program.vars[inst.inv[0]].ub == doctest::Approx(40.0));

  SolveResult res = solve_lp(inst.program);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(res.x[inst.inv[0]] == doctest::Approx(25.0).epsilon(1e-9));
}

TEST_CASE("chance headroom cones ride along unchanged welfare") {
  GridModel g;
  g.nodes = {{"N1", "A"}};
  g.states = {"A"};
  g.rep_days = {{"d0", 1.0}};
  g.hours = 1;
  Generator g1;
  g1.id = "G1";
  g1.node = "N1";
  g1.kind = GenKind::Controllable;
  g1.fuel = "gas";
  g1.g_max = 100.0;
  g1.cost = 20.0;
  g1.alpha = 1.0;
  Generator w0;
  w0.id = "W0";
  w0.node = "N1";
  w0.kind = GenKind::Renewable;
  w0.fuel = "wind";
  w0.g_max = 10.0;
  w0.sigma = 0.3;
  g.existing_gens = {g1, w0};
  g.demand = {50.0};
  PolicySet ps = policies_for({plain_actor("A", 100.0)});

  BenchmarkInstance off = build_benchmark(g, ps, 0.0);
  CHECK(off.soc.blocks.empty());
  CHECK(off.program.cones.empty());
  SolveResult base = solve_lp(off.program);
  REQUIRE(base.status == SolveStatus::Optimal);
  CHECK(base.objective == doctest::Approx(4200.0).epsilon(1e-9));

  BenchmarkOptions opt;
  opt.chance_headroom = true;
  BenchmarkInstance on = build_benchmark(g, ps, 0.0, opt);
  CHECK(on.soc.blocks.size() == 2);  // both sides of the one participant
  CHECK(on.program.cones.size() == 2);
  SolveResult guarded = solve(on.program);
  REQUIRE(guarded.status == SolveStatus::Optimal);
  // the margins are slack at this dispatch, so welfare must not move
  CHECK(guarded.objective == doctest::Approx(base.objective).epsilon(1e-7));
}

TEST_CASE("default reserve follows the aggregated forecast spread") {
  GridModel g = one_zone_grid();
  Generator w1;
  w1.id = "W1e";
  w1.node = "N1";
  w1.kind = GenKind::Renewable;
  w1.fuel = "wind";
  w1.g_max = 10.0;
  w1.sigma = 0.3;
  Generator w2 = w1;
  w2.id = "W2e";
  w2.g_max = 4.0;
  w2.sigma = 0.5;
  g.existing_gens.push_back(w1);
  g.existing_gens.push_back(w2);

  // stdev entries 3 and 2 MW aggregate to sqrt(13); eta = 3% maps to the
  // 97% normal quantile
  const double want = 1.8807936081512509 * std::sqrt(13.0);
  CHECK(default_reserve_requirement(g, 0.03) ==
        doctest::Approx(want).epsilon(1e-9));

  GridModel bare = one_zone_grid();
  CHECK(default_reserve_requirement(bare, 0.03) == 0.0);

  CHECK_THROWS_AS(default_reserve_requirement(g, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(default_reserve_requirement(g, 0.5),
                  std::invalid_argument);
}

TEST_CASE("expansion summaries fold per state") {
  GridModel g = mandate_grid();
  ExpansionSummary s =
      summarize_expansion(g, {"WA", "WB"}, {25.0, 30.0}, "base");
  CHECK(s.scenario == "base");
  CHECK(s.renewable_mw.at("A") == doctest::Approx(25.0));
  CHECK(s.renewable_mw.at("B") == doctest::Approx(30.0));
  // zero entries still exist for every state
  CHECK(s.controllable_mw.at("A") == 0.0);
  CHECK(s.controllable_mw.at("B") == 0.0);

  CHECK_THROWS_WITH_AS(summarize_expansion(g, {"nope"}, {1.0}, "base"),
                       doctest::Contains("unknown candidate"),
                       std::runtime_error);
  CHECK_THROWS_AS(summarize_expansion(g, {"WA"}, {1.0, 2.0}, "base"),
                  std::invalid_argument);
}

TEST_CASE("expansion deltas subtract the baseline") {
  GridModel g = mandate_grid();
  ExpansionSummary run =
      summarize_expansion(g, {"WA", "WB"}, {0.4, 0.0}, "high_gas");
  ExpansionSummary bench =
      summarize_expansion(g, {"WA", "WB"}, {1.0, 0.0}, "high_gas");
  std::vector<ExpansionDelta> d = compare_expansion(run, bench);
  REQUIRE(d.size() == 2);
  CHECK(d[0].state == "A");
  CHECK(d[0].renewable_mw == doctest::Approx(-0.6));
  CHECK(d[0].controllable_mw == 0.0);
  CHECK(d[1].state == "B");
  CHECK(d[1].renewable_mw == 0.0);

  std::vector<ExpansionDelta> zero = compare_expansion(bench, bench);
  for (const auto& e : zero) {
    CHECK(e.controllable_mw == 0.0);
    CHECK(e.renewable_mw == 0.0);
  }

  ExpansionSummary other = bench;
  other.scenario = "low_gas";
  CHECK_THROWS_WITH_AS(compare_expansion(run, other),
                       doctest::Contains("scenario"), std::runtime_error);

  ExpansionSummary clipped = bench;
  clipped.controllable_mw.erase("B");
  clipped.renewable_mw.erase("B");
  CHECK_THROWS_WITH_AS(compare_expansion(run, clipped),
                       doctest::Contains("missing"), std::runtime_error);
}

TEST_CASE("malformed benchmark requests are rejected") {
  GridModel g = mandate_grid();
  PolicySet ps = policies_for(
      {plain_actor("A", 90.0, 0.2), plain_actor("B", 90.0, 0.3)});

  // wrong reserve vector length (grid has 1 day x 2 hours)
  CHECK_THROWS_WITH_AS(build_benchmark(g, ps, std::vector<double>{0.0}),
                       doctest::Contains("expected 2"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      build_benchmark(g, ps, std::vector<double>{5.0, -1.0}),
      doctest::Contains("nonnegative"), std::invalid_argument);

  // every state needs a policy entry
  PolicySet lonely = policies_for({plain_actor("A", 90.0, 0.2)});
  CHECK_THROWS_WITH_AS(build_benchmark(g, lonely, 0.0),
                       doctest::Contains("no policy entry"),
                       std::runtime_error);
}
