#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccepec/benchmark.hpp"
#include "ccepec/mpec.hpp"
#include "ccepec/solver/solve.hpp"
#include "ccepec/uncertainty.hpp"
#include "ccepec/validation.hpp"
#include "doctest.h"

using namespace ccepec;

namespace {

// One state with a 100 MW controllable absorbing the forecast error of a
// 10 MW wind unit at 30% relative stdev: the error aggregate is N(0, 3 MW).
GridModel recourse_grid(double sigma = 0.3, int days = 1) {
  GridModel g;
  g.nodes = {{"N1", "A"}};
  g.states = {"A"};
  g.hours = 1;
  for (int e = 0; e < days; ++e)
    g.rep_days.push_back({"d" + std::to_string(e), 1.0 / days});
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
  w0.sigma = sigma;
  g.existing_gens = {g1, w0};
  g.demand.assign(static_cast<std::size_t>(days), 50.0);
  return g;
}

const AuditFamily* family(const AuditReport& r, const std::string& name) {
  for (const auto& f : r.families)
    if (f.family == name) return &f;
  return nullptr;
}

}  // namespace

TEST_CASE("violation rate at the cone boundary matches the tolerance") {
  GridModel g = recourse_grid();
  CcSolution sol;
  sol.state = "A";
  // schedule exactly where the chance constraint is tight: the capacity
  // margin equals the 97% quantile of the 3 MW error aggregate
  const double gbar = 100.0 - normal_quantile(0.97) * 3.0;
  sol.gbar["G1"] = {gbar};

  CcCheckReport rep = monte_carlo_cc_check(g, sol, 0.03, 100000, 42);
  CHECK(rep.state == "A");
  CHECK(rep.samples == 100000);
  REQUIRE(rep.rows.size() == 2);
  const CcCheckRow& up = rep.rows[0];
  REQUIRE(up.upper);
  CHECK(up.unit == "G1");
  CHECK(up.bound == doctest::Approx(100.0));
  CHECK(up.ci ==
        doctest::Approx(1.96 * std::sqrt(up.rate * (1.0 - up.rate) / 100000)));
  CHECK(std::abs(up.rate - 0.03) <= 2.0 * up.ci);
  CHECK(rep.max_rate == doctest::Approx(up.rate));
  // the floor is 30 standard deviations away
  CHECK(rep.rows[1].rate == 0.0);
  CHECK(rep.rows[1].ci == 0.0);
}

TEST_CASE("zero forecast spread never violates") {
  GridModel g = recourse_grid(0.0);
  CcSolution sol;
  sol.state = "A";
  sol.gbar["G1"] = {50.0};
  CcCheckReport rep = monte_carlo_cc_check(g, sol, 0.03, 10000, 7);
  CHECK(rep.max_rate == 0.0);
  for (const auto& row : rep.rows) CHECK(row.rate == 0.0);
}

TEST_CASE("scheduling on the capacity bound violates half the time") {
  GridModel g = recourse_grid();
  CcSolution sol;
  sol.state = "A";
  sol.gbar["G1"] = {100.0};
  CcCheckReport rep = monte_carlo_cc_check(g, sol, 0.03, 100000, 42);
  REQUIRE(!rep.rows.empty());
  CHECK(std::abs(rep.rows[0].rate - 0.5) < 0.01);
}

TEST_CASE("doubling the sample count halves the CI width") {
  GridModel g = recourse_grid();
  CcSolution sol;
  sol.state = "A";
  sol.gbar["G1"] = {100.0 - normal_quantile(0.97) * 3.0};
  const double ci1 = monte_carlo_cc_check(g, sol, 0.03, 10000, 5).rows[0].ci;
  const double ci2 = monte_carlo_cc_check(g, sol, 0.03, 20000, 5).rows[0].ci;
  REQUIRE(ci2 > 0.0);
  CHECK(std::abs(ci1 / ci2 - std::sqrt(2.0)) < 0.1);
}

TEST_CASE("independent day streams stay calibrated") {
  GridModel g = recourse_grid(0.3, 2);
  CcSolution sol;
  sol.state = "A";
  const double gbar = 100.0 - normal_quantile(0.97) * 3.0;
  sol.gbar["G1"] = {gbar, gbar};
  CcCheckReport rep = monte_carlo_cc_check(g, sol, 0.03, 100000, 11);
  REQUIRE(rep.rows.size() == 4);  // both sides of both days
  for (const auto& row : rep.rows)
    if (row.upper) CHECK(std::abs(row.rate - 0.03) <= 2.5 * row.ci);
}

TEST_CASE("monte carlo input validation") {
  GridModel g = recourse_grid();
  CcSolution sol;
  sol.state = "A";
  sol.gbar["G1"] = {50.0};
  CHECK_THROWS_WITH_AS(monte_carlo_cc_check(g, sol, 0.03, 5000, 1),
                       doctest::Contains("10000"), std::invalid_argument);
  CHECK_THROWS_AS(monte_carlo_cc_check(g, sol, 0.6, 10000, 1),
                  std::invalid_argument);

  CcSolution missing;
  missing.state = "A";
  CHECK_THROWS_WITH_AS(monte_carlo_cc_check(g, missing, 0.03, 10000, 1),
                       doctest::Contains("no schedule"), std::invalid_argument);

  CcSolution wrong;
  wrong.state = "A";
  wrong.gbar["G1"] = {50.0, 50.0};
  CHECK_THROWS_WITH_AS(monte_carlo_cc_check(g, wrong, 0.03, 10000, 1),
                       doctest::Contains("expected 1"), std::invalid_argument);

  // a candidate error source needs its built capacity to be sampled
  CandidateGenerator w;
  w.id = "W1";
  w.node = "N1";
  w.kind = GenKind::Renewable;
  w.fuel = "wind";
  w.g_max = 50.0;
  w.sigma = 0.1;
  w.capital_cost = 895000.0;
  g.candidate_gens = {w};
  CHECK_THROWS_WITH_AS(monte_carlo_cc_check(g, sol, 0.03, 10000, 1),
                       doctest::Contains("built capacity"),
                       std::invalid_argument);
  CcSolution built = sol;
  built.built_mw["W1"] = 0.0;
  CHECK(monte_carlo_cc_check(g, built, 0.03, 10000, 1).max_rate <= 1.0);
}

TEST_CASE("kkt system reproduces the direct market solve") {
  GridModel g;
  g.nodes = {{"N1", "A"}, {"N2", "B"}};
  g.states = {"A", "B"};
  g.lines = {{"L1", "N1", "N2", 1.0, 1000.0}};
  g.rep_days = {{"d0", 1.0}};
  g.hours = 1;
  Generator g1;
  g1.id = "G1";
  g1.node = "N1";
  g1.kind = GenKind::Controllable;
  g1.fuel = "gas";
  g1.g_max = 100.0;
  g1.cost = 10.0;
  g.existing_gens = {g1};
  g.demand = {0.0, 30.0};

  DayOffers offers;
  offers.day = 0;
  offers.values = {100.0};
  KktEquivalenceReport rep = lp_vs_kkt_equivalence(g, offers);
  CHECK(rep.passed);
  CHECK(rep.lp_objective == doctest::Approx(-300.0).epsilon(1e-9));
  CHECK(rep.kkt_objective == doctest::Approx(-300.0).epsilon(1e-9));
  CHECK(rep.max_dispatch_diff <= 1e-6 * 30.0);
  CHECK(rep.max_price_diff <= 1e-6 * 10.0);
}

TEST_CASE("congested triangle prices agree across methods") {
  GridModel g;
  g.nodes = {{"N1", "A"}, {"N2", "A"}, {"N3", "A"}};
  g.states = {"A"};
  g.lines = {{"L12", "N1", "N2", 1.0, 1000.0},
             {"L23", "N2", "N3", 1.0, 1000.0},
             {"L13", "N1", "N3", 1.0, 20.0}};
  g.rep_days = {{"d0", 1.0}};
  g.hours = 1;
  Generator g1;
  g1.id = "G1";
  g1.node = "N1";
  g1.kind = GenKind::Controllable;
  g1.fuel = "gas";
  g1.g_max = 200.0;
  g1.cost = 10.0;
  Generator g3 = g1;
  g3.id = "G3";
  g3.node = "N3";
  g3.fuel = "oil";
  g3.g_max = 100.0;
  g3.cost = 30.0;
  g.existing_gens = {g1, g3};
  g.demand = {0.0, 0.0, 90.0};

  DayOffers offers;
  offers.day = 0;
  offers.values = {200.0, 100.0};
  KktEquivalenceReport rep = lp_vs_kkt_equivalence(g, offers);
  CHECK(rep.passed);
  CHECK(rep.max_price_diff <= 1e-6 * 30.0);

  // with equal reactances the congested corner splits the marginal MW evenly
  // between both generators, so the middle node prices at their average
  MarketLp m = build_market_lp(g, offers);
  SolveResult lp = solve_lp(m.lp);
  REQUIRE(lp.status == SolveStatus::Optimal);
  MarketPoint pt = market_point_from_solve(m, lp);
  CHECK(pt.lambda[0] == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(pt.lambda[1] == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(pt.lambda[2] == doctest::Approx(30.0).epsilon(1e-9));
  CHECK(lp.x[m.g_var(0, 0)] == doctest::Approx(30.0).epsilon(1e-9));
  CHECK(lp.x[m.g_var(1, 0)] == doctest::Approx(60.0).epsilon(1e-9));
}

TEST_CASE("zero demand clears trivially in both methods") {
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
  g1.cost = 10.0;
  g.existing_gens = {g1};
  g.demand = {0.0};

  DayOffers offers;
  offers.day = 0;
  offers.values = {100.0};
  KktEquivalenceReport rep = lp_vs_kkt_equivalence(g, offers);
  CHECK(rep.passed);
  CHECK(rep.lp_objective == doctest::Approx(0.0));
  CHECK(rep.kkt_objective == doctest::Approx(0.0));
}

TEST_CASE("audit clears an optimal plan and flags a doctored one") {
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
  Generator g2 = g1;
  g2.id = "G2";
  g2.node = "N2";
  g2.fuel = "oil";
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
  g.demand = {50.0, 40.0, 50.0, 40.0};

  PolicySet ps;
  ActorPolicy a;
  a.state = "A";
  a.retail_price = 90.0;
  a.rps_fraction = 0.2;
  ActorPolicy b = a;
  b.state = "B";
  b.rps_fraction = 0.3;
  ps.actors = {a, b};

  BenchmarkInstance inst = build_benchmark(g, ps, 0.0);
  SolveResult res = solve_lp(inst.program);
  REQUIRE(res.status == SolveStatus::Optimal);

  AuditReport clean = audit_solution(inst.program, res.x);
  CHECK(clean.passed);
  CHECK(clean.max_residual <= 1e-6);
  REQUIRE(family(clean, "rps") != nullptr);
  CHECK(family(clean, "rps")->count == 2);
  CHECK(family(clean, "bal") != nullptr);
  CHECK(family(clean, "bounds") != nullptr);

  // push 1 MW through the line without telling the angles
  std::vector<double> bent = res.x;
  bent[inst.f_var(0, 0, 0)] += 1.0;
  AuditReport flagged = audit_solution(inst.program, bent);
  CHECK(!flagged.passed);
  const AuditFamily* flow = family(flagged, "flow");
  REQUIRE(flow != nullptr);
  CHECK(flow->max_residual == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(flow->worst == "flow_L1_d0_t0");

  // wipe state A's wind dispatch: the mandate family reports the shortfall
  // in MWh
  std::vector<double> short_a = res.x;
  for (int t = 0; t < 2; ++t) short_a[inst.g_var(2, t, 0)] = 0.0;
  AuditReport rps = audit_solution(inst.program, short_a);
  const AuditFamily* mandate = family(rps, "rps");
  REQUIRE(mandate != nullptr);
  CHECK(!mandate->passed);
  CHECK(mandate->max_residual == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(mandate->worst == "rps_A_d0");

  CHECK_THROWS_AS(audit_solution(inst.program, std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("audit passes the planner's own equilibrium program") {
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
  g.demand = {50.0};

  PolicySet ps;
  ActorPolicy a;
  a.state = "A";
  a.retail_price = 100.0;
  a.interface_limit = 100.0;
  ps.actors = {a};

  MpecOptions opt;
  opt.price_bits = 3;
  opt.price_min = 0.0;
  opt.price_cap = 35.0;  // step 5, so the unit's cost sits on the grid
  MpecInstance inst = build_mpec(g, ps, "A", {}, opt);
  SolveResult res = solve(inst.program);
  REQUIRE(res.status == SolveStatus::Optimal);

  AuditReport rep = audit_solution(inst.program, res.x);
  CHECK(rep.passed);
  CHECK(family(rep, "sos1") != nullptr);
  CHECK(family(rep, "integrality") != nullptr);
}
