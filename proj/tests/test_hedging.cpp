#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccepec/hedging.hpp"
#include "ccepec/solver/solve.hpp"
#include "ccepec/validation.hpp"
#include "doctest.h"

using namespace ccepec;

namespace {

// Two isolated single-node states with identical units and demand. Pinning
// the price grid at marginal cost (K=0) leaves nothing to disagree on: both
// leaders' views of dispatch and prices coincide from the first round.
GridModel twin_islands() {
  GridModel g;
  g.nodes = {{"N1", "A"}, {"N2", "B"}};
  g.states = {"A", "B"};
  g.rep_days = {{"d0", 1.0}};
  g.hours = 1;
  Generator g1;
  g1.id = "G1";
  g1.node = "N1";
  g1.kind = GenKind::Controllable;
  g1.fuel = "gas";
  g1.g_max = 100.0;
  g1.cost = 20.0;
  Generator g2 = g1;
  g2.id = "G2";
  g2.node = "N2";
  g.existing_gens = {g1, g2};
  g.demand = {50.0, 50.0};
  return g;
}

// Exporter A (cheap unit at N1) against importer B (dear unit at N2, load
// pocket at N3). Standing alone, A prices its node at the importer's cost
// while B expects the exporter's cost, so the initial price copies disagree
// by the full 4 $/MWh gap and hedging has to close it.
GridModel duo_grid() {
  GridModel g;
  g.nodes = {{"N1", "A"}, {"N2", "B"}, {"N3", "B"}};
  g.states = {"A", "B"};
  g.lines = {{"L13", "N1", "N3", 1.0, 1000.0},
             {"L23", "N2", "N3", 1.0, 1000.0}};
  g.rep_days = {{"d0", 1.0}};
  g.hours = 2;
  Generator g1;
  g1.id = "G1";
  g1.node = "N1";
  g1.kind = GenKind::Controllable;
  g1.fuel = "gas";
  g1.g_max = 100.0;
  g1.cost = 10.0;
  Generator g2 = g1;
  g2.id = "G2";
  g2.node = "N2";
  g2.fuel = "oil";
  g2.cost = 14.0;
  g.existing_gens = {g1, g2};
  g.demand = {10.0, 10.0, 40.0, 10.0, 10.0, 40.0};
  return g;
}

PolicySet duo_policies(double iface_a = 100.0, double iface_b = 100.0) {
  PolicySet ps;
  ActorPolicy a;
  a.state = "A";
  a.retail_price = 100.0;
  a.interface_limit = iface_a;
  ActorPolicy b = a;
  b.state = "B";
  b.interface_limit = iface_b;
  ps.actors = {a, b};
  return ps;
}

PhOptions duo_options() {
  PhOptions opt;
  opt.mpec.price_bits = 3;
  opt.mpec.price_min = 0.0;
  opt.mpec.price_cap = 14.0;  // step 2: both marginal costs sit on the grid
  return opt;
}

}  // namespace

TEST_CASE("initialization shapes the multipliers and guards options") {
  GridModel g = twin_islands();
  PolicySet ps = duo_policies();
  PhOptions opt;
  PhState st = ph_initialize(g, ps, opt);
  CHECK(st.iteration == 0);
  CHECK(st.actors == std::vector<std::string>{"A", "B"});
  REQUIRE(st.m_g.size() == 2);
  REQUIRE(st.m_lambda.size() == 2);
  CHECK(st.m_g[0].size() == 2);       // 2 units x 1 hour x 1 day
  CHECK(st.m_lambda[1].size() == 2);  // 2 nodes x 1 hour x 1 day
  for (const auto& m : st.m_g)
    for (double v : m) CHECK(v == 0.0);
  CHECK(st.avg_g.empty());

  GridModel lone = twin_islands();
  lone.nodes.pop_back();
  lone.states.pop_back();
  lone.existing_gens.pop_back();
  CHECK_THROWS_WITH_AS(ph_initialize(lone, ps, opt),
                       doctest::Contains("two states"), std::invalid_argument);

  PhOptions bad = opt;
  bad.rho_g = -0.1;
  CHECK_THROWS_AS(ph_initialize(g, ps, bad), std::invalid_argument);
  bad = opt;
  bad.breakpoints = 1;
  CHECK_THROWS_AS(ph_initialize(g, ps, bad), std::invalid_argument);
  bad = opt;
  bad.max_iter = 0;
  CHECK_THROWS_AS(ph_initialize(g, ps, bad), std::invalid_argument);

  // no hedging pressure is legal but worth a note
  std::vector<std::string> notes;
  PhOptions loose = opt;
  loose.rho_g = 0.0;
  loose.log = [&notes](const std::string& s) { notes.push_back(s); };
  ph_initialize(g, ps, loose);
  REQUIRE(notes.size() == 1);
  CHECK(notes[0].find("warning") != std::string::npos);
}

TEST_CASE("consensus averaging is the entry-wise mean") {
  CHECK(consensus_average({{2.0}, {4.0}}) == std::vector<double>{3.0});
  CHECK(consensus_average({{0.0}, {0.0}, {6.0}}) == std::vector<double>{2.0});
  std::vector<double> v = {1.5, -2.0, 7.0};
  CHECK(consensus_average({v, v, v}) == v);
  CHECK_THROWS_AS(consensus_average({}), std::invalid_argument);
  CHECK_THROWS_WITH_AS(consensus_average({{1.0}, {1.0, 2.0}}),
                       doctest::Contains("length"), std::invalid_argument);
}

TEST_CASE("penalty cuts recover the analytic minimizer") {
  // max -(m x) - (rho/2)(x - 5)^2 has its head at x = 5 - m/rho = 4.5;
  // the tangent relaxation lands within half a cut spacing of it
  ConicProgram p;
  int x = p.add_var("x", 0.0, 10.0);
  int q = append_ph_penalty(p, x, 1.0, 2.0, 5.0, 100, "t");
  CHECK(q >= 0);
  SolveResult res = solve_lp(p);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(std::abs(res.x[x] - 4.5) <= 0.06);

  // a crushing weight pins the variable to the center against a profit pull
  ConicProgram pinned;
  int y = pinned.add_var("y", 0.0, 10.0);
  pinned.add_obj(y, 3.0);
  append_ph_penalty(pinned, y, 0.0, 1e6, 5.0, 8, "t");
  res = solve_lp(pinned);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(std::abs(res.x[y] - 5.0) <= 5e-3);

  // centered at the unpenalized optimum the penalty is inert
  ConicProgram inert;
  int z = inert.add_var("z", 0.0, 10.0);
  inert.add_obj(z, 3.0);
  append_ph_penalty(inert, z, 0.0, 0.7, 10.0, 8, "t");
  res = solve_lp(inert);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(res.x[z] == doctest::Approx(10.0));
  CHECK(res.objective == doctest::Approx(30.0));

  // multiplier-only term needs no cut machinery
  ConicProgram lin;
  int u = lin.add_var("u", 0.0, 1.0);
  CHECK(append_ph_penalty(lin, u, 2.0, 0.0, 0.5, 8, "t") == -1);
  CHECK(lin.num_rows() == 0);

  CHECK_THROWS_AS(append_ph_penalty(lin, 7, 0.0, 1.0, 0.0, 8, "t"),
                  std::invalid_argument);
  CHECK_THROWS_AS(append_ph_penalty(lin, u, 0.0, 1.0, 0.0, 1, "t"),
                  std::invalid_argument);
  CHECK_THROWS_AS(append_ph_penalty(lin, u, 0.0, -1.0, 0.0, 8, "t"),
                  std::invalid_argument);
}

TEST_CASE("multiplier updates telescope and sum to zero") {
  PhState st;
  st.actors = {"A", "B"};
  st.rho_g = 0.7;
  st.rho_lambda = 0.7;
  st.m_g = {{0.0}, {0.0}};
  st.m_lambda = {{}, {}};

  update_multipliers(st, {{1.0}, {3.0}}, {{}, {}}, {2.0}, {});
  CHECK(st.iteration == 1);
  CHECK(st.m_g[0][0] == doctest::Approx(-0.7));
  CHECK(st.m_g[1][0] == doctest::Approx(0.7));
  CHECK(st.m_g[0][0] + st.m_g[1][0] == doctest::Approx(0.0));

  update_multipliers(st, {{1.0}, {3.0}}, {{}, {}}, {2.0}, {});
  CHECK(st.m_g[0][0] == doctest::Approx(-1.4));
  CHECK(st.m_g[0][0] + st.m_g[1][0] == doctest::Approx(0.0));

  // agreement leaves multipliers alone
  update_multipliers(st, {{2.0}, {2.0}}, {{}, {}}, {2.0}, {});
  CHECK(st.m_g[0][0] == doctest::Approx(-1.4));

  CHECK_THROWS_AS(update_multipliers(st, {{1.0}}, {{}}, {2.0}, {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      update_multipliers(st, {{1.0, 2.0}, {3.0, 4.0}}, {{}, {}}, {2.0}, {}),
      std::invalid_argument);
}

TEST_CASE("tolerance metric normalizes aggregate deviation") {
  CHECK(compute_tolerance({{1.0}, {3.0}}, {2.0}) == doctest::Approx(1.0));
  CHECK(compute_tolerance({{5.0}, {5.0}}, {5.0}) == 0.0);
  // homogeneous above the normalization floor: scaling everything by 10
  // leaves the ratio alone
  CHECK(compute_tolerance({{10.0}, {30.0}}, {20.0}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(compute_tolerance({{1.0, 2.0}}, {1.0}),
                  std::invalid_argument);
}

TEST_CASE("symmetric leaders agree from the first round") {
  GridModel g = twin_islands();
  PolicySet ps = duo_policies();
  PhOptions opt;
  opt.mpec.price_bits = 0;
  opt.mpec.price_min = 20.0;  // price pinned at marginal cost

  EquilibriumResult res = run_ph(g, ps, opt);
  CHECK(res.converged);
  CHECK(res.iterations == 1);
  CHECK(res.eps == 0.0);
  REQUIRE(res.solutions.size() == 2);
  CHECK(res.consensus_g == std::vector<double>{50.0, 50.0});
  for (double lam : res.consensus_lambda) CHECK(lam == doctest::Approx(20.0));
  REQUIRE(res.objectives.size() == 1);
  CHECK(res.objectives[0][0] == doctest::Approx(4000.0));
  CHECK(res.objectives[0][1] == doctest::Approx(4000.0));

  // the reported tolerance is the metric on the stored vectors
  std::vector<std::vector<double>> hedged;
  for (const auto& s : res.solutions) {
    std::vector<double> all = s.g;
    all.insert(all.end(), s.lambda.begin(), s.lambda.end());
    hedged.push_back(all);
  }
  std::vector<double> avg = res.consensus_g;
  avg.insert(avg.end(), res.consensus_lambda.begin(),
             res.consensus_lambda.end());
  CHECK(compute_tolerance(hedged, avg) == doctest::Approx(res.eps));

  // penalties touch only the objective: the stored points satisfy a fresh
  // unpenalized build of each actor's own problem
  for (const auto& s : res.solutions) {
    MpecInstance base = build_mpec(g, ps, s.state, {}, opt.mpec);
    AuditReport audit = audit_solution(base.program, s.x_base);
    CHECK(audit.passed);
  }
}

TEST_CASE("price disagreement narrows to a shared consensus") {
  GridModel g = duo_grid();
  PolicySet ps = duo_policies();
  PhOptions opt = duo_options();
  opt.max_iter = 200;

  EquilibriumResult res = run_ph(g, ps, opt);
  REQUIRE(!res.eps_history.empty());
  // the leaders start far apart on price
  CHECK(res.eps_history.front() > 0.03);
  CHECK(res.converged);
  CHECK(res.iterations <= 200);
  CHECK(res.eps <= 0.03);

  // consensus prices settle between the two standalone views (14 from the
  // exporter, 10 from the importer)
  for (double lam : res.consensus_lambda) {
    CHECK(lam >= 10.0 - 1e-6);
    CHECK(lam <= 14.0 + 1e-6);
  }

  // final per-actor points stay feasible for their own constraints
  for (const auto& s : res.solutions) {
    MpecInstance base = build_mpec(g, ps, s.state, {}, opt.mpec);
    AuditReport audit = audit_solution(base.program, s.x_base);
    CHECK(audit.passed);
  }
}

TEST_CASE("round budget and infinite targets terminate cleanly") {
  GridModel g = duo_grid();
  PolicySet ps = duo_policies();
  PhOptions opt = duo_options();
  opt.max_iter = 1;
  opt.eps_target = 1e-12;
  EquilibriumResult res = run_ph(g, ps, opt);
  CHECK(!res.converged);
  CHECK(res.iterations == 1);
  CHECK(res.eps > 1e-12);

  opt.eps_target = kInf;
  opt.max_iter = 50;
  res = run_ph(g, ps, opt);
  CHECK(res.converged);
  CHECK(res.iterations == 1);
}

TEST_CASE("parallel rounds reproduce the serial run exactly") {
  GridModel g = duo_grid();
  PolicySet ps = duo_policies();
  PhOptions opt = duo_options();
  opt.max_iter = 4;
  opt.eps_target = 1e-12;  // force all four rounds

  EquilibriumResult serial = run_ph(g, ps, opt);
  opt.jobs = 2;
  EquilibriumResult parallel = run_ph(g, ps, opt);
  CHECK(serial.eps_history == parallel.eps_history);
  REQUIRE(serial.solutions.size() == parallel.solutions.size());
  for (std::size_t a = 0; a < serial.solutions.size(); ++a) {
    CHECK(serial.solutions[a].g == parallel.solutions[a].g);
    CHECK(serial.solutions[a].lambda == parallel.solutions[a].lambda);
    CHECK(serial.solutions[a].objective == parallel.solutions[a].objective);
  }
}

TEST_CASE("a failing subproblem names its actor") {
  GridModel g = duo_grid();
  // B cannot import enough through a 5 MW interface to feed its 40 MW load
  PolicySet ps = duo_policies(100.0, 5.0);
  PhOptions opt = duo_options();
  CHECK_THROWS_WITH_AS(initial_solve(g, ps, opt), doctest::Contains("'B'"),
                       std::runtime_error);

  PhState st = ph_initialize(g, ps, opt);
  CHECK_THROWS_WITH_AS(augment_and_solve(g, ps, 0, st, opt),
                       doctest::Contains("initial"), std::invalid_argument);
}
