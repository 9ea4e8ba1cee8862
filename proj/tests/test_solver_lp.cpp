#include <cmath>

#include "ccepec/solver/solve.hpp"
#include "doctest.h"

#include "../src/solver/simplex.hpp"

using namespace ccepec;

TEST_CASE("program validation catches malformed input") {
  ConicProgram p;
  const int x = p.add_var("x", 0, 1);
  p.add_obj(x, 1.0);
  CHECK(p.validate().empty());

  SUBCASE("inverted bounds") {
    p.vars[x].lb = 2.0;
    CHECK(!p.validate().empty());
  }
  SUBCASE("binary outside unit interval") {
    p.vars[x].kind = VarKind::Binary;
    p.vars[x].ub = 3.0;
    CHECK(!p.validate().empty());
  }
  SUBCASE("dangling variable in a row") {
    p.add_row("r", {{7, 1.0}}, RowSense::LessEqual, 1.0);
    CHECK(!p.validate().empty());
  }
  SUBCASE("cone head with negative lower bound") {
    const int y = p.add_var("y", -1.0, kInf);
    p.add_cone("k", y, {LinExpr(x, 1.0)});
    CHECK(!p.validate().empty());
  }
}

TEST_CASE("two-variable LP with duals and reduced costs") {
  // max 3x + 2y, x + y <= 4, x + 3y <= 6. Optimum (4, 0) with value 12.
  ConicProgram p;
  p.sense = ObjSense::Maximize;
  const int x = p.add_var("x", 0, kInf);
  const int y = p.add_var("y", 0, kInf);
  p.add_obj(x, 3.0);
  p.add_obj(y, 2.0);
  p.add_row("r1", {{x, 1.0}, {y, 1.0}}, RowSense::LessEqual, 4.0);
  p.add_row("r2", {{x, 1.0}, {y, 3.0}}, RowSense::LessEqual, 6.0);

  SolveResult r = solve_lp(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(12.0));
  CHECK(r.x[x] == doctest::Approx(4.0));
  CHECK(r.x[y] == doctest::Approx(0.0));
  // L = obj + y1 (x + y - 4) + y2 (x + 3y - 6); stationarity in x gives
  // y1 = -3, r2 is slack so y2 = 0, and rc_y = 2 + y1 = -1 at the lower bound.
  CHECK(r.row_duals[0] == doctest::Approx(-3.0));
  CHECK(r.row_duals[1] == doctest::Approx(0.0));
  CHECK(r.reduced_costs[x] == doctest::Approx(0.0));
  CHECK(r.reduced_costs[y] == doctest::Approx(-1.0));
}

TEST_CASE("minimization dual signs") {
  // min x + y, x + y >= 2. Shadow price of the rhs is +1, so the stored dual
  // (convention L = obj + dual * (lhs - rhs)) is -1.
  ConicProgram p;
  p.sense = ObjSense::Minimize;
  const int x = p.add_var("x", 0, kInf);
  const int y = p.add_var("y", 0, kInf);
  p.add_obj(x, 1.0);
  p.add_obj(y, 1.0);
  p.add_row("cover", {{x, 1.0}, {y, 1.0}}, RowSense::GreaterEqual, 2.0);

  SolveResult r = solve_lp(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(2.0));
  CHECK(r.row_duals[0] == doctest::Approx(-1.0));
}

TEST_CASE("variable pinned to its lower bound") {
  ConicProgram p;
  p.sense = ObjSense::Maximize;
  const int x = p.add_var("x", 3.0, 10.0);
  p.add_obj(x, -1.0);
  SolveResult r = solve_lp(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(-3.0));
  CHECK(r.reduced_costs[x] == doctest::Approx(-1.0));
}

TEST_CASE("free variables and equality rows") {
  // min 2x with x + y = 3, y <= 1, x free: optimum x = 2.
  ConicProgram p;
  p.sense = ObjSense::Minimize;
  const int x = p.add_var("x", -kInf, kInf);
  const int y = p.add_var("y", 0, 1.0);
  p.add_obj(x, 2.0);
  p.add_row("link", {{x, 1.0}, {y, 1.0}}, RowSense::Equal, 3.0);
  SolveResult r = solve_lp(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(4.0));
  CHECK(r.x[x] == doctest::Approx(2.0));
  CHECK(r.x[y] == doctest::Approx(1.0));
}

TEST_CASE("infeasible and unbounded statuses") {
  SUBCASE("infeasible") {
    ConicProgram p;
    const int x = p.add_var("x", 0, kInf);
    p.add_obj(x, 1.0);
    p.add_row("r", {{x, 1.0}}, RowSense::LessEqual, -1.0);
    CHECK(solve_lp(p).status == SolveStatus::Infeasible);
  }
  SUBCASE("unbounded") {
    ConicProgram p;
    p.sense = ObjSense::Maximize;
    const int x = p.add_var("x", 0, kInf);
    p.add_obj(x, 1.0);
    CHECK(solve_lp(p).status == SolveStatus::Unbounded);
  }
  SUBCASE("unbounded through a free variable") {
    ConicProgram p;
    p.sense = ObjSense::Minimize;
    const int x = p.add_var("x", -kInf, kInf);
    p.add_obj(x, 1.0);
    p.add_row("r", {{x, 1.0}}, RowSense::LessEqual, 5.0);
    CHECK(solve_lp(p).status == SolveStatus::Unbounded);
  }
}

TEST_CASE("degenerate LP still terminates at the optimum") {
  // The third row is redundant at the optimum, creating degenerate pivots.
  ConicProgram p;
  p.sense = ObjSense::Maximize;
  const int x = p.add_var("x", 0, kInf);
  const int y = p.add_var("y", 0, kInf);
  p.add_obj(x, 1.0);
  p.add_obj(y, 1.0);
  p.add_row("r1", {{x, 1.0}}, RowSense::LessEqual, 1.0);
  p.add_row("r2", {{y, 1.0}}, RowSense::LessEqual, 1.0);
  p.add_row("r3", {{x, 1.0}, {y, 1.0}}, RowSense::LessEqual, 2.0);
  SolveResult r = solve_lp(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(2.0));
}

TEST_CASE("Beale's cycling example terminates") {
  ConicProgram p;
  p.sense = ObjSense::Minimize;
  const int x1 = p.add_var("x1", 0, kInf);
  const int x2 = p.add_var("x2", 0, kInf);
  const int x3 = p.add_var("x3", 0, kInf);
  const int x4 = p.add_var("x4", 0, kInf);
  p.add_obj(x1, -0.75);
  p.add_obj(x2, 150.0);
  p.add_obj(x3, -0.02);
  p.add_obj(x4, 6.0);
  p.add_row("r1", {{x1, 0.25}, {x2, -60.0}, {x3, -0.04}, {x4, 9.0}},
            RowSense::LessEqual, 0.0);
  p.add_row("r2", {{x1, 0.5}, {x2, -90.0}, {x3, -0.02}, {x4, 3.0}},
            RowSense::LessEqual, 0.0);
  p.add_row("r3", {{x3, 1.0}}, RowSense::LessEqual, 1.0);
  SolveResult r = solve_lp(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(-0.05));
}

TEST_CASE("two-node network flow LP prices both nodes at marginal cost") {
  // One generator (cost 20, capacity 100) at node 1 serves 50 MW of demand
  // at node 2 over a line with reactance 0.1. Both nodal balance duals must
  // equal the marginal cost while the line is uncongested.
  ConicProgram p;
  p.sense = ObjSense::Maximize;
  const int g = p.add_var("g", 0, 100.0);
  const int f = p.add_var("f", -100.0, 100.0);
  const int th1 = p.add_var("theta1", 0.0, 0.0);  // reference angle
  const int th2 = p.add_var("theta2", -kInf, kInf);
  p.add_obj(g, -20.0);
  p.add_row("flow", {{f, 1.0}, {th1, -10.0}, {th2, 10.0}}, RowSense::Equal, 0.0);
  p.add_row("bal1", {{g, 1.0}, {f, -1.0}}, RowSense::Equal, 0.0);
  p.add_row("bal2", {{f, 1.0}}, RowSense::Equal, 50.0);

  SolveResult r = solve_lp(p);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(-1000.0));
  CHECK(r.x[g] == doctest::Approx(50.0));
  CHECK(r.x[f] == doctest::Approx(50.0));
  CHECK(r.x[th2] == doctest::Approx(-5.0));
  CHECK(r.row_duals[1] == doctest::Approx(20.0));
  CHECK(r.row_duals[2] == doctest::Approx(20.0));
}

TEST_CASE("warm start after bound changes and basis restore") {
  ConicProgram p;
  p.sense = ObjSense::Maximize;
  const int a = p.add_var("a", 0, 1.0);
  const int b = p.add_var("b", 0, 1.0);
  p.add_obj(a, 5.0);
  p.add_obj(b, 4.0);
  p.add_row("w", {{a, 3.0}, {b, 2.0}}, RowSense::LessEqual, 4.0);

  detail::SimplexEngine eng(p, detail::EngineOptions{});
  REQUIRE(eng.primal_from_scratch() == detail::LpStatus::Optimal);
  CHECK(eng.user_objective() == doctest::Approx(22.0 / 3.0));  // a = 2/3, b = 1
  detail::BasisSnapshot snap = eng.snapshot();

  SUBCASE("tightening a bound and reoptimizing dually") {
    eng.set_var_bounds(a, 0.0, 0.0);
    REQUIRE(eng.reoptimize() == detail::LpStatus::Optimal);
    CHECK(eng.user_objective() == doctest::Approx(4.0));  // b = 1

    eng.set_var_bounds(a, 0.0, 1.0);
    REQUIRE(eng.restore(snap));
    REQUIRE(eng.reoptimize() == detail::LpStatus::Optimal);
    CHECK(eng.user_objective() == doctest::Approx(22.0 / 3.0));
  }

  SUBCASE("adding a cut on the fly") {
    Row cut;
    cut.name = "cut";
    cut.terms = {{a, 1.0}, {b, 1.0}};
    cut.sense = RowSense::LessEqual;
    cut.rhs = 1.0;
    eng.add_row(cut);
    REQUIRE(eng.reoptimize() == detail::LpStatus::Optimal);
    // a + b <= 1 with 3a + 2b <= 4: best is a = 1, b = 0.
    CHECK(eng.user_objective() == doctest::Approx(5.0));
  }

  SUBCASE("fixing to an infeasible box is detected") {
    eng.set_var_bounds(a, 1.0, 1.0);
    eng.set_var_bounds(b, 1.0, 1.0);  // 3 + 2 > 4
    CHECK(eng.reoptimize() == detail::LpStatus::Infeasible);
  }
}

TEST_CASE("solve_lp rejects non-LP programs") {
  ConicProgram p;
  const int x = p.add_var("x", 0, 1, VarKind::Binary);
  p.add_obj(x, 1.0);
  CHECK(solve_lp(p).status == SolveStatus::Error);
}
