#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace ccepec {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { Continuous, Binary };
enum class RowSense { LessEqual, GreaterEqual, Equal };
enum class ObjSense { Maximize, Minimize };

struct Variable {
  std::string name;
  double lb = 0.0;
  double ub = kInf;
  VarKind kind = VarKind::Continuous;
};

struct LinTerm {
  int var = -1;
  double coef = 0.0;
};

// Sparse affine scalar expression. Used for SOC tail entries, which may be a
// plain constant (existing capacity * sigma) or a scaled investment variable.
struct LinExpr {
  std::vector<LinTerm> terms;
  double constant = 0.0;

  LinExpr() = default;
  explicit LinExpr(double c) : constant(c) {}
  LinExpr(int var, double coef, double c = 0.0) : constant(c) {
    terms.push_back({var, coef});
  }
  void add(int var, double coef) { terms.push_back({var, coef}); }
  double eval(const std::vector<double>& x) const {
    double v = constant;
    for (const auto& t : terms) v += t.coef * x[t.var];
    return v;
  }
};

struct Row {
  std::string name;
  std::vector<LinTerm> terms;
  RowSense sense = RowSense::LessEqual;
  double rhs = 0.0;
};

// Membership [head; tail] in the second-order cone: vars[head] >= ||tail||_2.
struct SocConstraint {
  std::string name;
  int head = -1;
  std::vector<LinExpr> tail;
};

// At most one member may be nonzero. Members must be nonnegative variables.
struct Sos1Set {
  std::string name;
  std::vector<int> vars;
};

// Solver-agnostic mixed-integer conic program in natural (not standard) form.
//
// Dual convention for continuous solves, Maximize sense: row duals y satisfy
//   c_j + sum_r y_r a_rj = 0      for basic variables strictly inside bounds,
// and the reduced cost rc_j = c_j + sum_r y_r a_rj obeys rc <= 0 at a lower
// bound, rc >= 0 at an upper bound. For Minimize the signs flip. This matches
// the Lagrangian L = obj + sum_r y_r (lhs_r - rhs_r), so for a nodal balance
// row written "generation - outflow = demand" the dual is the marginal value
// of serving one more MW (the locational price).
struct ConicProgram {
  std::string name = "program";
  ObjSense sense = ObjSense::Maximize;
  std::vector<Variable> vars;
  std::vector<Row> rows;
  std::vector<SocConstraint> cones;
  std::vector<Sos1Set> sos1;
  std::vector<LinTerm> objective;
  double objective_constant = 0.0;

  int add_var(const std::string& name, double lb, double ub,
              VarKind kind = VarKind::Continuous);
  int add_row(const std::string& name, std::vector<LinTerm> terms,
              RowSense sense, double rhs);
  void add_obj(int var, double coef) { objective.push_back({var, coef}); }
  void add_cone(const std::string& name, int head, std::vector<LinExpr> tail);
  void add_sos1(const std::string& name, std::vector<int> members);

  int num_vars() const { return static_cast<int>(vars.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }
  bool is_pure_lp() const;

  double eval_objective(const std::vector<double>& x) const;
  double row_activity(int row, const std::vector<double>& x) const;

  // Returns "" when well formed, otherwise the first problem found:
  // dangling variable references, inverted or non-binary bounds on binaries,
  // SOC heads without a nonnegative lower bound, duplicate names are allowed
  // but empty names are not.
  std::string validate() const;
};

enum class SolveStatus {
  Optimal,
  Infeasible,
  Unbounded,
  IterationLimit,  // node, simplex-iteration or wall-time budget exhausted
  GapLimit,        // stopped at the requested relative gap, gap > 0
  Error,
};

const char* to_string(SolveStatus s);

struct SolveStats {
  long simplex_iterations = 0;
  long nodes = 0;
  long soc_cuts = 0;
  double wall_seconds = 0.0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::Error;
  std::vector<double> x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double best_bound = std::numeric_limits<double>::quiet_NaN();
  // Row duals and reduced costs are filled for continuous solves only,
  // following the convention documented on ConicProgram.
  std::vector<double> row_duals;
  std::vector<double> reduced_costs;
  SolveStats stats;
  std::string message;

  bool ok() const {
    return status == SolveStatus::Optimal || status == SolveStatus::GapLimit;
  }
};

}  // namespace ccepec
