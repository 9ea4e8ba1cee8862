#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ccepec/solver/program.hpp"
#include "ccepec/solver/solve.hpp"

namespace ccepec {

// LP-format-safe variable names for `p`, index aligned with p.vars. Names are
// sanitized to [A-Za-z0-9_], prefixed when they would start with a digit or
// look like an exponent, and uniquified. Both the writer and the solution
// reader use this mapping, so files and programs stay in correspondence.
std::vector<std::string> lp_safe_names(const ConicProgram& p);

// Writes `p` as CPLEX-style LP text. Second-order cones become bracketed
// quadratic rows [sum c_j v_j^2 - y^2] <= rhs with rhs <= 0; tail entries
// that are not a plain scaled variable get an auxiliary free variable and a
// defining equality. A nonzero objective constant is carried by a variable
// fixed to 1. SOS1 sets use the "name: S1:: var:weight" syntax.
void write_lp_file(const ConicProgram& p, const std::string& path);

// Parses a file in the dialect written by write_lp_file back into a program.
// Quadratic rows are reconstructed as cones (a negative rhs becomes a single
// constant tail entry). Throws std::runtime_error with a line reference on
// malformed input, including quadratic rows with positive rhs.
ConicProgram parse_lp_file(const std::string& path);

// Reads a solution file of "name value" lines (an optional "objective value"
// line is honored; blank lines, comments and anything that is not a
// name/number pair are skipped). Values are matched to p's variables via
// lp_safe_names. A variable with no value in the file yields an Error result
// naming it.
SolveResult read_solution_file(const ConicProgram& p, const std::string& path);

// Writes a solution file in the format read_solution_file understands.
void write_solution_file(const ConicProgram& p, const SolveResult& r,
                         const std::string& path);

// Solves `p` by shelling out: writes the LP to a temp file, substitutes {lp}
// and {sol} in cmd_template, runs it, and reads the solution back. The
// objective is recomputed from the returned point rather than trusted.
SolveResult solve_external(const ConicProgram& p,
                           const std::string& cmd_template);

// Command template from CCEPEC_SOLVER_CMD, if set and nonempty.
std::optional<std::string> external_solver_from_env();

}  // namespace ccepec
