#include "ccepec/solver/program.hpp"

#include <sstream>
#include <unordered_set>

namespace ccepec {

int ConicProgram::add_var(const std::string& name, double lb, double ub,
                          VarKind kind) {
  vars.push_back({name, lb, ub, kind});
  return static_cast<int>(vars.size()) - 1;
}

int ConicProgram::add_row(const std::string& name, std::vector<LinTerm> terms,
                          RowSense sense, double rhs) {
  rows.push_back({name, std::move(terms), sense, rhs});
  return static_cast<int>(rows.size()) - 1;
}

void ConicProgram::add_cone(const std::string& name, int head,
                            std::vector<LinExpr> tail) {
  cones.push_back({name, head, std::move(tail)});
}

void ConicProgram::add_sos1(const std::string& name, std::vector<int> members) {
  sos1.push_back({name, std::move(members)});
}

bool ConicProgram::is_pure_lp() const {
  if (!cones.empty() || !sos1.empty()) return false;
  for (const auto& v : vars)
    if (v.kind == VarKind::Binary) return false;
  return true;
}

double ConicProgram::eval_objective(const std::vector<double>& x) const {
  double v = objective_constant;
  for (const auto& t : objective) v += t.coef * x[t.var];
  return v;
}

double ConicProgram::row_activity(int row, const std::vector<double>& x) const {
  double v = 0.0;
  for (const auto& t : rows[row].terms) v += t.coef * x[t.var];
  return v;
}

std::string ConicProgram::validate() const {
  const int n = num_vars();
  auto bad_ref = [n](int v) { return v < 0 || v >= n; };
  std::ostringstream err;
  for (int j = 0; j < n; ++j) {
    const auto& v = vars[j];
    if (v.name.empty()) {
      err << "variable " << j << " has an empty name";
      return err.str();
    }
    if (v.lb > v.ub) {
      err << "variable " << v.name << " has lb " << v.lb << " > ub " << v.ub;
      return err.str();
    }
    if (v.kind == VarKind::Binary && (v.lb < 0.0 || v.ub > 1.0)) {
      err << "binary variable " << v.name << " has bounds outside [0,1]";
      return err.str();
    }
  }
  for (const auto& r : rows) {
    for (const auto& t : r.terms)
      if (bad_ref(t.var)) {
        err << "row " << r.name << " references unknown variable " << t.var;
        return err.str();
      }
    if (!std::isfinite(r.rhs)) {
      err << "row " << r.name << " has non-finite rhs";
      return err.str();
    }
  }
  for (const auto& t : objective)
    if (bad_ref(t.var)) {
      err << "objective references unknown variable " << t.var;
      return err.str();
    }
  for (const auto& c : cones) {
    if (bad_ref(c.head)) {
      err << "cone " << c.name << " has an unknown head variable";
      return err.str();
    }
    if (vars[c.head].lb < 0.0) {
      err << "cone " << c.name << " head " << vars[c.head].name
          << " must have lower bound >= 0";
      return err.str();
    }
    for (const auto& e : c.tail)
      for (const auto& t : e.terms)
        if (bad_ref(t.var)) {
          err << "cone " << c.name << " tail references unknown variable";
          return err.str();
        }
  }
  for (const auto& s : sos1) {
    if (s.vars.size() < 2) {
      err << "SOS1 set " << s.name << " needs at least two members";
      return err.str();
    }
    std::unordered_set<int> seen;
    for (int v : s.vars) {
      if (bad_ref(v)) {
        err << "SOS1 set " << s.name << " references unknown variable " << v;
        return err.str();
      }
      if (vars[v].lb < 0.0) {
        err << "SOS1 member " << vars[v].name << " must be nonnegative";
        return err.str();
      }
      if (!seen.insert(v).second) {
        err << "SOS1 set " << s.name << " lists " << vars[v].name << " twice";
        return err.str();
      }
    }
  }
  return "";
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::IterationLimit: return "iteration-limit";
    case SolveStatus::GapLimit: return "gap-limit";
    case SolveStatus::Error: return "error";
  }
  return "unknown";
}

}  // namespace ccepec
