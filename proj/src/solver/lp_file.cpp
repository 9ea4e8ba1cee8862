#include "ccepec/solver/lp_file.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ccepec {

namespace {

constexpr double kInfThreshold = 1e30;

std::string num_str(double v) {
  if (v >= kInfThreshold) return "1e+30";
  if (v <= -kInfThreshold) return "-1e+30";
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string sanitize_name(const std::string& raw, const char* prefix,
                          size_t idx) {
  std::string s;
  s.reserve(raw.size());
  for (char c : raw)
    s += (std::isalnum(static_cast<unsigned char>(c)) || c == '_') ? c : '_';
  if (s.empty()) return std::string(prefix) + std::to_string(idx);
  const char c0 = s[0];
  const bool exponent_like =
      (c0 == 'e' || c0 == 'E') && s.size() > 1 &&
      std::isdigit(static_cast<unsigned char>(s[1]));
  if (std::isdigit(static_cast<unsigned char>(c0)) || exponent_like)
    s = std::string(prefix) + "_" + s;
  return s;
}

std::string uniquify(const std::string& base, std::set<std::string>& used) {
  std::string cand = base;
  for (int k = 2; !used.insert(cand).second; ++k)
    cand = base + "_" + std::to_string(k);
  return cand;
}

// Token-wrapping line emitter so long expressions stay readable and under
// classic LP line-length limits.
class LineWriter {
 public:
  explicit LineWriter(std::ostream& os) : os_(os) {}
  void begin(const std::string& head) {
    os_ << head;
    col_ = head.size();
  }
  void tok(const std::string& t) {
    if (col_ + t.size() + 1 > 76) {
      os_ << "\n  ";
      col_ = 2;
    }
    os_ << ' ' << t;
    col_ += t.size() + 1;
  }
  void end() { os_ << '\n'; }

 private:
  std::ostream& os_;
  size_t col_ = 0;
};

void emit_term(LineWriter& lw, double coef, const std::string& name,
               bool& first) {
  if (coef == 0.0) return;
  if (coef < 0)
    lw.tok("-");
  else if (!first)
    lw.tok("+");
  const double mag = std::abs(coef);
  if (mag != 1.0) lw.tok(num_str(mag));
  lw.tok(name);
  first = false;
}

const char* sense_str(RowSense s) {
  switch (s) {
    case RowSense::LessEqual: return "<=";
    case RowSense::GreaterEqual: return ">=";
    default: return "=";
  }
}

}  // namespace

std::vector<std::string> lp_safe_names(const ConicProgram& p) {
  std::vector<std::string> out;
  out.reserve(p.vars.size());
  std::set<std::string> used;
  for (size_t j = 0; j < p.vars.size(); ++j)
    out.push_back(uniquify(sanitize_name(p.vars[j].name, "x", j), used));
  return out;
}

void write_lp_file(const ConicProgram& p, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");

  std::vector<std::string> names = lp_safe_names(p);
  std::set<std::string> used_vars(names.begin(), names.end());
  std::set<std::string> used_rows{"obj"};

  // Cones are planned up front: tail entries that are not a plain scaled
  // variable need an auxiliary variable with a defining equality, constant
  // entries fold into the right-hand side.
  struct AuxDef {
    std::string var_name, row_name;
    const LinExpr* expr;
  };
  struct ConePlan {
    std::string row_name;
    std::vector<std::pair<std::string, double>> quads;  // name, coefficient
    std::vector<AuxDef> defs;
    double rhs = 0.0;
  };
  std::vector<ConePlan> plans;
  plans.reserve(p.cones.size());
  for (size_t c = 0; c < p.cones.size(); ++c) {
    const auto& cone = p.cones[c];
    ConePlan plan;
    plan.row_name = uniquify(sanitize_name(cone.name, "q", c), used_rows);
    plan.quads.push_back({names[cone.head], -1.0});
    for (size_t j = 0; j < cone.tail.size(); ++j) {
      const auto& e = cone.tail[j];
      if (e.terms.empty()) {
        plan.rhs -= e.constant * e.constant;
      } else if (e.terms.size() == 1 && e.constant == 0.0) {
        plan.quads.push_back(
            {names[e.terms[0].var], e.terms[0].coef * e.terms[0].coef});
      } else {
        AuxDef d;
        d.var_name = uniquify(plan.row_name + "_t" + std::to_string(j),
                              used_vars);
        d.row_name = uniquify(plan.row_name + "_d" + std::to_string(j),
                              used_rows);
        d.expr = &e;
        plan.quads.push_back({d.var_name, 1.0});
        plan.defs.push_back(std::move(d));
      }
    }
    plans.push_back(std::move(plan));
  }

  std::string objconst_name;
  if (p.objective_constant != 0.0)
    objconst_name = uniquify("objconst", used_vars);

  os << "\\ Problem: " << p.name << "\n";
  os << (p.sense == ObjSense::Maximize ? "Maximize" : "Minimize") << "\n";
  {
    LineWriter lw(os);
    lw.begin(" obj:");
    bool first = true;
    for (const auto& t : p.objective) emit_term(lw, t.coef, names[t.var], first);
    if (!objconst_name.empty())
      emit_term(lw, p.objective_constant, objconst_name, first);
    lw.end();
  }

  os << "Subject To\n";
  for (size_t r = 0; r < p.rows.size(); ++r) {
    const auto& row = p.rows[r];
    LineWriter lw(os);
    lw.begin(" " + uniquify(sanitize_name(row.name, "c", r), used_rows) + ":");
    bool first = true;
    for (const auto& t : row.terms) emit_term(lw, t.coef, names[t.var], first);
    if (first) lw.tok("0 " + names[0]);  // degenerate empty row
    lw.tok(sense_str(row.sense));
    lw.tok(num_str(row.rhs));
    lw.end();
  }
  for (const auto& plan : plans) {
    for (const auto& d : plan.defs) {
      LineWriter lw(os);
      lw.begin(" " + d.row_name + ":");
      bool first = true;
      for (const auto& t : d.expr->terms) emit_term(lw, t.coef, names[t.var], first);
      emit_term(lw, -1.0, d.var_name, first);
      lw.tok("=");
      lw.tok(num_str(-d.expr->constant));
      lw.end();
    }
    LineWriter lw(os);
    lw.begin(" " + plan.row_name + ":");
    lw.tok("[");
    bool first = true;
    for (const auto& [nm, coef] : plan.quads) {
      if (coef < 0)
        lw.tok("-");
      else if (!first)
        lw.tok("+");
      const double mag = std::abs(coef);
      if (mag != 1.0) lw.tok(num_str(mag));
      lw.tok(nm + "^2");
      first = false;
    }
    lw.tok("]");
    lw.tok("<=");
    lw.tok(num_str(plan.rhs));
    lw.end();
  }

  os << "Bounds\n";
  for (size_t j = 0; j < p.vars.size(); ++j) {
    const auto& v = p.vars[j];
    if (v.kind == VarKind::Binary) continue;
    if (v.lb == 0.0 && v.ub >= kInf) continue;  // LP default
    if (v.lb <= -kInf && v.ub >= kInf) {
      os << " " << names[j] << " free\n";
    } else if (v.lb == v.ub) {
      os << " " << names[j] << " = " << num_str(v.lb) << "\n";
    } else {
      os << " " << num_str(v.lb) << " <= " << names[j] << " <= "
         << num_str(v.ub) << "\n";
    }
  }
  for (const auto& plan : plans)
    for (const auto& d : plan.defs) os << " " << d.var_name << " free\n";
  if (!objconst_name.empty()) os << " " << objconst_name << " = 1\n";

  bool any_bin = false;
  for (const auto& v : p.vars)
    if (v.kind == VarKind::Binary) any_bin = true;
  if (any_bin) {
    os << "Binaries\n";
    LineWriter lw(os);
    lw.begin("");
    for (size_t j = 0; j < p.vars.size(); ++j)
      if (p.vars[j].kind == VarKind::Binary) lw.tok(names[j]);
    lw.end();
  }

  if (!p.sos1.empty()) {
    os << "SOS\n";
    for (size_t s = 0; s < p.sos1.size(); ++s) {
      LineWriter lw(os);
      lw.begin(" " + uniquify(sanitize_name(p.sos1[s].name, "s", s), used_rows) +
               ": S1::");
      for (size_t m = 0; m < p.sos1[s].vars.size(); ++m)
        lw.tok(names[p.sos1[s].vars[m]] + ":" + std::to_string(m + 1));
      lw.end();
    }
  }

  os << "End\n";
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

namespace {

struct Tok {
  enum Kind { Name, Num, Punct } kind;
  std::string text;
  double num = 0.0;
  int line = 0;
};

[[noreturn]] void parse_fail(int line, const std::string& what) {
  throw std::runtime_error("lp parse error at line " + std::to_string(line) +
                           ": " + what);
}

void lex_line(const std::string& line, int lineno, std::vector<Tok>& out) {
  size_t i = 0;
  const size_t n = line.size();
  while (i < n) {
    const char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < n &&
         std::isdigit(static_cast<unsigned char>(line[i + 1])))) {
      size_t j = i;
      while (j < n && (std::isdigit(static_cast<unsigned char>(line[j])) ||
                       line[j] == '.'))
        ++j;
      if (j < n && (line[j] == 'e' || line[j] == 'E')) {
        size_t k = j + 1;
        if (k < n && (line[k] == '+' || line[k] == '-')) ++k;
        if (k < n && std::isdigit(static_cast<unsigned char>(line[k]))) {
          ++k;
          while (k < n && std::isdigit(static_cast<unsigned char>(line[k])))
            ++k;
          j = k;
        }
      }
      const std::string text = line.substr(i, j - i);
      out.push_back({Tok::Num, text, std::strtod(text.c_str(), nullptr),
                     lineno});
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < n && (std::isalnum(static_cast<unsigned char>(line[j])) ||
                       line[j] == '_' || line[j] == '.'))
        ++j;
      out.push_back({Tok::Name, line.substr(i, j - i), 0.0, lineno});
      i = j;
      continue;
    }
    if (c == '<' || c == '>') {
      std::string t(1, c);
      if (i + 1 < n && line[i + 1] == '=') ++i;
      out.push_back({Tok::Punct, t + "=", 0.0, lineno});
      ++i;
      continue;
    }
    if (c == ':') {
      if (i + 1 < n && line[i + 1] == ':') {
        out.push_back({Tok::Punct, "::", 0.0, lineno});
        i += 2;
      } else {
        out.push_back({Tok::Punct, ":", 0.0, lineno});
        ++i;
      }
      continue;
    }
    if (std::strchr("=+-*/[]^", c)) {
      out.push_back({Tok::Punct, std::string(1, c), 0.0, lineno});
      ++i;
      continue;
    }
    parse_fail(lineno, std::string("unexpected character '") + c + "'");
  }
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Cursor over a token stream.
struct Cur {
  const std::vector<Tok>* t = nullptr;
  size_t i = 0;
  bool done() const { return i >= t->size(); }
  const Tok& peek(size_t k = 0) const { return (*t)[i + k]; }
  const Tok& take() { return (*t)[i++]; }
  bool is_punct(const char* s, size_t k = 0) const {
    return i + k < t->size() && (*t)[i + k].kind == Tok::Punct &&
           (*t)[i + k].text == s;
  }
  int line() const {
    if (t->empty()) return 0;
    return i < t->size() ? (*t)[i].line : t->back().line;
  }
};

// Reads an optional sign sequence, returning the accumulated sign.
double read_sign(Cur& c) {
  double s = 1.0;
  while (!c.done() && (c.is_punct("+") || c.is_punct("-"))) {
    if (c.is_punct("-")) s = -s;
    c.take();
  }
  return s;
}

// Reads a signed numeric value; Name tokens inf/infinity count as infinity.
double read_value(Cur& c) {
  const double s = read_sign(c);
  if (c.done()) parse_fail(c.line(), "expected a number");
  const Tok& tk = c.take();
  if (tk.kind == Tok::Num) {
    double v = tk.num;
    if (v >= kInfThreshold) v = kInf;
    return s * v;
  }
  if (tk.kind == Tok::Name) {
    const std::string l = lower(tk.text);
    if (l == "inf" || l == "infinity") return s * kInf;
  }
  parse_fail(tk.line, "expected a number, got '" + tk.text + "'");
}

}  // namespace

ConicProgram parse_lp_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");

  enum Section { None, Obj, Rows, Bnds, Bins, Sos } section = None;
  std::vector<Tok> obj_toks, row_toks, bnd_toks, bin_toks, sos_toks;
  ConicProgram prog;
  prog.name = "lp";
  bool saw_obj_header = false;

  std::string line;
  int lineno = 0;
  bool ended = false;
  while (!ended && std::getline(in, line)) {
    ++lineno;
    if (const size_t pos = line.find('\\'); pos != std::string::npos) {
      const std::string comment = line.substr(pos + 1);
      if (const size_t p2 = comment.find("Problem:"); p2 != std::string::npos) {
        std::istringstream cs(comment.substr(p2 + 8));
        std::string nm;
        if (cs >> nm) prog.name = nm;
      }
      line.resize(pos);
    }
    std::string trimmed = line;
    while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.front())))
      trimmed.erase(trimmed.begin());
    while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back())))
      trimmed.pop_back();
    const std::string key = lower(trimmed);
    if (key.empty()) continue;
    if (key == "maximize" || key == "max") {
      prog.sense = ObjSense::Maximize;
      section = Obj;
      saw_obj_header = true;
      continue;
    }
    if (key == "minimize" || key == "min") {
      prog.sense = ObjSense::Minimize;
      section = Obj;
      saw_obj_header = true;
      continue;
    }
    if (key == "subject to" || key == "st" || key == "s.t." ||
        key == "such that") {
      section = Rows;
      continue;
    }
    if (key == "bounds") {
      section = Bnds;
      continue;
    }
    if (key == "binary" || key == "binaries" || key == "bin") {
      section = Bins;
      continue;
    }
    if (key == "general" || key == "generals" || key == "gen" ||
        key == "semi-continuous" || key == "semis") {
      parse_fail(lineno, "unsupported section '" + trimmed + "'");
    }
    if (key == "sos") {
      section = Sos;
      continue;
    }
    if (key == "end") {
      ended = true;
      continue;
    }
    switch (section) {
      case None: parse_fail(lineno, "content before objective section");
      case Obj: lex_line(line, lineno, obj_toks); break;
      case Rows: lex_line(line, lineno, row_toks); break;
      case Bnds: lex_line(line, lineno, bnd_toks); break;
      case Bins: lex_line(line, lineno, bin_toks); break;
      case Sos: lex_line(line, lineno, sos_toks); break;
    }
  }
  if (!saw_obj_header)
    throw std::runtime_error("lp parse error: no objective section in '" +
                             path + "'");

  std::map<std::string, int> var_of;
  auto var_idx = [&](const std::string& name) {
    auto it = var_of.find(name);
    if (it != var_of.end()) return it->second;
    const int j = prog.add_var(name, 0.0, kInf);
    var_of.emplace(name, j);
    return j;
  };

  // Linear expression: [name :] (sign coef? var | sign const)*; stops at a
  // sense token, '[' or end. Constants accumulate separately.
  auto parse_linear = [&](Cur& c, std::vector<LinTerm>& terms, double& cst) {
    while (!c.done()) {
      if (c.is_punct("<=") || c.is_punct(">=") || c.is_punct("=") ||
          c.is_punct("["))
        return;
      const double sign = read_sign(c);
      if (c.done()) parse_fail(c.line(), "dangling sign");
      double coef = 1.0;
      bool have_num = false;
      if (c.peek().kind == Tok::Num) {
        coef = c.take().num;
        have_num = true;
        if (c.is_punct("*")) c.take();
      }
      if (!c.done() && c.peek().kind == Tok::Name) {
        terms.push_back({var_idx(c.take().text), sign * coef});
      } else if (have_num) {
        cst += sign * coef;
      } else {
        parse_fail(c.line(), "expected a term");
      }
    }
  };

  auto row_name_prefix = [&](Cur& c, const char* prefix, size_t count) {
    if (!c.done() && c.peek().kind == Tok::Name && c.is_punct(":", 1) &&
        !c.is_punct("::", 1)) {
      std::string nm = c.take().text;
      c.take();  // ':'
      return nm;
    }
    return std::string(prefix) + std::to_string(count);
  };

  // Objective.
  {
    Cur c{&obj_toks, 0};
    row_name_prefix(c, "obj", 0);
    double cst = 0.0;
    parse_linear(c, prog.objective, cst);
    prog.objective_constant = cst;
    if (!c.done()) parse_fail(c.line(), "unexpected token in objective");
  }

  // Constraints, linear and quadratic.
  {
    Cur c{&row_toks, 0};
    size_t nrow = 0, ncone = 0;
    while (!c.done()) {
      std::string nm = row_name_prefix(c, "c", nrow + ncone);
      std::vector<LinTerm> terms;
      double cst = 0.0;
      parse_linear(c, terms, cst);
      if (c.is_punct("[")) {
        if (!terms.empty() || cst != 0.0)
          parse_fail(c.line(), "mixed linear and quadratic terms in '" + nm + "'");
        c.take();
        std::vector<std::pair<int, double>> quads;
        while (!c.done() && !c.is_punct("]")) {
          const double sign = read_sign(c);
          double coef = 1.0;
          if (!c.done() && c.peek().kind == Tok::Num) {
            coef = c.take().num;
            if (c.is_punct("*")) c.take();
          }
          if (c.done() || c.peek().kind != Tok::Name)
            parse_fail(c.line(), "expected a squared variable in '" + nm + "'");
          const int v = var_idx(c.take().text);
          if (!c.is_punct("^"))
            parse_fail(c.line(), "expected '^2' in quadratic row '" + nm + "'");
          c.take();
          if (c.done() || c.peek().kind != Tok::Num || c.peek().num != 2.0)
            parse_fail(c.line(), "only squares are supported in '" + nm + "'");
          c.take();
          quads.push_back({v, sign * coef});
        }
        if (c.done()) parse_fail(c.line(), "unterminated '[' in '" + nm + "'");
        c.take();  // ']'
        if (!c.is_punct("<="))
          parse_fail(c.line(), "quadratic row '" + nm + "' must use <=");
        c.take();
        const double rhs = read_value(c);
        if (rhs > 1e-12)
          parse_fail(c.line(), "quadratic row '" + nm +
                                   "' has positive right-hand side; not a "
                                   "second-order cone");
        int head = -1;
        SocConstraint cone;
        cone.name = nm;
        for (const auto& [v, coef] : quads) {
          if (coef < 0) {
            if (head >= 0)
              parse_fail(c.line(), "quadratic row '" + nm +
                                       "' has two negative squares");
            if (std::abs(coef + 1.0) > 1e-9)
              parse_fail(c.line(), "head coefficient in '" + nm +
                                       "' must be -1");
            head = v;
          } else if (coef > 0) {
            cone.tail.push_back(LinExpr(v, std::sqrt(coef)));
          }
        }
        if (head < 0)
          parse_fail(c.line(), "quadratic row '" + nm + "' has no head square");
        cone.head = head;
        if (rhs < 0) cone.tail.push_back(LinExpr(std::sqrt(-rhs)));
        prog.cones.push_back(std::move(cone));
        ++ncone;
        continue;
      }
      if (c.done()) parse_fail(c.line(), "row '" + nm + "' has no relation");
      const std::string rel = c.take().text;
      RowSense sense = rel == "<=" ? RowSense::LessEqual
                       : rel == ">=" ? RowSense::GreaterEqual
                                     : RowSense::Equal;
      const double rhs = read_value(c) - cst;
      Row row;
      row.name = nm;
      row.terms = std::move(terms);
      row.sense = sense;
      row.rhs = rhs;
      prog.rows.push_back(std::move(row));
      ++nrow;
    }
  }

  // Bounds.
  {
    Cur c{&bnd_toks, 0};
    while (!c.done()) {
      if (c.peek().kind == Tok::Name && !c.is_punct(":", 1)) {
        // name free | name <= v | name >= v | name = v
        const std::string nm = c.take().text;
        if (!c.done() && c.peek().kind == Tok::Name &&
            lower(c.peek().text) == "free") {
          c.take();
          const int j = var_idx(nm);
          prog.vars[j].lb = -kInf;
          prog.vars[j].ub = kInf;
          continue;
        }
        if (c.done()) parse_fail(c.line(), "incomplete bound for '" + nm + "'");
        const std::string rel = c.take().text;
        const double v = read_value(c);
        const int j = var_idx(nm);
        if (rel == "<=")
          prog.vars[j].ub = v;
        else if (rel == ">=")
          prog.vars[j].lb = v;
        else if (rel == "=")
          prog.vars[j].lb = prog.vars[j].ub = v;
        else
          parse_fail(c.line(), "bad bound relation '" + rel + "'");
        continue;
      }
      // v <= name [<= v]  |  v >= name [>= v]
      const double v1 = read_value(c);
      if (c.done() || c.peek().kind != Tok::Punct)
        parse_fail(c.line(), "malformed bound");
      const std::string rel = c.take().text;
      if (c.done() || c.peek().kind != Tok::Name)
        parse_fail(c.line(), "expected a variable name in bounds");
      const int j = var_idx(c.take().text);
      if (rel == "<=")
        prog.vars[j].lb = v1;
      else if (rel == ">=")
        prog.vars[j].ub = v1;
      else
        parse_fail(c.line(), "bad bound relation '" + rel + "'");
      if (!c.done() && c.peek().kind == Tok::Punct &&
          (c.is_punct("<=") || c.is_punct(">="))) {
        const std::string rel2 = c.take().text;
        const double v2 = read_value(c);
        if (rel2 != rel) parse_fail(c.line(), "inconsistent bound directions");
        if (rel == "<=")
          prog.vars[j].ub = v2;
        else
          prog.vars[j].lb = v2;
      }
    }
  }

  // Binaries.
  {
    Cur c{&bin_toks, 0};
    while (!c.done()) {
      if (c.peek().kind != Tok::Name)
        parse_fail(c.line(), "expected a variable name in binaries section");
      const int j = var_idx(c.take().text);
      prog.vars[j].kind = VarKind::Binary;
      if (prog.vars[j].lb == 0.0 && prog.vars[j].ub >= kInf)
        prog.vars[j].ub = 1.0;
    }
  }

  // SOS sets (type 1 only).
  {
    Cur c{&sos_toks, 0};
    size_t nset = 0;
    while (!c.done()) {
      std::string nm = "s" + std::to_string(nset);
      if (c.peek().kind == Tok::Name && c.is_punct(":", 1)) {
        nm = c.take().text;
        c.take();
      }
      if (c.done() || c.peek().kind != Tok::Name)
        parse_fail(c.line(), "expected SOS type");
      const std::string type = lower(c.take().text);
      if (type == "s2") parse_fail(c.line(), "SOS2 sets are not supported");
      if (type != "s1") parse_fail(c.line(), "bad SOS type '" + type + "'");
      if (!c.is_punct("::")) parse_fail(c.line(), "expected '::' after SOS type");
      c.take();
      Sos1Set set;
      set.name = nm;
      while (!c.done() && c.peek().kind == Tok::Name && c.is_punct(":", 1) &&
             c.i + 2 < c.t->size() && c.peek(2).kind == Tok::Num) {
        set.vars.push_back(var_idx(c.take().text));
        c.take();  // ':'
        c.take();  // weight, order is what matters
      }
      if (set.vars.empty())
        parse_fail(c.line(), "SOS set '" + nm + "' has no members");
      prog.sos1.push_back(std::move(set));
      ++nset;
    }
  }

  return prog;
}

SolveResult read_solution_file(const ConicProgram& p, const std::string& path) {
  SolveResult res;
  std::ifstream in(path);
  if (!in) {
    res.message = "cannot open solution file '" + path + "'";
    return res;
  }
  const std::vector<std::string> names = lp_safe_names(p);
  std::map<std::string, int> idx_of;
  for (size_t j = 0; j < names.size(); ++j)
    idx_of.emplace(names[j], static_cast<int>(j));

  std::vector<double> x(p.num_vars(),
                        std::numeric_limits<double>::quiet_NaN());
  bool have_obj = false;
  double obj = 0.0;

  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string name, value, extra;
    if (!(ls >> name >> value) || (ls >> extra)) continue;
    if (name[0] == '#' || name[0] == '\\') continue;
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0') continue;
    const std::string l = lower(name);
    if (l == "objective" || l == "obj") {
      have_obj = true;
      obj = v;
      continue;
    }
    if (auto it = idx_of.find(name); it != idx_of.end()) x[it->second] = v;
  }

  for (size_t j = 0; j < x.size(); ++j) {
    if (std::isnan(x[j])) {
      res.message = "solution file has no value for variable '" +
                    p.vars[j].name + "'";
      return res;
    }
  }
  res.status = SolveStatus::Optimal;
  res.x = std::move(x);
  res.objective = have_obj ? obj : p.eval_objective(res.x);
  res.best_bound = res.objective;
  return res;
}

void write_solution_file(const ConicProgram& p, const SolveResult& r,
                         const std::string& path) {
  if (r.x.size() != static_cast<size_t>(p.num_vars()))
    throw std::invalid_argument("solution size does not match program");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  const std::vector<std::string> names = lp_safe_names(p);
  os << "objective " << num_str(r.objective) << "\n";
  for (size_t j = 0; j < names.size(); ++j)
    os << names[j] << " " << num_str(r.x[j]) << "\n";
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

SolveResult solve_external(const ConicProgram& p,
                           const std::string& cmd_template) {
  SolveResult res;
  const auto t0 = std::chrono::steady_clock::now();
  char dir_template[] = "/tmp/ccepec_lp_XXXXXX";
  const char* dir = mkdtemp(dir_template);
  if (!dir) {
    res.message = "cannot create a temporary directory for the LP exchange";
    return res;
  }
  const std::string lp_path = std::string(dir) + "/problem.lp";
  const std::string sol_path = std::string(dir) + "/solution.sol";
  std::string cmd = cmd_template;
  for (const auto& [key, value] :
       {std::pair<std::string, std::string>{"{lp}", lp_path},
        {"{sol}", sol_path}}) {
    for (size_t pos; (pos = cmd.find(key)) != std::string::npos;)
      cmd.replace(pos, key.size(), value);
  }
  try {
    write_lp_file(p, lp_path);
    const int rc = std::system(cmd.c_str());
    if (rc != 0) {
      res.message = "external solver command failed with status " +
                    std::to_string(rc) + ": " + cmd;
    } else {
      res = read_solution_file(p, sol_path);
      if (res.ok()) {
        res.objective = p.eval_objective(res.x);
        res.best_bound = res.objective;
        res.message = "external backend";
      }
    }
  } catch (const std::exception& e) {
    res.status = SolveStatus::Error;
    res.message = e.what();
  }
  std::error_code ec;
  std::filesystem::remove_all(dir, ec);
  res.stats.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return res;
}

std::optional<std::string> external_solver_from_env() {
  const char* v = std::getenv("CCEPEC_SOLVER_CMD");
  if (v != nullptr && *v != '\0') return std::string(v);
  return std::nullopt;
}

}  // namespace ccepec
