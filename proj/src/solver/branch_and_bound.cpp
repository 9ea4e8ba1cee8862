#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <queue>
#include <sstream>
#include <vector>

#include "ccepec/solver/solve.hpp"
#include "simplex.hpp"

namespace ccepec {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

detail::EngineOptions engine_options(const BnbOptions& opt) {
  detail::EngineOptions e;
  e.feas_tol = opt.feas_tol;
  e.iter_limit = opt.max_simplex_iters;
  return e;
}

}  // namespace

SolveResult solve_lp(const ConicProgram& p) {
  SolveResult res;
  const auto t0 = Clock::now();
  if (std::string v = p.validate(); !v.empty()) {
    res.message = v;
    return res;
  }
  if (!p.is_pure_lp()) {
    res.message = "solve_lp requires a continuous linear program "
                  "(no binaries, SOS1 sets or cones)";
    return res;
  }
  detail::SimplexEngine eng(p, detail::EngineOptions{});
  const detail::LpStatus st = eng.primal_from_scratch();
  res.stats.simplex_iterations = eng.iterations();
  switch (st) {
    case detail::LpStatus::Optimal: {
      res.status = SolveStatus::Optimal;
      eng.get_values(res.x);
      res.objective = eng.user_objective();
      res.best_bound = res.objective;
      std::vector<double> y, rc;
      eng.get_duals(y, rc);
      y.resize(p.num_rows());  // engine rows == program rows here
      res.row_duals = std::move(y);
      res.reduced_costs = std::move(rc);
      break;
    }
    case detail::LpStatus::Infeasible:
      res.status = SolveStatus::Infeasible;
      break;
    case detail::LpStatus::Unbounded:
      res.status = SolveStatus::Unbounded;
      break;
    case detail::LpStatus::IterLimit:
      res.status = SolveStatus::IterationLimit;
      res.message = "simplex iteration limit reached";
      break;
    case detail::LpStatus::NumFail:
      res.status = SolveStatus::Error;
      res.message = "simplex numerical failure";
      break;
  }
  res.stats.wall_seconds = seconds_since(t0);
  return res;
}

std::optional<Row> soc_violation_cut(const std::vector<double>& x,
                                     const SocConstraint& cone, double tol) {
  const double head = x[cone.head];
  double norm2 = 0.0;
  std::vector<double> v(cone.tail.size());
  for (size_t j = 0; j < cone.tail.size(); ++j) {
    v[j] = cone.tail[j].eval(x);
    norm2 += v[j] * v[j];
  }
  const double norm = std::sqrt(norm2);
  if (norm <= tol) {
    if (head >= -tol) return std::nullopt;
    Row r;
    r.name = cone.name + "_cut0";
    r.terms.push_back({cone.head, 1.0});
    r.sense = RowSense::GreaterEqual;
    r.rhs = 0.0;
    return r;
  }
  if (head >= norm - tol * (1.0 + norm)) return std::nullopt;

  // head >= sum_j (v_j/||v||) * tail_j(x); constants of the tail move to rhs.
  Row r;
  r.name = cone.name + "_cut";
  r.sense = RowSense::GreaterEqual;
  std::vector<double> coef;  // dense over touched vars, gathered below
  std::vector<int> touched;
  std::vector<int> pos(x.size(), -1);
  double rhs = 0.0;
  for (size_t j = 0; j < cone.tail.size(); ++j) {
    const double w = v[j] / norm;
    rhs += w * cone.tail[j].constant;
    for (const auto& t : cone.tail[j].terms) {
      if (pos[t.var] < 0) {
        pos[t.var] = static_cast<int>(touched.size());
        touched.push_back(t.var);
        coef.push_back(0.0);
      }
      coef[pos[t.var]] -= w * t.coef;
    }
  }
  r.terms.push_back({cone.head, 1.0});
  for (size_t k = 0; k < touched.size(); ++k)
    if (coef[k] != 0.0) r.terms.push_back({touched[k], coef[k]});
  r.rhs = rhs;
  return r;
}

namespace {

struct Fix {
  int var;
  double lb, ub;
};

struct Node {
  double score;  // objective bound mapped so larger is always better
  long id;
  std::vector<Fix> fixes;
  std::shared_ptr<detail::BasisSnapshot> snap;
};

struct NodeWorse {
  bool operator()(const Node& a, const Node& b) const {
    if (a.score != b.score) return a.score < b.score;
    return a.id > b.id;
  }
};

struct Branch {
  bool is_sos = false;
  int idx = -1;     // SOS1 set index or binary variable index
  int member = -1;  // for SOS1: the member kept free in the dive child
  double frac = 0;  // for binaries: value
};

}  // namespace

SolveResult branch_and_bound(const ConicProgram& p, const BnbOptions& opt) {
  SolveResult res;
  const auto t0 = Clock::now();
  if (std::string v = p.validate(); !v.empty()) {
    res.message = v;
    return res;
  }

  const bool maxi = p.sense == ObjSense::Maximize;
  auto score_of = [maxi](double obj) { return maxi ? obj : -obj; };
  auto obj_of = [maxi](double score) { return maxi ? score : -score; };

  detail::SimplexEngine eng(p, engine_options(opt));
  std::vector<Row> cut_pool;
  std::vector<double> xcur;

  int rounds_this_node = 0;
  const int node_round_cap = std::max(opt.soc_cut_rounds * 10, 400);

  // Solves the engine's current state, then iterates SOC separation until
  // clean or the round budget for the current node is spent.
  auto solve_with_cuts = [&](bool fresh) -> detail::LpStatus {
    detail::LpStatus st = fresh ? eng.primal_from_scratch() : eng.reoptimize();
    while (st == detail::LpStatus::Optimal &&
           rounds_this_node < node_round_cap) {
      eng.get_values(xcur);
      int added = 0;
      for (const auto& cone : p.cones) {
        if (auto cut = soc_violation_cut(xcur, cone, opt.feas_tol)) {
          eng.add_row(*cut);
          cut_pool.push_back(*cut);
          ++added;
        }
      }
      if (added == 0) break;
      ++rounds_this_node;
      res.stats.soc_cuts += added;
      st = eng.reoptimize();
    }
    return st;
  };

  std::vector<int> binaries;
  for (int j = 0; j < p.num_vars(); ++j)
    if (p.vars[j].kind == VarKind::Binary) binaries.push_back(j);

  auto cones_clean = [&](const std::vector<double>& x) {
    for (const auto& cone : p.cones) {
      double n2 = 0.0;
      for (const auto& e : cone.tail) {
        const double v = e.eval(x);
        n2 += v * v;
      }
      const double n = std::sqrt(n2);
      if (x[cone.head] < n - opt.feas_tol * (1.0 + n)) return false;
    }
    return true;
  };

  auto find_branch = [&](const std::vector<double>& x) -> std::optional<Branch> {
    Branch best;
    double best_second = opt.int_tol;
    for (size_t s = 0; s < p.sos1.size(); ++s) {
      double largest = 0.0, second = 0.0;
      int member = -1;
      for (size_t m = 0; m < p.sos1[s].vars.size(); ++m) {
        const double av = std::abs(x[p.sos1[s].vars[m]]);
        if (av > largest) {
          second = largest;
          largest = av;
          member = static_cast<int>(m);
        } else if (av > second) {
          second = av;
        }
      }
      if (second > best_second) {
        best_second = second;
        best.is_sos = true;
        best.idx = static_cast<int>(s);
        best.member = member;
      }
    }
    if (best.is_sos) return best;
    double best_frac = opt.int_tol;
    for (int b : binaries) {
      const double f = std::abs(x[b] - std::round(x[b]));
      if (f > best_frac) {
        best_frac = f;
        best.idx = b;
        best.frac = x[b];
      }
    }
    if (best.idx >= 0) return best;
    return std::nullopt;
  };

  std::priority_queue<Node, std::vector<Node>, NodeWorse> heap;
  long next_id = 0;
  std::vector<Fix> applied;

  auto apply_fixes = [&](const std::vector<Fix>& want) {
    for (const auto& f : applied)
      eng.set_var_bounds(f.var, p.vars[f.var].lb, p.vars[f.var].ub);
    for (const auto& f : want) eng.set_var_bounds(f.var, f.lb, f.ub);
    applied = want;
  };

  bool have_inc = false;
  double inc_score = -kInf;
  std::vector<double> inc_x;

  auto improves = [&](double score) {
    if (!have_inc) return true;
    return score > inc_score + opt.rel_gap * std::max(1.0, std::abs(inc_score));
  };

  // Root relaxation.
  rounds_this_node = 0;
  detail::LpStatus rst = solve_with_cuts(true);
  if (rst == detail::LpStatus::Infeasible) {
    res.status = SolveStatus::Infeasible;
    res.message = "root relaxation infeasible";
    res.stats.simplex_iterations = eng.iterations();
    res.stats.wall_seconds = seconds_since(t0);
    return res;
  }
  if (rst == detail::LpStatus::Unbounded) {
    res.status = SolveStatus::Unbounded;
    res.message = "root relaxation unbounded";
    res.stats.simplex_iterations = eng.iterations();
    res.stats.wall_seconds = seconds_since(t0);
    return res;
  }
  if (rst != detail::LpStatus::Optimal) {
    res.status = rst == detail::LpStatus::IterLimit ? SolveStatus::IterationLimit
                                                    : SolveStatus::Error;
    res.message = "root relaxation did not solve";
    res.stats.simplex_iterations = eng.iterations();
    res.stats.wall_seconds = seconds_since(t0);
    return res;
  }

  heap.push(Node{score_of(eng.user_objective()), next_id++, {},
                 std::make_shared<detail::BasisSnapshot>(eng.snapshot())});

  SolveStatus final_status = SolveStatus::Optimal;
  std::string final_message;
  bool stopped_early = false;
  double chain_score = -kInf;  // bound of the active plunge chain, if any
  bool chain_active = false;

  auto out_of_budget = [&]() {
    if (res.stats.nodes >= opt.max_nodes) {
      final_message = "node limit reached";
      return true;
    }
    if (eng.iterations() >= opt.max_simplex_iters) {
      final_message = "simplex iteration limit reached";
      return true;
    }
    if (std::isfinite(opt.time_limit_seconds) &&
        seconds_since(t0) > opt.time_limit_seconds) {
      final_message = "time limit reached";
      return true;
    }
    return false;
  };

  while (!heap.empty() && !stopped_early) {
    Node node = heap.top();
    heap.pop();
    if (have_inc && !improves(node.score)) continue;

    apply_fixes(node.fixes);
    const bool restored = eng.restore(*node.snap);
    rounds_this_node = 0;
    detail::LpStatus st = solve_with_cuts(!restored);
    chain_active = true;
    std::vector<Fix> cur_fixes = node.fixes;

    while (chain_active) {
      ++res.stats.nodes;
      if (opt.log && res.stats.nodes % 512 == 0) {
        std::ostringstream msg;
        msg << "node " << res.stats.nodes << ": open " << heap.size();
        if (have_inc) msg << ", incumbent " << obj_of(inc_score);
        opt.log(msg.str());
      }
      if (out_of_budget()) {
        final_status = SolveStatus::IterationLimit;
        stopped_early = true;
        chain_score = (st == detail::LpStatus::Optimal)
                          ? score_of(eng.user_objective())
                          : node.score;
        break;
      }
      if (st == detail::LpStatus::Infeasible) {
        chain_active = false;
        break;
      }
      if (st == detail::LpStatus::IterLimit) {
        final_status = SolveStatus::IterationLimit;
        final_message = "simplex iteration limit reached";
        stopped_early = true;
        chain_score = node.score;
        break;
      }
      if (st == detail::LpStatus::Unbounded) {
        // A node relaxation wider than the root cannot appear; treat as the
        // true problem being unbounded.
        res.status = SolveStatus::Unbounded;
        res.message = "node relaxation unbounded";
        res.stats.simplex_iterations = eng.iterations();
        res.stats.wall_seconds = seconds_since(t0);
        return res;
      }
      if (st == detail::LpStatus::NumFail) {
        final_status = SolveStatus::Error;
        final_message = "numerical failure in node relaxation";
        stopped_early = true;
        chain_score = node.score;
        break;
      }

      const double obj = eng.user_objective();
      const double sc = score_of(obj);
      if (have_inc && !improves(sc)) {
        chain_active = false;
        break;
      }
      eng.get_values(xcur);
      auto br = find_branch(xcur);
      if (!br) {
        if (!cones_clean(xcur)) {
          if (rounds_this_node >= node_round_cap) {
            final_status = SolveStatus::Error;
            final_message = "cone separation stalled";
            stopped_early = true;
            chain_score = sc;
            break;
          }
          st = solve_with_cuts(false);
          continue;
        }
        // Feasible incumbent.
        if (!have_inc || sc > inc_score) {
          have_inc = true;
          inc_score = sc;
          inc_x = xcur;
          for (int b : binaries) inc_x[b] = std::round(inc_x[b]);
          if (opt.log) {
            std::ostringstream msg;
            msg << "node " << res.stats.nodes << ": incumbent "
                << obj_of(inc_score);
            opt.log(msg.str());
          }
        }
        chain_active = false;
        break;
      }

      // Branch: push the "other" child, dive into the preferred one.
      std::vector<Fix> fixesA = cur_fixes;
      std::vector<Fix> fixesB = cur_fixes;
      if (br->is_sos) {
        const auto& set = p.sos1[br->idx];
        for (size_t m = 0; m < set.vars.size(); ++m)
          if (static_cast<int>(m) != br->member)
            fixesA.push_back({set.vars[m], 0.0, 0.0});
        fixesB.push_back({set.vars[br->member], 0.0, 0.0});
      } else {
        const double r = std::round(br->frac);
        fixesA.push_back({br->idx, r, r});
        fixesB.push_back({br->idx, 1.0 - r, 1.0 - r});
      }
      auto snap = std::make_shared<detail::BasisSnapshot>(eng.snapshot());
      heap.push(Node{sc, next_id++, std::move(fixesB), snap});
      if (!opt.plunge) {
        heap.push(Node{sc, next_id++, std::move(fixesA), snap});
        chain_active = false;
        break;
      }
      // Dive.
      for (size_t k = cur_fixes.size(); k < fixesA.size(); ++k)
        eng.set_var_bounds(fixesA[k].var, fixesA[k].lb, fixesA[k].ub);
      cur_fixes = std::move(fixesA);
      applied = cur_fixes;
      rounds_this_node = 0;
      st = solve_with_cuts(false);
      node.score = sc;
    }

    if (stopped_early) break;
    // Gap-based termination against the best open node.
    if (have_inc && !heap.empty()) {
      const double open = heap.top().score;
      const double gap =
          (open - inc_score) / std::max(1.0, std::abs(inc_score));
      if (gap <= opt.rel_gap) {
        final_status = gap <= 1e-9 ? SolveStatus::Optimal : SolveStatus::GapLimit;
        stopped_early = true;
        chain_score = open;
      }
    }
  }

  res.stats.simplex_iterations = eng.iterations();
  res.stats.wall_seconds = seconds_since(t0);

  double bound_score;
  if (stopped_early) {
    bound_score = chain_score;
    if (!heap.empty()) bound_score = std::max(bound_score, heap.top().score);
    if (have_inc) bound_score = std::max(bound_score, inc_score);
  } else {
    final_status = have_inc ? SolveStatus::Optimal : SolveStatus::Infeasible;
    if (!have_inc) final_message = "search exhausted without a feasible point";
    bound_score = have_inc ? inc_score : -kInf;
  }

  res.status = final_status;
  res.message = final_message;
  res.best_bound = obj_of(bound_score);
  if (have_inc) {
    res.x = inc_x;
    res.objective = p.eval_objective(inc_x);
  } else if (final_status == SolveStatus::Optimal) {
    res.status = SolveStatus::Infeasible;
  }
  return res;
}

SolveResult solve(const ConicProgram& p, const BnbOptions& opt) {
  if (p.is_pure_lp()) return solve_lp(p);
  return branch_and_bound(p, opt);
}

}  // namespace ccepec
