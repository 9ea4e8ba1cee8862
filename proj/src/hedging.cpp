#include "ccepec/hedging.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ccepec/market.hpp"

namespace ccepec {

namespace {

// runs fn(0..n-1) on up to `jobs` threads; slot-indexed outputs keep the
// merge order fixed, and the lowest-index failure wins deterministically
template <typename F>
void for_each_actor(int n, int jobs, F&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::min(jobs, n);
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

PhSolveRecord make_record(const MpecInstance& inst,
                          const std::vector<double>& x, double objective,
                          int base_vars) {
  PhSolveRecord r;
  r.state = inst.state;
  r.objective = objective;
  const int hours = inst.hours, days = inst.days;
  const int units = inst.kkt.empty() ? 0 : inst.kkt[0].units;
  const int nodes = inst.kkt.empty() ? 0 : inst.kkt[0].nodes;
  r.g.resize(static_cast<std::size_t>(days) * units * hours);
  r.lambda.resize(static_cast<std::size_t>(days) * nodes * hours);
  for (int e = 0; e < days; ++e)
    for (int t = 0; t < hours; ++t) {
      for (int u = 0; u < units; ++u)
        r.g[(static_cast<std::size_t>(e) * units + u) * hours + t] =
            x[inst.kkt[e].g_var(u, t)];
      for (int n = 0; n < nodes; ++n)
        r.lambda[(static_cast<std::size_t>(e) * nodes + n) * hours + t] =
            x[inst.kkt[e].lambda_var(n, t)];
    }
  r.x_base.assign(x.begin(), x.begin() + base_vars);
  r.cand_ids = inst.cand_ids;
  for (int v : inst.inv) r.built_mw.push_back(x[v]);
  r.sched_ids = inst.sched_ids;
  r.gbar.resize(inst.sched_ids.size() * static_cast<std::size_t>(days) *
                hours);
  for (std::size_t su = 0; su < inst.sched_ids.size(); ++su)
    for (int e = 0; e < days; ++e)
      for (int t = 0; t < hours; ++t)
        r.gbar[su * days * hours + e * hours + t] =
            x[inst.gbar_var(static_cast<int>(su), t, e)];
  return r;
}

PhSolveRecord solve_one(const GridModel& grid, const PolicySet& policies,
                        const std::string& state, const PhState* st,
                        int actor, const PhOptions& opt, int round) {
  MpecInstance inst = build_mpec(grid, policies, state, {}, opt.mpec);
  const int base_vars = inst.program.num_vars();
  if (st) {
    const int hours = inst.hours, days = inst.days;
    const int units = inst.kkt.empty() ? 0 : inst.kkt[0].units;
    const int nodes = inst.kkt.empty() ? 0 : inst.kkt[0].nodes;
    for (int e = 0; e < days; ++e)
      for (int t = 0; t < hours; ++t) {
        for (int u = 0; u < units; ++u) {
          const std::size_t i =
              (static_cast<std::size_t>(e) * units + u) * hours + t;
          std::ostringstream tag;
          tag << "g_d" << e << "_u" << u << "_t" << t;
          append_ph_penalty(inst.program, inst.kkt[e].g_var(u, t),
                            st->m_g[actor][i], st->rho_g, st->avg_g[i],
                            opt.breakpoints, tag.str());
        }
        for (int n = 0; n < nodes; ++n) {
          const std::size_t i =
              (static_cast<std::size_t>(e) * nodes + n) * hours + t;
          std::ostringstream tag;
          tag << "l_d" << e << "_n" << n << "_t" << t;
          append_ph_penalty(inst.program, inst.kkt[e].lambda_var(n, t),
                            st->m_lambda[actor][i], st->rho_lambda,
                            st->avg_lambda[i], opt.breakpoints, tag.str());
        }
      }
  }
  SolveResult res = branch_and_bound(inst.program, opt.solver);
  if (res.status != SolveStatus::Optimal &&
      res.status != SolveStatus::GapLimit) {
    std::ostringstream os;
    os << "progressive hedging: solve for state '" << state << "' at round "
       << round << " ended " << to_string(res.status);
    throw std::runtime_error(os.str());
  }
  return make_record(inst, res.x, res.objective, base_vars);
}

}  // namespace

PhState ph_initialize(const GridModel& grid, const PolicySet& policies,
                      const PhOptions& opt) {
  if (grid.states.size() < 2)
    throw std::invalid_argument(
        "ph_initialize: an equilibrium needs at least two states, got " +
        std::to_string(grid.states.size()));
  for (const auto& s : grid.states)
    if (!policies.find(s))
      throw std::runtime_error("ph_initialize: no policy entry for state '" +
                               s + "'");
  if (opt.rho_g < 0.0 || opt.rho_lambda < 0.0)
    throw std::invalid_argument(
        "ph_initialize: penalty weights must be nonnegative");
  if (opt.breakpoints < 2)
    throw std::invalid_argument(
        "ph_initialize: the quadratic penalty needs at least two segments");
  if (opt.max_iter < 1)
    throw std::invalid_argument("ph_initialize: need at least one round");
  if (opt.jobs < 1)
    throw std::invalid_argument("ph_initialize: jobs must be positive");
  if ((opt.rho_g == 0.0 || opt.rho_lambda == 0.0) && opt.log)
    opt.log(
        "warning: zero penalty weight, rounds degenerate to repeated "
        "independent solves");

  PhState st;
  st.rho_g = opt.rho_g;
  st.rho_lambda = opt.rho_lambda;
  st.units = static_cast<int>(market_unit_ids(grid).size());
  st.nodes = static_cast<int>(grid.nodes.size());
  st.hours = grid.hours;
  st.days = static_cast<int>(grid.rep_days.size());
  st.actors = grid.states;
  const std::size_t gn =
      static_cast<std::size_t>(st.days) * st.units * st.hours;
  const std::size_t ln =
      static_cast<std::size_t>(st.days) * st.nodes * st.hours;
  st.m_g.assign(st.actors.size(), std::vector<double>(gn, 0.0));
  st.m_lambda.assign(st.actors.size(), std::vector<double>(ln, 0.0));
  return st;
}

std::vector<PhSolveRecord> initial_solve(const GridModel& grid,
                                         const PolicySet& policies,
                                         const PhOptions& opt) {
  std::vector<PhSolveRecord> records(grid.states.size());
  for_each_actor(static_cast<int>(grid.states.size()), opt.jobs, [&](int a) {
    records[a] =
        solve_one(grid, policies, grid.states[a], nullptr, a, opt, 1);
  });
  return records;
}

std::vector<double> consensus_average(
    const std::vector<std::vector<double>>& values) {
  if (values.empty())
    throw std::invalid_argument("consensus_average: no actors");
  const std::size_t n = values[0].size();
  for (const auto& v : values)
    if (v.size() != n) {
      std::ostringstream os;
      os << "consensus_average: vector of length " << v.size()
         << " against expected " << n;
      throw std::invalid_argument(os.str());
    }
  std::vector<double> avg(n, 0.0);
  for (const auto& v : values)
    for (std::size_t i = 0; i < n; ++i) avg[i] += v[i];
  for (double& a : avg) a /= static_cast<double>(values.size());
  return avg;
}

int append_ph_penalty(ConicProgram& p, int var, double multiplier, double rho,
                      double center, int breakpoints,
                      const std::string& tag) {
  if (var < 0 || var >= p.num_vars())
    throw std::invalid_argument("append_ph_penalty: variable out of range");
  if (breakpoints < 2)
    throw std::invalid_argument(
        "append_ph_penalty: need at least two segments");
  if (!(rho >= 0.0) || !std::isfinite(center))
    throw std::invalid_argument(
        "append_ph_penalty: penalty weight must be nonnegative and the "
        "center finite");
  if (multiplier != 0.0) p.add_obj(var, -multiplier);
  if (rho == 0.0) return -1;

  const Variable& v = p.vars[var];
  double w;
  if (std::isfinite(v.lb) && std::isfinite(v.ub))
    w = std::max(std::abs(v.lb - center), std::abs(v.ub - center));
  else
    w = std::max(1.0, std::abs(center));
  // the cuts only reach slope rho*w, so the linear multiplier term would win
  // past the outermost tangent on a free variable; widen the span until the
  // edge slope dominates the multiplier and the penalized objective stays
  // bounded along every ray
  w = std::max(w, 2.0 * std::abs(multiplier) / rho + 1.0);
  const int q = p.add_var("phq_" + tag, 0.0, kInf);
  p.add_obj(q, -0.5 * rho);
  if (w <= 0.0) return q;  // variable fixed at the center, nothing to cut

  auto cut = [&](int k, double d) {
    // tangent of the deviation parabola at d: q >= 2 d (x - center) - d^2
    p.add_row("phc" + std::to_string(k) + "_" + tag,
              {{q, 1.0}, {var, -2.0 * d}}, RowSense::GreaterEqual,
              -2.0 * d * center - d * d);
  };
  for (int k = 0; k <= breakpoints; ++k) {
    const double d = -w + 2.0 * w * k / breakpoints;
    if (std::abs(d) < 1e-12) continue;  // the zero tangent is the q >= 0 bound
    cut(k, d);
  }
  // a steep pair close to the center tightens the flat spot between the
  // innermost grid tangents, so large weights actually pin the variable
  cut(breakpoints + 1, w * 1e-4);
  cut(breakpoints + 2, -w * 1e-4);
  return q;
}

PhSolveRecord augment_and_solve(const GridModel& grid,
                                const PolicySet& policies, int actor,
                                const PhState& st, const PhOptions& opt) {
  if (actor < 0 || actor >= static_cast<int>(st.actors.size()))
    throw std::invalid_argument("augment_and_solve: actor index out of range");
  if (st.avg_g.empty() && st.avg_lambda.empty())
    throw std::invalid_argument(
        "augment_and_solve: no consensus averages yet, run the initial "
        "round first");
  return solve_one(grid, policies, st.actors[actor], &st, actor, opt,
                   st.iteration + 1);
}

void update_multipliers(PhState& st,
                        const std::vector<std::vector<double>>& g,
                        const std::vector<std::vector<double>>& lambda,
                        const std::vector<double>& g_avg,
                        const std::vector<double>& lambda_avg) {
  if (g.size() != st.actors.size() || lambda.size() != st.actors.size())
    throw std::invalid_argument(
        "update_multipliers: one value vector per actor required");
  for (std::size_t a = 0; a < st.actors.size(); ++a) {
    if (g[a].size() != g_avg.size() || g[a].size() != st.m_g[a].size() ||
        lambda[a].size() != lambda_avg.size() ||
        lambda[a].size() != st.m_lambda[a].size())
      throw std::invalid_argument("update_multipliers: shape mismatch");
    for (std::size_t i = 0; i < g_avg.size(); ++i)
      st.m_g[a][i] += st.rho_g * (g[a][i] - g_avg[i]);
    for (std::size_t i = 0; i < lambda_avg.size(); ++i)
      st.m_lambda[a][i] += st.rho_lambda * (lambda[a][i] - lambda_avg[i]);
  }
  ++st.iteration;
}

double compute_tolerance(const std::vector<std::vector<double>>& values,
                         const std::vector<double>& avg) {
  double spread = 0.0;
  for (const auto& v : values) {
    if (v.size() != avg.size())
      throw std::invalid_argument("compute_tolerance: shape mismatch");
    double sq = 0.0;
    for (std::size_t i = 0; i < avg.size(); ++i) {
      const double d = v[i] - avg[i];
      sq += d * d;
    }
    spread += std::sqrt(sq);
  }
  double base = 0.0;
  for (double a : avg) base += a * a;
  return spread / std::max(1.0, std::sqrt(base));
}

EquilibriumResult run_ph(const GridModel& grid, const PolicySet& policies,
                         const PhOptions& opt) {
  PhState st = ph_initialize(grid, policies, opt);
  const int n = static_cast<int>(st.actors.size());

  EquilibriumResult result;
  result.actors = st.actors;

  std::vector<PhSolveRecord> records(n);
  for (int round = 1; round <= opt.max_iter; ++round) {
    const auto started = std::chrono::steady_clock::now();
    if (round == 1) {
      records = initial_solve(grid, policies, opt);
    } else {
      std::vector<std::vector<double>> g(n), lam(n);
      for (int a = 0; a < n; ++a) {
        g[a] = records[a].g;
        lam[a] = records[a].lambda;
      }
      update_multipliers(st, g, lam, st.avg_g, st.avg_lambda);
      for_each_actor(n, opt.jobs, [&](int a) {
        records[a] = augment_and_solve(grid, policies, a, st, opt);
      });
    }

    std::vector<std::vector<double>> hedged(n);
    std::vector<std::vector<double>> g(n), lam(n);
    for (int a = 0; a < n; ++a) {
      g[a] = records[a].g;
      lam[a] = records[a].lambda;
      hedged[a] = records[a].g;
      hedged[a].insert(hedged[a].end(), records[a].lambda.begin(),
                       records[a].lambda.end());
    }
    st.avg_g = consensus_average(g);
    st.avg_lambda = consensus_average(lam);
    std::vector<double> avg_all = st.avg_g;
    avg_all.insert(avg_all.end(), st.avg_lambda.begin(),
                   st.avg_lambda.end());
    const double eps = compute_tolerance(hedged, avg_all);
    st.eps_history.push_back(eps);

    result.iterations = round;
    result.eps = eps;
    result.eps_history.push_back(eps);
    std::vector<double> objectives;
    for (const auto& r : records) objectives.push_back(r.objective);
    result.objectives.push_back(std::move(objectives));
    result.wall_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      started)
            .count());
    if (opt.log) {
      std::ostringstream os;
      os << "round " << round << " eps " << eps;
      opt.log(os.str());
    }
    if (eps <= opt.eps_target) {
      result.converged = true;
      break;
    }
  }

  result.solutions = std::move(records);
  result.consensus_g = st.avg_g;
  result.consensus_lambda = st.avg_lambda;
  return result;
}

}  // namespace ccepec
