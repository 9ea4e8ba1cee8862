#include "ccepec/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace ccepec {

namespace {

// Lower tail P[N(0,1) <= z] through erfc, which stays accurate for large
// negative z where the naive 0.5*(1+erf) form would round to 0 or 1.
double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

// Upper tail P[N(0,1) > z], accurate for large positive z.
double normal_sf(double z) {
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

// Acklam's rational approximation of the inverse normal CDF, good to about
// 1e-9 everywhere in (0, 1). Used only as the starting bracket.
double quantile_guess(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    double u = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u +
            c[5]) /
           ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  }
  if (p > 1.0 - plow) {
    double u = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u +
             c[5]) /
           ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  }
  double u = p - 0.5;
  double r = u * u;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
          a[5]) *
         u /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Portable Gaussian stream: Box-Muller over mt19937_64. std::normal_distribution
// is implementation-defined, which would break bit-identical reruns across
// standard libraries.
class GaussianDraw {
 public:
  explicit GaussianDraw(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // 53 high bits, u1 in (0, 1] so the log is finite, u2 in [0, 1)
    double u1 = static_cast<double>((rng_() >> 11) + 1) * 0x1.0p-53;
    double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    double w = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(w);
    have_spare_ = true;
    return r * std::cos(w);
  }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

std::string soc_tag(const char* base, const std::string& id, int t, int e) {
  std::ostringstream os;
  os << base << '_' << id << "_t" << t << "_e" << e;
  return os.str();
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    std::ostringstream os;
    os << "normal_quantile: probability must lie strictly between 0 and 1, "
          "got "
       << p;
    throw std::invalid_argument(os.str());
  }
  if (p == 0.5) return 0.0;

  // For p above one half solve on the survival function: 1 - p is exact for
  // doubles in [0.5, 1], so the upper tail keeps full precision.
  const bool upper = p > 0.5;
  const double target = upper ? 1.0 - p : p;
  // residual(z) is increasing in z on both branches
  auto residual = [&](double z) {
    return upper ? target - normal_sf(z) : normal_cdf(z) - target;
  };

  double lo = quantile_guess(p) - 1e-6;
  double hi = lo + 2e-6;
  for (double step = 1e-5; residual(lo) > 0.0; step *= 4.0) lo -= step;
  for (double step = 1e-5; residual(hi) < 0.0; step *= 4.0) hi += step;
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    double mid = 0.5 * (lo + hi);
    (residual(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double forecast_stdev(double alpha,
                      const std::vector<std::pair<double, double>>& entries) {
  double ss = 0.0;
  for (const auto& [cap, sigma] : entries) ss += (cap * sigma) * (cap * sigma);
  return alpha * std::sqrt(ss);
}

AffinePolicy affine_policy_for(const GridModel& grid,
                               const std::string& state) {
  if (grid.state_index(state) < 0)
    throw std::runtime_error("affine policy: unknown state '" + state + "'");

  std::unordered_set<std::string> state_nodes;
  for (const auto& n : grid.nodes)
    if (n.state == state) state_nodes.insert(n.id);

  AffinePolicy out;
  out.state = state;
  double alpha_sum = 0.0;
  bool any_controllable = false;

  auto scan = [&](const Generator& g, bool candidate) {
    if (!state_nodes.count(g.node)) return;
    if (g.kind == GenKind::Controllable) {
      any_controllable = true;
      alpha_sum += g.alpha;
      if (g.alpha > 0.0) out.participants.push_back({g.id, g.alpha, candidate});
    } else {
      double cap = candidate ? 0.0 : g.g_max;
      out.sources.push_back({g.id, cap, g.sigma, g.upsilon, candidate});
    }
  };
  for (const auto& g : grid.existing_gens) scan(g, false);
  for (const auto& g : grid.candidate_gens) scan(g, true);

  // a state with no renewables has no forecast error to absorb, so recourse
  // is vacuous there and participation is not policed
  if (out.sources.empty()) {
    out.participants.clear();
    return out;
  }
  if (any_controllable && std::abs(alpha_sum - 1.0) > 1e-6) {
    std::ostringstream os;
    os << "participation factors in state '" << state << "' sum to "
       << alpha_sum << ", expected 1";
    throw std::runtime_error(os.str());
  }
  return out;
}

SocBuildInfo build_soc_constraints(ConicProgram& p, const GridModel& grid,
                                   const AffinePolicy& policy, double eta,
                                   const SocVarHooks& hooks) {
  if (!(eta > 0.0 && eta < 0.5)) {
    std::ostringstream os;
    os << "security tolerance must lie in (0, 0.5), got " << eta;
    throw std::invalid_argument(os.str());
  }
  const double q = normal_quantile(1.0 - eta);

  for (const auto& part : policy.participants) {
    if (!(part.alpha > 0.0)) {
      std::ostringstream os;
      os << "generator '" << part.id
         << "' cannot receive chance bounds with participation factor "
         << part.alpha << "; the headroom normalization divides by it";
      throw std::invalid_argument(os.str());
    }
  }

  // unit lookups; candidate units come with their minimum-output factor
  std::unordered_map<std::string, const Generator*> existing;
  std::unordered_map<std::string, const CandidateGenerator*> candidates;
  for (const auto& g : grid.existing_gens) existing[g.id] = &g;
  for (const auto& g : grid.candidate_gens) candidates[g.id] = &g;

  // Mean forecast bias of the state's existing renewables is a constant;
  // candidate bias scales with the investment variable.
  double mean_fixed = 0.0;
  std::vector<int> source_inv(policy.sources.size(), -1);
  for (size_t j = 0; j < policy.sources.size(); ++j) {
    const auto& src = policy.sources[j];
    if (src.candidate) {
      source_inv[j] = hooks.investment_var ? hooks.investment_var(src.id) : -1;
      if (source_inv[j] < 0)
        throw std::runtime_error("no investment variable for candidate '" +
                                 src.id + "'");
    } else {
      mean_fixed += src.capacity * src.upsilon;
    }
  }

  SocBuildInfo info;
  for (const auto& part : policy.participants) {
    const double al = part.alpha;

    bool is_candidate = candidates.count(part.id) > 0;
    const Generator* gen = nullptr;
    if (is_candidate) {
      gen = candidates.at(part.id);
    } else {
      auto it = existing.find(part.id);
      if (it == existing.end())
        throw std::runtime_error("affine policy references unknown generator '" +
                                 part.id + "'");
      gen = it->second;
    }
    if (gen->kind != GenKind::Controllable)
      throw std::runtime_error("generator '" + part.id +
                               "' is not controllable and cannot absorb "
                               "forecast errors");

    int inv = -1;
    double gamma = 0.0;
    if (is_candidate) {
      inv = hooks.investment_var ? hooks.investment_var(part.id) : -1;
      if (inv < 0)
        throw std::runtime_error("no investment variable for candidate '" +
                                 part.id + "'");
      gamma = candidates.at(part.id)->min_output_factor;
    }

    for (int e = 0; e < static_cast<int>(grid.rep_days.size()); ++e) {
      for (int t = 0; t < grid.hours; ++t) {
        int gv = hooks.dispatch_var ? hooks.dispatch_var(part.id, t, e) : -1;
        if (gv < 0) {
          std::ostringstream os;
          os << "no dispatch variable for unit '" << part.id << "' at t=" << t
             << ", e=" << e;
          throw std::runtime_error(os.str());
        }

        // shared error-stdev tail; candidate capacities stay symbolic
        std::vector<LinExpr> tail;
        tail.reserve(policy.sources.size());
        for (size_t j = 0; j < policy.sources.size(); ++j) {
          const auto& src = policy.sources[j];
          if (src.candidate)
            tail.emplace_back(source_inv[j], src.sigma);
          else
            tail.emplace_back(src.capacity * src.sigma);
        }

        // capacity side: q*al*y_ub + gbar - al*sum(inv_j*ups_j) [- inv]
        //   = Gmax (existing) or 0 (candidate), plus al*mean_fixed
        {
          int y = p.add_var(soc_tag("yub", part.id, t, e), 0.0, kInf);
          std::vector<LinTerm> terms{{y, q * al}, {gv, 1.0}};
          for (size_t j = 0; j < policy.sources.size(); ++j)
            if (policy.sources[j].candidate)
              terms.push_back({source_inv[j], -al * policy.sources[j].upsilon});
          double rhs = al * mean_fixed;
          if (is_candidate)
            terms.push_back({inv, -1.0});
          else
            rhs += gen->g_max;
          int row = p.add_row(soc_tag("def_yub", part.id, t, e),
                              std::move(terms), RowSense::Equal, rhs);
          int cone =
              static_cast<int>(p.cones.size());
          p.add_cone(soc_tag("cc_ub", part.id, t, e), y, tail);
          info.blocks.push_back({part.id, t, e, true, y, row, cone});
        }

        // minimum-output side: q*al*y_lb - gbar + al*sum(inv_j*ups_j)
        //   [+ gamma*inv] = -Gmin (existing) or 0 (candidate), minus
        //   al*mean_fixed
        {
          int y = p.add_var(soc_tag("ylb", part.id, t, e), 0.0, kInf);
          std::vector<LinTerm> terms{{y, q * al}, {gv, -1.0}};
          for (size_t j = 0; j < policy.sources.size(); ++j)
            if (policy.sources[j].candidate)
              terms.push_back({source_inv[j], al * policy.sources[j].upsilon});
          double rhs = -al * mean_fixed;
          if (is_candidate)
            terms.push_back({inv, gamma});
          else
            rhs -= gen->g_min;
          int row = p.add_row(soc_tag("def_ylb", part.id, t, e),
                              std::move(terms), RowSense::Equal, rhs);
          int cone = static_cast<int>(p.cones.size());
          p.add_cone(soc_tag("cc_lb", part.id, t, e), y, std::move(tail));
          info.blocks.push_back({part.id, t, e, false, y, row, cone});
        }
      }
    }
  }
  return info;
}

SocBuildInfo build_soc_constraints(ConicProgram& p, const GridModel& grid,
                                   const ActorPolicy& actor,
                                   const SocVarHooks& hooks) {
  AffinePolicy policy = affine_policy_for(grid, actor.state);
  SocBuildInfo info = build_soc_constraints(p, grid, policy, actor.eta, hooks);

  // zero-participation controllables keep plain deterministic bounds
  std::unordered_set<std::string> state_nodes;
  for (const auto& n : grid.nodes)
    if (n.state == actor.state) state_nodes.insert(n.id);
  auto note_deterministic = [&](const Generator& g) {
    if (state_nodes.count(g.node) && g.kind == GenKind::Controllable &&
        (g.alpha == 0.0 || policy.sources.empty()))
      info.deterministic.push_back(g.id);
  };
  for (const auto& g : grid.existing_gens) note_deterministic(g);
  for (const auto& g : grid.candidate_gens) note_deterministic(g);
  return info;
}

std::vector<std::vector<double>> sample_errors(
    const std::vector<AffinePolicy::ErrorSource>& sources, int hours,
    std::uint64_t seed, int n) {
  if (hours < 1) throw std::invalid_argument("sample_errors: hours must be positive");
  if (n < 1) throw std::invalid_argument("sample_errors: sample count must be positive");

  GaussianDraw gauss(seed);
  std::vector<std::vector<double>> out(static_cast<size_t>(n));
  for (auto& sample : out) {
    sample.resize(sources.size() * static_cast<size_t>(hours));
    size_t k = 0;
    for (const auto& src : sources) {
      double mean = src.capacity * src.upsilon;
      double sd = src.capacity * src.sigma;
      for (int t = 0; t < hours; ++t) sample[k++] = mean + sd * gauss();
    }
  }
  return out;
}

std::vector<std::vector<double>> sample_errors(const GridModel& grid, int day,
                                               std::uint64_t seed, int n) {
  if (day < 0 || day >= static_cast<int>(grid.rep_days.size())) {
    std::ostringstream os;
    os << "sample_errors: day " << day << " out of range, grid has "
       << grid.rep_days.size() << " representative days";
    throw std::invalid_argument(os.str());
  }
  std::vector<AffinePolicy::ErrorSource> sources;
  for (const auto& g : grid.existing_gens)
    if (g.kind == GenKind::Renewable)
      sources.push_back({g.id, g.g_max, g.sigma, g.upsilon, false});
  return sample_errors(sources, grid.hours, seed, n);
}

}  // namespace ccepec
