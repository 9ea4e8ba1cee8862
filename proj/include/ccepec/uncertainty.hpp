#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ccepec/data_model.hpp"
#include "ccepec/solver/program.hpp"

namespace ccepec {

// Inverse standard normal CDF: returns z with P[N(0,1) <= z] = p, absolute
// error below 1e-8. Rational starting guess (Acklam) tightened by bisection
// on the erfc-based CDF. Throws std::invalid_argument unless 0 < p < 1.
double normal_quantile(double p);

// Standard deviation of the recourse-adjusted output of one controllable
// unit: alpha * sqrt(sum over renewables of (capacity * sigma)^2). Entries
// are (installed MW, per-MW error stdev) pairs.
double forecast_stdev(double alpha,
                      const std::vector<std::pair<double, double>>& entries);

// Affine recourse rule of one state: forecast errors of the state's
// renewables are absorbed by its controllable units in fixed shares that
// sum to one. Candidate renewables carry per-MW statistics because their
// installed capacity is a decision variable at model-build time.
struct AffinePolicy {
  struct Participant {
    std::string id;
    double alpha = 0.0;      // share of the state-wide error this unit absorbs
    bool candidate = false;  // capacity bounds reference the investment var
  };
  struct ErrorSource {
    std::string id;
    double capacity = 0.0;  // installed MW; ignored for candidates at build
    double sigma = 0.0;     // error stdev per MW of capacity
    double upsilon = 0.0;   // error mean per MW of capacity
    bool candidate = false;
  };
  std::string state;
  std::vector<Participant> participants;  // controllables with alpha > 0
  std::vector<ErrorSource> sources;       // every renewable of the state
};

// Extracts the recourse rule of one state from the grid. Controllables with
// a zero participation factor are left out of `participants` (their bounds
// stay deterministic). Throws when the state is unknown or the participation
// factors of its controllables do not sum to one.
AffinePolicy affine_policy_for(const GridModel& grid, const std::string& state);

// Variable lookups the cone builder needs from the surrounding model.
// dispatch_var: scheduled output of controllable `id` at hour t of day e.
// investment_var: installed-capacity variable of candidate `id`.
// Either may return -1 to signal the unit is absent, which is an error for
// units the policy references.
struct SocVarHooks {
  std::function<int(const std::string& id, int t, int e)> dispatch_var;
  std::function<int(const std::string& id)> investment_var;
};

// One emitted cone: the normalized headroom variable y, its defining
// equality row, and the cone index on the program. `upper` distinguishes
// the capacity side from the minimum-output side.
struct SocBlockRef {
  std::string unit;
  int t = 0;
  int e = 0;
  bool upper = false;
  int y_var = -1;
  int def_row = -1;
  int cone = -1;
};

struct SocBuildInfo {
  std::vector<SocBlockRef> blocks;
  // Units whose output bounds needed no cone (zero participation factor);
  // plain variable bounds on their dispatch are exact for them.
  std::vector<std::string> deterministic;
};

// Emits the chance-constraint reformulation for every participant of the
// policy: per (unit, hour, day) two headroom variables
//   y_ub = (gmax_i - gbar + alpha * sum cap*upsilon) / (q * alpha)
//   y_lb = (gbar - alpha * sum cap*upsilon - gmin_i) / (q * alpha)
// with q = normal_quantile(1 - eta), each constrained to dominate the
// 2-norm of the state's error-stdev vector (candidate entries stay linear
// in the investment variable). Candidate participants use their investment
// variable as gmax_i and min_output_factor * investment as gmin_i.
// Throws on eta outside (0, 0.5), participants with alpha <= 0, or hooks
// that cannot resolve a referenced unit.
SocBuildInfo build_soc_constraints(ConicProgram& p, const GridModel& grid,
                                   const AffinePolicy& policy, double eta,
                                   const SocVarHooks& hooks);

// Convenience: derives the state's policy from the grid first.
SocBuildInfo build_soc_constraints(ConicProgram& p, const GridModel& grid,
                                   const ActorPolicy& actor,
                                   const SocVarHooks& hooks);

// Draws n joint samples of the forecast errors of `sources` over `hours`
// consecutive hours, independent across units and hours. Sample k entry
// [u * hours + t] follows N(capacity_u * upsilon_u, (capacity_u * sigma_u)^2).
// Candidate sources must carry the built capacity in `capacity`. Box-Muller
// over a seeded mt19937_64, so results are identical across platforms.
std::vector<std::vector<double>> sample_errors(
    const std::vector<AffinePolicy::ErrorSource>& sources, int hours,
    std::uint64_t seed, int n);

// Same, for every existing renewable of the grid (in generator order) over
// the hours of representative day `day`.
std::vector<std::vector<double>> sample_errors(const GridModel& grid, int day,
                                               std::uint64_t seed, int n);

}  // namespace ccepec
