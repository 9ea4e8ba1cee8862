#pragma once

// Internal bounded-variable revised simplex engine used by solve_lp and the
// branch-and-bound search. Works on the equality form
//
//     A x + I s = b,   lb <= (x, s) <= ub
//
// where s are per-row logical columns whose bounds encode the row sense.
// Minimization internally; the user objective sense is converted on load and
// on extraction. The basis inverse is kept dense (Eigen) and refactorized
// periodically. Phase 1 uses one artificial column per row whose bounds and
// cost are re-aimed at the current residual, so from-scratch solves can be
// repeated after rows are appended (cuts) or bounds change (branching).

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "ccepec/solver/program.hpp"

namespace ccepec::detail {

enum class VStat : uint8_t { Basic, AtLb, AtUb, Free };

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit, NumFail };

struct EngineOptions {
  double feas_tol = 1e-7;
  double dual_tol = 1e-7;
  double pivot_tol = 1e-9;
  long iter_limit = 1000000;
  int refactor_every = 100;
};

struct BasisSnapshot {
  std::vector<VStat> stat;  // one per engine column at snapshot time
  std::vector<int> basic;   // one per engine row at snapshot time
};

class SimplexEngine {
 public:
  SimplexEngine(const ConicProgram& p, EngineOptions opt);

  int num_struct() const { return nstruct_; }
  int num_rows() const { return nrows_; }
  long iterations() const { return iters_; }

  void set_var_bounds(int var, double lb, double ub);
  std::pair<double, double> var_bounds(int var) const {
    return {lb_[var], ub_[var]};
  }

  // Appends a cut row; its logical column enters the basis, so the point may
  // become primal infeasible and a reoptimize() is expected to follow.
  void add_row(const Row& row);

  LpStatus primal_from_scratch();
  // Dual simplex from the current (dual-feasible) basis, then a primal
  // clean-up pass. Falls back to primal_from_scratch when the basis cannot
  // be repaired.
  LpStatus reoptimize();

  double user_objective() const;
  void get_values(std::vector<double>& x) const;
  // Row duals and reduced costs in the convention documented on ConicProgram
  // (only the first `nrows` entries are original program rows; the rest are
  // cuts).
  void get_duals(std::vector<double>& y, std::vector<double>& rc) const;

  BasisSnapshot snapshot() const;
  // Restores a snapshot taken when the engine possibly had fewer cut rows;
  // logicals of rows added since become basic. Returns false on a singular
  // basis (caller should primal_from_scratch()).
  bool restore(const BasisSnapshot& snap);

 private:
  struct Entry {
    int row;
    double coef;
  };

  double value_of(int col) const {
    return basic_pos_[col] >= 0 ? xb_[basic_pos_[col]] : val_[col];
  }
  bool is_fixed(int col) const { return lb_[col] == ub_[col]; }
  void place_nonbasic_at_bound(int col);
  void ensure_artificials();
  bool refactorize();
  void compute_xb();
  double primal_infeas() const;
  bool repair_dual_feasibility();
  // One primal iteration; returns 0 = optimal, 1 = pivoted/flipped,
  // 2 = unbounded, 3 = numerical trouble.
  int primal_step(bool bland);
  int dual_step(bool bland);
  LpStatus primal_loop();
  LpStatus dual_loop();
  Eigen::VectorXd ftran(int col) const;

  EngineOptions opt_;
  ObjSense user_sense_;
  double user_const_ = 0.0;

  int nstruct_ = 0;
  int nrows_ = 0;
  std::vector<std::vector<Entry>> nz_;  // per column
  std::vector<double> lb_, ub_;
  std::vector<double> cost_;   // internal minimization costs (structural part)
  std::vector<double> pcost_;  // active costs during a loop (phase 1 or 2)
  std::vector<double> b_;
  std::vector<VStat> stat_;
  std::vector<double> val_;  // authoritative for nonbasic columns
  std::vector<int> logical_col_;  // per row
  std::vector<int> art_col_;      // per row, -1 until created
  std::vector<int> basic_;        // per row: column index
  std::vector<int> basic_pos_;    // per column: row position or -1

  Eigen::MatrixXd binv_;
  Eigen::VectorXd xb_;

  long iters_ = 0;
  int pivots_since_refactor_ = 0;
  int degenerate_run_ = 0;
};

}  // namespace ccepec::detail
