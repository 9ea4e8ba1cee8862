#include "simplex.hpp"

#include <algorithm>
#include <cmath>

namespace ccepec::detail {

namespace {
constexpr double kDegenStep = 1e-10;
}

SimplexEngine::SimplexEngine(const ConicProgram& p, EngineOptions opt)
    : opt_(opt), user_sense_(p.sense), user_const_(p.objective_constant) {
  nstruct_ = p.num_vars();
  nz_.resize(nstruct_);
  lb_.resize(nstruct_);
  ub_.resize(nstruct_);
  cost_.assign(nstruct_, 0.0);
  stat_.assign(nstruct_, VStat::AtLb);
  val_.assign(nstruct_, 0.0);
  basic_pos_.assign(nstruct_, -1);
  for (int j = 0; j < nstruct_; ++j) {
    lb_[j] = p.vars[j].lb;
    ub_[j] = p.vars[j].ub;
  }
  const double sgn = (user_sense_ == ObjSense::Maximize) ? -1.0 : 1.0;
  for (const auto& t : p.objective) cost_[t.var] += sgn * t.coef;
  pcost_ = cost_;
  pcost_.resize(cost_.size(), 0.0);
  for (const auto& r : p.rows) add_row(r);
}

void SimplexEngine::place_nonbasic_at_bound(int col) {
  VStat prefer = stat_[col];
  if (lb_[col] == ub_[col]) {
    stat_[col] = VStat::AtLb;
    val_[col] = lb_[col];
    return;
  }
  if (prefer == VStat::AtUb && std::isfinite(ub_[col])) {
    stat_[col] = VStat::AtUb;
    val_[col] = ub_[col];
  } else if (std::isfinite(lb_[col])) {
    stat_[col] = VStat::AtLb;
    val_[col] = lb_[col];
  } else if (std::isfinite(ub_[col])) {
    stat_[col] = VStat::AtUb;
    val_[col] = ub_[col];
  } else {
    stat_[col] = VStat::Free;
    val_[col] = 0.0;
  }
}

void SimplexEngine::set_var_bounds(int var, double lb, double ub) {
  lb_[var] = lb;
  ub_[var] = ub;
  if (basic_pos_[var] < 0) place_nonbasic_at_bound(var);
}

void SimplexEngine::add_row(const Row& row) {
  const int r = nrows_++;
  b_.push_back(row.rhs);
  for (const auto& t : row.terms)
    if (t.coef != 0.0) nz_[t.var].push_back({r, t.coef});

  double lo = 0.0, up = 0.0;
  switch (row.sense) {
    case RowSense::LessEqual: lo = 0.0; up = kInf; break;
    case RowSense::GreaterEqual: lo = -kInf; up = 0.0; break;
    case RowSense::Equal: lo = up = 0.0; break;
  }
  const int s = static_cast<int>(nz_.size());
  nz_.emplace_back();
  nz_[s].push_back({r, 1.0});
  lb_.push_back(lo);
  ub_.push_back(up);
  cost_.push_back(0.0);
  pcost_.push_back(0.0);
  stat_.push_back(row.sense == RowSense::GreaterEqual ? VStat::AtUb
                                                      : VStat::AtLb);
  val_.push_back(0.0);
  basic_pos_.push_back(-1);
  logical_col_.push_back(s);
  art_col_.push_back(-1);

  if (binv_.rows() == r && r > 0 && static_cast<int>(basic_.size()) == r) {
    // Extend a live basis: the new logical becomes basic. The new inverse row
    // is -a_B^T B^-1 where a_B are the new row's coefficients on basic
    // columns.
    Eigen::RowVectorXd t = Eigen::RowVectorXd::Zero(r);
    for (const auto& term : row.terms) {
      const int pos = basic_pos_[term.var];
      if (pos >= 0) t += term.coef * binv_.row(pos);
    }
    binv_.conservativeResize(r + 1, r + 1);
    binv_.col(r).head(r).setZero();
    binv_.row(r).head(r) = -t;
    binv_(r, r) = 1.0;

    double act = 0.0;
    for (const auto& term : row.terms) act += term.coef * value_of(term.var);
    xb_.conservativeResize(r + 1);
    xb_[r] = row.rhs - act;
    basic_.push_back(s);
    basic_pos_[s] = r;
    stat_[s] = VStat::Basic;
  }
}

void SimplexEngine::ensure_artificials() {
  for (int r = 0; r < nrows_; ++r) {
    if (art_col_[r] >= 0) continue;
    const int a = static_cast<int>(nz_.size());
    nz_.emplace_back();
    nz_[a].push_back({r, 1.0});
    lb_.push_back(0.0);
    ub_.push_back(0.0);
    cost_.push_back(0.0);
    pcost_.push_back(0.0);
    stat_.push_back(VStat::AtLb);
    val_.push_back(0.0);
    basic_pos_.push_back(-1);
    art_col_[r] = a;
  }
}

Eigen::VectorXd SimplexEngine::ftran(int col) const {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(nrows_);
  for (const auto& e : nz_[col]) a += e.coef * binv_.col(e.row);
  return a;
}

void SimplexEngine::compute_xb() {
  Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(b_.data(), nrows_);
  const int ncols = static_cast<int>(nz_.size());
  for (int j = 0; j < ncols; ++j) {
    if (basic_pos_[j] >= 0 || val_[j] == 0.0) continue;
    for (const auto& e : nz_[j]) r[e.row] -= e.coef * val_[j];
  }
  xb_ = binv_ * r;
}

bool SimplexEngine::refactorize() {
  const int m = nrows_;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k < m; ++k)
    for (const auto& e : nz_[basic_[k]]) B(e.row, k) = e.coef;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
  binv_ = lu.inverse();
  if (m > 0) {
    // Cheap singularity probe: B * (B^-1 * ones) must reproduce ones within
    // a condition-number-aware tolerance.
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
    Eigen::VectorXd probe = B * (binv_ * ones);
    const double bn = B.cwiseAbs().rowwise().sum().maxCoeff();
    const double in = binv_.cwiseAbs().rowwise().sum().maxCoeff();
    const double tol = 1e-9 * (1.0 + bn * in);
    if (!probe.allFinite() ||
        (probe - ones).lpNorm<Eigen::Infinity>() > std::max(tol, 1e-7))
      return false;
  }
  compute_xb();
  pivots_since_refactor_ = 0;
  return true;
}

double SimplexEngine::primal_infeas() const {
  double s = 0.0;
  for (int k = 0; k < nrows_; ++k) {
    const int j = basic_[k];
    if (xb_[k] < lb_[j]) s += lb_[j] - xb_[k];
    if (xb_[k] > ub_[j]) s += xb_[k] - ub_[j];
  }
  return s;
}

// Primal iteration. Returns 0 optimal, 1 progressed, 2 unbounded, 3 numeric.
int SimplexEngine::primal_step(bool bland) {
  const int m = nrows_;
  const int ncols = static_cast<int>(nz_.size());
  Eigen::VectorXd cb(m);
  for (int k = 0; k < m; ++k) cb[k] = pcost_[basic_[k]];
  Eigen::VectorXd pi = binv_.transpose() * cb;

  int q = -1, dir = 0;
  double best = opt_.dual_tol;
  for (int j = 0; j < ncols; ++j) {
    if (basic_pos_[j] >= 0 || is_fixed(j)) continue;
    double rc = pcost_[j];
    for (const auto& e : nz_[j]) rc -= pi[e.row] * e.coef;
    int d = 0;
    if (stat_[j] == VStat::AtLb && rc < -opt_.dual_tol) d = 1;
    else if (stat_[j] == VStat::AtUb && rc > opt_.dual_tol) d = -1;
    else if (stat_[j] == VStat::Free && std::abs(rc) > opt_.dual_tol)
      d = rc < 0 ? 1 : -1;
    if (d == 0) continue;
    if (bland) { q = j; dir = d; break; }
    if (std::abs(rc) > best) {
      best = std::abs(rc);
      q = j;
      dir = d;
    }
  }
  if (q < 0) return 0;

  Eigen::VectorXd alpha = ftran(q);
  double t_best = ub_[q] - lb_[q];  // own range (may be inf)
  int leave_pos = -1;
  double leave_alpha = 0.0;
  for (int k = 0; k < m; ++k) {
    const double delta = -dir * alpha[k];
    const int bj = basic_[k];
    double t;
    if (delta > opt_.pivot_tol) {
      if (!std::isfinite(ub_[bj])) continue;
      t = (ub_[bj] - xb_[k]) / delta;
    } else if (delta < -opt_.pivot_tol) {
      if (!std::isfinite(lb_[bj])) continue;
      t = (lb_[bj] - xb_[k]) / delta;
    } else {
      continue;
    }
    if (t < 0) t = 0;  // basic already at/over its bound
    const bool better =
        t < t_best - 1e-12 ||
        (t < t_best + 1e-12 && leave_pos >= 0 &&
         (bland ? basic_[k] < basic_[leave_pos]
                : std::abs(alpha[k]) > std::abs(leave_alpha)));
    if (leave_pos < 0 ? t < t_best : better) {
      t_best = t;
      leave_pos = k;
      leave_alpha = alpha[k];
    }
  }

  if (leave_pos < 0) {
    if (!std::isfinite(t_best)) return 2;  // unbounded along q
    // Bound flip: q jumps to its other bound, basis unchanged.
    xb_ -= dir * t_best * alpha;
    stat_[q] = (dir > 0) ? VStat::AtUb : VStat::AtLb;
    val_[q] = (dir > 0) ? ub_[q] : lb_[q];
    ++iters_;
    degenerate_run_ = 0;
    return 1;
  }
  if (std::abs(alpha[leave_pos]) < opt_.pivot_tol) return 3;

  degenerate_run_ = (t_best <= kDegenStep) ? degenerate_run_ + 1 : 0;
  // Inline pivot using the alpha already computed.
  {
    const int leave = basic_[leave_pos];
    const double delta_leave = -dir * alpha[leave_pos];
    if (delta_leave > 0) {
      stat_[leave] = VStat::AtUb;
      val_[leave] = ub_[leave];
    } else {
      stat_[leave] = VStat::AtLb;
      val_[leave] = lb_[leave];
    }
    basic_pos_[leave] = -1;
    const double enter_val = val_[q] + dir * t_best;
    xb_ -= dir * t_best * alpha;
    xb_[leave_pos] = enter_val;
    basic_[leave_pos] = q;
    basic_pos_[q] = leave_pos;
    stat_[q] = VStat::Basic;
    const double ar = alpha[leave_pos];
    binv_.row(leave_pos) /= ar;
    Eigen::RowVectorXd br = binv_.row(leave_pos);
    alpha[leave_pos] = 0.0;
    binv_.noalias() -= alpha * br;
    ++pivots_since_refactor_;
  }
  ++iters_;
  return 1;
}

LpStatus SimplexEngine::primal_loop() {
  bool bland = false;
  int numeric_retries = 0;
  for (;;) {
    if (iters_ >= opt_.iter_limit) return LpStatus::IterLimit;
    if (pivots_since_refactor_ >= opt_.refactor_every)
      if (!refactorize()) return LpStatus::NumFail;
    if (degenerate_run_ > 200 + 2 * nrows_) bland = true;
    if (degenerate_run_ == 0) bland = false;
    const int rc = primal_step(bland);
    if (rc == 0) return LpStatus::Optimal;
    if (rc == 2) return LpStatus::Unbounded;
    if (rc == 3) {
      if (++numeric_retries > 3) return LpStatus::NumFail;
      if (!refactorize()) return LpStatus::NumFail;
      continue;
    }
    numeric_retries = 0;
  }
}

int SimplexEngine::dual_step(bool bland) {
  const int m = nrows_;
  const int ncols = static_cast<int>(nz_.size());

  int r = -1;
  double worst = 0.0;
  int sigma = 0;
  for (int k = 0; k < m; ++k) {
    const int j = basic_[k];
    const double tol_lo = opt_.feas_tol * (1.0 + std::abs(lb_[j]));
    const double tol_up = opt_.feas_tol * (1.0 + std::abs(ub_[j]));
    if (xb_[k] < lb_[j] - tol_lo && lb_[j] - xb_[k] > worst) {
      worst = lb_[j] - xb_[k];
      r = k;
      sigma = 1;
    } else if (xb_[k] > ub_[j] + tol_up && xb_[k] - ub_[j] > worst) {
      worst = xb_[k] - ub_[j];
      r = k;
      sigma = -1;
    }
  }
  if (r < 0) return 0;  // primal feasible

  Eigen::VectorXd cb(m);
  for (int k = 0; k < m; ++k) cb[k] = pcost_[basic_[k]];
  Eigen::VectorXd pi = binv_.transpose() * cb;
  Eigen::RowVectorXd brow = binv_.row(r);

  int q = -1;
  double best_ratio = -kInf, best_rho = 0.0;
  for (int j = 0; j < ncols; ++j) {
    if (basic_pos_[j] >= 0 || is_fixed(j)) continue;
    double rho = 0.0;
    for (const auto& e : nz_[j]) rho += brow[e.row] * e.coef;
    if (std::abs(rho) < opt_.pivot_tol) continue;
    const double srho = sigma * rho;
    bool ok = false;
    if (stat_[j] == VStat::AtLb && srho < 0) ok = true;
    if (stat_[j] == VStat::AtUb && srho > 0) ok = true;
    if (stat_[j] == VStat::Free) ok = true;
    if (!ok) continue;
    double rc = pcost_[j];
    for (const auto& e : nz_[j]) rc -= pi[e.row] * e.coef;
    const double ratio = rc / srho;
    if (bland) {
      if (q < 0) { q = j; best_rho = rho; }
      continue;
    }
    if (ratio > best_ratio + 1e-12 ||
        (ratio > best_ratio - 1e-12 && std::abs(rho) > std::abs(best_rho))) {
      best_ratio = ratio;
      q = j;
      best_rho = rho;
    }
  }
  if (q < 0) return 2;  // primal infeasible (dual unbounded)

  Eigen::VectorXd alpha = ftran(q);
  const double ar = alpha[r];
  if (std::abs(ar) < opt_.pivot_tol) return 3;

  const double need =
      (sigma > 0) ? lb_[basic_[r]] - xb_[r] : ub_[basic_[r]] - xb_[r];
  const double dxq = -need / ar;
  const int dir = dxq >= 0 ? 1 : -1;
  const double t = std::abs(dxq);
  degenerate_run_ = (t <= kDegenStep) ? degenerate_run_ + 1 : 0;

  const int leave = basic_[r];
  stat_[leave] = (sigma > 0) ? VStat::AtLb : VStat::AtUb;
  val_[leave] = (sigma > 0) ? lb_[leave] : ub_[leave];
  basic_pos_[leave] = -1;
  const double enter_val = val_[q] + dir * t;
  xb_ -= dir * t * alpha;
  xb_[r] = enter_val;
  basic_[r] = q;
  basic_pos_[q] = r;
  stat_[q] = VStat::Basic;
  binv_.row(r) /= ar;
  Eigen::RowVectorXd brnew = binv_.row(r);
  alpha[r] = 0.0;
  binv_.noalias() -= alpha * brnew;
  ++pivots_since_refactor_;
  ++iters_;
  return 1;
}

LpStatus SimplexEngine::dual_loop() {
  bool bland = false;
  int numeric_retries = 0;
  for (;;) {
    if (iters_ >= opt_.iter_limit) return LpStatus::IterLimit;
    if (pivots_since_refactor_ >= opt_.refactor_every)
      if (!refactorize()) return LpStatus::NumFail;
    if (degenerate_run_ > 200 + 2 * nrows_) bland = true;
    if (degenerate_run_ == 0) bland = false;
    const int rc = dual_step(bland);
    if (rc == 0) break;
    if (rc == 2) return LpStatus::Infeasible;
    if (rc == 3) {
      if (++numeric_retries > 3) return LpStatus::NumFail;
      if (!refactorize()) return LpStatus::NumFail;
      continue;
    }
    numeric_retries = 0;
  }
  return primal_loop();
}

bool SimplexEngine::repair_dual_feasibility() {
  const int m = nrows_;
  const int ncols = static_cast<int>(nz_.size());
  Eigen::VectorXd cb(m);
  for (int k = 0; k < m; ++k) cb[k] = pcost_[basic_[k]];
  Eigen::VectorXd pi = binv_.transpose() * cb;
  bool flipped = false;
  for (int j = 0; j < ncols; ++j) {
    if (basic_pos_[j] >= 0 || is_fixed(j)) continue;
    double rc = pcost_[j];
    for (const auto& e : nz_[j]) rc -= pi[e.row] * e.coef;
    const double tol = opt_.dual_tol * 10.0;
    if (stat_[j] == VStat::AtLb && rc < -tol) {
      if (!std::isfinite(ub_[j])) return false;
      stat_[j] = VStat::AtUb;
      val_[j] = ub_[j];
      flipped = true;
    } else if (stat_[j] == VStat::AtUb && rc > tol) {
      if (!std::isfinite(lb_[j])) return false;
      stat_[j] = VStat::AtLb;
      val_[j] = lb_[j];
      flipped = true;
    } else if (stat_[j] == VStat::Free && std::abs(rc) > tol) {
      return false;
    }
  }
  if (flipped) compute_xb();
  return true;
}

LpStatus SimplexEngine::primal_from_scratch() {
  ensure_artificials();
  const int ncols = static_cast<int>(nz_.size());

  for (int j = 0; j < ncols; ++j) basic_pos_[j] = -1;
  std::vector<bool> is_art(ncols, false);
  for (int r = 0; r < nrows_; ++r) is_art[art_col_[r]] = true;
  for (int j = 0; j < ncols; ++j) {
    if (is_art[j]) continue;
    place_nonbasic_at_bound(j);
  }

  Eigen::VectorXd res = Eigen::Map<const Eigen::VectorXd>(b_.data(), nrows_);
  for (int j = 0; j < ncols; ++j) {
    if (is_art[j] || val_[j] == 0.0) continue;
    for (const auto& e : nz_[j]) res[e.row] -= e.coef * val_[j];
  }

  basic_.assign(nrows_, -1);
  binv_ = Eigen::MatrixXd::Identity(nrows_, nrows_);
  xb_ = res;
  pivots_since_refactor_ = 0;
  degenerate_run_ = 0;

  std::fill(pcost_.begin(), pcost_.end(), 0.0);
  double infeas = 0.0;
  for (int r = 0; r < nrows_; ++r) {
    const int a = art_col_[r];
    basic_[r] = a;
    basic_pos_[a] = r;
    stat_[a] = VStat::Basic;
    lb_[a] = std::min(0.0, res[r]);
    ub_[a] = std::max(0.0, res[r]);
    pcost_[a] = (res[r] >= 0) ? 1.0 : -1.0;
    infeas += std::abs(res[r]);
  }

  double bnorm = 0.0;
  for (double v : b_) bnorm += std::abs(v);
  const double tol_infeas = opt_.feas_tol * (1.0 + bnorm);

  if (infeas > tol_infeas) {
    const LpStatus st = primal_loop();
    if (st == LpStatus::IterLimit || st == LpStatus::NumFail) return st;
    // The phase-1 objective is bounded below by zero, so an unbounded ray
    // can only be a numerical artifact.
    if (st == LpStatus::Unbounded) return LpStatus::NumFail;
    double attained = 0.0;
    for (int r = 0; r < nrows_; ++r)
      attained += pcost_[art_col_[r]] * value_of(art_col_[r]);
    if (attained > tol_infeas) return LpStatus::Infeasible;
  }

  // Retire artificials and run phase 2 on the real costs.
  for (int r = 0; r < nrows_; ++r) {
    const int a = art_col_[r];
    lb_[a] = ub_[a] = 0.0;
    pcost_[a] = 0.0;
    if (basic_pos_[a] < 0) {
      stat_[a] = VStat::AtLb;
      val_[a] = 0.0;
    }
  }
  for (int j = 0; j < nstruct_; ++j) pcost_[j] = cost_[j];
  for (int j = nstruct_; j < ncols; ++j)
    if (!is_art[j]) pcost_[j] = 0.0;
  degenerate_run_ = 0;
  return primal_loop();
}

LpStatus SimplexEngine::reoptimize() {
  if (static_cast<int>(basic_.size()) != nrows_ || binv_.rows() != nrows_)
    return primal_from_scratch();
  const int ncols = static_cast<int>(nz_.size());
  for (int j = 0; j < nstruct_; ++j) pcost_[j] = cost_[j];
  for (int j = nstruct_; j < ncols; ++j) pcost_[j] = 0.0;
  for (int r = 0; r < nrows_; ++r)
    if (art_col_[r] >= 0) {
      lb_[art_col_[r]] = ub_[art_col_[r]] = 0.0;
    }
  compute_xb();
  if (!repair_dual_feasibility()) return primal_from_scratch();
  degenerate_run_ = 0;
  const LpStatus st = dual_loop();
  if (st == LpStatus::NumFail) return primal_from_scratch();
  return st;
}

double SimplexEngine::user_objective() const {
  double v = 0.0;
  for (int j = 0; j < nstruct_; ++j)
    if (cost_[j] != 0.0) v += cost_[j] * value_of(j);
  return (user_sense_ == ObjSense::Maximize ? -v : v) + user_const_;
}

void SimplexEngine::get_values(std::vector<double>& x) const {
  x.resize(nstruct_);
  for (int j = 0; j < nstruct_; ++j) x[j] = value_of(j);
}

void SimplexEngine::get_duals(std::vector<double>& y,
                              std::vector<double>& rc) const {
  const int m = nrows_;
  Eigen::VectorXd cb(m);
  for (int k = 0; k < m; ++k) cb[k] = (basic_[k] < nstruct_) ? cost_[basic_[k]] : 0.0;
  Eigen::VectorXd pi = binv_.transpose() * cb;
  const double ysgn = (user_sense_ == ObjSense::Maximize) ? 1.0 : -1.0;
  y.resize(m);
  for (int k = 0; k < m; ++k) y[k] = ysgn * pi[k];
  rc.resize(nstruct_);
  const double rsgn = (user_sense_ == ObjSense::Maximize) ? -1.0 : 1.0;
  for (int j = 0; j < nstruct_; ++j) {
    double r = cost_[j];
    for (const auto& e : nz_[j]) r -= pi[e.row] * e.coef;
    rc[j] = rsgn * r;
  }
}

BasisSnapshot SimplexEngine::snapshot() const {
  BasisSnapshot s;
  s.stat = stat_;
  s.basic = basic_;
  return s;
}

bool SimplexEngine::restore(const BasisSnapshot& snap) {
  const int ncols = static_cast<int>(nz_.size());
  const int snap_cols = static_cast<int>(snap.stat.size());
  const int snap_rows = static_cast<int>(snap.basic.size());
  if (snap_rows > nrows_ || snap_cols > ncols) return false;

  for (int j = 0; j < ncols; ++j) basic_pos_[j] = -1;
  for (int j = 0; j < ncols; ++j)
    stat_[j] = (j < snap_cols) ? snap.stat[j] : VStat::AtLb;

  basic_ = snap.basic;
  basic_.resize(nrows_);
  for (int r = snap_rows; r < nrows_; ++r) basic_[r] = logical_col_[r];
  for (int r = 0; r < nrows_; ++r) {
    basic_pos_[basic_[r]] = r;
    stat_[basic_[r]] = VStat::Basic;
  }
  for (int j = 0; j < ncols; ++j) {
    if (basic_pos_[j] >= 0) continue;
    place_nonbasic_at_bound(j);
  }
  return refactorize();
}

}  // namespace ccepec::detail
