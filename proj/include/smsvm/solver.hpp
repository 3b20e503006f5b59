#pragma once

#include <Eigen/Cholesky>

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "smsvm/linesearch.hpp"
#include "smsvm/objective.hpp"

namespace smsvm {

struct SolveStats {
  long objective_evals = 0;
  long gradient_evals = 0;
  long hessian_evals = 0;
  long data_passes = 0;  // every O(N m) sweep: margins, gradient, hessian, curvature, f
  long line_search_failures = 0;
  long armijo_backtracks = 0;
};

struct AlphaLevel {
  double alpha = 0;
  int newton_steps = 0;
  double f_alpha = 0;  // value when the level was left
};

struct SolverState {
  Vector w;
  std::vector<std::uint8_t> active;  // mask over coordinates; inactive <=> w_j held at 0
  double alpha = 1.0;
  bool adjust = true;
  SolveStats stats;
  int steps_this_level = 0;

  std::vector<Index> active_indices() const {
    std::vector<Index> idx;
    for (Index j = 0; j < w.size(); ++j) {
      if (active[static_cast<std::size_t>(j)]) idx.push_back(j);
    }
    return idx;
  }
  // J: activated coordinates still sitting exactly at zero
  std::vector<Index> newly_activated() const {
    std::vector<Index> idx;
    for (Index j = 0; j < w.size(); ++j) {
      if (active[static_cast<std::size_t>(j)] && w[j] == 0.0) idx.push_back(j);
    }
    return idx;
  }
};

struct SolveOptions {
  std::optional<Vector> w0;
  long max_newton_steps = 200000;
  bool check_invariants = false;  // assert monotone descent after every accepted step
  std::ostream* trace = nullptr;  // CSV: alpha,step,f_alpha,active_size,s
};

struct SolveResult {
  Vector w;
  double alpha_final = 0;  // last alpha at which Newton steps ran
  std::vector<AlphaLevel> history;
  bool converged = false;
  SolveStats stats;
};

enum class StepOutcome {
  accepted,       // Armijo-accepted step, w updated
  alpha_reduced,  // smoothed problem near-solved, no activation left: alpha cut
  ls_failed,      // line search failed: alpha cut
};

namespace detail {

inline double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

// Newton direction on the active block: solve H d = -g with an SPD
// factorization; retry once with a small ridge, then fall back to steepest
// descent so the direction stays a descent direction.
inline void newton_direction(const Eigen::MatrixXd& H, const Vector& g_active, Vector& d_active) {
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() == Eigen::Success) {
    d_active = llt.solve(-g_active);
    if (d_active.allFinite()) return;
  }
  const double ridge = 1e-10 * (1.0 + H.trace() / static_cast<double>(H.rows()));
  Eigen::MatrixXd Hr = H;
  Hr.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt2(Hr);
  if (llt2.info() == Eigen::Success) {
    d_active = llt2.solve(-g_active);
    if (d_active.allFinite()) return;
  }
  d_active = -g_active;
}

}  // namespace detail

// Adjust active set or reduce the smoothing parameter. Called when the
// predicted reduction |d^T g| has dropped below eta * alpha. Activates
// J = { j inactive : |ghat_j| > mu } with a gradient step on those
// coordinates, at most once per alpha; otherwise cuts alpha. Returns true
// when an activation happened and the caller should proceed to the line
// search with the modified g and d.
inline bool adjust_or_reduce(SolverState& st, const Vector& ghat, Vector& g, Vector& dir,
                             const Hyperparams& h) {
  std::vector<Index> J;
  for (Index j = 0; j < st.w.size(); ++j) {
    if (!st.active[static_cast<std::size_t>(j)] && std::abs(ghat[j]) > h.mu) J.push_back(j);
  }
  if (!J.empty() && st.adjust) {
    for (Index j : J) {
      st.active[static_cast<std::size_t>(j)] = 1;
      g[j] = ghat[j] - h.mu * detail::sgn(ghat[j]);
      dir[j] = -g[j];
    }
    st.adjust = false;
    return true;
  }
  st.alpha *= h.beta;
  st.adjust = true;
  return false;
}

// One iteration of the guarded Newton step (gradient, active-block Newton
// solve, near-solved test, exact l1 line search, Armijo backtracking,
// active-set pruning).
inline StepOutcome newton_step(SolverState& st, const Dataset& d, const Hyperparams& h,
                               const SolveOptions& opt = {}) {
  const Index m = st.w.size();
  const double inv_n = 1.0 / static_cast<double>(d.rows());

  const Vector u = margins(st.w, d);
  ++st.stats.data_passes;
  const Vector ghat = gradient_smooth_from_margins(u, st.w, d, h, st.alpha);
  ++st.stats.gradient_evals;
  ++st.stats.data_passes;

  Vector g = ghat;
  for (Index j = 0; j < m; ++j) g[j] += h.mu * detail::sgn(st.w[j]);
  for (Index j : st.newly_activated()) g[j] = ghat[j] - h.mu * detail::sgn(ghat[j]);

  auto act = st.active_indices();
  Vector dir = Vector::Zero(m);
  if (!act.empty()) {
    const Eigen::MatrixXd H = hessian_active_from_margins(u, d, h, st.alpha, act);
    ++st.stats.hessian_evals;
    ++st.stats.data_passes;
    Vector g_active(static_cast<Index>(act.size()));
    for (Index t = 0; t < g_active.size(); ++t) g_active[t] = g[act[static_cast<std::size_t>(t)]];
    Vector d_active;
    detail::newton_direction(H, g_active, d_active);
    for (Index t = 0; t < d_active.size(); ++t) dir[act[static_cast<std::size_t>(t)]] = d_active[t];
  }

  double dtg = dir.dot(g);
  if (std::abs(dtg) < h.eta * st.alpha) {
    if (!adjust_or_reduce(st, ghat, g, dir, h)) return StepOutcome::alpha_reduced;
    dtg = dir.dot(g);
  }

  // quadratic model coefficients for the line search: b = d^T ghat and
  // a = d^T H d / 2, both from one pass that also caches X d for the
  // Armijo trials
  const double b = dir.dot(ghat);
  Vector xd(d.rows());
  double dhd = h.lambda * dir.squaredNorm();
  const double inv_na = inv_n / st.alpha;
  for (Index i = 0; i < d.rows(); ++i) {
    xd[i] = d.X.row(i).dot(dir);
    dhd += psi(u[i] / st.alpha).second * inv_na * xd[i] * xd[i];
  }
  const double a = 0.5 * dhd;
  ++st.stats.data_passes;
  const double s_max = a > 0 ? (std::abs(b) + h.mu * dir.lpNorm<1>()) / (2.0 * a)
                             : std::numeric_limits<double>::infinity();
  const LineSearchResult ls = linesearch_l1(st.w, dir, b, a, h.mu, s_max);
  if (ls.status == LineSearchStatus::unbounded || ls.status == LineSearchStatus::at_zero) {
    ++st.stats.line_search_failures;
    st.alpha *= h.beta;
    st.adjust = true;
    return StepOutcome::ls_failed;
  }

  const ObjectiveValue f0 = objective_from_margins(u, st.w, h, st.alpha);
  ++st.stats.objective_evals;
  auto f_at = [&](double s, Vector& w_out) {
    w_out = st.w + s * dir;
    double loss = 0.0;
    for (Index i = 0; i < d.rows(); ++i) loss += smoothed_hinge(u[i] - s * d.y[i] * xd[i], st.alpha);
    ++st.stats.objective_evals;
    const double fhat = 0.5 * h.lambda * w_out.squaredNorm() + loss * inv_n;
    return fhat + h.mu * w_out.lpNorm<1>();
  };

  double s = ls.s;
  bool halved = false;
  Vector w_plus(m);
  double f_trial = f_at(s, w_plus);
  while (f_trial > f0.f + h.c1 * s * dtg) {
    if (s < h.s_min) break;
    s *= 0.5;
    halved = true;
    ++st.stats.armijo_backtracks;
    f_trial = f_at(s, w_plus);
  }
  if (!std::isfinite(f_trial)) throw std::runtime_error("solver: objective became non-finite");
  if (s < h.s_min) {
    ++st.stats.line_search_failures;
    st.alpha *= h.beta;
    st.adjust = true;
    return StepOutcome::ls_failed;
  }

  // the line search reported an exact breakpoint: zero the crossing
  // coordinates explicitly, floating point would not cancel them
  if (!halved && ls.status == LineSearchStatus::breakpoint) {
    for (Index j : act) {
      if (std::abs(w_plus[j]) <= 1e-14 * (std::abs(st.w[j]) + s * std::abs(dir[j]))) w_plus[j] = 0.0;
    }
    w_plus[*ls.zero_index] = 0.0;
  }

  // prune: coordinates that landed on zero or flipped sign drop to the
  // inactive set and are held at exactly zero
  for (Index j = 0; j < m; ++j) {
    const bool flipped = st.w[j] != 0.0 && detail::sgn(w_plus[j]) == -detail::sgn(st.w[j]);
    if (w_plus[j] == 0.0 || flipped) {
      w_plus[j] = 0.0;
      st.active[static_cast<std::size_t>(j)] = 0;
    }
  }

  if (opt.check_invariants) {
    const double f_pruned = objective(w_plus, d, h, st.alpha).f;
    ++st.stats.objective_evals;
    if (!(f_pruned <= f0.f + h.c1 * s * dtg + 1e-12 * (1.0 + std::abs(f0.f)))) {
      throw std::logic_error("solver invariant violated: accepted step is not a sufficient decrease");
    }
  }

  st.w = w_plus;
  ++st.steps_this_level;
  if (opt.trace) {
    (*opt.trace) << st.alpha << ',' << st.steps_this_level << ',' << f_trial << ','
                 << st.active_indices().size() << ',' << s << '\n';
  }
  return StepOutcome::accepted;
}

// Smoothing loop: pre-activate from the gradient at w0, then run guarded
// Newton steps while alpha > beta * alpha_min, reducing alpha when the
// smoothed problem is nearly solved for the current active set.
inline SolveResult solve(const Dataset& d, const Hyperparams& h, const SolveOptions& opt = {}) {
  h.validate();
  d.validate();
  const Index m = d.cols();

  SolverState st;
  st.w = opt.w0.value_or(Vector::Zero(m));
  if (st.w.size() != m) throw std::invalid_argument("solve: w0 dimension mismatch");
  st.alpha = h.alpha0;
  st.adjust = true;
  st.active.assign(static_cast<std::size_t>(m), 0);
  for (Index j = 0; j < m; ++j) st.active[static_cast<std::size_t>(j)] = st.w[j] != 0.0;

  {
    const Vector ghat0 = gradient_smooth(st.w, d, h, st.alpha);
    st.stats.gradient_evals++;
    st.stats.data_passes += 2;
    for (Index j = 0; j < m; ++j) {
      if (!st.active[static_cast<std::size_t>(j)] && std::abs(ghat0[j]) > h.mu) {
        st.active[static_cast<std::size_t>(j)] = 1;
      }
    }
  }

  SolveResult result;
  result.converged = true;
  // slack absorbs the upward drift of repeated alpha *= beta so the schedule
  // ends at the intended level
  const double alpha_floor = h.beta * h.alpha_min * (1.0 + 1e-9);
  long total_steps = 0;
  while (st.alpha > alpha_floor) {
    if (total_steps++ >= opt.max_newton_steps) {
      result.converged = false;
      break;
    }
    const double alpha_before = st.alpha;
    const StepOutcome outcome = newton_step(st, d, h, opt);
    if (outcome != StepOutcome::accepted) {
      // the level at alpha_before is finished; record it
      const ObjectiveValue f = objective(st.w, d, h, alpha_before);
      st.stats.objective_evals++;
      st.stats.data_passes++;
      result.history.push_back({alpha_before, st.steps_this_level, f.f});
      st.steps_this_level = 0;
    }
  }

  result.w = st.w;
  result.alpha_final = result.history.empty() ? h.alpha0 : result.history.back().alpha;
  result.stats = st.stats;
  return result;
}

}  // namespace smsvm
