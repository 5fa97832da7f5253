#pragma once

#include "netopt/consensus.hpp"
#include "netopt/local_solver.hpp"
#include "netopt/network.hpp"
#include "netopt/parallel.hpp"
#include "netopt/problem.hpp"

namespace netopt {

namespace detail {

inline std::vector<Index> nonzero_rows(const Mat& G) {
  std::vector<Index> r;
  for (Index i = 0; i < G.rows(); ++i)
    if (G.row(i).cwiseAbs().maxCoeff() > 0.0) r.push_back(i);
  return r;
}

inline double strong_convexity(const ProblemDCCC& p) {
  double s = kInf;
  for (const auto& c : p.costs) s = std::min(s, 2.0 * min_eig(c.H));
  return std::max(0.0, s);
}

// neighbors send their rows of G x to the block owner, the owner returns its multipliers
inline void credit_block_exchange(const ProblemDCCC& p, RoundLedger* ledger) {
  if (!ledger) return;
  for (const auto& rb : p.row_blocks)
    for (Index j : rb.neighbors)
      if (j != rb.agent) {
        ledger->credit(rb.agent, j, static_cast<std::uint64_t>(rb.count));
        ledger->credit(j, rb.agent, static_cast<std::uint64_t>(rb.count));
      }
  ledger->close_round();
}

}  // namespace detail

// ------------------------------------------------------------ primal (PS)

struct Allocation {
  std::vector<Vec> t;  // t^1..t^{M-1}
};

struct PSState {
  Allocation alloc;
  Point x;
  std::vector<Vec> lambda;  // multiplier of G_i x = t^i in each subproblem
  Index k = 0;
  int last_halvings = 0;
};

class PrimalDecomposition {
 public:
  explicit PrimalDecomposition(const ProblemDCCC& p) : p_(p) {
    p.validate();
    for (Index i = 0; i < p.M(); ++i) {
      Eigen::FullPivLU<Mat> lu(p.G[i]);
      require(lu.rank() == p.n_lambda(), ErrorCode::InvalidArgument,
              "primal decomposition needs full row rank G_" + std::to_string(i));
    }
  }

  // allocations taken from the interior points
  Allocation initial_allocation() const {
    Allocation a;
    for (Index i = 0; i + 1 < p_.M(); ++i) {
      const FeasibleSet& s = p_.local_sets[i];
      a.t.push_back(p_.G[i] * (s.has_interior() ? s.interior : project(s, Vec::Zero(s.dim()))));
    }
    return a;
  }

  Vec last_rhs(const Allocation& a) const {
    Vec r = p_.g;
    for (const auto& t : a.t) r -= t;
    return r;
  }

  // solves P^1..P^M at an allocation; false if some subproblem is infeasible
  bool solve(const Allocation& a, Point& x, std::vector<Vec>& lam, int workers = 1) const {
    const Index M = p_.M();
    x.assign(static_cast<size_t>(M), Vec());
    lam.assign(static_cast<size_t>(M), Vec());
    std::vector<int> ok(static_cast<size_t>(M), 1);
    parallel_for(M, workers, [&](std::ptrdiff_t i) {
      const Vec rhs = i + 1 < M ? a.t[i] : last_rhs(a);
      const QPSolution s = solve_local_qp(p_.costs[i], p_.local_sets[i], EqualityConstraint{p_.G[i], rhs}, 1e-12);
      if (s.status == QPStatus::Infeasible || s.primal_residual > 1e-9 * std::max(1.0, inf_norm(rhs))) ok[i] = 0;
      x[i] = s.x;
      lam[i] = s.eq_multipliers;
    });
    for (int o : ok)
      if (!o) return false;
    return true;
  }

  PSState init(int workers = 1) const {
    PSState st;
    st.alloc = initial_allocation();
    if (!solve(st.alloc, st.x, st.lambda, workers))
      throw Error(ErrorCode::SubproblemInfeasible, "initial allocation infeasible");
    return st;
  }

  // t^i <- t^i - alpha (lambda^M - lambda^i); the step is halved while a subproblem is infeasible
  void step(PSState& st, double alpha, RoundLedger* ledger = nullptr, int workers = 1) const {
    const Index M = p_.M();
    st.last_halvings = 0;
    if (M > 1) {
      double a = alpha;
      for (int h = 0;; ++h) {
        Allocation na = st.alloc;
        for (Index i = 0; i + 1 < M; ++i) na.t[i] -= a * (st.lambda[M - 1] - st.lambda[i]);
        Point x;
        std::vector<Vec> lam;
        if (solve(na, x, lam, workers)) {
          st.alloc = na;
          st.x = x;
          st.lambda = lam;
          break;
        }
        if (h == 30) throw Error(ErrorCode::SubproblemInfeasible, "allocation step rejected after 30 halvings");
        a *= 0.5;
        ++st.last_halvings;
      }
    }
    if (ledger) {
      const auto nl = static_cast<std::uint64_t>(p_.n_lambda());
      for (Index i = 0; i + 1 < M; ++i) {
        ledger->credit(i, M - 1, nl);
        ledger->credit(M - 1, i, nl);
      }
      ledger->close_round();
    }
    ++st.k;
  }

  // implied primal point residual, zero up to solver accuracy
  Vec residual(const PSState& st) const { return p_.residual(st.x); }

  // subgradient of psi(t) = sum_i p_i(t^i) + p_M(g - sum t)
  std::vector<Vec> subgradient(const PSState& st) const {
    std::vector<Vec> s;
    for (Index i = 0; i + 1 < p_.M(); ++i) s.push_back(st.lambda[p_.M() - 1] - st.lambda[i]);
    return s;
  }

 private:
  ProblemDCCC p_;
};

// --------------------------------------------------------- dual function

struct DualEval {
  Vec lambda;
  double value = kNaN;
  Vec grad;  // sum_i G_i x^i - g
  Point x;
  std::vector<Mat> K;  // Hessians of f_i + mu P_i at x^i (barrier prox)
};

// d_mu(lambda) = sum_i min_{x in X_i} f_i(x) + mu P_i(x) + lambda^T G_i x  - lambda^T g
class DualFunction {
 public:
  DualFunction() = default;
  DualFunction(const ProblemDCCC& p, double mu, ProxKind kind, int workers = 1, const Point& centers = {})
      : p_(p), mu_(mu), kind_(kind), workers_(workers) {
    p.validate();
    if (kind == ProxKind::Quadratic) {
      require(mu >= 0.0, ErrorCode::InvalidArgument, "mu must be nonnegative");
    } else {
      require(mu > 0.0, ErrorCode::InvalidArgument, "barrier prox needs mu > 0");
    }
    for (Index i = 0; i < p.M(); ++i) {
      const Vec c = i < static_cast<Index>(centers.size()) ? centers[i] : Vec();
      solvers_.emplace_back(p.costs[i], p.local_sets[i], mu, kind, c);
    }
  }

  const ProblemDCCC& problem() const { return p_; }
  double mu() const { return mu_; }
  ProxKind kind() const { return kind_; }

  DualEval operator()(const Vec& lam, const Point& warm = {}, double tol = 1e-11) const {
    require_dim(lam.size(), p_.n_lambda(), "dual multiplier");
    const Index M = p_.M();
    DualEval e;
    e.lambda = lam;
    e.x.assign(static_cast<size_t>(M), Vec());
    std::vector<double> vals(static_cast<size_t>(M), 0.0);
    if (kind_ == ProxKind::LogBarrier) e.K.assign(static_cast<size_t>(M), Mat());
    parallel_for(M, workers_, [&](std::ptrdiff_t i) {
      const Vec shift = p_.G[i].transpose() * lam;
      const Vec w = i < static_cast<std::ptrdiff_t>(warm.size()) ? warm[i] : Vec();
      if (kind_ == ProxKind::LogBarrier) {
        BarrierSolution b = solvers_[i].solve_barrier(shift, w, tol);
        e.x[i] = std::move(b.x);
        e.K[i] = std::move(b.K);
      } else {
        e.x[i] = solvers_[i].solve(shift, tol, w);
      }
      const Vec& x = e.x[i];
      vals[i] = p_.costs[i].value(x) + (mu_ > 0.0 ? mu_ * solvers_[i].prox(x) : 0.0) + shift.dot(x);
    });
    double v = -lam.dot(p_.g);
    for (double t : vals) v += t;
    e.value = v;
    e.grad = p_.residual(e.x);
    return e;
  }

  // -sum_i G_i K_i^{-1} G_i^T, K_i reduced to the null space of local equalities
  Mat hessian(const DualEval& e) const {
    require(kind_ == ProxKind::LogBarrier, ErrorCode::InvalidArgument, "dual Hessian needs the barrier prox");
    const Index nl = p_.n_lambda();
    Mat Hd = Mat::Zero(nl, nl);
    for (Index i = 0; i < p_.M(); ++i) {
      const Mat& K = e.K[i];
      const Mat& G = p_.G[i];
      const FeasibleSet& s = p_.local_sets[i];
      Mat X;
      if (s.n_eq() == 0) {
        X = Eigen::LDLT<Mat>(K).solve(G.transpose());
      } else {
        const Index n = K.rows(), me = s.n_eq();
        Mat KK = Mat::Zero(n + me, n + me);
        KK.topLeftCorner(n, n) = K;
        KK.topRightCorner(n, me) = s.Aeq.transpose();
        KK.bottomLeftCorner(me, n) = s.Aeq;
        Mat rhs = Mat::Zero(n + me, nl);
        rhs.topRows(n) = G.transpose();
        X = Eigen::PartialPivLU<Mat>(KK).solve(rhs).topRows(n);
      }
      Hd.noalias() -= G * X;
    }
    return 0.5 * (Hd + Hd.transpose());
  }

  // Lipschitz constant of the gradient, ||G||^2 / (sigma_f + mu)
  double lipschitz() const {
    const double s = detail::strong_convexity(p_) + (kind_ == ProxKind::Quadratic ? mu_ : 0.0);
    require(s > 0.0, ErrorCode::NotStronglyConvex, "dual gradient is not Lipschitz without strong convexity");
    const double g = spectral_norm(p_.stacked_G());
    return g * g / s;
  }

 private:
  ProblemDCCC p_;
  double mu_ = 0.0;
  ProxKind kind_ = ProxKind::Quadratic;
  int workers_ = 1;
  std::vector<SmoothedSolver> solvers_;
};

inline std::pair<double, Vec> dual_value_and_subgradient(const ProblemDCCC& p, const Vec& lam, double mu,
                                                         ProxKind kind) {
  const DualEval e = DualFunction(p, mu, kind)(lam);
  return {e.value, e.grad};
}

struct PrimalRecovery {
  Point x;
  Vec residual;
};

inline PrimalRecovery recover_primal(const DualFunction& d, const Vec& lam) {
  DualEval e = d(lam);
  return {std::move(e.x), std::move(e.grad)};
}

// ------------------------------------------------------------------- DS

struct DualState {
  Vec lambda;
  Vec y;        // DFG extrapolated point
  double t = 1.0;
  DualEval last;  // evaluation at lambda
  Index k = 0;
  Index restarts = 0;
};

inline double default_ds_step(const ProblemDCCC& p) {
  const double g = spectral_norm(p.stacked_G());
  const double s = detail::strong_convexity(p);
  return s > 0.0 ? s / (g * g) : 1.0 / (g * g);
}

inline DualState ds_init(const DualFunction& d, const Vec& lam0 = Vec()) {
  DualState st;
  st.lambda = lam0.size() ? lam0 : Vec::Zero(d.problem().n_lambda());
  st.last = d(st.lambda);
  return st;
}

// lambda <- lambda + alpha (sum_i G_i x^i - g). The distributed form updates each
// row block from its neighbors only and is bitwise identical to the stacked update.
inline void ds_step(const DualFunction& d, DualState& st, double alpha, bool distributed = false,
                    RoundLedger* ledger = nullptr) {
  const ProblemDCCC& p = d.problem();
  if (!distributed || p.row_blocks.empty()) {
    st.lambda = st.lambda + alpha * st.last.grad;
  } else {
    Vec next = st.lambda;
    for (const auto& rb : p.row_blocks) {
      const Vec r = p.residual_rows(st.last.x, rb.start, rb.count, rb.neighbors);
      for (Index k = 0; k < rb.count; ++k) next(rb.start + k) = st.lambda(rb.start + k) + alpha * r(k);
    }
    st.lambda = next;
  }
  detail::credit_block_exchange(p, ledger);
  st.last = d(st.lambda, st.last.x);
  ++st.k;
}

// ------------------------------------------------------------------ DFG

inline double dfg_smoothing(const ProblemDCCC& p, double eps, const Point& centers = {}) {
  require(eps > 0.0, ErrorCode::InvalidArgument, "eps must be positive");
  double D = 0.0;
  for (Index i = 0; i < p.M(); ++i) {
    const Vec c = i < static_cast<Index>(centers.size()) ? centers[i] : p.local_sets[i].interior;
    D = std::max(D, prox_diameter(p.local_sets[i], c));
  }
  require(std::isfinite(D) && D > 0.0, ErrorCode::InvalidArgument, "prox diameter must be finite");
  return eps / (2.0 * D);
}

inline DualState dfg_init(const DualFunction& d, const Vec& lam0 = Vec()) {
  require(d.mu() > 0.0 && d.kind() == ProxKind::Quadratic, ErrorCode::InvalidArgument,
          "fast gradient needs mu > 0 and the quadratic prox");
  DualState st = ds_init(d, lam0);
  st.y = st.lambda;
  st.t = 1.0;
  return st;
}

// lbar_{k+1} = y_k + grad d(y_k)/L, y_{k+1} = lbar_{k+1} + beta_k (lbar_{k+1} - lbar_k);
// momentum restarts when d(lbar) would decrease. With momentum off this is plain
// gradient ascent with step 1/L.
inline void dfg_step(const DualFunction& d, DualState& st, double L, bool momentum = true,
                     RoundLedger* ledger = nullptr) {
  require(d.mu() > 0.0, ErrorCode::InvalidArgument, "fast gradient needs mu > 0");
  const ProblemDCCC& p = d.problem();
  const DualEval ey = (st.y.size() && st.y != st.lambda) ? d(st.y, st.last.x) : st.last;
  if (st.y.size() && st.y != st.lambda) detail::credit_block_exchange(p, ledger);
  Vec lb = ey.lambda + ey.grad / L;
  DualEval el = d(lb, ey.x);
  detail::credit_block_exchange(p, ledger);
  if (el.value < st.last.value) {
    // restart from a plain ascent step at the current point
    ++st.restarts;
    st.t = 1.0;
    lb = st.lambda + st.last.grad / L;
    el = d(lb, st.last.x);
    detail::credit_block_exchange(p, ledger);
  }
  if (momentum) {
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * st.t * st.t));
    const double beta = (st.t - 1.0) / tn;
    st.t = tn;
    st.y = lb + beta * (lb - st.lambda);
  } else {
    st.y = lb;
  }
  st.lambda = lb;
  st.last = std::move(el);
  ++st.k;
}

// ------------------------------------------------------------------ DIP

struct DipOptions {
  double mu0 = 1.0;
  double theta = 0.2;
  double armijo = 1e-4;
  double regularization = 1e-12;
  double centering = 1e-3;  // decrement^2 / 2 <= centering * mu counts as centered
  double inner_tol = 1e-10;
};

// Newton ascent on d_mu with barrier prox, mu decreased geometrically once centered
class DipSolver {
 public:
  DipSolver(const ProblemDCCC& p, double eps, DipOptions opt = {}, int workers = 1)
      : p_(p), eps_(eps), opt_(opt), workers_(workers) {
    require(eps > 0.0, ErrorCode::InvalidArgument, "eps must be positive");
    require(opt.theta > 0.0 && opt.theta < 1.0, ErrorCode::InvalidArgument, "theta must be in (0,1)");
    nu_ = 0;
    for (const auto& s : p.local_sets) nu_ += s.n_ineq();
    mu_ = opt.mu0;
    lambda_ = Vec::Zero(p.n_lambda());
    Point warm;
    for (const auto& s : p.local_sets) warm.push_back(s.interior);
    d_ = DualFunction(p, mu_, ProxKind::LogBarrier, workers);
    cur_ = d_(lambda_, warm, opt_.inner_tol);
    check_interior(cur_);
  }

  const Vec& lambda() const { return lambda_; }
  const DualEval& current() const { return cur_; }
  double mu() const { return mu_; }
  double decrement() const { return dec_; }
  Index newton_steps() const { return k_; }
  const DualFunction& dual() const { return d_; }

  // barrier bound mu * nu below eps and the current point centered
  bool converged() const { return mu_ * static_cast<double>(nu_) <= eps_ && centered_; }

  Vec newton_direction(const DualEval& e) const {
    Mat A = -d_.hessian(e);
    A.diagonal().array() += opt_.regularization;
    return Eigen::LDLT<Mat>(A).solve(e.grad);
  }

  // one damped Newton step; returns false once the intrinsic stop rule holds
  bool step(RoundLedger* ledger = nullptr) {
    for (;;) {
      const Vec dl = newton_direction(cur_);
      const double dec = cur_.grad.dot(dl);
      dec_ = std::sqrt(std::max(0.0, dec));
      centered_ = 0.5 * dec <= std::max(1e-12, opt_.centering * mu_);
      // a small decrement alone does not bound the residual when the dual curvature is large
      if (centered_ && mu_ * static_cast<double>(nu_) <= eps_ &&
          inf_norm(cur_.grad) > eps_ * std::max(1.0, inf_norm(p_.g)))
        centered_ = false;
      if (centered_) {
        if (converged() || mu_ < 1e-14) return false;
        mu_ *= opt_.theta;
        d_ = DualFunction(p_, mu_, ProxKind::LogBarrier, workers_);
        cur_ = d_(lambda_, cur_.x, opt_.inner_tol);
        check_interior(cur_);
        credit(ledger, false);
        continue;
      }
      double a = 1.0;
      DualEval trial;
      for (;;) {
        trial = d_(lambda_ + a * dl, cur_.x, opt_.inner_tol);
        credit(ledger, false);
        if (trial.value >= cur_.value + opt_.armijo * a * dec || a < 1e-10) break;
        a *= 0.5;
      }
      check_interior(trial);
      lambda_ = trial.lambda;
      cur_ = std::move(trial);
      credit(ledger, true);
      ++k_;
      return true;
    }
  }

 private:
  void check_interior(const DualEval& e) const {
    for (Index i = 0; i < p_.M(); ++i)
      if (!(p_.local_sets[i].min_slack(e.x[i]) > 0.0))
        throw Error(ErrorCode::LostInteriority, "agent " + std::to_string(i) + " left the interior", static_cast<int>(i));
  }

  // star exchange with agent 0 as the central node
  void credit(RoundLedger* ledger, bool hessian) const {
    if (!ledger) return;
    for (Index i = 1; i < p_.M(); ++i) {
      const auto r = static_cast<std::uint64_t>(detail::nonzero_rows(p_.G[i]).size());
      ledger->credit(i, 0, r);
      ledger->credit(0, i, r + 1 + (hessian ? r * r : 0));
    }
    ledger->close_round();
  }

  ProblemDCCC p_;
  double eps_;
  DipOptions opt_;
  int workers_;
  Index nu_ = 0;
  double mu_;
  Vec lambda_;
  DualFunction d_;
  DualEval cur_;
  double dec_ = kInf;
  bool centered_ = false;
  Index k_ = 0;
};

}  // namespace netopt
