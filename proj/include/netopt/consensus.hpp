#pragma once

#include "netopt/local_solver.hpp"
#include "netopt/network.hpp"
#include "netopt/parallel.hpp"
#include "netopt/problem.hpp"

#include <deque>

namespace netopt {

struct StepSizeRule {
  enum class Kind { Harmonic, Constant };
  Kind kind = Kind::Harmonic;
  double a = 1.0, b = 1.0;  // alpha_k = a / (b + k)
  double alpha = 0.0;

  static StepSizeRule harmonic(double a, double b) {
    require(a > 0.0 && b > 0.0, ErrorCode::InvalidArgument, "harmonic step needs a, b > 0");
    StepSizeRule r;
    r.kind = Kind::Harmonic;
    r.a = a;
    r.b = b;
    return r;
  }
  static StepSizeRule constant(double alpha) {
    require(alpha > 0.0, ErrorCode::InvalidArgument, "constant step must be positive");
    StepSizeRule r;
    r.kind = Kind::Constant;
    r.alpha = alpha;
    return r;
  }
  double at(Index k) const { return kind == Kind::Harmonic ? a / (b + static_cast<double>(k)) : alpha; }
};

struct ConsensusState {
  std::vector<Vec> x;
  Index k = 0;

  static ConsensusState uniform(const ProblemDCx& p, const Vec& x0) {
    ConsensusState s;
    s.x.assign(static_cast<size_t>(p.M()), x0);
    return s;
  }
};

// Hypotheses of the dgp1 convergence theorem; each failure is returned as a warning.
inline std::vector<std::string> dgp1_warnings(const ProblemDCx& p, const WeightSchedule& sched, Index tau = 0) {
  std::vector<std::string> w;
  for (size_t k = 0; k < sched.period.size(); ++k)
    if (!is_doubly_stochastic(sched.period[k])) w.push_back("weight matrix " + std::to_string(k) + " is not doubly stochastic");
  if (!check_joint_connectivity(sched, tau > 0 ? tau : static_cast<Index>(sched.period.size())))
    w.push_back("schedule is not jointly connected");
  if (!is_bounded(p.common_set)) w.push_back("common set is not compact; gradients may be unbounded");
  return w;
}

inline double dcx_gradient_lipschitz(const ProblemDCx& p) {
  double L = 0.0;
  for (const auto& c : p.costs) L = std::max(L, 2.0 * max_eig(c.H));
  return L;
}

inline double default_dgp2_step(const ProblemDCx& p) { return 1.0 / (2.0 * dcx_gradient_lipschitz(p)); }

// v^i = sum_j gamma_ij x^j, then x^i <- P_X(v^i - alpha_k grad f^i(v^i))
inline void dgp1_step(const ProblemDCx& p, const WeightSchedule& sched, ConsensusState& st, const StepSizeRule& rule,
                      RoundLedger* ledger = nullptr, const Projector* proj = nullptr, int workers = 1) {
  const Index M = p.M();
  require_dim(static_cast<Index>(st.x.size()), M, "dgp1 state");
  require_dim(sched.M(), M, "dgp1 schedule");
  const std::vector<Vec> v = consensus_round(sched, st.k, st.x, ledger, workers);
  const double a = rule.at(st.k);
  std::optional<Projector> own;
  if (!proj) proj = &own.emplace(p.common_set);
  parallel_for(M, workers, [&](std::ptrdiff_t i) { st.x[i] = (*proj)(v[i] - a * p.costs[i].gradient(v[i])); });
  ++st.k;
}

// x^i <- P_X(sum_j [Gamma^mu]_ij (x^j - alpha grad f^j(x^j)))
inline void dgp2_step(const ProblemDCx& p, const WeightSchedule& gamma, int mu, ConsensusState& st, double alpha,
                      RoundLedger* ledger = nullptr, const Projector* proj = nullptr, int workers = 1) {
  const Index M = p.M();
  require(gamma.constant(), ErrorCode::Incompatible, "dgp2 needs a constant weight matrix");
  require(mu >= 1, ErrorCode::InvalidArgument, "dgp2 needs mu >= 1");
  require(alpha > 0.0, ErrorCode::InvalidArgument, "dgp2 needs alpha > 0");
  require_dim(static_cast<Index>(st.x.size()), M, "dgp2 state");
  require_dim(gamma.M(), M, "dgp2 schedule");
  std::vector<Vec> s(static_cast<size_t>(M));
  parallel_for(M, workers, [&](std::ptrdiff_t i) { s[i] = st.x[i] - alpha * p.costs[i].gradient(st.x[i]); });
  for (int r = 0; r < mu; ++r) s = consensus_round(gamma, 0, s, ledger, workers);
  std::optional<Projector> own;
  if (!proj) proj = &own.emplace(p.common_set);
  parallel_for(M, workers, [&](std::ptrdiff_t i) { st.x[i] = (*proj)(s[i]); });
  ++st.k;
}

// One pass z_i = P_X(z_{i-1} - alpha_k grad f^{order_i}(z_{i-1})); the iterate travels
// around the cycle, one message per hop including the return to the start.
inline Vec incremental_cycle(const ProblemDCx& p, const std::vector<Index>& order, const Vec& z0, double alpha,
                             RoundLedger* ledger = nullptr, const Projector* proj = nullptr) {
  const Index M = p.M();
  require_dim(static_cast<Index>(order.size()), M, "incremental order");
  std::vector<bool> seen(static_cast<size_t>(M), false);
  for (Index i : order) {
    require(i >= 0 && i < M && !seen[i], ErrorCode::InvalidArgument, "incremental order must be a permutation");
    seen[i] = true;
  }
  std::optional<Projector> own;
  if (!proj) proj = &own.emplace(p.common_set);
  Vec z = z0;
  for (Index idx = 0; idx < M; ++idx) {
    const Index i = order[idx];
    z = (*proj)(z - alpha * p.costs[i].gradient(z));
    if (ledger && M > 1) ledger->credit(order[(idx + 1) % M], i, static_cast<std::uint64_t>(z.size()));
  }
  if (ledger) ledger->close_round();
  return z;
}

// max_i ||x^i - xbar||
inline double spread(const std::vector<Vec>& x) {
  const Vec m = average(x);
  double d = 0.0;
  for (const auto& v : x) d = std::max(d, (v - m).norm());
  return d;
}

// stop when the spread is <= eps and f(xbar) moved by <= eps over the last `window` iterations
class WindowStop {
 public:
  WindowStop(double eps, Index window = 50) : eps_(eps), window_(window) {}
  bool update(const ProblemDCx& p, const std::vector<Vec>& x) {
    hist_.push_back(p.objective(average(x)));
    if (static_cast<Index>(hist_.size()) > window_ + 1) hist_.pop_front();
    if (static_cast<Index>(hist_.size()) <= window_) return false;
    return spread(x) <= eps_ && std::abs(hist_.back() - hist_.front()) <= eps_;
  }

 private:
  double eps_;
  Index window_;
  std::deque<double> hist_;
};

}  // namespace netopt
