#pragma once

#include "netopt/core.hpp"
#include "netopt/parallel.hpp"

#include <map>
#include <set>
#include <utility>

namespace netopt {

// Directed edge (i, j) means j sends to i. Self-loops are never stored.
struct CommGraph {
  Index M = 0;
  std::set<std::pair<Index, Index>> edges;

  CommGraph() = default;
  explicit CommGraph(Index m) : M(m) {}

  void add_edge(Index i, Index j) {
    require(i >= 0 && i < M && j >= 0 && j < M, ErrorCode::InvalidArgument, "edge endpoint out of range");
    if (i != j) edges.insert({i, j});
  }
  void add_undirected(Index i, Index j) {
    add_edge(i, j);
    add_edge(j, i);
  }
  bool has_edge(Index i, Index j) const { return edges.count({i, j}) > 0; }

  bool symmetric() const {
    for (const auto& [i, j] : edges)
      if (!has_edge(j, i)) return false;
    return true;
  }

  // number of senders into i
  Index degree(Index i) const {
    Index d = 0;
    for (const auto& e : edges)
      if (e.first == i) ++d;
    return d;
  }

  std::vector<Index> in_neighbors(Index i) const {
    std::vector<Index> nb;
    for (const auto& e : edges)
      if (e.first == i) nb.push_back(e.second);
    return nb;
  }

  static CommGraph path(Index m) {
    CommGraph g(m);
    for (Index i = 0; i + 1 < m; ++i) g.add_undirected(i, i + 1);
    return g;
  }
  static CommGraph ring(Index m) {
    CommGraph g = path(m);
    if (m > 2) g.add_undirected(m - 1, 0);
    return g;
  }
  static CommGraph complete(Index m) {
    CommGraph g(m);
    for (Index i = 0; i < m; ++i)
      for (Index j = i + 1; j < m; ++j) g.add_undirected(i, j);
    return g;
  }
  static CommGraph star(Index m) {
    CommGraph g(m);
    for (Index i = 1; i < m; ++i) g.add_undirected(0, i);
    return g;
  }
  static CommGraph builtin(const std::string& name, Index m) {
    if (name == "path") return path(m);
    if (name == "ring") return ring(m);
    if (name == "complete") return complete(m);
    if (name == "star") return star(m);
    throw Error(ErrorCode::InvalidArgument, "unknown graph '" + name + "'");
  }

  // shortest-path diameter of the undirected version; -1 if disconnected
  Index diameter() const {
    Index best = 0;
    for (Index s = 0; s < M; ++s) {
      std::vector<Index> dist(static_cast<size_t>(M), -1);
      std::vector<Index> frontier{s};
      dist[s] = 0;
      while (!frontier.empty()) {
        std::vector<Index> next;
        for (Index u : frontier)
          for (const auto& [i, j] : edges) {
            Index v = -1;
            if (i == u) v = j;
            else if (j == u) v = i;
            if (v >= 0 && dist[v] < 0) {
              dist[v] = dist[u] + 1;
              next.push_back(v);
            }
          }
        frontier.swap(next);
      }
      for (Index v = 0; v < M; ++v) {
        if (dist[v] < 0) return -1;
        best = std::max(best, dist[v]);
      }
    }
    return best;
  }
};

// strongly connected over directed edges; trivially true for a single node
inline bool strongly_connected(Index M, const std::set<std::pair<Index, Index>>& edges) {
  if (M <= 1) return true;
  for (int dir = 0; dir < 2; ++dir) {
    std::vector<char> seen(static_cast<size_t>(M), 0);
    std::vector<Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (const auto& [i, j] : edges) {
        const Index from = dir == 0 ? j : i, to = dir == 0 ? i : j;
        if (from == u && !seen[to]) {
          seen[to] = 1;
          stack.push_back(to);
        }
      }
    }
    for (char c : seen)
      if (!c) return false;
  }
  return true;
}

struct WeightSchedule {
  std::vector<Mat> period;
  bool periodic = true;
  bool doubly = false;
  bool jointly_connected = false;
  Index tau = 1;

  Index M() const { return period.empty() ? 0 : period[0].rows(); }
  bool constant() const { return period.size() == 1 && periodic; }

  const Mat& at(Index k) const {
    require(!period.empty(), ErrorCode::InvalidArgument, "empty weight schedule");
    const Index P = static_cast<Index>(period.size());
    if (!periodic && k >= P)
      throw Error(ErrorCode::ScheduleExhausted, "round " + std::to_string(k) + " beyond finite schedule");
    return period[static_cast<size_t>(k % P)];
  }

  // edges with positive off-diagonal weight at step k
  std::set<std::pair<Index, Index>> support(Index k) const {
    std::set<std::pair<Index, Index>> e;
    const Mat& G = at(k);
    for (Index i = 0; i < G.rows(); ++i)
      for (Index j = 0; j < G.cols(); ++j)
        if (i != j && G(i, j) > 0.0) e.insert({i, j});
    return e;
  }

  void validate(const std::vector<CommGraph>& graphs = {}) const {
    require(!period.empty(), ErrorCode::InvalidWeights, "empty weight schedule");
    for (size_t k = 0; k < period.size(); ++k) {
      const Mat& G = period[k];
      require(G.rows() == G.cols() && G.rows() == M(), ErrorCode::InvalidWeights, "weight matrix shape");
      require(G.minCoeff() >= 0.0, ErrorCode::InvalidWeights, "negative weight");
      require((G.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12, ErrorCode::InvalidWeights,
              "weights not row-stochastic");
      if (doubly)
        require((G.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12, ErrorCode::InvalidWeights,
                "weights not column-stochastic");
      if (!graphs.empty()) {
        const CommGraph& g = graphs[k % graphs.size()];
        for (const auto& [i, j] : support(static_cast<Index>(k)))
          require(g.has_edge(i, j), ErrorCode::InvalidWeights, "positive weight outside edge set");
      }
    }
  }

  static WeightSchedule constant_matrix(const Mat& G, bool doubly_flag) {
    WeightSchedule s;
    s.period = {G};
    s.doubly = doubly_flag;
    return s;
  }
};

inline bool is_doubly_stochastic(const Mat& G, double tol = 1e-12) {
  if (G.rows() != G.cols() || G.minCoeff() < 0.0) return false;
  return (G.rowwise().sum().array() - 1.0).abs().maxCoeff() <= tol &&
         (G.colwise().sum().array() - 1.0).abs().maxCoeff() <= tol;
}

inline Mat metropolis_matrix(const CommGraph& g) {
  require(g.symmetric(), ErrorCode::InvalidArgument, "Metropolis weights need an undirected graph");
  Mat W = Mat::Zero(g.M, g.M);
  std::vector<Index> deg(static_cast<size_t>(g.M));
  for (Index i = 0; i < g.M; ++i) deg[i] = g.degree(i);
  for (const auto& [i, j] : g.edges) W(i, j) = 1.0 / (1.0 + static_cast<double>(std::max(deg[i], deg[j])));
  for (Index i = 0; i < g.M; ++i) W(i, i) = 1.0 - (W.row(i).sum() - W(i, i));
  return W;
}

inline WeightSchedule metropolis_weights(const CommGraph& g) {
  WeightSchedule s = WeightSchedule::constant_matrix(metropolis_matrix(g), true);
  s.jointly_connected = strongly_connected(g.M, g.edges);
  return s;
}

// periodic schedule with Metropolis weights on each graph of the period
inline WeightSchedule metropolis_weights(const std::vector<CommGraph>& graphs) {
  WeightSchedule s;
  for (const auto& g : graphs) s.period.push_back(metropolis_matrix(g));
  s.doubly = true;
  return s;
}

struct RoundLedger {
  std::vector<std::uint64_t> per_round;
  std::map<std::pair<Index, Index>, std::uint64_t> per_edge;
  std::uint64_t total = 0;
  std::uint64_t open = 0;

  void credit(Index to, Index from, std::uint64_t scalars) {
    per_edge[{to, from}] += scalars;
    open += scalars;
  }
  void close_round() {
    per_round.push_back(open);
    total += open;
    open = 0;
  }
  std::uint64_t rounds() const { return per_round.size(); }
};

inline std::vector<Vec> consensus_round(const WeightSchedule& sched, Index k, const std::vector<Vec>& states,
                                        RoundLedger* ledger = nullptr, int workers = 1) {
  const Mat& G = sched.at(k);
  const Index M = static_cast<Index>(states.size());
  require_dim(G.rows(), M, "consensus states");
  const Index d = M ? states[0].size() : 0;
  for (const auto& s : states) require_dim(s.size(), d, "consensus state dim");
  std::vector<Vec> out(static_cast<size_t>(M));
  parallel_for(M, workers, [&](std::ptrdiff_t i) {
    Vec v = Vec::Zero(d);
    for (Index j = 0; j < M; ++j)
      if (G(i, j) != 0.0) v.noalias() += G(i, j) * states[static_cast<size_t>(j)];
    out[static_cast<size_t>(i)] = std::move(v);
  });
  if (ledger) {
    for (Index i = 0; i < M; ++i)
      for (Index j = 0; j < M; ++j)
        if (i != j && G(i, j) > 0.0) ledger->credit(i, j, static_cast<std::uint64_t>(d));
    ledger->close_round();
  }
  return out;
}

// Gamma^mu for a constant schedule; mu = 0 gives the identity
inline Mat power_weights(const WeightSchedule& sched, int mu) {
  require(sched.constant(), ErrorCode::InvalidArgument, "power_weights needs a constant schedule");
  require(mu >= 0, ErrorCode::InvalidArgument, "negative power");
  const Mat& G = sched.period[0];
  Mat P = Mat::Identity(G.rows(), G.cols());
  for (int k = 0; k < mu; ++k) P = P * G;
  return P;
}

inline bool check_joint_connectivity(const WeightSchedule& sched, Index tau) {
  if (sched.period.empty() || tau < 1) return false;
  const Index M = sched.M();
  const Index P = static_cast<Index>(sched.period.size());
  std::set<std::pair<Index, Index>> e_inf;
  for (Index k = 0; k < P; ++k) {
    auto s = sched.support(k);
    e_inf.insert(s.begin(), s.end());
  }
  if (!strongly_connected(M, e_inf)) return false;
  const Index starts = sched.periodic ? P : std::max<Index>(1, P - tau + 1);
  for (Index k0 = 0; k0 < starts; ++k0) {
    std::set<std::pair<Index, Index>> u;
    for (Index k = k0; k < k0 + tau; ++k) {
      if (!sched.periodic && k >= P) break;
      auto s = sched.support(k);
      u.insert(s.begin(), s.end());
    }
    if (!strongly_connected(M, u)) return false;
  }
  return true;
}

// max_{i,j} ||x^i - x^j||_2
inline double disagreement(const std::vector<Vec>& states) {
  double m = 0.0;
  for (size_t i = 0; i < states.size(); ++i)
    for (size_t j = i + 1; j < states.size(); ++j) m = std::max(m, (states[i] - states[j]).norm());
  return m;
}

inline Vec average(const std::vector<Vec>& states) {
  Vec a = Vec::Zero(states.empty() ? 0 : states[0].size());
  for (const auto& s : states) a += s;
  return states.empty() ? a : Vec(a / static_cast<double>(states.size()));
}

}  // namespace netopt
