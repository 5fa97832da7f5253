#pragma once

#include "netopt/core.hpp"
#include "netopt/sets.hpp"

#include <algorithm>
#include <set>

namespace netopt {

// x^T H x + q^T x + constant
struct QuadCost {
  Mat H;
  Vec q;
  double constant = 0.0;

  QuadCost() = default;
  QuadCost(Mat H_, Vec q_, double c = 0.0) : H(std::move(H_)), q(std::move(q_)), constant(c) {}

  Index dim() const { return q.size(); }
  double value(const Vec& x) const { return x.dot(H * x) + q.dot(x) + constant; }
  Vec gradient(const Vec& x) const { return 2.0 * (H * x) + q; }

  void validate() const {
    require(H.rows() == H.cols(), ErrorCode::DimensionMismatch, "cost H not square");
    require_dim(q.size(), H.rows(), "cost q");
    require(dim() > 0, ErrorCode::InvalidArgument, "cost dim must be positive");
    require(sym_error(H) <= 1e-12, ErrorCode::InvalidArgument, "cost H not symmetric");
    require(min_eig(H) >= -1e-10, ErrorCode::InvalidArgument, "cost H not positive semidefinite");
  }
};

using Point = std::vector<Vec>;

struct Evaluation {
  double objective = 0.0;
  Vec residual;  // empty for DCx and CCDC
};

struct ProblemDCx {
  std::vector<QuadCost> costs;
  FeasibleSet common_set;
  bool strict = false;

  Index M() const { return static_cast<Index>(costs.size()); }
  Index dim() const { return costs.empty() ? 0 : costs[0].dim(); }

  void validate() const {
    require(!costs.empty(), ErrorCode::InvalidArgument, "DCx needs at least one cost");
    for (const auto& c : costs) {
      c.validate();
      require_dim(c.dim(), dim(), "DCx cost dims");
      if (strict) require(min_eig(c.H) > 0, ErrorCode::InvalidArgument, "DCx flagged strict but H_i not PD");
    }
    require_dim(common_set.dim(), dim(), "DCx common set");
  }

  double objective(const Vec& x) const {
    require_dim(x.size(), dim(), "DCx point");
    double f = 0.0;
    for (const auto& c : costs) f += c.value(x);
    return f;
  }

  QuadCost aggregate() const {
    QuadCost a(Mat::Zero(dim(), dim()), Vec::Zero(dim()), 0.0);
    for (const auto& c : costs) {
      a.H += c.H;
      a.q += c.q;
      a.constant += c.constant;
    }
    return a;
  }
};

// rows [start, start+count) of the coupling owned by `agent`; neighbors are the
// agents whose columns those rows touch (sorted, includes agent when touched)
struct RowBlock {
  Index agent = 0;
  Index start = 0;
  Index count = 0;
  std::vector<Index> neighbors;
};

struct ProblemDCCC {
  std::vector<QuadCost> costs;
  std::vector<FeasibleSet> local_sets;
  std::vector<Mat> G;
  Vec g;
  std::vector<RowBlock> row_blocks;

  Index M() const { return static_cast<Index>(costs.size()); }
  Index n_lambda() const { return g.size(); }
  std::vector<Index> dims() const {
    std::vector<Index> d;
    for (const auto& c : costs) d.push_back(c.dim());
    return d;
  }
  Index total_dim() const {
    Index n = 0;
    for (const auto& c : costs) n += c.dim();
    return n;
  }

  // agents with a nonzero entry in rows [start, start+count)
  std::vector<Index> touching(Index start, Index count) const {
    std::vector<Index> out;
    for (Index j = 0; j < M(); ++j)
      if (G[j].middleRows(start, count).cwiseAbs().maxCoeff() > 0.0) out.push_back(j);
    return out;
  }

  void fill_default_row_blocks() {
    row_blocks.clear();
    if (n_lambda() == 0) return;
    RowBlock rb;
    rb.agent = 0;
    rb.start = 0;
    rb.count = n_lambda();
    rb.neighbors = touching(0, n_lambda());
    row_blocks.push_back(rb);
  }

  void validate() const {
    require(!costs.empty(), ErrorCode::InvalidArgument, "DCCC needs at least one agent");
    require_dim(static_cast<Index>(local_sets.size()), M(), "DCCC local sets");
    require_dim(static_cast<Index>(G.size()), M(), "DCCC coupling matrices");
    for (Index i = 0; i < M(); ++i) {
      costs[i].validate();
      require_dim(local_sets[i].dim(), costs[i].dim(), "DCCC local set " + std::to_string(i));
      require_dim(G[i].cols(), costs[i].dim(), "DCCC G_i columns " + std::to_string(i));
      require_dim(G[i].rows(), n_lambda(), "DCCC G_i rows " + std::to_string(i));
    }
    std::vector<int> covered(static_cast<size_t>(n_lambda()), 0);
    for (const auto& rb : row_blocks) {
      require(rb.agent >= 0 && rb.agent < M(), ErrorCode::InvalidArgument, "row block agent out of range");
      require(rb.start >= 0 && rb.count >= 0 && rb.start + rb.count <= n_lambda(), ErrorCode::InvalidArgument,
              "row block range");
      for (Index r = rb.start; r < rb.start + rb.count; ++r) covered[static_cast<size_t>(r)]++;
      std::set<Index> nb(rb.neighbors.begin(), rb.neighbors.end());
      for (Index j : touching(rb.start, rb.count))
        require(nb.count(j) > 0, ErrorCode::InvalidArgument,
                "row block of agent " + std::to_string(rb.agent) + " touches non-neighbor " + std::to_string(j));
    }
    if (!row_blocks.empty())
      for (int c : covered) require(c == 1, ErrorCode::InvalidArgument, "row blocks must partition coupling rows");
  }

  double objective(const Point& x) const {
    require_dim(static_cast<Index>(x.size()), M(), "DCCC point agents");
    double f = 0.0;
    for (Index i = 0; i < M(); ++i) {
      require_dim(x[i].size(), costs[i].dim(), "DCCC point block");
      f += costs[i].value(x[i]);
    }
    return f;
  }

  // rows [start, start+count) of sum_j G_j x^j - g over the listed agents, accumulated
  // agent by agent and column by column in a fixed order
  Vec residual_rows(const Point& x, Index start, Index count, const std::vector<Index>& agents) const {
    Vec r(count);
    for (Index k = 0; k < count; ++k) {
      double s = 0.0;
      for (Index j : agents) {
        const Mat& Gj = G[j];
        const Vec& xj = x[j];
        for (Index c = 0; c < xj.size(); ++c) s += Gj(start + k, c) * xj(c);
      }
      r(k) = s - g(start + k);
    }
    return r;
  }

  Vec residual(const Point& x) const {
    require_dim(static_cast<Index>(x.size()), M(), "DCCC point agents");
    std::vector<Index> all(static_cast<size_t>(M()));
    for (Index j = 0; j < M(); ++j) all[j] = j;
    return residual_rows(x, 0, n_lambda(), all);
  }

  Mat stacked_G() const {
    Mat S(n_lambda(), total_dim());
    Index o = 0;
    for (Index i = 0; i < M(); ++i) {
      S.middleCols(o, G[i].cols()) = G[i];
      o += G[i].cols();
    }
    return S;
  }
};

struct ProblemCCDC {
  // blocks[i][j] empty (0x0) means a structural zero
  std::vector<std::vector<Mat>> blocks;
  std::vector<Vec> linear;
  std::vector<FeasibleSet> local_sets;
  double constant = 0.0;

  Index M() const { return static_cast<Index>(linear.size()); }
  std::vector<Index> dims() const {
    std::vector<Index> d;
    for (const auto& q : linear) d.push_back(q.size());
    return d;
  }
  Index total_dim() const {
    Index n = 0;
    for (const auto& q : linear) n += q.size();
    return n;
  }
  std::vector<Index> offsets() const {
    std::vector<Index> o;
    Index s = 0;
    for (const auto& q : linear) {
      o.push_back(s);
      s += q.size();
    }
    return o;
  }

  bool has_block(Index i, Index j) const { return blocks[i][j].size() > 0; }

  std::vector<std::vector<bool>> mask() const {
    std::vector<std::vector<bool>> m(static_cast<size_t>(M()), std::vector<bool>(static_cast<size_t>(M()), false));
    for (Index i = 0; i < M(); ++i)
      for (Index j = 0; j < M(); ++j) m[i][j] = has_block(i, j);
    return m;
  }

  // agents j != i with H_ij present
  std::vector<Index> neighbors(Index i) const {
    std::vector<Index> nb;
    for (Index j = 0; j < M(); ++j)
      if (j != i && has_block(i, j)) nb.push_back(j);
    return nb;
  }

  Mat block(Index i, Index j) const {
    if (has_block(i, j)) return blocks[i][j];
    return Mat::Zero(linear[i].size(), linear[j].size());
  }

  Mat assembled_H() const {
    const auto off = offsets();
    Mat H = Mat::Zero(total_dim(), total_dim());
    for (Index i = 0; i < M(); ++i)
      for (Index j = 0; j < M(); ++j)
        if (has_block(i, j)) H.block(off[i], off[j], linear[i].size(), linear[j].size()) = blocks[i][j];
    return H;
  }

  Vec assembled_q() const { return stack(linear); }

  void validate() const {
    require(M() > 0, ErrorCode::InvalidArgument, "CCDC needs at least one agent");
    require_dim(static_cast<Index>(blocks.size()), M(), "CCDC block rows");
    require_dim(static_cast<Index>(local_sets.size()), M(), "CCDC local sets");
    for (Index i = 0; i < M(); ++i) {
      require_dim(static_cast<Index>(blocks[i].size()), M(), "CCDC block columns");
      require_dim(local_sets[i].dim(), linear[i].size(), "CCDC local set " + std::to_string(i));
      require(linear[i].size() > 0, ErrorCode::InvalidArgument, "CCDC block dim must be positive");
    }
    for (Index i = 0; i < M(); ++i)
      for (Index j = 0; j < M(); ++j) {
        require(has_block(i, j) == has_block(j, i), ErrorCode::InvalidArgument, "CCDC mask not symmetric");
        if (!has_block(i, j)) continue;
        require(blocks[i][j].rows() == linear[i].size() && blocks[i][j].cols() == linear[j].size(),
                ErrorCode::DimensionMismatch, "CCDC block shape");
        require((blocks[i][j] - blocks[j][i].transpose()).cwiseAbs().maxCoeff() <= 1e-12,
                ErrorCode::InvalidArgument, "CCDC H_ij != H_ji^T");
      }
    require(min_eig(assembled_H()) >= -1e-10, ErrorCode::InvalidArgument, "CCDC Hessian not PSD");
  }

  double objective(const Point& x) const {
    require_dim(static_cast<Index>(x.size()), M(), "CCDC point agents");
    double f = constant;
    for (Index i = 0; i < M(); ++i) {
      require_dim(x[i].size(), linear[i].size(), "CCDC point block");
      f += linear[i].dot(x[i]);
      for (Index j = 0; j < M(); ++j)
        if (has_block(i, j)) f += x[i].dot(blocks[i][j] * x[j]);
    }
    return f;
  }

  // 2 sum_j H_ij x^j + q_i
  Vec partial_gradient(const Point& x, Index i) const {
    require(i >= 0 && i < M(), ErrorCode::InvalidArgument, "agent index out of range");
    require_dim(static_cast<Index>(x.size()), M(), "CCDC point agents");
    Vec gr = linear[i];
    for (Index j = 0; j < M(); ++j)
      if (has_block(i, j)) gr.noalias() += 2.0 * (blocks[i][j] * x[j]);
    return gr;
  }

  // q_i + 2 sum_{j != i} H_ij x^j: linear term of block i's subproblem
  Vec block_linear(const Point& x, Index i) const {
    Vec l = linear[i];
    for (Index j = 0; j < M(); ++j)
      if (j != i && has_block(i, j)) l.noalias() += 2.0 * (blocks[i][j] * x[j]);
    return l;
  }

  Mat diag_block(Index i) const { return block(i, i); }
};

inline Evaluation evaluate(const ProblemDCx& p, const Vec& x) { return {p.objective(x), Vec()}; }
inline Evaluation evaluate(const ProblemDCCC& p, const Point& x) { return {p.objective(x), p.residual(x)}; }
inline Evaluation evaluate(const ProblemCCDC& p, const Point& x) { return {p.objective(x), Vec()}; }

inline Vec partial_gradient(const ProblemCCDC& p, const Point& x, Index i) { return p.partial_gradient(x, i); }

}  // namespace netopt
