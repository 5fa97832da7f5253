#pragma once

#include "netopt/local_solver.hpp"
#include "netopt/parallel.hpp"
#include "netopt/problem.hpp"
#include "netopt/rng.hpp"

namespace netopt {

// Cached per-block solvers for min_{x^i in X_i} f(x^1..x^i..x^M)
class BlockContext {
 public:
  BlockContext() = default;
  explicit BlockContext(const ProblemCCDC& p) : p_(p) {
    p.validate();
    for (Index i = 0; i < p.M(); ++i) {
      const Mat Hii = p.diag_block(i);
      Mat Aeq, C;
      Vec beq, d;
      detail::merged_constraints(p.local_sets[i], std::nullopt, Aeq, beq, C, d);
      strict_.push_back(detail::is_pd(Hii));
      qp_.push_back(strict_.back() ? StrictQP(Hii, Aeq, C) : StrictQP());
      beq_.push_back(beq);
      d_.push_back(d);
      L_.push_back(2.0 * spectral_norm(Hii));
      proj_.emplace_back(p.local_sets[i]);
    }
  }

  const ProblemCCDC& problem() const { return p_; }
  Index M() const { return p_.M(); }
  double lipschitz(Index i) const { return L_[i]; }
  const Projector& projector(Index i) const { return proj_[i]; }

  // argmin over block i with the other blocks fixed at x
  Vec minimize_block(const Point& x, Index i) const {
    if (!strict_[i])
      throw Error(ErrorCode::NonStrictBlock, "block " + std::to_string(i) + " has a singular diagonal block",
                  static_cast<int>(i));
    const QPSolution s = qp_[i].solve(p_.block_linear(x, i), beq_[i], d_[i], 1e-12);
    if (s.status == QPStatus::Infeasible)
      throw Error(ErrorCode::Infeasible, "block " + std::to_string(i) + " subproblem infeasible", static_cast<int>(i));
    return s.x;
  }

 private:
  ProblemCCDC p_;
  std::vector<bool> strict_;
  std::vector<StrictQP> qp_;
  std::vector<Vec> beq_, d_;
  std::vector<double> L_;
  std::vector<Projector> proj_;
};

inline Point jacobi_candidate(const BlockContext& ctx, const Point& x, int workers = 1) {
  Point out(x.size());
  parallel_for(ctx.M(), workers, [&](std::ptrdiff_t i) { out[i] = ctx.minimize_block(x, i); });
  return out;
}

inline void jacobi_step(const BlockContext& ctx, Point& x, int workers = 1) { x = jacobi_candidate(ctx, x, workers); }

// blocks adjacent when their cross block of H is nonzero
inline std::vector<std::vector<Index>> block_adjacency(const ProblemCCDC& p) {
  std::vector<std::vector<Index>> adj(static_cast<size_t>(p.M()));
  for (Index i = 0; i < p.M(); ++i)
    for (Index j = 0; j < p.M(); ++j)
      if (i != j && p.has_block(i, j) && p.blocks[i][j].cwiseAbs().maxCoeff() > 0.0) adj[i].push_back(j);
  return adj;
}

inline std::vector<int> greedy_coloring(const ProblemCCDC& p) {
  const auto adj = block_adjacency(p);
  std::vector<int> color(static_cast<size_t>(p.M()), -1);
  for (Index i = 0; i < p.M(); ++i) {
    std::vector<bool> used(static_cast<size_t>(p.M()) + 1, false);
    for (Index j : adj[i])
      if (color[j] >= 0) used[static_cast<size_t>(color[j])] = true;
    int c = 0;
    while (used[static_cast<size_t>(c)]) ++c;
    color[i] = c;
  }
  return color;
}

inline void validate_coloring(const ProblemCCDC& p, const std::vector<int>& color) {
  require(static_cast<Index>(color.size()) == p.M(), ErrorCode::InvalidColoring, "coloring size mismatch");
  const auto adj = block_adjacency(p);
  for (Index i = 0; i < p.M(); ++i) {
    require(color[i] >= 0, ErrorCode::InvalidColoring, "negative color");
    for (Index j : adj[i])
      require(color[i] != color[j], ErrorCode::InvalidColoring,
              "adjacent blocks " + std::to_string(i) + " and " + std::to_string(j) + " share a color");
  }
}

inline std::vector<Index> natural_order(Index M) {
  std::vector<Index> o(static_cast<size_t>(M));
  for (Index i = 0; i < M; ++i) o[i] = i;
  return o;
}

// sequential sweep in `order` with the freshest values
inline void gauss_seidel_step(const BlockContext& ctx, Point& x, const std::vector<Index>& order) {
  const Index M = ctx.M();
  require_dim(static_cast<Index>(order.size()), M, "Gauss-Seidel order");
  std::vector<bool> seen(static_cast<size_t>(M), false);
  for (Index i : order) {
    require(i >= 0 && i < M && !seen[i], ErrorCode::InvalidArgument, "Gauss-Seidel order must be a permutation");
    seen[i] = true;
  }
  for (Index i : order) x[i] = ctx.minimize_block(x, i);
}

// color classes in increasing color, blocks of one class in parallel
inline void gauss_seidel_colored_step(const BlockContext& ctx, Point& x, const std::vector<int>& color,
                                      int workers = 1) {
  validate_coloring(ctx.problem(), color);
  const int nc = *std::max_element(color.begin(), color.end()) + 1;
  for (int c = 0; c < nc; ++c) {
    std::vector<Index> cls;
    for (Index i = 0; i < ctx.M(); ++i)
      if (color[i] == c) cls.push_back(i);
    std::vector<Vec> upd(cls.size());
    parallel_for(static_cast<std::ptrdiff_t>(cls.size()), workers,
                 [&](std::ptrdiff_t k) { upd[k] = ctx.minimize_block(x, cls[k]); });
    for (size_t k = 0; k < cls.size(); ++k) x[cls[k]] = upd[k];
  }
}

// one uniformly drawn block moves to P_X(x^i - grad_i f / L_i)
inline Index coord_descent_step(const BlockContext& ctx, Point& x, Rng& rng) {
  const Index i = rng.index(ctx.M());
  const double L = ctx.lipschitz(i);
  require(L > 0.0, ErrorCode::InvalidArgument, "block Lipschitz constant must be positive");
  x[i] = ctx.projector(i)(x[i] - ctx.problem().partial_gradient(x, i) / L);
  return i;
}

inline void validate_weights(const std::vector<double>& alpha, Index M) {
  require(static_cast<Index>(alpha.size()) == M, ErrorCode::InvalidWeights, "need one weight per agent");
  double s = 0.0;
  for (double a : alpha) {
    require(a > 0.0, ErrorCode::InvalidWeights, "weights must be positive");
    s += a;
  }
  require(std::abs(s - 1.0) <= 1e-12, ErrorCode::InvalidWeights, "weights must sum to 1");
}

// x^i <- alpha_i xhat^i + (1 - alpha_i) x^i with xhat the Jacobi candidate
inline void cooperative_jacobi_step(const BlockContext& ctx, Point& x, const std::vector<double>& alpha,
                                    int workers = 1) {
  validate_weights(alpha, ctx.M());
  const Point c = jacobi_candidate(ctx, x, workers);
  for (Index i = 0; i < ctx.M(); ++i) x[i] = alpha[i] * c[i] + (1.0 - alpha[i]) * x[i];
}

struct FeasibleDirectionsInfo {
  std::vector<double> steps;
  std::vector<Index> frozen;  // blocks whose Armijo search failed
};

// each agent moves along d^i = xhat^i - x^i with its own Armijo step, evaluated
// with the other blocks at the current iterate; all agents then move together
inline FeasibleDirectionsInfo feasible_directions_step(const BlockContext& ctx, Point& x, int workers = 1,
                                                       double sigma = 1e-4, int max_halvings = 50) {
  const ProblemCCDC& p = ctx.problem();
  const Index M = ctx.M();
  const Point c = jacobi_candidate(ctx, x, workers);
  const double f0 = p.objective(x);
  FeasibleDirectionsInfo info;
  info.steps.assign(static_cast<size_t>(M), 0.0);
  std::vector<int> frozen(static_cast<size_t>(M), 0);
  parallel_for(M, workers, [&](std::ptrdiff_t i) {
    const Vec d = c[i] - x[i];
    const double slope = p.partial_gradient(x, i).dot(d);
    if (d.cwiseAbs().maxCoeff() == 0.0) return;
    Point y = x;
    double a = 1.0;
    for (int h = 0; h <= max_halvings; ++h) {
      y[i] = x[i] + a * d;
      if (p.objective(y) <= f0 + sigma * a * slope) {
        info.steps[i] = a;
        return;
      }
      a *= 0.5;
    }
    frozen[i] = 1;
  });
  for (Index i = 0; i < M; ++i) {
    if (frozen[i]) info.frozen.push_back(i);
    else x[i] = x[i] + info.steps[i] * (c[i] - x[i]);
  }
  return info;
}

struct ContractionCertificate {
  bool contraction = false;
  double modulus = kInf;
  double beta = 0.0;
};

namespace detail {

// eigenvalues of the diagonal blocks and norms of the cross blocks
struct BlockSpectra {
  std::vector<Vec> diag_eigs;
  std::vector<std::vector<double>> cross;
};

inline BlockSpectra block_spectra(const ProblemCCDC& p) {
  BlockSpectra s;
  const Index M = p.M();
  s.cross.assign(static_cast<size_t>(M), std::vector<double>(static_cast<size_t>(M), 0.0));
  for (Index i = 0; i < M; ++i) {
    const Mat Hii = p.diag_block(i);
    s.diag_eigs.push_back(Hii.size() ? Vec(Eigen::SelfAdjointEigenSolver<Mat>(Hii, Eigen::EigenvaluesOnly).eigenvalues()) : Vec());
    for (Index j = 0; j < M; ++j)
      if (j != i && p.has_block(i, j)) s.cross[i][j] = spectral_norm(p.blocks[i][j]);
  }
  return s;
}

inline double contraction_modulus(const BlockSpectra& s, double beta) {
  double m = 0.0;
  for (size_t i = 0; i < s.diag_eigs.size(); ++i) {
    double row = 0.0;
    const Vec& e = s.diag_eigs[i];
    if (e.size()) row = std::max(std::abs(1.0 - 2.0 * beta * e.minCoeff()), std::abs(1.0 - 2.0 * beta * e.maxCoeff()));
    for (double c : s.cross[i]) row += 2.0 * beta * c;
    m = std::max(m, row);
  }
  return m;
}

}  // namespace detail

// block-max-norm (zeta_i = 1) Lipschitz bound of x -> x - 2 beta H x:
// max_i sum_j ||delta_ij I - 2 beta H_ij||_2
inline ContractionCertificate contraction_certificate(const ProblemCCDC& p, double beta) {
  ContractionCertificate c;
  c.beta = beta;
  c.modulus = detail::contraction_modulus(detail::block_spectra(p), beta);
  c.contraction = c.modulus < 1.0;
  return c;
}

// smallest modulus over a log grid of beta
inline ContractionCertificate best_contraction(const ProblemCCDC& p, int grid = 60) {
  const detail::BlockSpectra s = detail::block_spectra(p);
  double hmax = 0.0;
  for (const auto& e : s.diag_eigs)
    if (e.size()) hmax = std::max(hmax, e.cwiseAbs().maxCoeff());
  if (hmax == 0.0) return contraction_certificate(p, 1.0);
  ContractionCertificate best;
  for (int k = 0; k < grid; ++k) {
    const double beta = std::pow(10.0, -4.0 + 4.0 * k / (grid - 1)) / (2.0 * hmax);
    const double m = detail::contraction_modulus(s, beta);
    if (m < best.modulus) best = {m < 1.0, m, beta};
  }
  return best;
}

}  // namespace netopt
