#pragma once

#include "netopt/core.hpp"
#include "netopt/local_solver.hpp"
#include "netopt/problem.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <variant>

namespace netopt {

using SpMat = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

// min x^T P x + c^T x + constant  s.t.  A x = b,  C x <= d
struct SparseQP {
  SpMat P, A, C;
  Vec c, b, d, x0;
  double constant = 0.0;
  Index n() const { return c.size(); }
};

struct SparseQPResult {
  Vec x, y, z;
  QPStatus status = QPStatus::MaxIter;
  double kkt_residual = kInf;
  int iterations = 0;
  bool polished = false;
};

namespace detail {

inline double sparse_kkt(const SparseQP& qp, const Vec& x, const Vec& y, const Vec& z) {
  Vec rd = 2.0 * (qp.P * x) + qp.c;
  if (qp.A.rows()) rd += qp.A.transpose() * y;
  if (qp.C.rows()) rd += qp.C.transpose() * z;
  double r = inf_norm(rd);
  if (qp.A.rows()) r = std::max(r, inf_norm(qp.A * x - qp.b));
  if (qp.C.rows()) {
    const Vec sl = qp.d - qp.C * x;
    r = std::max(r, std::max(0.0, -sl.minCoeff()));
    r = std::max(r, std::max(0.0, -z.minCoeff()));
    r = std::max(r, z.cwiseProduct(sl).cwiseAbs().maxCoeff());
  }
  return r;
}

inline void append_block(Triplets& t, const SpMat& M, Index r0, Index c0, double scale = 1.0) {
  for (int k = 0; k < M.outerSize(); ++k)
    for (SpMat::InnerIterator it(M, k); it; ++it)
      t.emplace_back(static_cast<int>(r0 + it.row()), static_cast<int>(c0 + it.col()), scale * it.value());
}

// quasi-definite solve with iterative refinement against the unregularized matrix
class KktSolver {
 public:
  KktSolver(const SpMat& K, const SpMat& Kreg) : K_(K) {
    ldlt_.compute(Kreg);
    ok_ = ldlt_.info() == Eigen::Success;
  }
  bool ok() const { return ok_; }
  Vec solve(const Vec& rhs) const {
    Vec x = ldlt_.solve(rhs);
    for (int k = 0; k < 3; ++k) {
      const Vec r = rhs - K_ * x;
      x += ldlt_.solve(r);
    }
    return x;
  }

 private:
  const SpMat& K_;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
  bool ok_ = false;
};

}  // namespace detail

inline SparseQPResult solve_sparse_qp(const SparseQP& qp, double tol = 1e-10, int max_iter = 200) {
  const Index n = qp.n(), me = qp.A.rows(), mi = qp.C.rows();
  const double scale =
      std::max({1.0, inf_norm(qp.c), me ? inf_norm(qp.b) : 0.0, mi ? inf_norm(qp.d) : 0.0});
  const double reg = 1e-10;
  SparseQPResult out;
  Vec x = qp.x0.size() == n ? qp.x0 : Vec::Zero(n);
  Vec y = Vec::Zero(me);
  Vec s = mi ? Vec((qp.d - qp.C * x).cwiseMax(1.0)) : Vec();
  Vec z = Vec::Ones(mi);
  const SpMat P2 = 2.0 * qp.P;
  const SpMat Ct = qp.C.transpose();
  Vec best_x = x, best_y = y, best_z = z;
  double best = kInf;
  int it = 0;
  for (; it < max_iter; ++it) {
    Vec rd = P2 * x + qp.c;
    if (me) rd += qp.A.transpose() * y;
    if (mi) rd += Ct * z;
    const Vec rp = me ? Vec(qp.A * x - qp.b) : Vec();
    const Vec ri = mi ? Vec(qp.C * x + s - qp.d) : Vec();
    const double mu = mi ? s.dot(z) / static_cast<double>(mi) : 0.0;
    const double res = std::max({inf_norm(rd), me ? inf_norm(rp) : 0.0, mi ? inf_norm(ri) : 0.0});
    if (!std::isfinite(res)) break;
    const double merit = std::max(res, mu);
    if (merit < best) {
      best = merit;
      best_x = x;
      best_y = y;
      best_z = z;
    }
    if (res <= tol * scale && mu <= tol * scale) break;
    if (inf_norm(x) > 1e14) throw Error(ErrorCode::Unbounded, "oracle iterates diverged");

    const Vec w = mi ? Vec(z.cwiseQuotient(s)) : Vec();
    SpMat H11 = P2;
    if (mi) H11 = H11 + SpMat(Ct * w.asDiagonal() * qp.C);
    Triplets t, treg;
    detail::append_block(t, H11, 0, 0);
    if (me) {
      detail::append_block(t, qp.A, n, 0);
      detail::append_block(t, SpMat(qp.A.transpose()), 0, n);
    }
    treg = t;
    for (Index j = 0; j < n; ++j) treg.emplace_back(static_cast<int>(j), static_cast<int>(j), reg);
    for (Index j = 0; j < me; ++j) treg.emplace_back(static_cast<int>(n + j), static_cast<int>(n + j), -reg);
    SpMat K(n + me, n + me), Kreg(n + me, n + me);
    K.setFromTriplets(t.begin(), t.end());
    Kreg.setFromTriplets(treg.begin(), treg.end());
    detail::KktSolver solver(K, Kreg);
    if (!solver.ok()) break;

    auto newton = [&](const Vec& rc, Vec& dx, Vec& dy, Vec& dz, Vec& ds) {
      Vec rhs(n + me);
      Vec top = -rd;
      if (mi) top -= Ct * ((-rc + z.cwiseProduct(ri)).cwiseQuotient(s));
      rhs.head(n) = top;
      if (me) rhs.tail(me) = -rp;
      const Vec sol = solver.solve(rhs);
      dx = sol.head(n);
      dy = sol.tail(me);
      if (mi) {
        ds = -ri - qp.C * dx;
        dz = (-rc - z.cwiseProduct(ds)).cwiseQuotient(s);
      }
    };
    auto max_step = [](const Vec& v, const Vec& dv) {
      double a = 1.0;
      for (Index j = 0; j < v.size(); ++j)
        if (dv(j) < 0.0) a = std::min(a, -v(j) / dv(j));
      return a;
    };
    Vec dx, dy, dz, ds;
    if (mi) {
      Vec rc = s.cwiseProduct(z);
      newton(rc, dx, dy, dz, ds);
      const double ap = max_step(s, ds), ad = max_step(z, dz);
      const double mu_aff = (s + ap * ds).dot(z + ad * dz) / static_cast<double>(mi);
      const double sigma = std::pow(std::min(1.0, mu_aff / mu), 3.0);
      rc = s.cwiseProduct(z) + ds.cwiseProduct(dz) - Vec::Constant(mi, sigma * mu);
      newton(rc, dx, dy, dz, ds);
      const double a = std::min({1.0, 0.995 * max_step(s, ds), 0.995 * max_step(z, dz)});
      x += a * dx;
      y += a * dy;
      s += a * ds;
      z += a * dz;
    } else {
      newton(Vec(), dx, dy, dz, ds);
      x += dx;
      y += dy;
    }
  }
  out.x = best_x;
  out.y = best_y;
  out.z = best_z;
  out.iterations = it;
  out.kkt_residual = detail::sparse_kkt(qp, out.x, out.y, out.z);

  // crossover: re-solve with the identified active set as equalities
  if (mi || me) {
    const Vec sl = mi ? Vec(qp.d - qp.C * out.x) : Vec();
    std::vector<Index> act;
    for (Index j = 0; j < mi; ++j)
      if (out.z(j) > sl(j)) act.push_back(j);
    const Index na = static_cast<Index>(act.size());
    Triplets t, treg;
    detail::append_block(t, P2, 0, 0);
    if (me) {
      detail::append_block(t, qp.A, n, 0);
      detail::append_block(t, SpMat(qp.A.transpose()), 0, n);
    }
    SpMat Ca(na, n);
    if (na) {
      Triplets ta;
      std::vector<Index> pos(static_cast<size_t>(mi), -1);
      for (Index r = 0; r < na; ++r) pos[static_cast<size_t>(act[static_cast<size_t>(r)])] = r;
      for (int k = 0; k < qp.C.outerSize(); ++k)
        for (SpMat::InnerIterator itc(qp.C, k); itc; ++itc)
          if (pos[static_cast<size_t>(itc.row())] >= 0)
            ta.emplace_back(static_cast<int>(pos[static_cast<size_t>(itc.row())]), static_cast<int>(itc.col()),
                            itc.value());
      Ca.setFromTriplets(ta.begin(), ta.end());
      detail::append_block(t, Ca, n + me, 0);
      detail::append_block(t, SpMat(Ca.transpose()), 0, n + me);
    }
    treg = t;
    for (Index j = 0; j < n; ++j) treg.emplace_back(static_cast<int>(j), static_cast<int>(j), reg);
    for (Index j = 0; j < me + na; ++j) treg.emplace_back(static_cast<int>(n + j), static_cast<int>(n + j), -reg);
    SpMat K(n + me + na, n + me + na), Kreg(n + me + na, n + me + na);
    K.setFromTriplets(t.begin(), t.end());
    Kreg.setFromTriplets(treg.begin(), treg.end());
    detail::KktSolver solver(K, Kreg);
    if (solver.ok()) {
      Vec rhs(n + me + na);
      rhs.head(n) = -qp.c;
      if (me) rhs.segment(n, me) = qp.b;
      for (Index r = 0; r < na; ++r) rhs(n + me + r) = qp.d(act[static_cast<size_t>(r)]);
      const Vec sol = solver.solve(rhs);
      Vec px = sol.head(n), py = sol.segment(n, me), pz = Vec::Zero(mi);
      for (Index r = 0; r < na; ++r) pz(act[static_cast<size_t>(r)]) = sol(n + me + r);
      if (sol.allFinite()) {
        const double pk = detail::sparse_kkt(qp, px, py, pz);
        if (pk < out.kkt_residual) {
          out.x = px;
          out.y = py;
          out.z = pz;
          out.kkt_residual = pk;
          out.polished = true;
        }
      }
    }
  }
  const double pres = std::max(me ? inf_norm(qp.A * out.x - qp.b) : 0.0,
                               mi ? std::max(0.0, (qp.C * out.x - qp.d).maxCoeff()) : 0.0);
  if (out.kkt_residual <= std::max(tol, 1e-9) * scale) out.status = QPStatus::Optimal;
  else if (pres > 1e-6 * scale) out.status = QPStatus::Infeasible;
  else out.status = QPStatus::MaxIter;
  return out;
}

struct OracleSolution {
  Point x;
  double objective = kNaN;
  Vec multipliers;  // coupling rows of a DCCC problem
  QPStatus status = QPStatus::MaxIter;
  double kkt_residual = kInf;
  int iterations = 0;
};

namespace detail {

inline SpMat to_sparse(const Mat& M) { return M.sparseView(0.0, 0.0); }

// stacked local sets: inequalities and equalities of each block placed on its columns
inline void stack_sets(const std::vector<FeasibleSet>& sets, const std::vector<Index>& off, Index n, Triplets& ti,
                       std::vector<double>& di, Triplets& te, std::vector<double>& be, Index eq_row0) {
  Index ri = 0, re = eq_row0;
  for (size_t i = 0; i < sets.size(); ++i) {
    Mat C;
    Vec d;
    sets[i].inequalities(C, d);
    for (Index r = 0; r < C.rows(); ++r) {
      for (Index c = 0; c < C.cols(); ++c)
        if (C(r, c) != 0.0) ti.emplace_back(static_cast<int>(ri), static_cast<int>(off[i] + c), C(r, c));
      di.push_back(d(r));
      ++ri;
    }
    for (Index r = 0; r < sets[i].n_eq(); ++r) {
      for (Index c = 0; c < sets[i].Aeq.cols(); ++c)
        if (sets[i].Aeq(r, c) != 0.0) te.emplace_back(static_cast<int>(re), static_cast<int>(off[i] + c), sets[i].Aeq(r, c));
      be.push_back(sets[i].beq(r));
      ++re;
    }
  }
  (void)n;
}

inline void finish(SparseQP& qp, Index n, Triplets& ti, std::vector<double>& di, Triplets& te,
                   std::vector<double>& be) {
  qp.C.resize(static_cast<Index>(di.size()), n);
  qp.C.setFromTriplets(ti.begin(), ti.end());
  qp.d = Eigen::Map<Vec>(di.data(), static_cast<Index>(di.size()));
  qp.A.resize(static_cast<Index>(be.size()), n);
  qp.A.setFromTriplets(te.begin(), te.end());
  qp.b = Eigen::Map<Vec>(be.data(), static_cast<Index>(be.size()));
}

inline OracleSolution run_oracle(const SparseQP& qp, double tol) {
  SparseQPResult r = solve_sparse_qp(qp, tol);
  if (r.status == QPStatus::Infeasible) throw Error(ErrorCode::Infeasible, "oracle: problem infeasible");
  OracleSolution o;
  o.status = r.status;
  o.kkt_residual = r.kkt_residual;
  o.iterations = r.iterations;
  o.x = {r.x};
  o.multipliers = r.y;
  o.objective = r.x.dot(qp.P * r.x) + qp.c.dot(r.x) + qp.constant;
  return o;
}

}  // namespace detail

inline OracleSolution solve_centralized(const ProblemDCx& p, double tol = 1e-10) {
  p.validate();
  const QuadCost a = p.aggregate();
  SparseQP qp;
  const Index n = p.dim();
  qp.P = detail::to_sparse(a.H);
  qp.c = a.q;
  qp.constant = a.constant;
  Triplets ti, te;
  std::vector<double> di, be;
  detail::stack_sets({p.common_set}, {0}, n, ti, di, te, be, 0);
  detail::finish(qp, n, ti, di, te, be);
  qp.x0 = p.common_set.has_interior() ? p.common_set.interior : Vec::Zero(n);
  OracleSolution o = detail::run_oracle(qp, tol);
  o.multipliers = Vec();
  return o;
}

inline OracleSolution solve_centralized(const ProblemDCCC& p, double tol = 1e-10) {
  p.validate();
  const auto dims = p.dims();
  std::vector<Index> off;
  Index n = 0;
  for (Index d : dims) {
    off.push_back(n);
    n += d;
  }
  SparseQP qp;
  Triplets tp;
  qp.c.resize(n);
  qp.x0 = Vec::Zero(n);
  for (Index i = 0; i < p.M(); ++i) {
    const Mat& H = p.costs[i].H;
    for (Index r = 0; r < H.rows(); ++r)
      for (Index c = 0; c < H.cols(); ++c)
        if (H(r, c) != 0.0) tp.emplace_back(static_cast<int>(off[i] + r), static_cast<int>(off[i] + c), H(r, c));
    qp.c.segment(off[i], dims[i]) = p.costs[i].q;
    qp.constant += p.costs[i].constant;
    if (p.local_sets[i].has_interior()) qp.x0.segment(off[i], dims[i]) = p.local_sets[i].interior;
  }
  qp.P.resize(n, n);
  qp.P.setFromTriplets(tp.begin(), tp.end());
  Triplets ti, te;
  std::vector<double> di, be;
  for (Index i = 0; i < p.M(); ++i)
    for (Index r = 0; r < p.n_lambda(); ++r)
      for (Index c = 0; c < dims[i]; ++c)
        if (p.G[i](r, c) != 0.0) te.emplace_back(static_cast<int>(r), static_cast<int>(off[i] + c), p.G[i](r, c));
  for (Index r = 0; r < p.n_lambda(); ++r) be.push_back(p.g(r));
  detail::stack_sets(p.local_sets, off, n, ti, di, te, be, p.n_lambda());
  detail::finish(qp, n, ti, di, te, be);
  OracleSolution o = detail::run_oracle(qp, tol);
  const Vec x = o.x[0];
  o.x = unstack(x, dims);
  o.multipliers = Vec(o.multipliers.head(p.n_lambda()));
  return o;
}

inline OracleSolution solve_centralized(const ProblemCCDC& p, double tol = 1e-10) {
  p.validate();
  const auto dims = p.dims();
  const auto off = p.offsets();
  const Index n = p.total_dim();
  SparseQP qp;
  Triplets tp;
  for (Index i = 0; i < p.M(); ++i)
    for (Index j = 0; j < p.M(); ++j) {
      if (!p.has_block(i, j)) continue;
      const Mat& B = p.blocks[i][j];
      for (Index r = 0; r < B.rows(); ++r)
        for (Index c = 0; c < B.cols(); ++c)
          if (B(r, c) != 0.0) tp.emplace_back(static_cast<int>(off[i] + r), static_cast<int>(off[j] + c), B(r, c));
    }
  qp.P.resize(n, n);
  qp.P.setFromTriplets(tp.begin(), tp.end());
  qp.c = p.assembled_q();
  qp.constant = p.constant;
  qp.x0 = Vec::Zero(n);
  for (Index i = 0; i < p.M(); ++i)
    if (p.local_sets[i].has_interior()) qp.x0.segment(off[i], dims[i]) = p.local_sets[i].interior;
  Triplets ti, te;
  std::vector<double> di, be;
  detail::stack_sets(p.local_sets, off, n, ti, di, te, be, 0);
  detail::finish(qp, n, ti, di, te, be);
  OracleSolution o = detail::run_oracle(qp, tol);
  const Vec x = o.x[0];
  o.x = unstack(x, dims);
  o.multipliers = Vec();
  return o;
}

using AnyProblem = std::variant<ProblemDCx, ProblemDCCC, ProblemCCDC>;

inline OracleSolution solve_centralized(const AnyProblem& p, double tol = 1e-10) {
  return std::visit([&](const auto& q) { return solve_centralized(q, tol); }, p);
}

}  // namespace netopt
