#pragma once

#include "netopt/core.hpp"
#include "netopt/problem.hpp"
#include "netopt/sets.hpp"

#include <functional>
#include <optional>
#include <utility>

namespace netopt {

enum class QPStatus { Optimal, MaxIter, Infeasible };

inline const char* to_string(QPStatus s) {
  switch (s) {
    case QPStatus::Optimal: return "Optimal";
    case QPStatus::MaxIter: return "MaxIter";
    case QPStatus::Infeasible: return "Infeasible";
  }
  return "?";
}

// Multipliers follow L = f + lambda^T (Aeq x - beq) + nu^T (C x - d), nu >= 0.
struct QPSolution {
  Vec x;
  Vec eq_multipliers;
  Vec ineq_multipliers;
  QPStatus status = QPStatus::MaxIter;
  double kkt_residual = kInf;
  double primal_residual = kInf;
  double stationarity = kInf;
  double complementarity = kInf;
  int iterations = 0;
};

struct EqualityConstraint {
  Mat A;
  Vec b;
};

namespace detail {

inline void kkt_measures(const Mat& H, const Vec& q, const Mat& Aeq, const Vec& beq, const Mat& C, const Vec& d,
                         QPSolution& s) {
  Vec stat = 2.0 * (H * s.x) + q;
  if (Aeq.rows()) stat.noalias() += Aeq.transpose() * s.eq_multipliers;
  if (C.rows()) stat.noalias() += C.transpose() * s.ineq_multipliers;
  s.stationarity = inf_norm(stat);
  double pr = 0.0, comp = 0.0;
  if (Aeq.rows()) pr = inf_norm(Aeq * s.x - beq);
  if (C.rows()) {
    const Vec slack = d - C * s.x;
    pr = std::max(pr, std::max(0.0, -slack.minCoeff()));
    comp = (s.ineq_multipliers.cwiseProduct(slack)).cwiseAbs().maxCoeff();
    comp = std::max(comp, std::max(0.0, -s.ineq_multipliers.minCoeff()));
  }
  s.primal_residual = pr;
  s.complementarity = comp;
  s.kkt_residual = std::max({s.stationarity, pr, comp});
}

}  // namespace detail

// Dual active-set method (Goldfarb-Idnani) for
//   min x^T H x + q^T x  s.t.  Aeq x = beq,  C x <= d
// with H positive definite. The factorization is reused across solves that only
// change q, beq or d.
class StrictQP {
 public:
  StrictQP() = default;

  StrictQP(const Mat& H, Mat Aeq, Mat C) : H_(H), Aeq_(std::move(Aeq)), C_(std::move(C)) {
    const Index n = H.rows();
    if (Aeq_.size() == 0) Aeq_.resize(0, n);
    if (C_.size() == 0) C_.resize(0, n);
    require_dim(Aeq_.cols(), n, "StrictQP equality columns");
    require_dim(C_.cols(), n, "StrictQP inequality columns");
    llt_.compute(2.0 * H);
    bool ok = llt_.info() == Eigen::Success;
    if (ok) {
      const Vec dg = Mat(llt_.matrixL()).diagonal();
      ok = dg.minCoeff() > 1e-10 * std::max(1.0, dg.maxCoeff());
    }
    if (!ok) throw Error(ErrorCode::NotStronglyConvex, "StrictQP requires positive definite H");
    J0_ = llt_.matrixU().solve(Mat::Identity(n, n));
    row_norm_.resize(C_.rows());
    for (Index r = 0; r < C_.rows(); ++r) row_norm_(r) = C_.row(r).norm();
  }

  Index dim() const { return H_.rows(); }
  const Mat& H() const { return H_; }
  const Mat& Aeq() const { return Aeq_; }
  const Mat& C() const { return C_; }

  QPSolution solve(const Vec& q, const Vec& beq, const Vec& d, double tol = 1e-10) const {
    const Index n = dim(), me = Aeq_.rows(), mi = C_.rows();
    require_dim(q.size(), n, "StrictQP q");
    require_dim(beq.size(), me, "StrictQP beq");
    require_dim(d.size(), mi, "StrictQP d");

    QPSolution out;
    Vec x = -llt_.solve(q);
    Mat J = J0_;
    Mat R = Mat::Zero(n, n);
    Vec u = Vec::Zero(n);
    std::vector<Index> active;  // >= 0: inequality row, < 0: equality -(k+1)
    Index iq = 0;
    const double eps = 1e-14;

    auto normal = [&](Index c) -> Vec {
      if (c < 0) return Aeq_.row(-c - 1).transpose();
      return -C_.row(c).transpose();
    };
    auto slack = [&](Index c) -> double {
      if (c < 0) return Aeq_.row(-c - 1).dot(x) - beq(-c - 1);
      return d(c) - C_.row(c).dot(x);
    };
    auto directions = [&](const Vec& np, Vec& z, Vec& r) {
      const Vec dd = J.transpose() * np;
      z = J.rightCols(n - iq) * dd.tail(n - iq);
      r.resize(iq);
      if (iq > 0) r = R.topLeftCorner(iq, iq).triangularView<Eigen::Upper>().solve(dd.head(iq));
    };
    auto givens = [](double a, double b, double& c, double& s) -> double {
      const double h = std::hypot(a, b);
      if (h == 0.0) {
        c = 1.0;
        s = 0.0;
        return 0.0;
      }
      c = a / h;
      s = b / h;
      return h;
    };
    auto add = [&](const Vec& np) -> bool {
      Vec dd = J.transpose() * np;
      for (Index j = n - 1; j > iq; --j) {
        double c, s;
        const double h = givens(dd(j - 1), dd(j), c, s);
        if (s == 0.0) continue;
        dd(j - 1) = h;
        dd(j) = 0.0;
        for (Index k = 0; k < n; ++k) {
          const double a = J(k, j - 1), b = J(k, j);
          J(k, j - 1) = c * a + s * b;
          J(k, j) = -s * a + c * b;
        }
      }
      if (std::abs(dd(iq)) <= eps * std::max(1.0, np.norm())) return false;
      R.col(iq).head(iq + 1) = dd.head(iq + 1);
      ++iq;
      return true;
    };
    auto drop = [&](Index l) {
      for (Index j = l; j < iq - 1; ++j) R.col(j) = R.col(j + 1);
      R.col(iq - 1).setZero();
      for (Index j = l; j < iq - 1; ++j) {
        double c, s;
        const double h = givens(R(j, j), R(j + 1, j), c, s);
        if (s == 0.0) continue;
        R(j, j) = h;
        R(j + 1, j) = 0.0;
        for (Index k = j + 1; k < iq - 1; ++k) {
          const double a = R(j, k), b = R(j + 1, k);
          R(j, k) = c * a + s * b;
          R(j + 1, k) = -s * a + c * b;
        }
        for (Index k = 0; k < n; ++k) {
          const double a = J(k, j), b = J(k, j + 1);
          J(k, j) = c * a + s * b;
          J(k, j + 1) = -s * a + c * b;
        }
      }
      for (Index j = l; j < iq - 1; ++j) u(j) = u(j + 1);
      u(iq - 1) = 0.0;
      active.erase(active.begin() + l);
      --iq;
    };

    Vec z, r;
    bool infeasible = false;
    for (Index k = 0; k < me && !infeasible; ++k) {
      const Vec np = normal(-k - 1);
      directions(np, z, r);
      const double zn = z.dot(np);
      const double sk = slack(-k - 1);
      if (std::abs(zn) <= eps * std::max(1.0, np.squaredNorm())) {
        if (std::abs(sk) > std::sqrt(tol) * std::max(1.0, std::abs(beq(k)))) infeasible = true;
        continue;  // dependent equality row
      }
      const double t = -sk / zn;
      x += t * z;
      if (iq > 0) u.head(iq) -= t * r;
      u(iq) = t;
      active.push_back(-k - 1);
      if (!add(np)) {
        active.pop_back();
        u(iq) = 0.0;
      }
    }

    const Index max_outer = 10 * (n + mi) + 50;
    int iter = 0;
    std::vector<char> is_active(static_cast<size_t>(mi), 0);
    while (!infeasible && iter < max_outer) {
      ++iter;
      for (Index c : active)
        if (c >= 0) is_active[static_cast<size_t>(c)] = 1;
      Index p = -1;
      double worst = 0.0;
      if (mi) {
        const Vec s = d - C_ * x;
        for (Index c = 0; c < mi; ++c) {
          if (is_active[static_cast<size_t>(c)] || row_norm_(c) == 0.0) continue;
          const double v = s(c) / row_norm_(c);
          if (v < -tol * std::max(1.0, std::abs(d(c)) / row_norm_(c)) && v < worst) {
            worst = v;
            p = c;
          }
        }
      }
      for (Index c : active)
        if (c >= 0) is_active[static_cast<size_t>(c)] = 0;
      if (p < 0) break;

      const Vec np = normal(p);
      double up = 0.0;
      int inner = 0;
      while (true) {
        if (++inner > 4 * (n + mi) + 50) {
          infeasible = true;
          break;
        }
        directions(np, z, r);
        double t1 = kInf;
        Index kdrop = -1;
        for (Index j = 0; j < iq; ++j) {
          if (active[static_cast<size_t>(j)] < 0) continue;
          if (r(j) > 0.0) {
            const double v = u(j) / r(j);
            if (v < t1) {
              t1 = v;
              kdrop = j;
            }
          }
        }
        const double zn = z.dot(np);
        double t2 = kInf;
        if (z.norm() > eps * std::max(1.0, np.norm()) && zn > 0.0) t2 = -slack(p) / zn;
        if (!std::isfinite(t1) && !std::isfinite(t2)) {
          infeasible = true;
          break;
        }
        if (!std::isfinite(t2)) {
          if (iq > 0) u.head(iq) -= t1 * r;
          up += t1;
          drop(kdrop);
          continue;
        }
        const double t = std::min(t1, t2);
        x += t * z;
        if (iq > 0) u.head(iq) -= t * r;
        up += t;
        if (t2 <= t1) {
          active.push_back(p);
          u(iq) = up;
          if (!add(np)) {
            active.pop_back();
            u(iq) = 0.0;
            infeasible = true;
          }
          break;
        }
        drop(kdrop);
      }
    }

    out.x = x;
    out.eq_multipliers = Vec::Zero(me);
    out.ineq_multipliers = Vec::Zero(mi);
    for (Index j = 0; j < iq; ++j) {
      const Index c = active[static_cast<size_t>(j)];
      if (c < 0) out.eq_multipliers(-c - 1) = -u(j);
      else out.ineq_multipliers(c) = u(j);
    }
    out.iterations = iter;
    detail::kkt_measures(H_, q, Aeq_, beq, C_, d, out);
    const double scale = std::max({1.0, inf_norm(q), inf_norm(d), inf_norm(beq)});
    if (infeasible) out.status = QPStatus::Infeasible;
    else if (iter >= max_outer) out.status = QPStatus::MaxIter;
    else out.status = out.kkt_residual <= std::max(tol, 1e-9) * scale ? QPStatus::Optimal : QPStatus::MaxIter;
    return out;
  }

 private:
  Mat H_, Aeq_, C_, J0_;
  Vec row_norm_;
  Eigen::LLT<Mat> llt_;
};

// Primal-dual interior-point (Mehrotra predictor-corrector) for the same QP with
// H merely positive semidefinite.
inline QPSolution solve_qp_ipm(const Mat& H, const Vec& q, const Mat& Aeq_in, const Vec& beq, const Mat& C_in,
                               const Vec& d, double tol = 1e-10, const Vec& x0 = Vec(), int max_iter = 200) {
  const Index n = H.rows();
  const Mat Aeq = Aeq_in.size() ? Aeq_in : Mat(0, n);
  const Mat C = C_in.size() ? C_in : Mat(0, n);
  const Index me = Aeq.rows(), mi = C.rows();
  QPSolution out;
  Vec x = x0.size() == n ? x0 : Vec::Zero(n);
  Vec y = Vec::Zero(me);
  Vec s = mi ? Vec((d - C * x).cwiseMax(1.0)) : Vec();
  Vec z = Vec::Ones(mi);
  const double scale = std::max({1.0, inf_norm(q), inf_norm(d), inf_norm(beq), H.size() ? H.cwiseAbs().maxCoeff() : 0.0});
  const Mat H2 = 2.0 * H;
  Vec last_x = x, last_y = y, last_z = z;
  int it = 0;
  bool converged = false;
  for (; it < max_iter; ++it) {
    Vec rd = H2 * x + q;
    if (me) rd.noalias() += Aeq.transpose() * y;
    if (mi) rd.noalias() += C.transpose() * z;
    const Vec rp = me ? Vec(Aeq * x - beq) : Vec();
    const Vec ri = mi ? Vec(C * x + s - d) : Vec();
    const double mu = mi ? s.dot(z) / static_cast<double>(mi) : 0.0;
    const double res = std::max({inf_norm(rd), me ? inf_norm(rp) : 0.0, mi ? inf_norm(ri) : 0.0});
    if (!std::isfinite(res) || !std::isfinite(mu)) {
      x = last_x;
      y = last_y;
      z = last_z;
      break;
    }
    if ((res <= tol * scale && mu <= tol * scale) || (res <= 100.0 * tol * scale && mu <= 1e-3 * tol * scale)) {
      converged = true;
      break;
    }
    last_x = x;
    last_y = y;
    last_z = z;
    if (x.size() && inf_norm(x) > 1e14) throw Error(ErrorCode::Unbounded, "interior-point iterates diverged");

    const Vec w = mi ? Vec(z.cwiseQuotient(s)) : Vec();
    Mat K = Mat::Zero(n + me, n + me);
    K.topLeftCorner(n, n) = H2;
    if (mi) K.topLeftCorner(n, n).noalias() += C.transpose() * w.asDiagonal() * C;
    K.topLeftCorner(n, n).diagonal().array() += 1e-12 * scale;
    if (me) {
      K.topRightCorner(n, me) = Aeq.transpose();
      K.bottomLeftCorner(me, n) = Aeq;
      K.bottomRightCorner(me, me).diagonal().array() = -1e-12 * scale;
    }
    Eigen::PartialPivLU<Mat> lu(K);

    auto newton = [&](const Vec& rc, Vec& dx, Vec& dy, Vec& dz, Vec& ds) {
      Vec rhs(n + me);
      Vec top = -rd;
      if (mi) top.noalias() -= C.transpose() * ((-rc + z.cwiseProduct(ri)).cwiseQuotient(s));
      rhs.head(n) = top;
      if (me) rhs.tail(me) = -rp;
      const Vec sol = lu.solve(rhs);
      dx = sol.head(n);
      dy = sol.tail(me);
      if (mi) {
        ds = -ri - C * dx;
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
      const double sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3.0);
      rc = s.cwiseProduct(z) + ds.cwiseProduct(dz) - Vec::Constant(mi, sigma * mu);
      newton(rc, dx, dy, dz, ds);
      const double ap2 = std::min(1.0, 0.995 * max_step(s, ds));
      const double ad2 = std::min(1.0, 0.995 * max_step(z, dz));
      const double a = std::min(ap2, ad2);
      x += a * dx;
      s += a * ds;
      y += a * dy;
      z += a * dz;
    } else {
      newton(Vec(), dx, dy, dz, ds);
      x += dx;
      y += dy;
    }
  }
  out.x = x;
  out.eq_multipliers = y;
  out.ineq_multipliers = z;
  out.iterations = it;
  detail::kkt_measures(H, q, Aeq, beq, C, d, out);
  if (converged) out.status = QPStatus::Optimal;
  else if (out.primal_residual > std::sqrt(tol) * scale) out.status = QPStatus::Infeasible;
  else out.status = QPStatus::MaxIter;
  return out;
}

namespace detail {

inline void merged_constraints(const FeasibleSet& set, const std::optional<EqualityConstraint>& eq, Mat& Aeq,
                               Vec& beq, Mat& C, Vec& d) {
  const Index n = set.dim();
  set.inequalities(C, d);
  const Index me_set = set.n_eq();
  const Index me_eq = eq ? eq->A.rows() : 0;
  Aeq.resize(me_set + me_eq, n);
  beq.resize(me_set + me_eq);
  if (me_set) {
    Aeq.topRows(me_set) = set.Aeq;
    beq.head(me_set) = set.beq;
  }
  if (me_eq) {
    require_dim(eq->A.cols(), n, "equality constraint columns");
    require_dim(eq->b.size(), me_eq, "equality constraint rhs");
    Aeq.bottomRows(me_eq) = eq->A;
    beq.tail(me_eq) = eq->b;
  }
}

inline bool is_pd(const Mat& H) {
  if (H.rows() == 0) return false;
  Eigen::LLT<Mat> llt(H);
  if (llt.info() != Eigen::Success) return false;
  const Vec dg = Mat(llt.matrixL()).diagonal();
  return dg.minCoeff() > 1e-10 * std::max(1.0, dg.maxCoeff());
}

}  // namespace detail

// Local QP over set ∩ {A_e x = b_e}; only the multipliers of `eq` are returned
// in eq_multipliers (the set's own equality rows are dropped).
inline QPSolution solve_local_qp(const QuadCost& cost, const FeasibleSet& set,
                                 const std::optional<EqualityConstraint>& eq = std::nullopt, double tol = 1e-10) {
  require_dim(set.dim(), cost.dim(), "solve_local_qp set");
  Mat Aeq, C;
  Vec beq, d;
  detail::merged_constraints(set, eq, Aeq, beq, C, d);
  QPSolution s;
  if (detail::is_pd(cost.H)) {
    StrictQP qp(cost.H, Aeq, C);
    s = qp.solve(cost.q, beq, d, tol);
  } else {
    s = solve_qp_ipm(cost.H, cost.q, Aeq, beq, C, d, tol, set.has_interior() ? set.interior : Vec());
  }
  const Index me_set = set.n_eq();
  s.eq_multipliers = Vec(s.eq_multipliers.tail(s.eq_multipliers.size() - me_set));
  return s;
}

// Euclidean projection onto a feasible set.
inline Vec project(const FeasibleSet& set, const Vec& v) {
  require_dim(v.size(), set.dim(), "project");
  if (set.is_box()) return v.cwiseMax(set.lower).cwiseMin(set.upper);
  if (!set.has_interior()) throw Error(ErrorCode::Infeasible, "polyhedron without interior certificate");
  const Index n = set.dim();
  StrictQP qp(Mat::Identity(n, n), set.Aeq, set.A);
  QPSolution s = qp.solve(-2.0 * v, set.beq, set.b, 1e-12);
  if (s.status == QPStatus::Infeasible) throw Error(ErrorCode::Infeasible, "projection onto empty polyhedron");
  return s.x;
}

// Cached projector for repeated projections onto the same set.
class Projector {
 public:
  explicit Projector(const FeasibleSet& set) : set_(set) {
    if (!set.is_box()) {
      if (!set.has_interior()) throw Error(ErrorCode::Infeasible, "polyhedron without interior certificate");
      qp_ = StrictQP(Mat::Identity(set.dim(), set.dim()), set.Aeq, set.A);
    }
  }
  Vec operator()(const Vec& v) const {
    if (set_.is_box()) return v.cwiseMax(set_.lower).cwiseMin(set_.upper);
    return qp_.solve(-2.0 * v, set_.beq, set_.b, 1e-12).x;
  }

 private:
  FeasibleSet set_;
  StrictQP qp_;
};

// Componentwise bounds of a set (LPs for polyhedra); infinite when unbounded.
inline std::pair<Vec, Vec> bounding_box(const FeasibleSet& set) {
  if (set.is_box()) return {set.lower, set.upper};
  const Index n = set.dim();
  Vec lo(n), hi(n);
  const Mat Z = Mat::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    for (int sgn : {1, -1}) {
      Vec c = Vec::Zero(n);
      c(j) = sgn;
      double v;
      try {
        QPSolution s = solve_qp_ipm(Z, c, set.Aeq, set.beq, set.A, set.b, 1e-9,
                                    set.has_interior() ? set.interior : Vec());
        v = s.status == QPStatus::Optimal ? s.x(j) : (sgn > 0 ? -kInf : kInf);
      } catch (const Error&) {
        v = sgn > 0 ? -kInf : kInf;
      }
      if (sgn > 0) lo(j) = v;
      else hi(j) = v;
    }
  }
  return {lo, hi};
}

inline bool is_bounded(const FeasibleSet& set) {
  auto [lo, hi] = bounding_box(set);
  return lo.allFinite() && hi.allFinite();
}

enum class ProxKind { Quadratic, LogBarrier };

inline const char* to_string(ProxKind k) { return k == ProxKind::Quadratic ? "quadratic" : "barrier"; }

// sup over the set of P(x): 0.5||x - c||^2 bounded through the bounding box
inline double prox_diameter(const FeasibleSet& set, const Vec& center) {
  auto [lo, hi] = bounding_box(set);
  double s = 0.0;
  for (Index j = 0; j < center.size(); ++j) {
    const double a = std::max(hi(j) - center(j), center(j) - lo(j));
    s += a * a;
  }
  return 0.5 * s;
}

struct BarrierSolution {
  Vec x;
  Mat K;  // Hessian of f + mu * barrier at x
  int newton_steps = 0;
  double decrement = 0.0;
};

// min f(x) + shift^T x + mu * B(x) over the set interior, B the log barrier
class BarrierSolver {
 public:
  BarrierSolver() = default;
  BarrierSolver(const QuadCost& cost, const FeasibleSet& set) : cost_(cost), set_(set) {
    set.inequalities(C_, d_);
    if (!set.has_interior() || !set.strictly_contains(set.interior))
      throw Error(ErrorCode::InvalidArgument, "log barrier needs a strictly interior point");
  }

  const FeasibleSet& set() const { return set_; }

  double barrier(const Vec& x) const {
    const Vec s = d_ - C_ * x;
    if (s.size() && s.minCoeff() <= 0.0) return kInf;
    return -s.array().log().sum();
  }

  BarrierSolution solve(const Vec& shift, double mu, const Vec& start, double tol = 1e-10, int max_iter = 200) const {
    require(mu > 0.0, ErrorCode::InvalidArgument, "log barrier needs mu > 0");
    const Index n = cost_.dim(), me = set_.n_eq(), mi = C_.rows();
    Vec x = start.size() == n && set_.strictly_contains(start) ? start : set_.interior;
    const Vec lin = cost_.q + shift;
    auto phi = [&](const Vec& y) {
      const Vec s = d_ - C_ * y;
      if (mi && s.minCoeff() <= 0.0) return kInf;
      return y.dot(cost_.H * y) + lin.dot(y) - mu * (mi ? s.array().log().sum() : 0.0);
    };
    BarrierSolution out;
    Mat K;
    int it = 0;
    double dec2 = kInf;
    for (; it < max_iter; ++it) {
      const Vec s = d_ - C_ * x;
      if (mi && s.minCoeff() <= 0.0) throw Error(ErrorCode::LostInteriority, "barrier iterate left the interior");
      const Vec inv = mi ? Vec(s.cwiseInverse()) : Vec();
      Vec grad = 2.0 * (cost_.H * x) + lin;
      if (mi) grad.noalias() += mu * (C_.transpose() * inv);
      K = 2.0 * cost_.H;
      if (mi) K.noalias() += mu * (C_.transpose() * inv.cwiseAbs2().asDiagonal() * C_);
      Vec dx;
      if (me == 0) {
        Eigen::LDLT<Mat> ldlt(K);
        dx = -ldlt.solve(grad);
      } else {
        Mat KK = Mat::Zero(n + me, n + me);
        KK.topLeftCorner(n, n) = K;
        KK.topRightCorner(n, me) = set_.Aeq.transpose();
        KK.bottomLeftCorner(me, n) = set_.Aeq;
        Vec rhs = Vec::Zero(n + me);
        rhs.head(n) = -grad;
        rhs.tail(me) = set_.beq - set_.Aeq * x;
        dx = Eigen::PartialPivLU<Mat>(KK).solve(rhs).head(n);
      }
      dec2 = std::max(0.0, -grad.dot(dx));
      if (dec2 <= tol * tol) break;
      double a = 1.0;
      if (mi) {
        const Vec cd = C_ * dx;
        for (Index r = 0; r < mi; ++r)
          if (cd(r) > 0.0) a = std::min(a, 0.99 * s(r) / cd(r));
      }
      if (dec2 > 1e-12) {
        const double f0 = phi(x);
        while (a > 1e-16 && !(phi(x + a * dx) <= f0 - 1e-4 * a * dec2)) a *= 0.5;
      }
      x += a * dx;
    }
    {
      const Vec s = d_ - C_ * x;
      const Vec inv = mi ? Vec(s.cwiseInverse()) : Vec();
      K = 2.0 * cost_.H;
      if (mi) K.noalias() += mu * (C_.transpose() * inv.cwiseAbs2().asDiagonal() * C_);
    }
    out.x = x;
    out.K = K;
    out.newton_steps = it;
    out.decrement = std::sqrt(dec2);
    return out;
  }

 private:
  QuadCost cost_;
  FeasibleSet set_;
  Mat C_;
  Vec d_;
};

// Minimizer of f + shift^T x + mu P(x) over the set, P = 0.5||x - center||^2 for
// the quadratic prox. Factorizations are cached for a fixed mu.
class SmoothedSolver {
 public:
  SmoothedSolver() = default;
  SmoothedSolver(const QuadCost& cost, const FeasibleSet& set, double mu, ProxKind kind, const Vec& center = Vec())
      : cost_(cost), set_(set), mu_(mu), kind_(kind) {
    require(mu >= 0.0, ErrorCode::InvalidArgument, "mu must be nonnegative");
    require_dim(set.dim(), cost.dim(), "smoothed solve set");
    if (kind == ProxKind::LogBarrier) {
      require(mu > 0.0, ErrorCode::InvalidArgument, "log barrier needs mu > 0");
      barrier_ = BarrierSolver(cost, set);
      return;
    }
    center_ = center.size() ? center : set.interior;
    if (mu > 0.0) require_dim(center_.size(), cost.dim(), "prox center");
    Mat Hs = cost.H;
    if (mu > 0.0) Hs.diagonal().array() += 0.5 * mu;
    detail::merged_constraints(set, std::nullopt, Aeq_, beq_, C_, d_);
    if (detail::is_pd(Hs)) {
      strict_ = true;
      qp_ = StrictQP(Hs, Aeq_, C_);
    } else {
      if (!is_bounded(set)) throw Error(ErrorCode::NotStronglyConvex, "mu = 0 with PSD cost over an unbounded set");
      Hs_ = Hs;
    }
  }

  double mu() const { return mu_; }
  ProxKind kind() const { return kind_; }
  const Vec& center() const { return center_; }

  Vec solve(const Vec& shift, double tol = 1e-10, const Vec& warm = Vec()) const {
    if (kind_ == ProxKind::LogBarrier) return barrier_.solve(shift, mu_, warm, tol).x;
    Vec lin = cost_.q + shift;
    if (mu_ > 0.0) lin -= mu_ * center_;
    if (strict_) return qp_.solve(lin, beq_, d_, tol).x;
    return solve_qp_ipm(Hs_, lin, Aeq_, beq_, C_, d_, tol, set_.interior).x;
  }

  BarrierSolution solve_barrier(const Vec& shift, const Vec& warm, double tol = 1e-10) const {
    return barrier_.solve(shift, mu_, warm, tol);
  }

  double prox(const Vec& x) const {
    if (kind_ == ProxKind::LogBarrier) return barrier_.barrier(x);
    return 0.5 * (x - center_).squaredNorm();
  }

 private:
  QuadCost cost_;
  FeasibleSet set_;
  double mu_ = 0.0;
  ProxKind kind_ = ProxKind::Quadratic;
  Vec center_;
  bool strict_ = false;
  StrictQP qp_;
  Mat Hs_, Aeq_, C_;
  Vec beq_, d_;
  BarrierSolver barrier_;
};

inline Vec solve_smoothed(const QuadCost& cost, const FeasibleSet& set, const Vec& shift, double mu, ProxKind kind,
                          double tol = 1e-10, const Vec& center = Vec()) {
  return SmoothedSolver(cost, set, mu, kind, center).solve(shift, tol);
}

inline Vec finite_diff_gradient(const std::function<double(const Vec&)>& fn, const Vec& v, double h = 1e-6) {
  require(h > 0.0, ErrorCode::InvalidArgument, "finite difference step must be positive");
  Vec g(v.size());
  Vec w = v;
  for (Index j = 0; j < v.size(); ++j) {
    const double o = w(j);
    w(j) = o + h;
    const double fp = fn(w);
    w(j) = o - h;
    const double fm = fn(w);
    w(j) = o;
    g(j) = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline Mat finite_diff_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& v, double h = 1e-6) {
  require(h > 0.0, ErrorCode::InvalidArgument, "finite difference step must be positive");
  Vec w = v;
  const Vec f0 = fn(v);
  Mat Jm(f0.size(), v.size());
  for (Index j = 0; j < v.size(); ++j) {
    const double o = w(j);
    w(j) = o + h;
    const Vec fp = fn(w);
    w(j) = o - h;
    const Vec fm = fn(w);
    w(j) = o;
    Jm.col(j) = (fp - fm) / (2.0 * h);
  }
  return Jm;
}

}  // namespace netopt
