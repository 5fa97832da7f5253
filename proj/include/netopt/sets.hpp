#pragma once

#include "netopt/core.hpp"

#include <optional>

namespace netopt {

// Box {l <= x <= u} or polyhedron {A x <= b, Aeq x = beq}. Polyhedra carry a
// strictly interior point; without it they are treated as uncertified.
struct FeasibleSet {
  enum class Kind { Box, Polyhedron };

  Kind kind = Kind::Box;
  Vec lower, upper;
  Mat A;
  Vec b;
  Mat Aeq;
  Vec beq;
  Vec interior;

  static FeasibleSet box(Vec l, Vec u, std::optional<Vec> inner = std::nullopt) {
    require_dim(u.size(), l.size(), "box bounds");
    for (Index j = 0; j < l.size(); ++j)
      require(l(j) <= u(j), ErrorCode::InvalidArgument, "box lower > upper at " + std::to_string(j));
    FeasibleSet s;
    s.kind = Kind::Box;
    s.lower = std::move(l);
    s.upper = std::move(u);
    if (inner) {
      require_dim(inner->size(), s.lower.size(), "box interior point");
      s.interior = *inner;
    } else {
      s.interior = s.default_box_interior();
    }
    return s;
  }

  static FeasibleSet uniform_box(Index n, double lo, double hi) {
    return box(Vec::Constant(n, lo), Vec::Constant(n, hi));
  }

  static FeasibleSet free(Index n) { return uniform_box(n, -kInf, kInf); }

  static FeasibleSet polyhedron(Mat A, Vec b, Vec inner, Mat Aeq = Mat(), Vec beq = Vec()) {
    require_dim(b.size(), A.rows(), "polyhedron rhs");
    FeasibleSet s;
    s.kind = Kind::Polyhedron;
    const Index n = A.cols() > 0 ? A.cols() : Aeq.cols();
    if (Aeq.size() == 0) {
      Aeq.resize(0, n);
      beq.resize(0);
    }
    require_dim(Aeq.cols(), n, "polyhedron equality columns");
    require_dim(beq.size(), Aeq.rows(), "polyhedron equality rhs");
    s.A = std::move(A);
    s.b = std::move(b);
    s.Aeq = std::move(Aeq);
    s.beq = std::move(beq);
    if (inner.size() > 0) require_dim(inner.size(), n, "polyhedron interior point");
    s.interior = std::move(inner);
    return s;
  }

  bool is_box() const { return kind == Kind::Box; }

  Index dim() const { return is_box() ? lower.size() : std::max(A.cols(), Aeq.cols()); }

  bool has_interior() const { return interior.size() == dim(); }

  Index n_eq() const { return is_box() ? 0 : Aeq.rows(); }

  bool contains(const Vec& x, double tol = 1e-9) const {
    if (x.size() != dim()) return false;
    if (is_box()) {
      for (Index j = 0; j < x.size(); ++j)
        if (x(j) < lower(j) - tol || x(j) > upper(j) + tol) return false;
      return true;
    }
    if (A.rows() && ((A * x - b).maxCoeff() > tol)) return false;
    if (Aeq.rows() && inf_norm(Aeq * x - beq) > tol) return false;
    return true;
  }

  // minimum inequality slack; positive means strictly interior
  double min_slack(const Vec& x) const {
    double m = kInf;
    if (is_box()) {
      for (Index j = 0; j < x.size(); ++j) {
        if (std::isfinite(upper(j))) m = std::min(m, upper(j) - x(j));
        if (std::isfinite(lower(j))) m = std::min(m, x(j) - lower(j));
      }
    } else if (A.rows()) {
      m = (b - A * x).minCoeff();
    }
    return m;
  }

  bool strictly_contains(const Vec& x, double eq_tol = 1e-8) const {
    if (x.size() != dim()) return false;
    if (!(min_slack(x) > 0)) return false;
    if (!is_box() && Aeq.rows() && inf_norm(Aeq * x - beq) > eq_tol) return false;
    return true;
  }

  // all inequalities as C x <= d (finite box bounds only)
  void inequalities(Mat& C, Vec& d) const {
    if (!is_box()) {
      C = A;
      d = b;
      return;
    }
    const Index n = dim();
    Index rows = 0;
    for (Index j = 0; j < n; ++j) rows += std::isfinite(upper(j)) + std::isfinite(lower(j));
    C = Mat::Zero(rows, n);
    d.resize(rows);
    Index r = 0;
    for (Index j = 0; j < n; ++j) {
      if (std::isfinite(upper(j))) {
        C(r, j) = 1.0;
        d(r++) = upper(j);
      }
      if (std::isfinite(lower(j))) {
        C(r, j) = -1.0;
        d(r++) = -lower(j);
      }
    }
  }

  Index n_ineq() const {
    if (!is_box()) return A.rows();
    Index rows = 0;
    for (Index j = 0; j < dim(); ++j) rows += std::isfinite(upper(j)) + std::isfinite(lower(j));
    return rows;
  }

  bool box_bounded() const {
    return is_box() && lower.allFinite() && upper.allFinite();
  }

 private:
  Vec default_box_interior() const {
    Vec c(lower.size());
    for (Index j = 0; j < c.size(); ++j) {
      const bool lf = std::isfinite(lower(j)), uf = std::isfinite(upper(j));
      if (lf && uf) c(j) = 0.5 * (lower(j) + upper(j));
      else if (lf) c(j) = lower(j) + 1.0;
      else if (uf) c(j) = upper(j) - 1.0;
      else c(j) = 0.0;
    }
    return c;
  }
};

}  // namespace netopt
