#pragma once

#include "netopt/core.hpp"
#include "netopt/network.hpp"
#include "netopt/problem.hpp"
#include "netopt/rng.hpp"

#include <Eigen/Eigenvalues>

#include <map>
#include <optional>

namespace netopt {

inline double spectral_radius(const Mat& A) {
  if (A.rows() == 0) return 0.0;
  Eigen::EigenSolver<Mat> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline Mat scale_to_radius(const Mat& A, double rho) {
  const double r = spectral_radius(A);
  return r > 0.0 ? Mat(A * (rho / r)) : A;
}

// matrix exponential, Pade 13 with scaling and squaring
inline Mat expm(const Mat& A) {
  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  const Index n = A.rows();
  const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > 5.371920351148152) s = static_cast<int>(std::ceil(std::log2(norm1 / 5.371920351148152)));
  const Mat X = A / std::ldexp(1.0, s);
  const Mat I = Mat::Identity(n, n);
  const Mat X2 = X * X, X4 = X2 * X2, X6 = X4 * X2;
  const Mat U = X * (X6 * (b[13] * X6 + b[11] * X4 + b[9] * X2) + b[7] * X6 + b[5] * X4 + b[3] * X2 + b[1] * I);
  const Mat V = X6 * (b[12] * X6 + b[10] * X4 + b[8] * X2) + b[6] * X6 + b[4] * X4 + b[2] * X2 + b[0] * I;
  Mat R = (V - U).partialPivLu().solve(V + U);
  for (int k = 0; k < s; ++k) R = R * R;
  return R;
}

// steady-state prior covariance of the Kalman filter (discrete algebraic Riccati
// equation) by fixed-point iteration of the Riccati difference equation
inline Mat dare_prior(const Mat& A, const Mat& C, const Mat& Q, const Mat& R, int max_iter = 100000) {
  Mat P = Q;
  for (int k = 0; k < max_iter; ++k) {
    const Mat S = C * P * C.transpose() + R;
    const Mat K = A * P * C.transpose() * S.inverse();
    Mat Pn = A * P * A.transpose() + Q - K * C * P * A.transpose();
    Pn = 0.5 * (Pn + Pn.transpose());
    const double diff = (Pn - P).cwiseAbs().maxCoeff();
    P = Pn;
    if (diff <= 1e-14 * std::max(1.0, P.cwiseAbs().maxCoeff())) break;
  }
  return P;
}

struct LinearPlant {
  Index n = 0, m = 0, p = 0;
  Mat A, B, E;
  std::vector<Mat> C;                      // sensor matrices C_i
  std::vector<Mat> Ai, Bi, Ei;             // per-agent subsystems
  std::map<std::pair<Index, Index>, Mat> A_nb, B_nb;
  Mat Q;                                   // process noise covariance / state weight
  std::vector<Mat> R;                      // measurement covariances / input weights
  Mat Pi;                                  // arrival-cost covariance

  void validate() const {
    auto pd = [](const Mat& X) { return X.rows() > 0 && min_eig(0.5 * (X + X.transpose())) > 0.0; };
    require(A.rows() == n && A.cols() == n, ErrorCode::DimensionMismatch, "plant A");
    require(pd(Q), ErrorCode::InvalidArgument, "plant Q not positive definite");
    for (const auto& r : R) require(pd(r), ErrorCode::InvalidArgument, "plant R_i not positive definite");
    if (Pi.size()) require(pd(Pi), ErrorCode::InvalidArgument, "plant Pi not positive definite");
    for (size_t i = 0; i < C.size(); ++i)
      require(C[i].cols() == n && C[i].rows() == R[i].rows(), ErrorCode::DimensionMismatch, "plant C_i");
  }
};

// ---------------------------------------------------------------- estimation

struct MheData {
  std::vector<Vec> x;               // true states x_0..x_N
  std::vector<Vec> w;               // true process noise w_0..w_{N-1}
  std::vector<std::vector<Vec>> y;  // y[i][t]
  Vec x_prior;
};

struct MheConfig {
  Index M = 10, N = 10, n = 5, p = 1;
  double q_var = 0.01, r_var = 0.1;
  double x_bound = 10.0, w_bound = 5.0;
  double noise_scale = 1.0;
  std::optional<std::uint64_t> seed;
};

inline LinearPlant random_mhe_plant(Index n, Index p, Index M, double q_var, double r_var, Rng& rng) {
  LinearPlant pl;
  pl.n = n;
  pl.p = p;
  pl.A = scale_to_radius(rng.uniform_matrix(n, n), 0.95);
  for (Index i = 0; i < M; ++i) pl.C.push_back(rng.uniform_matrix(p, n));
  pl.Q = q_var * Mat::Identity(n, n);
  for (Index i = 0; i < M; ++i) pl.R.push_back(r_var * Mat::Identity(p, p));
  Mat Cs(p * M, n), Rs = Mat::Zero(p * M, p * M);
  for (Index i = 0; i < M; ++i) {
    Cs.middleRows(i * p, p) = pl.C[i];
    Rs.block(i * p, i * p, p, p) = pl.R[i];
  }
  pl.Pi = dare_prior(pl.A, Cs, pl.Q, Rs);
  return pl;
}

inline MheData simulate_mhe(const LinearPlant& pl, Index N, Rng& rng, double noise_scale = 1.0) {
  const Index n = pl.n, M = static_cast<Index>(pl.C.size());
  MheData d;
  const Vec x0 = rng.normal_vector(n);
  const Mat Lp = Eigen::LLT<Mat>(pl.Pi).matrixL();
  d.x_prior = x0 + noise_scale * (Lp * rng.normal_vector(n));
  const Mat Lq = Eigen::LLT<Mat>(pl.Q).matrixL();
  d.x.push_back(x0);
  for (Index t = 0; t < N; ++t) {
    d.w.push_back(noise_scale * (Lq * rng.normal_vector(n)));
    d.x.push_back(pl.A * d.x.back() + d.w.back());
  }
  d.y.assign(static_cast<size_t>(M), {});
  for (Index t = 0; t <= N; ++t)
    for (Index i = 0; i < M; ++i) {
      const Mat Lr = Eigen::LLT<Mat>(pl.R[i]).matrixL();
      d.y[i].push_back(pl.C[i] * d.x[t] + noise_scale * (Lr * rng.normal_vector(pl.C[i].rows())));
    }
  return d;
}

// x_t = Phi_t xbar with xbar = [x_0; w_0; ...; w_{N-1}]
inline std::vector<Mat> mhe_state_maps(const Mat& A, Index N) {
  const Index n = A.rows(), d = n * (N + 1);
  std::vector<Mat> Phi;
  Mat cur = Mat::Zero(n, d);
  cur.leftCols(n) = Mat::Identity(n, n);
  Phi.push_back(cur);
  for (Index t = 0; t < N; ++t) {
    Mat nxt = A * cur;
    nxt.middleCols(n * (t + 1), n) += Mat::Identity(n, n);
    Phi.push_back(nxt);
    cur = nxt;
  }
  return Phi;
}

inline ProblemDCx gen_mhe_dcx(const LinearPlant& pl, Index N, const MheData& data, double x_bound = 10.0,
                              double w_bound = 5.0) {
  require(N >= 1, ErrorCode::InvalidArgument, "MHE horizon N must be >= 1");
  pl.validate();
  const Index n = pl.n, M = static_cast<Index>(pl.C.size()), d = n * (N + 1);
  require_dim(static_cast<Index>(data.y.size()), M, "MHE measurements");
  const auto Phi = mhe_state_maps(pl.A, N);
  const Mat Pinv = pl.Pi.inverse(), Qinv = pl.Q.inverse();
  Mat W = Mat::Zero(d, d);
  W.topLeftCorner(n, n) = Pinv;
  for (Index t = 0; t < N; ++t) W.block(n * (t + 1), n * (t + 1), n, n) = Qinv;
  Vec e = Vec::Zero(d);
  e.head(n) = data.x_prior;
  ProblemDCx prob;
  for (Index i = 0; i < M; ++i) {
    const Mat Rinv = pl.R[i].inverse();
    Mat H = Mat::Zero(d, d);
    Vec q = Vec::Zero(d);
    double c = 0.0;
    for (Index t = 0; t <= N; ++t) {
      const Mat CP = pl.C[i] * Phi[t];
      const Vec& y = data.y[i][t];
      H.noalias() += CP.transpose() * Rinv * CP;
      q.noalias() -= 2.0 * CP.transpose() * (Rinv * y);
      c += y.dot(Rinv * y);
    }
    const double share = 1.0 / static_cast<double>(M);
    H += share * W;
    q -= 2.0 * share * (W * e);
    c += share * e.dot(W * e);
    H = 0.5 * (H + H.transpose());
    prob.costs.emplace_back(H, q, c);
  }
  Vec lo(d), hi(d);
  lo.head(n).setConstant(-x_bound);
  hi.head(n).setConstant(x_bound);
  lo.tail(d - n).setConstant(-w_bound);
  hi.tail(d - n).setConstant(w_bound);
  prob.common_set = FeasibleSet::box(lo, hi);
  prob.strict = true;
  return prob;
}

inline ProblemDCx gen_mhe_dcx(const MheConfig& cfg) {
  if (!cfg.seed) throw Error(ErrorCode::InvalidArgument, "generators require an explicit seed");
  Rng rng(*cfg.seed);
  const LinearPlant pl = random_mhe_plant(cfg.n, cfg.p, cfg.M, cfg.q_var, cfg.r_var, rng);
  const MheData data = simulate_mhe(pl, cfg.N, rng, cfg.noise_scale);
  return gen_mhe_dcx(pl, cfg.N, data, cfg.x_bound, cfg.w_bound);
}

// ------------------------------------------------------------------- control

enum class Topology { Chain, Ring };

inline std::vector<Index> topology_neighbors(Topology topo, Index M, Index i) {
  std::vector<Index> nb;
  if (topo == Topology::Chain) {
    if (i > 0) nb.push_back(i - 1);
    if (i + 1 < M) nb.push_back(i + 1);
  } else {
    if (M >= 2) nb.push_back((i + M - 1) % M);
    if (M >= 3) nb.push_back((i + 1) % M);
    std::sort(nb.begin(), nb.end());
  }
  return nb;
}

struct ControlConfig {
  Index M = 10, N = 10, n = 5, m = 3, p = 2;
  Topology topology = Topology::Chain;
  double coupling_scale = 0.1;
  double u_bound = 1.0, w_bound = 5.0, x_bound = 10.0;
  double x0_scale = 1.0;
  double terminal_weight = 1.0;
  std::optional<std::uint64_t> seed;
};

struct ControlInstance {
  ProblemDCCC problem;
  LinearPlant plant;
  std::vector<Vec> x0;
  std::vector<std::vector<Mat>> Phi;  // x^i_t = Phi[i][t] xbar^i + a[i][t]
  std::vector<std::vector<Vec>> a;
  std::vector<std::vector<Index>> neighbors;
};

inline ControlInstance build_control_instance(const ControlConfig& cfg) {
  if (!cfg.seed) throw Error(ErrorCode::InvalidArgument, "generators require an explicit seed");
  const Index M = cfg.M, N = cfg.N, n = cfg.n, m = cfg.m, p = cfg.p;
  require(N >= 1 && M >= 1, ErrorCode::InvalidArgument, "control generator needs M, N >= 1");
  require(p <= n, ErrorCode::InvalidArgument, "control generator needs p <= n");
  Rng rng(*cfg.seed);
  ControlInstance ci;
  LinearPlant& pl = ci.plant;
  pl.n = n;
  pl.m = m;
  pl.p = p;
  for (Index i = 0; i < M; ++i) {
    pl.Ai.push_back(scale_to_radius(rng.uniform_matrix(n, n), 0.95));
    pl.Bi.push_back(rng.uniform_matrix(n, m));
    pl.Ei.push_back(rng.uniform_matrix(n, p));
  }
  for (Index i = 0; i < M; ++i) {
    ci.neighbors.push_back(topology_neighbors(cfg.topology, M, i));
    require(!ci.neighbors.back().empty(), ErrorCode::InvalidArgument,
            "topology leaves agent " + std::to_string(i) + " with isolated coupling rows");
  }
  for (Index i = 0; i < M; ++i)
    for (Index j : ci.neighbors[i]) {
      pl.A_nb[{i, j}] = cfg.coupling_scale * rng.uniform_matrix(p, n);
      pl.B_nb[{i, j}] = cfg.coupling_scale * rng.uniform_matrix(p, m);
    }
  for (Index i = 0; i < M; ++i) ci.x0.push_back(rng.uniform_vector(n, -cfg.x0_scale, cfg.x0_scale));
  pl.A = pl.Ai[0];
  pl.Q = Mat::Identity(n, n);
  for (Index i = 0; i < M; ++i) pl.R.push_back(Mat::Identity(m, m));

  const Index d = N * (p + m);
  for (Index i = 0; i < M; ++i) {
    std::vector<Mat> Ph{Mat::Zero(n, d)};
    std::vector<Vec> av{ci.x0[i]};
    for (Index t = 0; t < N; ++t) {
      Mat nxt = pl.Ai[i] * Ph.back();
      nxt.middleCols(t * p, p) += pl.Ei[i];
      nxt.middleCols(N * p + t * m, m) += pl.Bi[i];
      Ph.push_back(nxt);
      av.push_back(pl.Ai[i] * av.back());
    }
    ci.Phi.push_back(Ph);
    ci.a.push_back(av);
  }

  ProblemDCCC& prob = ci.problem;
  for (Index i = 0; i < M; ++i) {
    Mat H = Mat::Zero(d, d);
    Vec q = Vec::Zero(d);
    double c = 0.0;
    for (Index t = 0; t <= N; ++t) {
      const double wt = t < N ? 1.0 : cfg.terminal_weight;
      if (wt == 0.0) continue;
      const Mat& P = ci.Phi[i][t];
      const Vec& av = ci.a[i][t];
      H.noalias() += wt * P.transpose() * pl.Q * P;
      q.noalias() += 2.0 * wt * P.transpose() * (pl.Q * av);
      c += wt * av.dot(pl.Q * av);
    }
    H.bottomRightCorner(N * m, N * m).diagonal().array() += 1.0;
    H = 0.5 * (H + H.transpose());
    prob.costs.emplace_back(H, q, c);
  }

  const Index nl = N * p * M;
  prob.G.assign(static_cast<size_t>(M), Mat::Zero(nl, d));
  prob.g = Vec::Zero(nl);
  for (Index i = 0; i < M; ++i) {
    for (Index t = 0; t < N; ++t) {
      const Index r = (i * N + t) * p;
      prob.G[i].block(r, t * p, p, p) += Mat::Identity(p, p);
      for (Index j : ci.neighbors[i]) {
        const Mat& Am = pl.A_nb.at({i, j});
        const Mat& Bm = pl.B_nb.at({i, j});
        prob.G[j].middleRows(r, p) -= Am * ci.Phi[j][t];
        prob.G[j].block(r, N * p + t * m, p, m) -= Bm;
        prob.g.segment(r, p) += Am * ci.a[j][t];
      }
    }
    RowBlock rb;
    rb.agent = i;
    rb.start = i * N * p;
    rb.count = N * p;
    rb.neighbors = ci.neighbors[i];
    rb.neighbors.push_back(i);
    std::sort(rb.neighbors.begin(), rb.neighbors.end());
    prob.row_blocks.push_back(rb);
  }

  // interior point: coupled simulation with zero inputs
  std::vector<Vec> xs = ci.x0;
  std::vector<Vec> inner(static_cast<size_t>(M), Vec::Zero(d));
  for (Index t = 0; t < N; ++t) {
    std::vector<Vec> ws(static_cast<size_t>(M));
    for (Index i = 0; i < M; ++i) {
      Vec w = Vec::Zero(p);
      for (Index j : ci.neighbors[i]) w += pl.A_nb.at({i, j}) * xs[j];
      ws[i] = w;
      inner[i].segment(t * p, p) = w;
    }
    for (Index i = 0; i < M; ++i) xs[i] = pl.Ai[i] * xs[i] + pl.Ei[i] * ws[i];
  }
  for (Index i = 0; i < M; ++i) {
    const Index rows = 2 * d + 2 * N * n;
    Mat Cm = Mat::Zero(rows, d);
    Vec bm(rows);
    Cm.topRows(d) = Mat::Identity(d, d);
    Cm.middleRows(d, d) = -Mat::Identity(d, d);
    bm.head(N * p).setConstant(cfg.w_bound);
    bm.segment(N * p, N * m).setConstant(cfg.u_bound);
    bm.segment(d, N * p).setConstant(cfg.w_bound);
    bm.segment(d + N * p, N * m).setConstant(cfg.u_bound);
    for (Index t = 1; t <= N; ++t) {
      const Index r = 2 * d + 2 * (t - 1) * n;
      Cm.middleRows(r, n) = ci.Phi[i][t];
      bm.segment(r, n) = Vec::Constant(n, cfg.x_bound) - ci.a[i][t];
      Cm.middleRows(r + n, n) = -ci.Phi[i][t];
      bm.segment(r + n, n) = Vec::Constant(n, cfg.x_bound) + ci.a[i][t];
    }
    prob.local_sets.push_back(FeasibleSet::polyhedron(Cm, bm, inner[i]));
    require(prob.local_sets.back().strictly_contains(inner[i]), ErrorCode::Infeasible,
            "control generator: zero-input trajectory violates bounds for agent " + std::to_string(i));
  }
  return ci;
}

inline ProblemDCCC gen_control_dccc(const ControlConfig& cfg) { return build_control_instance(cfg).problem; }

// ----------------------------------------------------------------- satellite

struct CWParams {
  double omega = 0.0011;
  double dt = 0.55;
  Index M = 10;
  double q_weight = 1.0;
  double r_weight = 1.0;
  double u_min = -20.0, u_max = 20.0;
  double input_gain = 1.15e-3;
  double pos_spread = 1.0, vel_spread = 0.01;
  std::uint64_t seed = 0;
  std::vector<Vec> initial;  // optional fixed initial states, overrides the seeded draw
};

// state (x1, x2, x3, dx1, dx2, dx3): radial, along-track, cross-track
inline std::pair<Mat, Mat> cw_continuous(double omega) {
  Mat A = Mat::Zero(6, 6);
  A.topRightCorner(3, 3) = Mat::Identity(3, 3);
  A(3, 0) = 3.0 * omega * omega;
  A(3, 4) = 2.0 * omega;
  A(4, 3) = -2.0 * omega;
  A(5, 2) = -omega * omega;
  Mat B = Mat::Zero(6, 3);
  B.bottomRows(3) = Mat::Identity(3, 3);
  return {A, B};
}

// exact zero-order hold
inline std::pair<Mat, Mat> cw_discrete(double omega, double dt, double input_gain = 1.0) {
  require(omega >= 0.0 && dt > 0.0, ErrorCode::InvalidArgument, "CW needs omega >= 0, dt > 0");
  auto [A, B] = cw_continuous(omega);
  Mat Mx = Mat::Zero(9, 9);
  Mx.topLeftCorner(6, 6) = A * dt;
  Mx.topRightCorner(6, 3) = input_gain * B * dt;
  const Mat E = expm(Mx);
  return {E.topLeftCorner(6, 6), E.topRightCorner(6, 3)};
}

struct SatelliteInstance {
  ProblemCCDC problem;
  Mat Ad, Bd;
  std::vector<Vec> x0;
};

inline SatelliteInstance build_satellite_instance(const CWParams& prm, Index N) {
  require(prm.M >= 3, ErrorCode::InvalidArgument, "satellite formation needs M >= 3");
  require(prm.omega > 0.0 && prm.dt > 0.0, ErrorCode::InvalidArgument, "CW needs omega > 0, dt > 0");
  require(prm.u_min < prm.u_max, ErrorCode::InvalidArgument, "u_min must be < u_max");
  require(N >= 1, ErrorCode::InvalidArgument, "horizon N must be >= 1");
  const Index M = prm.M, d = 3 * N;
  SatelliteInstance si;
  std::tie(si.Ad, si.Bd) = cw_discrete(prm.omega, prm.dt, prm.input_gain);
  Rng rng(prm.seed);
  for (Index i = 0; i < M; ++i) {
    Vec x(6);
    x.head(3) = rng.uniform_vector(3, -prm.pos_spread, prm.pos_spread);
    x.tail(3) = rng.uniform_vector(3, -prm.vel_spread, prm.vel_spread);
    si.x0.push_back(x);
  }
  if (!prm.initial.empty()) {
    require_dim(static_cast<Index>(prm.initial.size()), M, "satellite initial states");
    for (const auto& x : prm.initial) require_dim(x.size(), 6, "satellite initial state");
    si.x0 = prm.initial;
  }
  Mat C = Mat::Zero(3, 6);
  C.leftCols(3) = Mat::Identity(3, 3);
  // y_t = Psi_t u + C Ad^t x0 for t = 0..N-1
  std::vector<Mat> Psi;
  std::vector<Mat> CA;
  Mat Apow = Mat::Identity(6, 6);
  for (Index t = 0; t < N; ++t) {
    CA.push_back(C * Apow);
    Apow = si.Ad * Apow;
  }
  for (Index t = 0; t < N; ++t) {
    Mat P = Mat::Zero(3, d);
    for (Index s = 0; s < t; ++s) P.middleCols(3 * s, 3) = CA[t - 1 - s] * si.Bd;
    Psi.push_back(P);
  }
  const Mat Q = prm.q_weight * Mat::Identity(3, 3);
  Mat K = Mat::Zero(d, d);
  for (Index t = 0; t < N; ++t) K.noalias() += Psi[t].transpose() * Q * Psi[t];
  // D: ring second-difference operator, z^i = sum_j D_ij y^j
  Mat D = Mat::Zero(M, M);
  for (Index i = 0; i < M; ++i) {
    D(i, i) = 2.0;
    D(i, (i + 1) % M) -= 1.0;
    D(i, (i + M - 1) % M) -= 1.0;
  }
  const Mat DtD = D.transpose() * D;
  std::vector<std::vector<Vec>> z0(static_cast<size_t>(M));
  for (Index i = 0; i < M; ++i)
    for (Index t = 0; t < N; ++t) {
      Vec z = Vec::Zero(3);
      for (Index k = 0; k < M; ++k)
        if (D(i, k) != 0.0) z += D(i, k) * (CA[t] * si.x0[k]);
      z0[i].push_back(z);
    }
  ProblemCCDC& p = si.problem;
  p.blocks.assign(static_cast<size_t>(M), std::vector<Mat>(static_cast<size_t>(M)));
  for (Index j = 0; j < M; ++j)
    for (Index k = 0; k < M; ++k) {
      if (DtD(j, k) == 0.0) continue;
      Mat B = DtD(j, k) * K;
      if (j == k) B.diagonal().array() += prm.r_weight;
      p.blocks[j][k] = B;
    }
  p.constant = 0.0;
  for (Index j = 0; j < M; ++j) {
    Vec q = Vec::Zero(d);
    for (Index i = 0; i < M; ++i) {
      if (D(i, j) == 0.0) continue;
      for (Index t = 0; t < N; ++t) q.noalias() += 2.0 * D(i, j) * (Psi[t].transpose() * (Q * z0[i][t]));
    }
    p.linear.push_back(q);
    p.local_sets.push_back(FeasibleSet::box(Vec::Constant(d, prm.u_min), Vec::Constant(d, prm.u_max)));
  }
  for (Index i = 0; i < M; ++i)
    for (Index t = 0; t < N; ++t) p.constant += z0[i][t].dot(Q * z0[i][t]);
  return si;
}

inline ProblemCCDC gen_satellite_ccdc(const CWParams& prm, Index N) { return build_satellite_instance(prm, N).problem; }

// --------------------------------------------------------------- cooperative

struct CoopConfig {
  Index M = 4, N = 5, n = 4, m = 2;
  Topology topology = Topology::Chain;
  double coupling_scale = 0.1;
  double u_bound = 1.0;
  double x0_scale = 1.0;
  std::vector<double> alpha;  // empty: uniform 1/M
  std::optional<std::uint64_t> seed;
};

struct CoopInstance {
  ProblemCCDC problem;
  LinearPlant plant;
  std::vector<Vec> x0;
  std::vector<double> alpha;
  std::vector<std::vector<Index>> neighbors;
  // x^i_t = sum_j S[i][t][j] u^j + c[i][t], t = 0..N
  std::vector<std::vector<std::map<Index, Mat>>> S;
  std::vector<std::vector<Vec>> c;
};

inline CoopInstance build_coop_instance(const CoopConfig& cfg) {
  if (!cfg.seed) throw Error(ErrorCode::InvalidArgument, "generators require an explicit seed");
  const Index M = cfg.M, N = cfg.N, n = cfg.n, m = cfg.m, d = N * m;
  require(M >= 1 && N >= 1, ErrorCode::InvalidArgument, "coop generator needs M, N >= 1");
  CoopInstance ci;
  ci.alpha = cfg.alpha.empty() ? std::vector<double>(static_cast<size_t>(M), 1.0 / static_cast<double>(M)) : cfg.alpha;
  require_dim(static_cast<Index>(ci.alpha.size()), M, "coop weights");
  double sum = 0.0;
  for (double a : ci.alpha) {
    require(a > 0.0, ErrorCode::InvalidWeights, "coop weights must be positive");
    sum += a;
  }
  require(std::abs(sum - 1.0) <= 1e-12, ErrorCode::InvalidWeights, "coop weights must sum to 1");
  Rng rng(*cfg.seed);
  LinearPlant& pl = ci.plant;
  pl.n = n;
  pl.m = m;
  for (Index i = 0; i < M; ++i) {
    pl.Ai.push_back(scale_to_radius(rng.uniform_matrix(n, n), 0.95));
    pl.Bi.push_back(rng.uniform_matrix(n, m));
  }
  for (Index i = 0; i < M; ++i) {
    ci.neighbors.push_back(M > 1 ? topology_neighbors(cfg.topology, M, i) : std::vector<Index>{});
    for (Index j : ci.neighbors[i]) pl.B_nb[{i, j}] = cfg.coupling_scale * rng.uniform_matrix(n, m);
  }
  for (Index i = 0; i < M; ++i) ci.x0.push_back(rng.uniform_vector(n, -cfg.x0_scale, cfg.x0_scale));
  pl.Q = Mat::Identity(n, n);
  for (Index i = 0; i < M; ++i) pl.R.push_back(Mat::Identity(m, m));

  ci.S.assign(static_cast<size_t>(M), {});
  ci.c.assign(static_cast<size_t>(M), {});
  for (Index i = 0; i < M; ++i) {
    std::map<Index, Mat> cur;
    cur[i] = Mat::Zero(n, d);
    for (Index j : ci.neighbors[i]) cur[j] = Mat::Zero(n, d);
    Vec cv = ci.x0[i];
    ci.S[i].push_back(cur);
    ci.c[i].push_back(cv);
    for (Index t = 0; t < N; ++t) {
      std::map<Index, Mat> nxt;
      for (auto& [j, Sj] : cur) nxt[j] = pl.Ai[i] * Sj;
      nxt[i].middleCols(t * m, m) += pl.Bi[i];
      for (Index j : ci.neighbors[i]) nxt[j].middleCols(t * m, m) += pl.B_nb.at({i, j});
      cv = pl.Ai[i] * cv;
      ci.S[i].push_back(nxt);
      ci.c[i].push_back(cv);
      cur = nxt;
    }
  }

  ProblemCCDC& p = ci.problem;
  p.blocks.assign(static_cast<size_t>(M), std::vector<Mat>(static_cast<size_t>(M)));
  p.linear.assign(static_cast<size_t>(M), Vec::Zero(d));
  p.constant = 0.0;
  for (Index i = 0; i < M; ++i) {
    const double a = ci.alpha[static_cast<size_t>(i)];
    // stage t = 0..N-1 plus terminal t = N with weight Q
    for (Index t = 0; t <= N; ++t) {
      const auto& St = ci.S[i][t];
      const Vec& ct = ci.c[i][t];
      for (const auto& [j, Sj] : St)
        for (const auto& [k, Sk] : St) {
          Mat add = a * Sj.transpose() * pl.Q * Sk;
          if (p.blocks[j][k].size() == 0) p.blocks[j][k] = Mat::Zero(d, d);
          p.blocks[j][k] += add;
        }
      for (const auto& [j, Sj] : St) p.linear[j] += 2.0 * a * Sj.transpose() * (pl.Q * ct);
      p.constant += a * ct.dot(pl.Q * ct);
    }
    p.blocks[i][i].diagonal().array() += a;
  }
  for (Index j = 0; j < M; ++j)
    for (Index k = 0; k < M; ++k)
      if (p.blocks[j][k].size() && j < k) {
        const Mat avg = 0.5 * (p.blocks[j][k] + p.blocks[k][j].transpose());
        p.blocks[j][k] = avg;
        p.blocks[k][j] = avg.transpose();
      } else if (j == k) {
        p.blocks[j][j] = 0.5 * (p.blocks[j][j] + p.blocks[j][j].transpose());
      }
  for (Index i = 0; i < M; ++i)
    p.local_sets.push_back(FeasibleSet::box(Vec::Constant(d, -cfg.u_bound), Vec::Constant(d, cfg.u_bound)));
  return ci;
}

inline ProblemCCDC gen_coupled_cooperative(const CoopConfig& cfg) { return build_coop_instance(cfg).problem; }

// -------------------------------------------------------------------- random

struct RandomDcccConfig {
  Index M = 4, dim = 6, n_lambda = 2;
  double bound = 5.0;
  double curvature = 0.5;
  std::optional<std::uint64_t> seed;
};

// resource-allocation style instance: dense coupling rows, full row rank G_i,
// strictly convex costs and boxes, Slater point built in
inline ProblemDCCC gen_random_dccc(const RandomDcccConfig& cfg) {
  if (!cfg.seed) throw Error(ErrorCode::InvalidArgument, "generators require an explicit seed");
  Rng rng(*cfg.seed);
  ProblemDCCC p;
  const Index d = cfg.dim, M = cfg.M;
  Vec g = Vec::Zero(cfg.n_lambda);
  for (Index i = 0; i < M; ++i) {
    const Mat B = rng.uniform_matrix(d, d);
    Mat H = B * B.transpose() / static_cast<double>(d);
    H.diagonal().array() += cfg.curvature;
    H = 0.5 * (H + H.transpose());
    p.costs.emplace_back(H, rng.uniform_vector(d, -2.0, 2.0), 0.0);
    const Mat G = rng.uniform_matrix(cfg.n_lambda, d);
    const Vec xc = rng.uniform_vector(d, -0.5 * cfg.bound, 0.5 * cfg.bound);
    g += G * xc;
    p.G.push_back(G);
    p.local_sets.push_back(FeasibleSet::box(Vec::Constant(d, -cfg.bound), Vec::Constant(d, cfg.bound), xc));
  }
  p.g = g;
  const Index owners = std::min(M, cfg.n_lambda);
  Index start = 0;
  for (Index a = 0; a < owners; ++a) {
    RowBlock rb;
    rb.agent = a;
    rb.start = start;
    rb.count = cfg.n_lambda / owners + (a < cfg.n_lambda % owners ? 1 : 0);
    rb.neighbors = p.touching(rb.start, rb.count);
    start += rb.count;
    p.row_blocks.push_back(rb);
  }
  return p;
}

}  // namespace netopt
