#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace netopt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class ErrorCode {
  DimensionMismatch,
  InvalidArgument,
  Infeasible,
  Unbounded,
  NotStronglyConvex,
  SubproblemInfeasible,
  NonStrictBlock,
  InvalidWeights,
  InvalidColoring,
  Incompatible,
  LostInteriority,
  ScheduleExhausted,
  Parse,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::NotStronglyConvex: return "NotStronglyConvex";
    case ErrorCode::SubproblemInfeasible: return "SubproblemInfeasible";
    case ErrorCode::NonStrictBlock: return "NonStrictBlock";
    case ErrorCode::InvalidWeights: return "InvalidWeights";
    case ErrorCode::InvalidColoring: return "InvalidColoring";
    case ErrorCode::Incompatible: return "Incompatible";
    case ErrorCode::LostInteriority: return "LostInteriority";
    case ErrorCode::ScheduleExhausted: return "ScheduleExhausted";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, int agent = -1)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), agent_(agent) {}
  ErrorCode code() const { return code_; }
  // agent index for per-agent failures, -1 otherwise
  int agent() const { return agent_; }

 private:
  ErrorCode code_;
  int agent_;
};

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

inline void require_dim(Index got, Index want, const std::string& what) {
  if (got != want)
    throw Error(ErrorCode::DimensionMismatch,
                what + " (got " + std::to_string(got) + ", expected " + std::to_string(want) + ")");
}

inline double sym_error(const Mat& H) {
  if (H.size() == 0) return 0.0;
  return (H - H.transpose()).cwiseAbs().maxCoeff();
}

inline double min_eig(const Mat& H) {
  if (H.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double max_eig(const Mat& H) {
  if (H.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(H.rows() - 1);
}

inline double spectral_norm(const Mat& A) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(A);
  return svd.singularValues()(0);
}

inline double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// stacked view helpers
inline Vec stack(const std::vector<Vec>& parts) {
  Index n = 0;
  for (const auto& p : parts) n += p.size();
  Vec out(n);
  Index o = 0;
  for (const auto& p : parts) {
    out.segment(o, p.size()) = p;
    o += p.size();
  }
  return out;
}

inline std::vector<Vec> unstack(const Vec& v, const std::vector<Index>& dims) {
  std::vector<Vec> out;
  Index o = 0;
  for (Index d : dims) {
    require(o + d <= v.size(), ErrorCode::DimensionMismatch, "unstack: vector too short");
    out.push_back(v.segment(o, d));
    o += d;
  }
  require_dim(o, v.size(), "unstack");
  return out;
}

}  // namespace netopt
