#pragma once

#include "netopt/core.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace netopt {

enum class RunStatus { Converged, MaxIter, Failed };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "Converged";
    case RunStatus::MaxIter: return "MaxIter";
    case RunStatus::Failed: return "Failed";
  }
  return "?";
}

struct TraceRow {
  Index iter = 0;
  double objective = kNaN;
  double residual = kNaN;    // coupling residual or consensus disagreement
  double distance = kNaN;    // to the oracle solution
  double dual_value = kNaN;
  std::uint64_t messages = 0;
  double wall_time = kNaN;   // seconds since start; only written on request

  bool operator==(const TraceRow& o) const {
    auto eq = [](double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; };
    return iter == o.iter && eq(objective, o.objective) && eq(residual, o.residual) && eq(distance, o.distance) &&
           eq(dual_value, o.dual_value) && messages == o.messages && eq(wall_time, o.wall_time);
  }
};

struct RunTrace {
  std::vector<TraceRow> rows;
  RunStatus status = RunStatus::MaxIter;
  Index iterations_to_eps = -1;

  void push(const TraceRow& r) {
    if (!rows.empty()) {
      require(r.iter > rows.back().iter, ErrorCode::InvalidArgument, "trace rows must increase in iter");
      require(r.messages >= rows.back().messages, ErrorCode::InvalidArgument, "trace messages must not decrease");
    }
    rows.push_back(r);
  }
};

inline constexpr const char* kTraceHeader = "iter,objective,residual,distance,dual_value,messages";

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return kNaN;
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw Error(ErrorCode::Parse, "bad number in trace: " + s);
  return v;
}

}  // namespace detail

inline std::string trace_csv(const RunTrace& t, bool timing = false) {
  std::string out = kTraceHeader;
  if (timing) out += ",wall_time";
  out += '\n';
  for (const auto& r : t.rows) {
    out += std::to_string(r.iter);
    for (double v : {r.objective, r.residual, r.distance, r.dual_value}) {
      out += ',';
      out += detail::fmt_double(v);
    }
    out += ',';
    out += std::to_string(r.messages);
    if (timing) {
      out += ',';
      out += detail::fmt_double(r.wall_time);
    }
    out += '\n';
  }
  return out;
}

inline RunTrace parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Parse, "empty trace");
  bool timing = false;
  if (line == std::string(kTraceHeader) + ",wall_time") timing = true;
  else if (line != kTraceHeader) throw Error(ErrorCode::Parse, "unexpected trace header: " + line);
  RunTrace t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    const size_t want = timing ? 7 : 6;
    if (f.size() != want) throw Error(ErrorCode::Parse, "trace row has wrong field count: " + line);
    TraceRow r;
    try {
      r.iter = std::stoll(f[0]);
      r.objective = detail::parse_double(f[1]);
      r.residual = detail::parse_double(f[2]);
      r.distance = detail::parse_double(f[3]);
      r.dual_value = detail::parse_double(f[4]);
      r.messages = std::stoull(f[5]);
      if (timing) r.wall_time = detail::parse_double(f[6]);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::Parse, "bad trace row: " + line);
    }
    t.push(r);
  }
  return t;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open " + path + " for writing");
  f << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace netopt
