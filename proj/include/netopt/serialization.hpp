#pragma once

#include "netopt/network.hpp"
#include "netopt/oracle.hpp"
#include "netopt/problem.hpp"

#include <json.hpp>

namespace netopt {

using Json = nlohmann::json;

inline constexpr const char* kProblemSchema = "netopt-problem-v1";

namespace json_detail {

[[noreturn]] inline void fail(const std::string& what) { throw Error(ErrorCode::Parse, what); }

inline Json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double number(const Json& j, const std::string& ctx) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return kNaN;
  }
  fail(ctx + ": expected a number");
}

inline const Json& field(const Json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) fail(ctx + ": missing field '" + key + "'");
  return j.at(key);
}

inline Index integer(const Json& j, const std::string& ctx) {
  if (!j.is_number_integer()) fail(ctx + ": expected an integer");
  return j.get<Index>();
}

}  // namespace json_detail

inline Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Index k = 0; k < v.size(); ++k) a.push_back(json_detail::number(v(k)));
  return a;
}

// row-major nested arrays
inline Json to_json(const Mat& m) {
  Json a = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(json_detail::number(m(r, c)));
    a.push_back(std::move(row));
  }
  return a;
}

inline Vec vec_from_json(const Json& j, const std::string& ctx) {
  if (!j.is_array()) json_detail::fail(ctx + ": expected an array");
  Vec v(static_cast<Index>(j.size()));
  for (size_t k = 0; k < j.size(); ++k) v(static_cast<Index>(k)) = json_detail::number(j[k], ctx);
  return v;
}

// cols fixes the width of matrices with no rows
inline Mat mat_from_json(const Json& j, const std::string& ctx, Index cols = -1) {
  if (!j.is_array()) json_detail::fail(ctx + ": expected an array of rows");
  const Index r = static_cast<Index>(j.size());
  if (r == 0) return Mat(0, std::max<Index>(cols, 0));
  if (!j[0].is_array()) json_detail::fail(ctx + ": expected an array of rows");
  const Index c = static_cast<Index>(j[0].size());
  if (cols >= 0 && c != cols) json_detail::fail(ctx + ": expected " + std::to_string(cols) + " columns");
  Mat m(r, c);
  for (Index i = 0; i < r; ++i) {
    const Json& row = j[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != c) json_detail::fail(ctx + ": ragged matrix");
    for (Index k = 0; k < c; ++k) m(i, k) = json_detail::number(row[static_cast<size_t>(k)], ctx);
  }
  return m;
}

inline Json to_json(const FeasibleSet& s) {
  Json j;
  j["dim"] = s.dim();
  if (s.is_box()) {
    j["kind"] = "box";
    j["lower"] = to_json(s.lower);
    j["upper"] = to_json(s.upper);
  } else {
    j["kind"] = "polyhedron";
    j["A"] = to_json(s.A);
    j["b"] = to_json(s.b);
    j["Aeq"] = to_json(s.Aeq);
    j["beq"] = to_json(s.beq);
  }
  if (s.interior.size()) j["interior"] = to_json(s.interior);
  return j;
}

inline FeasibleSet set_from_json(const Json& j, const std::string& ctx) {
  using namespace json_detail;
  const std::string kind = field(j, "kind", ctx).get<std::string>();
  const Index n = integer(field(j, "dim", ctx), ctx + ".dim");
  std::optional<Vec> inner;
  if (j.contains("interior")) inner = vec_from_json(j["interior"], ctx + ".interior");
  if (kind == "box") {
    Vec l = vec_from_json(field(j, "lower", ctx), ctx + ".lower");
    Vec u = vec_from_json(field(j, "upper", ctx), ctx + ".upper");
    if (l.size() != n || u.size() != n) fail(ctx + ": box bounds do not match dim");
    return FeasibleSet::box(std::move(l), std::move(u), inner);
  }
  if (kind == "polyhedron") {
    Mat A = mat_from_json(field(j, "A", ctx), ctx + ".A", n);
    Vec b = vec_from_json(field(j, "b", ctx), ctx + ".b");
    Mat Aeq = j.contains("Aeq") ? mat_from_json(j["Aeq"], ctx + ".Aeq", n) : Mat(0, n);
    Vec beq = j.contains("beq") ? vec_from_json(j["beq"], ctx + ".beq") : Vec();
    return FeasibleSet::polyhedron(std::move(A), std::move(b), inner.value_or(Vec()), std::move(Aeq), std::move(beq));
  }
  fail(ctx + ": unknown set kind '" + kind + "'");
}

inline Json to_json(const QuadCost& c) {
  return Json{{"H", to_json(c.H)}, {"q", to_json(c.q)}, {"c", json_detail::number(c.constant)}};
}

inline QuadCost cost_from_json(const Json& j, const std::string& ctx) {
  using namespace json_detail;
  Vec q = vec_from_json(field(j, "q", ctx), ctx + ".q");
  Mat H = mat_from_json(field(j, "H", ctx), ctx + ".H", q.size());
  const double c = j.contains("c") ? number(j["c"], ctx + ".c") : 0.0;
  return QuadCost(std::move(H), std::move(q), c);
}

inline Json to_json(const CommGraph& g) {
  Json e = Json::array();
  for (const auto& [i, j] : g.edges) e.push_back(Json::array({i, j}));
  return Json{{"M", g.M}, {"edges", e}};
}

inline CommGraph graph_from_json(const Json& j) {
  using namespace json_detail;
  if (j.is_string()) fail("graph: expected an object");
  CommGraph g(integer(field(j, "M", "graph"), "graph.M"));
  for (const Json& e : field(j, "edges", "graph")) {
    if (!e.is_array() || e.size() != 2) fail("graph.edges: expected [i, j] pairs");
    try {
      g.add_edge(integer(e[0], "graph.edges"), integer(e[1], "graph.edges"));
    } catch (const Error& err) {
      fail(std::string("graph.edges: ") + err.what());
    }
  }
  return g;
}

inline const char* class_name(const AnyProblem& p) {
  switch (p.index()) {
    case 0: return "DCx";
    case 1: return "DCCC";
    default: return "CCDC";
  }
}

// Problem file: the problem itself plus an optional communication graph and
// free-form metadata (generator name, seed, dimensions).
struct ProblemDocument {
  AnyProblem problem;
  std::optional<CommGraph> graph;
  Json meta = Json::object();
};

inline Json to_json(const ProblemDocument& doc) {
  Json j;
  j["schema"] = kProblemSchema;
  j["class"] = class_name(doc.problem);
  if (const auto* p = std::get_if<ProblemDCx>(&doc.problem)) {
    j["M"] = p->M();
    Json costs = Json::array();
    for (const auto& c : p->costs) costs.push_back(to_json(c));
    j["costs"] = costs;
    j["common_set"] = to_json(p->common_set);
    j["strict"] = p->strict;
  } else if (const auto* p = std::get_if<ProblemDCCC>(&doc.problem)) {
    j["M"] = p->M();
    Json costs = Json::array(), sets = Json::array(), G = Json::array(), rbs = Json::array();
    for (Index i = 0; i < p->M(); ++i) {
      costs.push_back(to_json(p->costs[i]));
      sets.push_back(to_json(p->local_sets[i]));
      G.push_back(to_json(p->G[i]));
    }
    for (const auto& rb : p->row_blocks)
      rbs.push_back(Json{{"agent", rb.agent}, {"start", rb.start}, {"count", rb.count}, {"neighbors", rb.neighbors}});
    j["costs"] = costs;
    j["local_sets"] = sets;
    j["G"] = G;
    j["g"] = to_json(p->g);
    j["row_blocks"] = rbs;
  } else {
    const auto& c = std::get<ProblemCCDC>(doc.problem);
    j["M"] = c.M();
    Json blocks = Json::array(), lin = Json::array(), sets = Json::array();
    for (Index i = 0; i < c.M(); ++i) {
      Json row = Json::array();
      for (Index k = 0; k < c.M(); ++k) row.push_back(c.has_block(i, k) ? to_json(c.blocks[i][k]) : Json(nullptr));
      blocks.push_back(row);
      lin.push_back(to_json(c.linear[i]));
      sets.push_back(to_json(c.local_sets[i]));
    }
    j["blocks"] = blocks;
    j["linear"] = lin;
    j["local_sets"] = sets;
    j["constant"] = json_detail::number(c.constant);
  }
  if (doc.graph) j["graph"] = to_json(*doc.graph);
  if (!doc.meta.empty()) j["meta"] = doc.meta;
  return j;
}

inline ProblemDocument document_from_json(const Json& j) {
  using namespace json_detail;
  if (!j.is_object()) fail("problem: expected a JSON object");
  const Json& schema = field(j, "schema", "problem");
  if (!schema.is_string() || schema.get<std::string>() != kProblemSchema)
    fail(std::string("problem: unsupported schema, expected ") + kProblemSchema);
  const std::string cls = field(j, "class", "problem").get<std::string>();
  const Index M = integer(field(j, "M", "problem"), "problem.M");
  auto list = [&](const char* key) -> const Json& {
    const Json& a = field(j, key, "problem");
    if (!a.is_array() || static_cast<Index>(a.size()) != M)
      fail(std::string("problem.") + key + ": expected " + std::to_string(M) + " entries");
    return a;
  };
  auto at = [](const char* key, size_t i) { return std::string(key) + "[" + std::to_string(i) + "]"; };
  ProblemDocument doc;
  try {
    if (cls == "DCx") {
      ProblemDCx p;
      const Json& costs = list("costs");
      for (size_t i = 0; i < costs.size(); ++i) p.costs.push_back(cost_from_json(costs[i], at("costs", i)));
      p.common_set = set_from_json(field(j, "common_set", "problem"), "common_set");
      p.strict = j.value("strict", false);
      p.validate();
      doc.problem = std::move(p);
    } else if (cls == "DCCC") {
      ProblemDCCC p;
      const Json &costs = list("costs"), &sets = list("local_sets"), &G = list("G");
      p.g = vec_from_json(field(j, "g", "problem"), "g");
      for (Index i = 0; i < M; ++i) {
        const size_t s = static_cast<size_t>(i);
        p.costs.push_back(cost_from_json(costs[s], at("costs", s)));
        p.local_sets.push_back(set_from_json(sets[s], at("local_sets", s)));
        Mat Gi = mat_from_json(G[s], at("G", s), p.costs.back().q.size());
        if (Gi.rows() == 0) Gi.resize(p.g.size(), p.costs.back().q.size());
        p.G.push_back(std::move(Gi));
      }
      if (j.contains("row_blocks") && !j["row_blocks"].empty()) {
        for (const Json& r : j["row_blocks"]) {
          RowBlock rb;
          rb.agent = integer(field(r, "agent", "row_blocks"), "row_blocks.agent");
          rb.start = integer(field(r, "start", "row_blocks"), "row_blocks.start");
          rb.count = integer(field(r, "count", "row_blocks"), "row_blocks.count");
          for (const Json& n : field(r, "neighbors", "row_blocks")) rb.neighbors.push_back(integer(n, "row_blocks.neighbors"));
          p.row_blocks.push_back(std::move(rb));
        }
      } else {
        p.fill_default_row_blocks();
      }
      p.validate();
      doc.problem = std::move(p);
    } else if (cls == "CCDC") {
      ProblemCCDC p;
      const Json &blocks = list("blocks"), &lin = list("linear"), &sets = list("local_sets");
      for (Index i = 0; i < M; ++i) p.linear.push_back(vec_from_json(lin[static_cast<size_t>(i)], at("linear", i)));
      p.blocks.assign(static_cast<size_t>(M), std::vector<Mat>(static_cast<size_t>(M)));
      for (Index i = 0; i < M; ++i) {
        const Json& row = blocks[static_cast<size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != M) fail(at("blocks", i) + ": expected M entries");
        for (Index k = 0; k < M; ++k) {
          const Json& b = row[static_cast<size_t>(k)];
          if (!b.is_null()) p.blocks[i][k] = mat_from_json(b, at("blocks", i) + "[" + std::to_string(k) + "]", p.linear[k].size());
        }
        p.local_sets.push_back(set_from_json(sets[static_cast<size_t>(i)], at("local_sets", i)));
      }
      p.constant = j.contains("constant") ? number(j["constant"], "constant") : 0.0;
      p.validate();
      doc.problem = std::move(p);
    } else {
      fail("problem.class: unknown class '" + cls + "'");
    }
  } catch (const Json::exception& e) {
    fail(std::string("problem: ") + e.what());
  }
  if (j.contains("graph")) doc.graph = graph_from_json(j["graph"]);
  if (j.contains("meta")) doc.meta = j["meta"];
  return doc;
}

inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::Parse, what + ": " + e.what());
  }
}

inline ProblemDocument parse_problem(const std::string& text) { return document_from_json(parse_json(text, "problem")); }

inline std::string serialize_problem(const ProblemDocument& doc) { return dump_json(to_json(doc)); }

inline CommGraph parse_graph(const std::string& text) { return graph_from_json(parse_json(text, "graph")); }

}  // namespace netopt
