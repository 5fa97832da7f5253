#pragma once

#include "netopt/blocks.hpp"
#include "netopt/consensus.hpp"
#include "netopt/dual.hpp"
#include "netopt/generators.hpp"
#include "netopt/oracle.hpp"
#include "netopt/serialization.hpp"
#include "netopt/trace.hpp"

#include <chrono>
#include <iomanip>

namespace netopt {

// ------------------------------------------------------------ generation

struct GenerateOptions {
  std::string kind = "mhe";  // mhe | control | satellite | coop | random
  std::uint64_t seed = 1;
  Index M = 10, N = 10, n = 5, m = 3, p = 2;
  std::string topology = "chain";
  double sigma = 1.0;  // satellite input weight
  double coupling = 0.1;
  std::optional<double> dt;
};

inline Topology parse_topology(const std::string& s) {
  if (s == "chain" || s == "path") return Topology::Chain;
  if (s == "ring") return Topology::Ring;
  throw Error(ErrorCode::InvalidArgument, "unknown topology '" + s + "'");
}

inline CommGraph topology_graph(Topology t, Index M) { return t == Topology::Chain ? CommGraph::path(M) : CommGraph::ring(M); }

inline ProblemDocument generate_document(const GenerateOptions& o) {
  ProblemDocument doc;
  Json meta{{"generator", o.kind}, {"seed", o.seed}, {"M", o.M}, {"N", o.N}};
  if (o.kind == "mhe") {
    MheConfig c;
    c.M = o.M;
    c.N = o.N;
    c.n = o.n;
    c.p = 1;
    c.seed = o.seed;
    doc.problem = gen_mhe_dcx(c);
    doc.graph = CommGraph::path(o.M);
    meta["n"] = o.n;
  } else if (o.kind == "control") {
    ControlConfig c;
    c.M = o.M;
    c.N = o.N;
    c.n = o.n;
    c.m = o.m;
    c.p = o.p;
    c.topology = parse_topology(o.topology);
    c.coupling_scale = o.coupling;
    c.seed = o.seed;
    doc.problem = gen_control_dccc(c);
    doc.graph = topology_graph(c.topology, o.M);
    meta.update(Json{{"n", o.n}, {"m", o.m}, {"p", o.p}, {"topology", o.topology}});
  } else if (o.kind == "satellite") {
    CWParams c;
    c.M = o.M;
    c.r_weight = o.sigma;
    c.seed = o.seed;
    if (o.dt) c.dt = *o.dt;
    doc.problem = gen_satellite_ccdc(c, o.N);
    doc.graph = CommGraph::ring(o.M);
    meta.update(Json{{"sigma", o.sigma}, {"dt", c.dt}, {"omega", c.omega}});
  } else if (o.kind == "coop") {
    CoopConfig c;
    c.M = o.M;
    c.N = o.N;
    c.n = o.n;
    c.m = o.m;
    c.topology = parse_topology(o.topology);
    c.coupling_scale = o.coupling;
    c.seed = o.seed;
    doc.problem = gen_coupled_cooperative(c);
    doc.graph = topology_graph(c.topology, o.M);
    meta.update(Json{{"n", o.n}, {"m", o.m}, {"topology", o.topology}});
  } else if (o.kind == "random") {
    RandomDcccConfig c;
    c.M = o.M;
    c.dim = o.n;
    c.n_lambda = o.p;
    c.seed = o.seed;
    doc.problem = gen_random_dccc(c);
    doc.graph = CommGraph::complete(o.M);
    meta.update(Json{{"dim", o.n}, {"n_lambda", o.p}});
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown generator '" + o.kind + "'");
  }
  doc.meta = meta;
  return doc;
}

// FNV-1a over the canonical problem serialization, metadata excluded
inline std::string problem_id(const ProblemDocument& doc) {
  ProblemDocument bare{doc.problem, std::nullopt, Json::object()};
  const std::string s = to_json(bare).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

// ------------------------------------------------------------ algorithms

enum class Algorithm { Dgp1, Dgp2, Incremental, PS, DS, DFG, DIP, Jacobi, GaussSeidel, CoordDescent, Cooperative, FeasibleDirections };

inline const std::vector<std::pair<Algorithm, const char*>>& algorithm_names() {
  static const std::vector<std::pair<Algorithm, const char*>> n = {
      {Algorithm::Dgp1, "dgp1"},       {Algorithm::Dgp2, "dgp2"},         {Algorithm::Incremental, "incremental"},
      {Algorithm::PS, "ps"},           {Algorithm::DS, "ds"},             {Algorithm::DFG, "dfg"},
      {Algorithm::DIP, "dip"},         {Algorithm::Jacobi, "jacobi"},     {Algorithm::GaussSeidel, "gs"},
      {Algorithm::CoordDescent, "cd"}, {Algorithm::Cooperative, "coop"}, {Algorithm::FeasibleDirections, "fd"}};
  return n;
}

inline const char* to_string(Algorithm a) {
  for (const auto& [k, s] : algorithm_names())
    if (k == a) return s;
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  for (const auto& [k, n] : algorithm_names())
    if (s == n) return k;
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm '" + s + "'");
}

// variant index of the problem class an algorithm runs on
inline size_t algorithm_class(Algorithm a) {
  switch (a) {
    case Algorithm::Dgp1:
    case Algorithm::Dgp2:
    case Algorithm::Incremental: return 0;
    case Algorithm::PS:
    case Algorithm::DS:
    case Algorithm::DFG:
    case Algorithm::DIP: return 1;
    default: return 2;
  }
}

inline std::vector<Algorithm> compatible_algorithms(size_t cls) {
  std::vector<Algorithm> out;
  for (const auto& [a, n] : algorithm_names())
    if (algorithm_class(a) == cls) out.push_back(a);
  return out;
}

struct AlgorithmParams {
  std::string step_rule = "default";  // default | harmonic | constant
  double step_a = 1.0, step_b = 1.0;
  double step = 0.0;
  int consensus_depth = 10;
  std::string graph;  // builtin topology overriding the problem's graph
  std::optional<double> smoothing;
  bool momentum = true;
  bool distributed = true;
  bool colored = false;
  std::vector<double> weights;
  DipOptions dip;
  int workers = 1;
};

struct ExperimentConfig {
  ProblemDocument problem;
  Algorithm algorithm = Algorithm::DS;
  AlgorithmParams params;
  double eps = 1e-3;
  Index max_iter = 1000;
  std::uint64_t seed = 0;
  std::string trace_path;
  bool timing = false;
  bool record_trace = true;

  void validate() const {
    require(eps > 0.0, ErrorCode::InvalidArgument, "eps must be positive");
    require(max_iter >= 1, ErrorCode::InvalidArgument, "iteration cap must be at least 1");
    require(algorithm_class(algorithm) == problem.problem.index(), ErrorCode::Incompatible,
            std::string(to_string(algorithm)) + " cannot run on a " + class_name(problem.problem) + " problem");
  }
};

struct RunResult {
  RunTrace trace;
  OracleSolution oracle;
  Point x;
  double objective = kNaN, rel_gap = kNaN, residual = kNaN, distance = kNaN;
  std::uint64_t messages = 0, messages_to_eps = 0;
  Index rounds = 0;
  Index iterations = 0;
  std::vector<std::string> warnings;
  std::string note;
  std::string problem_id;
};

inline StepSizeRule make_rule(const AlgorithmParams& prm, StepSizeRule fallback) {
  if (prm.step_rule == "harmonic") return StepSizeRule::harmonic(prm.step_a, prm.step_b);
  if (prm.step_rule == "constant") return StepSizeRule::constant(prm.step);
  require(prm.step_rule == "default", ErrorCode::InvalidArgument, "unknown step rule '" + prm.step_rule + "'");
  return fallback;
}

namespace harness_detail {

inline double set_violation(const FeasibleSet& s, const Vec& x) {
  double v = 0.0;
  if (s.is_box()) {
    for (Index j = 0; j < x.size(); ++j) v = std::max({v, s.lower(j) - x(j), x(j) - s.upper(j)});
    return v;
  }
  if (s.A.rows()) v = std::max(v, (s.A * x - s.b).maxCoeff());
  if (s.Aeq.rows()) v = std::max(v, (s.Aeq * x - s.beq).cwiseAbs().maxCoeff());
  return v;
}

inline double point_distance(const Point& a, const Point& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) d = std::max(d, inf_norm(a[i] - b[i]));
  return d;
}

inline double relative_gap(double f, double fs) { return std::abs(f - fs) / std::max(1.0, std::abs(fs)); }

// block updates read the neighbours' current blocks
inline void credit_block_reads(const ProblemCCDC& p, Index i, RoundLedger* ledger) {
  if (!ledger) return;
  for (Index j = 0; j < p.M(); ++j)
    if (j != i && p.has_block(i, j)) ledger->credit(i, j, static_cast<std::uint64_t>(p.linear[j].size()));
}

inline CommGraph graph_for(const ExperimentConfig& cfg, Index M) {
  if (!cfg.params.graph.empty()) return CommGraph::builtin(cfg.params.graph, M);
  if (cfg.problem.graph) {
    require_dim(cfg.problem.graph->M, M, "problem graph");
    return *cfg.problem.graph;
  }
  return CommGraph::path(M);
}

struct Metrics {
  double objective, residual, distance, dual;
};

}  // namespace harness_detail

// Runs one algorithm against the centralized oracle. Convergence is judged by the
// harness only: relative objective gap and residual both below eps.
inline RunResult run_experiment(const ExperimentConfig& cfg, const OracleSolution* known = nullptr) {
  using namespace harness_detail;
  cfg.validate();
  const AlgorithmParams& prm = cfg.params;
  RunResult res;
  res.problem_id = problem_id(cfg.problem);
  res.oracle = known ? *known : solve_centralized(cfg.problem.problem);
  const OracleSolution& o = res.oracle;
  RoundLedger ledger;
  const auto t0 = std::chrono::steady_clock::now();
  bool done = false;

  auto record = [&](Index k, const Metrics& m) {
    res.objective = m.objective;
    res.rel_gap = relative_gap(m.objective, o.objective);
    res.residual = m.residual;
    res.distance = m.distance;
    res.iterations = k;
    TraceRow r;
    r.iter = k;
    r.objective = m.objective;
    r.residual = m.residual;
    r.distance = m.distance;
    r.dual_value = m.dual;
    r.messages = ledger.total;
    if (cfg.timing) r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cfg.record_trace) res.trace.push(r);
    if (res.rel_gap <= cfg.eps && res.residual <= cfg.eps) {
      res.trace.status = RunStatus::Converged;
      res.trace.iterations_to_eps = k;
      res.messages_to_eps = ledger.total;
      done = true;
    }
  };

  try {
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, ProblemDCx>) {
            const Vec& xs = o.x[0];
            const Index M = p.M();
            const Projector proj(p.common_set);
            auto metrics = [&](const std::vector<Vec>& x) {
              const Vec xbar = average(x);
              double dis = 0.0, dist = 0.0;
              for (const auto& v : x) {
                dis = std::max(dis, inf_norm(v - xbar));
                dist = std::max(dist, inf_norm(v - xs));
              }
              return Metrics{p.objective(xbar), dis, dist, kNaN};
            };
            ConsensusState st = ConsensusState::uniform(p, p.common_set.interior);
            if (cfg.algorithm == Algorithm::Incremental) {
              const StepSizeRule rule = make_rule(prm, StepSizeRule::harmonic(1.0, 1.0));
              const std::vector<Index> order = natural_order(M);
              Vec z = p.common_set.interior;
              for (Index k = 1; k <= cfg.max_iter && !done; ++k) {
                z = incremental_cycle(p, order, z, rule.at(k - 1), &ledger, &proj);
                record(k, metrics({z}));
                res.x = {z};
              }
              return;
            }
            const CommGraph g = graph_for(cfg, M);
            const WeightSchedule w = metropolis_weights(g);
            if (cfg.algorithm == Algorithm::Dgp1) {
              res.warnings = dgp1_warnings(p, w);
              const StepSizeRule rule = make_rule(prm, StepSizeRule::harmonic(1.0, 1.0));
              for (Index k = 1; k <= cfg.max_iter && !done; ++k) {
                dgp1_step(p, w, st, rule, &ledger, &proj, prm.workers);
                record(k, metrics(st.x));
              }
            } else {
              const StepSizeRule rule = make_rule(prm, StepSizeRule::constant(default_dgp2_step(p)));
              require(rule.kind == StepSizeRule::Kind::Constant, ErrorCode::InvalidArgument, "dgp2 needs a constant step");
              for (Index k = 1; k <= cfg.max_iter && !done; ++k) {
                dgp2_step(p, w, prm.consensus_depth, st, rule.alpha, &ledger, &proj, prm.workers);
                record(k, metrics(st.x));
              }
            }
            res.x = st.x;
          } else if constexpr (std::is_same_v<P, ProblemDCCC>) {
            const double gscale = std::max(1.0, inf_norm(p.g));
            auto metrics = [&](const Point& x, double dual) {
              return Metrics{p.objective(x), inf_norm(p.residual(x)) / gscale, point_distance(x, o.x), dual};
            };
            if (cfg.algorithm == Algorithm::PS) {
              const PrimalDecomposition pd(p);
              PSState st = pd.init(prm.workers);
              const StepSizeRule rule = make_rule(prm, StepSizeRule::harmonic(prm.step_a, prm.step_b));
              for (Index k = 1; k <= cfg.max_iter && !done; ++k) {
                pd.step(st, rule.at(k - 1), &ledger, prm.workers);
                record(k, metrics(st.x, kNaN));
              }
              res.x = st.x;
            } else if (cfg.algorithm == Algorithm::DS) {
              const DualFunction d(p, 0.0, ProxKind::Quadratic, prm.workers);
              const StepSizeRule rule = make_rule(prm, StepSizeRule::constant(default_ds_step(p)));
              DualState st = ds_init(d);
              // row k reports the minimisers that drive update k
              for (Index k = 1; k <= cfg.max_iter && !done; ++k) {
                const DualEval e = st.last;
                ds_step(d, st, rule.at(k - 1), prm.distributed, &ledger);
                record(k, metrics(e.x, e.value));
                res.x = e.x;
              }
            } else if (cfg.algorithm == Algorithm::DFG) {
              const double mu = prm.smoothing ? *prm.smoothing : dfg_smoothing(p, cfg.eps);
              const DualFunction d(p, mu, ProxKind::Quadratic, prm.workers);
              const double L = d.lipschitz();
              DualState st = dfg_init(d);
              for (Index k = 1; k <= cfg.max_iter && !done; ++k) {
                const DualEval e = st.last;
                dfg_step(d, st, L, prm.momentum, &ledger);
                record(k, metrics(e.x, e.value));
                res.x = e.x;
              }
            } else {
              DipSolver s(p, cfg.eps, prm.dip, prm.workers);
              for (Index k = 1; k <= cfg.max_iter && !done; ++k) {
                if (!s.step(&ledger)) {
                  res.note = "intrinsic stop before the oracle check passed";
                  res.trace.status = RunStatus::Failed;
                  break;
                }
                record(k, metrics(s.current().x, s.current().value));
              }
              res.x = s.current().x;
            }
          } else {
            const BlockContext ctx(p);
            const Index M = p.M();
            auto metrics = [&](const Point& x) {
              double v = 0.0;
              for (Index i = 0; i < M; ++i) v = std::max(v, set_violation(p.local_sets[i], x[i]));
              return Metrics{p.objective(x), v, point_distance(x, o.x), kNaN};
            };
            Point x;
            for (const auto& s : p.local_sets) x.push_back(s.interior);
            auto credit_all = [&] {
              for (Index i = 0; i < M; ++i) credit_block_reads(p, i, &ledger);
              ledger.close_round();
            };
            std::vector<int> color;
            if (cfg.algorithm == Algorithm::GaussSeidel && prm.colored) color = greedy_coloring(p);
            Rng rng(cfg.seed);
            std::vector<double> alpha = prm.weights;
            if (cfg.algorithm == Algorithm::Cooperative && alpha.empty()) alpha.assign(static_cast<size_t>(M), 1.0 / M);
            for (Index k = 1; k <= cfg.max_iter && !done; ++k) {
              switch (cfg.algorithm) {
                case Algorithm::Jacobi:
                  jacobi_step(ctx, x, prm.workers);
                  credit_all();
                  break;
                case Algorithm::GaussSeidel:
                  if (prm.colored) {
                    gauss_seidel_colored_step(ctx, x, color, prm.workers);
                    const int nc = *std::max_element(color.begin(), color.end()) + 1;
                    for (int c = 0; c < nc; ++c) {
                      for (Index i = 0; i < M; ++i)
                        if (color[i] == c) credit_block_reads(p, i, &ledger);
                      ledger.close_round();
                    }
                  } else {
                    gauss_seidel_step(ctx, x, natural_order(M));
                    for (Index i = 0; i < M; ++i) {
                      credit_block_reads(p, i, &ledger);
                      ledger.close_round();
                    }
                  }
                  break;
                case Algorithm::CoordDescent: {
                  const Index i = coord_descent_step(ctx, x, rng);
                  credit_block_reads(p, i, &ledger);
                  ledger.close_round();
                  break;
                }
                case Algorithm::Cooperative:
                  cooperative_jacobi_step(ctx, x, alpha, prm.workers);
                  credit_all();
                  break;
                default: {
                  const FeasibleDirectionsInfo info = feasible_directions_step(ctx, x, prm.workers);
                  if (!info.frozen.empty() && k == 1) res.warnings.push_back("feasible directions froze some blocks");
                  credit_all();
                  break;
                }
              }
              record(k, metrics(x));
            }
            res.x = x;
          }
        },
        cfg.problem.problem);
  } catch (const Error& e) {
    res.trace.status = RunStatus::Failed;
    res.note = e.what();
  }
  res.messages = ledger.total;
  res.rounds = static_cast<Index>(ledger.rounds());
  if (!done && res.trace.status != RunStatus::Failed) res.trace.status = RunStatus::MaxIter;
  if (!cfg.trace_path.empty() && cfg.record_trace) write_text(cfg.trace_path, trace_csv(res.trace, cfg.timing));
  return res;
}

inline Json params_json(const AlgorithmParams& p) {
  Json j{{"step_rule", p.step_rule}, {"consensus_depth", p.consensus_depth}, {"momentum", p.momentum},
         {"distributed", p.distributed}, {"colored", p.colored}, {"workers", p.workers}};
  if (p.step_rule == "harmonic") j.update(Json{{"step_a", p.step_a}, {"step_b", p.step_b}});
  if (p.step_rule == "constant") j["step"] = p.step;
  if (!p.graph.empty()) j["graph"] = p.graph;
  if (p.smoothing) j["smoothing"] = *p.smoothing;
  if (!p.weights.empty()) j["weights"] = p.weights;
  return j;
}

inline AlgorithmParams params_from_json(const Json& j) {
  AlgorithmParams p;
  try {
    p.step_rule = j.value("step_rule", p.step_rule);
    p.step_a = j.value("step_a", p.step_a);
    p.step_b = j.value("step_b", p.step_b);
    p.step = j.value("step", p.step);
    p.consensus_depth = j.value("consensus_depth", p.consensus_depth);
    p.graph = j.value("graph", p.graph);
    if (j.contains("smoothing")) p.smoothing = j["smoothing"].get<double>();
    p.momentum = j.value("momentum", p.momentum);
    p.distributed = j.value("distributed", p.distributed);
    p.colored = j.value("colored", p.colored);
    p.workers = j.value("workers", p.workers);
    if (j.contains("weights")) p.weights = j["weights"].get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("params: ") + e.what());
  }
  return p;
}

// config file: {"problem": path-or-object, "algorithm", "eps", "max_iter", "seed", "trace", "params"}
inline ExperimentConfig config_from_json(const Json& j, const std::string& base_dir = ".") {
  ExperimentConfig c;
  if (!j.is_object() || !j.contains("problem") || !j.contains("algorithm"))
    throw Error(ErrorCode::Parse, "config: needs 'problem' and 'algorithm'");
  try {
    const Json& pj = j["problem"];
    if (pj.is_string()) {
      std::string path = pj.get<std::string>();
      if (!path.empty() && path[0] != '/') path = base_dir + "/" + path;
      c.problem = parse_problem(read_text(path));
    } else {
      c.problem = document_from_json(pj);
    }
    c.algorithm = parse_algorithm(j["algorithm"].get<std::string>());
    c.eps = j.value("eps", c.eps);
    c.max_iter = j.value("max_iter", c.max_iter);
    c.seed = j.value("seed", c.seed);
    c.trace_path = j.value("trace", c.trace_path);
    c.timing = j.value("timing", c.timing);
    if (j.contains("params")) c.params = params_from_json(j["params"]);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("config: ") + e.what());
  }
  return c;
}

inline Json summary_json(const ExperimentConfig& cfg, const RunResult& r) {
  auto num = [](double v) { return json_detail::number(v); };
  Json j{{"schema", "netopt-summary-v1"},
         {"algorithm", to_string(cfg.algorithm)},
         {"class", class_name(cfg.problem.problem)},
         {"problem_id", r.problem_id},
         {"status", to_string(r.trace.status)},
         {"eps", cfg.eps},
         {"max_iter", cfg.max_iter},
         {"seed", cfg.seed},
         {"iterations", r.iterations},
         {"iterations_to_eps", r.trace.iterations_to_eps >= 0 ? Json(r.trace.iterations_to_eps) : Json(nullptr)},
         {"messages", r.messages},
         {"messages_to_eps", r.trace.iterations_to_eps >= 0 ? Json(r.messages_to_eps) : Json(nullptr)},
         {"rounds", r.rounds},
         {"objective", num(r.objective)},
         {"oracle_objective", num(r.oracle.objective)},
         {"rel_gap", num(r.rel_gap)},
         {"residual", num(r.residual)},
         {"distance", num(r.distance)},
         {"accuracy", num(std::max(r.rel_gap, r.residual))},
         {"params", params_json(cfg.params)},
         {"warnings", r.warnings}};
  if (!r.note.empty()) j["note"] = r.note;
  if (!cfg.trace_path.empty()) j["trace"] = cfg.trace_path;
  return j;
}

// ------------------------------------------------------------------ compare

struct CompareEntry {
  std::string name;
  std::string algorithm;
  std::string problem_id;
  Index iterations_to_eps = -1;
  std::uint64_t messages_to_eps = 0;
  double accuracy = kNaN;
};

inline CompareEntry entry_from_summary(const Json& j, const std::string& name) {
  CompareEntry e;
  try {
    e.name = name;
    e.algorithm = j.at("algorithm").get<std::string>();
    e.problem_id = j.at("problem_id").get<std::string>();
    if (!j.at("iterations_to_eps").is_null()) {
      e.iterations_to_eps = j["iterations_to_eps"].get<Index>();
      e.messages_to_eps = j.at("messages_to_eps").get<std::uint64_t>();
    }
    e.accuracy = json_detail::number(j.at("accuracy"), "accuracy");
  } catch (const Json::exception& ex) {
    throw Error(ErrorCode::Parse, name + ": not a run summary (" + ex.what() + ")");
  }
  return e;
}

struct CompareReport {
  std::vector<std::vector<std::string>> by_iterations;  // groups of tied entries, best first
  std::vector<std::vector<std::string>> by_messages;
  std::vector<std::string> ties;
  std::vector<std::string> violations;
  Json to_json() const {
    return Json{{"by_iterations", by_iterations}, {"by_messages", by_messages}, {"ties", ties}, {"violations", violations}};
  }
};

// expected orderings: first strictly fewer iterations than second (or no worse when weak)
struct ExpectedOrder {
  const char* better;
  const char* worse;
  bool weak;
};

inline const std::vector<ExpectedOrder>& expected_orders() {
  static const std::vector<ExpectedOrder> o = {
      {"dip", "dfg", false}, {"dfg", "ds", false}, {"dip", "ds", false}, {"dgp2", "dgp1", false}, {"gs", "jacobi", true}};
  return o;
}

inline CompareReport compare(const std::vector<CompareEntry>& entries) {
  require(entries.size() >= 2, ErrorCode::InvalidArgument, "compare needs at least two runs");
  for (const auto& e : entries)
    require(e.problem_id == entries[0].problem_id, ErrorCode::Incompatible,
            "runs are over different problems: " + entries[0].name + " vs " + e.name);
  CompareReport r;
  auto iters = [](const CompareEntry& e) { return e.iterations_to_eps < 0 ? kInf : static_cast<double>(e.iterations_to_eps); };
  auto msgs = [](const CompareEntry& e) { return e.iterations_to_eps < 0 ? kInf : static_cast<double>(e.messages_to_eps); };
  auto rank = [&](auto key) {
    std::vector<size_t> idx(entries.size());
    for (size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return key(entries[a]) < key(entries[b]); });
    std::vector<std::vector<std::string>> groups;
    for (size_t k = 0; k < idx.size(); ++k) {
      if (k == 0 || key(entries[idx[k]]) != key(entries[idx[k - 1]])) groups.emplace_back();
      groups.back().push_back(entries[idx[k]].name);
    }
    return groups;
  };
  r.by_iterations = rank(iters);
  r.by_messages = rank(msgs);
  for (const auto& g : r.by_iterations)
    if (g.size() > 1) {
      std::string s = "tie:";
      for (const auto& n : g) s += " " + n;
      r.ties.push_back(s);
    }
  for (const auto& a : entries)
    for (const auto& b : entries)
      for (const auto& o : expected_orders())
        if (a.algorithm == o.better && b.algorithm == o.worse) {
          const bool ok = o.weak ? iters(a) <= iters(b) : iters(a) < iters(b);
          if (!ok) r.violations.push_back(a.name + " (" + a.algorithm + ") expected " + (o.weak ? "<= " : "< ") + b.name + " (" + b.algorithm + ")");
        }
  return r;
}

// -------------------------------------------------------------------- bench

struct BenchCell {
  std::string row, column;
  Index iterations = -1;  // -1: not reached
  std::uint64_t messages = 0;
  double eps = kNaN, accuracy = kNaN;
  Index cap = 0;
};

struct BenchTable {
  int id = 0;
  std::string title, note;
  std::vector<std::string> rows, columns;
  std::vector<BenchCell> cells;

  const BenchCell& cell(const std::string& r, const std::string& c) const {
    for (const auto& x : cells)
      if (x.row == r && x.column == c) return x;
    throw Error(ErrorCode::InvalidArgument, "no bench cell " + r + "/" + c);
  }

  std::string csv() const {
    std::string s = "table,row,column,iterations,messages,eps,accuracy,cap\n";
    for (const auto& c : cells)
      s += std::to_string(id) + "," + c.row + "," + c.column + "," + std::to_string(c.iterations) + "," +
           std::to_string(c.messages) + "," + detail::fmt_double(c.eps) + "," + detail::fmt_double(c.accuracy) + "," +
           std::to_string(c.cap) + "\n";
    return s;
  }

  std::string text() const {
    std::ostringstream o;
    o << "# Table " << id << ": " << title << "\n# " << note << "\n";
    o << std::left << std::setw(14) << "";
    for (const auto& c : columns) o << std::setw(26) << c;
    o << "\n";
    for (const auto& r : rows) {
      o << std::setw(14) << r;
      for (const auto& c : columns) {
        const BenchCell& x = cell(r, c);
        std::ostringstream v;
        if (x.iterations >= 0) v << x.iterations << " (" << std::setprecision(0) << std::scientific << x.eps << ")";
        else v << x.cap << "+ (" << std::setprecision(2) << std::defaultfloat << x.accuracy << ")";
        o << std::setw(26) << v.str();
      }
      o << "\n";
    }
    return o.str();
  }
};

inline BenchCell bench_cell(const ProblemDocument& doc, const OracleSolution& o, Algorithm a, AlgorithmParams prm,
                            double eps, Index cap, const std::string& row, const std::string& col) {
  ExperimentConfig c;
  c.problem = doc;
  c.algorithm = a;
  c.params = std::move(prm);
  c.eps = eps;
  c.max_iter = cap;
  c.record_trace = false;
  const RunResult r = run_experiment(c, &o);
  require(r.trace.status != RunStatus::Failed, ErrorCode::InvalidArgument, "bench cell " + row + "/" + col + " failed: " + r.note);
  BenchCell b;
  b.row = row;
  b.column = col;
  b.iterations = r.trace.iterations_to_eps;
  b.messages = b.iterations >= 0 ? r.messages_to_eps : r.messages;
  b.eps = eps;
  b.accuracy = std::max(r.rel_gap, r.residual);
  b.cap = cap;
  return b;
}

// satellite settings used for the sigma sweep
inline GenerateOptions satellite_bench_options(double sigma, std::uint64_t seed) {
  GenerateOptions g;
  g.kind = "satellite";
  g.M = 10;
  g.N = 40;
  g.sigma = sigma;
  g.seed = seed;
  return g;
}

inline BenchTable bench_table(int id, std::uint64_t seed) {
  BenchTable t;
  t.id = id;
  t.note = "seeded random instances (seed " + std::to_string(seed) +
           "); the original instances are unpublished, so counts are comparable in trend only";
  if (id == 1) {
    t.title = "state estimation (DCx), dgp1 vs dgp2 with mu = 10, eps = 1e-2, path graph";
    t.columns = {"dgp1", "dgp2"};
    for (auto [M, N] : std::vector<std::pair<Index, Index>>{{10, 10}, {10, 20}, {20, 10}, {20, 20}}) {
      GenerateOptions g;
      g.kind = "mhe";
      g.M = M;
      g.N = N;
      g.seed = seed;
      const ProblemDocument doc = generate_document(g);
      const OracleSolution o = solve_centralized(doc.problem);
      const std::string row = "M=" + std::to_string(M) + ",N=" + std::to_string(N);
      t.rows.push_back(row);
      t.cells.push_back(bench_cell(doc, o, Algorithm::Dgp1, {}, 1e-2, 100000, row, "dgp1"));
      t.cells.push_back(bench_cell(doc, o, Algorithm::Dgp2, {}, 1e-2, 20000, row, "dgp2"));
    }
  } else if (id == 2) {
    t.title = "distributed control (DCCC), M = 10, n = 5, m = 3, p = 2";
    t.columns = {"ds", "dfg", "dip"};
    for (Index N : {10, 20, 30}) {
      GenerateOptions g;
      g.kind = "control";
      g.M = 10;
      g.N = N;
      g.seed = seed;
      const ProblemDocument doc = generate_document(g);
      const OracleSolution o = solve_centralized(doc.problem);
      const std::string row = "N=" + std::to_string(N);
      t.rows.push_back(row);
      t.cells.push_back(bench_cell(doc, o, Algorithm::DS, {}, 1e-2, 5000, row, "ds"));
      t.cells.push_back(bench_cell(doc, o, Algorithm::DFG, {}, 1e-2, 20000, row, "dfg"));
      t.cells.push_back(bench_cell(doc, o, Algorithm::DIP, {}, 1e-4, 300, row, "dip"));
    }
  } else if (id == 3) {
    t.title = "satellite formation (CCDC), M = 10, N = 40, eps = 1e-3";
    t.columns = {"jacobi", "gs"};
    for (double sigma : {0.1, 1.0, 10.0}) {
      const ProblemDocument doc = generate_document(satellite_bench_options(sigma, seed));
      const OracleSolution o = solve_centralized(doc.problem);
      std::ostringstream r;
      r << "sigma=" << sigma;
      t.rows.push_back(r.str());
      t.cells.push_back(bench_cell(doc, o, Algorithm::Jacobi, {}, 1e-3, 100000, r.str(), "jacobi"));
      t.cells.push_back(bench_cell(doc, o, Algorithm::GaussSeidel, {}, 1e-3, 100000, r.str(), "gs"));
    }
  } else {
    throw Error(ErrorCode::InvalidArgument, "bench table must be 1, 2 or 3");
  }
  return t;
}

}  // namespace netopt
