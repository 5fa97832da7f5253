#include "netopt/harness.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

using namespace netopt;

namespace {

int fail(const std::string& msg, int code = 2) {
  std::cerr << "netopt: " << msg << "\n";
  return code;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") std::cout << text;
  else write_text(path, text);
}

Json oracle_json(const OracleSolution& s) {
  Json x = Json::array();
  for (const auto& v : s.x) x.push_back(to_json(v));
  return Json{{"schema", "netopt-oracle-v1"},
              {"status", to_string(s.status)},
              {"objective", json_detail::number(s.objective)},
              {"kkt_residual", json_detail::number(s.kkt_residual)},
              {"iterations", s.iterations},
              {"x", x},
              {"multipliers", to_json(s.multipliers)}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"netopt: distributed optimization methods for networked systems"};
  app.require_subcommand(1);

  GenerateOptions gen;
  std::string gen_out = "-";
  auto* g = app.add_subcommand("generate", "generate a seeded problem instance");
  g->add_option("kind", gen.kind, "mhe | control | satellite | coop | random")->required()
      ->check(CLI::IsMember({"mhe", "control", "satellite", "coop", "random"}));
  g->add_option("--seed", gen.seed, "generator seed")->required();
  g->add_option("--out,-o", gen_out, "output file (default stdout)");
  g->add_option("--M", gen.M, "number of agents");
  g->add_option("--N", gen.N, "horizon length");
  g->add_option("--n", gen.n, "state dimension (variable count for random)");
  g->add_option("--m", gen.m, "input dimension");
  g->add_option("--p", gen.p, "disturbance dimension (coupling rows for random)");
  g->add_option("--topology", gen.topology, "chain | ring");
  g->add_option("--sigma", gen.sigma, "satellite input weight");
  g->add_option("--coupling", gen.coupling, "interconnection scale");
  g->add_option("--dt", gen.dt, "satellite sampling time");

  std::string oracle_problem, oracle_out = "-";
  auto* o = app.add_subcommand("oracle", "solve a problem centrally");
  o->add_option("--problem,-p", oracle_problem, "problem file")->required();
  o->add_option("--out,-o", oracle_out, "solution file (default stdout)");

  std::string run_alg, run_problem, run_graph, run_config, run_summary = "-", run_trace;
  ExperimentConfig cfg;
  auto* r = app.add_subcommand("run", "run one algorithm against the oracle");
  r->add_option("algorithm", run_alg, "dgp1 dgp2 incremental ps ds dfg dip jacobi gs cd coop fd");
  r->add_option("--config,-c", run_config, "JSON experiment config; flags given explicitly override it");
  r->add_option("--problem,-p", run_problem, "problem file");
  r->add_option("--graph,-g", run_graph, "communication graph file (DCx)");
  auto* eps_opt = r->add_option("--eps", cfg.eps, "target accuracy");
  auto* cap_opt = r->add_option("--max-iter", cfg.max_iter, "iteration cap");
  auto* seed_opt = r->add_option("--seed", cfg.seed, "run seed (randomized methods)");
  r->add_option("--trace,-t", run_trace, "trace CSV path");
  r->add_option("--summary,-s", run_summary, "summary JSON path (default stdout)");
  r->add_flag("--timing", cfg.timing, "append a wall_time column to the trace");
  auto* rule_opt = r->add_option("--step-rule", cfg.params.step_rule, "default | harmonic | constant");
  auto* a_opt = r->add_option("--step-a", cfg.params.step_a, "harmonic numerator");
  auto* b_opt = r->add_option("--step-b", cfg.params.step_b, "harmonic offset");
  auto* step_opt = r->add_option("--step", cfg.params.step, "constant step");
  auto* mu_opt = r->add_option("--consensus-depth", cfg.params.consensus_depth, "dgp2 consensus rounds per iteration");
  auto* bgraph_opt = r->add_option("--builtin-graph", cfg.params.graph, "path | ring | complete | star");
  auto* smooth_opt = r->add_option("--smoothing", cfg.params.smoothing, "dfg smoothing parameter");
  bool no_momentum = false, central = false;
  r->add_flag("--no-momentum", no_momentum, "dfg without momentum");
  r->add_flag("--central", central, "ds stacked update instead of per-block");
  auto* col_opt = r->add_flag("--colored", cfg.params.colored, "gs by color classes");
  auto* w_opt = r->add_option("--weights", cfg.params.weights, "coop weights");
  auto* workers_opt = r->add_option("--workers", cfg.params.workers, "parallel workers");

  int bench_id = 0;
  std::uint64_t bench_seed = 1;
  std::string bench_csv, bench_text = "-";
  auto* b = app.add_subcommand("bench", "reproduce a benchmark table");
  b->add_option("table", bench_id, "1, 2 or 3")->required()->check(CLI::Range(1, 3));
  b->add_option("--seed", bench_seed, "instance seed");
  b->add_option("--csv", bench_csv, "CSV output path");
  b->add_option("--out,-o", bench_text, "formatted table path (default stdout)");

  std::vector<std::string> cmp_files;
  std::string cmp_out = "-";
  auto* c = app.add_subcommand("compare", "rank runs over the same problem");
  c->add_option("summaries", cmp_files, "run summary JSON files")->required()->expected(2, -1);
  c->add_option("--out,-o", cmp_out, "report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*g) {
      emit(serialize_problem(generate_document(gen)), gen_out);
      return 0;
    }
    if (*o) {
      const ProblemDocument doc = parse_problem(read_text(oracle_problem));
      emit(dump_json(oracle_json(solve_centralized(doc.problem))), oracle_out);
      return 0;
    }
    if (*r) {
      if (!run_config.empty()) {
        const ExperimentConfig base =
            config_from_json(parse_json(read_text(run_config), "config"),
                             std::filesystem::path(run_config).parent_path().string().empty()
                                 ? "."
                                 : std::filesystem::path(run_config).parent_path().string());
        // keep explicit flags, take everything else from the file
        ExperimentConfig merged = base;
        if (eps_opt->count()) merged.eps = cfg.eps;
        if (cap_opt->count()) merged.max_iter = cfg.max_iter;
        if (seed_opt->count()) merged.seed = cfg.seed;
        if (cfg.timing) merged.timing = true;
        AlgorithmParams& mp = merged.params;
        const AlgorithmParams& fp = cfg.params;
        if (rule_opt->count()) mp.step_rule = fp.step_rule;
        if (a_opt->count()) mp.step_a = fp.step_a;
        if (b_opt->count()) mp.step_b = fp.step_b;
        if (step_opt->count()) mp.step = fp.step;
        if (mu_opt->count()) mp.consensus_depth = fp.consensus_depth;
        if (bgraph_opt->count()) mp.graph = fp.graph;
        if (smooth_opt->count()) mp.smoothing = fp.smoothing;
        if (col_opt->count()) mp.colored = fp.colored;
        if (w_opt->count()) mp.weights = fp.weights;
        if (workers_opt->count()) mp.workers = fp.workers;
        cfg = merged;
      } else if (run_problem.empty() || run_alg.empty()) {
        return fail("run needs an algorithm and --problem, or --config", 1);
      }
      if (!run_alg.empty()) cfg.algorithm = parse_algorithm(run_alg);
      if (!run_problem.empty()) cfg.problem = parse_problem(read_text(run_problem));
      if (!run_graph.empty()) cfg.problem.graph = parse_graph(read_text(run_graph));
      if (!run_trace.empty()) cfg.trace_path = run_trace;
      if (no_momentum) cfg.params.momentum = false;
      if (central) cfg.params.distributed = false;
      const RunResult res = run_experiment(cfg);
      for (const auto& w : res.warnings) std::cerr << "netopt: warning: " << w << "\n";
      emit(dump_json(summary_json(cfg, res)), run_summary);
      if (res.trace.status == RunStatus::Failed) return fail("run failed: " + res.note, 3);
      return 0;
    }
    if (*b) {
      const BenchTable t = bench_table(bench_id, bench_seed);
      if (!bench_csv.empty()) write_text(bench_csv, t.csv());
      emit(t.text(), bench_text);
      return 0;
    }
    if (*c) {
      std::vector<CompareEntry> entries;
      for (const auto& f : cmp_files) entries.push_back(entry_from_summary(parse_json(read_text(f), f), f));
      emit(dump_json(compare(entries).to_json()), cmp_out);
      return 0;
    }
  } catch (const Error& e) {
    return fail(e.what());
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  return 0;
}
