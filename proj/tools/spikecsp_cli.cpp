// spikecsp: solve TSP and SAT instances with stochastic spiking networks,
// compare against Gibbs sampling, verify the sampler and replay manifests.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <spikecsp/spikecsp.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spikecsp;

namespace {

struct CommonOptions {
  std::size_t runs = 1;
  std::uint64_t seed = 1;
  std::uint64_t max_changes = 0;
  double max_time = 0.0;
  std::string out = "spikecsp_out";
  std::string params;
  std::size_t curve_stride = 100;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--runs", o.runs, "Number of runs")->check(CLI::PositiveNumber);
  app->add_option("--seed", o.seed, "Base seed; run i uses a seed derived from (seed, i)");
  app->add_option("--max-changes", o.max_changes, "Stop each run after this many state changes");
  app->add_option("--max-time", o.max_time, "Stop each run at this simulated time in seconds");
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--params", o.params, "Parameter preset name or JSON file of overrides");
  app->add_option("--curve-stride", o.curve_stride, "Write every n-th point of averaged curves");
}

void apply_common(const CommonOptions& o, ExperimentConfig& c) {
  c.runs = o.runs;
  c.base_seed = o.seed;
  if (o.max_changes > 0) c.max_state_changes = o.max_changes;
  if (o.max_time > 0) c.max_time = o.max_time;
  if (!c.max_state_changes && !c.max_time) c.max_state_changes = 100000;
  c.output_dir = o.out;
  if (o.params.empty()) return;
  if (o.params == "planar" || o.params == "asymmetric") {
    c.preset = o.params;
    return;
  }
  std::ifstream is(o.params);
  if (!is) throw std::invalid_argument("cannot open parameter file " + o.params);
  auto j = json::parse(is);
  if (j.contains("preset")) {
    c.preset = j.at("preset").get<std::string>();
    j.erase("preset");
  }
  c.overrides = j;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  const auto path = (fs::path(dir) / name).string();
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  return os;
}

void write_json_file(const std::string& dir, const std::string& name, const json& j) {
  auto os = open_out(dir, name);
  os << j.dump(2) << '\n';
}

std::vector<PerformanceCurve> curves_of(const LoadedProblem& lp, const BatchResult& b) {
  const auto eval = lp.cp.kind == ProblemKind::tsp ? tsp_evaluator(lp.cp, lp.optimum ? *lp.optimum : 0.0)
                                                   : sat_evaluator(lp.cp);
  std::vector<PerformanceCurve> out;
  for (const auto& s : b.streams) out.push_back(cumulative_performance(s, eval, lp.cp.network.principal_count()));
  return out;
}

/// City order of a tour readout, collapsing consecutive repeats.
json tour_order(const std::vector<int>& values) {
  json order = json::array();
  for (std::size_t s = 0; s < values.size(); ++s)
    if (s == 0 || values[s] != values[s - 1]) order.push_back(values[s]);
  if (order.size() > 1 && order.front() == order.back()) order.erase(order.end() - 1);
  return order;
}

json summary_of(const BatchResult& b) {
  json runs = json::array();
  for (const auto& r : b.runs) runs.push_back({{"run", r.index}, {"seed", r.seed}, {"metrics", metrics_json(r.metrics)}});
  return runs;
}

int cmd_solve_tsp(const std::string& file, const CommonOptions& o, const std::string& rounding, bool symmetrize,
                  const std::string& sampler) {
  ExperimentConfig c;
  c.problem_path = file;
  c.kind = ProblemKind::tsp;
  c.rounding = rounding == "nearest" ? Rounding::nearest : Rounding::none;
  c.symmetrize = symmetrize;
  c.sampler = sampler_from_string(sampler);
  apply_common(o, c);
  c.validate();
  const auto lp = load_problem(c);
  const auto b = run_batch(c, lp);
  write_manifest((fs::path(c.output_dir) / "manifest.jsonl").string(), "solve-tsp", c, b);
  {
    auto os = open_out(c.output_dir, "metrics.csv");
    write_metrics_csv(b, os);
  }
  {
    auto os = open_out(c.output_dir, "curve.csv");
    write_curve_csv(average_curves(curves_of(lp, b)), os, o.curve_stride);
  }
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_values;
  std::size_t best_run = 0;
  for (std::size_t i = 0; i < b.streams.size(); ++i)
    replay(b.streams[i], [&](const StateChange& r, const std::vector<std::uint8_t>& x) {
      if (r.neuron >= lp.cp.network.principal_count()) return;
      const auto v = readout_tour(x, lp.cp);
      const auto ev = tour_cost_and_validity(v, *lp.cp.tsp);
      if (ev.valid && ev.cost < best) {
        best = ev.cost;
        best_values = v;
        best_run = i;
      }
    });
  json result{{"instance", file}, {"cities", lp.cp.tsp->n}, {"found_valid_tour", !best_values.empty()}};
  if (!best_values.empty()) {
    result["best_cost"] = fmt17(best);
    result["best_run"] = best_run;
    result["step_values"] = best_values;
    result["tour"] = tour_order(best_values);
  }
  if (lp.optimum) result["optimum"] = fmt17(*lp.optimum);
  write_json_file(c.output_dir, "best_tour.json", result);
  std::cout << result.dump(2) << '\n';
  return 0;
}

int cmd_solve_sat(const std::string& file, const CommonOptions& o, const std::string& temp_control) {
  ExperimentConfig c;
  c.problem_path = file;
  c.kind = ProblemKind::sat;
  if (temp_control != "on" && temp_control != "off") throw std::invalid_argument("--temp-control must be on or off");
  c.temperature_control = temp_control == "on";
  apply_common(o, c);
  c.validate();
  const auto lp = load_problem(c);
  const auto b = run_batch(c, lp);
  write_manifest((fs::path(c.output_dir) / "manifest.jsonl").string(), "solve-sat", c, b);
  {
    auto os = open_out(c.output_dir, "metrics.csv");
    write_metrics_csv(b, os);
  }
  {
    auto os = open_out(c.output_dir, "satisfaction_curve.csv");
    write_curve_csv(average_curves(curves_of(lp, b)), os, o.curve_stride);
  }
  const auto& f = *lp.cp.sat;
  json result{{"instance", file}, {"variables", f.n_vars}, {"clauses", f.clauses.size()},
              {"temperature_control", c.temperature_control}};
  std::vector<double> times;
  std::optional<std::vector<int>> assignment;
  std::size_t solved = 0;
  for (std::size_t i = 0; i < b.streams.size(); ++i) {
    const auto fp = first_passage(b.streams[i], [&](const std::vector<std::uint8_t>& x) {
      return satisfied_clauses(readout_values(x, lp.cp), f) == f.clauses.size();
    });
    times.push_back(fp.time ? *fp.time : std::numeric_limits<double>::infinity());
    if (!fp.time) continue;
    ++solved;
    if (!assignment) {
      std::vector<std::uint8_t> x = b.streams[i].initial;
      for (std::size_t k = 0; k < *fp.changes; ++k) x[b.streams[i].records[k].neuron] = b.streams[i].records[k].value;
      assignment = readout_assignment(x, lp.cp);
      result["assignment_run"] = i;
    }
  }
  result["runs_solved"] = solved;
  result["runs"] = c.runs;
  result["median_solve_time"] = metric_string(censored_median(times));
  if (assignment) {
    // Variables left undefined by the readout are reported as false.
    json lits = json::array();
    std::vector<int> full(assignment->size());
    std::size_t undefined = 0;
    for (std::size_t v = 0; v < assignment->size(); ++v) {
      undefined += (*assignment)[v] == kUndefined ? 1 : 0;
      full[v] = (*assignment)[v] == 1 ? 1 : 0;
      lits.push_back(full[v] ? static_cast<int>(v + 1) : -static_cast<int>(v + 1));
    }
    result["assignment"] = lits;
    result["undefined_in_readout"] = undefined;
    result["assignment_satisfies_formula"] = satisfied_clauses(full, f) == f.clauses.size();
  }
  if (lp.sat_count) {
    result["oracle_satisfiable"] = lp.sat_count->satisfiable;
    result["oracle_solution_count"] = lp.sat_count->count;
  }
  write_json_file(c.output_dir, "result.json", result);
  std::cout << result.dump(2) << '\n';
  return 0;
}

int cmd_compare(const std::string& file, const CommonOptions& o, const std::string& samplers,
                const std::string& rounding, double jump_range, std::size_t jump_bins) {
  std::vector<Sampler> list;
  std::stringstream ss(samplers);
  for (std::string s; std::getline(ss, s, ',');) list.push_back(sampler_from_string(s));
  if (list.empty()) throw std::invalid_argument("--samplers is empty");
  json summary = json::object();
  std::vector<std::vector<double>> undefined;
  for (const auto smp : list) {
    ExperimentConfig c;
    c.problem_path = file;
    c.kind = ProblemKind::tsp;
    c.symmetrize = true;
    c.rounding = rounding == "nearest" ? Rounding::nearest : Rounding::none;
    c.sampler = smp;
    apply_common(o, c);
    c.output_dir = (fs::path(o.out) / to_string(smp)).string();
    c.validate();
    const auto lp = load_problem(c);
    const auto b = run_batch(c, lp);
    write_manifest((fs::path(c.output_dir) / "manifest.jsonl").string(), "compare", c, b);
    std::vector<const StateChangeStream*> batch;
    for (const auto& s : b.streams) batch.push_back(&s);
    const auto h = energy_jump_histogram(batch, lp.cp.model, -jump_range, jump_range, jump_bins);
    {
      auto os = open_out(o.out, "energy_jumps_" + to_string(smp) + ".csv");
      write_histogram_csv(h, os);
    }
    undefined.push_back(undefined_transition_histogram(batch, lp.cp));
    {
      auto os = open_out(o.out, "undefined_" + to_string(smp) + ".csv");
      os << "n_undefined,count,fraction\n";
      const auto nrm = normalize(undefined.back());
      for (std::size_t i = 0; i < nrm.size(); ++i)
        os << i << ',' << metric_string(undefined.back()[i]) << ',' << metric_string(nrm[i]) << '\n';
    }
    {
      auto os = open_out(o.out, "curve_" + to_string(smp) + ".csv");
      write_curve_csv(average_curves(curves_of(lp, b)), os, o.curve_stride);
    }
    std::vector<double> jumps;
    for (const auto* s : batch)
      for (const double d : energy_jumps(*s, lp.cp.model)) jumps.push_back(d);
    std::vector<double> to110;
    for (const auto& r : b.runs)
      for (const auto& [k, v] : r.metrics)
        if (k == "changes_to_110pct") to110.push_back(v);
    summary[to_string(smp)] = {{"tail_fraction_abs_dE_gt_15", metric_string(tail_fraction(jumps, 15.0))},
                               {"median_changes_to_110pct", metric_string(censored_median(to110))},
                               {"runs", summary_of(b)}};
  }
  if (list.size() == 2) {
    const auto ratio = histogram_ratio(undefined[0], undefined[1]);
    auto os = open_out(o.out, "undefined_ratio.csv");
    os << "n_undefined,ratio_" << to_string(list[0]) << "_over_" << to_string(list[1]) << '\n';
    for (std::size_t i = 0; i < ratio.size(); ++i) os << i << ',' << metric_string(ratio[i]) << '\n';
  }
  write_json_file(o.out, "summary.json", summary);
  json brief = json::object();
  for (auto it = summary.begin(); it != summary.end(); ++it) {
    brief[it.key()] = it.value();
    brief[it.key()].erase("runs");
  }
  std::cout << brief.dump(2) << '\n';
  return 0;
}

int cmd_verify(double scale, std::uint64_t seed) {
  const auto rs = run_verification(scale, seed);
  const bool ok = print_verification(rs, std::cout);
  std::cout << (ok ? "all checks passed\n" : "some checks failed\n");
  return ok ? 0 : 1;
}

int cmd_analyze(const std::string& manifest, bool resimulate) {
  const auto rc = analyze_manifest(manifest, resimulate);
  json out{{"manifest", manifest}, {"runs", rc.runs}, {"mismatches", rc.mismatches}, {"details", rc.details},
           {"reproduced", rc.ok()}};
  std::cout << out.dump(2) << '\n';
  if (!rc.ok()) {
    std::cerr << json{{"error", "metrics not reproduced"}, {"mismatches", rc.mismatches}}.dump() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constraint solving with stochastic spiking networks"};
  app.require_subcommand(1);

  CommonOptions tsp_o, sat_o, cmp_o;
  std::string tsp_file, sat_file, cmp_file, manifest, rounding = "none", sampler = "spiking", temp = "on",
                                                      samplers = "spiking,gibbs";
  bool symmetrize = false, resimulate = false;
  double verify_scale = 1.0, jump_range = 60.0;
  std::uint64_t verify_seed = 2024;
  std::size_t jump_bins = 120;

  auto* tsp = app.add_subcommand("solve-tsp", "Solve a TSPLIB instance");
  tsp->add_option("file", tsp_file, "TSPLIB file (EUC_2D or EXPLICIT FULL_MATRIX)")->required();
  tsp->add_option("--rounding", rounding, "EUC_2D distance rounding: none | nearest");
  tsp->add_flag("--symmetrize", symmetrize, "Replace WTA auxiliary neurons by direct inhibition");
  tsp->add_option("--sampler", sampler, "spiking | gibbs (gibbs needs --symmetrize)");
  add_common(tsp, tsp_o);

  auto* sat = app.add_subcommand("solve-sat", "Solve a DIMACS CNF instance");
  sat->add_option("file", sat_file, "DIMACS CNF file")->required();
  sat->add_option("--temp-control", temp, "Internal temperature control: on | off");
  add_common(sat, sat_o);

  auto* cmp = app.add_subcommand("compare", "Paired spiking and Gibbs batches on a symmetrized TSP network");
  cmp->add_option("file", cmp_file, "TSPLIB file")->required();
  cmp->add_option("--samplers", samplers, "Comma-separated samplers");
  cmp->add_option("--rounding", rounding, "EUC_2D distance rounding: none | nearest");
  cmp->add_option("--jump-range", jump_range, "Energy-jump histogram covers [-range, range)");
  cmp->add_option("--jump-bins", jump_bins, "Energy-jump histogram bin count");
  add_common(cmp, cmp_o);

  auto* ver = app.add_subcommand("verify", "Run the exact-enumeration checks");
  ver->add_option("--scale", verify_scale, "Multiply every simulation budget");
  ver->add_option("--seed", verify_seed, "Base seed");

  auto* ana = app.add_subcommand("analyze", "Recompute metrics from a manifest's stored traces");
  ana->add_option("manifest", manifest, "manifest.jsonl")->required();
  ana->add_flag("--resimulate", resimulate, "Also re-run each simulation and compare traces");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << json{{"error", e.what()}, {"type", "usage"}}.dump() << '\n';
    return 2;
  }

  try {
    if (*tsp) return cmd_solve_tsp(tsp_file, tsp_o, rounding, symmetrize, sampler);
    if (*sat) return cmd_solve_sat(sat_file, sat_o, temp);
    if (*cmp) return cmd_compare(cmp_file, cmp_o, samplers, rounding, jump_range, jump_bins);
    if (*ver) return cmd_verify(verify_scale, verify_seed);
    if (*ana) return cmd_analyze(manifest, resimulate);
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}, {"type", "runtime"}}.dump() << '\n';
    return 1;
  }
  return 0;
}
