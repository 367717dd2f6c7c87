#pragma once

// Reproducible batches: configuration, problem loading, parallel execution
// with per-run seeds, per-run metrics, JSONL manifests and CSV output.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "analysis.hpp"
#include "compilers.hpp"
#include "engine.hpp"
#include "gibbs.hpp"
#include "io.hpp"
#include "oracles.hpp"
#include "rng.hpp"
#include "trace.hpp"

namespace spikecsp {

enum class Sampler : std::uint8_t { spiking, gibbs };

inline std::string to_string(Sampler s) { return s == Sampler::spiking ? "spiking" : "gibbs"; }
inline std::string to_string(ProblemKind k) { return k == ProblemKind::tsp ? "tsp" : "sat"; }

inline Sampler sampler_from_string(const std::string& s) {
  if (s == "spiking") return Sampler::spiking;
  if (s == "gibbs") return Sampler::gibbs;
  throw std::invalid_argument("unknown sampler '" + s + "'");
}

inline ProblemKind kind_from_string(const std::string& s) {
  if (s == "tsp") return ProblemKind::tsp;
  if (s == "sat") return ProblemKind::sat;
  throw std::invalid_argument("unknown problem kind '" + s + "'");
}

/// Worker threads: SPIKECSP_THREADS if set, else the hardware concurrency.
inline std::size_t thread_count() {
  if (const char* env = std::getenv("SPIKECSP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw std::invalid_argument("SPIKECSP_THREADS must be a positive integer");
    return static_cast<std::size_t>(v);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

/// Calls fn(i) for i in [0, n) on a pool of workers. Results must be
/// written by index so that the outcome does not depend on scheduling.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         std::size_t threads = thread_count()) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct ExperimentConfig {
  std::string problem_path;
  ProblemKind kind = ProblemKind::sat;
  std::string preset = "planar";  // TSP parameter preset: planar | asymmetric
  nlohmann::json overrides = nlohmann::json::object();
  Sampler sampler = Sampler::spiking;
  bool symmetrize = false;  // TSP: replace WTA aux neurons by direct inhibition
  bool temperature_control = true;
  Rounding rounding = Rounding::none;
  std::size_t runs = 1;
  std::uint64_t base_seed = 1;
  std::optional<std::uint64_t> max_state_changes;
  std::optional<Seconds> max_time;
  double rho0 = 1.0;
  std::string output_dir;

  std::uint64_t run_seed(std::size_t i) const { return derive_run_seed(base_seed, i); }
  std::vector<std::uint64_t> seeds() const {
    std::vector<std::uint64_t> s(runs);
    for (std::size_t i = 0; i < runs; ++i) s[i] = run_seed(i);
    return s;
  }

  void validate() const {
    if (problem_path.empty()) throw std::invalid_argument("config: problem path is empty");
    if (!std::filesystem::exists(problem_path)) throw std::invalid_argument("config: file not found: " + problem_path);
    if (runs == 0) throw std::invalid_argument("config: runs must be positive");
    if (!max_state_changes && !max_time) throw std::invalid_argument("config: no finite stopping criterion");
    if (!(rho0 > 0)) throw std::invalid_argument("config: rho0 must be positive");
    if (sampler == Sampler::gibbs && kind == ProblemKind::tsp && !symmetrize)
      throw std::invalid_argument("config: the Gibbs sampler needs the symmetrized TSP network");
    if (sampler == Sampler::gibbs && kind == ProblemKind::sat)
      throw std::invalid_argument("config: the Gibbs sampler is only supported for TSP");
    if (preset != "planar" && preset != "asymmetric") throw std::invalid_argument("config: unknown preset " + preset);
  }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"problem", c.problem_path},
       {"kind", to_string(c.kind)},
       {"preset", c.preset},
       {"overrides", c.overrides},
       {"sampler", to_string(c.sampler)},
       {"symmetrize", c.symmetrize},
       {"temperature_control", c.temperature_control},
       {"rounding", c.rounding == Rounding::nearest ? "nearest" : "none"},
       {"runs", c.runs},
       {"base_seed", c.base_seed},
       {"seeds", c.seeds()},
       {"rho0", c.rho0}};
  j["max_state_changes"] = c.max_state_changes ? nlohmann::json(*c.max_state_changes) : nlohmann::json(nullptr);
  j["max_time"] = c.max_time ? nlohmann::json(*c.max_time) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c.problem_path = j.at("problem").get<std::string>();
  c.kind = kind_from_string(j.at("kind").get<std::string>());
  c.preset = j.value("preset", std::string("planar"));
  c.overrides = j.value("overrides", nlohmann::json::object());
  c.sampler = sampler_from_string(j.value("sampler", std::string("spiking")));
  c.symmetrize = j.value("symmetrize", false);
  c.temperature_control = j.value("temperature_control", true);
  c.rounding = j.value("rounding", std::string("none")) == "nearest" ? Rounding::nearest : Rounding::none;
  c.runs = j.at("runs").get<std::size_t>();
  c.base_seed = j.at("base_seed").get<std::uint64_t>();
  c.rho0 = j.value("rho0", 1.0);
  if (j.contains("seeds")) {
    const auto seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (seeds.size() != c.runs) throw std::invalid_argument("config: seed count does not match runs");
    if (seeds != c.seeds()) throw std::invalid_argument("config: seeds do not follow the derivation from base_seed");
  }
  if (j.contains("max_state_changes") && !j.at("max_state_changes").is_null())
    c.max_state_changes = j.at("max_state_changes").get<std::uint64_t>();
  if (j.contains("max_time") && !j.at("max_time").is_null()) c.max_time = j.at("max_time").get<double>();
}

namespace detail {

template <class T>
void override_field(const nlohmann::json& o, const char* key, T& field, std::vector<std::string>& seen) {
  if (o.contains(key)) {
    field = o.at(key).get<T>();
    seen.emplace_back(key);
  }
}

inline void reject_unknown(const nlohmann::json& o, const std::vector<std::string>& seen) {
  for (auto it = o.begin(); it != o.end(); ++it)
    if (std::find(seen.begin(), seen.end(), it.key()) == seen.end())
      throw std::invalid_argument("unknown parameter override '" + it.key() + "'");
}

}  // namespace detail

inline TspParams tsp_params_from(const std::string& preset, const nlohmann::json& o) {
  TspParams p = preset == "asymmetric" ? TspParams::asymmetric() : TspParams::planar();
  std::vector<std::string> seen;
  detail::override_field(o, "b_wta", p.b_wta, seen);
  detail::override_field(o, "b_p", p.b_p, seen);
  detail::override_field(o, "b_n", p.b_n, seen);
  detail::override_field(o, "b_inh", p.b_inh, seen);
  detail::override_field(o, "w_wta", p.w_wta, seen);
  detail::override_field(o, "w_exc", p.w_exc, seen);
  detail::override_field(o, "w_unique", p.w_unique, seen);
  detail::override_field(o, "w_scale", p.w_scale, seen);
  detail::override_field(o, "w_offset", p.w_offset, seen);
  detail::override_field(o, "n_resting", p.n_resting, seen);
  detail::override_field(o, "clamp_city", p.clamp_city, seen);
  detail::override_field(o, "clamp", p.clamp, seen);
  detail::reject_unknown(o, seen);
  return p;
}

inline SatParams sat_params_from(const nlohmann::json& o) {
  SatParams p;
  std::vector<std::string> seen;
  detail::override_field(o, "b_wta", p.b_wta, seen);
  detail::override_field(o, "b_inh", p.b_inh, seen);
  detail::override_field(o, "b_glob", p.b_glob, seen);
  detail::override_field(o, "B", p.B, seen);
  detail::override_field(o, "w_wta", p.w_wta, seen);
  detail::override_field(o, "w_exc", p.w_exc, seen);
  detail::override_field(o, "w_or1", p.w_or1, seen);
  detail::override_field(o, "w_or2", p.w_or2, seen);
  if (o.contains("w_glob")) p.w_glob = o.at("w_glob").get<double>(), seen.emplace_back("w_glob");
  if (o.contains("w_status_global"))
    p.w_status_global = o.at("w_status_global").get<double>(), seen.emplace_back("w_status_global");
  if (o.contains("w_ii_status")) p.w_ii_status = o.at("w_ii_status").get<double>(), seen.emplace_back("w_ii_status");
  detail::reject_unknown(o, seen);
  return p;
}

/// A compiled problem together with its exact reference solution, when the
/// instance is small enough for the oracles.
struct LoadedProblem {
  CompiledProblem cp;
  std::optional<double> optimum;  // TSP optimal cost
  std::optional<SatCount> sat_count;
};

inline LoadedProblem load_problem(const ExperimentConfig& c) {
  LoadedProblem lp;
  if (c.kind == ProblemKind::tsp) {
    auto inst = parse_tsplib_file(c.problem_path, c.rounding);
    if (inst.n <= 16) {
      const auto opt = held_karp(inst);
      inst.optimal_cost = opt.cost;
      lp.optimum = opt.cost;
    }
    lp.cp = compile_tsp(inst, tsp_params_from(c.preset, c.overrides));
    if (c.symmetrize) lp.cp = symmetrize_tsp(lp.cp);
  } else {
    const auto f = parse_dimacs_file(c.problem_path);
    if (f.n_vars <= 26) lp.sat_count = exhaustive_sat(f);
    lp.cp = compile_sat(f, sat_params_from(c.overrides), c.temperature_control);
  }
  return lp;
}

inline RunResult simulate(const CompiledProblem& cp, Sampler sampler, const SimConfig& sim, double rho0 = 1.0) {
  if (sampler == Sampler::spiking) return run(cp.network, sim);
  GibbsConfig g;
  g.rho0 = rho0;
  g.sim = sim;
  return gibbs_run(cp.model, g);
}

inline SimConfig sim_config(const ExperimentConfig& c, std::size_t run_index) {
  SimConfig s;
  s.max_state_changes = c.max_state_changes;
  s.max_time = c.max_time;
  s.seed = c.run_seed(run_index);
  return s;
}

/// Ordered (name, value) pairs.
using Metrics = std::vector<std::pair<std::string, double>>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double opt_or_inf(const std::optional<double>& v) { return v ? *v : kInf; }

/// Per-run metrics, a pure function of the stream and the problem.
inline Metrics run_metrics(const LoadedProblem& lp, const StateChangeStream& s) {
  const auto& cp = lp.cp;
  const auto pc = cp.network.principal_count();
  Metrics m;
  m.emplace_back("state_changes", static_cast<double>(s.records.size()));
  m.emplace_back("simulated_time", s.t_end - s.t_start);
  if (cp.kind == ProblemKind::tsp) {
    const double opt = lp.optimum ? *lp.optimum : 0.0;
    const auto curve = cumulative_performance(s, tsp_evaluator(cp, opt), pc);
    double best = kInf;
    std::optional<double> at_best, first_valid, within10;
    for (std::size_t i = 0; i < curve.cumulative_min_cost.size(); ++i) {
      const double c = curve.cumulative_min_cost[i];
      if (std::isfinite(c) && !first_valid) first_valid = static_cast<double>(i + 1);
      if (c < best) {
        best = c;
        at_best = static_cast<double>(i + 1);
      }
      if (lp.optimum && !within10 && c <= 1.1 * *lp.optimum) within10 = static_cast<double>(i + 1);
    }
    m.emplace_back("best_cost", best);
    m.emplace_back("changes_to_first_valid", opt_or_inf(first_valid));
    m.emplace_back("changes_to_best", opt_or_inf(at_best));
    if (lp.optimum) {
      m.emplace_back("optimum", *lp.optimum);
      m.emplace_back("changes_to_110pct", opt_or_inf(within10));
      m.emplace_back("found_optimum", best <= *lp.optimum * (1 + 1e-9) ? 1.0 : 0.0);
    }
    m.emplace_back("mean_performance",
                   curve.running_mean_performance.empty() ? 0.0 : curve.running_mean_performance.back());
  } else {
    const auto& f = *cp.sat;
    const StatePredicate solved = [&](const std::vector<std::uint8_t>& x) {
      return satisfied_clauses(readout_values(x, cp), f) == f.clauses.size();
    };
    const auto fp = first_passage(s, solved);
    const auto frac = fraction_after_first(s, solved);
    m.emplace_back("solve_time", opt_or_inf(fp.time));
    m.emplace_back("solve_changes", fp.changes ? static_cast<double>(*fp.changes) : kInf);
    m.emplace_back("fraction_after_first", frac ? *frac : std::numeric_limits<double>::quiet_NaN());
    double best = 0.0;
    replay(s, [&](const StateChange& r, const std::vector<std::uint8_t>& x) {
      if (r.neuron < pc) best = std::max(best, sat_performance(readout_values(x, cp), f));
    });
    m.emplace_back("best_performance", best);
  }
  return m;
}

/// Metric values as stored in manifests: 17 significant digits, with inf
/// and nan spelled out, so equal doubles give equal strings.
inline std::string metric_string(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt17(v);
}

inline nlohmann::json metrics_json(const Metrics& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : m) j[k] = metric_string(v);
  return j;
}

struct RunRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string trace;  // path relative to the manifest directory
  Metrics metrics;
};

struct BatchResult {
  std::vector<RunRecord> runs;
  std::vector<StateChangeStream> streams;  // kept in memory for aggregate metrics
};

inline std::string trace_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "traces/run_%04zu.bin", i);
  return buf;
}

/// Runs all batch members in parallel. Traces are written per run and the
/// manifest is assembled in run-index order.
inline BatchResult run_batch(const ExperimentConfig& c, const LoadedProblem& lp, bool keep_streams = true) {
  BatchResult b;
  b.runs.resize(c.runs);
  b.streams.resize(c.runs);
  const bool write = !c.output_dir.empty();
  if (write) std::filesystem::create_directories(std::filesystem::path(c.output_dir) / "traces");
  parallel_for(c.runs, [&](std::size_t i) {
    auto res = simulate(lp.cp, c.sampler, sim_config(c, i), c.rho0);
    auto& rr = b.runs[i];
    rr.index = i;
    rr.seed = c.run_seed(i);
    rr.metrics = run_metrics(lp, res.stream);
    if (write) {
      rr.trace = trace_name(i);
      save_trace(res.stream, (std::filesystem::path(c.output_dir) / rr.trace).string());
    }
    if (keep_streams) b.streams[i] = std::move(res.stream);
  });
  return b;
}

inline void write_manifest(const std::string& path, const std::string& command, const ExperimentConfig& c,
                           const BatchResult& b) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  nlohmann::json head{{"type", "header"}, {"command", command}, {"config", c}};
  os << head.dump() << '\n';
  for (const auto& r : b.runs) {
    nlohmann::json line{{"type", "run"}, {"run", r.index}, {"seed", r.seed}, {"trace", r.trace},
                        {"metrics", metrics_json(r.metrics)}};
    os << line.dump() << '\n';
  }
}

struct Manifest {
  std::string command;
  ExperimentConfig config;
  std::vector<nlohmann::json> runs;
};

inline Manifest read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  Manifest m;
  std::string line;
  bool have_header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    if (j.at("type") == "header") {
      m.command = j.at("command").get<std::string>();
      m.config = j.at("config").get<ExperimentConfig>();
      have_header = true;
    } else {
      m.runs.push_back(std::move(j));
    }
  }
  if (!have_header) throw std::runtime_error("manifest: missing header");
  if (m.runs.size() != m.config.runs) throw std::runtime_error("manifest: run count does not match header");
  return m;
}

/// Metrics recomputed from stored traces, compared string-for-string with
/// the manifest.
struct ReplayCheck {
  std::size_t runs = 0;
  std::size_t mismatches = 0;
  std::vector<std::string> details;
  bool ok() const { return mismatches == 0; }
};

inline ReplayCheck analyze_manifest(const std::string& path, bool resimulate = false) {
  const auto m = read_manifest(path);
  const auto dir = std::filesystem::path(path).parent_path();
  auto cfg = m.config;
  if (std::filesystem::path(cfg.problem_path).is_relative() && !std::filesystem::exists(cfg.problem_path))
    cfg.problem_path = (dir / cfg.problem_path).string();
  const auto lp = load_problem(cfg);
  ReplayCheck rc;
  for (const auto& r : m.runs) {
    const auto i = r.at("run").get<std::size_t>();
    if (r.at("seed").get<std::uint64_t>() != cfg.run_seed(i)) {
      ++rc.mismatches;
      rc.details.push_back("run " + std::to_string(i) + ": seed does not follow the derivation");
    }
    const auto trace = load_trace((dir / r.at("trace").get<std::string>()).string());
    const auto recomputed = metrics_json(run_metrics(lp, trace));
    if (recomputed != r.at("metrics")) {
      ++rc.mismatches;
      rc.details.push_back("run " + std::to_string(i) + ": metrics differ");
    }
    if (resimulate) {
      const auto again = simulate(lp.cp, cfg.sampler, sim_config(cfg, i), cfg.rho0);
      if (!(again.stream.records == trace.records) || again.stream.initial != trace.initial ||
          again.stream.t_end != trace.t_end) {
        ++rc.mismatches;
        rc.details.push_back("run " + std::to_string(i) + ": re-simulated trace differs");
      }
    }
    ++rc.runs;
  }
  return rc;
}

inline void write_metrics_csv(const BatchResult& b, std::ostream& os) {
  if (b.runs.empty()) return;
  os << "run,seed";
  for (const auto& [k, v] : b.runs.front().metrics) os << ',' << k;
  os << '\n';
  for (const auto& r : b.runs) {
    os << r.index << ',' << r.seed;
    for (const auto& [k, v] : r.metrics) os << ',' << metric_string(v);
    os << '\n';
  }
}

/// Averaged curves, sampled every `stride` state changes.
inline void write_curve_csv(const AveragedCurve& a, std::ostream& os, std::size_t stride = 1) {
  os << "state_change,mean_min_cost,valid_fraction,mean_performance,stderr_performance\n";
  stride = std::max<std::size_t>(1, stride);
  for (std::size_t i = 0; i < a.mean_min_cost.size(); i += stride)
    os << i + 1 << ',' << metric_string(a.mean_min_cost[i]) << ',' << metric_string(a.valid_fraction[i]) << ','
       << metric_string(a.mean_performance[i]) << ',' << metric_string(a.stderr_performance[i]) << '\n';
}

inline void write_histogram_csv(const Histogram& h, std::ostream& os) {
  os << "bin_lo,bin_hi,count,fraction\n";
  const double t = h.total > 0 ? h.total : 1.0;
  os << "-inf," << metric_string(h.lo) << ',' << metric_string(h.underflow) << ',' << metric_string(h.underflow / t)
     << '\n';
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    os << metric_string(h.edge(i)) << ',' << metric_string(h.edge(i + 1)) << ',' << metric_string(h.counts[i]) << ','
       << metric_string(h.counts[i] / t) << '\n';
  os << metric_string(h.hi) << ",inf," << metric_string(h.overflow) << ',' << metric_string(h.overflow / t) << '\n';
}

// Delay sweeps.

struct DelayScheme {
  enum class Kind { uniform, gaussian } kind = Kind::uniform;
  Seconds value = 0.0;  // uniform delay, or Gaussian mean
  Seconds sigma = 0.0;
  Seconds lo = 0.0, hi = 0.0;
  std::string label;

  static DelayScheme uniform(Seconds d) { return {Kind::uniform, d, 0.0, 0.0, 0.0, "uniform " + fmt17(d)}; }
  static DelayScheme gaussian(Seconds mu, Seconds sigma, Seconds lo, Seconds hi) {
    return {Kind::gaussian, mu, sigma, lo, hi, "gaussian " + fmt17(mu) + " " + fmt17(sigma)};
  }

  Network apply(const Network& net, std::uint64_t seed) const {
    if (kind == Kind::uniform) return with_uniform_delays(net, value);
    return with_gaussian_delays(net, value, sigma, lo, hi, seed);
  }
};

struct DelaySummary {
  DelayScheme scheme;
  SolveTimeDistribution solve;
};

/// Solve-time distributions per delay scheme. Run i uses seed
/// derive_run_seed(base_seed, i) for the dynamics and, for Gaussian
/// schemes, derive_run_seed(delay_seed, i) for the delays.
inline std::vector<DelaySummary> delay_sweep(const CompiledProblem& cp, const StatePredicate& pred,
                                             const std::vector<DelayScheme>& schemes, std::size_t runs,
                                             std::uint64_t base_seed, const SimConfig& stop,
                                             std::uint64_t delay_seed = 7) {
  std::vector<DelaySummary> out;
  const auto pc = cp.network.principal_count();
  for (const auto& sc : schemes) {
    std::vector<FirstPassage> fp(runs);
    parallel_for(runs, [&](std::size_t i) {
      const auto net = sc.apply(cp.network, derive_run_seed(delay_seed, i));
      SimConfig cfg = stop;
      cfg.seed = derive_run_seed(base_seed, i);
      cfg.record = RecordMode::counts_only;
      std::uint64_t changes = 0;
      FirstPassage hit;
      SpikingSimulator sim(net);
      NetworkState init{0.0, std::vector<std::uint8_t>(net.size(), 0)};
      sim.run(cfg, init, [&](const StateChange& r, const std::vector<std::uint8_t>& x) {
        ++changes;
        if (r.neuron < pc && pred(x)) {
          hit.time = r.time;
          hit.changes = changes;
          return false;
        }
        return true;
      });
      fp[i] = hit;
    });
    out.push_back({sc, solve_time_distribution(fp)});
  }
  return out;
}

}  // namespace spikecsp
