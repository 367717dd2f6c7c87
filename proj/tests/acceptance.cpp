// Acceptance suite: one test per criterion, each printing a single
// "[criterion N] PASS|FAIL" line with the measured values and the pinned
// tolerance. Reference values come from exact enumeration, the subset-DP and
// exhaustive SAT oracles, or closed-form rates.

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include <spikecsp/spikecsp.hpp>

using namespace spikecsp;
namespace fs = std::filesystem;

namespace tol {
constexpr double duty_cycle = 0.01;
constexpr std::uint64_t duty_cycles = 100000;
constexpr double sampling_tv = 0.02;
constexpr std::uint64_t sampling_changes = 1000000;
constexpr double motif_tv = 0.05;
constexpr std::uint64_t motif_changes = 1000000;
constexpr double spiking_vs_gibbs_tv = 0.04;
constexpr double translation_rel = 0.10;
constexpr std::uint64_t translation_events = 100000;
constexpr double balance_tv = 0.02;
constexpr double balance_residual = 1e-12;
constexpr double tsp_success = 0.80;
constexpr std::uint64_t tsp_changes = 1000000;
constexpr std::size_t tsp_runs = 20;
constexpr double jump_threshold = 15.0;
constexpr double sn_tail_min = 1e-3;
constexpr double bm_tail_max = 1e-4;
constexpr std::size_t compare_runs = 50;
constexpr std::uint64_t compare_changes = 100000;
constexpr double min_bin_count = 100.0;
constexpr double sat_success = 0.95;
constexpr std::uint64_t sat_changes = 1000000;
constexpr std::size_t sat_instances = 20;
constexpr double locking_gain = 0.2;
constexpr double delay_ratio = 2.0;
constexpr double ks_alpha = 0.01;
}  // namespace tol

namespace {

std::map<int, bool> g_results;

void report(int n, bool pass, const std::string& measured, const std::string& tolerance) {
  g_results[n] = pass;
  std::cout << "[criterion " << n << "] " << (pass ? "PASS" : "FAIL") << " measured " << measured << " tolerance "
            << tolerance << std::endl;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// The ten networks shared by criteria 2 and 4: n cycles through 2..5.
struct SamplingCase {
  Network net;
  Distribution exact, spiking, gibbs;
};

const std::vector<SamplingCase>& sampling_cases() {
  static const std::vector<SamplingCase> cases = [] {
    std::vector<SamplingCase> out(10);
    parallel_for(out.size(), [&](std::size_t i) {
      const std::size_t n = 2 + i % 4;
      auto& c = out[i];
      c.net = random_symmetric_network(n, derive_run_seed(1002, i));
      const auto model = energy_model_from_network(c.net);
      c.exact = exact_stationary(model);
      SimConfig sc;
      sc.max_state_changes = tol::sampling_changes;
      sc.seed = derive_run_seed(2002, i);
      c.spiking = empirical_distribution(run(c.net, sc).stream, first_neurons(n));
      GibbsConfig g;
      g.sim = sc;
      g.sim.seed = derive_run_seed(4004, i);
      c.gibbs = empirical_distribution(gibbs_run(model, g).stream, first_neurons(n));
    });
    return out;
  }();
  return cases;
}

CnfFormula sat_instance(std::size_t i) { return random_satisfiable_ksat(20, 86, derive_run_seed(99, i)); }

StatePredicate all_satisfied(const CompiledProblem& cp) {
  return [&cp](const std::vector<std::uint8_t>& x) {
    return satisfied_clauses(readout_values(x, cp), *cp.sat) == cp.sat->clauses.size();
  };
}

TspParams desk_tsp_params() {
  TspParams p;
  p.n_resting = 2;
  return p;
}

}  // namespace

TEST(Acceptance, C01_SingleNeuronLaw) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string detail;
  for (const double b : {-2.0, 0.0, 2.0}) {
    const double d = single_neuron_duty_cycle(b, tol::duty_cycles, derive_run_seed(1001, static_cast<std::uint64_t>(b + 2)));
    const double want = 1.0 / (1.0 + std::exp(-b));
    worst = std::max(worst, std::abs(d - want));
    detail += "b=" + num(b) + ":" + num(d) + "/" + num(want) + " ";
  }
  const double secs = seconds_since(t0);
  const bool pass = worst < tol::duty_cycle && secs < 10.0;
  report(1, pass, "max|duty-sigma(b)|=" + num(worst) + " (" + detail + ") runtime " + num(secs) + "s",
         "0.01 and <10s");
  EXPECT_TRUE(pass);
}

TEST(Acceptance, C02_NeuralSamplingExactness) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (const auto& c : sampling_cases()) worst = std::max(worst, divergence(c.spiking, c.exact).tv);
  const double secs = seconds_since(t0);
  const bool pass = worst < tol::sampling_tv && secs < 120.0;
  report(2, pass, "max TV over 10 networks=" + num(worst) + " runtime (with Gibbs runs) " + num(secs) + "s",
         "TV<0.02 and <120s");
  EXPECT_TRUE(pass);
}

TEST(Acceptance, C03_Modularity) {
  const double wta = motif_marginal_tv(false, tol::motif_changes, derive_run_seed(3003, 0));
  const double orm = motif_marginal_tv(true, tol::motif_changes, derive_run_seed(3003, 1));
  const bool pass = wta < tol::motif_tv && orm < tol::motif_tv;
  report(3, pass, "TV WTA=" + num(wta) + " TV OR=" + num(orm), "TV<0.05");
  EXPECT_TRUE(pass);
}

TEST(Acceptance, C04_GibbsEquivalence) {
  double worst_exact = 0.0, worst_pair = 0.0;
  for (const auto& c : sampling_cases()) {
    worst_exact = std::max(worst_exact, divergence(c.gibbs, c.exact).tv);
    worst_pair = std::max(worst_pair, divergence(c.gibbs, c.spiking).tv);
  }
  const bool pass = worst_exact < tol::sampling_tv && worst_pair < tol::spiking_vs_gibbs_tv;
  report(4, pass, "max TV(Gibbs,exact)=" + num(worst_exact) + " max TV(Gibbs,spiking)=" + num(worst_pair),
         "0.02 and 0.04");
  EXPECT_TRUE(pass);
}

TEST(Acceptance, C05_TranslationFactor) {
  double worst = 0.0;
  std::string detail;
  const double f0 = event_rate_pair(0.0, 0.010, 1.0).factor;
  for (const double u : {0.0, 1.0, 2.0}) {
    const auto r = measured_event_rates(u, tol::translation_events, derive_run_seed(5005, static_cast<std::uint64_t>(u)));
    const double f = event_rate_pair(u, 0.010, 1.0).factor;
    const double ratio = r.spiking / r.gibbs;
    worst = std::max(worst, std::abs(ratio / f - 1.0));
    detail += "u=" + num(u) + ":" + num(ratio) + "/" + num(f) + " ";
  }
  const bool pass = worst < tol::translation_rel && f0 == 200.0;
  report(5, pass, "max rel error=" + num(worst) + " (" + detail + ") F(0)=" + num(f0), "10%, F(0)=200");
  EXPECT_TRUE(pass);
}

TEST(Acceptance, C06_DetailedBalanceVariant) {
  double worst_tv = 0.0, worst_res = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    const std::size_t n = 2 + i % 3;
    const auto rep = detailed_balance_variant_check(random_symmetric_network(n, derive_run_seed(6006, i)),
                                                    tol::sampling_changes, derive_run_seed(6007, i));
    worst_tv = std::max(worst_tv, rep.div.tv);
    worst_res = std::max(worst_res, rep.max_residual);
  }
  const bool pass = worst_tv < tol::balance_tv && worst_res < tol::balance_residual;
  report(6, pass, "max TV=" + num(worst_tv) + " max flow residual=" + num(worst_res), "TV<0.02, residual<1e-12");
  EXPECT_TRUE(pass);
}

TEST(Acceptance, C07_CompilerCounts) {
  std::size_t checked = 0, wrong = 0;
  auto rng = make_rng(7007);
  std::uniform_int_distribution<std::size_t> city(3, 12), rest(0, 6), var(3, 30);
  for (int k = 0; k < 25; ++k) {
    const auto n = city(rng), r = rest(rng);
    TspParams p;
    p.n_resting = r;
    const auto cp = compile_tsp(random_euclidean_tsp(n, derive_run_seed(7008, k)), p);
    const NetworkCounts want{(n + 1) * (n + r), n * (n + r) * (2 * n + r - 2)};
    ++checked;
    wrong += cp.actual() == want ? 0 : 1;
  }
  for (int k = 0; k < 25; ++k) {
    const auto n = var(rng);
    const auto m = (n * 43) / 10;
    const auto f = random_ksat(n, m, derive_run_seed(7009, k));
    for (const bool tc : {false, true}) {
      const auto cp = compile_sat(f, SatParams{}, tc);
      const NetworkCounts want{3 * n + 2 * m + (tc ? 3 * m + 1 : 0), 4 * n + 13 * m + (tc ? 2 * n + 20 * m : 0)};
      ++checked;
      wrong += cp.actual() == want ? 0 : 1;
    }
  }
  const auto big = compile_tsp(random_euclidean_tsp(38, 7010), TspParams{});
  const auto sat = compile_sat(random_ksat(50, 218, 7011), SatParams{}, false);
  const bool pass = wrong == 0 && big.network.size() == 1755 && sat.network.size() == 586;
  report(7, pass,
         std::to_string(wrong) + "/" + std::to_string(checked) + " mismatches; TSP N=38 r=7: " +
             std::to_string(big.network.size()) + " neurons; SAT N=50 M=218: " + std::to_string(sat.network.size()) +
             " neurons",
         "exact, 1755 and 586");
  EXPECT_TRUE(pass);
}

TEST(Acceptance, C08_DeskScaleTsp) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto inst = random_euclidean_tsp(10, 1);
  const double opt = held_karp(inst).cost;
  const auto cp = compile_tsp(inst, desk_tsp_params());
  const auto pc = cp.network.principal_count();
  std::vector<int> found(tol::tsp_runs, 0), monotone(tol::tsp_runs, 1);
  parallel_for(tol::tsp_runs, [&](std::size_t i) {
    SimConfig c;
    c.max_state_changes = tol::tsp_changes;
    c.seed = derive_run_seed(8008, i);
    const auto r = run(cp.network, c);
    const auto curve = cumulative_performance(r.stream, tsp_evaluator(cp, opt), pc);
    for (std::size_t k = 1; k < curve.cumulative_min_cost.size(); ++k)
      if (curve.cumulative_min_cost[k] > curve.cumulative_min_cost[k - 1]) monotone[i] = 0;
    found[i] = !curve.cumulative_min_cost.empty() && curve.cumulative_min_cost.back() <= opt * (1 + 1e-9);
  });
  double hits = 0, mono = 0;
  for (std::size_t i = 0; i < tol::tsp_runs; ++i) hits += found[i], mono += monotone[i];
  const double frac = hits / tol::tsp_runs;
  const double secs = seconds_since(t0);
  const bool pass = frac >= tol::tsp_success && mono == tol::tsp_runs && secs < 300.0;
  report(8, pass,
         "optimal in " + num(hits) + "/20 runs (" + num(frac) + "), monotone curves " + num(mono) +
             "/20, optimum " + num(opt) + ", runtime " + num(secs) + "s",
         ">=0.80, all monotone, <300s");
  EXPECT_TRUE(pass);
}

TEST(Acceptance, C09_SpikingVersusBoltzmann) {
  const auto inst = random_euclidean_tsp(10, 1);
  const double opt = held_karp(inst).cost;
  const auto cp = symmetrize_tsp(compile_tsp(inst, desk_tsp_params()));
  const auto groups = cp.groups.size();
  struct Pair {
    std::vector<double> jumps_sn, jumps_bm;
    std::vector<double> und_sn, und_bm;
    double first_sn = 0, first_bm = 0;
  };
  std::vector<Pair> res(tol::compare_runs);
  const auto thr = [&](const std::vector<std::uint8_t>& x) {
    const auto ev = tour_cost_and_validity(readout_values(x, cp), inst);
    return ev.valid && ev.cost <= 1.1 * opt;
  };
  parallel_for(tol::compare_runs, [&](std::size_t i) {
    SimConfig c;
    c.max_state_changes = tol::compare_changes;
    c.seed = derive_run_seed(9009, i);
    const auto sn = run(cp.network, c);
    GibbsConfig g;
    g.sim = c;
    const auto bm = gibbs_run(cp.model, g);
    auto& p = res[i];
    p.jumps_sn = energy_jumps(sn.stream, cp.model);
    p.jumps_bm = energy_jumps(bm.stream, cp.model);
    p.und_sn = undefined_transition_histogram({&sn.stream}, cp);
    p.und_bm = undefined_transition_histogram({&bm.stream}, cp);
    const auto a = first_passage(sn.stream, thr), b = first_passage(bm.stream, thr);
    p.first_sn = a.changes ? static_cast<double>(*a.changes) : kInf;
    p.first_bm = b.changes ? static_cast<double>(*b.changes) : kInf;
  });
  double tail_sn = 0, n_sn = 0, tail_bm = 0, n_bm = 0;
  std::vector<double> h_sn(groups + 1, 0.0), h_bm(groups + 1, 0.0), f_sn, f_bm;
  for (const auto& p : res) {
    tail_sn += tail_fraction(p.jumps_sn, tol::jump_threshold) * static_cast<double>(p.jumps_sn.size());
    n_sn += static_cast<double>(p.jumps_sn.size());
    tail_bm += tail_fraction(p.jumps_bm, tol::jump_threshold) * static_cast<double>(p.jumps_bm.size());
    n_bm += static_cast<double>(p.jumps_bm.size());
    for (std::size_t k = 0; k <= groups; ++k) h_sn[k] += p.und_sn[k], h_bm[k] += p.und_bm[k];
    f_sn.push_back(p.first_sn);
    f_bm.push_back(p.first_bm);
  }
  const double ts = tail_sn / n_sn, tb = tail_bm / n_bm;
  const bool a = ts > tol::sn_tail_min && tb < tol::bm_tail_max;

  // (b): every bin N_undef >= 2 with enough counts in both samplers.
  const auto ratio = histogram_ratio(h_sn, h_bm);
  bool b = true;
  std::size_t bins = 0;
  std::string bdetail;
  for (std::size_t k = 2; k <= groups; ++k) {
    if (h_sn[k] < tol::min_bin_count || h_bm[k] < tol::min_bin_count) continue;
    ++bins;
    b &= ratio[k] > 1.0;
    bdetail += std::to_string(k) + ":" + num(ratio[k]) + " ";
  }
  b &= bins > 0;

  const double med_sn = censored_median(f_sn), med_bm = censored_median(f_bm);
  const bool c = med_sn < med_bm;
  const bool pass = a && b && c;
  report(9, pass,
         "(a) tail SN=" + num(ts) + " BM=" + num(tb) + (a ? " ok" : " fail") + "; (b) ratio by N_undef " + bdetail +
             (b ? "ok" : "fail") + "; (c) median changes to 110% SN=" + num(med_sn) + " BM=" + num(med_bm) +
             (c ? " ok" : " fail"),
         "(a) SN>1e-3, BM<1e-4; (b) ratio>1 for N_undef>=2 (bins with >=100 counts); (c) SN<BM");
  EXPECT_TRUE(a);
  EXPECT_TRUE(b);
  EXPECT_TRUE(c);
}

TEST(Acceptance, C10_DeskScaleSat) {
  const auto t0 = std::chrono::steady_clock::now();
  struct Out {
    bool verified = false;
    bool solved = false;
    std::optional<double> lock_on, lock_off;
  };
  std::vector<Out> out(tol::sat_instances);
  parallel_for(tol::sat_instances, [&](std::size_t i) {
    const auto f = sat_instance(i);
    out[i].verified = exhaustive_sat(f).satisfiable;
    for (const bool tc : {true, false}) {
      const auto cp = compile_sat(f, SatParams{}, tc);
      SimConfig c;
      c.max_state_changes = tol::sat_changes;
      c.seed = derive_run_seed(10010, i);
      const auto r = run(cp.network, c);
      const auto pred = all_satisfied(cp);
      if (tc) out[i].solved = first_passage(r.stream, pred).time.has_value();
      (tc ? out[i].lock_on : out[i].lock_off) = fraction_after_first(r.stream, pred);
    }
  });
  double verified = 0, solved = 0, on = 0, off = 0, n_on = 0, n_off = 0;
  for (const auto& o : out) {
    verified += o.verified;
    solved += o.solved;
    if (o.lock_on) on += *o.lock_on, ++n_on;
    if (o.lock_off) off += *o.lock_off, ++n_off;
  }
  const double frac = solved / tol::sat_instances;
  const double m_on = n_on ? on / n_on : 0.0, m_off = n_off ? off / n_off : 0.0;
  const double secs = seconds_since(t0);
  const bool pass = verified == tol::sat_instances && frac >= tol::sat_success && m_on - m_off >= tol::locking_gain &&
                    secs < 600.0;
  report(10, pass,
         "verified " + num(verified) + "/20, solved " + num(solved) + "/20 (" + num(frac) +
             "), time at 100% after first solution: control " + num(m_on) + " vs none " + num(m_off) + " (gain " +
             num(m_on - m_off) + "), runtime " + num(secs) + "s",
         ">=0.95 solved, gain>=0.2, <600s");
  EXPECT_TRUE(pass);
}

TEST(Acceptance, C11_DelayRobustness) {
  std::vector<double> t0, t1, t05, tg;
  const std::vector<DelayScheme> schemes{DelayScheme::uniform(0.0), DelayScheme::uniform(0.1 * kMicrosecond),
                                         DelayScheme::uniform(0.05 * kMicrosecond),
                                         DelayScheme::gaussian(0.05 * kMicrosecond, 0.01 * kMicrosecond, 0.0,
                                                               0.1 * kMicrosecond)};
  std::vector<std::vector<double>> times(schemes.size());
  for (std::size_t i = 0; i < tol::sat_instances; ++i) {
    const auto cp = compile_sat(sat_instance(i), SatParams{}, true);
    SimConfig stop;
    stop.max_state_changes = tol::sat_changes;
    // One run per instance; run index i keeps instances on distinct seeds.
    for (std::size_t s = 0; s < schemes.size(); ++s) {
      const auto sweep = delay_sweep(cp, all_satisfied(cp), {schemes[s]}, 1, derive_run_seed(11011, i), stop,
                                     derive_run_seed(11012, i));
      times[s].push_back(sweep[0].solve.times[0]);
    }
  }
  const double m0 = censored_median(times[0]), m1 = censored_median(times[1]);
  const double m05 = censored_median(times[2]), mg = censored_median(times[3]);
  const double ratio = m1 / m0;
  const auto ks = ks_two_sample(times[3], times[2]);
  const bool a = ratio <= tol::delay_ratio;
  const bool b = ks.p_value > tol::ks_alpha;
  report(11, a && b,
         "(a) median solve time 0.1us/0 = " + num(m1) + "/" + num(m0) + " = " + num(ratio) + (a ? " ok" : " fail") +
             "; (b) gaussian vs uniform 0.05us medians " + num(mg) + "/" + num(m05) + " KS D=" + num(ks.statistic) +
             " p=" + num(ks.p_value) + (b ? " ok" : " fail"),
         "(a) ratio<=2; (b) KS p>0.01");
  EXPECT_TRUE(a);
  EXPECT_TRUE(b);
}

TEST(Acceptance, C12_Determinism) {
  const auto root = fs::temp_directory_path() / "spikecsp_acceptance_c12";
  fs::remove_all(root);
  bool same = true;
  std::string detail;
  // Spiking SAT batch written twice through the manifest pipeline.
  std::vector<std::string> dirs{(root / "a").string(), (root / "b").string()};
  std::vector<std::string> files;
  for (const auto& d : dirs) {
    ExperimentConfig c;
    c.problem_path = SPIKECSP_SAMPLES "/rand20_86.cnf";
    c.kind = ProblemKind::sat;
    c.runs = 3;
    c.base_seed = 12012;
    c.max_state_changes = 50000;
    c.output_dir = d;
    const auto lp = load_problem(c);
    const auto b = run_batch(c, lp);
    write_manifest(d + "/manifest.jsonl", "solve-sat", c, b);
    std::ofstream m(d + "/metrics.csv");
    write_metrics_csv(b, m);
  }
  const auto slurp = [](const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream s;
    s << is.rdbuf();
    return s.str();
  };
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(dirs[0])) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dirs[0]);
    const auto other = fs::path(dirs[1]) / rel;
    ++compared;
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) {
      same = false;
      detail += " differs:" + rel.string();
    }
  }
  // Gibbs and delayed-spiking streams repeated in memory.
  const auto sym = symmetrize_tsp(compile_tsp(random_euclidean_tsp(6, 3), TspParams{}));
  GibbsConfig g;
  g.sim.max_state_changes = 20000;
  g.sim.seed = 12013;
  same &= gibbs_run(sym.model, g).stream.records == gibbs_run(sym.model, g).stream.records;
  const auto delayed = with_gaussian_delays(compile_sat(sat_instance(0), SatParams{}, true).network, 5e-8, 1e-8, 0.0,
                                            1e-7, 12014);
  SimConfig sc;
  sc.max_state_changes = 20000;
  sc.seed = 12015;
  same &= run(delayed, sc).stream.records == run(delayed, sc).stream.records;
  fs::remove_all(root);
  report(12, same && compared >= 5,
         std::to_string(compared) + " output files byte-identical across repeats; Gibbs and delayed streams identical" +
             detail,
         "bit-identical");
  EXPECT_TRUE(same);
}

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  const int rc = RUN_ALL_TESTS();
  std::size_t passed = 0;
  for (const auto& [n, ok] : g_results) passed += ok ? 1 : 0;
  std::cout << "acceptance summary: " << passed << "/" << g_results.size() << " criteria pass" << std::endl;
  return rc;
}
