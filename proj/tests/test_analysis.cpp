#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include <spikecsp/analysis.hpp>
#include <spikecsp/experiment.hpp>
#include <spikecsp/verification.hpp>

using namespace spikecsp;

namespace {

StateChangeStream toggles(std::size_t n_changes, double dt = 0.01) {
  StateChangeStream s;
  s.initial = {0};
  s.principal_count = 1;
  for (std::size_t i = 0; i < n_changes; ++i)
    s.records.push_back({dt * static_cast<double>(i + 1), 0, static_cast<std::uint8_t>((i + 1) % 2), 0.0});
  s.t_end = dt * static_cast<double>(n_changes + 1);
  return s;
}

/// Largest |n(+v) - n(-v)| / sqrt(n(+v) + n(-v)) over distinct jump sizes.
double worst_asymmetry(const std::vector<double>& jumps) {
  std::map<long long, std::pair<double, double>> by_size;
  for (const double d : jumps) {
    const auto key = std::llround(std::abs(d) * 1e9);
    if (key == 0) continue;
    (d > 0 ? by_size[key].first : by_size[key].second) += 1.0;
  }
  double worst = 0.0;
  for (const auto& [k, c] : by_size) {
    const double tot = c.first + c.second;
    if (tot < 50) continue;
    worst = std::max(worst, std::abs(c.first - c.second) / std::sqrt(tot));
  }
  return worst;
}

CompiledProblem small_sat() { return compile_sat(CnfFormula{3, {{1, 2, 3}, {-1, 2, -3}, {1, -2, 3}}}, SatParams{}, false); }

}  // namespace

TEST(EnergyJumps, SingleNeuronBiasOne) {
  Network net;
  net.add_neuron({1.0});
  SimConfig c;
  c.max_state_changes = 10001;
  c.seed = 3;
  const auto r = run(net, c);
  const auto j = energy_jumps(r.stream, energy_model_from_network(net));
  ASSERT_EQ(j.size(), 10001u);
  std::size_t up = 0, down = 0;
  for (const double d : j) {
    ASSERT_TRUE(d == -1.0 || d == 1.0);
    (d < 0 ? down : up) += 1;
  }
  EXPECT_EQ(down, 5001u);
  EXPECT_EQ(up, 5000u);
}

TEST(EnergyJumps, AuxiliaryRecordsSkippedAndSumTelescopes) {
  const auto cp = small_sat();
  SimConfig c;
  c.max_state_changes = 5000;
  c.seed = 4;
  const auto r = run(cp.network, c);
  const auto j = energy_jumps(r.stream, cp.model);
  std::size_t principal = 0;
  for (const auto& rec : r.stream.records) principal += rec.neuron < cp.model.size() ? 1 : 0;
  EXPECT_EQ(j.size(), principal);
  double sum = 0.0;
  for (const double d : j) sum += d;
  std::vector<std::uint8_t> x0(r.stream.initial.begin(), r.stream.initial.begin() + 6);
  std::vector<std::uint8_t> x1(r.final_state.x.begin(), r.final_state.x.begin() + 6);
  EXPECT_NEAR(sum, total_energy(cp.model, x1) - total_energy(cp.model, x0), 1e-9);
}

TEST(EnergyJumps, DetailedBalanceVariantSymmetric) {
  const auto net = random_symmetric_network(3, 71);
  SimConfig c;
  c.max_state_changes = 300000;
  c.seed = 5;
  c.off_transition = OffTransition::exponential;
  const auto r = run(net, c);
  EXPECT_LT(worst_asymmetry(energy_jumps(r.stream, energy_model_from_network(net))), 3.0);
}

TEST(EnergyJumps, StandardEngineNearSymmetric) {
  const auto net = random_symmetric_network(3, 72);
  SimConfig c;
  c.max_state_changes = 300000;
  c.seed = 6;
  const auto r = run(net, c);
  EXPECT_LT(worst_asymmetry(energy_jumps(r.stream, energy_model_from_network(net))), 3.0);
}

TEST(Histogram, BinningAndMerge) {
  Histogram h(-1.0, 1.0, 4);
  for (const double v : {-2.0, -1.0, -0.3, 0.0, 0.49, 0.5, 1.0}) h.add(v);
  EXPECT_EQ(h.underflow, 1.0);
  EXPECT_EQ(h.overflow, 1.0);
  EXPECT_EQ(h.counts, (std::vector<double>{1, 1, 2, 1}));
  EXPECT_DOUBLE_EQ(h.normalized()[2], 2.0 / 7.0);
  Histogram g(-1.0, 1.0, 4);
  g.add(0.75);
  h.merge(g);
  EXPECT_EQ(h.counts[3], 2.0);
  EXPECT_EQ(h.total, 8.0);
  EXPECT_THROW(h.merge(Histogram(-1.0, 1.0, 5)), std::invalid_argument);
  EXPECT_THROW(Histogram(1.0, 1.0, 3), std::invalid_argument);
}

TEST(Histogram, TailFraction) {
  EXPECT_DOUBLE_EQ(tail_fraction({-20.0, 1.0, 16.0, 15.0}, 15.0), 0.5);
  EXPECT_DOUBLE_EQ(tail_fraction({}, 15.0), 0.0);
}

TEST(HistogramRatio, SelfRatioIsOne) {
  const std::vector<double> h{3, 0, 5, 1};
  const auto r = histogram_ratio(h, h);
  EXPECT_DOUBLE_EQ(r[0], 1.0);
  EXPECT_TRUE(std::isnan(r[1]));
  EXPECT_DOUBLE_EQ(r[2], 1.0);
  EXPECT_DOUBLE_EQ(r[3], 1.0);
  EXPECT_DOUBLE_EQ(histogram_ratio({1, 3}, {2, 2})[1], 1.5);
}

TEST(UndefinedHistogram, AllDefinedTrajectoryIsPointMass) {
  const auto cp = small_sat();
  StateChangeStream s;
  s.initial.assign(cp.network.size(), 0);
  for (std::size_t v = 0; v < 3; ++v) s.initial[sat_principal(v, true)] = 1;
  // Toggle an auxiliary neuron and move variable 0 through no undefined state is
  // impossible, so only auxiliary changes plus a principal re-affirmation.
  s.records = {{0.1, 6, 1, 0.0}, {0.2, 6, 0, 0.0}};
  s.t_end = 1.0;
  auto h = undefined_transition_histogram({&s}, cp);
  EXPECT_EQ(h, (std::vector<double>{0, 0, 0, 0}));
  s.records.push_back({0.3, sat_principal(0, true), 1, 0.0});
  h = undefined_transition_histogram({&s}, cp);
  EXPECT_EQ(h, (std::vector<double>{1, 0, 0, 0}));
}

TEST(UndefinedHistogram, SilentStartCountsEveryVariable) {
  const auto cp = small_sat();
  SimConfig c;
  c.max_state_changes = 2000;
  c.seed = 9;
  const auto r = run(cp.network, c);
  EXPECT_EQ(count_undefined(readout_values(r.stream.initial, cp)), 3u);
  // The first principal change leaves one variable defined.
  StateChangeStream first = r.stream;
  std::size_t cut = 0;
  while (first.records[cut].neuron >= 6) ++cut;
  first.records.resize(cut + 1);
  const auto h = undefined_transition_histogram({&first}, cp);
  EXPECT_EQ(h, (std::vector<double>{0, 0, 1, 0}));
  double total = 0;
  for (const double v : undefined_transition_histogram({&r.stream}, cp)) total += v;
  EXPECT_EQ(total, static_cast<double>(r.principal_changes));
}

TEST(CumulativePerformance, ConstantTrajectoryIsFlat) {
  const auto cp = small_sat();
  StateChangeStream s;
  s.initial.assign(cp.network.size(), 0);
  for (std::size_t v = 0; v < 3; ++v) s.initial[sat_principal(v, true)] = 1;
  for (int i = 0; i < 5; ++i) s.records.push_back({0.1 * (i + 1), 6, static_cast<std::uint8_t>((i + 1) % 2), 0.0});
  s.t_end = 1.0;
  const auto c = cumulative_performance(s, sat_evaluator(cp), 6);
  ASSERT_EQ(c.cumulative_min_cost.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(c.cumulative_min_cost[i], 0.0);
    EXPECT_EQ(c.running_mean_performance[i], 1.0);
  }
}

TEST(CumulativePerformance, MinCostNonIncreasing) {
  const TspInstance inst = random_euclidean_tsp(5, 3);
  TspParams p;
  p.n_resting = 1;
  const auto cp = compile_tsp(inst, p);
  SimConfig c;
  c.max_state_changes = 20000;
  c.seed = 10;
  const auto r = run(cp.network, c);
  const auto curve = cumulative_performance(r.stream, tsp_evaluator(cp, held_karp(inst).cost), 30);
  for (std::size_t i = 1; i < curve.cumulative_min_cost.size(); ++i)
    EXPECT_LE(curve.cumulative_min_cost[i], curve.cumulative_min_cost[i - 1]);
  EXPECT_GE(curve.cumulative_min_cost.back(), held_karp(inst).cost - 1e-9);
  const auto avg = average_curves({curve, curve});
  EXPECT_EQ(avg.mean_performance, curve.running_mean_performance);
}

TEST(SolveTime, TrueAtStartAndNever) {
  auto s = toggles(10);
  const auto yes = solve_time_distribution({&s, &s}, [](const auto&) { return true; });
  EXPECT_EQ(yes.times, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(yes.median, 0.0);
  const auto no = solve_time_distribution({&s, &s}, [](const auto&) { return false; });
  EXPECT_EQ(no.censored, 2u);
  EXPECT_TRUE(std::isinf(no.median));
}

TEST(SolveTime, FirstPassageAndFractionAfter) {
  auto s = toggles(4);  // on at .01, off .02, on .03, off .04, end .05
  const auto on = [](const std::vector<std::uint8_t>& x) { return x[0] == 1; };
  const auto fp = first_passage(s, on);
  EXPECT_DOUBLE_EQ(*fp.time, 0.01);
  EXPECT_EQ(*fp.changes, 1u);
  EXPECT_NEAR(*fraction_after_first(s, on), 0.02 / 0.04, 1e-12);
  EXPECT_FALSE(fraction_after_first(s, [](const auto&) { return false; }).has_value());
}

TEST(SolveTime, CensoredMedian) {
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_DOUBLE_EQ(censored_median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(censored_median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_TRUE(std::isinf(censored_median({1.0, inf, inf, 2.0})));
  EXPECT_DOUBLE_EQ(censored_median({1.0, 2.0, inf}), 2.0);
}

TEST(Delays, UniformAndGaussian) {
  const auto cp = small_sat();
  const auto u = with_uniform_delays(cp.network, 1e-7);
  for (const auto& s : u.synapses()) EXPECT_EQ(s.delay, 1e-7);
  const auto g = with_gaussian_delays(cp.network, 5e-8, 1e-8, 0.0, 1e-7, 3);
  for (const auto& s : g.synapses()) {
    EXPECT_GE(s.delay, 0.0);
    EXPECT_LE(s.delay, 1e-7);
  }
  EXPECT_EQ(g.synapses(), with_gaussian_delays(cp.network, 5e-8, 1e-8, 0.0, 1e-7, 3).synapses());
  EXPECT_THROW(with_uniform_delays(cp.network, -1.0), std::invalid_argument);
}

TEST(DelaySweep, ZeroDelayReproducesBaseline) {
  const auto f = random_satisfiable_ksat(8, 30, 5);
  const auto cp = compile_sat(f, SatParams{}, false);
  const auto pred = [&cp](const std::vector<std::uint8_t>& x) {
    return satisfied_clauses(readout_values(x, cp), *cp.sat) == cp.sat->clauses.size();
  };
  SimConfig stop;
  stop.max_state_changes = 200000;
  const auto sweep = delay_sweep(cp, pred, {DelayScheme::uniform(0.0)}, 4, 11, stop);
  ASSERT_EQ(sweep.size(), 1u);
  for (std::size_t i = 0; i < 4; ++i) {
    SimConfig c = stop;
    c.seed = derive_run_seed(11, i);
    const auto r = run(cp.network, c);
    const auto fp = first_passage(r.stream, pred);
    ASSERT_TRUE(fp.time.has_value());
    EXPECT_EQ(sweep[0].solve.times[i], *fp.time);
  }
}

TEST(Ks, IdenticalAndDisjoint) {
  const std::vector<double> a{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto same = ks_two_sample(a, a);
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_EQ(same.p_value, 1.0);
  const std::vector<double> b{11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
  const auto far = ks_two_sample(a, b);
  EXPECT_EQ(far.statistic, 1.0);
  EXPECT_LT(far.p_value, 1e-3);
  EXPECT_THROW(ks_two_sample({}, a), std::invalid_argument);
}

TEST(Ks, KnownPValue) {
  // D = 0.25 at n = m = 20: asymptotic tail Q(sqrt(10) * 0.25 adjusted).
  std::vector<double> a, b;
  for (int i = 0; i < 20; ++i) {
    a.push_back(i);
    b.push_back(i + 5);
  }
  const auto r = ks_two_sample(a, b);
  EXPECT_DOUBLE_EQ(r.statistic, 0.25);
  const double ne = std::sqrt(10.0);
  EXPECT_NEAR(r.p_value, kolmogorov_q((ne + 0.12 + 0.11 / ne) * 0.25), 1e-15);
  EXPECT_NEAR(kolmogorov_q(1.0), 0.26999967167735456, 1e-12);
}
