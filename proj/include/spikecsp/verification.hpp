#pragma once

// Quick exact-enumeration checks behind `spikecsp verify`: single-neuron
// law, neural sampling on small networks, motif modularity, Gibbs
// equivalence, the translation factor, the detailed-balance variant and the
// compiler count formulas.

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "compilers.hpp"
#include "detailed_balance.hpp"
#include "energy.hpp"
#include "engine.hpp"
#include "gibbs.hpp"
#include "io.hpp"
#include "motifs.hpp"
#include "oracles.hpp"
#include "problems.hpp"
#include "rng.hpp"

namespace spikecsp {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

/// A network of principal neurons only with symmetric reciprocal weights,
/// biases and weights uniform in [-range, range].
inline Network random_symmetric_network(std::size_t n, std::uint64_t seed, double range = 2.0) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> u(-range, range);
  Network net;
  for (std::size_t k = 0; k < n; ++k) net.add_neuron({u(rng)});
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = k + 1; l < n; ++l)
      net.add_synapse({static_cast<NeuronId>(k), static_cast<NeuronId>(l), u(rng), 0.0, std::nullopt, true});
  return net;
}

/// Fraction of time a lone neuron with bias b is on.
inline double single_neuron_duty_cycle(double b, std::uint64_t cycles, std::uint64_t seed) {
  Network net;
  net.add_neuron({b});
  SimConfig c;
  c.max_state_changes = 2 * cycles;
  c.seed = seed;
  const auto r = run(net, c);
  return empirical_distribution(r.stream, {0}, 0.0).p[1];
}

/// Two principals with base couplings plus one motif; `model` holds the
/// base quadratic energy and the motif's predicted term.
struct MotifTestbed {
  Network network;
  EnergyModel model;
};

inline MotifTestbed motif_testbed(bool or_motif) {
  MotifTestbed t;
  const double b0 = -0.5, b1 = 0.3, w = 0.8;
  t.network.add_neuron({b0});
  t.network.add_neuron({b1});
  t.network.add_synapse({0, 1, w, 0.0, std::nullopt, true});
  t.model = energy_model_from_network(t.network);
  const auto frag = or_motif ? build_or(t.network, {0, 1}, OrParams{}) : build_wta(t.network, {0, 1}, WtaParams{});
  t.model.add_term(*frag.term);
  return t;
}

inline double motif_marginal_tv(bool or_motif, std::uint64_t changes, std::uint64_t seed) {
  const auto t = motif_testbed(or_motif);
  SimConfig c;
  c.max_state_changes = changes;
  c.seed = seed;
  const auto r = run(t.network, c);
  return divergence(empirical_distribution(r.stream, {0, 1}), exact_stationary(t.model)).tv;
}

/// Measured spiking and Gibbs event rates of an isolated unit with bias u.
struct RatePair {
  double spiking = 0.0;
  double gibbs = 0.0;
};

inline RatePair measured_event_rates(double u, std::uint64_t events, std::uint64_t seed, double rho0 = 1.0) {
  Network net;
  net.add_neuron({u});
  SimConfig c;
  c.max_state_changes = events;
  c.seed = seed;
  const auto s = run(net, c);
  EnergyModel m(1);
  m.set_bias(0, u);
  GibbsConfig g;
  g.rho0 = rho0;
  g.sim = c;
  const auto b = gibbs_run(m, g);
  return {static_cast<double>(s.state_changes) / (s.stream.t_end - s.stream.t_start),
          static_cast<double>(b.state_changes) / (b.stream.t_end - b.stream.t_start)};
}

/// Budget scale: 1 for the quick suite, larger for tighter estimates.
inline std::vector<CheckResult> run_verification(double scale = 1.0, std::uint64_t seed = 2024) {
  std::vector<CheckResult> out;
  const auto n_of = [&](double base) { return static_cast<std::uint64_t>(base * scale); };

  for (const double b : {-2.0, 0.0, 2.0}) {
    const double d = single_neuron_duty_cycle(b, n_of(2e4), derive_run_seed(seed, 1));
    const double err = std::abs(d - sigmoid(b));
    out.push_back({"single neuron duty cycle b=" + std::to_string(static_cast<int>(b)), err < 0.015, err, 0.015,
                   "measured " + fmt17(d) + " vs sigma(b) " + fmt17(sigmoid(b))});
  }

  for (std::size_t n = 2; n <= 4; ++n) {
    const auto net = random_symmetric_network(n, derive_run_seed(seed, 10 + n));
    const auto exact = exact_stationary(energy_model_from_network(net));
    SimConfig c;
    c.max_state_changes = n_of(3e5);
    c.seed = derive_run_seed(seed, 20 + n);
    const auto sp = run(net, c);
    const double tv = divergence(empirical_distribution(sp.stream, first_neurons(n)), exact).tv;
    out.push_back({"neural sampling n=" + std::to_string(n), tv < 0.03, tv, 0.03, "TV spiking vs Boltzmann"});
    GibbsConfig g;
    g.sim = c;
    const auto gb = gibbs_run(energy_model_from_network(net), g);
    const double tvg = divergence(empirical_distribution(gb.stream, first_neurons(n)), exact).tv;
    out.push_back({"gibbs sampling n=" + std::to_string(n), tvg < 0.03, tvg, 0.03, "TV Gibbs vs Boltzmann"});
  }

  for (const bool orm : {false, true}) {
    const double tv = motif_marginal_tv(orm, n_of(4e5), derive_run_seed(seed, orm ? 31 : 30));
    out.push_back({orm ? "OR modularity" : "WTA modularity", tv < 0.05, tv, 0.05,
                   "TV marginal vs exact(E_N + U)"});
  }

  for (const double u : {0.0, 1.0, 2.0}) {
    const auto r = measured_event_rates(u, n_of(2e4), derive_run_seed(seed, 40));
    const double f = event_rate_pair(u, kDefaultTau, 1.0).factor;
    const double rel = std::abs(r.spiking / r.gibbs / f - 1.0);
    out.push_back({"translation factor u=" + std::to_string(static_cast<int>(u)), rel < 0.1, rel, 0.1,
                   "ratio " + fmt17(r.spiking / r.gibbs) + " vs F " + fmt17(f)});
  }

  {
    const auto rep = detailed_balance_variant_check(random_symmetric_network(3, derive_run_seed(seed, 50)), n_of(3e5),
                                                    derive_run_seed(seed, 51));
    out.push_back({"detailed-balance variant TV", rep.div.tv < 0.03, rep.div.tv, 0.03, "stochastic off at rate 1/tau"});
    out.push_back({"detailed-balance flow residual", rep.max_residual < 1e-12, rep.max_residual, 1e-12,
                   "symmetric network at the exact distribution"});
    Network asym;
    asym.claims_symmetry = false;
    asym.add_neuron({0.2});
    asym.add_neuron({-0.4});
    asym.add_synapse({0, 1, 1.0});
    asym.add_synapse({1, 0, -1.0});
    const auto ra = detailed_balance_variant_check(asym, n_of(1e5), derive_run_seed(seed, 52));
    out.push_back({"asymmetric flow residual reported", ra.max_residual > 1e-3, ra.max_residual, 1e-3,
                   "nonzero residuals expected"});
  }

  {
    bool ok = true;
    std::string msg;
    for (std::size_t n = 3; n <= 7; ++n)
      for (std::size_t r = 0; r <= 3; ++r) {
        TspParams p;
        p.n_resting = r;
        const auto cp = compile_tsp(random_euclidean_tsp(n, derive_run_seed(seed, 60 + n)), p);
        if (!(cp.actual() == tsp_predicted_counts(n, r))) {
          ok = false;
          msg = "TSP N=" + std::to_string(n) + " r=" + std::to_string(r);
        }
      }
    for (std::size_t n = 3; n <= 12; n += 3)
      for (const bool tc : {false, true}) {
        const auto f = random_ksat(n, 4 * n, derive_run_seed(seed, 70 + n));
        const auto cp = compile_sat(f, SatParams{}, tc);
        const NetworkCounts want{3 * n + 2 * f.clauses.size() + (tc ? 3 * f.clauses.size() + 1 : 0),
                                 4 * n + 13 * f.clauses.size() + (tc ? 2 * n + 20 * f.clauses.size() : 0)};
        if (!(cp.actual() == want)) {
          ok = false;
          msg = "SAT N=" + std::to_string(n);
        }
      }
    const auto big = tsp_predicted_counts(38, 7);
    ok &= big.neurons == 1755;
    out.push_back({"compiler count formulas", ok, ok ? 0.0 : 1.0, 0.0, ok ? "exact" : "mismatch at " + msg});
  }
  return out;
}

inline bool print_verification(const std::vector<CheckResult>& rs, std::ostream& os) {
  bool all = true;
  for (const auto& r : rs) {
    all &= r.passed;
    os << (r.passed ? "PASS " : "FAIL ") << r.name << ": measured " << r.measured << " threshold " << r.threshold
       << " (" << r.detail << ")\n";
  }
  return all;
}

}  // namespace spikecsp
