#pragma once

// TSP and k-SAT instances compiled into spiking networks, with readouts and
// evaluators.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "energy.hpp"
#include "motifs.hpp"
#include "network.hpp"
#include "problems.hpp"

namespace spikecsp {

struct TspParams {
  double b_wta = -0.45;
  double b_p = 100.0;
  double b_n = -100.0;
  double b_inh = -10.0;
  double w_wta = -100.0;
  double w_exc = 100.0;
  double w_unique = -14.7;
  double w_scale = 19.4;
  double w_offset = -5.0;
  std::size_t n_resting = 7;
  std::size_t clamp_city = 0;
  bool clamp = true;

  static TspParams planar() { return {}; }
  static TspParams asymmetric() {
    TspParams p;
    p.b_wta = 1.3;
    p.w_unique = -14.1;
    p.w_offset = -7.9;
    p.w_scale = 20.8;
    p.n_resting = 8;
    return p;
  }
};

struct SatParams {
  double b_wta = 2.0;
  double b_inh = -10.0;
  double b_glob = 10.0;
  double B = 40.0;
  double w_wta = -100.0;
  double w_exc = 100.0;
  double w_or1 = 2.5;
  double w_or2 = 10.0;
  std::optional<double> w_glob;  // experimental; defaults to 2 * b_WTA
  std::optional<double> w_status_global;
  std::optional<double> w_ii_status;

  double global_weight() const { return w_glob ? *w_glob : 2.0 * b_wta; }
};

enum class ProblemKind : std::uint8_t { tsp, sat };

struct NetworkCounts {
  std::size_t neurons = 0;
  std::size_t synapses = 0;
  bool operator==(const NetworkCounts&) const = default;
};

/// A network plus the map from problem variables to principal neurons.
/// groups[v][value] is the principal coding for variable v taking `value`;
/// for TSP a variable is a tour step and a value a city, for SAT values are
/// {false, true}.
struct CompiledProblem {
  ProblemKind kind = ProblemKind::tsp;
  Network network;
  EnergyModel model;  // principal energy: base biases, couplings, motif terms
  std::vector<std::vector<NeuronId>> groups;
  std::vector<NeuronId> wta_aux;  // one per group
  NetworkCounts predicted;
  std::optional<NetworkCounts> predicted_without_control;  // SAT with temperature control
  std::vector<std::string> warnings;
  std::optional<TspInstance> tsp;
  std::optional<CnfFormula> sat;
  std::optional<TempControlFragment> temperature_control;

  NetworkCounts actual() const { return {network.size(), network.synapses().size()}; }
};

inline constexpr int kUndefined = -1;

/// Per group: the value of its single active member, or kUndefined if none
/// or several are active.
inline std::vector<int> readout_values(const std::vector<std::uint8_t>& x, const CompiledProblem& cp) {
  std::vector<int> v(cp.groups.size(), kUndefined);
  for (std::size_t g = 0; g < cp.groups.size(); ++g) {
    int found = kUndefined;
    int count = 0;
    for (std::size_t i = 0; i < cp.groups[g].size(); ++i)
      if (x[cp.groups[g][i]]) {
        found = static_cast<int>(i);
        ++count;
      }
    v[g] = count == 1 ? found : kUndefined;
  }
  return v;
}

inline std::size_t count_undefined(const std::vector<int>& values) {
  return static_cast<std::size_t>(std::count(values.begin(), values.end(), kUndefined));
}

// TSP.

inline NetworkCounts tsp_predicted_counts(std::size_t n, std::size_t r) {
  const auto steps = n + r;
  return {(n + 1) * steps, n * steps * (2 * n + r - 2)};
}

/// Normalized cost with the maximum off-diagonal cost as unit.
inline double tsp_neighbor_weight(const TspParams& p, double normalized_cost) {
  return p.w_offset + (1.0 - normalized_cost) * p.w_scale;
}

/// Step s, city i is principal s * N + i. Steps form a ring of N + N_resting
/// WTA circuits; consecutive steps are coupled by reciprocal cost synapses
/// and same-city neurons of non-adjacent steps inhibit each other.
inline CompiledProblem compile_tsp(const TspInstance& inst, const TspParams& p) {
  inst.validate();
  const auto n = inst.n;
  if (n < 3) throw std::invalid_argument("compile_tsp: need at least three cities");
  if (p.clamp && p.clamp_city >= n) throw std::invalid_argument("compile_tsp: clamp city out of range");
  const auto steps = n + p.n_resting;

  CompiledProblem cp;
  cp.kind = ProblemKind::tsp;
  cp.tsp = inst;
  cp.model = EnergyModel(n * steps);
  const WtaParams wta{p.b_wta, p.w_wta, p.w_exc, p.b_inh};
  cp.warnings = wta.warnings();

  const double cmax = inst.max_offdiagonal();
  if (cmax == 0.0) cp.warnings.push_back("TSP: all costs are zero; normalized costs set to 0");
  auto id = [n](std::size_t s, std::size_t i) { return static_cast<NeuronId>(s * n + i); };

  cp.groups.assign(steps, {});
  for (std::size_t s = 0; s < steps; ++s)
    for (std::size_t i = 0; i < n; ++i) {
      double base = 0.0;
      if (p.clamp && s == 0) base = (i == p.clamp_city ? p.b_p : p.b_n) - p.b_wta;
      cp.network.add_neuron({base, kDefaultTau, kDefaultTau, Role::principal,
                             "s" + std::to_string(s) + ".c" + std::to_string(i)});
      cp.model.set_bias(id(s, i), base);
      cp.groups[s].push_back(id(s, i));
    }

  // Cost couplings between consecutive steps, ring closure included.
  for (std::size_t s = 0; s < steps; ++s) {
    const auto t = (s + 1) % steps;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double c = cmax > 0 ? inst.cost(i, j) / cmax : 0.0;
        const double w = tsp_neighbor_weight(p, c);
        cp.network.add_synapse({id(s, i), id(t, j), w, 0.0, std::nullopt, true});
        cp.model.add_weight(id(s, i), id(t, j), w);
      }
  }
  // Uniqueness between non-adjacent steps.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < steps; ++s)
      for (std::size_t t = s + 1; t < steps; ++t) {
        const bool adjacent = t == s + 1 || (s == 0 && t == steps - 1);
        if (adjacent) continue;
        cp.network.add_synapse({id(s, i), id(t, i), p.w_unique});
        cp.network.add_synapse({id(t, i), id(s, i), p.w_unique});
        cp.model.add_weight(id(s, i), id(t, i), p.w_unique);
      }
  for (std::size_t s = 0; s < steps; ++s) {
    auto frag = build_wta(cp.network, cp.groups[s], wta, "wta.s" + std::to_string(s));
    cp.wta_aux.push_back(frag.aux.front());
    cp.model.add_term(*frag.term);
  }
  cp.predicted = tsp_predicted_counts(n, p.n_resting);
  return cp;
}

struct TourEvaluation {
  double cost = 0.0;
  bool valid = false;
};

/// Valid iff every step is defined, every city occurs, and each city's
/// occurrences are consecutive around the ring. The cost sums c(v_s, v_s+1)
/// over ring-consecutive steps whose cities differ.
inline TourEvaluation tour_cost_and_validity(const std::vector<int>& values, const TspInstance& inst) {
  TourEvaluation ev;
  const auto steps = values.size();
  bool defined = steps > 0;
  for (const auto v : values) defined &= v != kUndefined;
  for (std::size_t s = 0; s < steps; ++s) {
    const int a = values[s], b = values[(s + 1) % steps];
    if (a != kUndefined && b != kUndefined && a != b) ev.cost += inst.cost(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
  }
  if (!defined) return ev;
  // Each city must form exactly one contiguous block on the ring: count
  // block starts (positions whose predecessor holds a different city).
  std::vector<int> starts(inst.n, 0), seen(inst.n, 0);
  for (std::size_t s = 0; s < steps; ++s) {
    const auto c = static_cast<std::size_t>(values[s]);
    if (c >= inst.n) return ev;
    seen[c] = 1;
    if (values[(s + steps - 1) % steps] != values[s]) ++starts[c];
  }
  bool ok = true;
  for (std::size_t c = 0; c < inst.n; ++c) {
    if (!seen[c]) ok = false;
    // A single city filling the whole ring has no block start.
    if (starts[c] > 1) ok = false;
  }
  ev.valid = ok && inst.n >= 1;
  return ev;
}

/// optimum / cost for a valid tour, 0 otherwise.
inline double tsp_performance(const TourEvaluation& ev, double optimum) {
  if (!ev.valid || ev.cost <= 0) return ev.valid ? 1.0 : 0.0;
  return optimum / ev.cost;
}

inline std::vector<int> readout_tour(const std::vector<std::uint8_t>& x, const CompiledProblem& cp) {
  if (cp.kind != ProblemKind::tsp) throw std::invalid_argument("readout_tour: not a TSP network");
  return readout_values(x, cp);
}

// SAT.

inline NetworkCounts sat_predicted_counts(const CnfFormula& f, bool temperature_control,
                                          NetworkCounts* without_control = nullptr) {
  const auto N = f.n_vars, M = f.clauses.size();
  NetworkCounts c{3 * N + 2 * M, 4 * N};
  std::size_t control_syn = 2 * N;
  for (const auto& cl : f.clauses) {
    c.synapses += 4 * cl.size() + 1;
    control_syn += 5 * cl.size() + 5;
  }
  if (without_control) *without_control = c;
  if (temperature_control) {
    c.neurons += 3 * M + 1;
    c.synapses += control_syn;
  }
  return c;
}

/// Variable v (0-based) is coded by principals 2v (false) and 2v + 1 (true).
inline NeuronId sat_principal(std::size_t var, bool value) { return static_cast<NeuronId>(2 * var + (value ? 1 : 0)); }

inline NeuronId literal_principal(Literal l) {
  return sat_principal(static_cast<std::size_t>(std::abs(l)) - 1, l > 0);
}

inline CompiledProblem compile_sat(const CnfFormula& f, const SatParams& p, bool temperature_control,
                                   std::size_t min_k = 2, std::size_t max_k = 5) {
  f.validate();
  if (f.clauses.empty() || f.n_vars == 0) throw std::invalid_argument("compile_sat: empty formula");
  for (const auto& c : f.clauses)
    if (c.size() < min_k || c.size() > max_k)
      throw std::invalid_argument("compile_sat: clause width outside the supported range");

  CompiledProblem cp;
  cp.kind = ProblemKind::sat;
  cp.sat = f;
  const auto N = f.n_vars;
  cp.model = EnergyModel(2 * N);
  const WtaParams wta{p.b_wta, p.w_wta, p.w_exc, p.b_inh};
  cp.warnings = wta.warnings();

  for (std::size_t v = 0; v < N; ++v) {
    for (const bool val : {false, true})
      cp.network.add_neuron({0.0, kDefaultTau, kDefaultTau, Role::principal,
                             "x" + std::to_string(v + 1) + (val ? "=1" : "=0")});
    cp.groups.push_back({sat_principal(v, false), sat_principal(v, true)});
  }
  for (std::size_t v = 0; v < N; ++v) {
    auto frag = build_wta(cp.network, cp.groups[v], wta, "wta.x" + std::to_string(v + 1));
    cp.wta_aux.push_back(frag.aux.front());
    cp.model.add_term(*frag.term);
  }
  std::vector<ClauseCircuit> clauses;
  const OrParams orp{p.w_or1, p.B};
  for (std::size_t c = 0; c < f.clauses.size(); ++c) {
    ClauseCircuit cc;
    std::vector<NeuronId> members;
    for (const auto l : f.clauses[c]) {
      members.push_back(literal_principal(l));
      cc.violating.push_back(literal_principal(-l));
    }
    auto frag = build_or(cp.network, members, orp, &cc.orc, "clause" + std::to_string(c));
    cp.model.add_term(*frag.term);
    clauses.push_back(std::move(cc));
  }
  if (temperature_control) {
    TempControlParams tc;
    tc.w_or2 = p.w_or2;
    tc.b_glob = p.b_glob;
    tc.w_glob = p.global_weight();
    tc.B = p.B;
    tc.w_status_global = p.w_status_global;
    tc.w_ii_status = p.w_ii_status;
    cp.temperature_control = build_temperature_control(cp.network, clauses, first_neurons(2 * N), tc);
    NetworkCounts without;
    cp.predicted = sat_predicted_counts(f, true, &without);
    cp.predicted_without_control = without;
  } else {
    cp.predicted = sat_predicted_counts(f, false);
  }
  for (std::size_t k = 0; k < 2 * N; ++k) cp.model.set_bias(k, 0.0);
  return cp;
}

inline std::vector<int> readout_assignment(const std::vector<std::uint8_t>& x, const CompiledProblem& cp) {
  if (cp.kind != ProblemKind::sat) throw std::invalid_argument("readout_assignment: not a SAT network");
  return readout_values(x, cp);
}

/// A clause counts as satisfied iff some literal over a defined variable is
/// true.
inline bool clause_satisfied(const std::vector<Literal>& clause, const std::vector<int>& assignment) {
  for (const auto l : clause) {
    const int v = assignment[static_cast<std::size_t>(std::abs(l)) - 1];
    if (v != kUndefined && (v == 1) == (l > 0)) return true;
  }
  return false;
}

inline std::size_t satisfied_clauses(const std::vector<int>& assignment, const CnfFormula& f) {
  std::size_t s = 0;
  for (const auto& c : f.clauses) s += clause_satisfied(c, assignment) ? 1 : 0;
  return s;
}

inline double sat_performance(const std::vector<int>& assignment, const CnfFormula& f) {
  if (f.clauses.empty()) return 1.0;
  return static_cast<double>(satisfied_clauses(assignment, f)) / static_cast<double>(f.clauses.size());
}

}  // namespace spikecsp
