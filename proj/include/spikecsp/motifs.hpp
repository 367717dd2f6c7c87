#pragma once

// Circuit motifs added to a Network: winner-take-all, OR, and the clause
// temperature-control circuitry. Each constructor returns the auxiliary
// neurons it added and, where one exists, the modular energy term it is
// designed to contribute.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "energy.hpp"
#include "network.hpp"

namespace spikecsp {

struct WtaParams {
  double b_wta = 2.0;
  double w_wta = -100.0;
  double w_exc = 100.0;
  double b_inh = -10.0;

  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (!(b_wta > 0 && b_wta < -w_wta)) w.push_back("WTA: b_WTA outside (0, -w_WTA); the zero-state penalty is not positive");
    return w;
  }
  void check() const {
    if (!(w_wta < 0 && w_exc > 0)) throw std::invalid_argument("WTA: need w_WTA < 0 < w_exc");
  }
};

struct OrParams {
  double w_or = 2.5;
  double B = 40.0;
  void check() const {
    if (!(w_or > 0 && B > 0)) throw std::invalid_argument("OR: w_OR and B must be positive");
  }
};

struct TempControlParams {
  double w_or2 = 10.0;
  double b_glob = 10.0;
  double w_glob = 4.0;  // experimental; no published value
  double B = 40.0;
  std::optional<double> w_status_global;  // defaults to -B
  std::optional<double> w_ii_status;      // defaults to -B
  Seconds global_tau = 0.009;
  Seconds gate_psp = 0.011;

  double status_to_global() const { return w_status_global ? *w_status_global : -B; }
  double ii_to_status() const { return w_ii_status ? *w_ii_status : -B; }
};

struct MotifFragment {
  std::vector<NeuronId> aux;
  std::size_t synapses_added = 0;
  std::optional<ModularTerm> term;
};

inline void require_principals(const Network& net, const std::vector<NeuronId>& members) {
  for (const auto m : members)
    if (!net.is_principal(m)) throw std::invalid_argument("motif member " + std::to_string(m) + " is not a principal neuron");
}

/// One inhibitory aux neuron driven by every member (w_exc) and inhibiting
/// every member (w_WTA); each member bias is raised by b_WTA.
inline MotifFragment build_wta(Network& net, const std::vector<NeuronId>& members, const WtaParams& p,
                               const std::string& label = {}) {
  p.check();
  if (members.size() < 2) throw std::invalid_argument("WTA needs at least two members");
  require_principals(net, members);
  MotifFragment f;
  const auto inh = net.add_neuron({p.b_inh, kDefaultTau, kDefaultTau, Role::auxiliary, label});
  f.aux.push_back(inh);
  for (const auto m : members) {
    net.neuron(m).bias += p.b_wta;
    net.add_synapse({m, inh, p.w_exc});
    net.add_synapse({inh, m, p.w_wta});
    f.synapses_added += 2;
  }
  f.term = ModularTerm::wta(members, p.b_wta, p.w_wta);
  return f;
}

struct OrCircuit {
  std::vector<NeuronId> members;
  NeuronId aux_i = 0;
  NeuronId aux_ii = 0;
};

/// Aux I (bias 0.5B) is silenced by any active member and excites all
/// members with w_OR; aux II (bias -3.5B) needs I plus an active member and
/// cancels I's excitation on the members.
inline void wire_or_pair(Network& net, const std::vector<NeuronId>& members, NeuronId a1, NeuronId a2, double w_or,
                         double B, std::size_t& count) {
  for (const auto m : members) {
    net.add_synapse({m, a1, -B});
    net.add_synapse({a1, m, w_or});
    net.add_synapse({m, a2, B});
    net.add_synapse({a2, m, -w_or});
    count += 4;
  }
  net.add_synapse({a1, a2, 3 * B});
  ++count;
}

inline MotifFragment build_or(Network& net, const std::vector<NeuronId>& members, const OrParams& p,
                              OrCircuit* circuit = nullptr, const std::string& label = {}) {
  p.check();
  if (members.empty()) throw std::invalid_argument("OR needs at least one member");
  require_principals(net, members);
  MotifFragment f;
  const auto a1 = net.add_neuron({0.5 * p.B, kDefaultTau, kDefaultTau, Role::auxiliary, label.empty() ? "" : label + ".I"});
  const auto a2 = net.add_neuron({-3.5 * p.B, kDefaultTau, kDefaultTau, Role::auxiliary, label.empty() ? "" : label + ".II"});
  f.aux = {a1, a2};
  wire_or_pair(net, members, a1, a2, p.w_or, p.B, f.synapses_added);
  f.term = ModularTerm::or_term(members, p.w_or);
  if (circuit) *circuit = {members, a1, a2};
  return f;
}

/// Clause-level wiring needed by the temperature controller.
struct ClauseCircuit {
  OrCircuit orc;                  // members are the literal-satisfying principals
  std::vector<NeuronId> violating;  // the opposite-value principal of each literal
};

struct TempControlFragment {
  NeuronId global = 0;
  std::vector<NeuronId> aux_iii, aux_iv, status;
  std::size_t neurons_added = 0;
  std::size_t synapses_added = 0;
};

/// Per clause: a gated copy (III, IV) of the OR pair with w_OR2, and a status
/// neuron that fires when every literal of the clause is violated and then
/// silences the global neuron. Aux II, active only while the clause is being
/// re-satisfied, holds the status neuron down. The global neuron gates III/IV with 11 ms
/// PSPs and feeds every principal with w_glob.
inline TempControlFragment build_temperature_control(Network& net, const std::vector<ClauseCircuit>& clauses,
                                                     const std::vector<NeuronId>& principals,
                                                     const TempControlParams& p) {
  if (clauses.empty()) throw std::invalid_argument("temperature control needs at least one clause");
  const double B = p.B;
  TempControlFragment f;
  for (const auto& c : clauses) {
    if (c.orc.members.size() != c.violating.size())
      throw std::invalid_argument("temperature control: clause member/violating lists differ in length");
    require_principals(net, c.orc.members);
    require_principals(net, c.violating);
  }
  f.global = net.add_neuron({p.b_glob, p.global_tau, p.global_tau, Role::auxiliary, "global"});
  ++f.neurons_added;
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    const auto& c = clauses[i];
    const auto tag = "clause" + std::to_string(i);
    const auto a3 = net.add_neuron({-0.5 * B, kDefaultTau, kDefaultTau, Role::auxiliary, tag + ".III"});
    const auto a4 = net.add_neuron({-6.5 * B, kDefaultTau, kDefaultTau, Role::auxiliary, tag + ".IV"});
    const auto st = net.add_neuron({-2.5 * B, kDefaultTau, kDefaultTau, Role::auxiliary, tag + ".status"});
    f.neurons_added += 3;
    f.aux_iii.push_back(a3);
    f.aux_iv.push_back(a4);
    f.status.push_back(st);
    wire_or_pair(net, c.orc.members, a3, a4, p.w_or2, B, f.synapses_added);
    net.add_synapse({f.global, a3, B, 0.0, p.gate_psp});
    net.add_synapse({f.global, a4, 3 * B, 0.0, p.gate_psp});
    for (const auto v : c.violating) net.add_synapse({v, st, B});
    net.add_synapse({c.orc.aux_ii, st, p.ii_to_status()});
    net.add_synapse({st, f.global, p.status_to_global()});
    f.synapses_added += 4 + c.violating.size();
  }
  for (const auto k : principals) {
    require_principals(net, {k});
    net.add_synapse({f.global, k, p.w_glob});
    ++f.synapses_added;
  }
  return f;
}

/// U(x_k = 0) - U(x_k = 1) for a motif term.
inline double predicted_delta_u(const ModularTerm& term, const std::vector<std::uint8_t>& x, NeuronId k) {
  return term.delta_u(x, k);
}

}  // namespace spikecsp
