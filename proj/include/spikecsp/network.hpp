#pragma once

// Neurons, synapses, networks and binary network states.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace spikecsp {

using NeuronId = std::uint32_t;
using Seconds = double;

inline constexpr Seconds kDefaultTau = 0.010;

enum class Role : std::uint8_t { principal, auxiliary };

struct NeuronSpec {
  double bias = 0.0;
  Seconds psp_length = kDefaultTau;
  Seconds refractory = kDefaultTau;
  Role role = Role::principal;
  std::string label;
};

/// Directed synapse. A `reciprocal` synapse is one symmetric connection that
/// transmits in both directions with the same weight; it is how symmetric
/// coupling between two principal neurons is stored as a single connection.
struct SynapseSpec {
  NeuronId pre = 0;
  NeuronId post = 0;
  double weight = 0.0;
  Seconds delay = 0.0;
  std::optional<Seconds> psp_duration;
  bool reciprocal = false;

  bool operator==(const SynapseSpec&) const = default;
};

/// The complete simulatable object. Principal neurons occupy ids
/// 0..principal_count()-1; auxiliary neurons follow.
class Network {
 public:
  Network() = default;

  NeuronId add_neuron(NeuronSpec n) {
    if (n.role == Role::principal && !neurons_.empty() &&
        neurons_.back().role == Role::auxiliary) {
      throw std::logic_error("principal neurons must be added before auxiliary neurons");
    }
    if (n.role == Role::principal) ++principal_count_;
    neurons_.push_back(std::move(n));
    return static_cast<NeuronId>(neurons_.size() - 1);
  }

  std::size_t add_synapse(SynapseSpec s) {
    synapses_.push_back(s);
    return synapses_.size() - 1;
  }

  const std::vector<NeuronSpec>& neurons() const { return neurons_; }
  const std::vector<SynapseSpec>& synapses() const { return synapses_; }
  std::vector<NeuronSpec>& neurons() { return neurons_; }
  std::vector<SynapseSpec>& synapses() { return synapses_; }

  const NeuronSpec& neuron(NeuronId k) const { return neurons_.at(k); }
  NeuronSpec& neuron(NeuronId k) { return neurons_.at(k); }

  std::size_t size() const { return neurons_.size(); }
  std::size_t principal_count() const { return principal_count_; }
  bool is_principal(NeuronId k) const { return k < principal_count_; }

  /// Number of directed transmission paths (reciprocal synapses count twice).
  std::size_t directed_synapse_count() const {
    std::size_t n = 0;
    for (const auto& s : synapses_) n += s.reciprocal ? 2 : 1;
    return n;
  }

  /// Whether the principal sub-network is claimed to carry a symmetric
  /// (Boltzmann) energy model; validation checks the claim.
  bool claims_symmetry = true;

 private:
  friend void from_json(const nlohmann::json& j, Network& net);
  std::vector<NeuronSpec> neurons_;
  std::vector<SynapseSpec> synapses_;
  std::size_t principal_count_ = 0;
};

struct NetworkState {
  Seconds time = 0.0;
  std::vector<std::uint8_t> x;
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

/// Lists every invariant violation instead of stopping at the first.
inline ValidationReport validate_network(const Network& net) {
  ValidationReport report;
  const auto n = net.size();
  bool seen_aux = false;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& nr = net.neurons()[k];
    if (!(nr.psp_length > 0)) report.errors.push_back("neuron " + std::to_string(k) + ": psp_length must be > 0");
    if (!(nr.refractory > 0)) report.errors.push_back("neuron " + std::to_string(k) + ": refractory must be > 0");
    if (nr.role == Role::auxiliary) seen_aux = true;
    if (nr.role == Role::principal && seen_aux)
      report.errors.push_back("neuron " + std::to_string(k) + ": principal after auxiliary");
  }

  // Outgoing principal-to-principal weights, for the symmetry check.
  const auto p = net.principal_count();
  std::vector<std::vector<std::pair<NeuronId, double>>> principal_out(p);

  for (std::size_t i = 0; i < net.synapses().size(); ++i) {
    const auto& s = net.synapses()[i];
    const std::string tag = "synapse " + std::to_string(i);
    bool ids_ok = true;
    if (s.pre >= n) {
      report.errors.push_back(tag + ": dangling pre id " + std::to_string(s.pre));
      ids_ok = false;
    }
    if (s.post >= n) {
      report.errors.push_back(tag + ": dangling post id " + std::to_string(s.post));
      ids_ok = false;
    }
    if (!(s.delay >= 0)) report.errors.push_back(tag + ": negative delay");
    if (s.psp_duration && !(*s.psp_duration > 0)) report.errors.push_back(tag + ": psp_duration override must be > 0");
    if (!ids_ok) continue;
    if (s.pre == s.post) {
      if (net.is_principal(s.pre))
        report.errors.push_back(tag + ": self-connection on principal neuron " + std::to_string(s.pre));
      else
        report.warnings.push_back(tag + ": self-connection on auxiliary neuron " + std::to_string(s.pre));
    }
    if (net.is_principal(s.pre) && net.is_principal(s.post) && s.pre != s.post) {
      principal_out[s.pre].emplace_back(s.post, s.weight);
      if (s.reciprocal) principal_out[s.post].emplace_back(s.pre, s.weight);
    }
  }

  if (net.claims_symmetry) {
    // Sum weights per ordered pair, then compare (k,l) against (l,k).
    std::vector<std::vector<std::pair<NeuronId, double>>> summed(p);
    for (std::size_t k = 0; k < p; ++k) {
      auto v = principal_out[k];
      std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.first < b.first; });
      for (auto& [l, w] : v) {
        if (!summed[k].empty() && summed[k].back().first == l)
          summed[k].back().second += w;
        else
          summed[k].emplace_back(l, w);
      }
    }
    auto find = [&](NeuronId k, NeuronId l) -> const double* {
      const auto& v = summed[k];
      auto it = std::lower_bound(v.begin(), v.end(), l, [](auto& e, NeuronId x) { return e.first < x; });
      return (it != v.end() && it->first == l) ? &it->second : nullptr;
    };
    for (NeuronId k = 0; k < p; ++k) {
      for (auto& [l, w] : summed[k]) {
        const double* back = find(l, k);
        // Pairs present in both directions are checked once, from the lower id.
        if (k > l && back) continue;
        const double wb = back ? *back : 0.0;
        if (wb != w) {
          std::ostringstream os;
          os << "asymmetric principal weights: w(" << l << "<-" << k << ")=" << w << " vs w(" << k << "<-" << l
             << ")=" << wb;
          report.errors.push_back(os.str());
        }
      }
    }
  }
  return report;
}

/// u_k = b_k + sum_l w_kl x_l over every incoming synapse. The caller
/// resolves delays and PSP-duration overrides into `state.x`.
inline double membrane_potential(const Network& net, const NetworkState& state, NeuronId k) {
  if (k >= net.size()) throw std::out_of_range("membrane_potential: invalid neuron id");
  if (state.x.size() != net.size()) throw std::invalid_argument("membrane_potential: state size mismatch");
  double u = net.neuron(k).bias;
  for (const auto& s : net.synapses()) {
    if (s.post == k && state.x[s.pre]) u += s.weight;
    if (s.reciprocal && s.pre == k && state.x[s.post]) u += s.weight;
  }
  return u;
}

struct SpikeEvent {
  NeuronId neuron = 0;
  Seconds time = 0.0;
};

/// x_k = 1 iff neuron k spiked in (t - tau_k, t]. The spike at exactly
/// t - tau_k is treated as still active: the on-window is [t_s, t_s + tau].
inline NetworkState state_from_spike_history(const Network& net, std::span<const SpikeEvent> history, Seconds t) {
  NetworkState st;
  st.time = t;
  st.x.assign(net.size(), 0);
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (i > 0 && history[i].time < history[i - 1].time)
      throw std::invalid_argument("state_from_spike_history: history not time-sorted");
    const auto& e = history[i];
    if (e.neuron >= net.size()) throw std::out_of_range("state_from_spike_history: invalid neuron id");
    if (e.time > t) continue;
    if (t <= e.time + net.neuron(e.neuron).psp_length) st.x[e.neuron] = 1;
  }
  return st;
}

// JSON serialization.

inline void to_json(nlohmann::json& j, const NeuronSpec& n) {
  j = nlohmann::json{{"bias", n.bias},
                     {"psp_length", n.psp_length},
                     {"refractory", n.refractory},
                     {"role", n.role == Role::principal ? "principal" : "auxiliary"}};
  if (!n.label.empty()) j["label"] = n.label;
}

inline void from_json(const nlohmann::json& j, NeuronSpec& n) {
  n.bias = j.at("bias").get<double>();
  n.psp_length = j.value("psp_length", kDefaultTau);
  n.refractory = j.value("refractory", n.psp_length);
  const auto role = j.value("role", std::string("principal"));
  if (role == "principal")
    n.role = Role::principal;
  else if (role == "auxiliary")
    n.role = Role::auxiliary;
  else
    throw std::invalid_argument("unknown neuron role: " + role);
  n.label = j.value("label", std::string{});
}

inline void to_json(nlohmann::json& j, const SynapseSpec& s) {
  j = nlohmann::json{{"pre", s.pre}, {"post", s.post}, {"weight", s.weight}};
  if (s.delay != 0.0) j["delay"] = s.delay;
  if (s.psp_duration) j["psp_duration"] = *s.psp_duration;
  if (s.reciprocal) j["reciprocal"] = true;
}

inline void from_json(const nlohmann::json& j, SynapseSpec& s) {
  s.pre = j.at("pre").get<NeuronId>();
  s.post = j.at("post").get<NeuronId>();
  s.weight = j.at("weight").get<double>();
  s.delay = j.value("delay", 0.0);
  if (j.contains("psp_duration")) s.psp_duration = j.at("psp_duration").get<double>();
  s.reciprocal = j.value("reciprocal", false);
}

inline void to_json(nlohmann::json& j, const Network& net) {
  j = nlohmann::json{{"principal_count", net.principal_count()},
                     {"claims_symmetry", net.claims_symmetry},
                     {"neurons", net.neurons()},
                     {"synapses", net.synapses()}};
}

inline void from_json(const nlohmann::json& j, Network& net) {
  net = Network{};
  for (const auto& jn : j.at("neurons")) net.add_neuron(jn.get<NeuronSpec>());
  for (const auto& js : j.at("synapses")) net.add_synapse(js.get<SynapseSpec>());
  net.claims_symmetry = j.value("claims_symmetry", true);
  if (j.contains("principal_count") && j.at("principal_count").get<std::size_t>() != net.principal_count())
    throw std::invalid_argument("principal_count does not match neuron roles");
}

}  // namespace spikecsp
