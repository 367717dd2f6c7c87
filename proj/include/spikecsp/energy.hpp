#pragma once

// Energy models over principal neurons: a quadratic Boltzmann part plus
// modular motif terms, exact enumeration, empirical occupancy distributions
// and divergences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "network.hpp"
#include "trace.hpp"

namespace spikecsp {

inline double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

inline std::size_t count_active(const std::vector<NeuronId>& members, const std::vector<std::uint8_t>& x) {
  std::size_t c = 0;
  for (const auto m : members) c += x[m] ? 1 : 0;
  return c;
}

/// WTA penalty as a function of the number of active members.
inline double wta_energy_by_count(std::size_t count, double b_wta, double w_wta) {
  if (count == 0) return b_wta;
  if (count == 1) return 0.0;
  return (-w_wta - b_wta) * static_cast<double>(count - 1);
}

inline double or_energy_by_count(std::size_t count, double w_or) { return count == 0 ? w_or : 0.0; }

inline double wta_energy(const std::vector<NeuronId>& members, double b_wta, double w_wta,
                         const std::vector<std::uint8_t>& x) {
  return wta_energy_by_count(count_active(members, x), b_wta, w_wta);
}

inline double or_energy(const std::vector<NeuronId>& members, double w_or, const std::vector<std::uint8_t>& x) {
  return or_energy_by_count(count_active(members, x), w_or);
}

/// U_i(x) of one motif. Every supported kind depends on x only through the
/// number of active members.
struct ModularTerm {
  enum class Kind : std::uint8_t { wta, or_, custom };

  Kind kind = Kind::custom;
  std::vector<NeuronId> members;
  double b_wta = 0.0;
  double w_wta = 0.0;
  double w_or = 0.0;
  std::vector<double> table;  // custom: energy indexed by active-member count

  static ModularTerm wta(std::vector<NeuronId> members, double b_wta, double w_wta) {
    ModularTerm t;
    t.kind = Kind::wta;
    t.members = std::move(members);
    t.b_wta = b_wta;
    t.w_wta = w_wta;
    t.check();
    return t;
  }

  static ModularTerm or_term(std::vector<NeuronId> members, double w_or) {
    ModularTerm t;
    t.kind = Kind::or_;
    t.members = std::move(members);
    t.w_or = w_or;
    t.check();
    return t;
  }

  static ModularTerm custom(std::vector<NeuronId> members, std::vector<double> table) {
    ModularTerm t;
    t.kind = Kind::custom;
    t.members = std::move(members);
    t.table = std::move(table);
    t.check();
    return t;
  }

  void check() const {
    if (members.empty()) throw std::invalid_argument("modular term needs at least one member");
    if (kind == Kind::custom && table.size() != members.size() + 1)
      throw std::invalid_argument("custom modular term table must cover counts 0..|members|");
  }

  double by_count(std::size_t c) const {
    switch (kind) {
      case Kind::wta:
        return wta_energy_by_count(c, b_wta, w_wta);
      case Kind::or_:
        return or_energy_by_count(c, w_or);
      case Kind::custom:
        return table.at(c);
    }
    return 0.0;
  }

  double evaluate(const std::vector<std::uint8_t>& x) const { return by_count(count_active(members, x)); }

  /// U(x_k = 0) - U(x_k = 1) with the other members as in x.
  double delta_u(const std::vector<std::uint8_t>& x, NeuronId k) const {
    if (std::find(members.begin(), members.end(), k) == members.end())
      throw std::invalid_argument("delta_u: neuron is not a member of the term");
    const std::size_t others = count_active(members, x) - (x[k] ? 1 : 0);
    return by_count(others) - by_count(others + 1);
  }
};

/// E(x) = -sum b_k x_k - 1/2 sum_kl x_k w_kl x_l + sum_i U_i(x).
class EnergyModel {
 public:
  EnergyModel() = default;
  explicit EnergyModel(std::size_t n) : b_(n, 0.0), w_(n * n, 0.0), adj_(n) {}

  std::size_t size() const { return b_.size(); }

  double bias(std::size_t k) const { return b_.at(k); }
  void set_bias(std::size_t k, double v) { b_.at(k) = v; }
  void add_bias(std::size_t k, double v) { b_.at(k) += v; }

  double weight(std::size_t k, std::size_t l) const { return w_.at(k * size() + l); }

  /// Sets w_kl = w_lk = v.
  void set_weight(std::size_t k, std::size_t l, double v) {
    if (k == l) throw std::invalid_argument("energy model: no self-coupling");
    const bool was_zero = w_.at(k * size() + l) == 0.0;
    w_[k * size() + l] = v;
    w_[l * size() + k] = v;
    if (was_zero && v != 0.0) {
      adj_[k].push_back(static_cast<NeuronId>(l));
      adj_[l].push_back(static_cast<NeuronId>(k));
    } else if (!was_zero && v == 0.0) {
      std::erase(adj_[k], static_cast<NeuronId>(l));
      std::erase(adj_[l], static_cast<NeuronId>(k));
    }
  }
  void add_weight(std::size_t k, std::size_t l, double v) { set_weight(k, l, weight(k, l) + v); }

  /// Neighbors with non-zero coupling.
  const std::vector<NeuronId>& neighbors(std::size_t k) const { return adj_.at(k); }

  const std::vector<ModularTerm>& terms() const { return terms_; }
  void add_term(ModularTerm t) {
    for (const auto m : t.members)
      if (m >= size()) throw std::invalid_argument("modular term member out of range");
    terms_.push_back(std::move(t));
  }
  std::vector<ModularTerm>& mutable_terms() { return terms_; }

  /// Term indices that contain neuron k.
  std::vector<std::vector<std::size_t>> terms_by_neuron() const {
    std::vector<std::vector<std::size_t>> out(size());
    for (std::size_t i = 0; i < terms_.size(); ++i)
      for (const auto m : terms_[i].members) out[m].push_back(i);
    return out;
  }

  bool symmetric() const {
    for (std::size_t k = 0; k < size(); ++k) {
      if (weight(k, k) != 0.0) return false;
      for (std::size_t l = k + 1; l < size(); ++l)
        if (weight(k, l) != weight(l, k)) return false;
    }
    return true;
  }

 private:
  std::vector<double> b_;
  std::vector<double> w_;
  std::vector<std::vector<NeuronId>> adj_;
  std::vector<ModularTerm> terms_;
};

inline void check_dim(const EnergyModel& m, const std::vector<std::uint8_t>& x) {
  if (x.size() != m.size()) throw std::invalid_argument("state dimension does not match energy model");
}

inline double boltzmann_energy(const EnergyModel& m, const std::vector<std::uint8_t>& x) {
  check_dim(m, x);
  double lin = 0.0, quad = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (!x[k]) continue;
    lin += m.bias(k);
    for (const auto l : m.neighbors(k))
      if (x[l]) quad += m.weight(k, l);
  }
  return -lin - 0.5 * quad;
}

inline double modular_energy(const EnergyModel& m, const std::vector<std::uint8_t>& x) {
  check_dim(m, x);
  double u = 0.0;
  for (const auto& t : m.terms()) u += t.evaluate(x);
  return u;
}

inline double total_energy(const EnergyModel& m, const std::vector<std::uint8_t>& x) {
  return boltzmann_energy(m, x) + modular_energy(m, x);
}

/// E(x_k = 0) - E(x_k = 1): the membrane potential a neuron needs for exact
/// sampling. `terms_of_k` is optional precomputed term membership.
inline double conditional_field(const EnergyModel& m, const std::vector<std::uint8_t>& x, std::size_t k,
                                const std::vector<std::size_t>* terms_of_k = nullptr) {
  double u = m.bias(k);
  for (const auto l : m.neighbors(k))
    if (x[l]) u += m.weight(k, l);
  if (terms_of_k) {
    for (const auto i : *terms_of_k) u += m.terms()[i].delta_u(x, static_cast<NeuronId>(k));
  } else {
    for (const auto& t : m.terms())
      if (std::find(t.members.begin(), t.members.end(), k) != t.members.end())
        u += t.delta_u(x, static_cast<NeuronId>(k));
  }
  return u;
}

/// E_T = E / T: biases, weights and motif magnitudes divided by T.
inline EnergyModel apply_temperature(const EnergyModel& m, double T) {
  if (!(T > 0)) throw std::invalid_argument("temperature must be positive");
  EnergyModel out(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) {
    out.set_bias(k, m.bias(k) / T);
    for (const auto l : m.neighbors(k))
      if (l > k) out.set_weight(k, l, m.weight(k, l) / T);
  }
  for (auto t : m.terms()) {
    t.b_wta /= T;
    t.w_wta /= T;
    t.w_or /= T;
    for (auto& v : t.table) v /= T;
    out.add_term(std::move(t));
  }
  return out;
}

/// Principal-only quadratic model of a network: biases plus summed
/// principal-to-principal weights. Auxiliary neurons are ignored. With
/// `average_asymmetric`, w_kl and w_lk are averaged instead of rejected.
inline EnergyModel energy_model_from_network(const Network& net, bool average_asymmetric = false) {
  const auto p = net.principal_count();
  EnergyModel m(p);
  std::vector<double> w(p * p, 0.0);  // w[post * p + pre]
  for (std::size_t k = 0; k < p; ++k) m.set_bias(k, net.neuron(static_cast<NeuronId>(k)).bias);
  for (const auto& s : net.synapses()) {
    if (s.pre >= p || s.post >= p || s.pre == s.post) continue;
    w[s.post * p + s.pre] += s.weight;
    if (s.reciprocal) w[s.pre * p + s.post] += s.weight;
  }
  for (std::size_t k = 0; k < p; ++k)
    for (std::size_t l = k + 1; l < p; ++l) {
      const double a = w[k * p + l], b = w[l * p + k];
      if (a != b && !average_asymmetric)
        throw std::invalid_argument("network principal weights are not symmetric");
      const double v = 0.5 * (a + b);
      if (v != 0.0) m.set_weight(k, l, v);
    }
  return m;
}

// Distributions.

inline constexpr std::size_t kMaxEnumeration = 20;

/// Dense distribution over 2^n states; bit k of the index is neuron k.
struct Distribution {
  std::size_t n = 0;
  std::vector<double> p;

  double operator[](std::size_t s) const { return p[s]; }
  double total() const {
    double t = 0.0;
    for (const auto v : p) t += v;
    return t;
  }
};

inline std::vector<std::uint8_t> state_of_index(std::size_t s, std::size_t n) {
  std::vector<std::uint8_t> x(n);
  for (std::size_t k = 0; k < n; ++k) x[k] = (s >> k) & 1U;
  return x;
}

inline std::size_t index_of_state(const std::vector<std::uint8_t>& x) {
  std::size_t s = 0;
  for (std::size_t k = 0; k < x.size(); ++k)
    if (x[k]) s |= std::size_t{1} << k;
  return s;
}

/// Neuron 0 first.
inline std::string bitstring(std::size_t s, std::size_t n) {
  std::string out(n, '0');
  for (std::size_t k = 0; k < n; ++k)
    if ((s >> k) & 1U) out[k] = '1';
  return out;
}

inline void require_enumerable(std::size_t n) {
  if (n > kMaxEnumeration) throw std::invalid_argument("exact enumeration limited to 20 neurons");
}

/// Energies of all 2^n states with E(0) = 0, by Gray-code walk.
inline std::vector<double> energy_table(const EnergyModel& m) {
  const auto n = m.size();
  require_enumerable(n);
  const std::size_t states = std::size_t{1} << n;
  std::vector<double> e(states, 0.0);
  const auto membership = m.terms_by_neuron();
  std::vector<std::uint8_t> x(n, 0);
  double cur = modular_energy(m, x);
  const double e0 = cur;
  e[0] = 0.0;
  for (std::size_t i = 1; i < states; ++i) {
    const auto k = static_cast<std::size_t>(__builtin_ctzll(i));
    const double field = conditional_field(m, x, k, &membership[k]);
    cur += x[k] ? field : -field;
    x[k] ^= 1;
    e[index_of_state(x)] = cur - e0;
  }
  return e;
}

inline Distribution boltzmann_distribution(const std::vector<double>& energies, std::size_t n) {
  Distribution d{n, std::vector<double>(energies.size())};
  const double emin = *std::min_element(energies.begin(), energies.end());
  double z = 0.0;
  for (std::size_t s = 0; s < energies.size(); ++s) z += d.p[s] = std::exp(-(energies[s] - emin));
  for (auto& v : d.p) v /= z;
  return d;
}

inline Distribution exact_stationary(const EnergyModel& m) { return boltzmann_distribution(energy_table(m), m.size()); }

/// Time-weighted occupancy of the joint state of `neurons` over
/// [t_start + burn_in, t_end]. Default burn-in: 10% of the simulated span.
inline Distribution empirical_distribution(const StateChangeStream& stream, const std::vector<NeuronId>& neurons,
                                           std::optional<Seconds> burn_in = std::nullopt) {
  require_enumerable(neurons.size());
  const Seconds span = stream.t_end - stream.t_start;
  const Seconds t0 = stream.t_start + (burn_in ? *burn_in : 0.1 * span);
  if (!(stream.t_end > t0)) throw std::invalid_argument("empirical_distribution: empty window");

  std::vector<int> bit(stream.initial.size(), -1);
  for (std::size_t i = 0; i < neurons.size(); ++i) {
    if (neurons[i] >= stream.initial.size()) throw std::out_of_range("empirical_distribution: neuron id");
    bit[neurons[i]] = static_cast<int>(i);
  }
  std::size_t s = 0;
  for (std::size_t i = 0; i < neurons.size(); ++i)
    if (stream.initial[neurons[i]]) s |= std::size_t{1} << i;

  Distribution d{neurons.size(), std::vector<double>(std::size_t{1} << neurons.size(), 0.0)};
  Seconds last = t0;
  for (const auto& r : stream.records) {
    if (r.time > t0) {
      const Seconds until = std::min(r.time, stream.t_end);
      if (until > last) d.p[s] += until - last;
      last = std::max(last, until);
    }
    const int b = bit[r.neuron];
    if (b < 0) continue;
    if (r.value)
      s |= std::size_t{1} << b;
    else
      s &= ~(std::size_t{1} << b);
  }
  if (stream.t_end > last) d.p[s] += stream.t_end - last;
  const double total = stream.t_end - t0;
  for (auto& v : d.p) v /= total;
  return d;
}

inline std::vector<NeuronId> first_neurons(std::size_t n) {
  std::vector<NeuronId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<NeuronId>(i);
  return ids;
}

/// Marginal over the listed dimensions of a joint distribution.
inline Distribution marginalize(const Distribution& joint, const std::vector<std::size_t>& dims) {
  require_enumerable(dims.size());
  Distribution d{dims.size(), std::vector<double>(std::size_t{1} << dims.size(), 0.0)};
  for (std::size_t s = 0; s < joint.p.size(); ++s) {
    std::size_t t = 0;
    for (std::size_t i = 0; i < dims.size(); ++i)
      if ((s >> dims[i]) & 1U) t |= std::size_t{1} << i;
    d.p[t] += joint.p[s];
  }
  return d;
}

/// -log of the marginal probability, shifted so E(0) = 0 when p(0) > 0
/// (otherwise so that the minimum is 0). Impossible states map to +inf.
inline std::vector<double> marginal_energy(const Distribution& joint, const std::vector<std::size_t>& dims) {
  const auto marg = marginalize(joint, dims);
  std::vector<double> e(marg.p.size());
  for (std::size_t s = 0; s < e.size(); ++s)
    e[s] = marg.p[s] > 0 ? -std::log(marg.p[s]) : std::numeric_limits<double>::infinity();
  const double ref = marg.p[0] > 0 ? e[0] : *std::min_element(e.begin(), e.end());
  for (auto& v : e) v -= ref;
  return e;
}

struct Divergence {
  double tv = 0.0;
  double kl = 0.0;
};

inline constexpr double kKlFloor = 1e-12;

/// TV = 1/2 sum |p - q|; KL(p || q) with q floored at 1e-12.
inline Divergence divergence(const Distribution& p, const Distribution& q) {
  if (p.p.size() != q.p.size()) throw std::invalid_argument("divergence: support mismatch");
  Divergence d;
  for (std::size_t s = 0; s < p.p.size(); ++s) {
    d.tv += std::abs(p.p[s] - q.p[s]);
    if (p.p[s] > 0) d.kl += p.p[s] * std::log(p.p[s] / std::max(q.p[s], kKlFloor));
  }
  d.tv *= 0.5;
  return d;
}

inline void write_distribution_csv(const Distribution& d, std::ostream& os) {
  os << "state,probability\n" << std::setprecision(17);
  for (std::size_t s = 0; s < d.p.size(); ++s) os << bitstring(s, d.n) << ',' << d.p[s] << '\n';
}

}  // namespace spikecsp
