#pragma once

// Continuous-time Gibbs sampling over an energy model: unit k turns on at
// rate rho0 * sigma(u_k) and off at rate rho0 * sigma(-u_k), with
// u_k = E(x_k = 0) - E(x_k = 1). Simulated exactly with per-unit exponential
// clocks that are redrawn whenever u_k changes.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "compilers.hpp"
#include "energy.hpp"
#include "engine.hpp"
#include "events.hpp"
#include "rng.hpp"
#include "trace.hpp"

namespace spikecsp {

struct GibbsConfig {
  double rho0 = 1.0;
  SimConfig sim;  // stopping criteria, seed, recording; off_transition is ignored
};

struct EventRates {
  double spiking = 0.0;  // R(u) = 2 sigma(u) / tau
  double gibbs = 0.0;    // R_sym(u) = 2 rho0 / (2 + e^u + e^-u)
  double factor = 0.0;   // F(u) = (1 + e^u) / (tau rho0)
};

inline EventRates event_rate_pair(double u, Seconds tau, double rho0) {
  return {2.0 * sigmoid(u) / tau, 2.0 * rho0 / (2.0 + std::exp(u) + std::exp(-u)), (1.0 + std::exp(u)) / (tau * rho0)};
}

class GibbsSampler {
 public:
  explicit GibbsSampler(EnergyModel model) : model_(std::move(model)), membership_(model_.terms_by_neuron()) {
    affected_.resize(model_.size());
    for (std::size_t k = 0; k < model_.size(); ++k) {
      auto& a = affected_[k];
      for (const auto l : model_.neighbors(k)) a.push_back(l);
      for (const auto i : membership_[k])
        for (const auto m : model_.terms()[i].members) a.push_back(m);
      a.push_back(static_cast<NeuronId>(k));
      std::sort(a.begin(), a.end());
      a.erase(std::unique(a.begin(), a.end()), a.end());
    }
  }

  const EnergyModel& model() const { return model_; }

  template <class Observer = NoObserver>
  RunResult run(const GibbsConfig& cfg, const std::vector<std::uint8_t>& initial = {}, Seconds t0 = 0.0,
                Observer&& observe = {}) {
    if (!(cfg.rho0 > 0)) throw std::invalid_argument("GibbsConfig: rho0 must be positive");
    const auto& sc = cfg.sim;
    if (!sc.max_time && !sc.max_state_changes)
      throw std::invalid_argument("GibbsConfig: at least one stopping criterion must be finite");
    const auto n = model_.size();
    if (!initial.empty() && initial.size() != n) throw std::invalid_argument("initial state size does not match model");

    rng_ = make_rng(sc.seed);
    x_ = initial.empty() ? std::vector<std::uint8_t>(n, 0) : initial;
    counts_.assign(model_.terms().size(), 0);
    for (std::size_t i = 0; i < model_.terms().size(); ++i) counts_[i] = count_active(model_.terms()[i].members, x_);
    u_.assign(n, 0.0);
    clocks_.reset(n);
    now_ = t0;
    rho0_ = cfg.rho0;
    for (std::size_t k = 0; k < n; ++k) resample(static_cast<NeuronId>(k));

    RunResult result;
    result.stream.initial = x_;
    result.stream.principal_count = n;
    result.stream.t_start = t0;
    std::optional<StopReason> stop;
    while (!stop) {
      if (clocks_.empty()) {
        stop = StopReason::quiescent;
        if (sc.max_time) now_ = *sc.max_time;
        break;
      }
      const Seconds t = clocks_.top_time();
      if (sc.max_time && t > *sc.max_time) {
        now_ = *sc.max_time;
        stop = StopReason::max_time;
        break;
      }
      now_ = t;
      const auto k = clocks_.top();
      const StateChange rec{now_, k, static_cast<std::uint8_t>(x_[k] ^ 1U), u_[k]};
      x_[k] ^= 1U;
      for (const auto i : membership_[k]) {
        if (x_[k])
          ++counts_[i];
        else
          --counts_[i];
      }
      ++result.state_changes;
      ++result.principal_changes;
      if (sc.record == RecordMode::full_trace) result.stream.records.push_back(rec);
      for (const auto l : affected_[k]) resample(l);
      if (!observe(rec, static_cast<const std::vector<std::uint8_t>&>(x_)))
        stop = StopReason::observer;
      else if (sc.max_state_changes && result.state_changes >= *sc.max_state_changes)
        stop = StopReason::max_state_changes;
    }
    result.reason = *stop;
    result.stream.t_end = now_;
    result.final_state = {now_, x_};
    return result;
  }

 private:
  double field(NeuronId k) const {
    double u = model_.bias(k);
    for (const auto l : model_.neighbors(k))
      if (x_[l]) u += model_.weight(k, l);
    for (const auto i : membership_[k]) {
      const auto& t = model_.terms()[i];
      const auto others = counts_[i] - (x_[k] ? 1 : 0);
      u += t.by_count(others) - t.by_count(others + 1);
    }
    return u;
  }

  void resample(NeuronId k) {
    u_[k] = field(k);
    const double u = std::clamp(u_[k], -kPotentialClamp, kPotentialClamp);
    const double rate = rho0_ * sigmoid(x_[k] ? -u : u);
    clocks_.set(k, now_ + standard_exponential(rng_) / rate);
  }

  EnergyModel model_;
  std::vector<std::vector<std::size_t>> membership_;
  std::vector<std::vector<NeuronId>> affected_;
  Rng rng_;
  std::vector<std::uint8_t> x_;
  std::vector<std::size_t> counts_;
  std::vector<double> u_;
  IndexedHeap clocks_;
  Seconds now_ = 0.0;
  double rho0_ = 1.0;
};

template <class Observer = NoObserver>
RunResult gibbs_run(const EnergyModel& model, const GibbsConfig& cfg, const std::vector<std::uint8_t>& initial = {},
                    Observer&& observe = {}) {
  GibbsSampler g(model);
  return g.run(cfg, initial, 0.0, std::forward<Observer>(observe));
}

/// Replaces each WTA auxiliary neuron by direct reciprocal inhibition of
/// weight w_WTA between every pair of its members. The b_WTA bias increments
/// and all problem couplings are kept, so the result is a purely quadratic
/// model shared by the spiking network and the Gibbs sampler.
inline CompiledProblem symmetrize_tsp(const CompiledProblem& cp) {
  if (cp.kind != ProblemKind::tsp || !cp.tsp) throw std::invalid_argument("symmetrize_tsp: not a compiled TSP problem");
  const auto p = cp.network.principal_count();
  CompiledProblem out;
  out.kind = ProblemKind::tsp;
  out.tsp = cp.tsp;
  out.groups = cp.groups;
  out.model = EnergyModel(p);
  for (std::size_t k = 0; k < p; ++k) {
    const auto& nr = cp.network.neuron(static_cast<NeuronId>(k));
    out.network.add_neuron(nr);
    out.model.set_bias(k, nr.bias);
  }
  for (const auto& s : cp.network.synapses())
    if (s.pre < p && s.post < p) out.network.add_synapse(s);
  for (std::size_t k = 0; k < p; ++k)
    for (const auto l : cp.model.neighbors(k))
      if (l > k) out.model.set_weight(k, l, cp.model.weight(k, l));
  for (const auto& t : cp.model.terms()) {
    if (t.kind != ModularTerm::Kind::wta) throw std::invalid_argument("symmetrize_tsp: unexpected non-WTA term");
    for (std::size_t a = 0; a < t.members.size(); ++a)
      for (std::size_t b = a + 1; b < t.members.size(); ++b) {
        out.network.add_synapse({t.members[a], t.members[b], t.w_wta, 0.0, std::nullopt, true});
        out.model.add_weight(t.members[a], t.members[b], t.w_wta);
      }
  }
  out.predicted = out.actual();
  return out;
}

}  // namespace spikecsp
