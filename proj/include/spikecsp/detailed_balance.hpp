#pragma once

// Variant dynamics with stochastic off-transitions at rate 1/tau. Its
// stationary law satisfies detailed balance, so the per-neuron probability
// flows p(x with x_k = 0) e^{u_k} / tau - p(x) / tau vanish at the exact
// distribution whenever the weights are symmetric.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "energy.hpp"
#include "engine.hpp"
#include "network.hpp"

namespace spikecsp {

/// Largest |flow| over all states with x_k = 1, per neuron, in units of
/// probability per tau.
inline std::vector<double> flow_residuals(const Network& net, const Distribution& p) {
  const auto n = net.size();
  if (p.n != n) throw std::invalid_argument("flow_residuals: distribution size does not match network");
  require_enumerable(n);
  std::vector<double> worst(n, 0.0);
  NetworkState st;
  for (std::size_t s = 0; s < p.p.size(); ++s) {
    st.x = state_of_index(s, n);
    for (std::size_t k = 0; k < n; ++k) {
      if (!st.x[k]) continue;
      const auto off = s & ~(std::size_t{1} << k);
      const double u = membrane_potential(net, st, static_cast<NeuronId>(k));
      const double r = p.p[off] * std::exp(u) - p.p[s];
      worst[k] = std::max(worst[k], std::abs(r));
    }
  }
  return worst;
}

struct DetailedBalanceReport {
  Distribution exact;
  Distribution empirical;
  Divergence div;
  std::vector<double> residuals;
  double max_residual = 0.0;
  bool symmetric = true;
  std::uint64_t state_changes = 0;
};

/// Simulates the variant on a network of principal neurons only and compares
/// against the exact Boltzmann distribution. Asymmetric weights are averaged
/// for the reference distribution; their residuals are then reported nonzero.
inline DetailedBalanceReport detailed_balance_variant_check(const Network& net, std::uint64_t state_changes,
                                                            std::uint64_t seed = 1) {
  if (net.size() > 10) throw std::invalid_argument("detailed_balance_variant_check: at most 10 neurons");
  if (net.principal_count() != net.size())
    throw std::invalid_argument("detailed_balance_variant_check: auxiliary neurons are not supported");
  DetailedBalanceReport rep;
  const auto model = energy_model_from_network(net, true);
  try {
    energy_model_from_network(net, false);
  } catch (const std::invalid_argument&) {
    rep.symmetric = false;
  }
  rep.exact = exact_stationary(model);
  rep.residuals = flow_residuals(net, rep.exact);
  for (const auto r : rep.residuals) rep.max_residual = std::max(rep.max_residual, r);

  Network sim = net;
  sim.claims_symmetry = false;
  SimConfig cfg;
  cfg.max_state_changes = state_changes;
  cfg.seed = seed;
  cfg.off_transition = OffTransition::exponential;
  const auto res = run(sim, cfg);
  rep.state_changes = res.state_changes;
  rep.empirical = empirical_distribution(res.stream, first_neurons(net.size()));
  rep.div = divergence(rep.empirical, rep.exact);
  return rep;
}

}  // namespace spikecsp
