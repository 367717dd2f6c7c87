#pragma once

// Exact event-driven simulation of stochastic spiking neurons with
// exponential firing rate exp(u)/tau, rectangular PSPs, absolute
// refractoriness and constant per-synapse delays.
//
// Membrane potentials are piecewise constant between events, so a pending
// spike candidate drawn from Exp(exp(u)/tau) is exact until u next changes;
// at that point the candidate is discarded and drawn again.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "events.hpp"
#include "network.hpp"
#include "rng.hpp"
#include "trace.hpp"

namespace spikecsp {

enum class RecordMode : std::uint8_t { full_trace, counts_only };
enum class CountMode : std::uint8_t { all_neurons, principal_only };

/// How an active neuron returns to the off state: after exactly its PSP
/// length (the spiking model), or stochastically at rate 1/psp_length (the
/// detailed-balance variant, in which refractoriness lasts as long as the
/// on-period).
enum class OffTransition : std::uint8_t { deterministic, exponential };

enum class StopReason : std::uint8_t { max_time, max_state_changes, observer, quiescent };

struct SimConfig {
  std::optional<Seconds> max_time;
  std::optional<std::uint64_t> max_state_changes;
  std::uint64_t seed = 1;
  RecordMode record = RecordMode::full_trace;
  CountMode count_mode = CountMode::all_neurons;
  OffTransition off_transition = OffTransition::deterministic;
  std::size_t event_queue_cap = std::size_t{1} << 26;
};

struct RunResult {
  StateChangeStream stream;  // records are empty unless RecordMode::full_trace
  std::uint64_t state_changes = 0;
  std::uint64_t principal_changes = 0;
  StopReason reason = StopReason::max_time;
  NetworkState final_state;
};

class RunawayActivity : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kPotentialClamp = 700.0;

/// Firing rate exp(u)/tau with u clamped to +-700.
inline double firing_rate(double u, Seconds tau) { return std::exp(std::clamp(u, -kPotentialClamp, kPotentialClamp)) / tau; }

/// Next spike candidate for a non-refractory neuron whose potential stays at
/// `u`: t_now + Exp(rate = exp(u)/tau).
inline Seconds sample_next_spike(double u, Seconds tau, Rng& rng, Seconds t_now) {
  const double mean = tau * std::exp(-std::clamp(u, -kPotentialClamp, kPotentialClamp));
  return t_now + standard_exponential(rng) * mean;
}

/// Observer that accepts every record.
struct NoObserver {
  bool operator()(const StateChange&, const std::vector<std::uint8_t>&) const { return true; }
};

namespace detail {

/// Fixed-point potentials make sums independent of summation order, so
/// traces do not depend on synapse list order and never drift.
inline constexpr double kFixedScale = 0x1.0p40;
inline constexpr double kFixedLimit = 0x1.0p22;

inline std::int64_t to_fixed(double v) {
  if (!(std::abs(v) < kFixedLimit)) throw std::invalid_argument("weight or bias magnitude too large for the engine");
  return std::llround(v * kFixedScale);
}

inline double from_fixed(std::int64_t v) { return static_cast<double>(v) / kFixedScale; }

}  // namespace detail

/// Spiking-network simulator. Holds a compiled copy of the network; one
/// instance runs one simulation at a time and may be reused across runs.
class SpikingSimulator {
 public:
  explicit SpikingSimulator(const Network& net) { compile(net); }

  std::size_t size() const { return tau_.size(); }

  template <class Observer = NoObserver>
  RunResult run(const SimConfig& cfg, const NetworkState& initial, Observer&& observe = {}) {
    if (!cfg.max_time && !cfg.max_state_changes)
      throw std::invalid_argument("SimConfig: at least one stopping criterion must be finite");
    if (!initial.x.empty() && initial.x.size() != size())
      throw std::invalid_argument("initial state size does not match network");
    reset(cfg, initial);

    RunResult result;
    result.stream.principal_count = principal_count_;
    result.stream.t_start = initial.time;
    result.stream.initial = x_;

    auto emit = [&](NeuronId k, std::uint8_t value) {
      StateChange rec{now_, k, value, detail::from_fixed(u_[k])};
      x_[k] = value;
      ++result.state_changes;
      const bool principal = k < principal_count_;
      if (principal) ++result.principal_changes;
      if (cfg.record == RecordMode::full_trace) result.stream.records.push_back(rec);
      const auto counted = cfg.count_mode == CountMode::all_neurons ? result.state_changes : result.principal_changes;
      if (!observe(rec, static_cast<const std::vector<std::uint8_t>&>(x_))) {
        stop_ = StopReason::observer;
      } else if (cfg.max_state_changes && counted >= *cfg.max_state_changes &&
                 (principal || cfg.count_mode == CountMode::all_neurons)) {
        stop_ = StopReason::max_state_changes;
      }
    };

    while (!stop_) {
      const bool have_det = !queue_.empty();
      const bool have_spike = !candidates_.empty();
      if (!have_det && !have_spike) {
        stop_ = StopReason::quiescent;
        if (cfg.max_time) now_ = *cfg.max_time;
        break;
      }
      // Every deterministic kind precedes a spike at equal time.
      const bool det_first = have_det && (!have_spike || queue_.top().event.time <= candidates_.top_time());
      const Seconds t_next = det_first ? queue_.top().event.time : candidates_.top_time();
      if (cfg.max_time && t_next > *cfg.max_time) {
        now_ = *cfg.max_time;
        stop_ = StopReason::max_time;
        break;
      }
      now_ = t_next;
      if (det_first) {
        while (!stop_ && !queue_.empty() && queue_.top().event.time == t_next) {
          const Queued q = queue_.top();
          queue_.pop();
          apply(q, emit);
        }
      } else {
        fire(candidates_.top(), emit, true);
      }
      if (queue_.size() > cfg.event_queue_cap) throw RunawayActivity("event queue exceeded its cap");
      flush_dirty();
    }

    result.reason = *stop_;
    result.stream.t_end = now_;
    result.final_state.time = now_;
    result.final_state.x = x_;
    return result;
  }

 private:
  struct Path {
    NeuronId post;
    std::int64_t weight;
  };
  struct Group {
    NeuronId pre;
    Seconds delay;
    Seconds duration;  // < 0: lasts as long as the presynaptic on-period
    std::uint32_t path_begin, path_end;
  };
  struct Queued {
    Event event;
    Seconds payload;  // onset events carry the PSP duration
  };
  struct Later {
    bool operator()(const Queued& a, const Queued& b) const { return event_before(b.event, a.event); }
  };

  void compile(const Network& net) {
    const auto rep = validate_network(net);
    // Symmetry is not required to simulate; everything else is.
    for (const auto& e : rep.errors)
      if (e.rfind("asymmetric", 0) != 0) throw std::invalid_argument("invalid network: " + e);

    const auto n = net.size();
    principal_count_ = net.principal_count();
    tau_.resize(n);
    refractory_.resize(n);
    bias_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      tau_[k] = net.neurons()[k].psp_length;
      refractory_[k] = net.neurons()[k].refractory;
      bias_[k] = detail::to_fixed(net.neurons()[k].bias);
    }

    struct Directed {
      NeuronId pre, post;
      double weight;
      Seconds delay, duration;
    };
    std::vector<Directed> directed;
    directed.reserve(net.directed_synapse_count());
    for (const auto& s : net.synapses()) {
      const double dur = s.psp_duration ? *s.psp_duration : -1.0;
      directed.push_back({s.pre, s.post, s.weight, s.delay, dur});
      if (s.reciprocal) directed.push_back({s.post, s.pre, s.weight, s.delay, dur});
    }
    // Canonical order: groups and paths never depend on synapse list order.
    std::sort(directed.begin(), directed.end(), [](const Directed& a, const Directed& b) {
      if (a.pre != b.pre) return a.pre < b.pre;
      if (a.delay != b.delay) return a.delay < b.delay;
      if (a.duration != b.duration) return a.duration < b.duration;
      if (a.post != b.post) return a.post < b.post;
      return a.weight < b.weight;
    });
    group_begin_.assign(n + 1, 0);
    for (std::size_t i = 0; i < directed.size(); ++i) {
      const auto& d = directed[i];
      const bool new_group = groups_.empty() || groups_.back().pre != d.pre || groups_.back().delay != d.delay ||
                             groups_.back().duration != d.duration;
      if (new_group) groups_.push_back({d.pre, d.delay, d.duration, static_cast<std::uint32_t>(i), 0});
      paths_.push_back({d.post, detail::to_fixed(d.weight)});
      groups_.back().path_end = static_cast<std::uint32_t>(i + 1);
    }
    for (const auto& g : groups_) ++group_begin_[g.pre + 1];
    for (std::size_t k = 0; k < n; ++k) group_begin_[k + 1] += group_begin_[k];
  }

  void reset(const SimConfig& cfg, const NetworkState& initial) {
    const auto n = size();
    rng_ = make_rng(cfg.seed);
    off_mode_ = cfg.off_transition;
    now_ = initial.time;
    stop_.reset();
    sequence_ = 0;
    queue_ = {};
    candidates_.reset(n);
    x_.assign(n, 0);
    u_ = bias_;
    sampled_u_.assign(n, 0);
    refractory_now_.assign(n, 0);
    group_active_.assign(groups_.size(), 0);
    dirty_.clear();
    is_dirty_.assign(n, 0);

    // Neurons active in the initial state behave as if they spiked at t0.
    auto silent = [](NeuronId, std::uint8_t) {};
    if (!initial.x.empty())
      for (NeuronId k = 0; k < n; ++k)
        if (initial.x[k]) fire(k, silent, false);
    for (NeuronId k = 0; k < n; ++k) mark_dirty(k);
    flush_dirty();
  }

  void push(Seconds t, EventKind kind, std::uint32_t subject, Seconds payload = 0.0) {
    queue_.push({{t, kind, subject, sequence_++}, payload});
  }

  void mark_dirty(NeuronId k) {
    if (!is_dirty_[k]) {
      is_dirty_[k] = 1;
      dirty_.push_back(k);
    }
  }

  // Candidates are redrawn in ascending neuron order so the RNG stream is
  // consumed identically however the events of one instant were ordered.
  void flush_dirty() {
    if (dirty_.empty()) return;
    std::sort(dirty_.begin(), dirty_.end());
    for (const auto k : dirty_) {
      is_dirty_[k] = 0;
      if (refractory_now_[k]) continue;
      if (candidates_.contains(k) && sampled_u_[k] == u_[k]) continue;
      sampled_u_[k] = u_[k];
      candidates_.set(k, sample_next_spike(detail::from_fixed(u_[k]), tau_[k], rng_, now_));
    }
    dirty_.clear();
  }

  void onset(std::uint32_t g) {
    if (group_active_[g]++ > 0) return;
    const auto& grp = groups_[g];
    for (auto i = grp.path_begin; i < grp.path_end; ++i) {
      u_[paths_[i].post] += paths_[i].weight;
      mark_dirty(paths_[i].post);
    }
  }

  void offset(std::uint32_t g) {
    if (--group_active_[g] > 0) return;
    const auto& grp = groups_[g];
    for (auto i = grp.path_begin; i < grp.path_end; ++i) {
      u_[paths_[i].post] -= paths_[i].weight;
      mark_dirty(paths_[i].post);
    }
  }

  template <class Emit>
  void fire(NeuronId k, Emit& emit, bool record) {
    candidates_.remove(k);
    const Seconds on_duration =
        off_mode_ == OffTransition::deterministic ? tau_[k] : tau_[k] * standard_exponential(rng_);
    const Seconds refractory = off_mode_ == OffTransition::deterministic ? refractory_[k] : on_duration;
    refractory_now_[k] = 1;
    if (record)
      emit(k, 1);
    else
      x_[k] = 1;
    push(now_ + on_duration, EventKind::neuron_off, k);
    push(now_ + refractory, EventKind::refractory_end, k);
    for (auto g = group_begin_[k]; g < group_begin_[k + 1]; ++g) {
      const auto& grp = groups_[g];
      const Seconds dur = grp.duration < 0 ? on_duration : grp.duration;
      if (grp.delay == 0.0) {
        onset(g);
        push(now_ + dur, EventKind::psp_offset, g);
      } else {
        push(now_ + grp.delay, EventKind::psp_onset, g, dur);
      }
    }
  }

  template <class Emit>
  void apply(const Queued& q, Emit& emit) {
    const auto s = q.event.subject;
    switch (q.event.kind) {
      case EventKind::psp_offset:
        offset(s);
        break;
      case EventKind::neuron_off:
        emit(s, 0);
        break;
      case EventKind::refractory_end:
        refractory_now_[s] = 0;
        mark_dirty(s);
        break;
      case EventKind::psp_onset:
        onset(s);
        push(now_ + q.payload, EventKind::psp_offset, s);
        break;
      case EventKind::spike:
        break;
    }
  }

  // Compiled network.
  std::size_t principal_count_ = 0;
  std::vector<Seconds> tau_, refractory_;
  std::vector<std::int64_t> bias_;
  std::vector<Group> groups_;
  std::vector<Path> paths_;
  std::vector<std::uint32_t> group_begin_;

  // Run state.
  Rng rng_;
  OffTransition off_mode_ = OffTransition::deterministic;
  Seconds now_ = 0.0;
  std::optional<StopReason> stop_;
  std::uint64_t sequence_ = 0;
  std::priority_queue<Queued, std::vector<Queued>, Later> queue_;
  IndexedHeap candidates_;
  std::vector<std::uint8_t> x_;
  std::vector<std::int64_t> u_, sampled_u_;
  std::vector<std::uint8_t> refractory_now_;
  std::vector<std::uint32_t> group_active_;
  std::vector<NeuronId> dirty_;
  std::vector<std::uint8_t> is_dirty_;
};

/// Convenience wrapper: compile and run once.
template <class Observer = NoObserver>
RunResult run(const Network& net, const SimConfig& cfg, const NetworkState& initial = {}, Observer&& observe = {}) {
  SpikingSimulator sim(net);
  return sim.run(cfg, initial, std::forward<Observer>(observe));
}

}  // namespace spikecsp
