#pragma once

// Sampler-agnostic metrics computed from state-change streams: energy jumps,
// undefined-variable statistics, cumulative performance curves, solve times
// and a two-sample Kolmogorov-Smirnov test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "compilers.hpp"
#include "energy.hpp"
#include "network.hpp"
#include "rng.hpp"
#include "trace.hpp"

namespace spikecsp {

/// Incrementally tracks a principal state and answers conditional fields
/// against an energy model.
class EnergyTracker {
 public:
  explicit EnergyTracker(const EnergyModel& m) : m_(&m), membership_(m.terms_by_neuron()) {}

  void reset(const std::vector<std::uint8_t>& x) {
    x_.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m_->size()));
    counts_.assign(m_->terms().size(), 0);
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] = count_active(m_->terms()[i].members, x_);
  }

  double field(std::size_t k) const {
    double u = m_->bias(k);
    for (const auto l : m_->neighbors(k))
      if (x_[l]) u += m_->weight(k, l);
    for (const auto i : membership_[k]) {
      const auto& t = m_->terms()[i];
      const auto others = counts_[i] - (x_[k] ? 1 : 0);
      u += t.by_count(others) - t.by_count(others + 1);
    }
    return u;
  }

  /// Sets x_k and returns E(after) - E(before).
  double set(std::size_t k, std::uint8_t value) {
    if (x_[k] == value) return 0.0;
    const double f = field(k);
    x_[k] = value;
    for (const auto i : membership_[k]) {
      if (value)
        ++counts_[i];
      else
        --counts_[i];
    }
    return value ? -f : f;
  }

  const std::vector<std::uint8_t>& state() const { return x_; }

 private:
  const EnergyModel* m_;
  std::vector<std::vector<std::size_t>> membership_;
  std::vector<std::uint8_t> x_;
  std::vector<std::size_t> counts_;
};

/// Delta E of every principal state change; auxiliary records are skipped.
inline std::vector<double> energy_jumps(const StateChangeStream& s, const EnergyModel& model) {
  if (s.initial.size() < model.size()) throw std::invalid_argument("energy_jumps: model larger than stream state");
  EnergyTracker tr(model);
  tr.reset(s.initial);
  std::vector<double> out;
  out.reserve(s.records.size());
  for (const auto& r : s.records) {
    if (r.neuron >= model.size()) continue;
    out.push_back(tr.set(r.neuron, r.value));
  }
  return out;
}

struct Histogram {
  double lo = 0.0, hi = 0.0;
  std::vector<double> counts;
  double underflow = 0.0, overflow = 0.0;
  double total = 0.0;

  Histogram() = default;
  Histogram(double lo_, double hi_, std::size_t bins) : lo(lo_), hi(hi_), counts(bins, 0.0) {
    if (!(hi > lo) || bins == 0) throw std::invalid_argument("histogram: invalid binning");
  }

  double width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  double edge(std::size_t i) const { return lo + width() * static_cast<double>(i); }

  void add(double v, double w = 1.0) {
    total += w;
    if (v < lo) {
      underflow += w;
      return;
    }
    if (v >= hi) {
      overflow += w;
      return;
    }
    auto i = static_cast<std::size_t>((v - lo) / width());
    if (i >= counts.size()) i = counts.size() - 1;
    counts[i] += w;
  }

  std::vector<double> normalized() const {
    std::vector<double> p(counts.size(), 0.0);
    if (total > 0)
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = counts[i] / total;
    return p;
  }

  void merge(const Histogram& o) {
    if (o.counts.size() != counts.size() || o.lo != lo || o.hi != hi)
      throw std::invalid_argument("histogram: binning mismatch");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
    underflow += o.underflow;
    overflow += o.overflow;
    total += o.total;
  }
};

/// Normalized histogram of principal energy jumps pooled over a batch.
inline Histogram energy_jump_histogram(const std::vector<const StateChangeStream*>& batch, const EnergyModel& model,
                                       double lo, double hi, std::size_t bins) {
  Histogram h(lo, hi, bins);
  for (const auto* s : batch)
    for (const double d : energy_jumps(*s, model)) h.add(d);
  return h;
}

/// Fraction of jumps with |Delta E| > threshold.
inline double tail_fraction(const std::vector<double>& jumps, double threshold) {
  if (jumps.empty()) return 0.0;
  std::size_t c = 0;
  for (const double d : jumps) c += std::abs(d) > threshold ? 1 : 0;
  return static_cast<double>(c) / static_cast<double>(jumps.size());
}

/// Counts over N_undef in {0..groups}; one entry per principal state change,
/// evaluated on the state after the change.
inline std::vector<double> undefined_transition_histogram(const std::vector<const StateChangeStream*>& batch,
                                                          const CompiledProblem& cp) {
  std::vector<double> h(cp.groups.size() + 1, 0.0);
  const auto p = cp.network.principal_count();
  for (const auto* s : batch)
    replay(*s, [&](const StateChange& r, const std::vector<std::uint8_t>& x) {
      if (r.neuron >= p) return;
      h[count_undefined(readout_values(x, cp))] += 1.0;
    });
  return h;
}

inline std::vector<double> normalize(const std::vector<double>& h) {
  double t = 0.0;
  for (const double v : h) t += v;
  std::vector<double> out(h.size(), 0.0);
  if (t > 0)
    for (std::size_t i = 0; i < h.size(); ++i) out[i] = h[i] / t;
  return out;
}

/// Ratio of normalized histograms; NaN where the denominator bin is empty.
inline std::vector<double> histogram_ratio(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("histogram_ratio: size mismatch");
  const auto na = normalize(a), nb = normalize(b);
  std::vector<double> r(a.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < a.size(); ++i)
    if (nb[i] > 0) r[i] = na[i] / nb[i];
  return r;
}

/// Quality of one network state.
struct Evaluation {
  bool valid = false;
  double cost = std::numeric_limits<double>::infinity();
  double performance = 0.0;  // in [0, 1], 0 for invalid states
};

using Evaluator = std::function<Evaluation(const std::vector<std::uint8_t>&)>;

inline Evaluator tsp_evaluator(const CompiledProblem& cp, double optimum) {
  return [&cp, optimum](const std::vector<std::uint8_t>& x) {
    const auto ev = tour_cost_and_validity(readout_values(x, cp), *cp.tsp);
    Evaluation e;
    e.valid = ev.valid;
    if (ev.valid) e.cost = ev.cost;
    e.performance = tsp_performance(ev, optimum);
    return e;
  };
}

inline Evaluator sat_evaluator(const CompiledProblem& cp) {
  return [&cp](const std::vector<std::uint8_t>& x) {
    const auto a = readout_values(x, cp);
    const auto sat = satisfied_clauses(a, *cp.sat);
    Evaluation e;
    e.valid = sat == cp.sat->clauses.size();
    e.cost = static_cast<double>(cp.sat->clauses.size() - sat);
    e.performance = sat_performance(a, *cp.sat);
    return e;
  };
}

/// Curves indexed by state change (index i is the state after change i + 1).
struct PerformanceCurve {
  std::vector<double> cumulative_min_cost;  // +inf until a valid state is seen
  std::vector<double> running_mean_performance;
};

inline PerformanceCurve cumulative_performance(const StateChangeStream& s, const Evaluator& eval,
                                               std::size_t principal_count) {
  PerformanceCurve c;
  c.cumulative_min_cost.reserve(s.records.size());
  c.running_mean_performance.reserve(s.records.size());
  double best = std::numeric_limits<double>::infinity(), sum = 0.0;
  Evaluation cur;
  bool have = false;
  std::size_t i = 0;
  replay(s, [&](const StateChange& r, const std::vector<std::uint8_t>& x) {
    if (!have || r.neuron < principal_count) {
      cur = eval(x);
      have = true;
    }
    if (cur.valid) best = std::min(best, cur.cost);
    sum += cur.performance;
    ++i;
    c.cumulative_min_cost.push_back(best);
    c.running_mean_performance.push_back(sum / static_cast<double>(i));
  });
  return c;
}

struct AveragedCurve {
  std::vector<double> mean_min_cost;      // over runs with a finite value at that index
  std::vector<double> valid_fraction;     // fraction of runs that have a valid state by that index
  std::vector<double> mean_performance;   // running mean performance averaged over runs
  std::vector<double> stderr_performance;
};

/// Averages per-run curves at equal state-change indices, up to the
/// shortest run.
inline AveragedCurve average_curves(const std::vector<PerformanceCurve>& runs) {
  AveragedCurve a;
  if (runs.empty()) return a;
  std::size_t len = runs.front().cumulative_min_cost.size();
  for (const auto& r : runs) len = std::min(len, r.cumulative_min_cost.size());
  a.mean_min_cost.assign(len, std::numeric_limits<double>::infinity());
  a.valid_fraction.assign(len, 0.0);
  a.mean_performance.assign(len, 0.0);
  a.stderr_performance.assign(len, 0.0);
  const double nr = static_cast<double>(runs.size());
  for (std::size_t i = 0; i < len; ++i) {
    double sum = 0.0, cnt = 0.0, ps = 0.0, ps2 = 0.0;
    for (const auto& r : runs) {
      if (std::isfinite(r.cumulative_min_cost[i])) {
        sum += r.cumulative_min_cost[i];
        cnt += 1.0;
      }
      ps += r.running_mean_performance[i];
      ps2 += r.running_mean_performance[i] * r.running_mean_performance[i];
    }
    if (cnt > 0) a.mean_min_cost[i] = sum / cnt;
    a.valid_fraction[i] = cnt / nr;
    a.mean_performance[i] = ps / nr;
    const double var = runs.size() > 1 ? std::max(0.0, (ps2 - ps * ps / nr) / (nr - 1.0)) : 0.0;
    a.stderr_performance[i] = std::sqrt(var / nr);
  }
  return a;
}

/// First passage of a predicate along one stream.
struct FirstPassage {
  std::optional<Seconds> time;             // relative to t_start
  std::optional<std::uint64_t> changes;    // number of records up to and including the hit
};

using StatePredicate = std::function<bool(const std::vector<std::uint8_t>&)>;

inline FirstPassage first_passage(const StateChangeStream& s, const StatePredicate& pred) {
  FirstPassage fp;
  if (pred(s.initial)) {
    fp.time = 0.0;
    fp.changes = 0;
    return fp;
  }
  std::vector<std::uint8_t> x = s.initial;
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    x[s.records[i].neuron] = s.records[i].value;
    if (pred(x)) {
      fp.time = s.records[i].time - s.t_start;
      fp.changes = i + 1;
      return fp;
    }
  }
  return fp;
}

/// Median with censored entries treated as +inf.
inline double censored_median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  if (n % 2 == 1) return v[n / 2];
  const double a = v[n / 2 - 1], b = v[n / 2];
  if (std::isinf(a) || std::isinf(b)) return std::isinf(a) ? a : b;
  return 0.5 * (a + b);
}

struct SolveTimeDistribution {
  std::vector<double> times;  // +inf for censored runs
  std::size_t censored = 0;
  double median = 0.0;
};

inline SolveTimeDistribution solve_time_distribution(const std::vector<FirstPassage>& passages) {
  SolveTimeDistribution d;
  for (const auto& p : passages) {
    if (p.time) {
      d.times.push_back(*p.time);
    } else {
      d.times.push_back(std::numeric_limits<double>::infinity());
      ++d.censored;
    }
  }
  d.median = censored_median(d.times);
  return d;
}

inline SolveTimeDistribution solve_time_distribution(const std::vector<const StateChangeStream*>& batch,
                                                     const StatePredicate& pred) {
  std::vector<FirstPassage> fp;
  for (const auto* s : batch) fp.push_back(first_passage(*s, pred));
  return solve_time_distribution(fp);
}

/// Fraction of simulated time after the first hit during which the
/// predicate holds; nullopt if it never holds.
inline std::optional<double> fraction_after_first(const StateChangeStream& s, const StatePredicate& pred) {
  std::vector<std::uint8_t> x = s.initial;
  bool cur = pred(x);
  std::optional<Seconds> first = cur ? std::optional<Seconds>(s.t_start) : std::nullopt;
  Seconds last = s.t_start, on = 0.0;
  for (const auto& r : s.records) {
    if (cur) on += r.time - last;
    last = r.time;
    x[r.neuron] = r.value;
    cur = pred(x);
    if (cur && !first) first = r.time;
  }
  if (cur) on += s.t_end - last;
  if (!first) return std::nullopt;
  const Seconds span = s.t_end - *first;
  return span > 0 ? on / span : 1.0;
}

// Delays.

inline Network with_uniform_delays(Network net, Seconds d) {
  if (d < 0) throw std::invalid_argument("delay must be non-negative");
  for (auto& s : net.synapses()) s.delay = d;
  return net;
}

/// Per-synapse delays from N(mu, sigma) truncated to [lo, hi] by rejection.
/// A reciprocal synapse gets one delay for both directions.
inline Network with_gaussian_delays(Network net, Seconds mu, Seconds sigma, Seconds lo, Seconds hi,
                                    std::uint64_t seed) {
  if (!(hi >= lo) || lo < 0 || sigma < 0) throw std::invalid_argument("invalid delay distribution");
  auto rng = make_rng(seed);
  for (auto& s : net.synapses()) {
    double d;
    int tries = 0;
    do {
      d = mu + sigma * standard_normal(rng);
      if (++tries > 1000) throw std::runtime_error("delay truncation rejects too often");
    } while (d < lo || d > hi);
    s.delay = d;
  }
  return net;
}

inline constexpr Seconds kMicrosecond = 1e-6;

// Two-sample Kolmogorov-Smirnov test.

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Asymptotic Kolmogorov distribution tail Q(lambda).
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

/// Censored (+inf) values are allowed and compare equal to each other.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double sq = std::sqrt(ne);
  KsResult r;
  r.statistic = d;
  r.p_value = kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
  return r;
}

}  // namespace spikecsp
