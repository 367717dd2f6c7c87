#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <vector>

#include "network.hpp"

namespace spikecsp {

/// Event kinds in tie-break priority order: at equal times PSP offsets are
/// applied first, then a neuron's own on->off transition, then refractory
/// ends, then PSP onsets, and spikes last.
enum class EventKind : std::uint8_t {
  psp_offset = 0,
  neuron_off = 1,
  refractory_end = 2,
  psp_onset = 3,
  spike = 4,
};

struct Event {
  Seconds time = 0.0;
  EventKind kind = EventKind::spike;
  std::uint32_t subject = 0;  // PSP group id for psp_* kinds, neuron id otherwise
  std::uint64_t sequence = 0;
};

/// Total order (time, kind, subject, sequence).
inline std::strong_ordering tie_break(const Event& a, const Event& b) {
  if (a.time < b.time) return std::strong_ordering::less;
  if (b.time < a.time) return std::strong_ordering::greater;
  if (auto c = a.kind <=> b.kind; c != 0) return c;
  if (auto c = a.subject <=> b.subject; c != 0) return c;
  return a.sequence <=> b.sequence;
}

inline bool event_before(const Event& a, const Event& b) { return tie_break(a, b) < 0; }

/// Binary min-heap over a fixed set of integer keys with O(log n) update and
/// removal. Each key has at most one entry; ties on time break by key.
class IndexedHeap {
 public:
  explicit IndexedHeap(std::size_t capacity = 0) { reset(capacity); }

  void reset(std::size_t capacity) {
    heap_.clear();
    pos_.assign(capacity, kAbsent);
    time_.assign(capacity, std::numeric_limits<double>::infinity());
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  bool contains(std::uint32_t key) const { return pos_[key] != kAbsent; }
  std::uint32_t top() const { return heap_.front(); }
  double top_time() const { return time_[heap_.front()]; }
  double time_of(std::uint32_t key) const { return time_[key]; }

  void set(std::uint32_t key, double t) {
    if (pos_[key] == kAbsent) {
      time_[key] = t;
      pos_[key] = static_cast<std::uint32_t>(heap_.size());
      heap_.push_back(key);
      sift_up(pos_[key]);
      return;
    }
    const double old = time_[key];
    time_[key] = t;
    if (t < old)
      sift_up(pos_[key]);
    else
      sift_down(pos_[key]);
  }

  void remove(std::uint32_t key) {
    const auto i = pos_[key];
    if (i == kAbsent) return;
    const auto last = heap_.back();
    heap_.pop_back();
    pos_[key] = kAbsent;
    time_[key] = std::numeric_limits<double>::infinity();
    if (last == key) return;
    heap_[i] = last;
    pos_[last] = i;
    sift_up(i);
    sift_down(pos_[last]);
  }

 private:
  static constexpr std::uint32_t kAbsent = std::numeric_limits<std::uint32_t>::max();

  bool less(std::uint32_t a, std::uint32_t b) const {
    return time_[a] < time_[b] || (time_[a] == time_[b] && a < b);
  }

  void place(std::uint32_t i, std::uint32_t key) {
    heap_[i] = key;
    pos_[key] = i;
  }

  void sift_up(std::uint32_t i) {
    const auto key = heap_[i];
    while (i > 0) {
      const auto parent = (i - 1) / 2;
      if (!less(key, heap_[parent])) break;
      place(i, heap_[parent]);
      i = parent;
    }
    place(i, key);
  }

  void sift_down(std::uint32_t i) {
    const auto key = heap_[i];
    const auto n = static_cast<std::uint32_t>(heap_.size());
    for (;;) {
      auto child = 2 * i + 1;
      if (child >= n) break;
      if (child + 1 < n && less(heap_[child + 1], heap_[child])) ++child;
      if (!less(heap_[child], key)) break;
      place(i, heap_[child]);
      i = child;
    }
    place(i, key);
  }

  std::vector<std::uint32_t> heap_;
  std::vector<std::uint32_t> pos_;
  std::vector<double> time_;
};

}  // namespace spikecsp
