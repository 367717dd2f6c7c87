#pragma once

// Exact reference solvers for small instances.

#include <cstdint>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <vector>

#include "problems.hpp"

namespace spikecsp {

struct TourSolution {
  double cost = 0.0;
  std::vector<std::size_t> order;  // starts at city 0
};

/// Held-Karp dynamic program over subsets; exact for directed costs.
inline TourSolution held_karp(const TspInstance& inst, std::size_t max_n = 16) {
  const auto n = inst.n;
  if (n < 2) throw std::invalid_argument("held_karp: need at least two cities");
  if (n > max_n) throw std::invalid_argument("held_karp: instance too large");
  const std::size_t full = std::size_t{1} << (n - 1);  // subsets of cities 1..n-1
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dp(full * (n - 1), inf);
  std::vector<std::uint8_t> parent(full * (n - 1), 0);
  auto at = [&](std::size_t s, std::size_t j) -> std::size_t { return s * (n - 1) + j; };
  for (std::size_t j = 0; j + 1 < n; ++j) dp[at(std::size_t{1} << j, j)] = inst.cost(0, j + 1);
  for (std::size_t s = 1; s < full; ++s)
    for (std::size_t j = 0; j + 1 < n; ++j) {
      if (!((s >> j) & 1U)) continue;
      const double base = dp[at(s, j)];
      if (base == inf) continue;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        if ((s >> k) & 1U) continue;
        const auto t = s | (std::size_t{1} << k);
        const double c = base + inst.cost(j + 1, k + 1);
        if (c < dp[at(t, k)]) {
          dp[at(t, k)] = c;
          parent[at(t, k)] = static_cast<std::uint8_t>(j);
        }
      }
    }
  TourSolution best{inf, {}};
  std::size_t last = 0;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double c = dp[at(full - 1, j)] + inst.cost(j + 1, 0);
    if (c < best.cost) {
      best.cost = c;
      last = j;
    }
  }
  std::vector<std::size_t> rev;
  std::size_t s = full - 1, j = last;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    rev.push_back(j + 1);
    const auto pj = parent[at(s, j)];
    s &= ~(std::size_t{1} << j);
    j = pj;
  }
  best.order.push_back(0);
  best.order.insert(best.order.end(), rev.rbegin(), rev.rend());
  return best;
}

struct SatCount {
  bool satisfiable = false;
  std::uint64_t count = 0;
  std::vector<std::uint8_t> witness;  // per variable (index 0 = variable 1)
};

/// Exhaustive enumeration in Gray-code order with incremental per-clause
/// true-literal counts.
inline SatCount exhaustive_sat(const CnfFormula& f, std::size_t max_vars = 26) {
  f.validate();
  const auto n = f.n_vars;
  if (n > max_vars) throw std::invalid_argument("exhaustive_sat: too many variables");
  std::vector<std::vector<std::pair<std::size_t, bool>>> occ(n);  // (clause, positive)
  for (std::size_t c = 0; c < f.clauses.size(); ++c)
    for (const auto l : f.clauses[c]) occ[static_cast<std::size_t>(std::abs(l)) - 1].emplace_back(c, l > 0);

  std::vector<std::uint8_t> x(n, 0);
  std::vector<int> true_lits(f.clauses.size(), 0);
  std::size_t unsat = 0;
  for (std::size_t c = 0; c < f.clauses.size(); ++c) {
    for (const auto l : f.clauses[c]) true_lits[c] += l < 0 ? 1 : 0;
    if (true_lits[c] == 0) ++unsat;
  }
  SatCount out;
  auto record = [&] {
    if (unsat) return;
    if (!out.satisfiable) out.witness = x;
    out.satisfiable = true;
    ++out.count;
  };
  record();
  const std::uint64_t states = std::uint64_t{1} << n;
  for (std::uint64_t i = 1; i < states; ++i) {
    const auto v = static_cast<std::size_t>(__builtin_ctzll(i));
    x[v] ^= 1;
    for (const auto& [c, positive] : occ[v]) {
      const bool now_true = positive == (x[v] != 0);
      const int before = true_lits[c];
      true_lits[c] += now_true ? 1 : -1;
      if (before == 0 && true_lits[c] > 0) --unsat;
      if (before > 0 && true_lits[c] == 0) ++unsat;
    }
    record();
  }
  return out;
}

/// Draws random k-SAT formulas until one is satisfiable.
inline CnfFormula random_satisfiable_ksat(std::size_t n_vars, std::size_t m, std::uint64_t seed, std::size_t k = 3,
                                          std::size_t max_attempts = 10000) {
  for (std::size_t a = 0; a < max_attempts; ++a) {
    auto f = random_ksat(n_vars, m, derive_run_seed(seed, a), k);
    if (exhaustive_sat(f).satisfiable) return f;
  }
  throw std::runtime_error("random_satisfiable_ksat: no satisfiable formula found");
}

}  // namespace spikecsp
