#pragma once

// Problem instances: TSP cost matrices and CNF formulas, with random
// generators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"

namespace spikecsp {

struct TspInstance {
  std::size_t n = 0;
  std::vector<double> costs;  // row-major, costs[i * n + j] = cost of moving from i to j
  bool symmetric = true;
  std::optional<double> optimal_cost;
  std::string name;

  double cost(std::size_t i, std::size_t j) const { return costs[i * n + j]; }

  void validate() const {
    if (costs.size() != n * n) throw std::invalid_argument("TSP: cost matrix size does not match n");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double c = cost(i, j);
        if (!std::isfinite(c) || c < 0) throw std::invalid_argument("TSP: costs must be finite and non-negative");
      }
  }

  bool detect_symmetric() const {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (cost(i, j) != cost(j, i)) return false;
    return true;
  }

  double max_offdiagonal() const {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) m = std::max(m, cost(i, j));
    return m;
  }
};

struct Point {
  double x = 0.0, y = 0.0;
};

inline TspInstance tsp_from_points(const std::vector<Point>& pts, bool round_nearest = false) {
  TspInstance t;
  t.n = pts.size();
  t.costs.assign(t.n * t.n, 0.0);
  for (std::size_t i = 0; i < t.n; ++i)
    for (std::size_t j = 0; j < t.n; ++j) {
      if (i == j) continue;
      double d = std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y);
      if (round_nearest) d = std::floor(d + 0.5);
      t.costs[i * t.n + j] = d;
    }
  t.symmetric = true;
  return t;
}

/// Cities uniform in [0, side]^2.
inline TspInstance random_euclidean_tsp(std::size_t n, std::uint64_t seed, double side = 100.0) {
  auto rng = make_rng(seed);
  std::vector<Point> pts(n);
  for (auto& p : pts) {
    p.x = side * uniform_open0(rng);
    p.y = side * uniform_open0(rng);
  }
  return tsp_from_points(pts);
}

/// Literal: +v for variable v true, -v for false, variables numbered from 1.
using Literal = int;

struct CnfFormula {
  std::size_t n_vars = 0;
  std::vector<std::vector<Literal>> clauses;

  void validate() const {
    for (const auto& c : clauses) {
      if (c.empty()) throw std::invalid_argument("CNF: empty clause");
      for (const auto l : c)
        if (l == 0 || static_cast<std::size_t>(std::abs(l)) > n_vars)
          throw std::invalid_argument("CNF: literal out of range");
    }
  }

  bool operator==(const CnfFormula&) const = default;
};

/// Uniform random k-SAT: each clause draws k distinct variables and random
/// polarities.
inline CnfFormula random_ksat(std::size_t n_vars, std::size_t m, std::uint64_t seed, std::size_t k = 3) {
  if (k > n_vars) throw std::invalid_argument("random_ksat: k exceeds variable count");
  auto rng = make_rng(seed);
  CnfFormula f;
  f.n_vars = n_vars;
  std::uniform_int_distribution<std::size_t> var(1, n_vars);
  std::bernoulli_distribution sign(0.5);
  for (std::size_t c = 0; c < m; ++c) {
    std::vector<Literal> clause;
    while (clause.size() < k) {
      const auto v = static_cast<Literal>(var(rng));
      bool dup = false;
      for (const auto l : clause) dup |= std::abs(l) == v;
      if (!dup) clause.push_back(sign(rng) ? v : -v);
    }
    f.clauses.push_back(std::move(clause));
  }
  return f;
}

}  // namespace spikecsp
