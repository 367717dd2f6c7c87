#pragma once

// DIMACS CNF and TSPLIB readers/writers, plus small CSV helpers.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "problems.hpp"

namespace spikecsp {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DimacsOptions {
  std::optional<std::size_t> strict_width;  // e.g. 3 for strict 3-SAT
};

inline CnfFormula parse_dimacs(std::istream& is, const DimacsOptions& opt = {}) {
  CnfFormula f;
  bool have_header = false;
  std::size_t declared_clauses = 0;
  std::vector<Literal> cur;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) { throw ParseError("dimacs line " + std::to_string(lineno) + ": " + msg); };
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok == "c") continue;
    if (tok == "%") break;
    if (tok == "p") {
      std::string fmt;
      long long v = -1, c = -1;
      std::string extra;
      if (have_header) fail("duplicate header");
      if (!(ls >> fmt >> v >> c) || fmt != "cnf" || v < 0 || c < 0 || (ls >> extra)) fail("malformed header");
      f.n_vars = static_cast<std::size_t>(v);
      declared_clauses = static_cast<std::size_t>(c);
      have_header = true;
      continue;
    }
    if (!have_header) fail("clause before header");
    ls.clear();
    ls.str(line);
    long long lit;
    while (ls >> tok) {
      char* end = nullptr;
      lit = std::strtoll(tok.c_str(), &end, 10);
      if (*end != '\0') fail("invalid literal '" + tok + "'");
      if (lit == 0) {
        if (cur.empty()) fail("empty clause");
        if (opt.strict_width && cur.size() != *opt.strict_width)
          fail("clause width " + std::to_string(cur.size()) + " but strict width " + std::to_string(*opt.strict_width));
        f.clauses.push_back(std::move(cur));
        cur.clear();
        continue;
      }
      if (static_cast<std::size_t>(std::llabs(lit)) > f.n_vars) fail("literal out of range: " + tok);
      cur.push_back(static_cast<Literal>(lit));
    }
  }
  if (!have_header) throw ParseError("dimacs: missing header");
  if (!cur.empty()) throw ParseError("dimacs: unterminated clause");
  if (f.clauses.size() != declared_clauses)
    throw ParseError("dimacs: header declares " + std::to_string(declared_clauses) + " clauses, found " +
                     std::to_string(f.clauses.size()));
  return f;
}

inline CnfFormula parse_dimacs_file(const std::string& path, const DimacsOptions& opt = {}) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open " + path);
  return parse_dimacs(is, opt);
}

inline void write_dimacs(const CnfFormula& f, std::ostream& os) {
  os << "p cnf " << f.n_vars << ' ' << f.clauses.size() << '\n';
  for (const auto& c : f.clauses) {
    for (const auto l : c) os << l << ' ';
    os << "0\n";
  }
}

enum class Rounding { none, nearest };

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// TSPLIB subset: EDGE_WEIGHT_TYPE EUC_2D (NODE_COORD_SECTION) or EXPLICIT
/// with EDGE_WEIGHT_FORMAT FULL_MATRIX.
inline TspInstance parse_tsplib(std::istream& is, Rounding rounding = Rounding::none) {
  TspInstance t;
  std::string weight_type, weight_format = "FULL_MATRIX";
  std::size_t dim = 0;
  std::string line;
  enum class Section { header, coords, weights } section = Section::header;
  std::vector<Point> pts;
  std::vector<double> weights;
  while (std::getline(is, line)) {
    const auto s = trim(line);
    if (s.empty()) continue;
    if (s == "EOF") break;
    if (s == "NODE_COORD_SECTION") {
      section = Section::coords;
      continue;
    }
    if (s == "EDGE_WEIGHT_SECTION") {
      section = Section::weights;
      continue;
    }
    const auto colon = s.find(':');
    if (colon != std::string::npos && (section == Section::header || std::isalpha(static_cast<unsigned char>(s[0])))) {
      const auto key = trim(s.substr(0, colon));
      const auto val = trim(s.substr(colon + 1));
      if (key == "NAME")
        t.name = val;
      else if (key == "DIMENSION")
        dim = static_cast<std::size_t>(std::stoul(val));
      else if (key == "EDGE_WEIGHT_TYPE")
        weight_type = val;
      else if (key == "EDGE_WEIGHT_FORMAT")
        weight_format = val;
      section = Section::header;
      continue;
    }
    std::istringstream ls(s);
    if (section == Section::coords) {
      double idx, x, y;
      if (!(ls >> idx >> x >> y)) throw ParseError("tsplib: malformed coordinate line");
      pts.push_back({x, y});
    } else if (section == Section::weights) {
      double w;
      while (ls >> w) weights.push_back(w);
    } else {
      throw ParseError("tsplib: unexpected line '" + s + "'");
    }
  }
  if (dim == 0) throw ParseError("tsplib: missing DIMENSION");
  if (weight_type == "EUC_2D") {
    if (pts.size() != dim) throw ParseError("tsplib: coordinate count does not match DIMENSION");
    t = [&] {
      auto r = tsp_from_points(pts, rounding == Rounding::nearest);
      r.name = t.name;
      return r;
    }();
  } else if (weight_type == "EXPLICIT") {
    if (weight_format != "FULL_MATRIX") throw ParseError("tsplib: unsupported EDGE_WEIGHT_FORMAT " + weight_format);
    if (weights.size() != dim * dim) throw ParseError("tsplib: FULL_MATRIX entry count does not match DIMENSION");
    t.n = dim;
    t.costs = weights;
    for (std::size_t i = 0; i < dim; ++i) t.costs[i * dim + i] = 0.0;
    t.symmetric = t.detect_symmetric();
  } else {
    throw ParseError("tsplib: unsupported EDGE_WEIGHT_TYPE '" + weight_type + "'");
  }
  t.validate();
  return t;
}

inline TspInstance parse_tsplib_file(const std::string& path, Rounding rounding = Rounding::none) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open " + path);
  return parse_tsplib(is, rounding);
}

/// Writes EXPLICIT FULL_MATRIX with 17 significant digits, so parsing the
/// output reproduces the cost matrix exactly.
inline void write_tsplib(const TspInstance& t, std::ostream& os) {
  os << "NAME : " << (t.name.empty() ? "instance" : t.name) << '\n'
     << "TYPE : " << (t.symmetric ? "TSP" : "ATSP") << '\n'
     << "DIMENSION : " << t.n << '\n'
     << "EDGE_WEIGHT_TYPE : EXPLICIT\n"
     << "EDGE_WEIGHT_FORMAT : FULL_MATRIX\n"
     << "EDGE_WEIGHT_SECTION\n"
     << std::setprecision(17);
  for (std::size_t i = 0; i < t.n; ++i) {
    for (std::size_t j = 0; j < t.n; ++j) os << (j ? " " : "") << t.cost(i, j);
    os << '\n';
  }
  os << "EOF\n";
}

/// Numbers with 17 significant digits.
inline std::string fmt17(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace spikecsp
