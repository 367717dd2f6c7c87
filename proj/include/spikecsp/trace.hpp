#pragma once

// State-change streams: the simulation trace shared by every sampler, and
// its binary / JSONL encodings.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "network.hpp"

namespace spikecsp {

struct StateChange {
  Seconds time = 0.0;
  NeuronId neuron = 0;
  std::uint8_t value = 0;
  double u_before = 0.0;

  bool operator==(const StateChange&) const = default;
};

/// Ordered on/off records plus what is needed to replay the state: the
/// initial activity vector and the simulated time window.
struct StateChangeStream {
  std::vector<std::uint8_t> initial;
  std::size_t principal_count = 0;
  Seconds t_start = 0.0;
  Seconds t_end = 0.0;
  std::vector<StateChange> records;

  bool operator==(const StateChangeStream&) const = default;
};

namespace detail {

template <class T>
void put(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "binary traces assume a little-endian host");
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("trace: unexpected end of file");
  return v;
}

inline constexpr char kTraceMagic[8] = {'S', 'P', 'K', 'T', 'R', 'C', '0', '1'};

}  // namespace detail

/// Binary layout (little endian): magic[8], u64 neuron count, u64 principal
/// count, f64 t_start, f64 t_end, u8[n] initial state, u64 record count,
/// then per record f64 time, u32 neuron, u8 value, f64 u_before.
inline void write_trace_binary(const StateChangeStream& s, std::ostream& os) {
  os.write(detail::kTraceMagic, sizeof detail::kTraceMagic);
  detail::put<std::uint64_t>(os, s.initial.size());
  detail::put<std::uint64_t>(os, s.principal_count);
  detail::put<double>(os, s.t_start);
  detail::put<double>(os, s.t_end);
  os.write(reinterpret_cast<const char*>(s.initial.data()), static_cast<std::streamsize>(s.initial.size()));
  detail::put<std::uint64_t>(os, s.records.size());
  for (const auto& r : s.records) {
    detail::put<double>(os, r.time);
    detail::put<std::uint32_t>(os, r.neuron);
    detail::put<std::uint8_t>(os, r.value);
    detail::put<double>(os, r.u_before);
  }
}

inline StateChangeStream read_trace_binary(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, detail::kTraceMagic, sizeof magic) != 0)
    throw std::runtime_error("trace: bad magic");
  StateChangeStream s;
  const auto n = detail::get<std::uint64_t>(is);
  s.principal_count = detail::get<std::uint64_t>(is);
  s.t_start = detail::get<double>(is);
  s.t_end = detail::get<double>(is);
  s.initial.resize(n);
  if (!is.read(reinterpret_cast<char*>(s.initial.data()), static_cast<std::streamsize>(n)))
    throw std::runtime_error("trace: truncated initial state");
  const auto count = detail::get<std::uint64_t>(is);
  s.records.resize(count);
  for (auto& r : s.records) {
    r.time = detail::get<double>(is);
    r.neuron = detail::get<std::uint32_t>(is);
    r.value = detail::get<std::uint8_t>(is);
    r.u_before = detail::get<double>(is);
  }
  return s;
}

inline void save_trace(const StateChangeStream& s, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_trace_binary(s, os);
}

inline StateChangeStream load_trace(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_trace_binary(is);
}

/// JSONL: a header object followed by one object per record.
inline void write_trace_jsonl(const StateChangeStream& s, std::ostream& os) {
  nlohmann::json header{{"neurons", s.initial.size()},
                        {"principal_count", s.principal_count},
                        {"t_start", s.t_start},
                        {"t_end", s.t_end},
                        {"initial", s.initial}};
  os << header.dump() << '\n';
  for (const auto& r : s.records) {
    nlohmann::json j{{"t", r.time}, {"neuron", r.neuron}, {"value", r.value}, {"u_before", r.u_before}};
    os << j.dump() << '\n';
  }
}

inline StateChangeStream read_trace_jsonl(std::istream& is) {
  StateChangeStream s;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("trace jsonl: missing header");
  const auto header = nlohmann::json::parse(line);
  s.principal_count = header.at("principal_count").get<std::size_t>();
  s.t_start = header.at("t_start").get<double>();
  s.t_end = header.at("t_end").get<double>();
  s.initial = header.at("initial").get<std::vector<std::uint8_t>>();
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    s.records.push_back({j.at("t").get<double>(), j.at("neuron").get<NeuronId>(), j.at("value").get<std::uint8_t>(),
                         j.at("u_before").get<double>()});
  }
  return s;
}

/// Replays a stream and reports the state after every record.
template <class Visitor>
void replay(const StateChangeStream& s, Visitor&& visit) {
  std::vector<std::uint8_t> x = s.initial;
  for (const auto& r : s.records) {
    x[r.neuron] = r.value;
    visit(r, static_cast<const std::vector<std::uint8_t>&>(x));
  }
}

}  // namespace spikecsp
