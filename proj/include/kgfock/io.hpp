#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynamics.hpp"
#include "fockspace.hpp"
#include "trees.hpp"

namespace kgfock {

using json = nlohmann::json;

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Binary records: see docs/formats.md

/// Decoded binary file: records of `slots` fields each, with time stamps.
struct BinaryDump {
  SpectralGrid grid;
  int slots = 1;
  std::vector<double> times;
  std::vector<std::vector<SpectralField>> records;
};

namespace detail {

inline constexpr char kMagic[4] = {'K', 'G', 'F', 'B'};
inline constexpr std::uint32_t kVersion = 1;

template <class T>
void put_le(std::ostream& os, T v) {
  std::array<char, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  os.write(b.data(), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  std::array<char, sizeof(T)> b;
  if (!is.read(b.data(), sizeof(T))) throw FormatError("truncated binary record");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  T v;
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

inline void write_header(std::ostream& os, const SpectralGrid& g, int slots, std::size_t records) {
  os.write(kMagic, 4);
  put_le<std::uint32_t>(os, kVersion);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.modes_per_dim()));
  put_le<double>(os, g.period());
  put_le<double>(os, g.mass());
  put_le<double>(os, g.sobolev());
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(slots));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(records));
}

inline void write_field_body(std::ostream& os, const SpectralField& f) {
  for (const auto& c : f.coeffs()) {
    put_le<float>(os, static_cast<float>(c.real()));
    put_le<float>(os, static_cast<float>(c.imag()));
  }
}

}  // namespace detail

inline constexpr std::size_t kBinaryHeaderBytes = 4 + 4 + 4 + 4 + 3 * 8 + 4 + 4;

inline void write_records(std::ostream& os, const SpectralGrid& g, const std::vector<double>& times,
                          const std::vector<std::vector<const SpectralField*>>& records) {
  const int slots = records.empty() ? 1 : static_cast<int>(records.front().size());
  detail::write_header(os, g, slots, records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (static_cast<int>(records[r].size()) != slots) throw FormatError("records differ in slot count");
    detail::put_le<double>(os, times[r]);
    for (const auto* f : records[r]) {
      require_same_grid(g, f->grid());
      detail::write_field_body(os, *f);
    }
  }
  if (!os) throw FormatError("write failed");
}

inline void write_field(std::ostream& os, const SpectralField& f) { write_records(os, f.grid(), {0.0}, {{&f}}); }

inline void write_pair(std::ostream& os, const CauchyPair& d, double t = 0.0) {
  write_records(os, d.grid(), {t}, {{&d.u0, &d.u1}});
}

inline void write_path(std::ostream& os, const Path& p) {
  if (p.states.empty()) throw FormatError("empty path");
  std::vector<std::vector<const SpectralField*>> recs;
  for (const auto& s : p.states) recs.push_back({&s.u0, &s.u1});
  write_records(os, p.states.front().grid(), p.times, recs);
}

inline BinaryDump read_records(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, detail::kMagic, 4) != 0) throw FormatError("not a kgfock binary file");
  if (detail::get_le<std::uint32_t>(is) != detail::kVersion) throw FormatError("unsupported binary version");
  const auto n = detail::get_le<std::uint32_t>(is);
  const auto M = detail::get_le<std::uint32_t>(is);
  const double L = detail::get_le<double>(is);
  const double mass = detail::get_le<double>(is);
  const double s = detail::get_le<double>(is);
  BinaryDump out;
  out.grid = SpectralGrid(static_cast<int>(n), static_cast<int>(M), L, mass, s);
  out.slots = static_cast<int>(detail::get_le<std::uint32_t>(is));
  const auto count = detail::get_le<std::uint32_t>(is);
  for (std::uint32_t r = 0; r < count; ++r) {
    out.times.push_back(detail::get_le<double>(is));
    std::vector<SpectralField> rec;
    for (int k = 0; k < out.slots; ++k) {
      SpectralField f(out.grid);
      for (auto& c : f.coeffs()) {
        const float re = detail::get_le<float>(is);
        const float im = detail::get_le<float>(is);
        c = cplx(re, im);
      }
      rec.push_back(std::move(f));
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

inline CauchyPair pair_of(const BinaryDump& dump, std::size_t record) {
  if (dump.slots != 2) throw FormatError("record does not hold Cauchy data");
  return CauchyPair(dump.records.at(record)[0], dump.records.at(record)[1]);
}

inline Path path_of(const BinaryDump& dump) {
  Path p;
  for (std::size_t r = 0; r < dump.records.size(); ++r) {
    p.times.push_back(dump.times[r]);
    p.states.push_back(pair_of(dump, r));
  }
  return p;
}

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const SpectralGrid& g) {
  return {{"n", g.dim()}, {"M", g.modes_per_dim()}, {"L", g.period()}, {"m", g.mass()}, {"s", g.sobolev()}};
}

inline SpectralGrid grid_from_json(const json& j) {
  return SpectralGrid(j.at("n").get<int>(), j.at("M").get<int>(), j.at("L").get<double>(), j.at("m").get<double>(),
                      j.at("s").get<double>());
}

/// Coefficients as [re, im] pairs in storage order, with the wavenumbers for readability.
inline json to_json(const SpectralField& f) {
  json coeffs = json::array(), waves = json::array();
  const auto& g = f.grid();
  for (std::size_t i = 0; i < f.size(); ++i) {
    coeffs.push_back({f[i].real(), f[i].imag()});
    const auto& k = g.wavenumber(i);
    waves.push_back(g.dim() == 1 ? json(k[0]) : json({k[0], k[1]}));
  }
  return {{"grid", to_json(g)}, {"wavenumbers", waves}, {"coeffs", coeffs}};
}

inline SpectralField field_from_json(const json& j) {
  const SpectralGrid g = grid_from_json(j.at("grid"));
  const auto& c = j.at("coeffs");
  if (c.size() != g.size()) throw FormatError("coefficient count does not match grid");
  SpectralField f(g);
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = cplx(c[i].at(0).get<double>(), c[i].at(1).get<double>());
  return f;
}

inline json to_json(const CauchyPair& d) { return {{"u0", to_json(d.u0)}, {"u1", to_json(d.u1)}}; }

inline CauchyPair pair_from_json(const json& j) {
  return CauchyPair(field_from_json(j.at("u0")), field_from_json(j.at("u1")));
}

/// Kernels: the distinct entries of each symmetric tensor, sorted multi-indices in lexicographic order.
inline json to_json(const PolyFunctional& f) {
  json kernels = json::array();
  for (int p = 0; p <= f.cap(); ++p) {
    if (!f.has(p)) continue;
    kernels.push_back({{"degree", p}, {"entries", f.kernel(p)}});
  }
  return {{"basis", {{"grid", to_json(f.basis().grid())}, {"K", f.K()}, {"order", "cos/sin pairs, position then velocity"}}},
          {"cap", f.cap()},
          {"kernels", kernels}};
}

inline PolyFunctional functional_from_json(const json& j, const BasisPtr& basis) {
  if (grid_from_json(j.at("basis").at("grid")) != basis->grid()) throw FormatError("kernel basis does not match");
  PolyFunctional f(basis, j.at("cap").get<int>());
  for (const auto& k : j.at("kernels")) {
    const int p = k.at("degree").get<int>();
    auto& c = f.kernel_mut(p);
    const auto entries = k.at("entries").get<std::vector<double>>();
    if (entries.size() != c.size()) throw FormatError("kernel of degree " + std::to_string(p) + " has wrong size");
    c = entries;
  }
  return f;
}

inline json to_json(const RootedTree& t) {
  return {{"shape", t.shape},
          {"vertices", t.vertices},
          {"leaves", t.leaves},
          {"sign", t.sign()},
          {"symmetry_factor", 1.0 / t.automorphisms},
          {"weight", t.weight},
          {"diagram", tree_diagram(t)}};
}

/// Index of a binary path file: time stamps and byte offsets of each record.
inline json path_index(const Path& p, const std::string& binary_name) {
  const SpectralGrid& g = p.states.front().grid();
  const std::size_t record_bytes = 8 + 2 * g.size() * 8;
  json recs = json::array();
  for (std::size_t r = 0; r < p.times.size(); ++r)
    recs.push_back({{"t", p.times[r]}, {"offset", kBinaryHeaderBytes + r * record_bytes}});
  return {{"format", "kgfock-binary"}, {"version", detail::kVersion}, {"file", binary_name},
          {"grid", to_json(g)},        {"slots", 2},                  {"record_bytes", record_bytes},
          {"records", recs}};
}

/// Writes stem.bin and stem.json.
inline void save_path(const std::string& stem, const Path& p) {
  std::ofstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw FormatError("cannot open " + stem + ".bin");
  write_path(bin, p);
  std::ofstream idx(stem + ".json");
  const auto slash = stem.find_last_of('/');
  idx << path_index(p, (slash == std::string::npos ? stem : stem.substr(slash + 1)) + ".bin").dump(2) << '\n';
}

}  // namespace kgfock
