#pragma once

// Files written by the CLI: series.csv, checkpoints, manifests. Checkpoint
// layout is described in docs/checkpoint.md.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/crc.hpp>

#include "sib/dynamics.hpp"
#include "sib/functionals.hpp"

namespace sib::experiments {

namespace fs = std::filesystem;

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Write to a sibling temporary file, then rename over the target.
inline void write_atomic(const fs::path &path, const std::string &bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::uint32_t crc32_of(const std::string &bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// series.csv

inline const char *series_header() {
  return "t,charge,energy_eps,modified_energy,h1_u,h2_u,l2_v,h1_v,l2_vt,hm_half_vt,gn_quotient,envelope_h1,"
         "envelope_small";
}

inline std::string series_csv(const std::vector<Diagnostics> &rows) {
  std::string out = series_header();
  out += '\n';
  for (const auto &r : rows) {
    for (double v : {r.t, r.charge, r.energy_eps, r.modified_energy, r.h1_u, r.h2_u, r.l2_v, r.h1_v, r.l2_vt,
                     r.hm_half_vt, r.gn_quotient, r.envelope_h1}) {
      out += fmt(v);
      out += ',';
    }
    if (r.envelope_small) out += fmt(*r.envelope_small);
    out += '\n';
  }
  return out;
}

/// Rows of a CSV file with a header line; empty cells become NaN.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  size_t column(const std::string &name) const {
    for (size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw IoError("no column " + name);
  }
};

inline CsvTable parse_csv(const std::string &text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  auto cells = [](const std::string &l) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream s(l);
    while (std::getline(s, cur, ',')) out.push_back(cur);
    if (!l.empty() && l.back() == ',') out.emplace_back();
    return out;
  };
  if (!std::getline(in, line)) return t;
  t.columns = cells(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto &c : cells(line))
      row.push_back(c.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------------------
// checkpoints

inline std::string checkpoint_name(double t) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "state_t%04lld.bin", static_cast<long long>(std::llround(t * 1000.0)));
  return buf;
}

namespace detail {

inline void put_le(std::string &out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

inline double get_le(const unsigned char *p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

}  // namespace detail

inline std::string encode_checkpoint(const State &s) {
  const Grid2D &g = *s.grid();
  const size_t count = static_cast<size_t>(g.Nx()) * g.Ny();
  std::ostringstream h;
  h << "SIBSTATE 1\n"
    << "grid " << fmt(g.Lx()) << ' ' << fmt(g.Ly()) << ' ' << g.Nx() << ' ' << g.Ny() << '\n'
    << "time " << fmt(s.t) << '\n'
    << "fields u:complex v:real vt:real\n"
    << "order k-fastest\n"
    << "endianness little\n"
    << "bytes " << count * 4 * 8 << '\n'
    << "end\n";
  std::string out = h.str();
  out.reserve(out.size() + count * 32);
  for (size_t i = 0; i < count; ++i) {
    detail::put_le(out, s.u.coeffs().data()[i].real());
    detail::put_le(out, s.u.coeffs().data()[i].imag());
  }
  for (size_t i = 0; i < count; ++i) detail::put_le(out, s.v.coeffs().data()[i]);
  for (size_t i = 0; i < count; ++i) detail::put_le(out, s.vt.coeffs().data()[i]);
  return out;
}

inline State decode_checkpoint(const std::string &bytes) {
  std::istringstream in(bytes);
  std::string line, word;
  auto expect = [&](const std::string &key) {
    if (!std::getline(in, line)) throw IoError("checkpoint: truncated header");
    std::istringstream ls(line);
    ls >> word;
    if (word != key) throw IoError("checkpoint: expected '" + key + "', got '" + line + "'");
    return std::string(line.begin() + static_cast<std::ptrdiff_t>(std::min(line.size(), key.size() + 1)), line.end());
  };
  if (expect("SIBSTATE") != "1") throw IoError("checkpoint: unsupported version");
  double lx, ly, t;
  int nx, ny;
  std::istringstream(expect("grid")) >> lx >> ly >> nx >> ny;
  std::istringstream(expect("time")) >> t;
  if (expect("fields") != "u:complex v:real vt:real") throw IoError("checkpoint: unexpected field list");
  if (expect("order") != "k-fastest") throw IoError("checkpoint: unexpected order");
  if (expect("endianness") != "little") throw IoError("checkpoint: unexpected endianness");
  size_t nbytes = 0;
  std::istringstream(expect("bytes")) >> nbytes;
  expect("end");
  const auto offset = static_cast<size_t>(in.tellg());
  const GridPtr g = make_grid(lx, ly, nx, ny);
  const size_t count = static_cast<size_t>(nx) * ny;
  if (nbytes != count * 32 || bytes.size() != offset + nbytes) throw IoError("checkpoint: payload size mismatch");

  const auto *p = reinterpret_cast<const unsigned char *>(bytes.data()) + offset;
  State s = State::zero(g);
  s.t = t;
  for (size_t i = 0; i < count; ++i, p += 16) s.u.coeffs().data()[i] = Complex(detail::get_le(p), detail::get_le(p + 8));
  for (size_t i = 0; i < count; ++i, p += 8) s.v.coeffs().data()[i] = detail::get_le(p);
  for (size_t i = 0; i < count; ++i, p += 8) s.vt.coeffs().data()[i] = detail::get_le(p);
  return s;
}

inline void write_checkpoint(const fs::path &path, const State &s) { write_atomic(path, encode_checkpoint(s)); }
inline State read_checkpoint(const fs::path &path) { return decode_checkpoint(read_file(path)); }

}  // namespace sib::experiments
