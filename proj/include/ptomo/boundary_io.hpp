#pragma once

// Boundary data container: one JSON header line, then CSV.
//   {"format":"ptomo-boundary-v1","kind":...,"value_dim":n,"space_dim":n,
//    "field_id":...,"step":...,"records":N}
//   x1..x<s>,xi1..xi<s>,tau_minus,tau_plus,ok,v0_re,v0_im,...,error
// Floats print with %.17g, so a read/write cycle is byte-identical. The
// error column holds a sanitized message (commas and newlines replaced).

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ptomo/geometry.hpp"
#include "ptomo/transport.hpp"

namespace ptomo {

namespace detail {

inline std::string sanitize_csv_text(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  return out;
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out;
}

inline std::string fmt_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

// Minimal extraction from the fixed-shape header line this writer produces.
inline std::string header_string(const std::string& line, const std::string& key) {
  const std::string pat = "\"" + key + "\":\"";
  const std::size_t at = line.find(pat);
  if (at == std::string::npos) throw std::runtime_error("boundary header lacks key " + key);
  std::string out;
  for (std::size_t i = at + pat.size(); i < line.size(); ++i) {
    if (line[i] == '\\' && i + 1 < line.size()) {
      out.push_back(line[i + 1] == 'n' ? '\n' : line[i + 1]);
      ++i;
      continue;
    }
    if (line[i] == '"') return out;
    out.push_back(line[i]);
  }
  throw std::runtime_error("unterminated string for key " + key);
}

inline double header_number(const std::string& line, const std::string& key) {
  const std::string pat = "\"" + key + "\":";
  const std::size_t at = line.find(pat);
  if (at == std::string::npos) throw std::runtime_error("boundary header lacks key " + key);
  return std::strtod(line.c_str() + at + pat.size(), nullptr);
}

}  // namespace detail

inline void write_boundary_data(const std::string& path, const BoundaryDataSet& d) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "{\"format\":\"ptomo-boundary-v1\",\"kind\":\"" << detail::json_escape(d.kind)
    << "\",\"value_dim\":" << d.value_dim << ",\"space_dim\":" << d.space_dim
    << ",\"field_id\":\"" << detail::json_escape(d.field_id)
    << "\",\"step\":" << detail::fmt_g17(d.step) << ",\"records\":" << d.records.size() << "}\n";
  const int s = d.space_dim, vd = d.value_dim;
  for (int a = 1; a <= s; ++a) f << "x" << a << ",";
  for (int a = 1; a <= s; ++a) f << "xi" << a << ",";
  f << "tau_minus,tau_plus,ok";
  for (int e = 0; e < vd * vd; ++e) f << ",v" << e << "_re,v" << e << "_im";
  f << ",error\n";
  for (const BoundaryRecord& rec : d.records) {
    for (int a = 0; a < s; ++a) f << detail::fmt_g17(rec.ray.x[a]) << ",";
    for (int a = 0; a < s; ++a) f << detail::fmt_g17(rec.ray.xi[a]) << ",";
    f << detail::fmt_g17(rec.ray.tau_minus) << "," << detail::fmt_g17(rec.ray.tau_plus) << ","
      << (rec.ok ? 1 : 0);
    for (const cplx& v : rec.value)
      f << "," << detail::fmt_g17(v.real()) << "," << detail::fmt_g17(v.imag());
    f << "," << detail::sanitize_csv_text(rec.error) << "\n";
  }
  if (!f) throw std::runtime_error("short write: " + path);
}

inline BoundaryDataSet read_boundary_data(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::string header;
  if (!std::getline(f, header) || header.find("\"format\":\"ptomo-boundary-v1\"") == std::string::npos)
    throw std::runtime_error("not a boundary data file: " + path);
  BoundaryDataSet d;
  d.kind = detail::header_string(header, "kind");
  d.field_id = detail::header_string(header, "field_id");
  d.value_dim = int(detail::header_number(header, "value_dim"));
  d.space_dim = int(detail::header_number(header, "space_dim"));
  d.step = detail::header_number(header, "step");
  const std::size_t count = std::size_t(detail::header_number(header, "records"));
  if (d.value_dim < 1 || d.value_dim > 4 || d.space_dim < 2 || d.space_dim > 4)
    throw std::runtime_error("invalid boundary header dimensions: " + path);
  std::string columns;
  std::getline(f, columns);  // column names, fixed by the writer
  d.records.reserve(count);
  const int s = d.space_dim, vd = d.value_dim;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i)
      if (i == line.size() || line[i] == ',') {
        cells.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    const std::size_t expect = static_cast<size_t>(2 * s + 3 + 2 * vd * vd + 1);
    if (cells.size() != expect) throw std::runtime_error("malformed boundary row in " + path);
    std::size_t at = 0;
    auto num = [&]() { return std::strtod(cells[at++].c_str(), nullptr); };
    Vec x(s), xi(s);
    for (int a = 0; a < s; ++a) x[a] = num();
    for (int a = 0; a < s; ++a) xi[a] = num();
    const double tmin = num(), tmax = num();
    const bool ok = num() != 0.0;
    Ray ray{x, UnitVec(xi), tmin, tmax};  // validating ctor keeps the bytes exact
    BoundaryRecord rec(ray, vd);
    for (int e = 0; e < vd * vd; ++e) {
      const double re = num(), im = num();
      rec.value[static_cast<size_t>(e)] = cplx(re, im);
    }
    rec.ok = ok;
    rec.error = cells[at];
    d.records.push_back(std::move(rec));
  }
  if (d.records.size() != count)
    throw std::runtime_error("boundary record count mismatch in " + path);
  return d;
}

}  // namespace ptomo
