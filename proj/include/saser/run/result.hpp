#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "saser/run/spec.hpp"

namespace saser::run {

inline constexpr std::string_view code_version = "0.1.0";

struct AxisValues {
  std::string name;
  std::string unit;
  std::vector<double> values;
};

struct Provenance {
  std::string params_hash;  ///< FNV-1a 64 of the canonical spec document
  std::string solver;
  std::string code_version{run::code_version};
  std::string preset;
  std::vector<std::pair<std::string, double>> tolerances;
  Document spec;
};

/// Values on the Cartesian product of the axes, last axis fastest. Every cell
/// carries one value per field.
struct GridResult {
  std::string experiment;
  std::string description;
  std::string solver_reason;
  std::vector<AxisValues> axes;
  std::vector<std::string> fields;
  std::vector<double> data;
  std::vector<std::pair<std::string, double>> summary;
  std::vector<std::string> warnings;
  Provenance provenance;

  std::size_t cells() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.values.size();
    return n;
  }
  double& at(std::size_t cell, std::size_t field) { return data[cell * fields.size() + field]; }
  double at(std::size_t cell, std::size_t field) const { return data[cell * fields.size() + field]; }
  std::size_t field_index(std::string_view name) const {
    for (std::size_t i = 0; i < fields.size(); ++i)
      if (fields[i] == name) return i;
    throw ValidationError("result has no field '" + std::string(name) + "'");
  }
  double summary_value(std::string_view name) const {
    for (const auto& [k, v] : summary)
      if (k == name) return v;
    throw ValidationError("result has no summary entry '" + std::string(name) + "'");
  }
  void allocate() { data.assign(cells() * fields.size(), std::numeric_limits<double>::quiet_NaN()); }
};

inline std::string fnv1a_hex(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

/// Shortest round-trip decimal; nan and inf spelled out.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// RFC 4180 field quoting.
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string to_csv(const GridResult& r) {
  std::string out;
  bool first = true;
  auto cell = [&](std::string_view s) {
    if (!first) out += ',';
    out += csv_field(s);
    first = false;
  };
  for (const auto& a : r.axes) cell(a.name);
  for (const auto& f : r.fields) cell(f);
  out += "\r\n";
  const std::size_t n = r.cells();
  for (std::size_t c = 0; c < n; ++c) {
    first = true;
    std::size_t rest = c, stride = n;
    for (const auto& a : r.axes) {
      stride /= a.values.size();
      cell(format_number(a.values[rest / stride]));
      rest %= stride;
    }
    for (std::size_t f = 0; f < r.fields.size(); ++f) cell(format_number(r.at(c, f)));
    out += "\r\n";
  }
  return out;
}

inline Document to_json(const GridResult& r) {
  Document d;
  d["experiment"] = r.experiment;
  d["description"] = r.description;
  d["solver_reason"] = r.solver_reason;
  Document axes = Document::array();
  for (const auto& a : r.axes) axes.push_back(Document{{"name", a.name}, {"unit", a.unit}, {"values", a.values}});
  d["axes"] = axes;
  d["fields"] = r.fields;

  // nested arrays over the axes, one object per cell
  std::size_t cell = 0;
  auto build = [&](auto&& self, std::size_t depth) -> Document {
    if (depth == r.axes.size()) {
      Document leaf = Document::object();
      for (std::size_t f = 0; f < r.fields.size(); ++f) leaf[r.fields[f]] = r.at(cell, f);
      ++cell;
      return leaf;
    }
    Document arr = Document::array();
    for (std::size_t i = 0; i < r.axes[depth].values.size(); ++i) arr.push_back(self(self, depth + 1));
    return arr;
  };
  d["payload"] = build(build, 0);

  Document summary = Document::object();
  for (const auto& [k, v] : r.summary) summary[k] = v;
  d["summary"] = summary;
  d["warnings"] = r.warnings;

  Document prov;
  prov["params_hash"] = r.provenance.params_hash;
  prov["solver"] = r.provenance.solver;
  prov["code_version"] = r.provenance.code_version;
  prov["preset"] = r.provenance.preset;
  Document tol = Document::object();
  for (const auto& [k, v] : r.provenance.tolerances) tol[k] = v;
  prov["tolerances"] = tol;
  prov["spec"] = r.provenance.spec;
  d["provenance"] = prov;
  return d;
}

inline std::string render(const GridResult& r, Format format) {
  return format == Format::csv ? to_csv(r) : to_json(r).dump(2) + "\n";
}

/// Writes the rendered result to `path`, or to stdout when the path is empty or "-".
inline void write_text(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw IoError("error writing to stdout");
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.close();
  if (!out) throw IoError("error writing '" + path + "'");
}

inline void write_output(const GridResult& r, const std::string& path, Format format) { write_text(render(r, format), path); }

}  // namespace saser::run
