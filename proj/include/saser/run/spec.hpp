#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"
#include "saser/errors.hpp"
#include "saser/params.hpp"
#include "saser/probe.hpp"

namespace saser::run {

using Document = nlohmann::ordered_json;

enum class Experiment { rabi_map, hotspot_map, gain_profile, emission_map, emission_spectrum, pump_sweep, estimates_report };
enum class Solver { full_quantum, semiclassical, both, analytic };
enum class Spacing { linear, log };
enum class Format { csv, json };

inline constexpr std::string_view experiment_names[] = {"rabi_map",          "hotspot_map", "gain_profile",    "emission_map",
                                                        "emission_spectrum", "pump_sweep",  "estimates_report"};
inline constexpr std::string_view solver_names[] = {"full_quantum", "semiclassical", "both", "analytic"};

inline std::string_view to_string(Experiment e) { return experiment_names[static_cast<int>(e)]; }
inline std::string_view to_string(Solver s) { return solver_names[static_cast<int>(s)]; }

/// Axes that are not model parameters.
inline constexpr std::string_view probe_axis = "probe_detuning";
inline constexpr std::string_view frequency_axis = "frequency";

struct AxisSpec {
  std::string name;
  double start = 0.0, stop = 0.0;
  int points = 0;
  Spacing spacing = Spacing::linear;
  std::vector<double> explicit_values;  ///< used instead of start/stop/points when non-empty

  std::vector<double> values() const {
    if (!explicit_values.empty()) return explicit_values;
    std::vector<double> v(static_cast<std::size_t>(std::max(points, 0)));
    for (int i = 0; i < points; ++i) {
      const double s = points > 1 ? static_cast<double>(i) / (points - 1) : 0.0;
      v[static_cast<std::size_t>(i)] = spacing == Spacing::log ? std::exp(std::log(start) + s * (std::log(stop) - std::log(start)))
                                                               : start + s * (stop - start);
    }
    return v;
  }
};

/// A fully resolved run request. Frequencies are MHz (f = ω/2π).
struct RunSpec {
  Experiment experiment = Experiment::estimates_report;
  Solver solver = Solver::analytic;
  ModelParams params;
  std::vector<AxisSpec> axes;
  std::string preset;
  std::string description;
  std::string solver_reason;
  double memory_budget_mb = 4096.0;
  unsigned threads = 1;
  double probe_amplitude = 0.01;
  ProbeMethod probe_method = ProbeMethod::linear_response;
  bool check_linearity = true;
  bool apply_purcell = true;      ///< semiclassical κ_eff = κ + κ_Purcell
  double spectrum_tail_tol = 1e-4;
  std::string output;             ///< empty: stdout
  Format format = Format::json;

  const AxisSpec* axis(std::string_view name) const {
    for (const auto& a : axes)
      if (a.name == name) return &a;
    return nullptr;
  }
};

inline Solver default_solver(Experiment e) {
  switch (e) {
    case Experiment::pump_sweep: return Solver::semiclassical;
    case Experiment::estimates_report: return Solver::analytic;
    default: return Solver::full_quantum;
  }
}

inline bool uses_full_quantum(const RunSpec& s) { return s.solver == Solver::full_quantum || s.solver == Solver::both; }

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::pair<int, int> line_column(std::string_view text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

/// Parses JSON text; syntax errors report line and column.
inline Document parse_document(std::string_view text, const std::string& origin = "config") {
  try {
    return Document::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // byte is one past the offending character
    const auto [line, col] = detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string what = e.what();
    if (auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
    throw ValidationError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": parse error: " + what);
  }
}

inline Document read_document(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading config '" + path + "'");
  return parse_document(ss.str(), path);
}

/// key=value. The value is read as JSON when it parses, otherwise as a string.
/// `axis.NAME=start:stop:points[:log]` replaces (or appends) the axis NAME.
inline void apply_override(Document& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ValidationError("override '" + std::string(assignment) + "' is not of the form key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string value(assignment.substr(eq + 1));

  if (key.rfind("axis.", 0) == 0) {
    const std::string name = key.substr(5);
    std::vector<std::string> parts;
    std::stringstream ss(value);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3 && parts.size() != 4)
      throw ValidationError("override '" + key + "': expected start:stop:points[:log|linear]");
    Document axis;
    axis["name"] = name;
    auto number = [&](const std::string& s) {
      double v = 0.0;
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ValidationError("override '" + key + "': '" + s + "' is not a number");
      return v;
    };
    axis["start"] = number(parts[0]);
    axis["stop"] = number(parts[1]);
    const double pts = number(parts[2]);
    if (pts != std::floor(pts)) throw ValidationError("override '" + key + "': points must be an integer");
    axis["points"] = static_cast<int>(pts);
    if (parts.size() == 4) axis["spacing"] = parts[3];
    if (!doc.contains("axes") || !doc["axes"].is_array()) doc["axes"] = Document::array();
    for (auto& a : doc["axes"])
      if (a.is_object() && a.value("name", "") == name) {
        a = axis;
        return;
      }
    doc["axes"].push_back(axis);
    return;
  }

  Document v;
  try {
    v = Document::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    v = value;
  }
  doc[key] = v;
}

inline Document preset_document(std::string_view name);  // presets.hpp

namespace detail {

struct Reader {
  std::vector<std::string> errors;

  double number(const std::string& key, const Document& v) {
    if (!v.is_number()) {
      errors.push_back("key '" + key + "': expected a number");
      return 0.0;
    }
    return v.get<double>();
  }
  std::string string(const std::string& key, const Document& v) {
    if (!v.is_string()) {
      errors.push_back("key '" + key + "': expected a string");
      return {};
    }
    return v.get<std::string>();
  }
  bool boolean(const std::string& key, const Document& v) {
    if (!v.is_boolean()) {
      errors.push_back("key '" + key + "': expected true or false");
      return false;
    }
    return v.get<bool>();
  }
  template <typename E, std::size_t N>
  E choice(const std::string& key, const Document& v, const std::string_view (&names)[N]) {
    const std::string s = string(key, v);
    for (std::size_t i = 0; i < N; ++i)
      if (names[i] == s) return static_cast<E>(i);
    if (v.is_string()) {
      std::string allowed;
      for (auto n : names) allowed += (allowed.empty() ? "" : ", ") + std::string(n);
      errors.push_back("key '" + key + "': unknown value '" + s + "' (allowed: " + allowed + ")");
    }
    return static_cast<E>(0);
  }

  AxisSpec axis(std::size_t i, const Document& a) {
    AxisSpec ax;
    const std::string where = "axes[" + std::to_string(i) + "]";
    if (!a.is_object()) {
      errors.push_back(where + ": expected an object");
      return ax;
    }
    bool has_range = false;
    for (const auto& [k, v] : a.items()) {
      const std::string key = where + "." + k;
      if (k == "name") ax.name = string(key, v);
      else if (k == "start") ax.start = number(key, v), has_range = true;
      else if (k == "stop") ax.stop = number(key, v), has_range = true;
      else if (k == "points") {
        const double p = number(key, v);
        if (p != std::floor(p)) errors.push_back(key + ": must be an integer");
        ax.points = static_cast<int>(p);
        has_range = true;
      } else if (k == "spacing") {
        static constexpr std::string_view spacings[] = {"linear", "log"};
        ax.spacing = choice<Spacing>(key, v, spacings);
      } else if (k == "values") {
        if (!v.is_array()) errors.push_back(key + ": expected an array of numbers");
        else
          for (const auto& x : v) ax.explicit_values.push_back(number(key, x));
      } else {
        errors.push_back("unknown key '" + key + "'");
      }
    }
    if (ax.name.empty()) errors.push_back(where + ": missing 'name'");
    if (!ax.explicit_values.empty() && has_range) errors.push_back(where + ": give either 'values' or start/stop/points, not both");
    return ax;
  }
};

}  // namespace detail

inline std::vector<std::string> spec_violations(const RunSpec& s);  // below

/// Builds a RunSpec from a flat key/value document. A "preset" key expands to
/// that preset first; every other key then overrides it. Unknown keys are errors.
inline RunSpec spec_from_document(const Document& doc_in) {
  if (!doc_in.is_object()) throw ValidationError("config must be a JSON object");
  Document doc = Document::object();
  std::string preset;
  if (doc_in.contains("preset")) {
    if (!doc_in["preset"].is_string()) throw ValidationError("key 'preset': expected a string");
    preset = doc_in["preset"].get<std::string>();
    doc = preset_document(preset);
  }
  for (const auto& [k, v] : doc_in.items())
    if (k != "preset") doc[k] = v;

  RunSpec s;
  s.preset = preset;
  detail::Reader rd;
  bool solver_given = false, experiment_given = false;
  for (const auto& [k, v] : doc.items()) {
    if (k == "experiment") {
      s.experiment = rd.choice<Experiment>(k, v, experiment_names);
      experiment_given = true;
    } else if (k == "solver") {
      s.solver = rd.choice<Solver>(k, v, solver_names);
      solver_given = true;
    } else if (k == "description") s.description = rd.string(k, v);
    else if (k == "solver_reason") s.solver_reason = rd.string(k, v);
    else if (k == "memory_budget_mb") s.memory_budget_mb = rd.number(k, v);
    else if (k == "threads") {
      const double t = rd.number(k, v);
      if (t < 0 || t != std::floor(t)) rd.errors.push_back("key 'threads': expected a non-negative integer");
      else s.threads = static_cast<unsigned>(t);
    } else if (k == "probe_amplitude") s.probe_amplitude = rd.number(k, v);
    else if (k == "probe_method") {
      static constexpr std::string_view methods[] = {"linear_response", "driven"};
      s.probe_method = rd.choice<ProbeMethod>(k, v, methods);
    } else if (k == "check_linearity") s.check_linearity = rd.boolean(k, v);
    else if (k == "apply_purcell") s.apply_purcell = rd.boolean(k, v);
    else if (k == "spectrum_tail_tol") s.spectrum_tail_tol = rd.number(k, v);
    else if (k == "output") s.output = rd.string(k, v);
    else if (k == "format") {
      static constexpr std::string_view formats[] = {"csv", "json"};
      s.format = rd.choice<Format>(k, v, formats);
    } else if (k == "axes") {
      if (!v.is_array()) rd.errors.push_back("key 'axes': expected an array");
      else
        for (std::size_t i = 0; i < v.size(); ++i) s.axes.push_back(rd.axis(i, v[i]));
    } else if (k == "g_fe") {
      if (v.is_null()) s.params.g_fe.reset();
      else s.params.g_fe = rd.number(k, v);
    } else if (is_param_name(k)) {
      const double x = rd.number(k, v);
      try {
        set_param(s.params, k, x);
      } catch (const ValidationError& e) {
        rd.errors.push_back("key '" + k + "': " + e.what());
      }
    } else {
      rd.errors.push_back("unknown key '" + k + "'");
    }
  }
  if (!experiment_given) rd.errors.push_back("missing key 'experiment' (or 'preset')");
  if (!solver_given) s.solver = default_solver(s.experiment);
  if (rd.errors.empty()) rd.errors = spec_violations(s);
  if (!rd.errors.empty()) throw ValidationError(rd.errors);
  return s;
}

inline RunSpec load_config(const std::string& path) { return spec_from_document(read_document(path)); }

/// Canonical document of the resolved spec. Output location and thread count
/// are left out: they do not change results.
inline Document to_document(const RunSpec& s) {
  Document d;
  d["experiment"] = to_string(s.experiment);
  d["solver"] = to_string(s.solver);
  if (!s.preset.empty()) d["preset"] = s.preset;
  for (const auto& f : real_fields) d[std::string(f.name)] = s.params.*f.member;
  d["fock_cutoff"] = s.params.fock_cutoff;
  d["g_fe"] = s.params.g_fe ? Document(*s.params.g_fe) : Document(nullptr);
  Document axes = Document::array();
  for (const auto& a : s.axes) {
    Document ax;
    ax["name"] = a.name;
    if (!a.explicit_values.empty()) {
      ax["values"] = a.explicit_values;
    } else {
      ax["start"] = a.start;
      ax["stop"] = a.stop;
      ax["points"] = a.points;
      ax["spacing"] = a.spacing == Spacing::log ? "log" : "linear";
    }
    axes.push_back(ax);
  }
  d["axes"] = axes;
  d["memory_budget_mb"] = s.memory_budget_mb;
  d["probe_amplitude"] = s.probe_amplitude;
  d["probe_method"] = s.probe_method == ProbeMethod::driven ? "driven" : "linear_response";
  d["check_linearity"] = s.check_linearity;
  d["apply_purcell"] = s.apply_purcell;
  d["spectrum_tail_tol"] = s.spectrum_tail_tol;
  return d;
}

// ---------------------------------------------------------------------------
// Validation

/// Peak memory of one full-quantum task at the given cutoff, in MB. Dominated
/// by the sparse LU of the dim²×dim² Liouvillian, whose fill grows like dim³.
inline double full_quantum_task_mb(int fock_cutoff) {
  const double d = 3.0 * (fock_cutoff + 1);
  const double d2 = d * d;
  return (16.0 * d2 * (2.0 * d + 64.0) + 200.0 * d2) / (1024.0 * 1024.0);
}

inline int max_cutoff(const RunSpec& s) {
  int n = s.params.fock_cutoff;
  if (const AxisSpec* a = s.axis("fock_cutoff"))
    for (double v : a->values()) n = std::max(n, static_cast<int>(v));
  return n;
}

inline std::size_t outer_cells(const RunSpec& s) {
  // tasks run in parallel over every axis except the probe/frequency axis
  std::size_t n = 1;
  for (const auto& a : s.axes)
    if (a.name != probe_axis && a.name != frequency_axis) n *= a.values().size();
  return n;
}

inline double estimated_memory_mb(const RunSpec& s) {
  if (!uses_full_quantum(s)) return 0.0;
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(s.threads == 0 ? hw : s.threads, std::max<std::size_t>(outer_cells(s), 1));
  return static_cast<double>(workers) * full_quantum_task_mb(max_cutoff(s));
}

namespace detail {

struct AxisRule {
  std::vector<std::string_view> pseudo;  ///< required non-parameter axes, in order after the parameter axis
  int max_param_axes;
  int min_param_axes;
};

inline AxisRule axis_rule(Experiment e) {
  switch (e) {
    case Experiment::rabi_map:
    case Experiment::hotspot_map: return {{probe_axis}, 1, 1};
    case Experiment::gain_profile: return {{probe_axis}, 1, 0};
    case Experiment::emission_map: return {{frequency_axis}, 1, 1};
    case Experiment::emission_spectrum: return {{frequency_axis}, 0, 0};
    case Experiment::pump_sweep: return {{}, 1, 1};
    case Experiment::estimates_report: return {{}, 1, 0};
  }
  return {{}, 0, 0};
}

}  // namespace detail

/// Every problem with a spec, each message naming the offending key.
inline std::vector<std::string> spec_violations(const RunSpec& s) {
  std::vector<std::string> out;
  const std::string exp(to_string(s.experiment));
  for (auto& v : param_violations(s.params, s.experiment != Experiment::estimates_report)) out.push_back(v);

  const auto rule = detail::axis_rule(s.experiment);
  int param_axes = 0;
  std::vector<std::string_view> pseudo_seen;
  for (std::size_t i = 0; i < s.axes.size(); ++i) {
    const AxisSpec& a = s.axes[i];
    const std::string where = "axis '" + a.name + "'";
    const bool pseudo = a.name == probe_axis || a.name == frequency_axis;
    if (pseudo) {
      pseudo_seen.push_back(a.name == probe_axis ? probe_axis : frequency_axis);
    } else if (is_param_name(a.name)) {
      if (!pseudo_seen.empty()) out.push_back(where + ": parameter axes must come before '" + std::string(pseudo_seen.front()) + "'");
      ++param_axes;
    } else {
      out.push_back(where + ": not a parameter name or a known axis");
      continue;
    }
    const auto values = a.values();
    if (values.size() < 2) out.push_back(where + ": needs at least 2 points");
    if (a.explicit_values.empty() && a.spacing == Spacing::log && !(a.start > 0.0 && a.stop > 0.0))
      out.push_back(where + ": log spacing needs start and stop > 0");
    for (double v : values)
      if (!std::isfinite(v)) {
        out.push_back(where + ": values must be finite");
        break;
      }
    if (a.name == frequency_axis || a.name == probe_axis)
      for (std::size_t k = 1; k < values.size(); ++k)
        if (!(values[k] > values[k - 1])) {
          out.push_back(where + ": values must be strictly increasing");
          break;
        }
    if (is_param_name(a.name)) {
      ModelParams q = s.params;
      for (double v : values) {
        try {
          set_param(q, a.name, v);
        } catch (const ValidationError& e) {
          out.push_back(where + ": " + e.what());
          break;
        }
        if (auto pv = param_violations(q, s.experiment != Experiment::estimates_report); !pv.empty()) {
          out.push_back(where + " at " + std::to_string(v) + ": " + pv.front());
          break;
        }
      }
    }
  }
  if (param_axes < rule.min_param_axes || param_axes > rule.max_param_axes)
    out.push_back("experiment " + exp + " takes " +
                  (rule.min_param_axes == rule.max_param_axes ? std::to_string(rule.min_param_axes)
                                                              : std::to_string(rule.min_param_axes) + " to " + std::to_string(rule.max_param_axes)) +
                  " parameter axis/axes, got " + std::to_string(param_axes));
  if (pseudo_seen != rule.pseudo) {
    std::string need;
    for (auto p : rule.pseudo) need += (need.empty() ? "'" : ", '") + std::string(p) + "'";
    out.push_back("experiment " + exp + (need.empty() ? " takes no probe or frequency axis" : " needs exactly the axis " + need));
  }

  const bool fq_only = s.experiment != Experiment::pump_sweep && s.experiment != Experiment::estimates_report;
  if (fq_only && s.solver != Solver::full_quantum)
    out.push_back("key 'solver': experiment " + exp + " needs \"full_quantum\"");
  if (s.experiment == Experiment::pump_sweep && s.solver == Solver::analytic)
    out.push_back("key 'solver': pump_sweep needs \"semiclassical\", \"full_quantum\" or \"both\"");
  if (s.experiment == Experiment::estimates_report && s.solver != Solver::analytic)
    out.push_back("key 'solver': estimates_report is analytic; use \"analytic\" or omit the key");
  if (s.experiment == Experiment::rabi_map && s.params.omega_pump != 0.0)
    out.push_back("key 'omega_pump': rabi_map is the pump-off map, omega_pump must be 0 (use hotspot_map)");
  if (s.experiment == Experiment::hotspot_map && !(s.params.omega_pump > 0.0) && !s.axis("omega_pump"))
    out.push_back("key 'omega_pump': hotspot_map needs the pump on (omega_pump > 0)");
  if (s.experiment == Experiment::gain_profile && !(s.params.omega_pump > 0.0))
    out.push_back("key 'omega_pump': gain_profile compares pump on and off, omega_pump must be > 0");
  const bool probing = s.experiment == Experiment::rabi_map || s.experiment == Experiment::hotspot_map ||
                       s.experiment == Experiment::gain_profile;
  if (probing && (!(s.params.kappa_in > 0.0) || !(s.params.kappa_out > 0.0)))
    out.push_back("keys 'kappa_in'/'kappa_out': probe experiments need both port couplings > 0");
  if (!(s.probe_amplitude > 0.0)) out.push_back("key 'probe_amplitude': must be > 0");
  if (!(s.spectrum_tail_tol > 0.0 && s.spectrum_tail_tol < 1.0)) out.push_back("key 'spectrum_tail_tol': must be in (0, 1)");
  if (!(s.memory_budget_mb > 0.0)) out.push_back("key 'memory_budget_mb': must be > 0");

  if (out.empty() && uses_full_quantum(s)) {
    const double need = estimated_memory_mb(s);
    if (need > s.memory_budget_mb)
      out.push_back("full-quantum run needs about " + std::to_string(static_cast<long>(std::ceil(need))) +
                    " MB at fock_cutoff " + std::to_string(max_cutoff(s)) + ", above memory_budget_mb " +
                    std::to_string(static_cast<long>(s.memory_budget_mb)) +
                    "; use solver \"semiclassical\", a scaled-kappa desk preset (fig3b, fig4b) with a smaller "
                    "fock_cutoff, fewer threads, or raise memory_budget_mb");
  }
  return out;
}

}  // namespace saser::run

#include "saser/run/presets.hpp"
