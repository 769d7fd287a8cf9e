// saser: command-line front end for the simulator.
//
// Exit codes: 0 success, 2 validation error, 3 solver non-convergence, 4 I/O error.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "saser/fit/least_squares.hpp"
#include "saser/report.hpp"
#include "saser/run/experiment.hpp"

namespace {

using saser::run::Document;
using saser::run::Format;

enum Exit { ok = 0, unexpected = 1, validation = 2, solver = 3, io = 4 };

struct SpecArgs {
  std::string config;
  std::string preset;
  std::vector<std::string> overrides;
  std::optional<unsigned> threads;
};

void add_spec_options(CLI::App* cmd, SpecArgs& a) {
  cmd->add_option("--config", a.config, "JSON config file");
  cmd->add_option("--preset", a.preset, "start from a named preset (see `saser presets`)");
  cmd->add_option("--override", a.overrides, "key=value, or axis.NAME=start:stop:points[:log]; repeatable");
  cmd->add_option("--threads", a.threads, "worker threads (0 = all cores)");
}

saser::run::RunSpec resolve(const SpecArgs& a) {
  if (a.config.empty() && a.preset.empty()) throw saser::ValidationError("give --config PATH or --preset NAME");
  Document doc = a.config.empty() ? Document::object() : saser::run::read_document(a.config);
  if (!a.preset.empty()) doc["preset"] = a.preset;
  for (const auto& o : a.overrides) saser::run::apply_override(doc, o);
  if (a.threads) doc["threads"] = *a.threads;
  return saser::run::spec_from_document(doc);
}

Format pick_format(const std::string& flag, const std::string& out, Format fallback) {
  if (flag == "csv") return Format::csv;
  if (flag == "json") return Format::json;
  if (out.size() >= 4 && out.compare(out.size() - 4, 4, ".csv") == 0) return Format::csv;
  if (out.size() >= 5 && out.compare(out.size() - 5, 5, ".json") == 0) return Format::json;
  return fallback;
}

int print_error(const char* kind, const std::exception& e, int code) {
  if (const auto* v = dynamic_cast<const saser::ValidationError*>(&e)) {
    for (const auto& msg : v->violations()) std::cerr << "saser: " << kind << ": " << msg << "\n";
  } else {
    std::cerr << "saser: " << kind << ": " << e.what() << "\n";
  }
  return code;
}

int cmd_run(const SpecArgs& a, const std::string& out_flag, const std::string& format_flag) {
  saser::run::RunSpec spec = resolve(a);
  const std::string out = out_flag.empty() ? spec.output : out_flag;
  const Format fmt = pick_format(format_flag, out, spec.format);
  const saser::run::GridResult result = saser::run::run_experiment(spec);
  for (const auto& w : result.warnings) std::cerr << "saser: warning: " << w << "\n";
  saser::run::write_output(result, out, fmt);
  return ok;
}

int cmd_validate(const SpecArgs& a) {
  const saser::run::RunSpec spec = resolve(a);
  const saser::ParamReport report = saser::validate_params(spec.params);
  Document d;
  d["valid"] = true;
  d["spec"] = saser::run::to_document(spec);
  d["description"] = spec.description;
  d["solver_reason"] = spec.solver_reason;
  d["estimated_memory_mb"] = saser::run::estimated_memory_mb(spec);
  d["memory_budget_mb"] = spec.memory_budget_mb;
  d["inversion_capable"] = report.inversion_capable;
  d["n_pn_estimate"] = report.n_pn_estimate ? Document(*report.n_pn_estimate) : Document(nullptr);
  d["warnings"] = report.warnings;
  std::cout << d.dump(2) << "\n";
  return ok;
}

int cmd_presets(const std::string& name) {
  if (name.empty()) {
    for (const auto& p : saser::run::preset_list()) {
      const saser::run::RunSpec s = saser::run::preset_spec(p.name);
      std::cout << p.name << "\t" << saser::run::to_string(s.experiment) << "\t" << saser::run::to_string(s.solver) << "\t"
                << p.summary << "\n";
    }
    return ok;
  }
  std::cout << saser::run::preset_document(name).dump(2) << "\n";
  return ok;
}

std::pair<std::string, double> name_value(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw saser::ValidationError("'" + s + "' is not of the form name=value");
  try {
    std::size_t used = 0;
    const double v = std::stod(s.substr(eq + 1), &used);
    if (used != s.size() - eq - 1) throw std::invalid_argument("trailing characters");
    return {s.substr(0, eq), v};
  } catch (const std::logic_error&) {
    throw saser::ValidationError("'" + s + "': value is not a number");
  }
}

int cmd_fit(const std::string& model_id, const std::string& data, const std::vector<std::string>& inits,
            const std::vector<std::string>& fixes, const std::string& out, const std::string& format_flag) {
  using namespace saser::fit;
  const CurveModel model = model_by_id(model_id);
  const CurveData curve = read_curve_csv(data);

  std::vector<std::optional<double>> given(model.params.size());
  for (const auto& s : inits) {
    const auto [name, v] = name_value(s);
    const std::size_t k = model.index_of(name);
    if (k >= model.params.size()) throw saser::ValidationError("model " + model.id + " has no parameter '" + name + "'");
    given[k] = v;
  }
  std::vector<std::string> missing;
  std::vector<double> init(model.params.size());
  for (std::size_t k = 0; k < given.size(); ++k) {
    if (given[k]) init[k] = *given[k];
    else missing.push_back("missing --init " + model.params[k] + "=VALUE");
  }
  if (!missing.empty()) throw saser::ValidationError(missing);
  std::vector<Bound> bounds(model.params.size());
  for (std::size_t k = 0; k < model.params.size(); ++k)
    if (std::find(model.fixed_by_default.begin(), model.fixed_by_default.end(), model.params[k]) != model.fixed_by_default.end())
      bounds[k] = {init[k], init[k]};
  for (const auto& f : fixes) {
    const std::size_t k = model.index_of(f);
    if (k >= model.params.size()) throw saser::ValidationError("model " + model.id + " has no parameter '" + f + "'");
    bounds[k] = {init[k], init[k]};
  }

  const FitResult r = fit_curve(model, curve, init, bounds);
  const Format fmt = pick_format(format_flag, out, Format::json);
  std::string text;
  if (fmt == Format::csv) {
    text = "name,value,stderr,fixed\r\n";
    for (std::size_t k = 0; k < r.names.size(); ++k)
      text += saser::run::csv_field(r.names[k]) + "," + saser::run::format_number(r.params[k]) + "," +
              saser::run::format_number(r.stderr_[k]) + "," + (r.fixed[k] ? "1" : "0") + "\r\n";
  } else {
    Document d;
    d["model"] = r.model;
    d["data"] = data;
    d["x_unit"] = curve.x_unit;
    d["converged"] = r.converged;
    d["iterations"] = r.iterations;
    d["message"] = r.message;
    d["residual_norm"] = r.residual_norm;
    Document params = Document::object();
    for (std::size_t k = 0; k < r.names.size(); ++k)
      params[r.names[k]] = Document{{"value", r.params[k]}, {"stderr", r.stderr_[k]}, {"fixed", static_cast<bool>(r.fixed[k])}};
    d["params"] = params;
    d["code_version"] = saser::run::code_version;
    text = d.dump(2) + "\n";
  }
  saser::run::write_text(text, out);
  if (!r.converged) {
    std::cerr << "saser: fit did not converge: " << r.message << "\n";
    return solver;
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pumped three-level atom coupled to a phonon resonator: simulation, presets and fitting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(saser::run::code_version));

  SpecArgs run_args, validate_args;
  std::string out, format;
  auto* run = app.add_subcommand("run", "run an experiment from a config or preset");
  add_spec_options(run, run_args);
  run->add_option("--out", out, "output path (default: stdout)");
  run->add_option("--format", format, "csv or json (default: from --out extension, else json)")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* validate = app.add_subcommand("validate", "check a config or preset without running it");
  add_spec_options(validate, validate_args);

  std::string preset_name;
  auto* presets = app.add_subcommand("presets", "list presets, or print one as a config document");
  presets->add_option("name", preset_name, "preset to print");

  std::string model, data, fit_out, fit_format;
  std::vector<std::string> inits, fixes;
  auto* fit = app.add_subcommand("fit", "fit a model to CSV spectroscopy data");
  fit->add_option("--model", model, "notch_ge, notch_gf, lorentzian or voigt")->required();
  fit->add_option("--data", data, "CSV with header x,re,im or x,value")->required();
  fit->add_option("--init", inits, "initial value name=value, one per parameter");
  fit->add_option("--fix", fixes, "hold a parameter at its initial value; repeatable");
  fit->add_option("--out", fit_out, "output path (default: stdout)");
  fit->add_option("--format", fit_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : validation;
  }

  try {
    if (*run) return cmd_run(run_args, out, format);
    if (*validate) return cmd_validate(validate_args);
    if (*presets) return cmd_presets(preset_name);
    if (*fit) return cmd_fit(model, data, inits, fixes, fit_out, fit_format);
  } catch (const saser::ValidationError& e) {
    return print_error("invalid input", e, validation);
  } catch (const saser::DomainError& e) {
    return print_error("invalid input", e, validation);
  } catch (const saser::DimensionError& e) {
    return print_error("invalid input", e, validation);
  } catch (const saser::SolverError& e) {
    return print_error("solver did not converge", e, solver);
  } catch (const saser::IoError& e) {
    return print_error("I/O error", e, io);
  } catch (const std::exception& e) {
    return print_error("error", e, unexpected);
  }
  return ok;
}
