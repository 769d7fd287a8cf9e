#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "saser/fit/least_squares.hpp"
#include "saser/lasing.hpp"
#include "saser/lindblad.hpp"
#include "saser/parallel.hpp"
#include "saser/probe.hpp"
#include "saser/run/result.hpp"
#include "saser/semiclassical.hpp"
#include "saser/spectrum.hpp"

namespace saser::run {

namespace detail {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();
constexpr double cutoff_tol = 1e-4;

inline std::string axis_unit(std::string_view name) { return name == "fock_cutoff" ? "" : "MHz"; }

/// The parameter axis (at most one), or a single row at the base parameters.
struct Rows {
  std::string name;  ///< empty when there is no parameter axis
  std::vector<double> values{nan};

  ModelParams at(const ModelParams& base, std::size_t i) const {
    ModelParams q = base;
    if (!name.empty()) set_param(q, name, values[i]);
    return q;
  }
  std::string label(std::size_t i) const {
    return name.empty() ? std::string() : name + "=" + format_number(values[i]) + ": ";
  }
};

inline Rows param_rows(const RunSpec& s) {
  Rows r;
  for (const auto& a : s.axes)
    if (a.name != probe_axis && a.name != frequency_axis) {
      r.name = a.name;
      r.values = a.values();
    }
  return r;
}

inline void collect(GridResult& out, const std::vector<std::vector<std::string>>& per_row) {
  for (const auto& w : per_row) out.warnings.insert(out.warnings.end(), w.begin(), w.end());
}

inline SteadyStateOptions steady_options() { return {}; }

inline ProbeOptions probe_options(const RunSpec& s) {
  ProbeOptions o;
  o.amplitude = s.probe_amplitude;
  o.method = s.probe_method;
  o.check_linearity = s.check_linearity;
  return o;
}

inline MeanFieldOptions mean_field_options(const RunSpec& s) {
  MeanFieldOptions o;
  o.apply_purcell = s.apply_purcell;
  return o;
}

/// Checks a full-quantum steady state; problems become warnings.
inline void audit_state(const DensityMatrix& rho, const std::string& label, std::vector<std::string>& warnings,
                        double& worst_top_weight) {
  const StateDiagnostics d = check_state(rho);
  if (!d.ok())
    warnings.push_back(label + "steady state fails hygiene checks (trace error " + format_number(d.trace_error) +
                       ", hermiticity " + format_number(d.hermiticity_error) + ", min eigenvalue " +
                       format_number(d.min_eigenvalue) + ")");
  const CutoffCheck c = cutoff_check(rho, cutoff_tol);
  worst_top_weight = std::max(worst_top_weight, c.top_weight);
  if (!c.converged)
    warnings.push_back(label + "fock_cutoff too small: top Fock levels hold " + format_number(c.top_weight) +
                       " of the population");
}

// ---------------------------------------------------------------------------

inline void run_probe_map(const RunSpec& s, GridResult& out) {
  const Rows rows = param_rows(s);
  const std::vector<double> det = s.axis(probe_axis)->values();
  out.fields = {"t_re", "t_im", "t_abs", "s21_abs"};
  out.allocate();
  const ProbeOptions popt = probe_options(s);
  std::vector<std::vector<std::string>> warns(rows.values.size());
  std::vector<ProbeResult> results(rows.values.size());
  parallel_for(rows.values.size(), s.threads, [&](std::size_t i) {
    ModelParams q = rows.at(s.params, i);
    if (s.experiment == Experiment::rabi_map) q.omega_pump = 0.0;
    results[i] = probe_transmission(q, det, popt);
    for (const auto& w : results[i].warnings) warns[i].push_back(rows.label(i) + w);
    for (std::size_t j = 0; j < det.size(); ++j) {
      const std::size_t c = i * det.size() + j;
      const Complex t = results[i].t[j];
      out.at(c, 0) = t.real();
      out.at(c, 1) = t.imag();
      out.at(c, 2) = std::abs(t);
      out.at(c, 3) = std::abs(t) * results[i].s21_scale;
    }
  });
  collect(out, warns);

  double best = -1.0, nonlin = 0.0, top = 0.0;
  std::size_t best_cell = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    nonlin = std::max(nonlin, results[i].nonlinearity);
    top = std::max(top, results[i].cutoff.top_weight);
    for (std::size_t j = 0; j < det.size(); ++j)
      if (std::abs(results[i].t[j]) > best) {
        best = std::abs(results[i].t[j]);
        best_cell = i * det.size() + j;
      }
  }
  out.summary.emplace_back("max_t_abs", best);
  if (!rows.name.empty()) out.summary.emplace_back(rows.name + "_at_max", rows.values[best_cell / det.size()]);
  out.summary.emplace_back("probe_detuning_at_max", det[best_cell % det.size()]);
  out.summary.emplace_back("max_nonlinearity", nonlin);
  out.summary.emplace_back("max_cutoff_top_weight", top);

  // peak splitting on the row closest to resonance
  if (rows.name == "delta_ge") {
    std::size_t r0 = 0;
    for (std::size_t i = 1; i < rows.values.size(); ++i)
      if (std::abs(rows.values[i]) < std::abs(rows.values[r0])) r0 = i;
    const auto peaks = transmission_peaks(det, results[r0].t);
    out.summary.emplace_back("resonance_row_delta_ge", rows.values[r0]);
    out.summary.emplace_back("resonance_row_peaks", static_cast<double>(peaks.size()));
    out.summary.emplace_back("resonance_row_splitting", peaks.size() == 2 ? peaks[1] - peaks[0] : nan);
  }
}

inline void run_gain_profile(const RunSpec& s, GridResult& out) {
  const Rows rows = param_rows(s);
  const std::vector<double> det = s.axis(probe_axis)->values();
  out.fields = {"t_on_re", "t_on_im", "t_on_abs", "t_off_re", "t_off_im", "t_off_abs", "gain"};
  out.allocate();
  const ProbeOptions popt = probe_options(s);
  std::vector<std::vector<std::string>> warns(rows.values.size());
  parallel_for(rows.values.size(), s.threads, [&](std::size_t i) {
    const ModelParams on = rows.at(s.params, i);
    ModelParams off = on;
    off.omega_pump = 0.0;
    const ProbeResult a = probe_transmission(on, det, popt);
    const ProbeResult b = probe_transmission(off, det, popt);
    for (const auto& w : a.warnings) warns[i].push_back(rows.label(i) + "pump on: " + w);
    for (const auto& w : b.warnings) warns[i].push_back(rows.label(i) + "pump off: " + w);
    for (std::size_t j = 0; j < det.size(); ++j) {
      const std::size_t c = i * det.size() + j;
      out.at(c, 0) = a.t[j].real();
      out.at(c, 1) = a.t[j].imag();
      out.at(c, 2) = std::abs(a.t[j]);
      out.at(c, 3) = b.t[j].real();
      out.at(c, 4) = b.t[j].imag();
      out.at(c, 5) = std::abs(b.t[j]);
      out.at(c, 6) = std::abs(a.t[j]) / std::abs(b.t[j]);
    }
  });
  collect(out, warns);
  std::size_t best = 0, best_gain = 0;
  for (std::size_t c = 1; c < out.cells(); ++c) {
    if (out.at(c, 2) > out.at(best, 2)) best = c;
    if (out.at(c, 6) > out.at(best_gain, 6)) best_gain = c;
  }
  out.summary.emplace_back("max_t_on_abs", out.at(best, 2));
  out.summary.emplace_back("t_off_abs_at_max", out.at(best, 5));
  out.summary.emplace_back("probe_detuning_at_max", det[best % det.size()]);
  out.summary.emplace_back("max_gain", out.at(best_gain, 6));
  out.summary.emplace_back("probe_detuning_at_max_gain", det[best_gain % det.size()]);
}

inline void run_emission_map(const RunSpec& s, GridResult& out) {
  const Rows rows = param_rows(s);
  const std::vector<double> freq = s.axis(frequency_axis)->values();
  out.fields = {"psd", "n_ss", "sum_rule"};
  out.allocate();
  SpectrumOptions sopt;
  sopt.tail_tol = s.spectrum_tail_tol;
  std::vector<std::vector<std::string>> warns(rows.values.size());
  std::vector<double> top(rows.values.size(), 0.0), clip(rows.values.size(), 0.0);
  parallel_for(rows.values.size(), s.threads, [&](std::size_t i) {
    const ModelParams q = rows.at(s.params, i);
    const SuperOperator l = liouvillian(q);
    const DensityMatrix ss = steady_state(l, steady_options());
    audit_state(ss, rows.label(i), warns[i], top[i]);
    const Spectrum sp = emission_spectrum(l, ss, freq, sopt);
    for (const auto& w : sp.warnings) warns[i].push_back(rows.label(i) + w);
    clip[i] = sp.max_clip;
    for (std::size_t j = 0; j < freq.size(); ++j) {
      const std::size_t c = i * freq.size() + j;
      out.at(c, 0) = sp.psd[j];
      out.at(c, 1) = sp.n_ss;
      out.at(c, 2) = sp.sum_rule();
    }
  });
  collect(out, warns);
  out.summary.emplace_back("max_cutoff_top_weight", *std::max_element(top.begin(), top.end()));
  out.summary.emplace_back("max_negative_clip", *std::max_element(clip.begin(), clip.end()));
}

inline void run_emission_spectrum(const RunSpec& s, GridResult& out) {
  const std::vector<double> freq = s.axis(frequency_axis)->values();
  out.fields = {"psd", "voigt_fit"};
  out.allocate();
  const ModelParams& p = s.params;
  const SuperOperator l = liouvillian(p);
  const DensityMatrix ss = steady_state(l, steady_options());
  double top = 0.0;
  audit_state(ss, "", out.warnings, top);
  SpectrumOptions sopt;
  sopt.tail_tol = s.spectrum_tail_tol;
  const Spectrum sp = emission_spectrum(l, ss, freq, sopt);
  out.warnings.insert(out.warnings.end(), sp.warnings.begin(), sp.warnings.end());
  for (std::size_t j = 0; j < freq.size(); ++j) out.at(j, 0) = sp.psd[j];

  const fit::CurveData curve = fit::CurveData::real(freq, sp.psd);
  double width = nan;
  try {
    width = fit::fwhm(curve);
  } catch (const DomainError& e) {
    out.warnings.push_back(std::string("FWHM: ") + e.what());
  }
  const auto peak = static_cast<std::size_t>(std::max_element(sp.psd.begin(), sp.psd.end()) - sp.psd.begin());
  const double w0 = std::isfinite(width) ? width : 5.0 * (freq.back() - freq.front()) / static_cast<double>(freq.size());
  const std::vector<double> init{freq[peak], w0, 0.1 * w0, sp.psd[peak] * std::numbers::pi * w0 / 2.0, 0.0};
  const std::vector<fit::Bound> bounds{{}, {0.0, fit::Bound{}.hi}, {0.0, fit::Bound{}.hi}, {0.0, fit::Bound{}.hi}, {}};
  fit::FitResult vf;
  bool fitted = false;
  try {
    vf = fit::fit_curve("voigt", curve, init, bounds);
    fitted = true;
    if (!vf.converged) out.warnings.push_back("Voigt fit did not converge: " + vf.message);
    for (std::size_t j = 0; j < freq.size(); ++j)
      out.at(j, 1) = fit::eval_voigt(freq[j], vf.params[0], vf.params[1], vf.params[2], vf.params[3], vf.params[4]);
  } catch (const SolverError& e) {
    out.warnings.push_back(std::string("Voigt fit failed: ") + e.what());
  }

  const double kappa = p.kappa;
  out.summary.emplace_back("n_ss", sp.n_ss);
  out.summary.emplace_back("sum_rule", sp.sum_rule());
  out.summary.emplace_back("tail_ratio", sp.tail_ratio);
  out.summary.emplace_back("max_negative_clip", sp.max_clip);
  out.summary.emplace_back("fwhm_mhz", width);
  out.summary.emplace_back("kappa_mhz", kappa);
  out.summary.emplace_back("fwhm_over_kappa", width / kappa);
  out.summary.emplace_back("linewidth_guide_mhz", sp.n_ss > 0.0 ? linewidth_estimate(sp.n_ss, kappa).guide : nan);
  for (std::size_t k = 0; k < 5; ++k)
    out.summary.emplace_back("voigt_" + fit::voigt_model().params[k], fitted ? vf.params[k] : nan);
  out.summary.emplace_back("voigt_fwhm_mhz", fitted ? fit::voigt_fwhm_approx(vf.params[1], vf.params[2]) : nan);
  out.summary.emplace_back("voigt_converged", fitted && vf.converged ? 1.0 : 0.0);
  out.summary.emplace_back("cutoff_top_weight", top);
}

/// FWHM of the full-quantum emission line; NaN when the line is not closed on the grid.
inline double full_quantum_fwhm(const SuperOperator& l, const DensityMatrix& ss, double kappa, double tail_tol,
                                double& sum_rule, std::vector<std::string>& warnings, const std::string& label) {
  const auto grid = line_grid(0.0, std::max(10.0 * kappa, 2.0), 400.0, 401, 120);
  SpectrumOptions sopt;
  sopt.tail_tol = tail_tol;
  const Spectrum sp = emission_spectrum(l, ss, grid, sopt);
  for (const auto& w : sp.warnings) warnings.push_back(label + w);
  sum_rule = sp.sum_rule();
  try {
    return fit::fwhm(fit::CurveData::real(grid, sp.psd));
  } catch (const DomainError&) {
    return nan;
  }
}

inline void run_pump_sweep(const RunSpec& s, GridResult& out) {
  const Rows rows = param_rows(s);
  const bool mf = s.solver != Solver::full_quantum;
  const bool fq = uses_full_quantum(s);
  if (mf) out.fields = {"n_pn", "lasing", "lasing_offset", "s_ee", "s_ff", "fwhm_guide", "mf_converged"};
  if (fq)
    for (const char* f : {"n_ss", "fwhm", "sum_rule", "cutoff_top_weight"}) out.fields.emplace_back(f);
  out.allocate();
  const std::size_t fq0 = mf ? 7 : 0;
  const MeanFieldOptions mopt = mean_field_options(s);
  std::vector<std::vector<std::string>> warns(rows.values.size());
  std::vector<double> top(rows.values.size(), 0.0);

  parallel_for(rows.values.size(), s.threads, [&](std::size_t i) {
    const ModelParams q = rows.at(s.params, i);
    if (mf) {
      try {
        const MeanFieldSteady m = mean_field_steady(q, default_seed(), mopt);
        out.at(i, 0) = m.n_pn;
        out.at(i, 1) = m.lasing ? 1.0 : 0.0;
        out.at(i, 2) = m.lasing_offset_mhz;
        out.at(i, 3) = m.state.s_ee;
        out.at(i, 4) = m.state.s_ff;
        out.at(i, 5) = m.lasing ? linewidth_estimate(m.n_pn, q.kappa).guide : nan;
        out.at(i, 6) = 1.0;
      } catch (const SolverError& e) {
        out.at(i, 6) = 0.0;
        warns[i].push_back(rows.label(i) + "mean field: " + e.what());
      }
    }
    if (fq) {
      const SuperOperator l = liouvillian(q);
      const DensityMatrix ss = steady_state(l, steady_options());
      audit_state(ss, rows.label(i), warns[i], top[i]);
      const double n = expectation(ss, number_op(HilbertSpace(q.fock_cutoff))).real();
      double sum_rule = nan;
      const double w = full_quantum_fwhm(l, ss, q.kappa, s.spectrum_tail_tol, sum_rule, warns[i], rows.label(i));
      out.at(i, fq0 + 0) = n;
      out.at(i, fq0 + 1) = w;
      out.at(i, fq0 + 2) = sum_rule;
      out.at(i, fq0 + 3) = cutoff_check(ss, cutoff_tol).top_weight;
    }
  });
  collect(out, warns);

  if (mf) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.values.size(); ++i)
      if (!(out.at(best, 0) >= out.at(i, 0))) best = i;
    out.summary.emplace_back("mf_max_n_pn", out.at(best, 0));
    out.summary.emplace_back("mf_" + rows.name + "_at_max", rows.values[best]);
    if (rows.name == "omega_pump") {
      PumpSearchOptions po;
      po.mean_field = mopt;
      const auto onset = lasing_onset(s.params, po);
      out.summary.emplace_back("mf_lasing_onset", onset ? *onset : nan);
      out.summary.emplace_back("threshold_estimate", lasing_threshold(s.params));
    }
  }
  if (fq) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.values.size(); ++i)
      if (out.at(i, fq0) > out.at(best, fq0)) best = i;
    out.summary.emplace_back("fq_max_n_ss", out.at(best, fq0));
    out.summary.emplace_back("fq_" + rows.name + "_at_max", rows.values[best]);
    out.summary.emplace_back("max_cutoff_top_weight", *std::max_element(top.begin(), top.end()));
  }
}

inline void run_estimates(const RunSpec& s, GridResult& out) {
  const Rows rows = param_rows(s);
  out.fields = {"n_pn_max",         "n_pn_max_purcell", "kappa_purcell",          "omega_threshold",
                "omega_optimal",    "omega_optimal_purcell", "fwhm_guide_khz", "fwhm_schawlow_townes_khz",
                "fwhm_guide_at_reference_khz", "narrowing_at_reference"};
  out.allocate();
  for (std::size_t i = 0; i < rows.values.size(); ++i) {
    const ModelParams q = rows.at(s.params, i);
    const LasingEstimates bare = lasing_estimates(q, false);
    const LasingEstimates purc = lasing_estimates(q, true);
    const Linewidth ref = linewidth_estimate(device::max_phonon_number, q.kappa);
    const double row[] = {bare.n_pn_max,      purc.n_pn_max,          bare.kappa_purcell,     bare.omega_threshold,
                          bare.omega_optimal, purc.omega_optimal,     bare.fwhm_estimate_khz, bare.fwhm_schawlow_townes_khz,
                          1e3 * ref.guide,    q.kappa / ref.guide};
    for (std::size_t f = 0; f < out.fields.size(); ++f) out.at(i, f) = row[f];
  }
  out.summary.emplace_back("reference_n_pn", device::max_phonon_number);
  out.summary.emplace_back("reference_optimal_pump_numeric", device::optimal_pump_numeric);
  out.summary.emplace_back("reference_optimal_pump_measured", device::optimal_pump_measured);
}

inline std::vector<std::pair<std::string, double>> tolerances(const RunSpec& s) {
  std::vector<std::pair<std::string, double>> t;
  if (uses_full_quantum(s)) {
    const SteadyStateOptions ss;
    const EvolveOptions ev;
    t.emplace_back("steady_residual_tol", ss.residual_tol);
    t.emplace_back("steady_uniqueness_tol", ss.uniqueness_tol);
    t.emplace_back("evolve_rel_tol", ev.rel_tol);
    t.emplace_back("evolve_abs_tol", ev.abs_tol);
    t.emplace_back("cutoff_top_weight_tol", cutoff_tol);
    if (s.experiment == Experiment::rabi_map || s.experiment == Experiment::hotspot_map ||
        s.experiment == Experiment::gain_profile) {
      t.emplace_back("probe_amplitude", s.probe_amplitude);
      t.emplace_back("probe_linearity_tol", ProbeOptions{}.linearity_tol);
    } else {
      t.emplace_back("spectrum_tail_tol", s.spectrum_tail_tol);
    }
  }
  if (s.solver == Solver::semiclassical || s.solver == Solver::both) {
    const MeanFieldOptions mf;
    t.emplace_back("mean_field_rel_tol", mf.rel_tol);
    t.emplace_back("mean_field_abs_tol", mf.abs_tol);
    t.emplace_back("mean_field_residual_tol", mf.residual_tol);
  }
  return t;
}

}  // namespace detail

/// Runs the experiment a spec describes. Independent rows of the grid go to
/// a pool of spec.threads workers; results land in fixed slots, so the output
/// does not depend on the thread count.
inline GridResult run_experiment(const RunSpec& spec) {
  if (auto v = spec_violations(spec); !v.empty()) throw ValidationError(v);
  GridResult out;
  out.experiment = std::string(to_string(spec.experiment));
  out.description = spec.description;
  out.solver_reason = spec.solver_reason;
  for (const auto& a : spec.axes) out.axes.push_back({a.name, detail::axis_unit(a.name), a.values()});

  const Document canonical = to_document(spec);
  out.provenance.spec = canonical;
  out.provenance.params_hash = fnv1a_hex(canonical.dump());
  out.provenance.solver = std::string(to_string(spec.solver));
  out.provenance.preset = spec.preset;
  out.provenance.tolerances = detail::tolerances(spec);

  switch (spec.experiment) {
    case Experiment::rabi_map:
    case Experiment::hotspot_map: detail::run_probe_map(spec, out); break;
    case Experiment::gain_profile: detail::run_gain_profile(spec, out); break;
    case Experiment::emission_map: detail::run_emission_map(spec, out); break;
    case Experiment::emission_spectrum: detail::run_emission_spectrum(spec, out); break;
    case Experiment::pump_sweep: detail::run_pump_sweep(spec, out); break;
    case Experiment::estimates_report: detail::run_estimates(spec, out); break;
  }
  return out;
}

}  // namespace saser::run
