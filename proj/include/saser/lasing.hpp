#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "saser/parallel.hpp"
#include "saser/semiclassical.hpp"

namespace saser {

struct PumpPoint {
  double omega_mhz = 0.0;
  double n_pn = 0.0;
  double lasing_offset_mhz = 0.0;
  double s_ee = 0.0, s_ff = 0.0;
  bool lasing = false;
  bool converged = true;
  double residual = 0.0;
};

/// Mean-field steady state for each pump amplitude, seeded with default_seed().
inline std::vector<PumpPoint> pump_sweep(const ModelParams& p, const std::vector<double>& omegas_mhz,
                                         const MeanFieldOptions& mf = {}, unsigned threads = 1) {
  std::vector<PumpPoint> out(omegas_mhz.size());
  parallel_for(omegas_mhz.size(), threads, [&](std::size_t i) {
    ModelParams q = p;
    q.omega_pump = omegas_mhz[i];
    PumpPoint& pt = out[i];
    pt.omega_mhz = q.omega_pump;
    try {
      const MeanFieldSteady ss = mean_field_steady(q, default_seed(), mf);
      pt.n_pn = ss.n_pn;
      pt.lasing = ss.lasing;
      pt.lasing_offset_mhz = ss.lasing_offset_mhz;
      pt.s_ee = ss.state.s_ee;
      pt.s_ff = ss.state.s_ff;
      pt.residual = ss.residual;
    } catch (const SolverError& e) {
      pt.converged = false;
      pt.residual = e.residual();
      pt.n_pn = std::numeric_limits<double>::quiet_NaN();
    }
  });
  return out;
}

inline std::vector<double> log_space(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw ValidationError("log_space: need 0 < lo < hi and n >= 2");
  std::vector<double> v(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  return v;
}

struct PumpSearchOptions {
  double lo_factor = 0.3;   ///< sweep start in units of the bare-atom threshold
  double hi_factor = 30.0;
  std::size_t points = 60;
  double refine_rel_tol = 1e-3;
  unsigned threads = 1;
  MeanFieldOptions mean_field{.apply_purcell = true};
};

/// Lowest pump at which the zero-field state of the mean-field model becomes
/// unstable. Scans the log grid, then bisects on the sign of the growth rate.
inline std::optional<double> lasing_onset(const ModelParams& p, const PumpSearchOptions& opt = {}) {
  require_valid(p);
  const double kappa = effective_kappa(p, opt.mean_field.apply_purcell);
  const double th = lasing_threshold(p);
  const auto grid = log_space(opt.lo_factor * th, opt.hi_factor * th, opt.points);
  auto growth = [&](double om) {
    ModelParams q = p;
    q.omega_pump = om;
    return zero_field_growth_rate(q, kappa);
  };
  if (growth(grid.front()) > 0.0) return grid.front();
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (growth(grid[i]) <= 0.0) continue;
    double lo = grid[i - 1], hi = grid[i];
    while (hi - lo > 1e-7 * hi) {
      const double mid = 0.5 * (lo + hi);
      (growth(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  }
  return std::nullopt;
}

struct OptimalPump {
  bool lasing = false;
  double omega_opt_mhz = 0.0;
  double n_pn_opt = 0.0;
  double omega_heuristic_mhz = 0.0;  ///< 2g√N_pn at the optimum
  double heuristic_mismatch = 0.0;   ///< |Ω/2 − g√N_pn| / (Ω/2)
  double omega_numeric_reference_mhz = device::optimal_pump_numeric;
  double omega_measured_reference_mhz = device::optimal_pump_measured;
  std::vector<PumpPoint> sweep;
  std::string message;
};

/// Pump amplitude maximising the mean-field phonon number: log sweep over
/// [lo_factor, hi_factor]·Ω_th, then golden-section refinement between the
/// neighbours of the best grid point.
inline OptimalPump optimal_pump(const ModelParams& p, const PumpSearchOptions& opt = {}) {
  require_valid(p);
  if (!(p.gamma_fe > p.gamma_eg)) throw DomainError("optimal_pump: no population inversion (gamma_fe <= gamma_eg)");
  OptimalPump out;
  const double th = lasing_threshold(p);
  const auto grid = log_space(opt.lo_factor * th, opt.hi_factor * th, opt.points);
  out.sweep = pump_sweep(p, grid, opt.mean_field, opt.threads);

  std::size_t best = grid.size();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& pt = out.sweep[i];
    if (pt.converged && pt.lasing && (best == grid.size() || pt.n_pn > out.sweep[best].n_pn)) best = i;
  }
  if (best == grid.size()) {
    out.message = "no lasing anywhere in the pump sweep";
    return out;
  }

  auto n_at = [&](double om) {
    ModelParams q = p;
    q.omega_pump = om;
    try {
      return mean_field_steady(q, default_seed(), opt.mean_field).n_pn;
    } catch (const SolverError&) {
      return 0.0;
    }
  };
  double a = grid[best == 0 ? 0 : best - 1];
  double b = grid[std::min(best + 1, grid.size() - 1)];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = n_at(c), fd = n_at(d);
  while (b - a > opt.refine_rel_tol * 0.5 * (a + b)) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = n_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = n_at(d);
    }
  }
  out.omega_opt_mhz = fc > fd ? c : d;
  out.n_pn_opt = std::max(fc, fd);
  if (out.sweep[best].n_pn > out.n_pn_opt) {
    out.omega_opt_mhz = grid[best];
    out.n_pn_opt = out.sweep[best].n_pn;
  }
  out.lasing = out.n_pn_opt > opt.mean_field.lasing_floor;
  out.omega_heuristic_mhz = 2.0 * p.g * std::sqrt(out.n_pn_opt);
  const double half = 0.5 * out.omega_opt_mhz;
  out.heuristic_mismatch = std::abs(half - p.g * std::sqrt(out.n_pn_opt)) / half;
  return out;
}

}  // namespace saser
