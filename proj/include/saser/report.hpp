#pragma once

#include <optional>
#include <string>
#include <vector>

#include "saser/params.hpp"
#include "saser/semiclassical.hpp"

namespace saser {

struct ParamReport {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;
  bool inversion_capable = false;  ///< Γ_fe > Γ_eg and Γ_fe > Γ_fg
  bool fe_dominates_fg = false;    ///< Γ_fe ≥ 10·Γ_fg
  std::optional<double> n_pn_estimate;

  bool ok() const { return violations.empty(); }
};

/// Report-only check of a parameter set. Never throws.
inline ParamReport validate_params(const ModelParams& p) {
  ParamReport r;
  r.violations = param_violations(p);
  r.inversion_capable = p.gamma_fe > p.gamma_eg && p.gamma_fe > p.gamma_fg;
  r.fe_dominates_fg = p.gamma_fe >= 10.0 * p.gamma_fg;
  if (!r.inversion_capable) r.warnings.push_back("no population inversion possible (needs gamma_fe > gamma_eg, gamma_fg)");
  else if (!r.fe_dominates_fg) r.warnings.push_back("gamma_fe is not much larger than gamma_fg; inversion will be weak");
  if (r.ok() && p.gamma_fe > p.gamma_eg) {
    try {
      r.n_pn_estimate = phonon_number_estimate(p, /*apply_purcell=*/false);
      if (p.fock_cutoff < 3.0 * *r.n_pn_estimate)
        r.warnings.push_back("fock_cutoff " + std::to_string(p.fock_cutoff) + " is below 3x the estimated phonon number " +
                             std::to_string(*r.n_pn_estimate));
    } catch (const Error&) {
    }
  }
  return r;
}

}  // namespace saser
