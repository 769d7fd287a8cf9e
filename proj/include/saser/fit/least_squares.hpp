#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saser/fit/curve.hpp"
#include "saser/fit/models.hpp"

namespace saser::fit {

/// A fit model: named parameters and a point evaluator. Real models ignore
/// the imaginary part.
struct CurveModel {
  std::string id;
  std::vector<std::string> params;
  bool complex_valued = false;
  std::function<Complex(double x, std::span<const double> theta)> eval;
  /// Parameters held fixed unless the caller frees them.
  std::vector<std::string> fixed_by_default;

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < params.size(); ++i)
      if (params[i] == name) return i;
    throw ValidationError("model '" + id + "' has no parameter '" + name + "'");
  }
};

/// notch_ge: gamma1, gamma2, f0, omega.
inline CurveModel notch_ge_model() {
  return {"notch_ge",
          {"gamma1", "gamma2", "f0", "omega"},
          true,
          [](double x, std::span<const double> t) { return eval_notch_ge(x, t[0], t[1], t[2], t[3]); },
          {}};
}

/// notch_gf in the atom's own rates: Γ1 = Γ_fg, Γ2 = Γ_fe + Γ_fg, ratio Γ_fe/Γ_eg.
/// omega and gamma_eg come from independent measurements and are fixed by default.
inline CurveModel notch_gf_model() {
  return {"notch_gf",
          {"gamma_fg", "gamma_fe", "f0", "omega", "gamma_eg"},
          true,
          [](double x, std::span<const double> t) {
            return eval_notch_gf(x, t[0], t[1] + t[0], t[2], t[3], t[1] / t[4]);
          },
          {"omega", "gamma_eg"}};
}

/// lorentzian: q_i, f0, a.
inline CurveModel lorentzian_model() {
  return {"lorentzian",
          {"q_i", "f0", "a"},
          false,
          [](double x, std::span<const double> t) { return Complex(eval_lorentzian_resonator(x, t[0], t[1], t[2])); },
          {}};
}

/// voigt: center, lorentz_fwhm, gauss_fwhm, amplitude (line area), background.
inline CurveModel voigt_model() {
  return {"voigt",
          {"center", "lorentz_fwhm", "gauss_fwhm", "amplitude", "background"},
          false,
          [](double x, std::span<const double> t) { return Complex(eval_voigt(x, t[0], t[1], t[2], t[3], t[4])); },
          {}};
}

inline CurveModel model_by_id(const std::string& id) {
  if (id == "notch_ge") return notch_ge_model();
  if (id == "notch_gf") return notch_gf_model();
  if (id == "lorentzian") return lorentzian_model();
  if (id == "voigt") return voigt_model();
  throw ValidationError("unknown model '" + id + "' (expected notch_ge, notch_gf, lorentzian or voigt)");
}

struct Bound {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool fixed() const { return lo == hi; }
};

struct FitOptions {
  int max_iterations = 200;
  double xtol = 1e-10;  ///< relative step
  double gtol = 1e-10;  ///< scaled gradient
  double rank_tol = 1e-12;
};

struct FitResult {
  std::string model;
  std::vector<std::string> names;
  std::vector<double> params;
  std::vector<double> stderr_;  ///< 0 for fixed parameters
  std::vector<bool> fixed;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string message;

  double operator[](const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return params[i];
    throw ValidationError("fit result has no parameter '" + name + "'");
  }
};

namespace detail {

/// Stacked residual vector: (Re, Im) per point for complex data, value or
/// |model|² for real data.
inline Eigen::VectorXd residuals(const CurveModel& model, const CurveData& data, std::span<const double> theta) {
  const auto n = static_cast<Eigen::Index>(data.size());
  if (data.is_complex()) {
    Eigen::VectorXd r(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const Complex d = model.eval(data.x[k], theta) - data.yc[k];
      r(2 * i) = d.real();
      r(2 * i + 1) = d.imag();
    }
    return r;
  }
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const Complex m = model.eval(data.x[k], theta);
    // magnitude-only data against a complex model fits |S21|², losing the phase
    const double v = model.complex_valued ? std::norm(m) : m.real();
    r(i) = v - data.y[k];
  }
  return r;
}

}  // namespace detail

/// Bounded Levenberg–Marquardt with Marquardt diagonal scaling and a
/// central-difference Jacobian. Steps are projected onto the box.
inline FitResult fit_curve(const CurveModel& model, const CurveData& data, std::vector<double> init,
                           std::vector<Bound> bounds = {}, const FitOptions& opt = {}) {
  const std::size_t np = model.params.size();
  if (init.size() != np) throw ValidationError("fit_curve: expected " + std::to_string(np) + " initial values");
  if (bounds.empty()) {
    bounds.resize(np);
    for (const auto& name : model.fixed_by_default) {
      const std::size_t k = model.index_of(name);
      bounds[k] = {init[k], init[k]};
    }
  }
  if (bounds.size() != np) throw ValidationError("fit_curve: bounds size mismatch");
  if (data.is_complex() && !model.complex_valued)
    throw ValidationError("fit_curve: complex data given to real model '" + model.id + "'");
  for (std::size_t k = 0; k < np; ++k) {
    if (!(bounds[k].lo <= bounds[k].hi)) throw ValidationError("fit_curve: empty bound for " + model.params[k]);
    if (init[k] < bounds[k].lo || init[k] > bounds[k].hi)
      throw ValidationError("fit_curve: initial " + model.params[k] + " outside its bounds");
  }

  std::vector<std::size_t> free;
  for (std::size_t k = 0; k < np; ++k)
    if (!bounds[k].fixed()) free.push_back(k);
  const auto nf = static_cast<Eigen::Index>(free.size());
  data.validate(free.size() + 2);

  FitResult res;
  res.model = model.id;
  res.names = model.params;
  res.fixed.resize(np);
  for (std::size_t k = 0; k < np; ++k) res.fixed[k] = bounds[k].fixed();

  std::vector<double> theta = init;
  auto clamp = [&](std::vector<double>& t) {
    for (std::size_t k = 0; k < np; ++k) t[k] = std::clamp(t[k], bounds[k].lo, bounds[k].hi);
  };
  auto jacobian = [&](const std::vector<double>& t, Eigen::Index m) {
    Eigen::MatrixXd jac(m, nf);
    for (Eigen::Index c = 0; c < nf; ++c) {
      const std::size_t k = free[static_cast<std::size_t>(c)];
      const double h = 1e-6 * std::max(std::abs(t[k]), 1e-8);
      std::vector<double> tp = t, tm = t;
      // one-sided at an active bound
      tp[k] = std::min(t[k] + h, bounds[k].hi);
      tm[k] = std::max(t[k] - h, bounds[k].lo);
      jac.col(c) = (detail::residuals(model, data, tp) - detail::residuals(model, data, tm)) / (tp[k] - tm[k]);
    }
    return jac;
  };
  auto check_rank = [&](const Eigen::MatrixXd& jac) {
    if (nf == 0) return;
    Eigen::VectorXd norms = jac.colwise().norm();
    for (Eigen::Index c = 0; c < nf; ++c)
      if (!(norms(c) > 0.0))
        throw RankDeficiencyError("fit_curve: residuals do not depend on " + model.params[free[static_cast<std::size_t>(c)]]);
    const Eigen::MatrixXd scaled = jac * norms.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) < opt.rank_tol * s(0))
      throw RankDeficiencyError("fit_curve: Jacobian is rank deficient (condition " +
                                std::to_string(s(0) / s(s.size() - 1)) + ")");
  };

  Eigen::VectorXd r = detail::residuals(model, data, theta);
  const Eigen::Index m = r.size();
  double cost = r.squaredNorm();
  Eigen::MatrixXd jac = jacobian(theta, m);
  check_rank(jac);
  double lambda = 1e-3;

  for (res.iterations = 0; res.iterations < opt.max_iterations;) {
    const Eigen::VectorXd grad = jac.transpose() * r;
    const Eigen::VectorXd col_norm = jac.colwise().norm();
    const double rn = std::sqrt(cost);
    double gscaled = 0.0;
    for (Eigen::Index c = 0; c < nf; ++c)
      if (col_norm(c) > 0.0 && rn > 0.0) gscaled = std::max(gscaled, std::abs(grad(c)) / (col_norm(c) * rn));
    if (rn == 0.0 || gscaled < opt.gtol) {
      res.converged = true;
      res.message = "gradient below tolerance";
      break;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    bool accepted = false;
    double rel_step = 0.0;
    while (lambda < 1e20) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * jtj.diagonal();
      const Eigen::VectorXd delta = a.ldlt().solve(-grad);
      std::vector<double> trial = theta;
      for (Eigen::Index c = 0; c < nf; ++c) trial[free[static_cast<std::size_t>(c)]] += delta(c);
      clamp(trial);
      Eigen::VectorXd rt;
      double ct = std::numeric_limits<double>::infinity();
      try {
        rt = detail::residuals(model, data, trial);
        ct = rt.squaredNorm();
      } catch (const DomainError&) {  // step left the model's domain
      }
      if (std::isfinite(ct) && ct <= cost) {
        // ‖DΔ‖/‖Dθ‖ with D the Jacobian column norms
        double step2 = 0.0, norm2 = 0.0;
        for (Eigen::Index c = 0; c < nf; ++c) {
          const std::size_t k = free[static_cast<std::size_t>(c)];
          step2 += std::pow(col_norm(c) * (trial[k] - theta[k]), 2);
          norm2 += std::pow(col_norm(c) * theta[k], 2);
        }
        rel_step = norm2 > 0.0 ? std::sqrt(step2 / norm2) : std::sqrt(step2);
        theta = std::move(trial);
        r = rt;
        cost = ct;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) {
      res.converged = gscaled < 1e-6;
      res.message = "no further decrease of the residual (scaled gradient " + std::to_string(gscaled) + ")";
      break;
    }
    ++res.iterations;
    jac = jacobian(theta, m);
    if (rel_step < opt.xtol) {
      res.converged = true;
      res.message = "relative step below tolerance";
      break;
    }
  }
  if (!res.converged && res.message.empty())
    res.message = "maximum iterations (" + std::to_string(opt.max_iterations) + ") reached";

  check_rank(jac);
  res.params = theta;
  res.residual_norm = std::sqrt(cost);
  res.stderr_.assign(np, 0.0);
  if (nf > 0 && m > nf) {
    const double s2 = cost / static_cast<double>(m - nf);
    const Eigen::MatrixXd cov = (jac.transpose() * jac).inverse() * s2;
    for (Eigen::Index c = 0; c < nf; ++c) res.stderr_[free[static_cast<std::size_t>(c)]] = std::sqrt(std::max(cov(c, c), 0.0));
  }
  return res;
}

inline FitResult fit_curve(const std::string& model_id, const CurveData& data, std::vector<double> init,
                           std::vector<Bound> bounds = {}, const FitOptions& opt = {}) {
  return fit_curve(model_by_id(model_id), data, std::move(init), std::move(bounds), opt);
}

}  // namespace saser::fit
