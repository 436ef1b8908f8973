#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace drsurv {

/// Mean survival time together with a flag raised when the curve still
/// carries mass past its last knot (or horizon) and no analytic tail exists;
/// the reported value is then the integral up to that point only.
struct MeanResult {
  double value = 0.0;
  bool truncated = false;
};

/// Nonincreasing survival function S(t) on t >= 0. Two representations:
/// a right-continuous step function (value held on [knot_i, knot_{i+1})),
/// or a parametric callable with an evaluation horizon and, when known,
/// an analytic mean.
class SurvivalCurve {
 public:
  static SurvivalCurve step(std::vector<double> knots, std::vector<double> values, double s0 = 1.0);
  static SurvivalCurve parametric(std::function<double(double)> fn, double t_max,
                                  std::optional<double> analytic_mean = std::nullopt);

  double operator()(double t) const;

  bool is_step() const { return !fn_; }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  double initial_value() const { return s0_; }
  double t_max() const { return t_max_; }
  const std::optional<double>& analytic_mean() const { return analytic_mean_; }

  /// Two-column CSV (time, survival); step curves knot-exact, parametric
  /// curves sampled on a uniform grid.
  std::string to_csv() const;

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  double s0_ = 1.0;
  double t_max_ = 0.0;
  std::function<double(double)> fn_;
  std::optional<double> analytic_mean_;
};

/// Nondecreasing cumulative hazard H(t), H(0) = 0 absent left truncation.
class CumulativeHazard {
 public:
  static CumulativeHazard step(std::vector<double> knots, std::vector<double> values, double h0 = 0.0);
  static CumulativeHazard parametric(std::function<double(double)> fn, double t_max);

  double operator()(double t) const;

  bool is_step() const { return !fn_; }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  double initial_value() const { return h0_; }
  double t_max() const { return t_max_; }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  double h0_ = 0.0;
  double t_max_ = 0.0;
  std::function<double(double)> fn_;
};

/// S(t) = exp(-H(t)).
SurvivalCurve survival_from_cumhaz(const CumulativeHazard& h);

/// H(t) = -log S(t); +infinity past the last strictly positive knot.
CumulativeHazard hazard_from_survival(const SurvivalCurve& s);

/// E[T] = integral of S. Step curves integrate knot-to-knot exactly;
/// parametric curves use the analytic mean when present, otherwise adaptive
/// quadrature to t_max. tail_threshold controls the truncated-mean flag.
MeanResult mean_survival(const SurvivalCurve& s, double tail_threshold = 0.05);

/// Restricted mean survival time, integral of S over [0, horizon].
double rmst(const SurvivalCurve& s, double horizon);

/// Adaptive Simpson quadrature (shared with the parametric module/tests).
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-10);

}  // namespace drsurv
