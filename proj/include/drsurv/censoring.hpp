#pragma once

#include <vector>

#include "drsurv/cox.hpp"
#include "drsurv/curve.hpp"
#include "drsurv/data.hpp"
#include "drsurv/kaplan_meier.hpp"

namespace drsurv {

enum class CensoringMethod { KaplanMeier, Cox };

/// Estimate of G(t|X) = P(C > t | X), fit by flipping the event indicator.
/// The Cox method conditions on the censoring covariates R; Kaplan-Meier
/// ignores covariates. Queries divided into a loss must use the floored
/// variant, which clips G below eps_floor before any division.
class CensoringModel {
 public:
  CensoringMethod method = CensoringMethod::Cox;
  bool no_censoring = false;  ///< no censored records: G == 1 everywhere
  double eps_floor = 0.05;

  double survival(double t, const SubjectRecord& rec) const;
  double floored_survival(double t, const SubjectRecord& rec) const;

  /// H_G(t|x) = -log G(t|x) on the floored curve.
  double cumulative_hazard(double t, const SubjectRecord& rec) const;

  /// Jump times of G (shared across records for both methods).
  const std::vector<double>& jump_times() const { return jumps_; }

  /// True when the raw G at the record's observed time sits below the floor.
  bool clipped_at(const SubjectRecord& rec) const;

  friend CensoringModel fit_censoring(const Dataset& data, CensoringMethod method, double eps_floor);

 private:
  SurvivalCurve km_curve_{SurvivalCurve::step({}, {})};
  CoxModel cox_;
  std::vector<double> jumps_;
};

/// Fits the censoring survival function on the truncation-adjusted risk sets
/// (delayed entry at tau). With zero censored records returns G == 1 and sets
/// the no_censoring warning.
CensoringModel fit_censoring(const Dataset& data, CensoringMethod method = CensoringMethod::Cox,
                             double eps_floor = 0.05);

struct MartingaleOptions {
  bool use_complete_case = false;  ///< count 1 - complete instead of 1 - event
  bool floored = true;             ///< increments from the floored curve
};

/// Increments of the censoring martingale on the grid:
///   dM(t_k) = dN(t_k) - 1{time >= t_k} * dH_G(t_k),
/// with dN the censoring counting jump at the observed time and dH_G the
/// discrete hazard 1 - G(t_k)/G(t_{k-1}). The grid must contain every jump of
/// G up to the observed time and the observed time itself; with that grid the
/// per-record identity sum_k dM(t_k)/G(t_k) = 1 - delta/G(time) is exact.
std::vector<double> martingale_increments(const CensoringModel& model, const SubjectRecord& rec,
                                          const std::vector<double>& grid, const MartingaleOptions& opts = {});

/// Grid satisfying the preconditions of martingale_increments.
std::vector<double> default_martingale_grid(const CensoringModel& model, const SubjectRecord& rec);

}  // namespace drsurv
