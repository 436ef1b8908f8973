#pragma once

#include <Eigen/Core>
#include <vector>

#include "drsurv/censoring.hpp"
#include "drsurv/data.hpp"

namespace drsurv {

enum class UMode { Linear, Mean };

/// Estimator of U(x, t) = E[loss | observed time >= t, X = x]: a linear
/// regression of the per-record losses on x within the at-risk set, refit at
/// every distinct observed time ({0} joins the grid so t = 0 queries use the
/// full sample). Falls back to the at-risk mean when covariates are absent,
/// requested, or the at-risk set is too small. Predictions are clamped to the
/// observed loss range; queries past the last knot use the last knot.
class ConditionalLossModel {
 public:
  static ConditionalLossModel fit(const std::vector<double>& losses, const Dataset& data,
                                  UMode mode = UMode::Linear);

  double at(const Eigen::VectorXd& x, double t) const;

  const std::vector<double>& knots() const { return knots_; }

 private:
  std::vector<double> knots_;
  std::vector<Eigen::VectorXd> coefs_;  ///< size 1: at-risk mean; size p+1: [intercept, x]
  double lo_ = 0.0, hi_ = 0.0;
};

inline ConditionalLossModel fit_conditional_loss(const std::vector<double>& losses, const Dataset& data,
                                                 UMode mode = UMode::Linear) {
  return ConditionalLossModel::fit(losses, data, mode);
}

struct LossStats {
  int clipped = 0;        ///< records whose raw G fell below the floor
  double ipw_part = 0.0;  ///< weighted complete-case component
  double aug_part = 0.0;  ///< augmentation component
};

/// Inverse-probability-of-censoring weighted loss:
///   (1/n) sum_i event_i * loss_i / G(time_i | x_i).
double ipw_loss(const std::vector<double>& losses, const Dataset& data, const CensoringModel& g,
                LossStats* stats = nullptr);

/// Censoring-robust loss under right censoring only. Direct form: IPW term
/// plus (1 - event/G) * U(x, time). Martingale form: the same augmentation
/// written as sum_k U(x, time) dM(t_k)/G(t_k); the two agree to rounding by
/// the per-record martingale identity.
enum class DrForm { Direct, Martingale };
double dr_loss_censoring(const std::vector<double>& losses, const Dataset& data, const CensoringModel& g,
                         const ConditionalLossModel& u, DrForm form = DrForm::Direct,
                         LossStats* stats = nullptr);

/// LTRC variants: the complete-case indicator replaces the event indicator.
/// Plugin = direct augmentation; Martingale = dM-sum; Expanded = the counting
/// jump and compensator written out separately. All three agree to rounding,
/// and with tau = 0 each reduces to dr_loss_censoring exactly.
enum class LtrcForm { Plugin = 1, Martingale = 2, Expanded = 3 };
double dr_loss_ltrc(const std::vector<double>& losses, const Dataset& data, const CensoringModel& g,
                    const ConditionalLossModel& u, LtrcForm form = LtrcForm::Plugin,
                    LossStats* stats = nullptr);

}  // namespace drsurv
