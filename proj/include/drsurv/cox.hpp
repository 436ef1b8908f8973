#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "drsurv/curve.hpp"
#include "drsurv/data.hpp"

namespace drsurv {

/// Design-matrix view of a survival sample. `entry` is empty when there is
/// no delayed entry; otherwise subject i is at risk only on (entry[i], time[i]].
struct SurvivalDesign {
  Eigen::MatrixXd X;
  std::vector<double> time;
  std::vector<int> event;
  std::vector<double> entry;
  std::vector<int> source_rows;    ///< dataset rows kept (after at-risk exclusion)
  int excluded_not_at_risk = 0;    ///< rows dropped because time <= entry
};

/// Assembles a design from a dataset with the given feature map. Under left
/// truncation (tau > 0) subjects enter the risk set at tau; rows observed at
/// or before tau are excluded (they are never at risk). flip_event swaps the
/// roles of events and censorings (censoring models).
SurvivalDesign make_design(const Dataset& data,
                           const std::function<Eigen::VectorXd(const SubjectRecord&)>& features,
                           bool flip_event = false);

/// Feature map receiving the record's row index as well.
SurvivalDesign make_design_indexed(
    const Dataset& data, const std::function<Eigen::VectorXd(const SubjectRecord&, std::size_t)>& features,
    bool flip_event = false);

/// Convenience feature map: the record's survival covariates x.
SurvivalDesign make_design(const Dataset& data);

struct CoxOptions {
  int max_iter = 100;
  double grad_tol = 1e-8;
};

struct CoxModel {
  Eigen::VectorXd beta;
  CumulativeHazard baseline{CumulativeHazard::step({}, {})};
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  bool separation_warning = false;       ///< ||beta|| ran past 50
  std::vector<int> dropped_columns;      ///< constant columns removed (beta = 0)

  double risk_score(const Eigen::VectorXd& x) const { return std::exp(x.dot(beta)); }
};

/// Negative log partial likelihood (Breslow tie handling) with optional exact
/// analytic gradient and Hessian. Risk-set sums are log-sum-exp shifted.
double cox_partial_nll(const Eigen::VectorXd& beta, const SurvivalDesign& design,
                       Eigen::VectorXd* grad = nullptr, Eigen::MatrixXd* hess = nullptr);

/// Newton iterations with step halving (gradient-descent fallback on a
/// non-descent direction) until the gradient norm drops below grad_tol.
/// Constant columns are dropped with a warning. Attaches the Breslow baseline.
CoxModel cox_fit(const SurvivalDesign& design, const CoxOptions& opts = {});

/// Breslow cumulative baseline hazard: increments d_j over risk-score sums.
CumulativeHazard breslow_baseline(const Eigen::VectorXd& beta, const SurvivalDesign& design);

/// S(t|x) = exp(-H0(t))^risk_score(x).
SurvivalCurve cox_predict_survival(const CoxModel& model, const Eigen::VectorXd& x);

}  // namespace drsurv
