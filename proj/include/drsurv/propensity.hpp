#pragma once

#include <Eigen/Core>
#include <vector>

#include "drsurv/data.hpp"

namespace drsurv {

/// Logistic model of treatment on [1, z], predictions clipped away from 0/1.
struct PropensityModel {
  Eigen::VectorXd coef;  ///< intercept first
  double clip_lo = 0.01;
  double clip_hi = 0.99;
  bool separation_warning = false;
  bool converged = false;

  double linear(const Eigen::VectorXd& z) const;
  double predict(const Eigen::VectorXd& z) const;  ///< clipped probability
};

/// Newton-fitted logistic regression of the treatment indicator on the
/// assignment covariates z. Throws on single-class data; near-separation is
/// flagged and handled by clipping.
PropensityModel fit_propensity(const Dataset& data);

/// Clipped predictions for every record.
std::vector<double> propensity_values(const PropensityModel& model, const Dataset& data);

}  // namespace drsurv
