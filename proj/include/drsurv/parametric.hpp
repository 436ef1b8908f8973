#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "drsurv/curve.hpp"

namespace drsurv {

enum class Family { LogNormal, Exponential, Weibull };

/// Scalar-parameter survival family. Exponential carries a rate (mean 1/rate);
/// Weibull carries (scale, shape) so that Exponential(r) == Weibull(1/r, 1);
/// LogNormal carries (mu, sigma) of log T.
struct ParametricFamily {
  Family tag = Family::Exponential;
  double a = 1.0;  ///< mu | rate | scale
  double b = 1.0;  ///< sigma | unused | shape

  static ParametricFamily log_normal(double mu, double sigma);
  static ParametricFamily exponential(double rate);
  static ParametricFamily weibull(double scale, double shape);
};

/// Standard normal CDF.
double norm_cdf(double x);

/// S(t); 1 at t = 0 for every family.
double survival_at(const ParametricFamily& f, double t);

/// Density f(t), t > 0.
double density_at(const ParametricFamily& f, double t);

/// E[T]: 1/rate, scale * Gamma(1 + 1/shape), exp(mu + sigma^2/2).
double mean_survival_param(const ParametricFamily& f);

/// Negative log-likelihood of an uncensored sample, -sum log f(t_i).
double nll_loss(const ParametricFamily& f, const std::vector<double>& times);

/// Single-observation contribution to nll_loss.
double nll_point(const ParametricFamily& f, double t);

/// Analytic gradient of nll_loss in the family's native parameters
/// (d/d mu, d/d sigma | d/d rate | d/d scale, d/d shape).
Eigen::VectorXd nll_gradient(const ParametricFamily& f, const std::vector<double>& times);

/// Maximum-likelihood fit by quasi-Newton on the NLL in log-transformed
/// parameters; gradient-norm tolerance 1e-8, at most 200 iterations.
ParametricFamily fit_family(Family tag, const std::vector<double>& times);

/// Parametric SurvivalCurve with the analytic mean attached.
SurvivalCurve curve_from(const ParametricFamily& f, double t_max);

std::string family_name(Family tag);

/// JSON report of a fitted family: {"family": tag, "params": [...]}.
std::string family_to_json(const ParametricFamily& f);

}  // namespace drsurv
