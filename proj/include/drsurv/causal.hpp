#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "drsurv/data.hpp"
#include "drsurv/mlp.hpp"
#include "drsurv/propensity.hpp"
#include "drsurv/report.hpp"

namespace drsurv {

/// A fitted outcome model: predicted mean survival time with the treatment
/// (and, for models that include it as a feature, the propensity) overridden.
struct OutcomeModel {
  virtual ~OutcomeModel() = default;
  virtual double mean_given(const SubjectRecord& rec, double pi, int treat) const = 0;
};

/// Fits an OutcomeModel on a training split. pi_train carries the fitted
/// propensity for each training row (arm-split fitters feed it in as a
/// covariate; full-data fitters ignore it).
using OutcomeFitter = std::function<std::unique_ptr<OutcomeModel>(
    const Dataset& train, const std::vector<double>& pi_train, std::uint64_t seed)>;

/// Arm-split Cox models on [x, propensity] (naive plug-in style).
OutcomeFitter make_cox_arm_fitter();
/// One Cox model on [x, treatment] (doubly robust style).
OutcomeFitter make_cox_full_fitter();
/// Arm-split networks on [x, propensity] trained against the DR loss.
OutcomeFitter make_nn_arm_fitter(TrainConfig cfg, CensoringMethod method);
/// One network on [x, treatment] trained against the DR loss.
OutcomeFitter make_nn_full_fitter(TrainConfig cfg, CensoringMethod method);

/// Per-record pseudo-outcome (A - pi)/(pi(1-pi)) (Y - mu_A) + mu1 - mu0.
/// When y is absent it defaults to the observed time for events and the
/// model prediction mu_A for censored records (zero residual).
std::vector<double> pseudo_outcomes(const Dataset& data, const std::vector<double>& pi,
                                    const std::vector<double>& mu1, const std::vector<double>& mu0,
                                    const std::vector<double>* y = nullptr);

/// The efficient estimator: mean of A/pi (Y - mu1) - (1-A)/(1-pi) (Y - mu0)
/// + mu1 - mu0. Algebraically the mean pseudo-outcome.
double aipw_ate(const Dataset& data, const std::vector<double>& pi, const std::vector<double>& mu1,
                const std::vector<double>& mu0, const std::vector<double>* y = nullptr);

/// Empirical 5%, 15%, ..., 95% quantiles.
std::array<double, 10> decile_midpoints(std::vector<double> pi);

/// CATE regression family for the cross-fitted estimator. LinearPi fits the
/// pseudo-outcomes linearly in the propensity and reads the line off at the
/// decile midpoints; DecileBins takes raw within-decile means.
enum class CateRegression { LinearPi, DecileBins };

struct EstimatorOptions {
  int n_boot = 100;
  std::uint64_t seed = 1;
  CateRegression cate = CateRegression::LinearPi;
  CensoringMethod censoring = CensoringMethod::Cox;
  int threads = 0;  ///< 0 = hardware concurrency
};

/// Point estimate of one estimator run (no bootstrap).
struct PointEstimate {
  double ate = 0.0;
  std::array<double, 10> mid{};
  std::array<double, 10> effect{};
};

PointEstimate mhr_point(const Dataset& data, std::uint64_t seed);
PointEstimate naive_point(const Dataset& data, const OutcomeFitter& fitter, std::uint64_t seed);
PointEstimate dr_point(const Dataset& data, const OutcomeFitter& fitter, const EstimatorOptions& opts,
                       std::uint64_t seed);

/// Marginal-hazard-ratio baseline: one Cox fit on [treatment, propensity],
/// ATE and decile HTEs from mean-survival contrasts on the shared baseline.
EffectReport mhr_estimate(const Dataset& data, const EstimatorOptions& opts);

/// Arm-specific fits, counterfactual predictions for everyone, mean ITE.
EffectReport naive_plugin_effect(const Dataset& data, const OutcomeFitter& fitter, const std::string& tag,
                                 const EstimatorOptions& opts);

/// Three folds, nuisances cross-fit, pseudo-outcome regression on the
/// propensity, averaged over every ordered fold rotation.
EffectReport dr_cate_crossfit(const Dataset& data, const OutcomeFitter& fitter, const std::string& tag,
                              const EstimatorOptions& opts);

/// SD of a scalar pipeline over record-level bootstrap resamples; replicates
/// run in parallel, each with a derived seed, and failures past 20% abort.
double bootstrap_sd(const std::function<double(const Dataset&, std::uint64_t)>& pipeline, const Dataset& data,
                    int n_boot, std::uint64_t seed);

}  // namespace drsurv
