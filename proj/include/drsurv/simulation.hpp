#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "drsurv/data.hpp"

namespace drsurv {

/// Treatment assignment over (Z1, Z2) ~ U(0,1)^2. Or/And threshold at
/// 1/sqrt(2); Logistic draws A ~ Bernoulli(expit(1.5 (Z1 + Z2 - 1))), a
/// smooth rule with strict positivity used by the oracle DGP variants.
enum class TreatmentRule { Or, And, Logistic };

/// Interpretation of censoring_scale: Mean draws C ~ Exp(mean = scale),
/// Rate draws C ~ Exp(rate = scale).
enum class CensoringScale { Mean, Rate };

struct SimConfig {
  int n = 500;
  int p = 10;                     ///< survival covariates, uniform integers 1..100
  TreatmentRule rule = TreatmentRule::Or;
  double treated_mean = 2.0;      ///< exponential failure mean under treatment
  double control_mean = 1.0;
  bool heterogeneous = false;     ///< treated mean becomes 1 + Z1
  double keep_quantile = 0.95;    ///< fraction of failures retained; the rest
                                  ///< fall before tau and are removed (1 = off)
  double censoring_scale = 1.5;   ///< 0 disables censoring
  CensoringScale censoring_mode = CensoringScale::Mean;
  std::uint64_t seed = 1;
};

/// Ground truth retained alongside a simulated dataset.
struct TruthRecord {
  double true_ate = 0.0;
  double treated_mean = 0.0;
  double control_mean = 0.0;
  double tau = 0.0;
  int n_drawn = 0;
  int n_treated = 0;    ///< in the delivered dataset
  int n_control = 0;
  int n_truncated = 0;  ///< rows removed by left truncation
  int n_censored = 0;

  std::string to_json() const;
};

/// Draws the synthetic LTRC dataset: covariates, rule-based treatment,
/// exponential failure times, left truncation at the empirical quantile of
/// the marginal failure time (rows failing before tau are deleted), then
/// independent exponential censoring.
std::pair<Dataset, TruthRecord> generate(const SimConfig& config);

enum class VariantKind { NullEffect, NoCensoring, HeavyCensoring, Heterogeneous };

/// Oracle DGPs for property tests. All variants use the Logistic rule so the
/// true propensity is smooth and bounded away from 0 and 1.
std::pair<Dataset, TruthRecord> generate_variant(VariantKind kind, std::uint64_t seed);

/// True P(A = 1 | z) under TreatmentRule::Logistic.
double logistic_rule_propensity(const Eigen::VectorXd& z);

}  // namespace drsurv
