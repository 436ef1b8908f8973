#include "drsurv/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "drsurv/errors.hpp"
#include "vendor/json.hpp"

namespace drsurv {

namespace {
constexpr double kThreshold = 0.70710678118654752440;  // 1/sqrt(2)
}

double logistic_rule_propensity(const Eigen::VectorXd& z) {
  if (z.size() < 2) throw std::invalid_argument("logistic rule: need two assignment covariates");
  return 1.0 / (1.0 + std::exp(-1.5 * (z[0] + z[1] - 1.0)));
}

std::string TruthRecord::to_json() const {
  nlohmann::json j;
  j["true_ate"] = true_ate;
  j["treated_mean"] = treated_mean;
  j["control_mean"] = control_mean;
  j["tau"] = tau;
  j["n_drawn"] = n_drawn;
  j["n_treated"] = n_treated;
  j["n_control"] = n_control;
  j["n_truncated"] = n_truncated;
  j["n_censored"] = n_censored;
  return j.dump(2);
}

std::pair<Dataset, TruthRecord> generate(const SimConfig& config) {
  if (config.n < 2) throw std::invalid_argument("generate: n too small");
  if (!(config.keep_quantile > 0.0 && config.keep_quantile <= 1.0))
    throw std::invalid_argument("generate: keep_quantile outside (0,1]");
  if (config.censoring_scale < 0.0) throw std::invalid_argument("generate: negative censoring scale");

  Rng rng(config.seed);
  const auto n = static_cast<std::size_t>(config.n);

  std::vector<SubjectRecord> drawn(n);
  std::vector<double> failure(n);
  int n_treated_drawn = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& rec = drawn[i];
    rec.x.resize(config.p);
    for (int j = 0; j < config.p; ++j)
      rec.x[j] = static_cast<double>(rng.uniform_int(1, 100));
    rec.z.resize(2);
    rec.z << rng.uniform(), rng.uniform();
    const double u_assign = rng.uniform();  // consumed under every rule for stream stability
    switch (config.rule) {
      case TreatmentRule::Or:
        rec.treat = (rec.z[0] > kThreshold || rec.z[1] > kThreshold) ? 1 : 0;
        break;
      case TreatmentRule::And:
        rec.treat = (rec.z[0] > kThreshold && rec.z[1] > kThreshold) ? 1 : 0;
        break;
      case TreatmentRule::Logistic:
        rec.treat = u_assign < logistic_rule_propensity(rec.z) ? 1 : 0;
        break;
    }
    n_treated_drawn += rec.treat;
    const double mean = rec.treat == 1
                            ? (config.heterogeneous ? 1.0 + rec.z[0] : config.treated_mean)
                            : config.control_mean;
    failure[i] = rng.exponential(1.0 / mean);
    rec.r = rec.x;
  }
  if (n_treated_drawn == 0 || n_treated_drawn == config.n)
    throw NumericError("generate: empty arm; reseed");

  // left truncation: tau between the order statistics around the drop count,
  // so exactly n - round(keep * n) early failures are removed
  double tau = 0.0;
  const auto n_drop = static_cast<std::size_t>(
      std::llround((1.0 - config.keep_quantile) * static_cast<double>(config.n)));
  if (n_drop > 0) {
    std::vector<double> sorted = failure;
    std::sort(sorted.begin(), sorted.end());
    tau = 0.5 * (sorted[n_drop - 1] + sorted[n_drop]);
  }

  // censoring draws for every row keep the stream independent of tau
  std::vector<double> censor(n);
  for (std::size_t i = 0; i < n; ++i)
    censor[i] = config.censoring_scale == 0.0
                    ? std::numeric_limits<double>::infinity()
                    : rng.exponential(config.censoring_mode == CensoringScale::Mean
                                          ? 1.0 / config.censoring_scale
                                          : config.censoring_scale);

  TruthRecord truth;
  truth.treated_mean = config.heterogeneous ? 1.5 : config.treated_mean;
  truth.control_mean = config.control_mean;
  truth.true_ate = truth.treated_mean - truth.control_mean;
  truth.tau = tau;
  truth.n_drawn = config.n;

  std::vector<SubjectRecord> kept;
  kept.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (failure[i] < tau) {
      ++truth.n_truncated;
      continue;
    }
    auto rec = drawn[i];
    rec.time = std::min(failure[i], censor[i]);
    rec.event = failure[i] < censor[i] ? 1 : 0;
    rec.tau = tau;
    kept.push_back(std::move(rec));
  }
  for (const auto& rec : kept) {
    truth.n_treated += rec.treat;
    truth.n_censored += 1 - rec.event;
  }
  truth.n_control = static_cast<int>(kept.size()) - truth.n_treated;
  if (truth.n_treated == 0 || truth.n_control == 0) throw NumericError("generate: empty arm; reseed");

  return {Dataset(std::move(kept)), truth};
}

std::pair<Dataset, TruthRecord> generate_variant(VariantKind kind, std::uint64_t seed) {
  SimConfig config;
  config.seed = seed;
  config.rule = TreatmentRule::Logistic;
  switch (kind) {
    case VariantKind::NullEffect:
      config.treated_mean = 1.0;
      config.control_mean = 1.0;
      break;
    case VariantKind::NoCensoring:
      config.censoring_scale = 0.0;
      config.keep_quantile = 1.0;
      break;
    case VariantKind::HeavyCensoring:
      config.censoring_scale = 0.5;
      break;
    case VariantKind::Heterogeneous:
      config.heterogeneous = true;
      config.censoring_scale = 0.0;
      config.keep_quantile = 1.0;
      break;
  }
  return generate(config);
}

}  // namespace drsurv
