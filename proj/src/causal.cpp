#include "drsurv/causal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <thread>

#include "drsurv/cox.hpp"
#include "drsurv/errors.hpp"
#include "drsurv/hash.hpp"

namespace drsurv {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  Rng rng(seed);
  return rng.derive(salt);
}

double curve_mean(const CoxModel& model, const Eigen::VectorXd& f) {
  return mean_survival(cox_predict_survival(model, f)).value;
}

/// Deterministic parallel map: results land by index regardless of scheduling.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (int i = t; i < n; i += threads) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

// ---- outcome fitters -------------------------------------------------------

namespace {

Eigen::VectorXd append(const Eigen::VectorXd& v, double extra) {
  Eigen::VectorXd out(v.size() + 1);
  out << v, extra;
  return out;
}

struct CoxArmModel : OutcomeModel {
  CoxModel arm0, arm1;
  double mean_given(const SubjectRecord& rec, double pi, int treat) const override {
    return curve_mean(treat == 1 ? arm1 : arm0, append(rec.x, pi));
  }
};

struct CoxFullModel : OutcomeModel {
  CoxModel model;
  double mean_given(const SubjectRecord& rec, double /*pi*/, int treat) const override {
    return curve_mean(model, append(rec.x, treat));
  }
};

struct NnArmModel : OutcomeModel {
  NnSurvivalModel arm0, arm1;
  double mean_given(const SubjectRecord& rec, double pi, int treat) const override {
    return (treat == 1 ? arm1 : arm0).predict_mean(append(rec.x, pi));
  }
};

struct NnFullModel : OutcomeModel {
  NnSurvivalModel model;
  double mean_given(const SubjectRecord& rec, double /*pi*/, int treat) const override {
    return model.predict_mean(append(rec.x, treat));
  }
};

/// Copies a dataset with one value appended to every x vector.
Dataset augment_x(const Dataset& data, const std::vector<double>& extra) {
  std::vector<SubjectRecord> recs(data.records());
  for (std::size_t i = 0; i < recs.size(); ++i) recs[i].x = append(recs[i].x, extra[i]);
  return Dataset(std::move(recs));
}

std::pair<std::vector<int>, std::vector<int>> arm_indices(const Dataset& data) {
  std::vector<int> c, t;
  for (std::size_t i = 0; i < data.size(); ++i) (data[i].treat == 1 ? t : c).push_back(static_cast<int>(i));
  if (c.empty() || t.empty()) throw NumericError("outcome fit: an arm is empty");
  return {c, t};
}

}  // namespace

OutcomeFitter make_cox_arm_fitter() {
  return [](const Dataset& train, const std::vector<double>& pi_train, std::uint64_t) {
    const auto [c_idx, t_idx] = arm_indices(train);
    auto fit_arm = [&](const std::vector<int>& idx, const char* tag) {
      const Dataset arm = train.subset(idx);
      std::vector<double> pi_arm(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) pi_arm[i] = pi_train[static_cast<std::size_t>(idx[i])];
      const Dataset aug = augment_x(arm, pi_arm);
      try {
        return cox_fit(make_design(aug));
      } catch (const std::exception& e) {
        throw NumericError(std::string("cox arm fit (") + tag + "): " + e.what());
      }
    };
    auto model = std::make_unique<CoxArmModel>();
    model->arm0 = fit_arm(c_idx, "control");
    model->arm1 = fit_arm(t_idx, "treated");
    return std::unique_ptr<OutcomeModel>(std::move(model));
  };
}

OutcomeFitter make_cox_full_fitter() {
  return [](const Dataset& train, const std::vector<double>&, std::uint64_t) {
    const auto design = make_design(
        train, [](const SubjectRecord& rec) { return append(rec.x, rec.treat); });
    auto model = std::make_unique<CoxFullModel>();
    model->model = cox_fit(design);
    return std::unique_ptr<OutcomeModel>(std::move(model));
  };
}

OutcomeFitter make_nn_arm_fitter(TrainConfig cfg, CensoringMethod method) {
  return [cfg, method](const Dataset& train, const std::vector<double>& pi_train, std::uint64_t seed) {
    const auto [c_idx, t_idx] = arm_indices(train);
    auto fit_arm = [&](const std::vector<int>& idx, std::uint64_t salt, const char* tag) {
      const Dataset arm = train.subset(idx);
      std::vector<double> pi_arm(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) pi_arm[i] = pi_train[static_cast<std::size_t>(idx[i])];
      const Dataset aug = augment_x(arm, pi_arm);
      TrainConfig arm_cfg = cfg;
      arm_cfg.seed = mix_seed(seed, salt);
      try {
        return train_nn(aug, arm_cfg, fit_censoring(aug, method));
      } catch (const std::exception& e) {
        throw NumericError(std::string("nn arm fit (") + tag + "): " + e.what());
      }
    };
    auto model = std::make_unique<NnArmModel>();
    model->arm0 = fit_arm(c_idx, 11, "control");
    model->arm1 = fit_arm(t_idx, 12, "treated");
    return std::unique_ptr<OutcomeModel>(std::move(model));
  };
}

OutcomeFitter make_nn_full_fitter(TrainConfig cfg, CensoringMethod method) {
  return [cfg, method](const Dataset& train, const std::vector<double>&, std::uint64_t seed) {
    std::vector<double> treat(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) treat[i] = train[i].treat;
    const Dataset aug = augment_x(train, treat);
    TrainConfig full_cfg = cfg;
    full_cfg.seed = seed;
    auto model = std::make_unique<NnFullModel>();
    model->model = train_nn(aug, full_cfg, fit_censoring(aug, method));
    return std::unique_ptr<OutcomeModel>(std::move(model));
  };
}

// ---- Eq.-(1) machinery ------------------------------------------------------

namespace {

std::vector<double> default_outcome(const Dataset& data, const std::vector<double>& mu1,
                                    const std::vector<double>& mu0) {
  std::vector<double> y(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& rec = data[i];
    y[i] = rec.event == 1 ? rec.time : (rec.treat == 1 ? mu1[i] : mu0[i]);
  }
  return y;
}

void check_nuisances(const Dataset& data, const std::vector<double>& pi, const std::vector<double>& mu1,
                     const std::vector<double>& mu0, const std::vector<double>* y) {
  const std::size_t n = data.size();
  if (pi.size() != n || mu1.size() != n || mu0.size() != n || (y && y->size() != n))
    throw std::invalid_argument("aipw: nuisance length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(pi[i] > 0.0 && pi[i] < 1.0)) throw std::invalid_argument("aipw: propensity outside (0,1)");
    if (!std::isfinite(mu1[i]) || !std::isfinite(mu0[i]))
      throw std::invalid_argument("aipw: undefined outcome prediction");
  }
}

}  // namespace

std::vector<double> pseudo_outcomes(const Dataset& data, const std::vector<double>& pi,
                                    const std::vector<double>& mu1, const std::vector<double>& mu0,
                                    const std::vector<double>* y) {
  check_nuisances(data, pi, mu1, mu0, y);
  const std::vector<double> yv = y ? *y : default_outcome(data, mu1, mu0);
  std::vector<double> phi(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double a = data[i].treat;
    const double mu_a = data[i].treat == 1 ? mu1[i] : mu0[i];
    phi[i] = (a - pi[i]) / (pi[i] * (1.0 - pi[i])) * (yv[i] - mu_a) + mu1[i] - mu0[i];
  }
  return phi;
}

double aipw_ate(const Dataset& data, const std::vector<double>& pi, const std::vector<double>& mu1,
                const std::vector<double>& mu0, const std::vector<double>* y) {
  check_nuisances(data, pi, mu1, mu0, y);
  const std::vector<double> yv = y ? *y : default_outcome(data, mu1, mu0);
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& rec = data[i];
    if (rec.treat == 1)
      acc += (yv[i] - mu1[i]) / pi[i];
    else
      acc -= (yv[i] - mu0[i]) / (1.0 - pi[i]);
    acc += mu1[i] - mu0[i];
  }
  return acc / static_cast<double>(data.size());
}

std::array<double, 10> decile_midpoints(std::vector<double> pi) {
  if (pi.empty()) throw std::invalid_argument("decile_midpoints: empty input");
  std::sort(pi.begin(), pi.end());
  std::array<double, 10> mids{};
  const auto n = static_cast<double>(pi.size());
  for (int d = 0; d < 10; ++d) {
    const double h = (0.05 + 0.1 * d) * (n - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, pi.size() - 1);
    mids[static_cast<std::size_t>(d)] = pi[lo] + (h - std::floor(h)) * (pi[hi] - pi[lo]);
  }
  return mids;
}

// ---- point estimators -------------------------------------------------------

PointEstimate mhr_point(const Dataset& data, std::uint64_t /*seed*/) {
  const auto pi_model = fit_propensity(data);
  const auto pi = propensity_values(pi_model, data);

  // one Cox fit: [treatment, propensity]
  const auto design = make_design_indexed(data, [&](const SubjectRecord& rec, std::size_t i) {
    Eigen::VectorXd f(2);
    f << rec.treat, pi[i];
    return f;
  });
  const auto model = cox_fit(design);

  auto contrast = [&](double p) {
    Eigen::VectorXd f1(2), f0(2);
    f1 << 1.0, p;
    f0 << 0.0, p;
    return curve_mean(model, f1) - curve_mean(model, f0);
  };

  PointEstimate est;
  double acc = 0.0;
  for (double p : pi) acc += contrast(p);
  est.ate = acc / static_cast<double>(pi.size());
  est.mid = decile_midpoints(pi);
  for (int d = 0; d < 10; ++d) est.effect[static_cast<std::size_t>(d)] = contrast(est.mid[static_cast<std::size_t>(d)]);
  return est;
}

PointEstimate naive_point(const Dataset& data, const OutcomeFitter& fitter, std::uint64_t seed) {
  const auto pi_model = fit_propensity(data);
  const auto pi = propensity_values(pi_model, data);
  const auto model = fitter(data, pi, mix_seed(seed, 21));

  PointEstimate est;
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    acc += model->mean_given(data[i], pi[i], 1) - model->mean_given(data[i], pi[i], 0);
  est.ate = acc / static_cast<double>(data.size());
  est.mid = decile_midpoints(pi);
  for (int d = 0; d < 10; ++d) {
    const double p = est.mid[static_cast<std::size_t>(d)];
    double hte = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i)
      hte += model->mean_given(data[i], p, 1) - model->mean_given(data[i], p, 0);
    est.effect[static_cast<std::size_t>(d)] = hte / static_cast<double>(data.size());
  }
  return est;
}

PointEstimate dr_point(const Dataset& data, const OutcomeFitter& fitter, const EstimatorOptions& opts,
                       std::uint64_t seed) {
  if (data.size() < 30) throw std::invalid_argument("dr_point: need at least 30 records");

  // fold, refolding on single-class folds
  std::vector<Dataset> folds;
  std::uint64_t fold_seed = mix_seed(seed, 31);
  for (int attempt = 0;; ++attempt) {
    if (attempt == 5) throw NumericError("dr_point: could not produce two-class folds in 5 attempts");
    folds = split_k(data, 3, fold_seed);
    const bool ok = std::all_of(folds.begin(), folds.end(), [](const Dataset& f) {
      int n1 = 0;
      for (const auto& rec : f.records()) n1 += rec.treat;
      return n1 > 0 && n1 < static_cast<int>(f.size());
    });
    if (ok) break;
    fold_seed = mix_seed(fold_seed, 97);
  }

  // per-fold nuisances, shared by every rotation that uses the fold
  std::array<PropensityModel, 3> pi_models;
  std::array<std::unique_ptr<OutcomeModel>, 3> mu_models;
  for (int f = 0; f < 3; ++f) {
    pi_models[static_cast<std::size_t>(f)] = fit_propensity(folds[static_cast<std::size_t>(f)]);
    const auto pi_f =
        propensity_values(pi_models[static_cast<std::size_t>(f)], folds[static_cast<std::size_t>(f)]);
    mu_models[static_cast<std::size_t>(f)] =
        fitter(folds[static_cast<std::size_t>(f)], pi_f, mix_seed(seed, 41 + static_cast<std::uint64_t>(f)));
  }

  // reporting grid from the full-sample propensity fit
  PointEstimate est;
  est.mid = decile_midpoints(propensity_values(fit_propensity(data), data));

  double ate_acc = 0.0;
  std::array<double, 10> effect_acc{};
  int rotations = 0;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      if (b == a) continue;
      const int c = 3 - a - b;
      const auto& pi_m = pi_models[static_cast<std::size_t>(a)];
      const auto& mu_m = *mu_models[static_cast<std::size_t>(b)];
      const Dataset& eval = folds[static_cast<std::size_t>(c)];

      std::vector<double> pi(eval.size()), mu1(eval.size()), mu0(eval.size());
      for (std::size_t i = 0; i < eval.size(); ++i) {
        pi[i] = pi_m.predict(eval[i].z);
        mu1[i] = mu_m.mean_given(eval[i], pi[i], 1);
        mu0[i] = mu_m.mean_given(eval[i], pi[i], 0);
      }
      const auto phi = pseudo_outcomes(eval, pi, mu1, mu0);
      const double rot_ate =
          std::accumulate(phi.begin(), phi.end(), 0.0) / static_cast<double>(phi.size());
      ate_acc += rot_ate;

      if (opts.cate == CateRegression::LinearPi) {
        // least squares of phi on [1, pi]
        double spi = 0, sphi = 0, spp = 0, spphi = 0;
        const auto n = static_cast<double>(phi.size());
        for (std::size_t i = 0; i < phi.size(); ++i) {
          spi += pi[i];
          sphi += phi[i];
          spp += pi[i] * pi[i];
          spphi += pi[i] * phi[i];
        }
        const double var = spp - spi * spi / n;
        const double slope = var > 1e-12 ? (spphi - spi * sphi / n) / var : 0.0;
        const double icept = (sphi - slope * spi) / n;
        for (int d = 0; d < 10; ++d)
          effect_acc[static_cast<std::size_t>(d)] += icept + slope * est.mid[static_cast<std::size_t>(d)];
      } else {
        std::array<double, 10> sums{};
        std::array<int, 10> counts{};
        std::vector<double> sorted_pi = pi;
        std::sort(sorted_pi.begin(), sorted_pi.end());
        for (std::size_t i = 0; i < phi.size(); ++i) {
          const auto rank = static_cast<std::size_t>(
              std::lower_bound(sorted_pi.begin(), sorted_pi.end(), pi[i]) - sorted_pi.begin());
          auto d = static_cast<int>(10 * rank / sorted_pi.size());
          d = std::min(d, 9);
          sums[static_cast<std::size_t>(d)] += phi[i];
          ++counts[static_cast<std::size_t>(d)];
        }
        for (int d = 0; d < 10; ++d)
          effect_acc[static_cast<std::size_t>(d)] +=
              counts[static_cast<std::size_t>(d)] > 0
                  ? sums[static_cast<std::size_t>(d)] / counts[static_cast<std::size_t>(d)]
                  : rot_ate;
      }
      ++rotations;
    }
  }

  est.ate = ate_acc / rotations;
  for (int d = 0; d < 10; ++d) est.effect[static_cast<std::size_t>(d)] = effect_acc[static_cast<std::size_t>(d)] / rotations;
  return est;
}

// ---- bootstrap orchestration -------------------------------------------------

namespace {

EffectReport run_with_bootstrap(const std::string& tag, const Dataset& data,
                                const std::function<PointEstimate(const Dataset&, std::uint64_t)>& point,
                                const EstimatorOptions& opts) {
  EffectReport report;
  report.estimator = tag;
  report.seed = opts.seed;
  report.n_boot = opts.n_boot;
  report.dataset_hash = hash_hex(data.hash());

  const PointEstimate full = point(data, mix_seed(opts.seed, 1));
  report.ate = full.ate;
  report.decile_mid = full.mid;
  report.decile_effect = full.effect;

  if (opts.n_boot <= 0) return report;

  std::vector<std::optional<PointEstimate>> reps(static_cast<std::size_t>(opts.n_boot));
  parallel_for(opts.n_boot, opts.threads, [&](int r) {
    const std::uint64_t rep_seed = mix_seed(opts.seed, 1000 + static_cast<std::uint64_t>(r));
    Rng rng(rep_seed);
    const Dataset sample = data.resample(rng);
    try {
      reps[static_cast<std::size_t>(r)] = point(sample, mix_seed(rep_seed, 7));
    } catch (const std::exception&) {
      reps[static_cast<std::size_t>(r)] = std::nullopt;
    }
  });

  int ok = 0;
  for (const auto& rep : reps) ok += rep.has_value();
  if (ok < static_cast<int>(0.8 * opts.n_boot))
    throw NumericError("bootstrap: " + std::to_string(opts.n_boot - ok) + " of " +
                       std::to_string(opts.n_boot) + " replicates failed");

  auto sd_of = [&](const std::function<double(const PointEstimate&)>& pick) {
    double mean = 0.0;
    for (const auto& rep : reps)
      if (rep) mean += pick(*rep);
    mean /= ok;
    double ss = 0.0;
    for (const auto& rep : reps)
      if (rep) ss += (pick(*rep) - mean) * (pick(*rep) - mean);
    return ok > 1 ? std::sqrt(ss / (ok - 1)) : 0.0;
  };

  report.ate_sd = sd_of([](const PointEstimate& e) { return e.ate; });
  for (int d = 0; d < 10; ++d)
    report.decile_sd[static_cast<std::size_t>(d)] =
        sd_of([d](const PointEstimate& e) { return e.effect[static_cast<std::size_t>(d)]; });
  return report;
}

}  // namespace

EffectReport mhr_estimate(const Dataset& data, const EstimatorOptions& opts) {
  return run_with_bootstrap("mhr", data, [](const Dataset& d, std::uint64_t s) { return mhr_point(d, s); },
                            opts);
}

EffectReport naive_plugin_effect(const Dataset& data, const OutcomeFitter& fitter, const std::string& tag,
                                 const EstimatorOptions& opts) {
  return run_with_bootstrap(
      tag, data, [&fitter](const Dataset& d, std::uint64_t s) { return naive_point(d, fitter, s); }, opts);
}

EffectReport dr_cate_crossfit(const Dataset& data, const OutcomeFitter& fitter, const std::string& tag,
                              const EstimatorOptions& opts) {
  return run_with_bootstrap(
      tag, data,
      [&fitter, &opts](const Dataset& d, std::uint64_t s) { return dr_point(d, fitter, opts, s); }, opts);
}

double bootstrap_sd(const std::function<double(const Dataset&, std::uint64_t)>& pipeline, const Dataset& data,
                    int n_boot, std::uint64_t seed) {
  if (n_boot <= 0) throw std::invalid_argument("bootstrap_sd: n_boot must be positive");
  std::vector<std::optional<double>> reps(static_cast<std::size_t>(n_boot));
  parallel_for(n_boot, 0, [&](int r) {
    const std::uint64_t rep_seed = mix_seed(seed, 1000 + static_cast<std::uint64_t>(r));
    Rng rng(rep_seed);
    const Dataset sample = data.resample(rng);
    try {
      reps[static_cast<std::size_t>(r)] = pipeline(sample, mix_seed(rep_seed, 7));
    } catch (const std::exception&) {
      reps[static_cast<std::size_t>(r)] = std::nullopt;
    }
  });
  int ok = 0;
  double mean = 0.0;
  for (const auto& rep : reps)
    if (rep) {
      ++ok;
      mean += *rep;
    }
  if (ok < static_cast<int>(0.8 * n_boot))
    throw NumericError("bootstrap_sd: " + std::to_string(n_boot - ok) + " of " + std::to_string(n_boot) +
                       " replicates failed");
  mean /= ok;
  double ss = 0.0;
  for (const auto& rep : reps)
    if (rep) ss += (*rep - mean) * (*rep - mean);
  return ok > 1 ? std::sqrt(ss / (ok - 1)) : 0.0;
}

}  // namespace drsurv
