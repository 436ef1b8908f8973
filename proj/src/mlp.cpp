#include "drsurv/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "drsurv/dr_loss.hpp"
#include "drsurv/errors.hpp"
#include "vendor/json.hpp"

namespace drsurv {

OutputActivation activation_for(Target target) {
  switch (target) {
    case Target::CoxBeta:
      return OutputActivation::Linear;
    case Target::SurvivalProb:
      return OutputActivation::Sigmoid;
    case Target::MeanTime:
    case Target::ParametricParams:
      return OutputActivation::Exp;
  }
  return OutputActivation::Linear;
}

Mlp Mlp::init(const std::vector<int>& sizes, OutputActivation out, Rng& rng) {
  if (sizes.size() < 2) throw std::invalid_argument("mlp: need at least input and output layers");
  Mlp net;
  net.output = out;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l], fan_out = sizes[l + 1];
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i)
      for (int j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-s, s);
    Eigen::VectorXd bias(fan_out);
    for (int i = 0; i < fan_out; ++i) bias[i] = rng.uniform(-s, s);
    net.W.push_back(std::move(w));
    net.b.push_back(std::move(bias));
  }
  return net;
}

std::vector<int> Mlp::layer_sizes() const {
  std::vector<int> sizes{input_dim()};
  for (const auto& w : W) sizes.push_back(static_cast<int>(w.rows()));
  return sizes;
}

double Mlp::forward_raw(const Eigen::VectorXd& x) const {
  Eigen::VectorXd h = x;
  for (std::size_t l = 0; l + 1 < W.size(); ++l) h = (W[l] * h + b[l]).cwiseMax(0.0);
  const double raw = (W.back() * h + b.back())[0];
  if (!std::isfinite(raw)) throw NumericError("mlp: non-finite forward output");
  return raw;
}

double Mlp::forward(const Eigen::VectorXd& x) const {
  const double raw = forward_raw(x);
  switch (output) {
    case OutputActivation::Sigmoid:
      return 1.0 / (1.0 + std::exp(-raw));
    case OutputActivation::Linear:
      return raw;
    case OutputActivation::Exp:
      return std::exp(raw);
  }
  return raw;
}

Eigen::VectorXd Mlp::flatten() const {
  Eigen::Index total = 0;
  for (std::size_t l = 0; l < W.size(); ++l) total += W[l].size() + b[l].size();
  Eigen::VectorXd theta(total);
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < W.size(); ++l) {
    for (Eigen::Index i = 0; i < W[l].rows(); ++i)
      for (Eigen::Index j = 0; j < W[l].cols(); ++j) theta[at++] = W[l](i, j);
    for (Eigen::Index i = 0; i < b[l].size(); ++i) theta[at++] = b[l][i];
  }
  return theta;
}

void Mlp::unflatten(const Eigen::VectorXd& theta) {
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < W.size(); ++l) {
    for (Eigen::Index i = 0; i < W[l].rows(); ++i)
      for (Eigen::Index j = 0; j < W[l].cols(); ++j) W[l](i, j) = theta[at++];
    for (Eigen::Index i = 0; i < b[l].size(); ++i) b[l][i] = theta[at++];
  }
  if (at != theta.size()) throw std::invalid_argument("mlp: parameter vector size mismatch");
}

namespace {

bool batch_at_risk(const NnBatch& batch, std::size_t j, double t) {
  if (!batch.entry.empty() && !(batch.entry[j] < t)) return false;
  return batch.time[j] >= t;
}

struct ForwardCache {
  std::vector<Eigen::VectorXd> h;  ///< activations per layer, h[0] = x
  double raw = 0.0;
};

ForwardCache forward_cached(const Mlp& net, const Eigen::VectorXd& x) {
  ForwardCache c;
  c.h.push_back(x);
  for (std::size_t l = 0; l + 1 < net.W.size(); ++l)
    c.h.push_back((net.W[l] * c.h.back() + net.b[l]).cwiseMax(0.0));
  c.raw = (net.W.back() * c.h.back() + net.b.back())[0];
  return c;
}

/// d(activated)/d(raw) and the activated value.
std::pair<double, double> activate(OutputActivation out, double raw) {
  switch (out) {
    case OutputActivation::Sigmoid: {
      const double p = 1.0 / (1.0 + std::exp(-raw));
      return {p, p * (1.0 - p)};
    }
    case OutputActivation::Linear:
      return {raw, 1.0};
    case OutputActivation::Exp: {
      const double e = std::exp(raw);
      return {e, e};
    }
  }
  return {raw, 1.0};
}

/// Pointwise complete-case loss and its derivative in the raw output.
std::pair<double, double> point_loss(Target target, OutputActivation out, double raw, double time,
                                     double t_anchor) {
  const auto [value, dvalue] = activate(out, raw);
  switch (target) {
    case Target::SurvivalProb: {
      const double resid = value - time / t_anchor;
      return {resid * resid, 2.0 * resid * dvalue};
    }
    case Target::MeanTime: {
      const double resid = value - time;
      return {resid * resid, 2.0 * resid * dvalue};
    }
    case Target::ParametricParams:  // exponential rate lambda = value
      return {-std::log(value) + value * time, (-1.0 / value + time) * dvalue};
    case Target::CoxBeta:
      throw std::logic_error("point_loss: CoxBeta is not pointwise");
  }
  return {0.0, 0.0};
}

}  // namespace

double nn_batch_loss(const Mlp& net, const NnBatch& batch) {
  const std::size_t n = batch.x.size();
  if (n == 0) throw std::invalid_argument("nn_batch_loss: empty batch");
  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = net.forward_raw(batch.x[i]);

  double acc = 0.0;
  if (batch.target == Target::CoxBeta) {
    for (std::size_t i = 0; i < n; ++i) {
      if (batch.weight[i] == 0.0) continue;
      double shift = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j)
        if (batch_at_risk(batch, j, batch.time[i])) shift = std::max(shift, raw[j]);
      double s0 = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (batch_at_risk(batch, j, batch.time[i])) s0 += std::exp(raw[j] - shift);
      acc += batch.weight[i] * (-(raw[i] - shift) + std::log(s0));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      if (batch.weight[i] == 0.0) continue;
      acc += batch.weight[i] * point_loss(batch.target, net.output, raw[i], batch.time[i], batch.t_anchor).first;
    }
  }
  return acc / static_cast<double>(n);
}

void nn_batch_gradients(const Mlp& net, const NnBatch& batch, std::vector<Eigen::MatrixXd>& gw,
                        std::vector<Eigen::VectorXd>& gb) {
  const std::size_t n = batch.x.size();
  if (n == 0) throw std::invalid_argument("nn_batch_gradients: empty batch");

  gw.clear();
  gb.clear();
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    gw.emplace_back(Eigen::MatrixXd::Zero(net.W[l].rows(), net.W[l].cols()));
    gb.emplace_back(Eigen::VectorXd::Zero(net.b[l].size()));
  }

  std::vector<ForwardCache> caches(n);
  for (std::size_t i = 0; i < n; ++i) caches[i] = forward_cached(net, batch.x[i]);

  // dL/d(raw_j) for every batch member
  std::vector<double> draw(n, 0.0);
  if (batch.target == Target::CoxBeta) {
    for (std::size_t i = 0; i < n; ++i) {
      if (batch.weight[i] == 0.0) continue;
      double shift = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j)
        if (batch_at_risk(batch, j, batch.time[i])) shift = std::max(shift, caches[j].raw);
      double s0 = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (batch_at_risk(batch, j, batch.time[i])) s0 += std::exp(caches[j].raw - shift);
      draw[i] -= batch.weight[i];
      for (std::size_t j = 0; j < n; ++j)
        if (batch_at_risk(batch, j, batch.time[i]))
          draw[j] += batch.weight[i] * std::exp(caches[j].raw - shift) / s0;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      if (batch.weight[i] == 0.0) continue;
      draw[i] = batch.weight[i] *
                point_loss(batch.target, net.output, caches[i].raw, batch.time[i], batch.t_anchor).second;
    }
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  const std::size_t L = net.W.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (draw[i] == 0.0) continue;
    // output layer
    Eigen::VectorXd delta(1);
    delta[0] = draw[i] * inv_n;
    gw[L - 1].noalias() += delta * caches[i].h[L - 1].transpose();
    gb[L - 1] += delta;
    // hidden layers, ReLU subgradient 0 at 0
    Eigen::VectorXd up = net.W[L - 1].transpose() * delta;
    for (std::size_t l = L - 1; l-- > 0;) {
      Eigen::VectorXd mask = (caches[i].h[l + 1].array() > 0.0).cast<double>();
      Eigen::VectorXd d = up.cwiseProduct(mask);
      gw[l].noalias() += d * caches[i].h[l].transpose();
      gb[l] += d;
      if (l > 0) up = net.W[l].transpose() * d;
    }
  }
}

std::vector<double> complete_case_losses(const Mlp& net, const Dataset& data, Target target, double t_anchor,
                                         const std::function<Eigen::VectorXd(const SubjectRecord&)>& features) {
  const std::size_t n = data.size();
  std::vector<double> losses(n, 0.0);
  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = net.forward_raw(features(data[i]));

  if (target == Target::CoxBeta) {
    auto rec_at_risk = [&](std::size_t j, double t) {
      const auto& rec = data[j];
      if (rec.tau > 0.0 && !(rec.tau < t)) return false;
      return rec.time >= t;
    };
    for (std::size_t i = 0; i < n; ++i) {
      const double t = data[i].time;
      double shift = raw[i];
      for (std::size_t j = 0; j < n; ++j)
        if (rec_at_risk(j, t)) shift = std::max(shift, raw[j]);
      double s0 = std::exp(raw[i] - shift) * (rec_at_risk(i, t) ? 0.0 : 1.0);
      for (std::size_t j = 0; j < n; ++j)
        if (rec_at_risk(j, t)) s0 += std::exp(raw[j] - shift);
      losses[i] = -(raw[i] - shift) + std::log(s0);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i)
      losses[i] = point_loss(target, net.output, raw[i], data[i].time, t_anchor).first;
  }
  return losses;
}

SurvivalCurve NnSurvivalModel::predict_curve(const Eigen::VectorXd& x) const {
  switch (target) {
    case Target::CoxBeta: {
      const double risk = std::exp(net.forward_raw(x));
      std::vector<double> values(baseline.values().size());
      for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::exp(-baseline.values()[i] * risk);
      return SurvivalCurve::step(baseline.knots(), std::move(values));
    }
    case Target::SurvivalProb: {
      // anchored probability: flat at p before the anchor, zero after
      const double p = net.forward(x);
      return SurvivalCurve::step({0.0, t_anchor}, {p, 0.0});
    }
    case Target::MeanTime: {
      const double m = std::max(net.forward(x), 1e-12);
      const auto fam = [m](double t) { return std::exp(-t / m); };
      return SurvivalCurve::parametric(fam, 8.0 * m, m);
    }
    case Target::ParametricParams: {
      const double rate = std::max(net.forward(x), 1e-12);
      const auto fam = [rate](double t) { return std::exp(-rate * t); };
      return SurvivalCurve::parametric(fam, 8.0 / rate, 1.0 / rate);
    }
  }
  throw std::logic_error("predict_curve: unknown target");
}

double NnSurvivalModel::predict_mean(const Eigen::VectorXd& x) const {
  return mean_survival(predict_curve(x)).value;
}

std::string NnSurvivalModel::checkpoint_json(const TrainConfig& cfg) const {
  nlohmann::json j;
  j["layer_sizes"] = net.layer_sizes();
  const Eigen::VectorXd theta = net.flatten();
  j["weights"] = std::vector<double>(theta.data(), theta.data() + theta.size());
  j["config"] = {{"epochs", cfg.epochs},
                 {"batch_size", cfg.batch_size},
                 {"learning_rate", cfg.learning_rate},
                 {"target", static_cast<int>(cfg.target)},
                 {"seed", cfg.seed},
                 {"validation_fraction", cfg.validation_fraction}};
  j["final_train_loss"] = train_loss.empty() ? nullptr : nlohmann::json(train_loss.back());
  j["final_val_loss"] = val_loss.empty() ? nullptr : nlohmann::json(val_loss.back());
  return j.dump(2);
}

NnSurvivalModel train_nn(const Dataset& data, const TrainConfig& cfg, const CensoringModel& g,
                         const std::function<Eigen::VectorXd(const SubjectRecord&)>& features) {
  if (data.empty()) throw std::invalid_argument("train_nn: empty dataset");
  if (cfg.epochs < 1 || cfg.batch_size < 1) throw std::invalid_argument("train_nn: bad config");
  const std::size_t n = data.size();
  Rng rng(cfg.seed);

  // anchor: largest observed event time
  double t_anchor = 0.0;
  bool any_event = false;
  for (const auto& rec : data.records()) {
    if (rec.event == 1) {
      t_anchor = std::max(t_anchor, rec.time);
      any_event = true;
    }
  }
  if (!any_event)
    for (const auto& rec : data.records()) t_anchor = std::max(t_anchor, rec.time);
  if (t_anchor <= 0.0) t_anchor = 1.0;

  // fixed validation split
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  rng.shuffle(idx);
  const auto n_val = static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(n)));
  std::vector<int> val_idx(idx.begin(), idx.begin() + static_cast<long>(std::min(n_val, n - 1)));
  std::vector<int> train_idx(idx.begin() + static_cast<long>(std::min(n_val, n - 1)), idx.end());
  const Dataset train_data = data.subset(train_idx);
  const Dataset val_data = val_idx.empty() ? Dataset() : data.subset(val_idx);

  const double tau = data.tau();
  auto make_batch = [&](const std::vector<int>& rows) {
    NnBatch batch;
    batch.target = cfg.target;
    batch.t_anchor = t_anchor;
    for (int rrow : rows) {
      const auto& rec = data[static_cast<std::size_t>(rrow)];
      batch.x.push_back(features(rec));
      batch.time.push_back(rec.time);
      batch.weight.push_back(rec.complete == 1 ? 1.0 / g.floored_survival(rec.time, rec) : 0.0);
      if (tau > 0.0) batch.entry.push_back(rec.tau);
    }
    return batch;
  };

  std::vector<int> sizes{static_cast<int>(features(data[0]).size())};
  for (int hdim : cfg.hidden) sizes.push_back(hdim);
  sizes.push_back(1);
  Mlp net = Mlp::init(sizes, activation_for(cfg.target), rng);

  // Adam state
  std::vector<Eigen::MatrixXd> mw, vw, gw;
  std::vector<Eigen::VectorXd> mb, vb, gb;
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    mw.emplace_back(Eigen::MatrixXd::Zero(net.W[l].rows(), net.W[l].cols()));
    vw.emplace_back(Eigen::MatrixXd::Zero(net.W[l].rows(), net.W[l].cols()));
    mb.emplace_back(Eigen::VectorXd::Zero(net.b[l].size()));
    vb.emplace_back(Eigen::VectorXd::Zero(net.b[l].size()));
  }

  NnSurvivalModel model;
  model.target = cfg.target;
  model.t_anchor = t_anchor;

  auto dr_split_loss = [&](const Dataset& split) {
    if (split.empty()) return std::numeric_limits<double>::quiet_NaN();
    const auto losses = complete_case_losses(net, split, cfg.target, t_anchor, features);
    try {
      const auto u = fit_conditional_loss(losses, split);
      return dr_loss_ltrc(losses, split, g, u, LtrcForm::Plugin);
    } catch (const NumericError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };

  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(train_idx);
    for (std::size_t at = 0; at < train_idx.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
      const auto end = std::min(at + static_cast<std::size_t>(cfg.batch_size), train_idx.size());
      const std::vector<int> rows(train_idx.begin() + static_cast<long>(at),
                                  train_idx.begin() + static_cast<long>(end));
      const auto batch = make_batch(rows);
      nn_batch_gradients(net, batch, gw, gb);
      ++step;
      const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < net.W.size(); ++l) {
        mw[l] = cfg.adam_beta1 * mw[l] + (1.0 - cfg.adam_beta1) * gw[l];
        vw[l] = cfg.adam_beta2 * vw[l] + (1.0 - cfg.adam_beta2) * gw[l].cwiseProduct(gw[l]);
        net.W[l].array() -=
            cfg.learning_rate * (mw[l] / c1).array() / ((vw[l] / c2).array().sqrt() + cfg.adam_eps);
        mb[l] = cfg.adam_beta1 * mb[l] + (1.0 - cfg.adam_beta1) * gb[l];
        vb[l] = cfg.adam_beta2 * vb[l] + (1.0 - cfg.adam_beta2) * gb[l].cwiseProduct(gb[l]);
        net.b[l].array() -=
            cfg.learning_rate * (mb[l] / c1).array() / ((vb[l] / c2).array().sqrt() + cfg.adam_eps);
        if (!net.W[l].allFinite() || !net.b[l].allFinite())
          throw NumericError("train_nn: diverged at epoch " + std::to_string(epoch + 1));
      }
    }
    model.train_loss.push_back(dr_split_loss(train_data));
    model.val_loss.push_back(dr_split_loss(val_data));
  }

  model.net = net;
  if (cfg.target == Target::CoxBeta) {
    // Breslow baseline over the full input data with the trained risk scores
    const auto design = make_design(
        data, [&](const SubjectRecord& rec) { return Eigen::VectorXd::Constant(1, net.forward_raw(features(rec))); });
    Eigen::VectorXd one(1);
    one[0] = 1.0;
    model.baseline = breslow_baseline(one, design);
  }
  return model;
}

NnSurvivalModel train_nn(const Dataset& data, const TrainConfig& cfg, const CensoringModel& g) {
  return train_nn(data, cfg, g, [](const SubjectRecord& rec) { return rec.x; });
}

}  // namespace drsurv
