#include "drsurv/dr_loss.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "drsurv/errors.hpp"

namespace drsurv {

ConditionalLossModel ConditionalLossModel::fit(const std::vector<double>& losses, const Dataset& data,
                                               UMode mode) {
  const std::size_t n = data.size();
  if (losses.size() != n) throw std::invalid_argument("conditional loss: losses/data length mismatch");
  if (n == 0) throw std::invalid_argument("conditional loss: empty dataset");

  ConditionalLossModel model;
  model.lo_ = *std::min_element(losses.begin(), losses.end());
  model.hi_ = *std::max_element(losses.begin(), losses.end());

  const int p = data.p();
  const bool linear = mode == UMode::Linear && p > 0;
  const Eigen::Index dim = linear ? p + 1 : 1;

  // knot grid: 0 plus the distinct observed times
  std::vector<double> knots{0.0};
  {
    std::vector<double> times = data.times();
    std::sort(times.begin(), times.end());
    for (double t : times)
      if (t > knots.back()) knots.push_back(t);
  }

  // records sorted by time descending; the at-risk normal equations grow as
  // the knot sweeps down, so each refit is an incremental update
  std::vector<int> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return data[static_cast<std::size_t>(a)].time > data[static_cast<std::size_t>(b)].time; });

  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(dim);
  int at_risk = 0;
  std::size_t next = 0;

  std::vector<Eigen::VectorXd> coefs(knots.size());
  for (std::size_t k = knots.size(); k-- > 0;) {
    const double t = knots[k];
    while (next < n && data[static_cast<std::size_t>(order[next])].time >= t) {
      const auto& rec = data[static_cast<std::size_t>(order[next])];
      const double y = losses[static_cast<std::size_t>(order[next])];
      Eigen::VectorXd row(dim);
      row[0] = 1.0;
      if (linear) row.tail(p) = rec.x;
      xtx.noalias() += row * row.transpose();
      xty.noalias() += row * y;
      ++at_risk;
      ++next;
    }
    if (at_risk == 0) throw std::invalid_argument("conditional loss: empty at-risk set");
    if (linear && at_risk >= p + 2) {
      Eigen::MatrixXd reg = xtx;
      reg.diagonal().array() += 1e-10 * (1.0 + xtx.trace() / static_cast<double>(dim));
      coefs[k] = reg.ldlt().solve(xty);
    } else {
      Eigen::VectorXd c(1);
      c[0] = xty[0] / static_cast<double>(at_risk);
      coefs[k] = c;
    }
  }

  model.knots_ = std::move(knots);
  model.coefs_ = std::move(coefs);
  return model;
}

double ConditionalLossModel::at(const Eigen::VectorXd& x, double t) const {
  if (t < 0.0) throw std::invalid_argument("conditional loss: negative time");
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  const std::size_t k = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin() - 1);
  const auto& c = coefs_[k];
  double v;
  if (c.size() == 1) {
    v = c[0];
  } else {
    if (x.size() + 1 != c.size()) throw std::invalid_argument("conditional loss: covariate dimension mismatch");
    v = c[0] + c.tail(c.size() - 1).dot(x);
  }
  return std::clamp(v, lo_, hi_);
}

namespace {

/// Shared evaluator; delta selects event (censoring-only) or complete-case
/// (LTRC) weighting, so the tau = 0 reduction is the same arithmetic.
enum class AugStyle { Direct, MartingaleSum, Expanded };

double dr_loss_eval(const std::vector<double>& losses, const Dataset& data, const CensoringModel& g,
                    const ConditionalLossModel* u, bool complete_case, AugStyle style, LossStats* stats) {
  const std::size_t n = data.size();
  if (losses.size() != n) throw std::invalid_argument("dr loss: losses/data length mismatch");
  if (n == 0) throw std::invalid_argument("dr loss: empty dataset");

  LossStats local;
  double acc = 0.0;
  bool any_weight = false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = data[i];
    const int delta = complete_case ? rec.complete : rec.event;
    const double g_obs = g.floored_survival(rec.time, rec);
    if (g.clipped_at(rec)) ++local.clipped;

    const double w = static_cast<double>(delta) / g_obs;
    if (delta == 1) any_weight = true;
    local.ipw_part += w * losses[i];

    if (u) {
      const double u_i = u->at(rec.x, rec.time);
      double aug = 0.0;
      switch (style) {
        case AugStyle::Direct:
          aug = (1.0 - w) * u_i;
          break;
        case AugStyle::MartingaleSum: {
          const auto grid = default_martingale_grid(g, rec);
          const auto dm = martingale_increments(g, rec, grid, {complete_case, /*floored=*/true});
          double s = 0.0;
          for (std::size_t k = 0; k < grid.size(); ++k) s += dm[k] / g.floored_survival(grid[k], rec);
          aug = u_i * s;
          break;
        }
        case AugStyle::Expanded: {
          // counting jump minus the compensator integral, written out
          double comp = 0.0;
          double g_prev = 1.0;
          for (double t : g.jump_times()) {
            if (t > rec.time) break;
            const double g_t = g.floored_survival(t, rec);
            comp += (1.0 - g_t / g_prev) / g_t;
            g_prev = g_t;
          }
          aug = u_i * ((delta == 0 ? 1.0 / g_obs : 0.0) - comp);
          break;
        }
      }
      local.aug_part += aug;
      acc += w * losses[i] + aug;
    } else {
      acc += w * losses[i];
    }
  }
  if (!any_weight) throw NumericError("dr loss: all complete-case weights are zero");
  local.ipw_part /= static_cast<double>(n);
  local.aug_part /= static_cast<double>(n);
  if (stats) *stats = local;
  return acc / static_cast<double>(n);
}

}  // namespace

double ipw_loss(const std::vector<double>& losses, const Dataset& data, const CensoringModel& g,
                LossStats* stats) {
  return dr_loss_eval(losses, data, g, nullptr, /*complete_case=*/false, AugStyle::Direct, stats);
}

double dr_loss_censoring(const std::vector<double>& losses, const Dataset& data, const CensoringModel& g,
                         const ConditionalLossModel& u, DrForm form, LossStats* stats) {
  const AugStyle style = form == DrForm::Direct ? AugStyle::Direct : AugStyle::MartingaleSum;
  return dr_loss_eval(losses, data, g, &u, /*complete_case=*/false, style, stats);
}

double dr_loss_ltrc(const std::vector<double>& losses, const Dataset& data, const CensoringModel& g,
                    const ConditionalLossModel& u, LtrcForm form, LossStats* stats) {
  AugStyle style = AugStyle::Direct;
  if (form == LtrcForm::Martingale) style = AugStyle::MartingaleSum;
  if (form == LtrcForm::Expanded) style = AugStyle::Expanded;
  return dr_loss_eval(losses, data, g, &u, /*complete_case=*/true, style, stats);
}

}  // namespace drsurv
