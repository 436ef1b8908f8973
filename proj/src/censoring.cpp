#include "drsurv/censoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace drsurv {

double CensoringModel::survival(double t, const SubjectRecord& rec) const {
  if (no_censoring) return 1.0;
  if (method == CensoringMethod::KaplanMeier) return km_curve_(t);
  const double risk = std::exp(rec.r.dot(cox_.beta));
  return std::exp(-cox_.baseline(t) * risk);
}

double CensoringModel::floored_survival(double t, const SubjectRecord& rec) const {
  return std::max(survival(t, rec), eps_floor);
}

double CensoringModel::cumulative_hazard(double t, const SubjectRecord& rec) const {
  return -std::log(floored_survival(t, rec));
}

bool CensoringModel::clipped_at(const SubjectRecord& rec) const {
  return survival(rec.time, rec) < eps_floor;
}

CensoringModel fit_censoring(const Dataset& data, CensoringMethod method, double eps_floor) {
  if (data.empty()) throw std::invalid_argument("fit_censoring: empty dataset");
  CensoringModel model;
  model.method = method;
  model.eps_floor = eps_floor;

  int n_censored = 0;
  for (const auto& rec : data.records())
    if (rec.event == 0 && !(rec.tau > 0.0 && rec.time <= rec.tau)) ++n_censored;
  if (n_censored == 0) {
    model.no_censoring = true;
    return model;
  }

  if (method == CensoringMethod::KaplanMeier) {
    const double tau = data.tau();
    std::vector<double> times, entries;
    std::vector<int> flipped;
    for (const auto& rec : data.records()) {
      if (rec.tau > 0.0 && rec.time <= rec.tau) continue;  // never at risk
      times.push_back(rec.time);
      flipped.push_back(1 - rec.event);
      if (tau > 0.0) entries.push_back(rec.tau);
    }
    const auto fit = km_fit(times, flipped, entries.empty() ? nullptr : &entries);
    model.km_curve_ = fit.curve;
    model.jumps_ = fit.curve.knots();
    return model;
  }

  const auto design = make_design(
      data, [](const SubjectRecord& rec) { return rec.r; }, /*flip_event=*/true);
  model.cox_ = cox_fit(design);
  model.jumps_ = model.cox_.baseline.knots();
  return model;
}

std::vector<double> default_martingale_grid(const CensoringModel& model, const SubjectRecord& rec) {
  std::vector<double> grid;
  for (double t : model.jump_times()) {
    if (t > rec.time) break;
    grid.push_back(t);
  }
  if (grid.empty() || grid.back() < rec.time) grid.push_back(rec.time);
  return grid;
}

std::vector<double> martingale_increments(const CensoringModel& model, const SubjectRecord& rec,
                                          const std::vector<double>& grid, const MartingaleOptions& opts) {
  if (grid.empty() || grid.back() < rec.time)
    throw std::invalid_argument("martingale_increments: grid does not cover the observed time");
  bool has_obs = false;
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw std::invalid_argument("martingale_increments: grid not increasing");
  for (double t : grid)
    if (t == rec.time) has_obs = true;
  if (!has_obs) throw std::invalid_argument("martingale_increments: grid misses the observed time");
  for (double t : model.jump_times()) {
    if (t > rec.time) break;
    if (!std::binary_search(grid.begin(), grid.end(), t))
      throw std::invalid_argument("martingale_increments: grid misses a hazard knot");
  }

  const int delta = opts.use_complete_case ? rec.complete : rec.event;
  auto g_at = [&](double t) {
    return opts.floored ? model.floored_survival(t, rec) : model.survival(t, rec);
  };

  std::vector<double> dm(grid.size(), 0.0);
  double g_prev = 1.0;  // G(0)
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    const double g = g_at(t);
    if (rec.time >= t) dm[k] -= 1.0 - g / g_prev;  // compensator: discrete hazard
    if (delta == 0 && rec.time == t) dm[k] += 1.0;  // counting jump at a censoring
    g_prev = g;
  }
  return dm;
}

}  // namespace drsurv
