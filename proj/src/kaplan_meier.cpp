#include "drsurv/kaplan_meier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace drsurv {

KmFit km_fit(const std::vector<double>& times, const std::vector<int>& events,
             const std::vector<double>* entry_times) {
  const std::size_t n = times.size();
  if (n == 0) throw std::invalid_argument("km_fit: empty input");
  if (events.size() != n) throw std::invalid_argument("km_fit: times/events length mismatch");
  if (entry_times && entry_times->size() != n)
    throw std::invalid_argument("km_fit: times/entry_times length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(times[i] >= 0.0)) throw std::invalid_argument("km_fit: negative time");
    if (events[i] != 0 && events[i] != 1) throw std::invalid_argument("km_fit: event not in {0,1}");
    if (entry_times && !((*entry_times)[i] < times[i]))
      throw std::invalid_argument("km_fit: entry time must precede observed time");
  }

  std::map<double, int> event_counts;
  for (std::size_t i = 0; i < n; ++i)
    if (events[i] == 1) ++event_counts[times[i]];

  KmFit out;
  if (event_counts.empty()) {
    out.curve = SurvivalCurve::step({}, {});
    out.all_censored = true;
    out.table.censored_before_first = static_cast<int>(n);
    return out;
  }

  std::vector<double> knots;
  std::vector<double> values;
  double surv = 1.0;
  for (const auto& [t, d] : event_counts) {
    int at_risk = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool entered = entry_times ? (*entry_times)[i] < t : true;
      if (entered && times[i] >= t) ++at_risk;
    }
    surv *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
    knots.push_back(t);
    values.push_back(surv);
    out.table.event_times.push_back(t);
    out.table.at_risk.push_back(at_risk);
    out.table.events.push_back(d);
  }

  // censored-interval counts
  out.table.censored_after.assign(out.table.event_times.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (events[i] == 1) continue;
    auto it = std::upper_bound(out.table.event_times.begin(), out.table.event_times.end(), times[i]);
    if (it == out.table.event_times.begin())
      ++out.table.censored_before_first;
    else
      ++out.table.censored_after[static_cast<std::size_t>(it - out.table.event_times.begin() - 1)];
  }

  out.curve = SurvivalCurve::step(std::move(knots), std::move(values));
  return out;
}

std::optional<double> km_median(const SurvivalCurve& curve) {
  if (curve.is_step()) {
    if (curve.initial_value() <= 0.5) return 0.0;
    const auto& knots = curve.knots();
    const auto& values = curve.values();
    for (std::size_t i = 0; i < knots.size(); ++i)
      if (values[i] <= 0.5) return knots[i];
    return std::nullopt;
  }
  // parametric: bisect S(t) = 1/2 on [0, t_max]
  if (curve(0.0) <= 0.5) return 0.0;
  if (curve(curve.t_max()) > 0.5) return std::nullopt;
  double lo = 0.0, hi = curve.t_max();
  for (int i = 0; i < 200 && hi - lo > 1e-12 * (1.0 + hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (curve(mid) > 0.5 ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace drsurv
