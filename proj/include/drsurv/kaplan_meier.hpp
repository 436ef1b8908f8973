#pragma once

#include <optional>
#include <vector>

#include "drsurv/curve.hpp"

namespace drsurv {

/// Risk-set bookkeeping at the distinct event times.
struct RiskTable {
  std::vector<double> event_times;
  std::vector<int> at_risk;         ///< n_j
  std::vector<int> events;          ///< d_j (>= 1 at every listed time)
  std::vector<int> censored_after;  ///< censorings in [t_j, t_{j+1})
  int censored_before_first = 0;    ///< censorings in [0, t_1)
};

struct KmFit {
  SurvivalCurve curve{SurvivalCurve::step({}, {})};
  RiskTable table;
  bool all_censored = false;  ///< no events: flat curve at 1
};

/// Product-limit estimator. With entry_times, subjects join the risk set only
/// after their entry (left-truncation adjustment); entries must precede the
/// observed times. Tied events and censorings at one time: events first, so
/// subjects censored at t still count as at risk at t.
KmFit km_fit(const std::vector<double>& times, const std::vector<int>& events,
             const std::vector<double>* entry_times = nullptr);

/// Smallest time with S(t) <= 1/2; empty when the curve never reaches it.
std::optional<double> km_median(const SurvivalCurve& curve);

}  // namespace drsurv
