#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace drsurv {

/// Point estimate, bootstrap spread, and the decile HTE curve for one
/// estimator run; serializable to JSON and a flat CSV row.
struct EffectReport {
  std::string estimator;
  double ate = 0.0;
  double ate_sd = 0.0;
  int n_boot = 0;
  std::array<double, 10> decile_mid{};
  std::array<double, 10> decile_effect{};
  std::array<double, 10> decile_sd{};
  std::uint64_t seed = 0;
  std::string dataset_hash;
  std::string config_hash;

  std::string to_json() const;
  static EffectReport from_json(const std::string& text);

  /// decile,midpoint,effect,sd rows plus an ATE reference column.
  std::string hte_csv() const;

  static std::string compare_csv_header();
  std::string compare_csv_row() const;
};

}  // namespace drsurv
