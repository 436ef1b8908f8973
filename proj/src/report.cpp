#include "drsurv/report.hpp"

#include <cstdio>

#include "vendor/json.hpp"

namespace drsurv {

namespace {
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}
}  // namespace

std::string EffectReport::to_json() const {
  nlohmann::json j;
  j["estimator"] = estimator;
  j["ate"] = ate;
  j["ate_sd"] = ate_sd;
  j["n_boot"] = n_boot;
  j["decile_mid"] = decile_mid;
  j["decile_effect"] = decile_effect;
  j["decile_sd"] = decile_sd;
  j["seed"] = seed;
  j["dataset_hash"] = dataset_hash;
  j["config_hash"] = config_hash;
  return j.dump(2);
}

EffectReport EffectReport::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  EffectReport r;
  r.estimator = j.at("estimator").get<std::string>();
  r.ate = j.at("ate").get<double>();
  r.ate_sd = j.at("ate_sd").get<double>();
  r.n_boot = j.at("n_boot").get<int>();
  r.decile_mid = j.at("decile_mid").get<std::array<double, 10>>();
  r.decile_effect = j.at("decile_effect").get<std::array<double, 10>>();
  r.decile_sd = j.at("decile_sd").get<std::array<double, 10>>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.dataset_hash = j.at("dataset_hash").get<std::string>();
  r.config_hash = j.at("config_hash").get<std::string>();
  return r;
}

std::string EffectReport::hte_csv() const {
  std::string out = "decile,propensity_mid,effect,sd,ate\n";
  for (int d = 0; d < 10; ++d) {
    out += std::to_string(d + 1) + "," + fmt(decile_mid[static_cast<std::size_t>(d)]) + "," +
           fmt(decile_effect[static_cast<std::size_t>(d)]) + "," + fmt(decile_sd[static_cast<std::size_t>(d)]) +
           "," + fmt(ate) + "\n";
  }
  return out;
}

std::string EffectReport::compare_csv_header() {
  std::string h = "estimator,ate,sd";
  for (int d = 1; d <= 10; ++d) h += ",decile_" + std::to_string(d);
  return h + "\n";
}

std::string EffectReport::compare_csv_row() const {
  std::string row = estimator + "," + fmt(ate) + "," + fmt(ate_sd);
  for (int d = 0; d < 10; ++d) row += "," + fmt(decile_effect[static_cast<std::size_t>(d)]);
  return row + "\n";
}

}  // namespace drsurv
