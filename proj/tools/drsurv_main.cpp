#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "drsurv/causal.hpp"
#include "drsurv/data.hpp"
#include "drsurv/errors.hpp"
#include "drsurv/hash.hpp"
#include "drsurv/kaplan_meier.hpp"
#include "drsurv/report.hpp"
#include "drsurv/simulation.hpp"
#include "vendor/CLI11.hpp"

namespace {

struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw IoFailure("write failed for '" + path.string() + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Arm-level Kaplan-Meier curve with delayed entry under truncation.
std::string arm_km_csv(const drsurv::Dataset& data, int arm) {
  std::vector<double> times, entries;
  std::vector<int> events;
  for (const auto& rec : data.records()) {
    if (rec.treat != arm) continue;
    if (rec.tau > 0.0 && rec.time <= rec.tau) continue;
    times.push_back(rec.time);
    events.push_back(rec.event);
    if (rec.tau > 0.0) entries.push_back(rec.tau);
  }
  const auto fit = drsurv::km_fit(times, events, entries.empty() ? nullptr : &entries);
  return fit.curve.to_csv();
}

int run(int argc, char** argv) {
  CLI::App app{"Treatment-effect estimation for left-truncated right-censored survival data"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file");

  // simulate
  auto* sim = app.add_subcommand("simulate", "draw the synthetic LTRC dataset");
  std::uint64_t sim_seed = 1;
  int sim_n = 500;
  std::string sim_rule = "or", sim_cens_mode = "mean", sim_out = ".";
  double sim_cens_scale = 1.5, sim_keep = 0.95;
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--n", sim_n, "sample size before truncation");
  sim->add_option("--rule", sim_rule, "treatment rule: or | and")->check(CLI::IsMember({"or", "and"}));
  sim->add_option("--censoring", sim_cens_mode, "censoring scale meaning: mean | rate")
      ->check(CLI::IsMember({"mean", "rate"}));
  sim->add_option("--censoring-scale", sim_cens_scale, "censoring exponential scale");
  sim->add_option("--keep-quantile", sim_keep, "fraction of failures kept by truncation");
  sim->add_option("--out", sim_out, "output directory");

  // estimate
  auto* est = app.add_subcommand("estimate", "run one estimator end to end");
  std::string est_data, est_tag = "dr-nn", est_out = ".", est_censor = "cox", est_cate = "linear";
  std::uint64_t est_seed = 1;
  int est_boot = 100, est_threads = 0, est_epochs = 100;
  est->add_option("--data", est_data, "dataset CSV")->required();
  est->add_option("--estimator", est_tag, "mhr | naive-cox | naive-nn | dr-cox | dr-nn")
      ->check(CLI::IsMember({"mhr", "naive-cox", "naive-nn", "dr-cox", "dr-nn"}));
  est->add_option("--seed", est_seed, "RNG seed");
  est->add_option("--n-boot", est_boot, "bootstrap replicates");
  est->add_option("--censor-model", est_censor, "censoring model: km | cox")
      ->check(CLI::IsMember({"km", "cox"}));
  est->add_option("--cate", est_cate, "CATE regression: linear | bins")
      ->check(CLI::IsMember({"linear", "bins"}));
  est->add_option("--threads", est_threads, "bootstrap worker threads (0 = auto)");
  est->add_option("--epochs", est_epochs, "network training epochs");
  est->add_option("--out", est_out, "output directory");

  // report
  auto* rep = app.add_subcommand("report", "merge estimator reports into a comparison table");
  std::vector<std::string> rep_inputs;
  std::string rep_out = "compare.csv";
  rep->add_option("--out", rep_out, "output CSV");
  rep->add_option("inputs", rep_inputs, "report JSON files")->required();

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) {
    drsurv::SimConfig config;
    config.seed = sim_seed;
    config.n = sim_n;
    config.rule = sim_rule == "and" ? drsurv::TreatmentRule::And : drsurv::TreatmentRule::Or;
    config.censoring_mode =
        sim_cens_mode == "rate" ? drsurv::CensoringScale::Rate : drsurv::CensoringScale::Mean;
    config.censoring_scale = sim_cens_scale;
    config.keep_quantile = sim_keep;
    const auto [data, truth] = drsurv::generate(config);

    const std::string config_repr = "simulate;seed=" + std::to_string(sim_seed) + ";n=" +
                                    std::to_string(sim_n) + ";rule=" + sim_rule + ";censoring=" +
                                    sim_cens_mode + ";scale=" + std::to_string(sim_cens_scale) +
                                    ";keep=" + std::to_string(sim_keep);
    std::filesystem::create_directories(sim_out);
    const auto dir = std::filesystem::path(sim_out);
    write_file(dir / "dataset.csv", drsurv::to_csv_string(data));

    auto truth_json = truth.to_json();
    truth_json.pop_back();  // strip closing brace, append run manifest
    truth_json += ",\n  \"seed\": " + std::to_string(sim_seed) + ",\n  \"config_hash\": \"" +
                  drsurv::hash_hex(drsurv::fnv1a(config_repr)) + "\",\n  \"dataset_hash\": \"" +
                  drsurv::hash_hex(data.hash()) + "\"\n}";
    write_file(dir / "truth.json", truth_json);

    std::cout << "n=" << data.size() << " treated=" << truth.n_treated << " control=" << truth.n_control
              << " truncated=" << truth.n_truncated << " censored=" << truth.n_censored
              << " tau=" << truth.tau << "\n";
    return 0;
  }

  if (est->parsed()) {
    const drsurv::Dataset data = drsurv::load_csv(est_data);
    drsurv::EstimatorOptions opts;
    opts.seed = est_seed;
    opts.n_boot = est_boot;
    opts.threads = est_threads;
    opts.censoring = est_censor == "km" ? drsurv::CensoringMethod::KaplanMeier : drsurv::CensoringMethod::Cox;
    opts.cate = est_cate == "bins" ? drsurv::CateRegression::DecileBins : drsurv::CateRegression::LinearPi;

    drsurv::TrainConfig nn_cfg;
    nn_cfg.epochs = est_epochs;

    drsurv::EffectReport report;
    if (est_tag == "mhr") {
      report = drsurv::mhr_estimate(data, opts);
    } else if (est_tag == "naive-cox") {
      report = drsurv::naive_plugin_effect(data, drsurv::make_cox_arm_fitter(), est_tag, opts);
    } else if (est_tag == "naive-nn") {
      nn_cfg.target = drsurv::Target::SurvivalProb;  // anchored-probability mode
      report = drsurv::naive_plugin_effect(data, drsurv::make_nn_arm_fitter(nn_cfg, opts.censoring), est_tag,
                                           opts);
    } else if (est_tag == "dr-cox") {
      report = drsurv::dr_cate_crossfit(data, drsurv::make_cox_full_fitter(), est_tag, opts);
    } else {
      nn_cfg.target = drsurv::Target::CoxBeta;
      report =
          drsurv::dr_cate_crossfit(data, drsurv::make_nn_full_fitter(nn_cfg, opts.censoring), est_tag, opts);
    }

    const std::string config_repr = "estimate;estimator=" + est_tag + ";seed=" + std::to_string(est_seed) +
                                    ";n_boot=" + std::to_string(est_boot) + ";censor=" + est_censor +
                                    ";cate=" + est_cate + ";epochs=" + std::to_string(est_epochs);
    report.config_hash = drsurv::hash_hex(drsurv::fnv1a(config_repr));

    std::filesystem::create_directories(est_out);
    const auto dir = std::filesystem::path(est_out);
    write_file(dir / ("report_" + est_tag + ".json"), report.to_json());
    write_file(dir / ("hte_" + est_tag + ".csv"), report.hte_csv());
    write_file(dir / "km_treated.csv", arm_km_csv(data, 1));
    write_file(dir / "km_control.csv", arm_km_csv(data, 0));

    std::cout << est_tag << ": ate=" << report.ate << " sd=" << report.ate_sd << " n_boot=" << report.n_boot
              << "\n";
    return 0;
  }

  // report merge
  std::vector<drsurv::EffectReport> reports;
  for (const auto& path : rep_inputs) reports.push_back(drsurv::EffectReport::from_json(read_file(path)));
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (reports[i].dataset_hash != reports[0].dataset_hash)
      throw drsurv::ValidationError("report: dataset hash mismatch between '" + reports[0].dataset_hash +
                                    "' and '" + reports[i].dataset_hash + "'");
  }
  std::string table = drsurv::EffectReport::compare_csv_header();
  for (const auto& r : reports) table += r.compare_csv_row();
  write_file(rep_out, table);
  std::cout << "wrote " << rep_out << " (" << reports.size() << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const IoFailure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const drsurv::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
