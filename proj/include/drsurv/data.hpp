#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "drsurv/random.hpp"

namespace drsurv {

/// One observational unit of left-truncated right-censored data.
struct SubjectRecord {
  Eigen::VectorXd x;   ///< survival covariates (length p)
  Eigen::VectorXd z;   ///< treatment-assignment covariates (length q)
  Eigen::VectorXd r;   ///< censoring covariates (length s; often a copy of x)
  int treat = 0;       ///< treatment indicator, 0/1
  double time = 0.0;   ///< observed time, min(failure, censoring)
  int event = 0;       ///< 1 = failure observed, 0 = censored
  double tau = 0.0;    ///< study truncation time (0 = none)
  int complete = 0;    ///< complete-case indicator, see complete_case_indicator()
};

/// Complete-case indicator for LTRC data: an observed failure strictly past
/// the truncation time. Censored records and failures at or below tau are
/// not complete cases; with tau = 0 this reduces to the event indicator.
inline int complete_case_indicator(double time, int event, double tau) {
  return (event == 1 && time > tau) ? 1 : 0;
}

/// Immutable collection of records with consistent covariate dimensions.
/// Left-truncated subjects are absent by construction: truncation removes
/// rows upstream, it never flags them.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<SubjectRecord> records);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const SubjectRecord& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<SubjectRecord>& records() const { return records_; }

  int p() const { return p_; }
  int q() const { return q_; }
  int s() const { return s_; }

  /// Shared truncation time (max over records; the simulator writes a constant).
  double tau() const;

  std::vector<double> times() const;
  std::vector<int> events() const;
  std::vector<int> treats() const;

  Dataset subset(const std::vector<int>& idx) const;
  Dataset resample(Rng& rng) const;

  /// Fingerprint of the canonical CSV serialization.
  std::uint64_t hash() const;

 private:
  std::vector<SubjectRecord> records_;
  int p_ = 0, q_ = 0, s_ = 0;
};

/// Column-name mapping for CSV interchange. Covariate columns are the
/// prefix followed by a 1-based index (x1..xp, z1..zq, r1..rs).
struct CsvSchema {
  std::string time = "time";
  std::string event = "event";
  std::string treat = "treat";
  std::string tau = "tau";  ///< optional column; absent means tau = 0
  std::string x_prefix = "x";
  std::string z_prefix = "z";
  std::string r_prefix = "r";
};

/// Reads a header CSV into a Dataset. The complete-case indicator is always
/// recomputed from (time, event, tau). When no r-columns are present the
/// censoring covariates alias x. Row order is preserved.
Dataset load_csv(const std::string& path, const CsvSchema& schema = {});

Dataset parse_csv(const std::string& content, const CsvSchema& schema = {});

/// Canonical serialization, 12 significant digits.
std::string to_csv_string(const Dataset& data, const CsvSchema& schema = {});

void write_csv(const Dataset& data, const std::string& path, const CsvSchema& schema = {});

/// Disjoint covering partition into k folds with sizes differing by at most
/// one, deterministic for a fixed seed.
std::vector<Dataset> split_k(const Dataset& data, int k, std::uint64_t seed);

/// Fold assignment per record (same partition split_k materializes).
std::vector<int> split_k_labels(std::size_t n, int k, std::uint64_t seed);

}  // namespace drsurv
