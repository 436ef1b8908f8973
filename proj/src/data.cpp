#include "drsurv/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "drsurv/errors.hpp"
#include "drsurv/hash.hpp"

namespace drsurv {

namespace {

void validate_record(const SubjectRecord& rec, std::size_t row) {
  auto bad = [&](const char* what) {
    throw ValidationError("record " + std::to_string(row + 1) + ": " + what);
  };
  if (!(rec.time >= 0.0) || !std::isfinite(rec.time)) bad("negative or non-finite time");
  if (!(rec.tau >= 0.0) || !std::isfinite(rec.tau)) bad("negative or non-finite tau");
  if (rec.event != 0 && rec.event != 1) bad("event not in {0,1}");
  if (rec.treat != 0 && rec.treat != 1) bad("treat not in {0,1}");
  for (const auto* v : {&rec.x, &rec.z, &rec.r}) {
    if (v->size() > 0 && !v->allFinite()) bad("non-finite covariate");
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

Dataset::Dataset(std::vector<SubjectRecord> records) : records_(std::move(records)) {
  if (records_.empty()) return;
  p_ = static_cast<int>(records_[0].x.size());
  q_ = static_cast<int>(records_[0].z.size());
  s_ = static_cast<int>(records_[0].r.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    auto& rec = records_[i];
    if (rec.x.size() != p_ || rec.z.size() != q_ || rec.r.size() != s_)
      throw ValidationError("record " + std::to_string(i + 1) + ": covariate dimension mismatch");
    validate_record(rec, i);
    rec.complete = complete_case_indicator(rec.time, rec.event, rec.tau);
  }
}

double Dataset::tau() const {
  double t = 0.0;
  for (const auto& rec : records_) t = std::max(t, rec.tau);
  return t;
}

std::vector<double> Dataset::times() const {
  std::vector<double> out(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) out[i] = records_[i].time;
  return out;
}

std::vector<int> Dataset::events() const {
  std::vector<int> out(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) out[i] = records_[i].event;
  return out;
}

std::vector<int> Dataset::treats() const {
  std::vector<int> out(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) out[i] = records_[i].treat;
  return out;
}

Dataset Dataset::subset(const std::vector<int>& idx) const {
  std::vector<SubjectRecord> recs;
  recs.reserve(idx.size());
  for (int i : idx) recs.push_back(records_.at(static_cast<std::size_t>(i)));
  return Dataset(std::move(recs));
}

Dataset Dataset::resample(Rng& rng) const {
  std::vector<SubjectRecord> recs;
  recs.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(records_.size()) - 1));
    recs.push_back(records_[j]);
  }
  return Dataset(std::move(recs));
}

std::uint64_t Dataset::hash() const { return fnv1a(to_csv_string(*this)); }

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(cell, &pos);
    while (pos < cell.size() && (cell[pos] == ' ' || cell[pos] == '\r')) ++pos;
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ParseError("row " + std::to_string(row) + ", column '" + col + "': cannot parse '" + cell + "'");
  }
}

/// Collects prefix-indexed columns (x1, x2, ...) in index order; stops at the
/// first gap.
std::vector<int> prefixed_columns(const std::vector<std::string>& header, const std::string& prefix) {
  std::map<int, int> found;  // covariate index -> column position
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& name = header[c];
    if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) continue;
    const std::string tail = name.substr(prefix.size());
    if (tail.empty() || tail.find_first_not_of("0123456789") != std::string::npos) continue;
    found[std::stoi(tail)] = static_cast<int>(c);
  }
  std::vector<int> cols;
  for (int i = 1; found.count(i); ++i) cols.push_back(found[i]);
  return cols;
}

}  // namespace

Dataset parse_csv(const std::string& content, const CsvSchema& schema) {
  std::stringstream in(content);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty file");
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  const auto header = split_line(line);

  auto find_col = [&](const std::string& name) -> int {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return static_cast<int>(c);
    return -1;
  };

  const int col_time = find_col(schema.time);
  const int col_event = find_col(schema.event);
  const int col_treat = find_col(schema.treat);
  const int col_tau = find_col(schema.tau);
  if (col_time < 0) throw SchemaError("missing required column '" + schema.time + "'");
  if (col_event < 0) throw SchemaError("missing required column '" + schema.event + "'");
  if (col_treat < 0) throw SchemaError("missing required column '" + schema.treat + "'");

  const auto x_cols = prefixed_columns(header, schema.x_prefix);
  const auto z_cols = prefixed_columns(header, schema.z_prefix);
  const auto r_cols = prefixed_columns(header, schema.r_prefix);

  std::vector<SubjectRecord> records;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                       " cells, got " + std::to_string(cells.size()));
    auto cell = [&](int c, const std::string& name) {
      return parse_cell(cells[static_cast<std::size_t>(c)], row, name);
    };
    SubjectRecord rec;
    rec.time = cell(col_time, schema.time);
    rec.event = static_cast<int>(cell(col_event, schema.event));
    rec.treat = static_cast<int>(cell(col_treat, schema.treat));
    rec.tau = col_tau >= 0 ? cell(col_tau, schema.tau) : 0.0;
    rec.x.resize(static_cast<Eigen::Index>(x_cols.size()));
    for (std::size_t j = 0; j < x_cols.size(); ++j)
      rec.x[static_cast<Eigen::Index>(j)] = cell(x_cols[j], schema.x_prefix + std::to_string(j + 1));
    rec.z.resize(static_cast<Eigen::Index>(z_cols.size()));
    for (std::size_t j = 0; j < z_cols.size(); ++j)
      rec.z[static_cast<Eigen::Index>(j)] = cell(z_cols[j], schema.z_prefix + std::to_string(j + 1));
    if (r_cols.empty()) {
      rec.r = rec.x;  // censoring covariates default to the survival covariates
    } else {
      rec.r.resize(static_cast<Eigen::Index>(r_cols.size()));
      for (std::size_t j = 0; j < r_cols.size(); ++j)
        rec.r[static_cast<Eigen::Index>(j)] = cell(r_cols[j], schema.r_prefix + std::to_string(j + 1));
    }
    records.push_back(std::move(rec));
  }
  return Dataset(std::move(records));
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema);
}

std::string to_csv_string(const Dataset& data, const CsvSchema& schema) {
  std::string out = schema.time + "," + schema.event + "," + schema.treat + "," + schema.tau;
  const bool r_is_x = [&] {
    for (const auto& rec : data.records())
      if (rec.r.size() != rec.x.size() || rec.r != rec.x) return false;
    return true;
  }();
  for (int j = 1; j <= data.p(); ++j) out += "," + schema.x_prefix + std::to_string(j);
  for (int j = 1; j <= data.q(); ++j) out += "," + schema.z_prefix + std::to_string(j);
  if (!r_is_x)
    for (int j = 1; j <= data.s(); ++j) out += "," + schema.r_prefix + std::to_string(j);
  out += "\n";
  for (const auto& rec : data.records()) {
    out += format_double(rec.time) + "," + std::to_string(rec.event) + "," + std::to_string(rec.treat) + "," +
           format_double(rec.tau);
    for (Eigen::Index j = 0; j < rec.x.size(); ++j) out += "," + format_double(rec.x[j]);
    for (Eigen::Index j = 0; j < rec.z.size(); ++j) out += "," + format_double(rec.z[j]);
    if (!r_is_x)
      for (Eigen::Index j = 0; j < rec.r.size(); ++j) out += "," + format_double(rec.r[j]);
    out += "\n";
  }
  return out;
}

void write_csv(const Dataset& data, const std::string& path, const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << to_csv_string(data, schema);
}

std::vector<int> split_k_labels(std::size_t n, int k, std::uint64_t seed) {
  if (k <= 0) throw std::invalid_argument("split_k: k must be positive");
  if (static_cast<std::size_t>(k) > n) throw std::invalid_argument("split_k: k exceeds record count");
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  Rng rng(seed);
  rng.shuffle(idx);
  std::vector<int> labels(n);
  for (std::size_t pos = 0; pos < n; ++pos)
    labels[static_cast<std::size_t>(idx[pos])] = static_cast<int>(pos % static_cast<std::size_t>(k));
  return labels;
}

std::vector<Dataset> split_k(const Dataset& data, int k, std::uint64_t seed) {
  const auto labels = split_k_labels(data.size(), k, seed);
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < labels.size(); ++i)
    groups[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));
  std::vector<Dataset> out;
  out.reserve(static_cast<std::size_t>(k));
  for (const auto& g : groups) out.push_back(data.subset(g));
  return out;
}

}  // namespace drsurv
