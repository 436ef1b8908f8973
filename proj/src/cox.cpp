#include "drsurv/cox.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "drsurv/errors.hpp"

namespace drsurv {

SurvivalDesign make_design_indexed(
    const Dataset& data, const std::function<Eigen::VectorXd(const SubjectRecord&, std::size_t)>& features,
    bool flip_event) {
  if (data.empty()) throw std::invalid_argument("make_design: empty dataset");
  SurvivalDesign d;
  const Eigen::Index p = features(data[0], 0).size();
  std::vector<Eigen::VectorXd> rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& rec = data[i];
    if (rec.tau > 0.0 && rec.time <= rec.tau) {
      ++d.excluded_not_at_risk;
      continue;
    }
    rows.push_back(features(rec, i));
    if (rows.back().size() != p) throw std::invalid_argument("make_design: ragged feature map");
    d.time.push_back(rec.time);
    d.event.push_back(flip_event ? 1 - rec.event : rec.event);
    if (rec.tau > 0.0) d.entry.push_back(rec.tau);
    d.source_rows.push_back(static_cast<int>(i));
  }
  if (!d.entry.empty() && d.entry.size() != d.time.size())
    throw std::invalid_argument("make_design: mixed truncated and untruncated records");
  d.X.resize(static_cast<Eigen::Index>(rows.size()), p);
  for (std::size_t i = 0; i < rows.size(); ++i) d.X.row(static_cast<Eigen::Index>(i)) = rows[i];
  return d;
}

SurvivalDesign make_design(const Dataset& data,
                           const std::function<Eigen::VectorXd(const SubjectRecord&)>& features,
                           bool flip_event) {
  return make_design_indexed(
      data, [&features](const SubjectRecord& rec, std::size_t) { return features(rec); }, flip_event);
}

SurvivalDesign make_design(const Dataset& data) {
  return make_design(data, [](const SubjectRecord& rec) { return rec.x; });
}

namespace {

bool at_risk(const SurvivalDesign& d, std::size_t j, double t) {
  if (!d.entry.empty() && !(d.entry[j] < t)) return false;
  return d.time[j] >= t;
}

std::map<double, std::vector<std::size_t>> event_groups(const SurvivalDesign& d) {
  std::map<double, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < d.time.size(); ++i)
    if (d.event[i] == 1) groups[d.time[i]].push_back(i);
  return groups;
}

}  // namespace

double cox_partial_nll(const Eigen::VectorXd& beta, const SurvivalDesign& design,
                       Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
  const std::size_t n = design.time.size();
  const Eigen::Index p = design.X.cols();
  if (beta.size() != p) throw std::invalid_argument("cox_partial_nll: beta dimension mismatch");
  const auto groups = event_groups(design);
  if (groups.empty()) throw NumericError("cox_partial_nll: no events in sample");

  Eigen::VectorXd eta = design.X * beta;
  double loss = 0.0;
  if (grad) grad->setZero(p);
  if (hess) hess->setZero(p, p);

  Eigen::VectorXd s1(p);
  Eigen::MatrixXd s2(p, p);
  for (const auto& [t, members] : groups) {
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (at_risk(design, j, t)) shift = std::max(shift, eta[static_cast<Eigen::Index>(j)]);
    double s0 = 0.0;
    s1.setZero();
    s2.setZero();
    for (std::size_t j = 0; j < n; ++j) {
      if (!at_risk(design, j, t)) continue;
      const auto jj = static_cast<Eigen::Index>(j);
      const double w = std::exp(eta[jj] - shift);
      s0 += w;
      if (grad || hess) s1.noalias() += w * design.X.row(jj).transpose();
      if (hess) s2.noalias() += w * design.X.row(jj).transpose() * design.X.row(jj);
    }
    const double d = static_cast<double>(members.size());
    for (std::size_t i : members) loss -= eta[static_cast<Eigen::Index>(i)];
    loss += d * (std::log(s0) + shift);
    if (grad) {
      for (std::size_t i : members) grad->noalias() -= design.X.row(static_cast<Eigen::Index>(i)).transpose();
      grad->noalias() += (d / s0) * s1;
    }
    if (hess) {
      const Eigen::VectorXd mean = s1 / s0;
      hess->noalias() += d * (s2 / s0 - mean * mean.transpose());
    }
  }
  return loss;
}

CoxModel cox_fit(const SurvivalDesign& design, const CoxOptions& opts) {
  const Eigen::Index p_full = design.X.cols();

  // drop constant columns: the partial likelihood carries no information on them
  std::vector<int> keep, dropped;
  for (Eigen::Index c = 0; c < p_full; ++c) {
    const double span = design.X.col(c).maxCoeff() - design.X.col(c).minCoeff();
    (span > 1e-12 ? keep : dropped).push_back(static_cast<int>(c));
  }
  SurvivalDesign work = design;
  work.X.resize(design.X.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) work.X.col(static_cast<Eigen::Index>(c)) = design.X.col(keep[c]);

  const Eigen::Index p = work.X.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd grad(p);
  Eigen::MatrixXd hess(p, p);

  CoxModel model;
  double loss = p > 0 ? cox_partial_nll(beta, work, &grad, &hess)
                      : cox_partial_nll(beta, work);  // p == 0: nothing to fit
  if (p > 0) {
    for (int iter = 0; iter < opts.max_iter; ++iter) {
      model.iterations = iter;
      model.grad_norm = grad.norm();
      if (model.grad_norm < opts.grad_tol) {
        model.converged = true;
        break;
      }
      Eigen::VectorXd dir;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive())
        dir = ldlt.solve(-grad);
      else
        dir = -grad;
      if (dir.dot(grad) >= 0.0) dir = -grad;  // enforce descent

      double step = 1.0;
      double new_loss = loss;
      Eigen::VectorXd beta_new = beta;
      for (int ls = 0; ls < 50; ++ls) {
        beta_new = beta + step * dir;
        new_loss = cox_partial_nll(beta_new, work);
        if (std::isfinite(new_loss) && new_loss <= loss + 1e-4 * step * dir.dot(grad)) break;
        step *= 0.5;
      }
      beta = beta_new;
      loss = cox_partial_nll(beta, work, &grad, &hess);
    }
    model.grad_norm = grad.norm();
    if (model.grad_norm < opts.grad_tol) model.converged = true;
    model.separation_warning = beta.norm() > 50.0;
  } else {
    model.converged = true;
  }

  model.beta = Eigen::VectorXd::Zero(p_full);
  for (std::size_t c = 0; c < keep.size(); ++c) model.beta[keep[c]] = beta[static_cast<Eigen::Index>(c)];
  model.dropped_columns = dropped;
  model.baseline = breslow_baseline(model.beta, design);
  return model;
}

CumulativeHazard breslow_baseline(const Eigen::VectorXd& beta, const SurvivalDesign& design) {
  if (!beta.allFinite()) throw std::invalid_argument("breslow_baseline: non-finite beta");
  const auto groups = event_groups(design);
  const Eigen::VectorXd eta = design.X * beta;
  std::vector<double> knots, values;
  double cum = 0.0;
  for (const auto& [t, members] : groups) {
    double denom = 0.0;
    for (std::size_t j = 0; j < design.time.size(); ++j)
      if (at_risk(design, j, t)) denom += std::exp(eta[static_cast<Eigen::Index>(j)]);
    cum += static_cast<double>(members.size()) / denom;
    knots.push_back(t);
    values.push_back(cum);
  }
  return CumulativeHazard::step(std::move(knots), std::move(values));
}

SurvivalCurve cox_predict_survival(const CoxModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.beta.size()) throw std::invalid_argument("cox_predict_survival: dimension mismatch");
  const double risk = model.risk_score(x);
  const auto& h = model.baseline;
  std::vector<double> values(h.values().size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::exp(-h.values()[i] * risk);
  return SurvivalCurve::step(h.knots(), std::move(values));
}

}  // namespace drsurv
