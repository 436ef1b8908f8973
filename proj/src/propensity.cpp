#include "drsurv/propensity.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "drsurv/errors.hpp"

namespace drsurv {

double PropensityModel::linear(const Eigen::VectorXd& z) const {
  if (z.size() + 1 != coef.size()) throw std::invalid_argument("propensity: covariate dimension mismatch");
  return coef[0] + coef.tail(coef.size() - 1).dot(z);
}

double PropensityModel::predict(const Eigen::VectorXd& z) const {
  const double p = 1.0 / (1.0 + std::exp(-linear(z)));
  return std::clamp(p, clip_lo, clip_hi);
}

PropensityModel fit_propensity(const Dataset& data) {
  const std::size_t n = data.size();
  if (n == 0) throw std::invalid_argument("fit_propensity: empty dataset");
  int n1 = 0;
  for (const auto& rec : data.records()) n1 += rec.treat;
  if (n1 == 0 || n1 == static_cast<int>(n)) throw NumericError("fit_propensity: single treatment class");

  const Eigen::Index p = data.q() + 1;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    X(static_cast<Eigen::Index>(i), 0) = 1.0;
    X.row(static_cast<Eigen::Index>(i)).tail(p - 1) = data[i].z;
    y[static_cast<Eigen::Index>(i)] = data[i].treat;
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  auto neg_loglik = [&](const Eigen::VectorXd& bvec) {
    const Eigen::VectorXd eta = X * bvec;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i)
      ll += y[i] * eta[i] - std::log1p(std::exp(std::min(eta[i], 35.0))) -
            std::max(eta[i] - 35.0, 0.0);  // overflow-safe log(1+e^eta)
    return -ll;
  };

  double f = neg_loglik(beta);
  PropensityModel model;
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd prob(n), w(n);
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      prob[i] = 1.0 / (1.0 + std::exp(-eta[i]));
      w[i] = std::max(prob[i] * (1.0 - prob[i]), 1e-10);
    }
    const Eigen::VectorXd grad = X.transpose() * (y - prob);
    if (grad.norm() < 1e-10) {
      model.converged = true;
      break;
    }
    Eigen::MatrixXd hess = X.transpose() * w.asDiagonal() * X;
    hess.diagonal().array() += 1e-12;
    Eigen::VectorXd dir = hess.ldlt().solve(grad);
    double stepsize = 1.0;
    for (int ls = 0; ls < 50; ++ls) {
      const double f_new = neg_loglik(beta + stepsize * dir);
      if (std::isfinite(f_new) && f_new <= f) {
        beta += stepsize * dir;
        f = f_new;
        break;
      }
      stepsize *= 0.5;
    }
  }
  model.coef = beta;
  model.separation_warning = beta.norm() > 30.0;
  return model;
}

std::vector<double> propensity_values(const PropensityModel& model, const Dataset& data) {
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = model.predict(data[i].z);
  return out;
}

}  // namespace drsurv
