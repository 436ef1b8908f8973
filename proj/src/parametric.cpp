#include "drsurv/parametric.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "vendor/json.hpp"

namespace drsurv {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // log(2*pi)/2

void check_params(const ParametricFamily& f) {
  switch (f.tag) {
    case Family::LogNormal:
      if (!(f.b > 0.0)) throw std::domain_error("log-normal: sigma must be positive");
      break;
    case Family::Exponential:
      if (!(f.a > 0.0)) throw std::domain_error("exponential: rate must be positive");
      break;
    case Family::Weibull:
      if (!(f.a > 0.0) || !(f.b > 0.0)) throw std::domain_error("weibull: scale and shape must be positive");
      break;
  }
}

}  // namespace

ParametricFamily ParametricFamily::log_normal(double mu, double sigma) {
  ParametricFamily f{Family::LogNormal, mu, sigma};
  check_params(f);
  return f;
}

ParametricFamily ParametricFamily::exponential(double rate) {
  ParametricFamily f{Family::Exponential, rate, 0.0};
  check_params(f);
  return f;
}

ParametricFamily ParametricFamily::weibull(double scale, double shape) {
  ParametricFamily f{Family::Weibull, scale, shape};
  check_params(f);
  return f;
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

double survival_at(const ParametricFamily& f, double t) {
  check_params(f);
  if (t < 0.0) throw std::invalid_argument("survival_at: negative time");
  if (t == 0.0) return 1.0;
  switch (f.tag) {
    case Family::LogNormal:
      return 1.0 - norm_cdf((std::log(t) - f.a) / f.b);
    case Family::Exponential:
      return std::exp(-f.a * t);
    case Family::Weibull:
      return std::exp(-std::pow(t / f.a, f.b));
  }
  return 0.0;
}

double density_at(const ParametricFamily& f, double t) {
  check_params(f);
  if (!(t > 0.0)) throw std::domain_error("density_at: time must be positive");
  switch (f.tag) {
    case Family::LogNormal: {
      const double w = (std::log(t) - f.a) / f.b;
      return std::exp(-0.5 * w * w) / (t * f.b * std::sqrt(2.0 * M_PI));
    }
    case Family::Exponential:
      return f.a * std::exp(-f.a * t);
    case Family::Weibull:
      return f.b / f.a * std::pow(t / f.a, f.b - 1.0) * std::exp(-std::pow(t / f.a, f.b));
  }
  return 0.0;
}

double mean_survival_param(const ParametricFamily& f) {
  check_params(f);
  switch (f.tag) {
    case Family::LogNormal:
      return std::exp(f.a + 0.5 * f.b * f.b);
    case Family::Exponential:
      return 1.0 / f.a;
    case Family::Weibull:
      return f.a * std::tgamma(1.0 + 1.0 / f.b);
  }
  return 0.0;
}

double nll_point(const ParametricFamily& f, double t) {
  check_params(f);
  if (!(t > 0.0)) throw std::domain_error("nll: time must be positive");
  switch (f.tag) {
    case Family::LogNormal: {
      const double w = (std::log(t) - f.a) / f.b;
      return std::log(t) + std::log(f.b) + kHalfLog2Pi + 0.5 * w * w;
    }
    case Family::Exponential:
      return -std::log(f.a) + f.a * t;
    case Family::Weibull:
      return f.b * std::log(f.a) - std::log(f.b) - (f.b - 1.0) * std::log(t) + std::pow(t / f.a, f.b);
  }
  return 0.0;
}

double nll_loss(const ParametricFamily& f, const std::vector<double>& times) {
  double acc = 0.0;
  for (double t : times) acc += nll_point(f, t);
  return acc;
}

Eigen::VectorXd nll_gradient(const ParametricFamily& f, const std::vector<double>& times) {
  check_params(f);
  switch (f.tag) {
    case Family::LogNormal: {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(2);
      for (double t : times) {
        const double d = std::log(t) - f.a;
        g[0] += -d / (f.b * f.b);
        g[1] += 1.0 / f.b - d * d / (f.b * f.b * f.b);
      }
      return g;
    }
    case Family::Exponential: {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(1);
      for (double t : times) g[0] += -1.0 / f.a + t;
      return g;
    }
    case Family::Weibull: {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(2);
      for (double t : times) {
        const double u = std::pow(t / f.a, f.b);
        const double lr = std::log(t / f.a);
        g[0] += f.b / f.a - f.b / f.a * u;
        g[1] += std::log(f.a) - 1.0 / f.b - std::log(t) + u * lr;
      }
      return g;
    }
  }
  return {};
}

namespace {

/// NLL and gradient in log-transformed coordinates (positivity built in).
struct TransformedNll {
  Family tag;
  const std::vector<double>& times;

  ParametricFamily family(const Eigen::VectorXd& theta) const {
    switch (tag) {
      case Family::LogNormal:
        return ParametricFamily::log_normal(theta[0], std::exp(theta[1]));
      case Family::Exponential:
        return ParametricFamily::exponential(std::exp(theta[0]));
      case Family::Weibull:
        return ParametricFamily::weibull(std::exp(theta[0]), std::exp(theta[1]));
    }
    return {};
  }

  double value(const Eigen::VectorXd& theta) const { return nll_loss(family(theta), times); }

  Eigen::VectorXd grad(const Eigen::VectorXd& theta) const {
    const auto f = family(theta);
    Eigen::VectorXd g = nll_gradient(f, times);
    switch (tag) {
      case Family::LogNormal:
        g[1] *= f.b;
        break;
      case Family::Exponential:
        g[0] *= f.a;
        break;
      case Family::Weibull:
        g[0] *= f.a;
        g[1] *= f.b;
        break;
    }
    return g;
  }
};

}  // namespace

ParametricFamily fit_family(Family tag, const std::vector<double>& times) {
  if (times.empty()) throw std::invalid_argument("fit_family: empty sample");
  for (double t : times)
    if (!(t > 0.0)) throw std::domain_error("fit_family: times must be positive");

  const int dim = tag == Family::Exponential ? 1 : 2;
  TransformedNll obj{tag, times};

  // start from moment-style guesses
  double mean = 0.0, log_mean = 0.0;
  for (double t : times) {
    mean += t;
    log_mean += std::log(t);
  }
  mean /= static_cast<double>(times.size());
  log_mean /= static_cast<double>(times.size());
  Eigen::VectorXd theta(dim);
  switch (tag) {
    case Family::Exponential:
      theta[0] = -std::log(mean);
      break;
    case Family::Weibull:
      theta[0] = std::log(mean);
      theta[1] = 0.0;
      break;
    case Family::LogNormal: {
      double v = 0.0;
      for (double t : times) v += (std::log(t) - log_mean) * (std::log(t) - log_mean);
      v = std::max(v / static_cast<double>(times.size()), 1e-8);
      theta[0] = log_mean;
      theta[1] = 0.5 * std::log(v);
      break;
    }
  }

  // BFGS with backtracking
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(dim, dim);
  Eigen::VectorXd g = obj.grad(theta);
  double fval = obj.value(theta);
  for (int iter = 0; iter < 200 && g.norm() > 1e-8; ++iter) {
    Eigen::VectorXd dir = -hinv * g;
    if (dir.dot(g) > 0.0) dir = -g;
    double step = 1.0;
    double fnew = fval;
    Eigen::VectorXd theta_new = theta;
    for (int ls = 0; ls < 60; ++ls) {
      theta_new = theta + step * dir;
      fnew = obj.value(theta_new);
      if (std::isfinite(fnew) && fnew <= fval + 1e-4 * step * dir.dot(g)) break;
      step *= 0.5;
    }
    const Eigen::VectorXd g_new = obj.grad(theta_new);
    const Eigen::VectorXd sv = theta_new - theta;
    const Eigen::VectorXd yv = g_new - g;
    const double sy = sv.dot(yv);
    if (sy > 1e-12) {
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim, dim);
      const Eigen::MatrixXd left = eye - sv * yv.transpose() / sy;
      hinv = left * hinv * left.transpose() + sv * sv.transpose() / sy;
    }
    theta = theta_new;
    g = g_new;
    fval = fnew;
  }
  return obj.family(theta);
}

SurvivalCurve curve_from(const ParametricFamily& f, double t_max) {
  check_params(f);
  const double mean = mean_survival_param(f);
  return SurvivalCurve::parametric([f](double t) { return survival_at(f, t); }, t_max, mean);
}

std::string family_name(Family tag) {
  switch (tag) {
    case Family::LogNormal:
      return "log-normal";
    case Family::Exponential:
      return "exponential";
    case Family::Weibull:
      return "weibull";
  }
  return "?";
}

std::string family_to_json(const ParametricFamily& f) {
  nlohmann::json j;
  j["family"] = family_name(f.tag);
  if (f.tag == Family::Exponential)
    j["params"] = {f.a};
  else
    j["params"] = {f.a, f.b};
  return j.dump();
}

}  // namespace drsurv
