#include "drsurv/curve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace drsurv {

namespace {

double step_eval(const std::vector<double>& knots, const std::vector<double>& values, double level0, double t) {
  auto it = std::upper_bound(knots.begin(), knots.end(), t);
  if (it == knots.begin()) return level0;
  return values[static_cast<std::size_t>(it - knots.begin() - 1)];
}

/// Exact integral of a right-continuous step function over [0, horizon].
double step_integral(const std::vector<double>& knots, const std::vector<double>& values, double level0,
                     double horizon) {
  double acc = 0.0, prev_t = 0.0, prev_v = level0;
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const double t = std::max(knots[i], 0.0);
    if (t >= horizon) {
      acc += prev_v * (horizon - prev_t);
      return acc;
    }
    acc += prev_v * (t - prev_t);
    prev_t = t;
    prev_v = values[i];
  }
  acc += prev_v * (horizon - prev_t);
  return acc;
}

double simpson(const std::function<double(double)>& f, double a, double fa, double m, double fm, double b,
               double fb, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (b <= a) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, fa, m, fm, b, fb, whole, tol, 48);
}

SurvivalCurve SurvivalCurve::step(std::vector<double> knots, std::vector<double> values, double s0) {
  if (knots.size() != values.size()) throw std::invalid_argument("survival curve: knot/value length mismatch");
  if (!(s0 >= 0.0 && s0 <= 1.0)) throw std::domain_error("survival curve: S(0) outside [0,1]");
  double prev_t = -std::numeric_limits<double>::infinity(), prev_v = s0;
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!(knots[i] > prev_t)) throw std::invalid_argument("survival curve: knots not strictly increasing");
    if (!(values[i] >= -1e-12 && values[i] <= 1.0 + 1e-12))
      throw std::domain_error("survival curve: value outside [0,1]");
    if (values[i] > prev_v + 1e-12) throw std::domain_error("survival curve: values increase");
    prev_t = knots[i];
    prev_v = values[i];
  }
  for (auto& v : values) v = std::clamp(v, 0.0, 1.0);
  SurvivalCurve c;
  c.knots_ = std::move(knots);
  c.values_ = std::move(values);
  c.s0_ = s0;
  c.t_max_ = c.knots_.empty() ? 0.0 : c.knots_.back();
  return c;
}

SurvivalCurve SurvivalCurve::parametric(std::function<double(double)> fn, double t_max,
                                        std::optional<double> analytic_mean) {
  if (!fn) throw std::invalid_argument("survival curve: null function");
  SurvivalCurve c;
  c.fn_ = std::move(fn);
  c.t_max_ = t_max;
  c.analytic_mean_ = analytic_mean;
  return c;
}

double SurvivalCurve::operator()(double t) const {
  if (t < 0.0) throw std::invalid_argument("survival curve: negative time");
  if (fn_) return fn_(t);
  return step_eval(knots_, values_, s0_, t);
}

std::string SurvivalCurve::to_csv() const {
  std::string out = "time,survival\n";
  char buf[64];
  auto row = [&](double t, double s) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g\n", t, s);
    out += buf;
  };
  if (is_step()) {
    row(0.0, s0_);
    for (std::size_t i = 0; i < knots_.size(); ++i) row(knots_[i], values_[i]);
  } else {
    const int n = 200;
    for (int i = 0; i <= n; ++i) {
      const double t = t_max_ * i / n;
      row(t, fn_(t));
    }
  }
  return out;
}

CumulativeHazard CumulativeHazard::step(std::vector<double> knots, std::vector<double> values, double h0) {
  if (knots.size() != values.size()) throw std::invalid_argument("cumhaz: knot/value length mismatch");
  if (!(h0 >= 0.0)) throw std::domain_error("cumhaz: negative initial value");
  double prev_t = -std::numeric_limits<double>::infinity(), prev_v = h0;
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!(knots[i] > prev_t)) throw std::invalid_argument("cumhaz: knots not strictly increasing");
    if (values[i] < 0.0) throw std::domain_error("cumhaz: negative value");
    if (values[i] < prev_v - 1e-12) throw std::domain_error("cumhaz: values decrease");
    prev_t = knots[i];
    prev_v = values[i];
  }
  CumulativeHazard h;
  h.knots_ = std::move(knots);
  h.values_ = std::move(values);
  h.h0_ = h0;
  h.t_max_ = h.knots_.empty() ? 0.0 : h.knots_.back();
  return h;
}

CumulativeHazard CumulativeHazard::parametric(std::function<double(double)> fn, double t_max) {
  if (!fn) throw std::invalid_argument("cumhaz: null function");
  CumulativeHazard h;
  h.fn_ = std::move(fn);
  h.t_max_ = t_max;
  return h;
}

double CumulativeHazard::operator()(double t) const {
  if (t < 0.0) throw std::invalid_argument("cumhaz: negative time");
  if (fn_) return fn_(t);
  return step_eval(knots_, values_, h0_, t);
}

SurvivalCurve survival_from_cumhaz(const CumulativeHazard& h) {
  if (h.is_step()) {
    std::vector<double> vals(h.values().size());
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = std::exp(-h.values()[i]);
    return SurvivalCurve::step(h.knots(), std::move(vals), std::exp(-h.initial_value()));
  }
  auto fn = [h](double t) { return std::exp(-h(t)); };
  return SurvivalCurve::parametric(fn, h.t_max());
}

CumulativeHazard hazard_from_survival(const SurvivalCurve& s) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (s.is_step()) {
    std::vector<double> vals(s.values().size());
    for (std::size_t i = 0; i < vals.size(); ++i)
      vals[i] = s.values()[i] > 0.0 ? -std::log(s.values()[i]) : kInf;
    const double h0 = s.initial_value() > 0.0 ? -std::log(s.initial_value()) : kInf;
    return CumulativeHazard::step(s.knots(), std::move(vals), h0);
  }
  auto fn = [s](double t) {
    const double v = s(t);
    return v > 0.0 ? -std::log(v) : kInf;
  };
  return CumulativeHazard::parametric(fn, s.t_max());
}

MeanResult mean_survival(const SurvivalCurve& s, double tail_threshold) {
  MeanResult out;
  if (s.is_step()) {
    const double end = s.knots().empty() ? 0.0 : s.knots().back();
    out.value = step_integral(s.knots(), s.values(), s.initial_value(), end);
    const double tail = s.knots().empty() ? s.initial_value() : s.values().back();
    out.truncated = tail > tail_threshold;
    return out;
  }
  if (s.analytic_mean()) {
    out.value = *s.analytic_mean();
    return out;
  }
  out.value = integrate([&s](double t) { return s(t); }, 0.0, s.t_max());
  out.truncated = s(s.t_max()) > tail_threshold;
  return out;
}

double rmst(const SurvivalCurve& s, double horizon) {
  if (horizon < 0.0) throw std::invalid_argument("rmst: negative horizon");
  if (horizon == 0.0) return 0.0;
  if (s.is_step()) return step_integral(s.knots(), s.values(), s.initial_value(), horizon);
  return integrate([&s](double t) { return s(t); }, 0.0, horizon);
}

}  // namespace drsurv
