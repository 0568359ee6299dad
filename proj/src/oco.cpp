#include "owo/oco.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace owo {

BoxDomain BoxDomain::cube(double lo, double hi, int dim) {
  BoxDomain b{Vec(dim, lo), Vec(dim, hi)};
  b.validate();
  return b;
}

void BoxDomain::validate() const {
  if (lower.size() != upper.size() || lower.empty())
    throw std::invalid_argument("box bounds must be nonempty and same-size");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i]))
      throw std::invalid_argument("box needs lower <= upper per coordinate");
  }
}

double BoxDomain::diameter() const {
  double s = 0.0;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    const double d = upper[i] - lower[i];
    s += d * d;
  }
  return std::sqrt(s);
}

Vec BoxDomain::project(const Vec& v) const {
  if (v.size() != lower.size())
    throw std::invalid_argument("project: dimension mismatch");
  if (has_nan(v)) throw std::invalid_argument("project: NaN input");
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = std::clamp(v[i], lower[i], upper[i]);
  return out;
}

bool BoxDomain::contains(const Vec& v, double tol) const {
  if (v.size() != lower.size()) return false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double slack =
        tol * std::max({1.0, std::fabs(lower[i]), std::fabs(upper[i])});
    if (!(v[i] >= lower[i] - slack && v[i] <= upper[i] + slack)) return false;
  }
  return true;
}

Vec BoxDomain::midpoint() const {
  Vec mid(lower.size());
  for (std::size_t i = 0; i < lower.size(); ++i)
    mid[i] = 0.5 * (lower[i] + upper[i]);
  return mid;
}

BoxDomain dual_box(const FairnessSpec& spec) {
  spec.validate();
  return BoxDomain{Vec(spec.num_users, spec.dual_lower()),
                   Vec(spec.num_users, spec.dual_upper())};
}

double dual_grad_bound(const FairnessSpec& spec) {
  spec.validate();
  const double rootk = std::sqrt(static_cast<double>(spec.num_users));
  if (spec.alpha == 0.0)
    return rootk * std::max(1.0 - spec.u_min, spec.u_max - 1.0);
  const double a = std::pow(spec.u_min, -1.0 / spec.alpha) - spec.u_min;
  const double b = spec.u_max - std::pow(spec.u_max, -1.0 / spec.alpha);
  return rootk * std::max(a, b);
}

double StepSchedule::beta(int t) const {
  if (t < 1) throw std::invalid_argument("beta: round index starts at 1");
  return eta / t;
}

double StepSchedule::gamma(int j) const {
  if (j < 1) throw std::invalid_argument("gamma: slot index starts at 1");
  if (alpha == 0.0) return 0.0;  // dual box is a point, steps are no-ops
  return alpha / (std::pow(u_min, gamma_exponent) * j);
}

bool StepSchedule::dual_rate_valid() const {
  if (alpha == 0.0) return true;  // vacuous, no dual motion
  const double printed = std::pow(u_min, gamma_exponent);
  const double modulus = std::pow(u_min, 1.0 + alpha);
  return printed <= modulus * (1.0 + 1e-12);
}

StepSchedule make_schedule(const FairnessSpec& spec, const BoxDomain& theta_dom,
                           double d_star, double g_theta, int m,
                           double gamma_exponent) {
  spec.validate();
  theta_dom.validate();
  if (!(d_star > 0.0) || !(g_theta > 0.0) || m < 1)
    throw std::invalid_argument("make_schedule: d_star, g_theta, m must be positive");
  StepSchedule s;
  s.g_theta = g_theta;
  s.d_star = d_star;
  s.d_theta = theta_dom.diameter();
  s.m = m;
  s.alpha = spec.alpha;
  s.u_min = spec.u_min;
  s.eta = d_star / (g_theta * std::sqrt(static_cast<double>(m)));
  s.g_w = dual_grad_bound(spec);
  s.gamma_exponent = gamma_exponent < 0.0
                         ? (spec.alpha == 0.0 ? 1.0 : 1.0 + 1.0 / spec.alpha)
                         : gamma_exponent;
  return s;
}

Vec primal_step(const Vec& theta, const Vec& g, double eta, const BoxDomain& dom) {
  Vec next = theta;
  axpy(eta, g, next);
  return dom.project(next);
}

Vec dual_step(const Vec& w, const Vec& g, double gamma, const BoxDomain& dualbox) {
  Vec next = w;
  axpy(-gamma, g, next);
  return dualbox.project(next);
}

Vec outer_step(const Vec& x, const Vec& theta_star, double eta, double beta,
               const BoxDomain& dom) {
  // g^x = (x - theta_star)/eta
  Vec next = x;
  const double step = beta / eta;
  for (std::size_t i = 0; i < x.size(); ++i)
    next[i] = x[i] - step * (x[i] - theta_star[i]);
  return dom.project(next);
}

}  // namespace owo
