#include "owo/fairness.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace owo {

namespace {

void check_users(const Vec& v, const FairnessSpec& spec, const char* what) {
  if (v.size() != static_cast<std::size_t>(spec.num_users))
    throw std::invalid_argument(std::string(what) + ": expected " +
                                std::to_string(spec.num_users) + " entries, got " +
                                std::to_string(v.size()));
}

void check_dual_box(const Vec& w, const FairnessSpec& spec) {
  const double lo = spec.dual_lower();
  const double hi = spec.dual_upper();
  const double tol = kBoxTol * std::max(1.0, -lo);
  for (double wk : w) {
    if (!(wk >= lo - tol && wk <= hi + tol))
      throw std::domain_error("dual weight " + std::to_string(wk) +
                              " outside box [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");
  }
}

void check_utility_box(const Vec& u, const FairnessSpec& spec) {
  const double tol = kBoxTol * std::max(1.0, spec.u_max);
  for (double uk : u) {
    if (!(uk >= spec.u_min - tol && uk <= spec.u_max + tol))
      throw std::domain_error("utility " + std::to_string(uk) +
                              " outside box [" + std::to_string(spec.u_min) +
                              ", " + std::to_string(spec.u_max) + "]");
  }
}

}  // namespace

void FairnessSpec::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("alpha must be a finite nonnegative real");
  if (!(u_min > 0.0) || !(u_min < u_max) || !std::isfinite(u_max))
    throw std::invalid_argument("utility bounds need 0 < u_min < u_max");
  if (num_users < 1) throw std::invalid_argument("num_users must be >= 1");
}

double FairnessSpec::dual_lower() const { return -std::pow(u_min, -alpha); }

double FairnessSpec::dual_upper() const { return -std::pow(u_max, -alpha); }

double alpha_fairness(const Vec& u, const FairnessSpec& spec) {
  check_users(u, spec, "alpha_fairness");
  double f = 0.0;
  for (double uk : u) {
    if (!(uk > 0.0)) throw std::domain_error("alpha_fairness: utility must be positive");
    if (spec.alpha == 1.0) {
      f += std::log(uk);
    } else {
      // expm1 keeps the alpha -> 1 limit continuous
      f += std::expm1((1.0 - spec.alpha) * std::log(uk)) / (1.0 - spec.alpha);
    }
  }
  return f;
}

double conjugate_value(const Vec& w, const FairnessSpec& spec) {
  check_users(w, spec, "conjugate_value");
  check_dual_box(w, spec);
  double c = 0.0;
  for (double wk : w) {
    const double s = -wk;
    if (spec.alpha == 0.0) {
      // box is the point w = -1; the conjugate limit is -1 per user
      c += -1.0;
    } else if (spec.alpha == 1.0) {
      c += -std::log(s) - 1.0;
    } else {
      // [alpha s^{1-1/alpha} - 1]/(1-alpha), rearranged through expm1
      const double p = 1.0 - 1.0 / spec.alpha;
      c += spec.alpha * std::expm1(p * std::log(s)) / (1.0 - spec.alpha) - 1.0;
    }
  }
  return c;
}

double psi_value(const Vec& w, const Vec& u, const FairnessSpec& spec) {
  check_users(u, spec, "psi_value");
  check_utility_box(u, spec);
  return conjugate_value(w, spec) - dot(w, u);
}

Vec psi_dual_grad(const Vec& w, const Vec& u, const FairnessSpec& spec) {
  check_users(w, spec, "psi_dual_grad");
  check_users(u, spec, "psi_dual_grad");
  check_dual_box(w, spec);
  Vec g(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double s = -w[k];
    const double inv = spec.alpha == 0.0 ? 1.0 : std::pow(s, -1.0 / spec.alpha);
    g[k] = inv - u[k];
  }
  return g;
}

Vec dual_minimizer(const Vec& u, const FairnessSpec& spec) {
  check_users(u, spec, "dual_minimizer");
  check_utility_box(u, spec);
  Vec w(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) w[k] = -std::pow(u[k], -spec.alpha);
  return w;
}

double utility_from_loss(double loss, double loss_cap, const FairnessSpec& spec,
                         ClampStats* stats) {
  if (!(loss >= 0.0))
    throw std::domain_error("utility_from_loss: loss must be nonnegative");
  const double v = loss_cap - loss;
  if (v < spec.u_min) {
    if (stats) ++stats->lower;
    return spec.u_min;
  }
  if (v > spec.u_max) {
    if (stats) ++stats->upper;
    return spec.u_max;
  }
  return v;
}

}  // namespace owo
