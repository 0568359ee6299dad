#pragma once

#include "owo/fairness.hpp"
#include "owo/vec.hpp"

namespace owo {

// Axis-aligned box; the only feasible-set shape in the scheme (model domain
// Theta, initialization domain X, dual weight box W).
struct BoxDomain {
  Vec lower;
  Vec upper;

  static BoxDomain cube(double lo, double hi, int dim);

  int dim() const { return static_cast<int>(lower.size()); }
  double diameter() const;  // Euclidean length of the main diagonal
  Vec project(const Vec& v) const;
  bool contains(const Vec& v, double tol = kBoxTol) const;
  Vec midpoint() const;
  void validate() const;
};

// W as a BoxDomain over the K users
BoxDomain dual_box(const FairnessSpec& spec);

// G_W = sqrt(K) max{1/u_min^{1/alpha} - u_min, u_max - 1/u_max^{1/alpha}},
// the stated dual gradient bound. At alpha = 0 the gradient is exactly
// 1 - u_k, so the bound becomes sqrt(K) max{1 - u_min, u_max - 1}.
double dual_grad_bound(const FairnessSpec& spec);

// The three rates of the scheme. eta is fixed within a horizon; beta decays
// over rounds t, gamma decays over inner slots j.
struct StepSchedule {
  double eta = 0.0;
  double g_theta = 0.0;
  double g_w = 0.0;
  double d_star = 0.0;
  double d_theta = 0.0;
  int m = 1;
  double alpha = 1.0;
  double u_min = 1.0;
  // exponent e in gamma_j = alpha / (u_min^e j); 1 + 1/alpha as printed
  double gamma_exponent = 2.0;

  double beta(int t) const;
  double gamma(int j) const;

  // The printed dual rate is provably valid iff u_min^e <= u_min^{1+alpha}
  // (the conjugate's true strong-convexity modulus over W is
  // u_min^{1+alpha}/alpha). Always true at alpha = 1 or u_min = 1; the dual
  // regret check is enforced only when this holds.
  bool dual_rate_valid() const;
};

// eta = d_star / (g_theta sqrt(m)); gamma_exponent < 0 selects the default
// 1 + 1/alpha.
StepSchedule make_schedule(const FairnessSpec& spec, const BoxDomain& theta_dom,
                           double d_star, double g_theta, int m,
                           double gamma_exponent = -1.0);

// ascent: Pi_dom(theta + eta g). With g = sum_k w_k grad-loss_k and w_k < 0
// this descends the weighted loss.
Vec primal_step(const Vec& theta, const Vec& g, double eta, const BoxDomain& dom);

// descent: Pi_W(w - gamma g)
Vec dual_step(const Vec& w, const Vec& g, double gamma, const BoxDomain& dualbox);

// Pi_dom(x - beta (x - theta_star)/eta); with beta = eta/t this is the
// running mean of the round benchmarks when the projection is inactive.
Vec outer_step(const Vec& x, const Vec& theta_star, double eta, double beta,
               const BoxDomain& dom);

}  // namespace owo
