#pragma once

#include "owo/vec.hpp"

namespace owo {

// Slack allowed on box-membership checks; iterates land exactly on box faces
// after projection, so membership must tolerate representation error.
inline constexpr double kBoxTol = 1e-9;

// Counts safety-clamp events in utility_from_loss. With the default loss_cap
// neither clamp should ever bind; nonzero counts are reported, not fatal.
struct ClampStats {
  long long lower = 0;
  long long upper = 0;
};

// alpha-fairness family over K users: alpha = 0 is sum-utility, alpha = 1 the
// proportional-fair log limit, larger alpha leans max-min. Utilities live in
// [u_min, u_max], which induces the dual weight box W.
struct FairnessSpec {
  double alpha = 1.0;
  double u_min = 1.0;
  double u_max = 3.3;
  int num_users = 2;

  void validate() const;

  // W = [-1/u_min^alpha, -1/u_max^alpha] per coordinate; lower < upper < 0
  // for alpha > 0, both -1 at alpha = 0 (constant weights, dual loop inert).
  double dual_lower() const;
  double dual_upper() const;
  bool dual_degenerate() const { return alpha == 0.0; }
};

// F_alpha(u) = sum_k (u_k^{1-alpha} - 1)/(1-alpha), log at alpha = 1.
// Continuous in alpha at 1 via the expm1 form. Requires u_k > 0.
double alpha_fairness(const Vec& u, const FairnessSpec& spec);

// (-F_alpha)^*(w) on the dual box. The -1 constant is applied per user; the
// biconjugate identity fails for K >= 2 otherwise.
double conjugate_value(const Vec& w, const FairnessSpec& spec);

// Psi(w, u) = conjugate_value(w) - w.u; min over W recovers F_alpha(u).
double psi_value(const Vec& w, const Vec& u, const FairnessSpec& spec);

// d Psi / d w_k = (-w_k)^{-1/alpha} - u_k (limit 1 - u_k at alpha = 0)
Vec psi_dual_grad(const Vec& w, const Vec& u, const FairnessSpec& spec);

// Stationary point w_k = -u_k^{-alpha}; interior of W for interior u and the
// argmin of Psi(., u) over W.
Vec dual_minimizer(const Vec& u, const FairnessSpec& spec);

// clamp(loss_cap - loss, u_min, u_max). The upper clamp preserves concavity
// in theta; the lower clamp is a safety net counted in stats when it binds.
double utility_from_loss(double loss, double loss_cap, const FairnessSpec& spec,
                         ClampStats* stats = nullptr);

}  // namespace owo
