#pragma once

#include <optional>
#include <vector>

#include "owo/benchmark.hpp"
#include "owo/environment.hpp"
#include "owo/fairness.hpp"
#include "owo/oco.hpp"

namespace owo {

// Feedback for one slot. loss_grads live only within the slot that produced
// them; traces never store per-user gradients.
struct SlotFeedback {
  int t = 0;
  int i = 0;
  Vec losses;
  Vec utilities;
  std::vector<Vec> loss_grads;
};

// sum_k w_k grad-loss_k for one slot
Vec weighted_primal_gradient(const Vec& w, const std::vector<Vec>& loss_grads);

// Per-round record. Per-slot data lives in flat arrays (slot-major); none of
// it is per-user gradient storage, keeping the trace O(m (d + K)).
struct RoundTrace {
  int t = 0;
  int m = 0;
  int users = 0;
  int dim = 0;
  Vec x_t;

  Vec thetas;         // m*dim, model held entering each slot
  Vec weights;        // m*users, weights held entering each slot
  Vec losses;         // m*users
  Vec utilities;      // m*users
  Vec slot_fairness;  // m, F_alpha of the slot's utilities
  Vec slot_psi;       // m, Psi at the slot's (w, u)

  Vec u_bar_traj;  // per user, round-mean utilities along the trajectory
  Vec u_bar_star;  // per user, round-mean utilities at theta_star
  double fair_traj = 0.0;
  double fair_star = 0.0;
  double raf_gap = 0.0;  // fair_star - fair_traj

  // primal regret against theta_star, dual regret against the best fixed w
  double r_theta = 0.0;
  double r_w = 0.0;
  double u_t_value = 0.0;  // U_t(x_t)
  double residual = 0.0;   // (1/m) sum_i (w_i - w_bar)' u_i(theta_star)

  Vec theta_star;
  bool benchmark_solved = false;
  double benchmark_objective = 0.0;
  double benchmark_mapping_norm = 0.0;
  long long benchmark_iterations = 0;

  Vec theta_at(int i) const;
  Vec weights_at(int i) const;
  Vec utilities_at(int i) const;
  Vec losses_at(int i) const;
};

// Runtime honesty monitor: the theorem bound checks are meaningless if an
// observed gradient ever exceeds the constants they were computed from.
struct MonitorStats {
  double g_theta_limit = 0.0;
  double g_w_limit = 0.0;
  double max_primal_grad_norm = 0.0;
  double max_dual_grad_norm = 0.0;
  double max_loss = 0.0;
  bool fired = false;  // primal gradient norm exceeded g_theta_limit
  bool dual_fired = false;
};

enum class UpdateOrder { dual_then_primal, primal_then_dual };

struct EnginePolicy {
  bool outer_updates = true;
  bool dual_updates = true;
  // fixed weights replace the dual loop entirely (constant weighting)
  std::optional<Vec> fixed_weights;
  bool dual_warm_start = false;  // carry w across rounds, no guarantees
  UpdateOrder order = UpdateOrder::dual_then_primal;
};

struct EngineConfig {
  FairnessSpec spec;
  double loss_cap = 0.0;
  StepSchedule schedule;
  BoxDomain theta_dom;
  BoxDomain x_dom;
  SolverConfig solver;
  EnginePolicy policy;
  int rounds = 1;

  void validate(const Environment& env) const;
};

struct HorizonTrace {
  std::vector<RoundTrace> rounds;
  std::vector<Vec> x_seq;  // x_1 .. x_{T+1}
  Vec x_star;
  double x_star_total_u = 0.0;
  double outer_regret = 0.0;  // sum_t U_t(x_t) - sum_t U_t(x_star)
  double raf_regret_value = 0.0;
  double theorem_bound = 0.0;
  double residual_avg = 0.0;
  ClampStats clamps;
  MonitorStats monitor;
};

// One inner loop: play m slots from x_t, then solve the round benchmark and
// fill in the regret decomposition. dual_state carries warm-started weights
// across rounds when the policy asks for it. SolverError propagates.
RoundTrace run_round(int t, const Vec& x_t, const RoundTasks& tasks,
                     const EngineConfig& cfg, Vec& dual_state,
                     ClampStats& clamps, MonitorStats& monitor);

// Full horizon: T rounds plus the outer recursion and hindsight aggregates.
// Deterministic given the environment config.
HorizonTrace run_horizon(const EngineConfig& cfg, const Environment& env);

// (1/T) sum_t [F(u_bar at theta_star) - F(u_bar along the trajectory)],
// recomputed from the stored round means; throws if any benchmark is unsolved
double raf_regret(const HorizonTrace& trace, const FairnessSpec& spec);

// [G D* + (G D^2/(2 D*)) (1+ln T)/T]/sqrt(m)
//   + (G_W^2 alpha/(2 u_min^{1+1/alpha})) (1+ln m)/m, natural logs;
// the dual term vanishes at alpha = 0
double theorem1_bound(const StepSchedule& schedule, const FairnessSpec& spec,
                      int m, int T);

// Numerical evaluation of the per-round proof-chain inequalities.
struct ChainReport {
  double r_theta = 0.0;  // (a) lhs
  double u_t = 0.0;      // (a) rhs
  bool a_holds = false;
  double r_w = 0.0;      // (b) lhs
  double dual_rhs = 0.0;
  bool b_holds = false;
  bool b_enforced = false;  // printed dual rate provably valid and dual ran
  double assembled_lhs = 0.0;  // (c) raf gap
  double assembled_rhs = 0.0;  // U_t/m + r_w/m + residual
  bool c_holds = false;
  double residual = 0.0;
};

ChainReport appendix_chain_check(const RoundTrace& rt, const FairnessSpec& spec,
                                 const StepSchedule& schedule,
                                 bool dual_updates_ran);

}  // namespace owo
