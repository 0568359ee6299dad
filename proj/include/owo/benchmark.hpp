#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "owo/environment.hpp"
#include "owo/fairness.hpp"
#include "owo/oco.hpp"

namespace owo {

struct SolverConfig {
  double tolerance = 1e-8;  // projected-gradient-mapping norm target
  long long max_iterations = 200000;
  int grid_resolution = 400;
  // ascent restarts over a fixed low-discrepancy start set; the clamped
  // objective is only piecewise concave, so one basin is not enough
  int restarts = 8;

  void validate() const;
};

struct BenchmarkResult {
  Vec theta_star;
  double objective = 0.0;  // F_alpha of the round-mean utilities at theta_star
  double mapping_norm = 0.0;
  long long iterations = 0;
  // nondecreasing by construction; kept for the monotonicity check
  std::vector<double> objective_trace;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& msg, BenchmarkResult best)
      : std::runtime_error(msg), best_(std::move(best)) {}
  const BenchmarkResult& best() const { return best_; }

 private:
  BenchmarkResult best_;
};

struct RoundFairnessEval {
  double value = 0.0;
  Vec grad;   // filled only when requested
  Vec u_bar;  // round-mean clamped utilities per user
};

// G(theta) = F_alpha((1/m) sum_i u_i(theta)); gradient via the chain rule
// sum_k u_bar_k^{-alpha} grad u_bar_k, with zero subgradient through clamped
// slots (the lower clamp is expected never to bind at default loss_cap).
RoundFairnessEval eval_round_fairness(const RoundTasks& tasks,
                                      const FairnessSpec& spec, double loss_cap,
                                      const Vec& theta, bool want_grad);

// Projected gradient ascent with Barzilai-Borwein trial steps safeguarded by
// backtracking; the kept objective trace is monotone. Runs from the box
// midpoint plus a Weyl-spread start set and keeps the best converged run.
// If no start reaches the mapping tolerance, throws SolverError carrying the
// best iterate seen.
BenchmarkResult solve_round_benchmark(const RoundTasks& tasks,
                                      const FairnessSpec& spec, double loss_cap,
                                      const BoxDomain& theta_dom,
                                      const SolverConfig& solver = {});

// U_t(x) = ||x - theta_star||^2 / (2 eta) + eta G_theta^2 m / 2, the
// per-round inner-regret surrogate the outer loop minimizes
double u_t_value(const Vec& x, const Vec& theta_star, const StepSchedule& s);

struct InitializationResult {
  Vec x_star;
  double total_u = 0.0;  // sum of U_t at x_star
};

// U_t is quadratic in x, so x* = Pi_X(mean of round benchmarks)
InitializationResult best_initialization(const std::vector<Vec>& benchmarks,
                                         const StepSchedule& schedule,
                                         const BoxDomain& x_dom);

struct GridResult {
  Vec argmax;
  double value = 0.0;
};

// exhaustive endpoint-inclusive grid, d <= 2; test-only oracle
GridResult grid_oracle(const std::function<double(const Vec&)>& objective,
                       const BoxDomain& dom, int resolution);

}  // namespace owo
