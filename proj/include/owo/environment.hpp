#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "owo/vec.hpp"

namespace owo {

struct SlotEval {
  double loss = 0.0;
  Vec grad;
};

// One round's task data, closed over its samples: any slot is re-evaluable at
// an arbitrary model after the fact (the round benchmark and the regret
// comparator both need this).
class RoundTasks {
 public:
  virtual ~RoundTasks() = default;
  virtual int slots() const = 0;
  virtual int users() const = 0;
  virtual int dim() const = 0;
  virtual SlotEval evaluate(const Vec& theta, int i, int k) const = 0;

  // allocation-free paths for the benchmark solver, which evaluates the same
  // round tens of thousands of times; overrides must match evaluate bit for
  // bit
  virtual double loss_at(const Vec& theta, int i, int k) const {
    return evaluate(theta, i, k).loss;
  }
  virtual void evaluate_into(const Vec& theta, int i, int k, SlotEval& ev) const {
    ev = evaluate(theta, i, k);
  }
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::unique_ptr<RoundTasks> round(int t) const = 0;
  virtual int slots() const = 0;
  virtual int users() const = 0;
  virtual int dim() const = 0;
};

enum class Regime { stochastic, adversarial };

// Per-user sinusoid distribution; all Gaussians are (mean, stddev), truncated
// at +-trunc_sigmas by clamping so data support stays bounded.
struct UserWaveConfig {
  double amp_mean = 1.0;
  double amp_std = 0.2;
  double freq_mean = 1.0;
  double freq_std = 1.0;
  double phase_mean = 1.0471975511965977;  // pi/3
  double phase_std = 0.01;
  double noise_mean = 0.05;
  double noise_std = 0.1;
  bool cosine = false;
  std::uint64_t seed_offset = 0;
};

// the two stock users: sine wave and cosine wave
UserWaveConfig preset_sin();
UserWaveConfig preset_cos();

struct EnvConfig {
  Regime regime = Regime::stochastic;
  int num_users = 2;
  int m = 32;
  int rounds = 512;
  int samples_per_slot = 1;
  int feature_dim = 4;
  bool frozen = false;  // reuse round 1's data for every round
  double trunc_sigmas = 3.0;
  std::uint64_t seed = 1;
  // empty: cycle the presets (even users sine, odd users cosine)
  std::vector<UserWaveConfig> users;

  void validate() const;
  UserWaveConfig user(int k) const;
};

// Analytic sups over Theta x data support; conservative and provable, feeding
// loss_cap and G_theta defaults.
struct LossBounds {
  double loss_sup = 0.0;
  double grad_sup = 0.0;
  std::vector<double> user_loss_sup;
  std::vector<double> user_grad_sup;
};

LossBounds loss_bounds(const EnvConfig& cfg);

// mu(tau) = [1, tau, tau^2, ...] truncated to dim entries
Vec poly_features(double tau, int dim);

// Parameters actually drawn for one (round, user); noise is per round, not
// per slot.
struct UserRoundParams {
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
  double noise = 0.0;
  bool cosine = false;
};

class KernelTaskSet : public RoundTasks {
 public:
  // raw-data constructor for tests: tau[i][k] and y[i][k] hold the n samples
  // of slot i, user k; flip negates user 0's labels on marked slots
  KernelTaskSet(std::vector<std::vector<Vec>> tau,
                std::vector<std::vector<Vec>> y, std::vector<bool> flip,
                int dim);

  static KernelTaskSet sample(int t, const EnvConfig& cfg);

  int slots() const override { return slots_; }
  int users() const override { return users_; }
  int dim() const override { return dim_; }
  SlotEval evaluate(const Vec& theta, int i, int k) const override;
  double loss_at(const Vec& theta, int i, int k) const override;
  void evaluate_into(const Vec& theta, int i, int k, SlotEval& ev) const override;

  double input(int i, int k, int s) const { return tau_[i][k][s]; }
  // label after any adversarial flip, as the learner sees it
  double label(int i, int k, int s) const;
  bool flipped(int i) const { return flip_[i]; }
  const std::vector<UserRoundParams>& params() const { return params_; }

 private:
  void check_slot(int i, int k) const;
  void build_stats();

  int slots_, users_, dim_, nsamples_;
  std::vector<std::vector<Vec>> tau_, y_;  // y_ holds pre-flip labels
  std::vector<bool> flip_;
  std::vector<UserRoundParams> params_;
  // per (slot, user) quadratic loss stats: loss = th'S th - 2 r'th + z
  std::vector<Vec> S_, r_;
  std::vector<double> z_;
};

class KernelEnvironment : public Environment {
 public:
  explicit KernelEnvironment(EnvConfig cfg);

  std::unique_ptr<RoundTasks> round(int t) const override;
  int slots() const override { return cfg_.m; }
  int users() const override { return cfg_.num_users; }
  int dim() const override { return cfg_.feature_dim; }
  const EnvConfig& config() const { return cfg_; }

 private:
  EnvConfig cfg_;
};

}  // namespace owo
