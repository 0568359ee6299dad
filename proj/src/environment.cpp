#include "owo/environment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "owo/rng.hpp"

namespace owo {

namespace {

constexpr std::uint64_t kParamsTag = 1;
constexpr std::uint64_t kDataTag = 2;

int block_size(int m) {
  return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m))));
}

}  // namespace

UserWaveConfig preset_sin() { return UserWaveConfig{}; }

UserWaveConfig preset_cos() {
  UserWaveConfig c;
  c.amp_mean = 0.6;
  c.amp_std = 0.5;
  c.freq_mean = 0.75;
  c.freq_std = 1.0;
  c.phase_mean = 0.7853981633974483;  // pi/4
  c.phase_std = 0.01;
  c.noise_mean = 0.05;
  c.noise_std = 0.1;
  c.cosine = true;
  return c;
}

void EnvConfig::validate() const {
  if (num_users < 1) throw std::invalid_argument("env: num_users must be >= 1");
  if (m < 1) throw std::invalid_argument("env: m must be >= 1");
  if (rounds < 1) throw std::invalid_argument("env: rounds must be >= 1");
  if (samples_per_slot < 1)
    throw std::invalid_argument("env: samples_per_slot must be >= 1");
  if (feature_dim < 1 || feature_dim > 8)
    throw std::invalid_argument("env: feature_dim must be in [1, 8]");
  if (!(trunc_sigmas > 0.0))
    throw std::invalid_argument("env: trunc_sigmas must be positive");
  if (!users.empty() && users.size() != static_cast<std::size_t>(num_users))
    throw std::invalid_argument("env: user overrides must cover every user");
}

UserWaveConfig EnvConfig::user(int k) const {
  if (!users.empty()) return users[k];
  return (k % 2 == 0) ? preset_sin() : preset_cos();
}

Vec poly_features(double tau, int dim) {
  Vec mu(dim);
  double p = 1.0;
  for (int j = 0; j < dim; ++j) {
    mu[j] = p;
    p *= tau;
  }
  return mu;
}

LossBounds loss_bounds(const EnvConfig& cfg) {
  cfg.validate();
  LossBounds b;
  // |theta' mu| <= dim for theta in [-1,1]^dim, mu entries in [0,1];
  // ||mu||_2 <= sqrt(dim)
  const double p_sup = static_cast<double>(cfg.feature_dim);
  const double mu_norm_sup = std::sqrt(static_cast<double>(cfg.feature_dim));
  for (int k = 0; k < cfg.num_users; ++k) {
    const auto u = cfg.user(k);
    const double amp_sup = std::fabs(u.amp_mean) + cfg.trunc_sigmas * u.amp_std;
    const double noise_sup =
        std::fabs(u.noise_mean) + cfg.trunc_sigmas * u.noise_std;
    const double y_sup = amp_sup + noise_sup;
    const double residual_sup = p_sup + y_sup;
    b.user_loss_sup.push_back(residual_sup * residual_sup);
    b.user_grad_sup.push_back(2.0 * residual_sup * mu_norm_sup);
  }
  b.loss_sup = *std::max_element(b.user_loss_sup.begin(), b.user_loss_sup.end());
  b.grad_sup = *std::max_element(b.user_grad_sup.begin(), b.user_grad_sup.end());
  return b;
}

KernelTaskSet::KernelTaskSet(std::vector<std::vector<Vec>> tau,
                             std::vector<std::vector<Vec>> y,
                             std::vector<bool> flip, int dim)
    : slots_(static_cast<int>(tau.size())),
      users_(tau.empty() ? 0 : static_cast<int>(tau[0].size())),
      dim_(dim),
      nsamples_(tau.empty() || tau[0].empty() ? 0
                                              : static_cast<int>(tau[0][0].size())),
      tau_(std::move(tau)),
      y_(std::move(y)),
      flip_(std::move(flip)) {
  if (slots_ < 1 || users_ < 1 || nsamples_ < 1)
    throw std::invalid_argument("task set needs at least one slot/user/sample");
  if (y_.size() != tau_.size() || flip_.size() != tau_.size())
    throw std::invalid_argument("task set arrays disagree on slot count");
  params_.resize(users_);
  build_stats();
}

KernelTaskSet KernelTaskSet::sample(int t, const EnvConfig& cfg) {
  cfg.validate();
  if (t < 1) throw std::invalid_argument("round index starts at 1");
  const int teff = cfg.frozen ? 1 : t;
  const int n = cfg.samples_per_slot;

  std::vector<UserRoundParams> params(cfg.num_users);
  for (int k = 0; k < cfg.num_users; ++k) {
    const auto uc = cfg.user(k);
    Substream ps(mix(cfg.seed ^ uc.seed_offset, kParamsTag,
                     static_cast<std::uint64_t>(teff),
                     static_cast<std::uint64_t>(k)));
    params[k].amplitude = ps.truncated_normal(uc.amp_mean, uc.amp_std, cfg.trunc_sigmas);
    params[k].frequency = ps.truncated_normal(uc.freq_mean, uc.freq_std, cfg.trunc_sigmas);
    params[k].phase = ps.truncated_normal(uc.phase_mean, uc.phase_std, cfg.trunc_sigmas);
    params[k].noise = ps.truncated_normal(uc.noise_mean, uc.noise_std, cfg.trunc_sigmas);
    params[k].cosine = uc.cosine;
  }

  std::vector<std::vector<Vec>> tau(cfg.m, std::vector<Vec>(cfg.num_users, Vec(n)));
  auto y = tau;
  for (int i = 0; i < cfg.m; ++i) {
    for (int k = 0; k < cfg.num_users; ++k) {
      const auto uc = cfg.user(k);
      Substream ds(mix(mix(cfg.seed ^ uc.seed_offset, kDataTag,
                           static_cast<std::uint64_t>(teff)),
                       static_cast<std::uint64_t>(i),
                       static_cast<std::uint64_t>(k)));
      const auto& p = params[k];
      for (int s = 0; s < n; ++s) {
        const double x = ds.uniform01();
        const double arg = p.frequency * x + p.phase;
        const double wave = p.cosine ? std::cos(arg) : std::sin(arg);
        tau[i][k][s] = x;
        y[i][k][s] = p.amplitude * wave + p.noise;
      }
    }
  }

  std::vector<bool> flip(cfg.m, false);
  if (cfg.regime == Regime::adversarial) {
    const int bsz = block_size(cfg.m);
    for (int i = 0; i < cfg.m; ++i) flip[i] = ((i / bsz) + teff) % 2 == 0;
  }

  KernelTaskSet set(std::move(tau), std::move(y), std::move(flip),
                    cfg.feature_dim);
  set.params_ = std::move(params);
  return set;
}

void KernelTaskSet::check_slot(int i, int k) const {
  if (i < 0 || i >= slots_ || k < 0 || k >= users_)
    throw std::out_of_range("slot/user index out of range: (" +
                            std::to_string(i) + ", " + std::to_string(k) + ")");
}

double KernelTaskSet::label(int i, int k, int s) const {
  check_slot(i, k);
  const double raw = y_[i][k][s];
  return (k == 0 && flip_[i]) ? -raw : raw;
}

void KernelTaskSet::build_stats() {
  S_.assign(static_cast<std::size_t>(slots_) * users_, Vec(dim_ * dim_, 0.0));
  r_.assign(static_cast<std::size_t>(slots_) * users_, Vec(dim_, 0.0));
  z_.assign(static_cast<std::size_t>(slots_) * users_, 0.0);
  for (int i = 0; i < slots_; ++i) {
    for (int k = 0; k < users_; ++k) {
      const std::size_t idx = static_cast<std::size_t>(i) * users_ + k;
      auto& S = S_[idx];
      auto& r = r_[idx];
      double& z = z_[idx];
      for (int s = 0; s < nsamples_; ++s) {
        const Vec mu = poly_features(tau_[i][k][s], dim_);
        const double yv = label(i, k, s);
        for (int a = 0; a < dim_; ++a) {
          r[a] += yv * mu[a] / nsamples_;
          for (int c = 0; c < dim_; ++c)
            S[a * dim_ + c] += mu[a] * mu[c] / nsamples_;
        }
        z += yv * yv / nsamples_;
      }
    }
  }
}

SlotEval KernelTaskSet::evaluate(const Vec& theta, int i, int k) const {
  SlotEval ev;
  evaluate_into(theta, i, k, ev);
  return ev;
}

void KernelTaskSet::evaluate_into(const Vec& theta, int i, int k,
                                  SlotEval& ev) const {
  check_slot(i, k);
  if (theta.size() != static_cast<std::size_t>(dim_))
    throw std::invalid_argument("evaluate: model dimension mismatch");
  const std::size_t idx = static_cast<std::size_t>(i) * users_ + k;
  const auto& S = S_[idx];
  const auto& r = r_[idx];
  ev.grad.assign(dim_, 0.0);
  double quad = 0.0;
  for (int a = 0; a < dim_; ++a) {
    double Sa = 0.0;
    for (int c = 0; c < dim_; ++c) Sa += S[a * dim_ + c] * theta[c];
    quad += theta[a] * Sa;
    ev.grad[a] = 2.0 * (Sa - r[a]);
  }
  // analytically >= 0; guard the cancellation at near-perfect fits
  ev.loss = std::max(quad - 2.0 * dot(r, theta) + z_[idx], 0.0);
}

double KernelTaskSet::loss_at(const Vec& theta, int i, int k) const {
  check_slot(i, k);
  if (theta.size() != static_cast<std::size_t>(dim_))
    throw std::invalid_argument("evaluate: model dimension mismatch");
  const std::size_t idx = static_cast<std::size_t>(i) * users_ + k;
  const auto& S = S_[idx];
  const auto& r = r_[idx];
  double quad = 0.0;
  for (int a = 0; a < dim_; ++a) {
    double Sa = 0.0;
    for (int c = 0; c < dim_; ++c) Sa += S[a * dim_ + c] * theta[c];
    quad += theta[a] * Sa;
  }
  return std::max(quad - 2.0 * dot(r, theta) + z_[idx], 0.0);
}

KernelEnvironment::KernelEnvironment(EnvConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
}

std::unique_ptr<RoundTasks> KernelEnvironment::round(int t) const {
  return std::make_unique<KernelTaskSet>(KernelTaskSet::sample(t, cfg_));
}

}  // namespace owo
