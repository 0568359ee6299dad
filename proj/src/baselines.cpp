#include "owo/baselines.hpp"

#include <stdexcept>

namespace owo {

HorizonTrace run_srl(const EngineConfig& cfg, const Environment& env) {
  EngineConfig c = cfg;
  c.policy.outer_updates = false;
  c.policy.dual_updates = true;
  c.policy.fixed_weights.reset();
  return run_horizon(c, env);
}

HorizonTrace run_cws(const EngineConfig& cfg, const Environment& env,
                     const Vec& w_bar, bool outer_loop) {
  EngineConfig c = cfg;
  c.policy.outer_updates = outer_loop;
  c.policy.dual_updates = false;
  c.policy.fixed_weights = w_bar;
  return run_horizon(c, env);
}

HorizonTrace run_baseline(const EngineConfig& cfg, const Environment& env,
                          const BaselineSpec& baseline) {
  switch (baseline.kind) {
    case BaselineKind::srl:
      return run_srl(cfg, env);
    case BaselineKind::cws:
      return run_cws(cfg, env, baseline.cws_weights, baseline.cws_outer_loop);
  }
  throw std::invalid_argument("run_baseline: unknown kind");
}

}  // namespace owo
