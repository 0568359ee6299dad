#pragma once

#include "owo/engine.hpp"

namespace owo {

enum class BaselineKind { srl, cws };

struct BaselineSpec {
  BaselineKind kind = BaselineKind::srl;
  Vec cws_weights;            // must lie in the dual box
  bool cws_outer_loop = true;  // keeping it isolates the weighting effect
};

// Single-round learning: every round restarts from x_1; the dual loop still
// runs. Identical environment realizations to run_horizon for equal seeds.
HorizonTrace run_srl(const EngineConfig& cfg, const Environment& env);

// Constant weighting: the inner loop uses w_bar verbatim, no dual updates;
// the outer loop stays on unless disabled. Rejects weights outside the box.
HorizonTrace run_cws(const EngineConfig& cfg, const Environment& env,
                     const Vec& w_bar, bool outer_loop = true);

HorizonTrace run_baseline(const EngineConfig& cfg, const Environment& env,
                          const BaselineSpec& baseline);

}  // namespace owo
