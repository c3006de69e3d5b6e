#pragma once

#include <cstdint>

#include "intel_latent/tape.hpp"

namespace intel_latent::diff {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  NamedTensors m;
  NamedTensors v;
  std::uint64_t t = 0;
};

/// One bias-corrected Adam descent step on every tensor in `params`.
/// Parameters missing from `grads` see a zero gradient; gradient entries
/// for names not in `params` (e.g. data inputs) are ignored. Throws
/// NumericError on a non-finite gradient, leaving params and state intact.
void adam_step(AdamState& state, NamedTensors& params, const NamedTensors& grads);

}  // namespace intel_latent::diff
