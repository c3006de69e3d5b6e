#pragma once

#include <string>
#include <vector>

#include "intel_latent/tape.hpp"

namespace intel_latent::diff {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_leaf;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compare backward() against central differences for every element of
/// every leaf named in `wrt` (all bound leaves when empty). Relative error
/// is |a - n| / max(|a|, |n|, 1e-8). The output must be a single scalar.
GradCheckResult finite_diff_check(Tape& tape, Node output, const NamedTensors& bindings,
                                  double h, const std::vector<std::string>& wrt = {});

}  // namespace intel_latent::diff
