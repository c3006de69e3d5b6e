#include "intel_latent/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "intel_latent/errors.hpp"

namespace intel_latent::diff {

GradCheckResult finite_diff_check(Tape& tape, Node output, const NamedTensors& bindings,
                                  double h, const std::vector<std::string>& wrt) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_check: h must be positive");

  const Tensor& out = tape.forward(bindings, output);
  if (out.size() != 1) {
    throw ShapeError("finite_diff_check: output must be scalar, got " + shape_string(out.shape()));
  }
  const NamedTensors analytic = tape.backward();

  std::vector<std::string> names = wrt;
  if (names.empty()) {
    for (const auto& [name, _] : bindings) names.push_back(name);
  }

  GradCheckResult result;
  NamedTensors probe = bindings;
  for (const auto& name : names) {
    auto pit = probe.find(name);
    if (pit == probe.end()) throw std::invalid_argument("finite_diff_check: unknown leaf " + name);
    auto ait = analytic.find(name);
    Tensor& x = pit->second;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double saved = x[i];
      x[i] = saved + h;
      const double f_plus = tape.forward(probe, output).item();
      x[i] = saved - h;
      const double f_minus = tape.forward(probe, output).item();
      x[i] = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double a = ait == analytic.end() ? 0.0 : ait->second[i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      const double rel = std::fabs(a - numeric) / denom;
      if (rel > result.max_relative_error || result.worst_leaf.empty()) {
        result.max_relative_error = rel;
        result.worst_leaf = name;
        result.worst_index = i;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  // Leave the tape holding values for the unperturbed bindings.
  tape.forward(bindings, output);
  return result;
}

}  // namespace intel_latent::diff
