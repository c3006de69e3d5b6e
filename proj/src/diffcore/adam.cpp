#include "intel_latent/adam.hpp"

#include <cmath>

#include "intel_latent/errors.hpp"

namespace intel_latent::diff {

void adam_step(AdamState& state, NamedTensors& params, const NamedTensors& grads) {
  for (const auto& [name, param] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) continue;
    if (it->second.shape() != param.shape()) {
      throw ShapeError("adam: gradient for '" + name + "' has shape " +
                       shape_string(it->second.shape()) + ", parameter has " +
                       shape_string(param.shape()));
    }
    if (!it->second.all_finite()) {
      throw NumericError("adam: non-finite gradient for '" + name + "' at step " +
                         std::to_string(state.t + 1));
    }
  }

  const auto& cfg = state.config;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);

  for (auto& [name, param] : params) {
    auto [mit, m_new] = state.m.try_emplace(name, param.shape(), 0.0);
    auto [vit, v_new] = state.v.try_emplace(name, param.shape(), 0.0);
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    if (m.shape() != param.shape() || v.shape() != param.shape()) {
      throw ShapeError("adam: moment shape mismatch for '" + name + "'");
    }
    auto git = grads.find(name);
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double g = git == grads.end() ? 0.0 : git->second[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      param[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

}  // namespace intel_latent::diff
