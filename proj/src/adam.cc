#include "chromap/adam.h"

#include <cmath>

namespace chromap {

AdamState make_adam_state(std::span<Tensor* const> params) {
  AdamState state;
  for (const Tensor* p : params) {
    state.m.emplace_back(p->shape());
    state.v.emplace_back(p->shape());
  }
  return state;
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
               AdamState& state, const AdamHyper& hyper) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    throw ShapeError("adam_step: parameter, gradient and state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_shape(grads[i]->shape(), params[i]->shape(), "adam_step gradient");
    require_shape(state.m[i].shape(), params[i]->shape(), "adam_step first moment");
    require_shape(state.v[i].shape(), params[i]->shape(), "adam_step second moment");
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const float bias1 = static_cast<float>(1.0 - std::pow(static_cast<double>(hyper.beta1), t));
  const float bias2 = static_cast<float>(1.0 - std::pow(static_cast<double>(hyper.beta2), t));

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i]->data();
    const auto g = grads[i]->data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = hyper.beta1 * m[j] + (1.0f - hyper.beta1) * g[j];
      v[j] = hyper.beta2 * v[j] + (1.0f - hyper.beta2) * g[j] * g[j];
      const float m_hat = m[j] / bias1;
      const float v_hat = v[j] / bias2;
      theta[j] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
    }
  }
}

}  // namespace chromap
