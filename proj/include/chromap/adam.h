#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "chromap/tensor.h"

namespace chromap {

struct AdamHyper {
  float lr = 3e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// First/second moment estimates, one tensor per parameter, plus the number of
// updates applied so far (bias correction uses step after increment).
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t step = 0;

  bool operator==(const AdamState&) const = default;
};

AdamState make_adam_state(std::span<Tensor* const> params);

// One bias-corrected Adam update, applied parameter by parameter in order.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
               AdamState& state, const AdamHyper& hyper);

}  // namespace chromap
