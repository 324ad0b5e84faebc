#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "chromap/ops.h"
#include "chromap/tensor.h"

namespace chromap {

// Reverse-mode tape. Every recorded node owns its forward value; gradients are
// allocated lazily. backward() walks the nodes once, newest first, on the
// calling thread.
template <typename T>
class Tape {
 public:
  struct Var {
    std::size_t id = 0;
  };
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Var leaf(BasicTensor<T> value) { return push(std::move(value), nullptr); }

  Var record(BasicTensor<T> value, Backward backward) {
    return push(std::move(value), std::move(backward));
  }

  const BasicTensor<T>& value(Var v) const { return nodes_.at(v.id).value; }
  const BasicTensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }

  BasicTensor<T>& grad(Var v) { return grad(v.id); }
  BasicTensor<T>& grad(std::size_t id) {
    Node& n = nodes_.at(id);
    if (n.grad.empty() && !n.value.empty()) n.grad = BasicTensor<T>(n.value.shape());
    return n.grad;
  }
  bool has_grad(Var v) const { return !nodes_.at(v.id).grad.empty(); }

  // Seeds d(output)/d(output) = 1 for a single-element output and propagates.
  void backward(Var output) {
    if (value(output).size() != 1) throw ShapeError("backward() needs a scalar output");
    grad(output)[0] += T(1);
    backward_seeded();
  }

  // Propagates whatever gradients have already been seeded.
  void backward_seeded() {
    visit_order_.clear();
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.backward || n.grad.empty()) continue;
      visit_order_.push_back(i);
      n.backward(*this, i);
    }
  }

  std::size_t size() const { return nodes_.size(); }
  const std::vector<std::size_t>& last_visit_order() const { return visit_order_; }

 private:
  struct Node {
    BasicTensor<T> value;
    BasicTensor<T> grad;
    Backward backward;
  };

  Var push(BasicTensor<T> value, Backward backward) {
    nodes_.push_back({std::move(value), {}, std::move(backward)});
    return Var{nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
  std::vector<std::size_t> visit_order_;
};

// Differentiable operations recorded on a Tape.
namespace ad {

template <typename T>
using Var = typename Tape<T>::Var;

template <typename T>
Var<T> matmul(Tape<T>& tape, Var<T> a, Var<T> b) {
  return tape.record(ops::matmul(tape.value(a), tape.value(b)), [a, b](Tape<T>& t, std::size_t self) {
    ops::matmul_backward(t.value(a), t.value(b), t.grad(self), &t.grad(a), &t.grad(b));
  });
}

template <typename T>
Var<T> conv2d(Tape<T>& tape, Var<T> x, Var<T> kernel, Var<T> bias) {
  return tape.record(ops::conv2d(tape.value(x), tape.value(kernel), tape.value(bias)),
                     [x, kernel, bias](Tape<T>& t, std::size_t self) {
                       ops::conv2d_backward(t.value(x), t.value(kernel), t.grad(self), &t.grad(x),
                                            &t.grad(kernel), &t.grad(bias));
                     });
}

template <typename T>
Var<T> relu(Tape<T>& tape, Var<T> x) {
  return tape.record(ops::relu(tape.value(x)), [x](Tape<T>& t, std::size_t self) {
    ops::relu_backward(t.value(x), t.grad(self), &t.grad(x));
  });
}

template <typename T>
Var<T> global_avg_pool(Tape<T>& tape, Var<T> x) {
  return tape.record(ops::global_avg_pool(tape.value(x)), [x](Tape<T>& t, std::size_t self) {
    ops::global_avg_pool_backward(t.value(x), t.grad(self), &t.grad(x));
  });
}

template <typename T>
Var<T> linear(Tape<T>& tape, Var<T> x, Var<T> w, Var<T> b) {
  return tape.record(ops::linear(tape.value(x), tape.value(w), tape.value(b)),
                     [x, w, b](Tape<T>& t, std::size_t self) {
                       ops::linear_backward(t.value(x), t.value(w), t.grad(self), &t.grad(x),
                                            &t.grad(w), &t.grad(b));
                     });
}

template <typename T>
Var<T> reshape(Tape<T>& tape, Var<T> x, Shape shape) {
  return tape.record(tape.value(x).reshaped(std::move(shape)), [x](Tape<T>& t, std::size_t self) {
    auto g = t.grad(self).data();
    auto dx = t.grad(x).data();
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
  });
}

template <typename T>
Var<T> add(Tape<T>& tape, Var<T> a, Var<T> b) {
  require_shape(tape.value(b).shape(), tape.value(a).shape(), "add");
  BasicTensor<T> out = tape.value(a);
  const auto bv = tape.value(b).data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return tape.record(std::move(out), [a, b](Tape<T>& t, std::size_t self) {
    const auto g = t.grad(self).data();
    auto da = t.grad(a).data();
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
    auto db = t.grad(b).data();
    for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i];
  });
}

template <typename T>
Var<T> scale(Tape<T>& tape, Var<T> a, T factor) {
  BasicTensor<T> out = tape.value(a);
  for (T& v : out.data()) v *= factor;
  return tape.record(std::move(out), [a, factor](Tape<T>& t, std::size_t self) {
    const auto g = t.grad(self).data();
    auto da = t.grad(a).data();
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += factor * g[i];
  });
}

// mean((a - b)^2) as a one-element tensor.
template <typename T>
Var<T> mean_squared_error(Tape<T>& tape, Var<T> a, Var<T> b) {
  const auto& av = tape.value(a);
  const auto& bv = tape.value(b);
  require_shape(bv.shape(), av.shape(), "mean_squared_error");
  T sum = T(0);
  for (std::size_t i = 0; i < av.size(); ++i) {
    const T d = av[i] - bv[i];
    sum += d * d;
  }
  const T n = static_cast<T>(av.size());
  return tape.record(BasicTensor<T>({1}, {sum / n}), [a, b, n](Tape<T>& t, std::size_t self) {
    const T g = t.grad(self)[0];
    const auto& av = t.value(a);
    const auto& bv = t.value(b);
    auto da = t.grad(a).data();
    auto db = t.grad(b).data();
    for (std::size_t i = 0; i < av.size(); ++i) {
      const T d = T(2) * (av[i] - bv[i]) / n * g;
      da[i] += d;
      db[i] -= d;
    }
  });
}

// mean(|a - b|) as a one-element tensor. The subgradient at 0 is taken as 0.
template <typename T>
Var<T> mean_abs_error(Tape<T>& tape, Var<T> a, Var<T> b) {
  const auto& av = tape.value(a);
  const auto& bv = tape.value(b);
  require_shape(bv.shape(), av.shape(), "mean_abs_error");
  T sum = T(0);
  for (std::size_t i = 0; i < av.size(); ++i) sum += std::abs(av[i] - bv[i]);
  const T n = static_cast<T>(av.size());
  return tape.record(BasicTensor<T>({1}, {sum / n}), [a, b, n](Tape<T>& t, std::size_t self) {
    const T g = t.grad(self)[0] / n;
    const auto& av = t.value(a);
    const auto& bv = t.value(b);
    auto da = t.grad(a).data();
    auto db = t.grad(b).data();
    for (std::size_t i = 0; i < av.size(); ++i) {
      const T d = av[i] - bv[i];
      const T s = d > T(0) ? g : (d < T(0) ? -g : T(0));
      da[i] += s;
      db[i] -= s;
    }
  });
}

}  // namespace ad
}  // namespace chromap
