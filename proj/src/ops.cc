#include "chromap/ops.h"

#include <algorithm>
#include <sstream>

namespace chromap {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace ops {

namespace {

constexpr std::size_t kTaps = 9;

template <typename T>
void require_same(const BasicTensor<T>* t, const Shape& shape, const char* what) {
  if (t) require_shape(t->shape(), shape, what);
}

std::size_t conv_out(std::size_t n) { return (n + 1) / 2; }

// col [(c_in * 9) x (oh * ow)]
template <typename T>
std::vector<T> im2col(const BasicTensor<T>& input) {
  const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t oh = conv_out(h), ow = conv_out(w);
  std::vector<T> col(c_in * kTaps * oh * ow, T(0));
  const auto in = input.data();
  for (std::size_t ci = 0; ci < c_in; ++ci) {
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        T* row = col.data() + ((ci * kTaps + ky * 3 + kx) * oh * ow);
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(2 * oy + ky) - 1;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          const T* src = in.data() + (ci * h + static_cast<std::size_t>(iy)) * w;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(2 * ox + kx) - 1;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            row[oy * ow + ox] = src[ix];
          }
        }
      }
    }
  }
  return col;
}

template <typename T>
void col2im_add(std::span<const T> col, BasicTensor<T>* dinput) {
  const std::size_t c_in = dinput->dim(0), h = dinput->dim(1), w = dinput->dim(2);
  const std::size_t oh = conv_out(h), ow = conv_out(w);
  auto out = dinput->data();
  for (std::size_t ci = 0; ci < c_in; ++ci) {
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const T* row = col.data() + ((ci * kTaps + ky * 3 + kx) * oh * ow);
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(2 * oy + ky) - 1;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          T* dst = out.data() + (ci * h + static_cast<std::size_t>(iy)) * w;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(2 * ox + kx) - 1;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            dst[ix] += row[oy * ow + ox];
          }
        }
      }
    }
  }
}

template <typename T>
std::vector<T> transpose(std::size_t rows, std::size_t cols, std::span<const T> a) {
  std::vector<T> t(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) t[c * rows + r] = a[r * cols + c];
  }
  return t;
}

void check_conv_shapes(const Shape& input, const Shape& kernel) {
  if (input.size() != 3) throw ShapeError("conv2d input must be [c x h x w], got " + shape_string(input));
  if (kernel.size() != 4 || kernel[2] != 3 || kernel[3] != 3 || kernel[1] != input[0]) {
    throw ShapeError("conv2d kernel " + shape_string(kernel) + " incompatible with input " +
                     shape_string(input));
  }
}

}  // namespace

template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t p, std::span<const T> a,
             std::span<const T> b, std::span<T> c) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c.data() + i * p;
    for (std::size_t l = 0; l < n; ++l) {
      const T av = a[i * n + l];
      const T* brow = b.data() + l * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t p, std::span<const T> a,
             std::span<const T> b, std::span<T> c) {
  const std::vector<T> bt = transpose<T>(p, n, b);
  gemm_nn<T>(m, n, p, a, bt, c);
}

template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t p, std::span<const T> a,
             std::span<const T> b, std::span<T> c) {
  for (std::size_t l = 0; l < n; ++l) {
    const T* brow = b.data() + l * p;
    for (std::size_t i = 0; i < m; ++i) {
      const T av = a[l * m + i];
      T* crow = c.data() + i * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
  }
  BasicTensor<T> out({a.dim(0), b.dim(1)});
  gemm_nn<T>(a.dim(0), a.dim(1), b.dim(1), a.data(), b.data(), out.data());
  return out;
}

template <typename T>
void matmul_backward(const BasicTensor<T>& a, const BasicTensor<T>& b, const BasicTensor<T>& grad,
                     BasicTensor<T>* da, BasicTensor<T>* db) {
  const std::size_t m = a.dim(0), n = a.dim(1), p = b.dim(1);
  require_shape(grad.shape(), {m, p}, "matmul grad");
  require_same(da, a.shape(), "matmul da");
  require_same(db, b.shape(), "matmul db");
  if (da) gemm_nt<T>(m, p, n, grad.data(), b.data(), da->data());
  if (db) gemm_tn<T>(n, m, p, a.data(), grad.data(), db->data());
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                      const BasicTensor<T>& bias) {
  check_conv_shapes(input.shape(), kernel.shape());
  const std::size_t c_out = kernel.dim(0), c_in = input.dim(0);
  require_shape(bias.shape(), {c_out}, "conv2d bias");
  const std::size_t oh = conv_out(input.dim(1)), ow = conv_out(input.dim(2));
  const std::size_t spatial = oh * ow;

  BasicTensor<T> out({c_out, oh, ow});
  auto o = out.data();
  for (std::size_t co = 0; co < c_out; ++co) {
    std::fill_n(o.begin() + co * spatial, spatial, bias[co]);
  }
  const std::vector<T> col = im2col(input);
  gemm_nn<T>(c_out, c_in * kTaps, spatial, kernel.data(), col, o);
  return out;
}

template <typename T>
void conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                     const BasicTensor<T>& grad, BasicTensor<T>* dinput, BasicTensor<T>* dkernel,
                     BasicTensor<T>* dbias) {
  check_conv_shapes(input.shape(), kernel.shape());
  const std::size_t c_out = kernel.dim(0), c_in = input.dim(0);
  const std::size_t oh = conv_out(input.dim(1)), ow = conv_out(input.dim(2));
  const std::size_t spatial = oh * ow;
  require_shape(grad.shape(), {c_out, oh, ow}, "conv2d grad");
  require_same(dinput, input.shape(), "conv2d dinput");
  require_same(dkernel, kernel.shape(), "conv2d dkernel");
  require_same(dbias, Shape{c_out}, "conv2d dbias");

  const auto g = grad.data();
  if (dbias) {
    for (std::size_t co = 0; co < c_out; ++co) {
      T sum = T(0);
      for (std::size_t s = 0; s < spatial; ++s) sum += g[co * spatial + s];
      (*dbias)[co] += sum;
    }
  }
  if (dkernel) {
    const std::vector<T> col = im2col(input);
    gemm_nt<T>(c_out, spatial, c_in * kTaps, g, col, dkernel->data());
  }
  if (dinput) {
    std::vector<T> dcol(c_in * kTaps * spatial, T(0));
    gemm_tn<T>(c_in * kTaps, c_out, spatial, kernel.data(), g, dcol);
    col2im_add<T>(dcol, dinput);
  }
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  BasicTensor<T> out = x;
  for (T& v : out.data()) v = v > T(0) ? v : T(0);
  return out;
}

template <typename T>
void relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad, BasicTensor<T>* dx) {
  require_shape(grad.shape(), x.shape(), "relu grad");
  require_same(dx, x.shape(), "relu dx");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > T(0)) (*dx)[i] += grad[i];
  }
}

template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x) {
  if (x.rank() != 3) throw ShapeError("global_avg_pool expects [c x h x w], got " + shape_string(x.shape()));
  const std::size_t c = x.dim(0), spatial = x.dim(1) * x.dim(2);
  BasicTensor<T> out({c});
  for (std::size_t ch = 0; ch < c; ++ch) {
    T sum = T(0);
    for (std::size_t s = 0; s < spatial; ++s) sum += x[ch * spatial + s];
    out[ch] = sum / static_cast<T>(spatial);
  }
  return out;
}

template <typename T>
void global_avg_pool_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad,
                              BasicTensor<T>* dx) {
  const std::size_t c = x.dim(0), spatial = x.dim(1) * x.dim(2);
  require_shape(grad.shape(), {c}, "global_avg_pool grad");
  require_same(dx, x.shape(), "global_avg_pool dx");
  for (std::size_t ch = 0; ch < c; ++ch) {
    const T share = grad[ch] / static_cast<T>(spatial);
    for (std::size_t s = 0; s < spatial; ++s) (*dx)[ch * spatial + s] += share;
  }
}

template <typename T>
BasicTensor<T> linear(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b) {
  if (x.rank() != 1 || w.rank() != 2 || w.dim(0) != x.dim(0)) {
    throw ShapeError("linear: input " + shape_string(x.shape()) + " incompatible with weight " +
                     shape_string(w.shape()));
  }
  require_shape(b.shape(), {w.dim(1)}, "linear bias");
  BasicTensor<T> out = b;
  gemm_nn<T>(1, x.dim(0), w.dim(1), x.data(), w.data(), out.data());
  return out;
}

template <typename T>
void linear_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& grad,
                     BasicTensor<T>* dx, BasicTensor<T>* dw, BasicTensor<T>* db) {
  const std::size_t n = w.dim(0), m = w.dim(1);
  require_shape(grad.shape(), {m}, "linear grad");
  require_same(dx, x.shape(), "linear dx");
  require_same(dw, w.shape(), "linear dw");
  require_same(db, Shape{m}, "linear db");
  if (dx) {
    for (std::size_t i = 0; i < n; ++i) {
      T sum = T(0);
      for (std::size_t j = 0; j < m; ++j) sum += w[i * m + j] * grad[j];
      (*dx)[i] += sum;
    }
  }
  if (dw) gemm_nn<T>(n, 1, m, x.data(), grad.data(), dw->data());
  if (db) {
    for (std::size_t j = 0; j < m; ++j) (*db)[j] += grad[j];
  }
}

#define CHROMAP_INSTANTIATE_OPS(T)                                                              \
  template void gemm_nn<T>(std::size_t, std::size_t, std::size_t, std::span<const T>,           \
                           std::span<const T>, std::span<T>);                                    \
  template void gemm_nt<T>(std::size_t, std::size_t, std::size_t, std::span<const T>,           \
                           std::span<const T>, std::span<T>);                                    \
  template void gemm_tn<T>(std::size_t, std::size_t, std::size_t, std::span<const T>,           \
                           std::span<const T>, std::span<T>);                                    \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template void matmul_backward(const BasicTensor<T>&, const BasicTensor<T>&,                    \
                                const BasicTensor<T>&, BasicTensor<T>*, BasicTensor<T>*);        \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&,                   \
                                 const BasicTensor<T>&);                                         \
  template void conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&,                    \
                                const BasicTensor<T>&, BasicTensor<T>*, BasicTensor<T>*,         \
                                BasicTensor<T>*);                                                \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                           \
  template void relu_backward(const BasicTensor<T>&, const BasicTensor<T>&, BasicTensor<T>*);    \
  template BasicTensor<T> global_avg_pool(const BasicTensor<T>&);                                \
  template void global_avg_pool_backward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                         BasicTensor<T>*);                                       \
  template BasicTensor<T> linear(const BasicTensor<T>&, const BasicTensor<T>&,                   \
                                 const BasicTensor<T>&);                                         \
  template void linear_backward(const BasicTensor<T>&, const BasicTensor<T>&,                    \
                                const BasicTensor<T>&, BasicTensor<T>*, BasicTensor<T>*,         \
                                BasicTensor<T>*);

CHROMAP_INSTANTIATE_OPS(float)
CHROMAP_INSTANTIATE_OPS(double)

#undef CHROMAP_INSTANTIATE_OPS

}  // namespace ops
}  // namespace chromap
