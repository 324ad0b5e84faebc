#pragma once

#include <cstddef>
#include <span>

#include "chromap/tensor.h"

// Forward and adjoint kernels for the fixed operator set used by the encoder and
// the color-mapping losses. Backward kernels accumulate (+=) into their outputs,
// which must already have the matching shape.
namespace chromap::ops {

// Row-major dense products on raw storage, accumulating into c.
//   gemm_nn: c[m x p] += a[m x n] * b[n x p]
//   gemm_nt: c[m x p] += a[m x n] * b[p x n]^T
//   gemm_tn: c[m x p] += a[n x m]^T * b[n x p]
template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t p, std::span<const T> a,
             std::span<const T> b, std::span<T> c);
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t p, std::span<const T> a,
             std::span<const T> b, std::span<T> c);
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t p, std::span<const T> a,
             std::span<const T> b, std::span<T> c);

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
void matmul_backward(const BasicTensor<T>& a, const BasicTensor<T>& b, const BasicTensor<T>& grad,
                     BasicTensor<T>* da, BasicTensor<T>* db);

// 3x3 cross-correlation, stride 2, zero padding 1.
// input [c_in x h x w], kernel [c_out x c_in x 3 x 3], bias [c_out]
// -> [c_out x ceil(h/2) x ceil(w/2)]
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                      const BasicTensor<T>& bias);
template <typename T>
void conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                     const BasicTensor<T>& grad, BasicTensor<T>* dinput, BasicTensor<T>* dkernel,
                     BasicTensor<T>* dbias);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);
template <typename T>
void relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad, BasicTensor<T>* dx);

// [c x h x w] -> [c]
template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x);
template <typename T>
void global_avg_pool_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad,
                              BasicTensor<T>* dx);

// x [n], w [n x m], b [m] -> x * w + b  [m]
template <typename T>
BasicTensor<T> linear(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b);
template <typename T>
void linear_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& grad,
                     BasicTensor<T>* dx, BasicTensor<T>* dw, BasicTensor<T>* db);

}  // namespace chromap::ops
