#pragma once

// Primitive differentiable ops. Matrices are rank-2 [rows, cols]; the only
// broadcast is add_row (matrix + row vector). Every other binary op requires
// identical shapes and throws let::ShapeError naming the op and both shapes.

#include <cstddef>
#include <span>
#include <vector>

#include "let/autodiff/tensor.hpp"

namespace let::ad {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// a[m, n] + bias[1, n] (or bias[n]) added to every row.
Tensor add_row(const Tensor& a, const Tensor& bias);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
Tensor elementwise_max(const Tensor& a, const Tensor& b);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor abs(const Tensor& a);
// Gradient is zero where the value was clamped.
Tensor clamp(const Tensor& a, double lo, double hi);

// Reductions keep rank 2: axis 0 -> [1, n], axis 1 -> [m, 1].
Tensor sum(const Tensor& a, int axis);
Tensor mean(const Tensor& a, int axis);
Tensor sum_all(const Tensor& a);

// Max-subtracted softmax along `axis` of a rank-2 tensor.
Tensor softmax(const Tensor& a, int axis);

// Normalizes each row (last axis) to zero mean and unit variance.
Tensor layer_norm(const Tensor& a, double eps = 1e-10);
Tensor layer_norm(const Tensor& a, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-10);

// Row-wise a.b / max(|a| |b|, eps) -> [m, 1]. Zero vectors give 0.
Tensor cosine_similarity(const Tensor& a, const Tensor& b, double eps = 1e-8);

Tensor concat(std::span<const Tensor> parts, int axis);
Tensor concat(std::initializer_list<Tensor> parts, int axis);
// Half-open range [begin, end) along `axis`.
Tensor slice(const Tensor& a, int axis, std::size_t begin, std::size_t end);
// Rows of `a` in the order of `indices` (repeats allowed).
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> indices);

// Multiplies by a fixed 0/scale mask; identity when rate == 0 or the mask
// is empty.
Tensor apply_mask(const Tensor& a, std::span<const double> mask);

}  // namespace let::ad
