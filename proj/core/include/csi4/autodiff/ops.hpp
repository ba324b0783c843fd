#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "csi4/autodiff/graph.hpp"

namespace csi4::ad {

// Differentiable operations on Vars. Unless noted, every backward rule is
// expressed with these same operations, so gradients computed under
// create_graph are themselves differentiable.
//
// Binary elementwise ops broadcast numpy-style over right-aligned axes
// (a size-1 or missing axis stretches to match).

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var square(const Var& a);

Var neg(const Var& a);
Var scale(const Var& a, float factor);
Var add_scalar(const Var& a, float offset);

Var sqrt(const Var& a);
Var log(const Var& a);
Var exp(const Var& a);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
// x for x >= 0, slope * x otherwise. The derivative at exactly 0 is taken
// from the positive side (1).
Var leaky_relu(const Var& a, float slope);
Var relu(const Var& a);
// Pass-through gradient inside [lo, hi], zero outside.
Var clamp(const Var& a, float lo, float hi);

// 2-D matrix product op(a) * op(b) where op transposes when the flag is set.
Var matmul(const Var& a, const Var& b, bool transpose_a = false, bool transpose_b = false);

// Reductions accumulate in double and round once.
Var sum(const Var& a);
Var mean(const Var& a);
Var sum(const Var& a, std::size_t axis);
Var mean(const Var& a, std::size_t axis);

Var reshape(const Var& a, Shape shape);
Var broadcast_to(const Var& a, const Shape& shape);
// Sums a broadcast tensor back down to `shape` (adjoint of broadcast_to).
Var sum_to(const Var& a, const Shape& shape);

// Column concatenation / slicing of 2-D tensors.
Var concat_cols(const Var& a, const Var& b);
Var slice_cols(const Var& a, std::size_t start, std::size_t count);
Var pad_cols(const Var& a, std::size_t start, std::size_t total);

// Row lookup table[indices[i]] and its adjoint (scatter-add into num_rows).
Var gather_rows(const Var& table, std::span<const int> indices);
Var scatter_rows(const Var& a, std::span<const int> indices, std::size_t num_rows);

// out[i] = a.flat[index[i]], or 0 where index[i] < 0. The adjoint scatters
// with accumulation. Used for im2col and pooling.
using IndexMap = std::shared_ptr<const std::vector<std::int64_t>>;
Var gather_flat(const Var& a, IndexMap index, Shape out_shape);
Var scatter_flat(const Var& a, IndexMap index, Shape in_shape);

// Gradient stops here.
Var detach(const Var& a);

// Mean over rows of -log softmax(logits)[label], stabilized by max
// subtraction. Fused kernel: first-order only.
Var softmax_cross_entropy(const Var& logits, std::span<const int> labels);

// Convenience for elementwise products with fixed masks.
Var mul_constant(const Var& a, Tensor mask);

// Shape that a and b broadcast to, or throws DimensionError.
Shape broadcast_shape(const Shape& a, const Shape& b);

}  // namespace csi4::ad
