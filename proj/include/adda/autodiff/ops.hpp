#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "adda/autodiff/tape.hpp"

/// Differentiable primitives over the 2-D (rows x cols) view of tensors.
///
/// Binary elementwise ops broadcast NumPy-style over each of the two axes: a
/// dimension of 1 stretches to match the other operand. Shape mismatches throw
/// ShapeError naming the primitive and both shapes.
namespace adda {

Var matmul(Var a, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double factor);
Var shift(Var a, double offset);
Var neg(Var a);

Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var leaky_relu(Var a, double slope);
Var exp(Var a);
Var log(Var a);
Var square(Var a);

/// Row-wise softmax, stabilized by subtracting each row's maximum.
Var softmax(Var a);
Var log_softmax(Var a);
/// Row-wise softmax restricted to positions where mask != 0. Masked positions
/// get exactly zero weight. A row with no unmasked position is rejected.
Var masked_softmax(Var a, const Tensor& mask);

Var sum(Var a);
Var mean(Var a);
/// Column sums: (R x C) -> (1 x C).
Var sum_rows(Var a);
/// Row sums: (R x C) -> (R x 1).
Var sum_cols(Var a);
/// Per-row squared Euclidean distance: (R x C),(R x C) -> (R x 1).
Var squared_l2_distance(Var a, Var b);

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var reshape(Var a, std::size_t rows, std::size_t cols);
Var transpose(Var a);

/// Row lookup: out[i] = table[ids[i]].
Var gather_rows(Var table, std::span<const std::size_t> ids);
/// Picks one column per row: out[i] = a[i, cols[i]] -> (R x 1).
Var pick(Var a, std::span<const std::size_t> cols);

/// Identity in value, blocks gradient flow.
Var detach(Var a);

}  // namespace adda
