// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "geopli/tensor.hpp"

namespace geopli {

enum class ReduceMode { Sum, Mean, Max };

// Row-wise segmented reduction: values is [E x d], segment_ids has E entries
// in [0, n_segments). Output row i reduces all rows with segment id i; empty
// segments yield the zero vector in every mode (Max included, so downstream
// fusion stays finite).
Tensor segment_reduce(const Tensor& values, const std::vector<std::size_t>& segment_ids,
                      std::size_t n_segments, ReduceMode mode);

// Like segment_reduce(Max) but also reports, per segment and column, the row
// index of the (first) maximum, or SIZE_MAX for empty segments. Needed for
// gradient routing.
Tensor segment_max_with_argmax(const Tensor& values, const std::vector<std::size_t>& segment_ids,
                               std::size_t n_segments, std::vector<std::size_t>& argmax_out);

// Softmax of a column vector [E x 1] (or [E]) within each segment, with
// per-segment max subtraction for overflow safety. Outputs per non-empty
// segment are positive and sum to 1.
Tensor segment_softmax(const Tensor& logits, const std::vector<std::size_t>& segment_ids,
                       std::size_t n_segments);

// Plain dense matmul, [N x K] * [K x M] -> [N x M].
Tensor matmul(const Tensor& a, const Tensor& b);

double silu(double x);
double silu_grad(double x);
double leaky_relu(double x, double slope);
double leaky_relu_grad(double x, double slope);
double logistic(double x);

}  // namespace geopli
