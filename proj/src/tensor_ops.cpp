// SPDX-License-Identifier: Apache-2.0
#include "geopli/tensor_ops.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "geopli/errors.hpp"

namespace geopli {

namespace {

void check_segments(std::size_t n_rows, const std::vector<std::size_t>& segment_ids,
                    std::size_t n_segments) {
    if (segment_ids.size() != n_rows) {
        throw ContractError("segment id count " + std::to_string(segment_ids.size()) +
                            " does not match row count " + std::to_string(n_rows));
    }
    for (std::size_t id : segment_ids) {
        if (id >= n_segments) {
            throw IndexError("segment id " + std::to_string(id) + " out of range for " +
                             std::to_string(n_segments) + " segments");
        }
    }
}

}  // namespace

Tensor segment_reduce(const Tensor& values, const std::vector<std::size_t>& segment_ids,
                      std::size_t n_segments, ReduceMode mode) {
    if (mode == ReduceMode::Max) {
        std::vector<std::size_t> argmax_unused;
        return segment_max_with_argmax(values, segment_ids, n_segments, argmax_unused);
    }
    const std::size_t e = values.rows();
    const std::size_t d = values.cols();
    check_segments(e, segment_ids, n_segments);

    Tensor out({n_segments, d});
    std::vector<std::size_t> counts(n_segments, 0);
    for (std::size_t r = 0; r < e; ++r) {
        const std::size_t s = segment_ids[r];
        ++counts[s];
        for (std::size_t c = 0; c < d; ++c) out.at(s, c) += values.at(r, c);
    }
    if (mode == ReduceMode::Mean) {
        for (std::size_t s = 0; s < n_segments; ++s) {
            if (counts[s] == 0) continue;
            for (std::size_t c = 0; c < d; ++c) out.at(s, c) /= static_cast<double>(counts[s]);
        }
    }
    return out;
}

Tensor segment_max_with_argmax(const Tensor& values, const std::vector<std::size_t>& segment_ids,
                               std::size_t n_segments, std::vector<std::size_t>& argmax_out) {
    const std::size_t e = values.rows();
    const std::size_t d = values.cols();
    check_segments(e, segment_ids, n_segments);

    Tensor out({n_segments, d});
    argmax_out.assign(n_segments * d, std::numeric_limits<std::size_t>::max());
    std::vector<bool> seen(n_segments, false);
    for (std::size_t r = 0; r < e; ++r) {
        const std::size_t s = segment_ids[r];
        for (std::size_t c = 0; c < d; ++c) {
            const double v = values.at(r, c);
            if (!seen[s] || v > out.at(s, c)) {
                out.at(s, c) = v;
                argmax_out[s * d + c] = r;
            }
        }
        seen[s] = true;
    }
    // Empty segments keep the zero vector and SIZE_MAX argmax.
    return out;
}

Tensor segment_softmax(const Tensor& logits, const std::vector<std::size_t>& segment_ids,
                       std::size_t n_segments) {
    if (logits.cols() != 1 && logits.rank() != 1) {
        throw ContractError("segment_softmax expects a column vector, got " + logits.shape_str());
    }
    const std::size_t e = logits.size();
    check_segments(e, segment_ids, n_segments);

    std::vector<double> seg_max(n_segments, -std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < e; ++r) {
        seg_max[segment_ids[r]] = std::max(seg_max[segment_ids[r]], logits[r]);
    }
    Tensor out(logits.shape());
    std::vector<double> seg_sum(n_segments, 0.0);
    for (std::size_t r = 0; r < e; ++r) {
        const double x = std::exp(logits[r] - seg_max[segment_ids[r]]);
        out[r] = x;
        seg_sum[segment_ids[r]] += x;
    }
    for (std::size_t r = 0; r < e; ++r) {
        out[r] /= seg_sum[segment_ids[r]];
        // Logit spreads beyond ~745 underflow exp() to exactly zero; keep the
        // coefficients strictly positive without disturbing the segment sums.
        if (out[r] == 0.0) out[r] = std::numeric_limits<double>::min();
    }
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw DimensionError("matmul expects rank-2 tensors, got " + a.shape_str() + " and " +
                             b.shape_str());
    }
    const std::size_t n = a.shape()[0];
    const std::size_t k = a.shape()[1];
    const std::size_t m = b.shape()[1];
    if (b.shape()[0] != k) {
        throw DimensionError("matmul inner dimensions differ: " + a.shape_str() + " vs " +
                             b.shape_str());
    }
    Tensor out({n, m});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a.at(i, p);
            if (av == 0.0) continue;
            const double* brow = b.data().data() + p * m;
            double* orow = out.data().data() + i * m;
            for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double ex = std::exp(x);
    return ex / (1.0 + ex);
}

double silu(double x) { return x * logistic(x); }

double silu_grad(double x) {
    const double s = logistic(x);
    return s * (1.0 + x * (1.0 - s));
}

double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

double leaky_relu_grad(double x, double slope) { return x >= 0.0 ? 1.0 : slope; }

}  // namespace geopli
