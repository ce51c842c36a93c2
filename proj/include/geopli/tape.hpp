// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "geopli/tensor.hpp"
#include "geopli/tensor_ops.hpp"

namespace geopli {

using NodeId = std::int32_t;
using GradMap = std::map<std::string, Tensor>;

// Define-by-run reverse-mode tape. Every builder records the produced value
// plus a closure that routes the output gradient to the node's parents.
// backward() is a pure function of the recorded tape: running it twice
// yields identical gradients.
class Tape {
public:
    Tape() = default;
    // Backward closures capture the tape address, so it must stay put.
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) = delete;
    Tape& operator=(Tape&&) = delete;

    // Leaf with no gradient tracking.
    NodeId constant(Tensor value);
    // Named parameter leaf. Repeated calls with the same name return the
    // same node, so each parameter appears once per tape.
    NodeId param(const std::string& name, const Tensor& value);

    NodeId matmul(NodeId a, NodeId b);
    // Elementwise add; also accepts a [1 x d] (or [d]) bias broadcast over rows.
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    // Elementwise multiply; either side may be an [N x 1] column broadcast
    // against the other's [N x d].
    NodeId mul(NodeId a, NodeId b);
    NodeId scale(NodeId a, double factor);
    NodeId silu(NodeId a);
    NodeId leaky_relu(NodeId a, double slope);
    NodeId concat_cols(const std::vector<NodeId>& parts);
    NodeId gather_rows(NodeId a, std::vector<std::size_t> indices);
    NodeId segment_sum(NodeId values, std::vector<std::size_t> segment_ids, std::size_t n_segments);
    NodeId segment_mean(NodeId values, std::vector<std::size_t> segment_ids, std::size_t n_segments);
    NodeId segment_max(NodeId values, std::vector<std::size_t> segment_ids, std::size_t n_segments);
    NodeId segment_softmax(NodeId logits, std::vector<std::size_t> segment_ids, std::size_t n_segments);
    NodeId row_sum(NodeId a);   // [N x d] -> [1 x d]
    NodeId col_sum(NodeId a);   // [N x d] -> [N x 1]
    NodeId sum_all(NodeId a);   // -> scalar [1]
    NodeId mean_all(NodeId a);  // -> scalar [1]

    const Tensor& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    std::size_t size() const { return nodes_.size(); }

    // Gradient of `loss` (must be scalar) with respect to every parameter
    // node on the tape, keyed by parameter name.
    GradMap backward(NodeId loss) const;

private:
    using GradSink = std::function<void(NodeId, const Tensor&)>;
    struct Node {
        Tensor value;
        const char* op;
        std::string param_name;  // nonempty for parameter leaves
        std::function<void(const Tensor& grad_out, const GradSink& add)> back;
    };

    NodeId push(Tensor value, const char* op,
                std::function<void(const Tensor&, const GradSink&)> back);
    NodeId segment_reduce_node(NodeId values, std::vector<std::size_t> segment_ids,
                               std::size_t n_segments, ReduceMode mode);

    std::vector<Node> nodes_;
    std::map<std::string, NodeId> param_nodes_;
};

}  // namespace geopli
