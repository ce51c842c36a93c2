// SPDX-License-Identifier: Apache-2.0
#include "geopli/tape.hpp"

#include <limits>
#include <string>
#include <utility>

#include "geopli/errors.hpp"

namespace geopli {

namespace {

Tensor transpose(const Tensor& a) {
    const std::size_t n = a.rows();
    const std::size_t m = a.cols();
    Tensor out({m, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out.at(j, i) = a.at(i, j);
    return out;
}

Tensor as_matrix(const Tensor& a) {
    if (a.rank() == 2) return a;
    return Tensor({1, a.size()}, a.data());
}

bool is_row_broadcast(const Tensor& a, const Tensor& b) {
    // b is a [1 x d] or [d] bias against a's [N x d].
    return b.size() == a.cols() && b.rows() == 1 && a.rows() > 1;
}

bool is_col_broadcast(const Tensor& col, const Tensor& full) {
    return col.rank() == 2 && col.shape()[1] == 1 && full.rank() == 2 &&
           full.shape()[0] == col.shape()[0] && full.shape()[1] > 1;
}

}  // namespace

NodeId Tape::push(Tensor value, const char* op,
                  std::function<void(const Tensor&, const GradSink&)> back) {
    if (!value.all_finite()) {
        throw NumericError(std::string("non-finite value produced by op '") + op + "'");
    }
    nodes_.push_back(Node{std::move(value), op, {}, std::move(back)});
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::constant(Tensor value) {
    return push(std::move(value), "constant", nullptr);
}

NodeId Tape::param(const std::string& name, const Tensor& value) {
    auto it = param_nodes_.find(name);
    if (it != param_nodes_.end()) return it->second;
    const NodeId id = push(value, "param", nullptr);
    nodes_[static_cast<std::size_t>(id)].param_name = name;
    param_nodes_[name] = id;
    return id;
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    Tensor out = geopli::matmul(value(a), value(b));
    return push(std::move(out), "matmul", [this, a, b](const Tensor& g, const GradSink& add) {
        add(a, geopli::matmul(g, transpose(value(b))));
        add(b, geopli::matmul(transpose(value(a)), g));
    });
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (va.same_shape(vb)) {
        Tensor out = va;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
        return push(std::move(out), "add", [a, b](const Tensor& g, const GradSink& add) {
            add(a, g);
            add(b, g);
        });
    }
    if (is_row_broadcast(va, vb)) {
        const std::size_t d = va.cols();
        Tensor out = va;
        for (std::size_t r = 0; r < va.rows(); ++r)
            for (std::size_t c = 0; c < d; ++c) out.at(r, c) += vb[c];
        return push(std::move(out), "add", [a, b, d](const Tensor& g, const GradSink& add) {
            add(a, g);
            Tensor gb({1, d});
            for (std::size_t r = 0; r < g.rows(); ++r)
                for (std::size_t c = 0; c < d; ++c) gb[c] += g.at(r, c);
            add(b, gb);
        });
    }
    throw DimensionError("add shapes incompatible: " + va.shape_str() + " vs " + vb.shape_str());
}

NodeId Tape::sub(NodeId a, NodeId b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (!va.same_shape(vb)) {
        throw DimensionError("sub shapes differ: " + va.shape_str() + " vs " + vb.shape_str());
    }
    Tensor out = va;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
    return push(std::move(out), "sub", [a, b](const Tensor& g, const GradSink& add) {
        add(a, g);
        Tensor neg = g;
        for (double& v : neg.data()) v = -v;
        add(b, neg);
    });
}

NodeId Tape::mul(NodeId a, NodeId b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (va.same_shape(vb)) {
        Tensor out = va;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
        return push(std::move(out), "mul", [this, a, b](const Tensor& g, const GradSink& add) {
            Tensor ga = g;
            Tensor gb = g;
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] = g[i] * value(b)[i];
                gb[i] = g[i] * value(a)[i];
            }
            add(a, ga);
            add(b, gb);
        });
    }
    const bool a_is_col = is_col_broadcast(va, vb);
    const bool b_is_col = is_col_broadcast(vb, va);
    if (a_is_col || b_is_col) {
        const NodeId col = a_is_col ? a : b;
        const NodeId full = a_is_col ? b : a;
        const Tensor& vc = value(col);
        const Tensor& vf = value(full);
        const std::size_t n = vf.rows();
        const std::size_t d = vf.cols();
        Tensor out({n, d});
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) out.at(r, c) = vf.at(r, c) * vc[r];
        return push(std::move(out), "mul",
                    [this, col, full, n, d](const Tensor& g, const GradSink& add) {
                        Tensor gf({n, d});
                        Tensor gc({n, 1});
                        const Tensor& vc = value(col);
                        const Tensor& vf = value(full);
                        for (std::size_t r = 0; r < n; ++r) {
                            double acc = 0.0;
                            for (std::size_t c = 0; c < d; ++c) {
                                gf.at(r, c) = g.at(r, c) * vc[r];
                                acc += g.at(r, c) * vf.at(r, c);
                            }
                            gc[r] = acc;
                        }
                        add(full, gf);
                        add(col, gc);
                    });
    }
    throw DimensionError("mul shapes incompatible: " + va.shape_str() + " vs " + vb.shape_str());
}

NodeId Tape::scale(NodeId a, double factor) {
    Tensor out = value(a);
    for (double& v : out.data()) v *= factor;
    return push(std::move(out), "scale", [a, factor](const Tensor& g, const GradSink& add) {
        Tensor ga = g;
        for (double& v : ga.data()) v *= factor;
        add(a, ga);
    });
}

NodeId Tape::silu(NodeId a) {
    Tensor out = value(a);
    for (double& v : out.data()) v = geopli::silu(v);
    return push(std::move(out), "silu", [this, a](const Tensor& g, const GradSink& add) {
        Tensor ga = g;
        const Tensor& va = value(a);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = g[i] * silu_grad(va[i]);
        add(a, ga);
    });
}

NodeId Tape::leaky_relu(NodeId a, double slope) {
    Tensor out = value(a);
    for (double& v : out.data()) v = geopli::leaky_relu(v, slope);
    return push(std::move(out), "leaky_relu", [this, a, slope](const Tensor& g, const GradSink& add) {
        Tensor ga = g;
        const Tensor& va = value(a);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = g[i] * leaky_relu_grad(va[i], slope);
        add(a, ga);
    });
}

NodeId Tape::concat_cols(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw ContractError("concat_cols needs at least one input");
    const std::size_t n = value(parts[0]).rows();
    std::size_t total = 0;
    for (NodeId p : parts) {
        if (value(p).rows() != n) {
            throw DimensionError("concat_cols row mismatch: " + value(p).shape_str());
        }
        total += value(p).cols();
    }
    Tensor out({n, total});
    std::size_t offset = 0;
    for (NodeId p : parts) {
        const Tensor vp = as_matrix(value(p));
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < vp.cols(); ++c) out.at(r, offset + c) = vp.at(r, c);
        offset += vp.cols();
    }
    std::vector<NodeId> parts_copy = parts;
    return push(std::move(out), "concat_cols",
                [this, parts_copy, n](const Tensor& g, const GradSink& add) {
                    std::size_t offset = 0;
                    for (NodeId p : parts_copy) {
                        const std::size_t w = value(p).cols();
                        Tensor gp(value(p).shape());
                        for (std::size_t r = 0; r < n; ++r)
                            for (std::size_t c = 0; c < w; ++c)
                                gp[r * w + c] = g.at(r, offset + c);
                        add(p, gp);
                        offset += w;
                    }
                });
}

NodeId Tape::gather_rows(NodeId a, std::vector<std::size_t> indices) {
    const Tensor& va = value(a);
    const std::size_t n = va.rows();
    const std::size_t d = va.cols();
    if (indices.empty()) throw ContractError("gather_rows needs at least one index");
    for (std::size_t idx : indices) {
        if (idx >= n) {
            throw IndexError("gather_rows index " + std::to_string(idx) + " out of range for " +
                             std::to_string(n) + " rows");
        }
    }
    Tensor out({indices.size(), d});
    for (std::size_t r = 0; r < indices.size(); ++r)
        for (std::size_t c = 0; c < d; ++c) out.at(r, c) = va.at(indices[r], c);
    return push(std::move(out), "gather_rows",
                [this, a, indices = std::move(indices), d](const Tensor& g, const GradSink& add) {
                    Tensor ga(value(a).shape());
                    for (std::size_t r = 0; r < indices.size(); ++r)
                        for (std::size_t c = 0; c < d; ++c)
                            ga[indices[r] * d + c] += g.at(r, c);
                    add(a, ga);
                });
}

NodeId Tape::segment_reduce_node(NodeId values, std::vector<std::size_t> segment_ids,
                                 std::size_t n_segments, ReduceMode mode) {
    const Tensor& vals = value(values);
    const std::size_t d = vals.cols();
    if (mode == ReduceMode::Max) {
        std::vector<std::size_t> argmax;
        Tensor out = segment_max_with_argmax(vals, segment_ids, n_segments, argmax);
        return push(std::move(out), "segment_max",
                    [this, values, argmax = std::move(argmax), n_segments, d](
                        const Tensor& g, const GradSink& add) {
                        Tensor gv(value(values).shape());
                        for (std::size_t s = 0; s < n_segments; ++s)
                            for (std::size_t c = 0; c < d; ++c) {
                                const std::size_t r = argmax[s * d + c];
                                if (r != std::numeric_limits<std::size_t>::max())
                                    gv[r * d + c] += g.at(s, c);
                            }
                        add(values, gv);
                    });
    }
    Tensor out = segment_reduce(vals, segment_ids, n_segments, mode);
    std::vector<double> weight(segment_ids.size(), 1.0);
    if (mode == ReduceMode::Mean) {
        std::vector<std::size_t> counts(n_segments, 0);
        for (std::size_t id : segment_ids) ++counts[id];
        for (std::size_t r = 0; r < segment_ids.size(); ++r)
            weight[r] = 1.0 / static_cast<double>(counts[segment_ids[r]]);
    }
    const char* name = mode == ReduceMode::Sum ? "segment_sum" : "segment_mean";
    return push(std::move(out), name,
                [this, values, segment_ids = std::move(segment_ids), weight = std::move(weight),
                 d](const Tensor& g, const GradSink& add) {
                    Tensor gv(value(values).shape());
                    for (std::size_t r = 0; r < segment_ids.size(); ++r)
                        for (std::size_t c = 0; c < d; ++c)
                            gv[r * d + c] = weight[r] * g.at(segment_ids[r], c);
                    add(values, gv);
                });
}

NodeId Tape::segment_sum(NodeId values, std::vector<std::size_t> segment_ids,
                         std::size_t n_segments) {
    return segment_reduce_node(values, std::move(segment_ids), n_segments, ReduceMode::Sum);
}

NodeId Tape::segment_mean(NodeId values, std::vector<std::size_t> segment_ids,
                          std::size_t n_segments) {
    return segment_reduce_node(values, std::move(segment_ids), n_segments, ReduceMode::Mean);
}

NodeId Tape::segment_max(NodeId values, std::vector<std::size_t> segment_ids,
                         std::size_t n_segments) {
    return segment_reduce_node(values, std::move(segment_ids), n_segments, ReduceMode::Max);
}

NodeId Tape::segment_softmax(NodeId logits, std::vector<std::size_t> segment_ids,
                             std::size_t n_segments) {
    Tensor probs = geopli::segment_softmax(value(logits), segment_ids, n_segments);
    Tensor out = probs;
    return push(std::move(out), "segment_softmax",
                [this, logits, segment_ids = std::move(segment_ids), probs = std::move(probs),
                 n_segments](const Tensor& g, const GradSink& add) {
                    // dL/dz_r = p_r * (g_r - sum_{q in segment} p_q g_q)
                    std::vector<double> seg_dot(n_segments, 0.0);
                    for (std::size_t r = 0; r < segment_ids.size(); ++r)
                        seg_dot[segment_ids[r]] += probs[r] * g[r];
                    Tensor gl(value(logits).shape());
                    for (std::size_t r = 0; r < segment_ids.size(); ++r)
                        gl[r] = probs[r] * (g[r] - seg_dot[segment_ids[r]]);
                    add(logits, gl);
                });
}

NodeId Tape::row_sum(NodeId a) {
    const Tensor& va = value(a);
    const std::size_t n = va.rows();
    const std::size_t d = va.cols();
    Tensor out({1, d});
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) out[c] += va.at(r, c);
    return push(std::move(out), "row_sum", [this, a, n, d](const Tensor& g, const GradSink& add) {
        Tensor ga(value(a).shape());
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) ga[r * d + c] = g[c];
        add(a, ga);
    });
}

NodeId Tape::col_sum(NodeId a) {
    const Tensor& va = value(a);
    const std::size_t n = va.rows();
    const std::size_t d = va.cols();
    Tensor out({n, 1});
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) out[r] += va.at(r, c);
    return push(std::move(out), "col_sum", [this, a, n, d](const Tensor& g, const GradSink& add) {
        Tensor ga(value(a).shape());
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) ga[r * d + c] = g[r];
        add(a, ga);
    });
}

NodeId Tape::sum_all(NodeId a) {
    const Tensor& va = value(a);
    double acc = 0.0;
    for (double v : va.data()) acc += v;
    return push(Tensor::scalar(acc), "sum_all", [this, a](const Tensor& g, const GradSink& add) {
        add(a, Tensor::full(value(a).shape(), g[0]));
    });
}

NodeId Tape::mean_all(NodeId a) {
    const Tensor& va = value(a);
    double acc = 0.0;
    for (double v : va.data()) acc += v;
    const double inv = 1.0 / static_cast<double>(va.size());
    return push(Tensor::scalar(acc * inv), "mean_all",
                [this, a, inv](const Tensor& g, const GradSink& add) {
                    add(a, Tensor::full(value(a).shape(), g[0] * inv));
                });
}

GradMap Tape::backward(NodeId loss) const {
    if (loss < 0 || static_cast<std::size_t>(loss) >= nodes_.size()) {
        throw ContractError("backward: loss node not on this tape");
    }
    if (value(loss).size() != 1) {
        throw ContractError("backward requires a scalar loss, got " + value(loss).shape_str());
    }
    std::vector<Tensor> grads(nodes_.size());
    std::vector<bool> touched(nodes_.size(), false);
    grads[static_cast<std::size_t>(loss)] = Tensor::full(value(loss).shape(), 1.0);
    touched[static_cast<std::size_t>(loss)] = true;

    const GradSink add = [&](NodeId parent, const Tensor& contribution) {
        const auto p = static_cast<std::size_t>(parent);
        if (!touched[p]) {
            grads[p] = contribution;
            touched[p] = true;
        } else {
            Tensor& g = grads[p];
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += contribution[i];
        }
    };

    for (std::size_t i = nodes_.size(); i-- > 0;) {
        if (!touched[i] || !nodes_[i].back) continue;
        nodes_[i].back(grads[i], add);
    }

    GradMap out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].param_name.empty()) continue;
        if (touched[i]) {
            out[nodes_[i].param_name] = grads[i];
        }
    }
    return out;
}

}  // namespace geopli
