// SPDX-License-Identifier: Apache-2.0
#include "geopli/egnn.hpp"

#include <cmath>

#include "geopli/errors.hpp"

namespace geopli {

namespace {

std::string layer_prefix(std::size_t layer) { return "layer" + std::to_string(layer); }

NodeId zeros_node(Tape& tape, std::size_t rows, std::size_t cols) {
    return tape.constant(Tensor({rows, cols}));
}

}  // namespace

CoordUpdateForm coord_update_form_from_name(const std::string& name) {
    if (name == "relative_vector") return CoordUpdateForm::RelativeVector;
    if (name == "literal_scalar") return CoordUpdateForm::LiteralScalar;
    throw ContractError("unknown coord_update_form '" + name +
                        "' (expected relative_vector|literal_scalar)");
}

std::string coord_update_form_name(CoordUpdateForm form) {
    return form == CoordUpdateForm::RelativeVector ? "relative_vector" : "literal_scalar";
}

void LayerConfig::validate() const {
    if (feature_dim == 0) throw ContractError("feature_dim must be positive");
    if (n_layers == 0) throw ContractError("n_layers must be at least 1");
    if (th_dist <= 0.0) throw ContractError("th_dist must be positive");
    if (hidden_width == 0) throw ContractError("hidden_width must be positive");
    if (attention_heads == 0) throw ContractError("attention_heads must be at least 1");
    if (feature_dim % attention_heads != 0) {
        throw ContractError("feature_dim must be divisible by attention_heads");
    }
}

MlpSpec LayerConfig::embed_spec() const {
    return MlpSpec{{FeatureSchema::kWidth, feature_dim}, Activation::Identity};
}

MlpSpec LayerConfig::phi_e_spec() const {
    return MlpSpec{{2 * feature_dim + 1, hidden_width, hidden_width, feature_dim},
                   Activation::SiLU};
}

MlpSpec LayerConfig::phi_aggr_spec() const {
    return MlpSpec{{3 * feature_dim, hidden_width, hidden_width, feature_dim}, Activation::SiLU};
}

MlpSpec LayerConfig::phi_x_spec() const {
    const std::size_t out = coord_update_form == CoordUpdateForm::RelativeVector ? 1 : 3;
    return MlpSpec{{feature_dim, hidden_width, hidden_width, out}, Activation::SiLU};
}

MlpSpec LayerConfig::phi_n_spec() const {
    return MlpSpec{{3 * feature_dim, hidden_width, hidden_width, feature_dim}, Activation::SiLU};
}

MlpSpec LayerConfig::head_spec() const {
    return MlpSpec{{2 * feature_dim, hidden_width, hidden_width, 1}, Activation::SiLU};
}

DirectedEdges directed_edges(const MolecularGraph& graph) {
    DirectedEdges e;
    e.degree.assign(graph.n_nodes(), 0);
    e.target.reserve(2 * graph.edges.size());
    e.source.reserve(2 * graph.edges.size());
    for (const auto& [a, b] : graph.edges) {
        if (a == b || a >= graph.n_nodes() || b >= graph.n_nodes()) {
            throw ContractError("graph edge (" + std::to_string(a) + "," + std::to_string(b) +
                                ") is invalid for " + std::to_string(graph.n_nodes()) + " nodes");
        }
        e.target.push_back(a);
        e.source.push_back(b);
        e.target.push_back(b);
        e.source.push_back(a);
        ++e.degree[a];
        ++e.degree[b];
    }
    return e;
}

ParamStore init_model_params(const LayerConfig& config, std::uint64_t seed) {
    config.validate();
    ParamStore params(seed);
    Rng rng(seed);
    init_mlp_params(params, "embed", config.embed_spec(), rng);
    const std::size_t head_dim = config.feature_dim / config.attention_heads;
    for (std::size_t l = 0; l < config.n_layers; ++l) {
        const std::string p = layer_prefix(l);
        init_mlp_params(params, p + ".phi_e", config.phi_e_spec(), rng);
        init_mlp_params(params, p + ".phi_aggr", config.phi_aggr_spec(), rng);
        // Coordinate MLP output starts near zero so layer-0 geometry stays
        // close to the input.
        init_mlp_params(params, p + ".phi_x", config.phi_x_spec(), rng, 0.01);
        for (std::size_t h = 0; h < config.attention_heads; ++h) {
            const std::string ap = p + ".att" + std::to_string(h);
            const double w_scale =
                std::sqrt(2.0 / static_cast<double>(config.feature_dim + head_dim));
            Tensor w({config.feature_dim, head_dim});
            for (double& v : w.data()) v = w_scale * rng.gaussian();
            params.add(ap + ".w", std::move(w));
            const double a_scale = std::sqrt(1.0 / static_cast<double>(2 * head_dim));
            Tensor a({2 * head_dim, 1});
            for (double& v : a.data()) v = a_scale * rng.gaussian();
            params.add(ap + ".a", std::move(a));
        }
        init_mlp_params(params, p + ".phi_n", config.phi_n_spec(), rng);
    }
    init_mlp_params(params, "head", config.head_spec(), rng);
    return params;
}

bool is_encoder_param(const std::string& name) { return name.rfind("head.", 0) != 0; }

NodeId embed_inputs(Tape& tape, const ParamStore& params, const LayerConfig& config,
                    const MolecularGraph& graph) {
    if (graph.node_features.cols() != FeatureSchema::kWidth) {
        throw ContractError("expected " + std::to_string(FeatureSchema::kWidth) +
                            "-wide node features, got " +
                            std::to_string(graph.node_features.cols()));
    }
    const NodeId features = tape.constant(graph.node_features);
    return mlp_forward(tape, params, "embed", features, config.embed_spec());
}

NodeId edge_sq_dist(Tape& tape, NodeId x, const DirectedEdges& edges) {
    const NodeId xi = tape.gather_rows(x, edges.target);
    const NodeId xj = tape.gather_rows(x, edges.source);
    const NodeId diff = tape.sub(xi, xj);
    return tape.col_sum(tape.mul(diff, diff));
}

NodeId compute_messages(Tape& tape, const ParamStore& params, const LayerConfig& config,
                        std::size_t layer, NodeId h, NodeId x, const DirectedEdges& edges) {
    if (edges.n_edges() == 0) {
        throw ContractError("compute_messages requires at least one edge");
    }
    const NodeId hi = tape.gather_rows(h, edges.target);
    const NodeId hj = tape.gather_rows(h, edges.source);
    const NodeId sq = edge_sq_dist(tape, x, edges);
    const NodeId packed = tape.concat_cols({hi, hj, sq});
    return mlp_forward(tape, params, layer_prefix(layer) + ".phi_e", packed, config.phi_e_spec());
}

NodeId aggregate_messages(Tape& tape, const ParamStore& params, const LayerConfig& config,
                          std::size_t layer, NodeId messages, const DirectedEdges& edges,
                          std::size_t n_nodes) {
    NodeId packed;
    if (edges.n_edges() == 0) {
        packed = zeros_node(tape, n_nodes, 3 * config.feature_dim);
    } else {
        const NodeId s = tape.segment_sum(messages, edges.target, n_nodes);
        const NodeId m = tape.segment_mean(messages, edges.target, n_nodes);
        const NodeId mx = tape.segment_max(messages, edges.target, n_nodes);
        packed = tape.concat_cols({s, m, mx});
    }
    return mlp_forward(tape, params, layer_prefix(layer) + ".phi_aggr", packed,
                       config.phi_aggr_spec());
}

NodeId update_coordinates(Tape& tape, const ParamStore& params, const LayerConfig& config,
                          std::size_t layer, NodeId x, NodeId messages,
                          const DirectedEdges& edges, std::size_t n_nodes) {
    if (edges.n_edges() == 0) return x;
    const std::string prefix = layer_prefix(layer) + ".phi_x";
    const NodeId weights = mlp_forward(tape, params, prefix, messages, config.phi_x_spec());

    if (config.coord_update_form == CoordUpdateForm::RelativeVector) {
        // x_i += (1/|N(i)|) * sum_j (x_i - x_j) * phi_x(m_ij)
        const NodeId xi = tape.gather_rows(x, edges.target);
        const NodeId xj = tape.gather_rows(x, edges.source);
        const NodeId rel = tape.sub(xi, xj);
        const NodeId contrib = tape.mul(weights, rel);
        const NodeId summed = tape.segment_sum(contrib, edges.target, n_nodes);
        Tensor inv_deg({n_nodes, 1});
        for (std::size_t i = 0; i < n_nodes; ++i) {
            inv_deg[i] = 1.0 / static_cast<double>(std::max<std::size_t>(edges.degree[i], 1));
        }
        const NodeId scaled = tape.mul(tape.constant(std::move(inv_deg)), summed);
        return tape.add(x, scaled);
    }
    // Literal reading: x_i += sum_j ||x_i - x_j||^2 * phi_x(m_ij), phi_x in R^3.
    const NodeId sq = edge_sq_dist(tape, x, edges);
    const NodeId contrib = tape.mul(sq, weights);
    const NodeId summed = tape.segment_sum(contrib, edges.target, n_nodes);
    return tape.add(x, summed);
}

std::pair<NodeId, NodeId> cross_attention(Tape& tape, const ParamStore& params,
                                          const LayerConfig& config, std::size_t layer,
                                          NodeId h_a, NodeId x_a, NodeId h_b, NodeId x_b) {
    const Tensor& xa = tape.value(x_a);
    const Tensor& xb = tape.value(x_b);
    const std::size_t na = xa.rows();
    const std::size_t nb = xb.rows();
    const double th_sq = config.th_dist * config.th_dist;

    // Inter-graph neighborhoods from the current coordinates; strict "<".
    std::vector<std::size_t> pair_a, pair_b;
    for (std::size_t i = 0; i < na; ++i) {
        for (std::size_t j = 0; j < nb; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < 3; ++c) {
                const double d = xa.at(i, c) - xb.at(j, c);
                acc += d * d;
            }
            if (acc < th_sq) {
                pair_a.push_back(i);
                pair_b.push_back(j);
            }
        }
    }

    const std::size_t d = config.feature_dim;
    if (pair_a.empty()) {
        return {zeros_node(tape, na, d), zeros_node(tape, nb, d)};
    }

    // One attended message per direction and head:
    //   mu_i = sum_j softmax_j(LeakyReLU(a . [W h_i || W h_j])) * W h_j
    auto attend = [&](NodeId h_query, NodeId h_key, const std::vector<std::size_t>& q_idx,
                      const std::vector<std::size_t>& k_idx, std::size_t n_query) {
        std::vector<NodeId> head_outputs;
        for (std::size_t head = 0; head < config.attention_heads; ++head) {
            const std::string ap = layer_prefix(layer) + ".att" + std::to_string(head);
            const NodeId w = tape.param(ap + ".w", params.get(ap + ".w"));
            const NodeId attn = tape.param(ap + ".a", params.get(ap + ".a"));
            const NodeId wh_query = tape.matmul(h_query, w);
            const NodeId wh_key = tape.matmul(h_key, w);
            const NodeId qk = tape.concat_cols(
                {tape.gather_rows(wh_query, q_idx), tape.gather_rows(wh_key, k_idx)});
            const NodeId logits = tape.leaky_relu(tape.matmul(qk, attn), 0.2);
            const NodeId coeff = tape.segment_softmax(logits, q_idx, n_query);
            const NodeId weighted = tape.mul(coeff, tape.gather_rows(wh_key, k_idx));
            head_outputs.push_back(tape.segment_sum(weighted, q_idx, n_query));
        }
        return head_outputs.size() == 1 ? head_outputs[0] : tape.concat_cols(head_outputs);
    };

    const NodeId mu_a = attend(h_a, h_b, pair_a, pair_b, na);
    const NodeId mu_b = attend(h_b, h_a, pair_b, pair_a, nb);
    return {mu_a, mu_b};
}

NodeId update_node_features(Tape& tape, const ParamStore& params, const LayerConfig& config,
                            std::size_t layer, NodeId h_enc, NodeId aggregated, NodeId mu) {
    const NodeId packed = tape.concat_cols({h_enc, aggregated, mu});
    const NodeId delta = mlp_forward(tape, params, layer_prefix(layer) + ".phi_n", packed,
                                     config.phi_n_spec());
    return tape.add(h_enc, delta);
}

ComplexRefs forward_complex(Tape& tape, const ParamStore& params, const MolecularGraph& protein,
                            const MolecularGraph& ligand, const LayerConfig& config,
                            bool update_coords) {
    config.validate();
    if (protein.n_nodes() == 0 || ligand.n_nodes() == 0) {
        throw ContractError("forward_complex requires nonempty graphs");
    }
    const DirectedEdges ep = directed_edges(protein);
    const DirectedEdges el = directed_edges(ligand);

    ComplexRefs refs;
    refs.h_protein = embed_inputs(tape, params, config, protein);
    refs.h_ligand = embed_inputs(tape, params, config, ligand);
    refs.x_protein = tape.constant(protein.coordinates);
    refs.x_ligand = tape.constant(ligand.coordinates);

    for (std::size_t l = 0; l < config.n_layers; ++l) {
        NodeId m_p = -1, m_l = -1;
        if (ep.n_edges() > 0) {
            m_p = compute_messages(tape, params, config, l, refs.h_protein, refs.x_protein, ep);
        }
        if (el.n_edges() > 0) {
            m_l = compute_messages(tape, params, config, l, refs.h_ligand, refs.x_ligand, el);
        }
        const NodeId agg_p =
            aggregate_messages(tape, params, config, l, m_p, ep, protein.n_nodes());
        const NodeId agg_l =
            aggregate_messages(tape, params, config, l, m_l, el, ligand.n_nodes());
        if (update_coords) {
            if (ep.n_edges() > 0) {
                refs.x_protein = update_coordinates(tape, params, config, l, refs.x_protein, m_p,
                                                    ep, protein.n_nodes());
            }
            if (el.n_edges() > 0) {
                refs.x_ligand = update_coordinates(tape, params, config, l, refs.x_ligand, m_l,
                                                   el, ligand.n_nodes());
            }
        }
        const auto [mu_p, mu_l] = cross_attention(tape, params, config, l, refs.h_protein,
                                                  refs.x_protein, refs.h_ligand, refs.x_ligand);
        refs.h_protein =
            update_node_features(tape, params, config, l, refs.h_protein, agg_p, mu_p);
        refs.h_ligand = update_node_features(tape, params, config, l, refs.h_ligand, agg_l, mu_l);
    }
    return refs;
}

ComplexState materialize(const Tape& tape, const ComplexRefs& refs) {
    return ComplexState{tape.value(refs.h_protein), tape.value(refs.h_ligand),
                        tape.value(refs.x_protein), tape.value(refs.x_ligand)};
}

NodeId affinity_prediction(Tape& tape, const ParamStore& params, const LayerConfig& config,
                           const ComplexRefs& refs) {
    const NodeId pooled =
        tape.concat_cols({tape.row_sum(refs.h_ligand), tape.row_sum(refs.h_protein)});
    return mlp_forward(tape, params, "head", pooled, config.head_spec());
}

}  // namespace geopli
