// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "geopli/mlp.hpp"
#include "geopli/molgraph.hpp"
#include "geopli/params.hpp"
#include "geopli/tape.hpp"

namespace geopli {

// The printed coordinate rule adds a scalar-weighted sum of squared
// distances to a 3-vector; RelativeVector is the equivariant
// relative-difference form, LiteralScalar the literal (non-equivariant)
// reading kept for ablation.
enum class CoordUpdateForm { RelativeVector, LiteralScalar };

CoordUpdateForm coord_update_form_from_name(const std::string& name);
std::string coord_update_form_name(CoordUpdateForm form);

struct LayerConfig {
    std::size_t feature_dim = 32;  // width of h_i
    std::size_t n_layers = 3;
    double th_dist = 5.0;  // cross-attention cutoff, angstrom
    CoordUpdateForm coord_update_form = CoordUpdateForm::RelativeVector;
    std::size_t attention_heads = 1;
    std::size_t hidden_width = 64;  // hidden width of every MLP

    void validate() const;

    MlpSpec embed_spec() const;     // [116, d], identity
    MlpSpec phi_e_spec() const;     // [2d+1, W, W, d]
    MlpSpec phi_aggr_spec() const;  // [3d, W, W, d]
    MlpSpec phi_x_spec() const;     // [d, W, W, 1|3]
    MlpSpec phi_n_spec() const;     // [3d, W, W, d]
    MlpSpec head_spec() const;      // [2d, W, W, 1]
};

// Both orientations of every undirected edge; target (message receiver)
// first, per-node receiver degree alongside.
struct DirectedEdges {
    std::vector<std::size_t> target;
    std::vector<std::size_t> source;
    std::vector<std::size_t> degree;  // per node
    std::size_t n_edges() const { return target.size(); }
};
DirectedEdges directed_edges(const MolecularGraph& graph);

// Deterministic parameter initialization for the full model (encoder layers
// plus the affinity head). Same seed, same bits.
ParamStore init_model_params(const LayerConfig& config, std::uint64_t seed);
// Names not belonging to the affinity head, i.e. what transfer copies.
bool is_encoder_param(const std::string& name);

// Tape handles for one complex mid-forward.
struct ComplexRefs {
    NodeId h_protein = -1;
    NodeId h_ligand = -1;
    NodeId x_protein = -1;
    NodeId x_ligand = -1;
};

// Materialized tensors of a finished forward pass.
struct ComplexState {
    Tensor h_protein;
    Tensor h_ligand;
    Tensor x_protein;
    Tensor x_ligand;
};

NodeId embed_inputs(Tape& tape, const ParamStore& params, const LayerConfig& config,
                    const MolecularGraph& graph);

// Squared distances per directed edge, [E x 1]; differentiable through x.
NodeId edge_sq_dist(Tape& tape, NodeId x, const DirectedEdges& edges);

// m_ij = phi_e(h_i || h_j || squared distance), one row per directed edge.
NodeId compute_messages(Tape& tape, const ParamStore& params, const LayerConfig& config,
                        std::size_t layer, NodeId h, NodeId x, const DirectedEdges& edges);

// M_i = phi_aggr(sum || mean || max) over incoming messages; nodes without
// neighbors aggregate three zero vectors.
NodeId aggregate_messages(Tape& tape, const ParamStore& params, const LayerConfig& config,
                          std::size_t layer, NodeId messages, const DirectedEdges& edges,
                          std::size_t n_nodes);

NodeId update_coordinates(Tape& tape, const ParamStore& params, const LayerConfig& config,
                          std::size_t layer, NodeId x, NodeId messages,
                          const DirectedEdges& edges, std::size_t n_nodes);

// Distance-gated attention in both directions; returns (mu_a, mu_b). Nodes
// with no inter-graph neighbor inside th_dist receive a zero row.
std::pair<NodeId, NodeId> cross_attention(Tape& tape, const ParamStore& params,
                                          const LayerConfig& config, std::size_t layer,
                                          NodeId h_a, NodeId x_a, NodeId h_b, NodeId x_b);

// h' = h_enc + phi_n(h_enc || M || mu).
NodeId update_node_features(Tape& tape, const ParamStore& params, const LayerConfig& config,
                            std::size_t layer, NodeId h_enc, NodeId aggregated, NodeId mu);

// Full forward: embed, then per layer messages -> aggregation -> coordinate
// update -> cross attention -> feature update. `update_coords` off freezes
// the geometry (used when fine-tuning with frozen coordinates).
ComplexRefs forward_complex(Tape& tape, const ParamStore& params, const MolecularGraph& protein,
                            const MolecularGraph& ligand, const LayerConfig& config,
                            bool update_coords = true);

ComplexState materialize(const Tape& tape, const ComplexRefs& refs);

// head(sum of ligand embeddings || sum of protein embeddings) -> [1 x 1].
NodeId affinity_prediction(Tape& tape, const ParamStore& params, const LayerConfig& config,
                           const ComplexRefs& refs);

}  // namespace geopli
