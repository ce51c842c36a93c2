// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "geopli/params.hpp"
#include "geopli/rng.hpp"
#include "geopli/tape.hpp"

namespace geopli {

enum class Activation { SiLU, LeakyReLU, Identity };

Activation activation_from_name(const std::string& name);
std::string activation_name(Activation act);

// Layer-size chain [in, hidden..., out]. The activation is applied after
// every layer except the last.
struct MlpSpec {
    std::vector<std::size_t> sizes;
    Activation activation = Activation::SiLU;
    double leaky_slope = 0.2;

    std::size_t n_layers() const { return sizes.size() - 1; }
    std::size_t in_dim() const { return sizes.front(); }
    std::size_t out_dim() const { return sizes.back(); }
};

// Creates "<prefix>.w<k>" / "<prefix>.b<k>" entries. Weights are
// Xavier-normal, biases zero; the last layer's weights are additionally
// scaled by final_weight_scale (coordinate MLPs start near zero so early
// updates cannot blow up the geometry).
void init_mlp_params(ParamStore& params, const std::string& prefix, const MlpSpec& spec, Rng& rng,
                     double final_weight_scale = 1.0);

// Forward through the parameter slice at `prefix`. Throws DimensionError
// naming the offending layer on any width mismatch.
NodeId mlp_forward(Tape& tape, const ParamStore& params, const std::string& prefix,
                   NodeId input, const MlpSpec& spec);

// Convenience eval without an external tape; same code path as mlp_forward.
Tensor mlp_eval(const ParamStore& params, const std::string& prefix, const Tensor& input,
                const MlpSpec& spec);

}  // namespace geopli
