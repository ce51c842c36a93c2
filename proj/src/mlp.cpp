// SPDX-License-Identifier: Apache-2.0
#include "geopli/mlp.hpp"

#include <cmath>

#include "geopli/errors.hpp"

namespace geopli {

Activation activation_from_name(const std::string& name) {
    if (name == "silu") return Activation::SiLU;
    if (name == "leaky_relu") return Activation::LeakyReLU;
    if (name == "identity") return Activation::Identity;
    throw ContractError("unknown activation '" + name + "' (expected silu|leaky_relu|identity)");
}

std::string activation_name(Activation act) {
    switch (act) {
        case Activation::SiLU: return "silu";
        case Activation::LeakyReLU: return "leaky_relu";
        case Activation::Identity: return "identity";
    }
    return "silu";
}

void init_mlp_params(ParamStore& params, const std::string& prefix, const MlpSpec& spec, Rng& rng,
                     double final_weight_scale) {
    if (spec.sizes.size() < 2) throw ContractError("MLP spec needs at least two layer sizes");
    for (std::size_t k = 0; k + 1 < spec.sizes.size(); ++k) {
        const std::size_t fan_in = spec.sizes[k];
        const std::size_t fan_out = spec.sizes[k + 1];
        const bool last = k + 2 == spec.sizes.size();
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in + fan_out)) *
                             (last ? final_weight_scale : 1.0);
        Tensor w({fan_in, fan_out});
        for (double& v : w.data()) v = scale * rng.gaussian();
        params.add(prefix + ".w" + std::to_string(k), std::move(w));
        params.add(prefix + ".b" + std::to_string(k), Tensor({1, fan_out}));
    }
}

NodeId mlp_forward(Tape& tape, const ParamStore& params, const std::string& prefix,
                   NodeId input, const MlpSpec& spec) {
    NodeId h = input;
    for (std::size_t k = 0; k + 1 < spec.sizes.size(); ++k) {
        const std::string idx = std::to_string(k);
        const Tensor& w = params.get(prefix + ".w" + idx);
        if (tape.value(h).cols() != w.shape()[0]) {
            throw DimensionError("MLP '" + prefix + "' layer " + idx + " expects input width " +
                                 std::to_string(w.shape()[0]) + ", got " +
                                 std::to_string(tape.value(h).cols()));
        }
        const NodeId wn = tape.param(prefix + ".w" + idx, w);
        const NodeId bn = tape.param(prefix + ".b" + idx, params.get(prefix + ".b" + idx));
        h = tape.add(tape.matmul(h, wn), bn);
        const bool last = k + 2 == spec.sizes.size();
        if (!last) {
            switch (spec.activation) {
                case Activation::SiLU: h = tape.silu(h); break;
                case Activation::LeakyReLU: h = tape.leaky_relu(h, spec.leaky_slope); break;
                case Activation::Identity: break;
            }
        }
    }
    return h;
}

Tensor mlp_eval(const ParamStore& params, const std::string& prefix, const Tensor& input,
                const MlpSpec& spec) {
    Tape tape;
    const NodeId in = tape.constant(input);
    const NodeId out = mlp_forward(tape, params, prefix, in, spec);
    return tape.value(out);
}

}  // namespace geopli
