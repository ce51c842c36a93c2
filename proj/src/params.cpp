// SPDX-License-Identifier: Apache-2.0
#include "geopli/params.hpp"

#include <cmath>

#include "geopli/errors.hpp"

namespace geopli {

void ParamStore::add(const std::string& name, Tensor value) {
    if (has(name)) throw ContractError("parameter '" + name + "' already exists");
    entries_.emplace(name, std::move(value));
}

const Tensor& ParamStore::get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ContractError("unknown parameter '" + name + "'");
    return it->second;
}

void ParamStore::set(const std::string& name, const Tensor& value) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ContractError("unknown parameter '" + name + "'");
    if (!it->second.same_shape(value)) {
        throw ContractError("shape of parameter '" + name + "' is immutable: " +
                            it->second.shape_str() + " vs " + value.shape_str());
    }
    it->second = value;
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, _] : entries_) out.push_back(name);
    return out;
}

std::size_t ParamStore::total_values() const {
    std::size_t n = 0;
    for (const auto& [_, t] : entries_) n += t.size();
    return n;
}

bool ParamStore::operator==(const ParamStore& other) const {
    if (seed_ != other.seed_ || adam_t_ != other.adam_t_) return false;
    auto same = [](const std::map<std::string, Tensor>& a, const std::map<std::string, Tensor>& b) {
        if (a.size() != b.size()) return false;
        for (const auto& [name, t] : a) {
            auto it = b.find(name);
            if (it == b.end() || !t.same_shape(it->second) || t.data() != it->second.data())
                return false;
        }
        return true;
    };
    return same(entries_, other.entries_) && same(adam_m_, other.adam_m_) &&
           same(adam_v_, other.adam_v_);
}

void adam_step(ParamStore& params, const GradMap& grads, const AdamConfig& config,
               std::uint64_t t) {
    if (t == 0) throw ContractError("adam_step requires a 1-based step count");
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
    for (const auto& [name, grad] : grads) {
        const Tensor& p = params.get(name);
        if (!p.same_shape(grad)) {
            throw ContractError("gradient shape " + grad.shape_str() + " does not match parameter '" +
                                name + "' " + p.shape_str());
        }
        auto mit = params.adam_m().find(name);
        if (mit == params.adam_m().end()) {
            mit = params.adam_m().emplace(name, Tensor(p.shape())).first;
            params.adam_v().emplace(name, Tensor(p.shape()));
        }
        Tensor& m = mit->second;
        Tensor& v = params.adam_v().at(name);
        Tensor updated = p;
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            updated[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
        }
        params.set(name, updated);
    }
}

GradMap full_gradients(const Tape& tape, NodeId loss, const ParamStore& params) {
    GradMap grads = tape.backward(loss);
    for (const auto& [name, value] : params.entries()) {
        if (grads.find(name) == grads.end()) grads.emplace(name, Tensor(value.shape()));
    }
    return grads;
}

}  // namespace geopli
