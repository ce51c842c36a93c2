// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geopli/tape.hpp"
#include "geopli/tensor.hpp"

namespace geopli {

// All learnable tensors, addressable by stable names. Shapes are frozen at
// creation; set() enforces them. Adam moment buffers live here too so a
// checkpoint captures the full optimizer state.
class ParamStore {
public:
    ParamStore() = default;
    explicit ParamStore(std::uint64_t seed) : seed_(seed) {}

    void add(const std::string& name, Tensor value);
    bool has(const std::string& name) const { return entries_.count(name) != 0; }
    const Tensor& get(const std::string& name) const;
    void set(const std::string& name, const Tensor& value);

    const std::map<std::string, Tensor>& entries() const { return entries_; }
    std::vector<std::string> names() const;
    std::size_t total_values() const;

    std::uint64_t seed() const { return seed_; }
    void set_seed(std::uint64_t seed) { seed_ = seed; }

    std::uint64_t adam_step_count() const { return adam_t_; }
    void set_adam_step_count(std::uint64_t t) { adam_t_ = t; }

    std::map<std::string, Tensor>& adam_m() { return adam_m_; }
    std::map<std::string, Tensor>& adam_v() { return adam_v_; }
    const std::map<std::string, Tensor>& adam_m() const { return adam_m_; }
    const std::map<std::string, Tensor>& adam_v() const { return adam_v_; }

    bool operator==(const ParamStore& other) const;

private:
    std::map<std::string, Tensor> entries_;
    std::map<std::string, Tensor> adam_m_;
    std::map<std::string, Tensor> adam_v_;
    std::uint64_t seed_ = 0;
    std::uint64_t adam_t_ = 0;
};

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One bias-corrected Adam update. `grads` may cover any subset of the
// parameters; moment buffers are created on first touch and persist in the
// store. `t` is the 1-based step count used for bias correction.
void adam_step(ParamStore& params, const GradMap& grads, const AdamConfig& config,
               std::uint64_t t);

// backward() over the tape, then zero-filled entries for parameters the
// forward pass never touched, so the result always covers the whole store.
GradMap full_gradients(const Tape& tape, NodeId loss, const ParamStore& params);

}  // namespace geopli
