// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "geopli/params.hpp"

namespace geopli {

// Self-describing binary checkpoint: magic, format version, seed, Adam step
// count, then named tensors for parameters and both moment buffers. Doubles
// are stored as their little-endian bit patterns, so write -> read -> write
// is byte-identical.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ParamStore& params, const std::string& path);
ParamStore load_checkpoint(const std::string& path);

}  // namespace geopli
