// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "geopli/egnn.hpp"
#include "geopli/errors.hpp"
#include "geopli/synth.hpp"
#include "geopli/train.hpp"

namespace geopli {

// Bad user input at the CLI surface: unknown config keys, unparseable
// values, out-of-range flags. Maps to exit code 1.
class UsageError : public Error {
public:
    using Error::Error;
};

// Flat key = value run configuration. Defaults are documented in the
// README; every key is listed in apply_kv, and anything else is a hard
// error. Precedence: defaults < config file < GEOPLIH_SEED < flags.
struct RunConfig {
    // Paths
    std::string frames_dir;
    std::string labels_csv;
    std::string out_dir = "out";
    std::string checkpoint_in;

    LayerConfig model;
    GraphBuildConfig graph;
    TrainConfig train;

    // Generator
    std::size_t synth_targets = 3;
    std::size_t synth_frames = 200;
    std::size_t synth_complexes = 200;
    std::size_t synth_protein_atoms = 12;
    std::size_t synth_ligand_atoms = 5;
    double synth_dt = 0.15;
    double synth_spring_constant = 3.0;
    double synth_noise_sigma = 0.05;
    std::string synth_mode = "trajectory";  // or "affinity"

    std::vector<double> bin_edges;  // empty = unit bins over the label range
    std::size_t threads = 1;

    // Applies one key = value setting; throws UsageError on unknown keys or
    // bad values.
    void apply_kv(const std::string& key, const std::string& value);
    // Reads a config file, then the GEOPLIH_SEED environment override.
    void load_file(const std::string& path);
    void apply_env();

    SynthSpec synth_spec(std::size_t target_index) const;
};

}  // namespace geopli
