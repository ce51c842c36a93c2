// SPDX-License-Identifier: Apache-2.0
#include "geopli/runconfig.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "geopli/errors.hpp"
#include "geopli/textio.hpp"

namespace geopli {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::size_t to_count(const std::string& key, const std::string& value, bool allow_zero = false) {
    long long v;
    try {
        v = parse_int(value);
    } catch (const ParseError&) {
        throw UsageError("config key '" + key + "' expects an integer, got '" + value + "'");
    }
    if (v < 0 || (!allow_zero && v == 0)) {
        throw UsageError("config key '" + key + "' must be positive, got '" + value + "'");
    }
    return static_cast<std::size_t>(v);
}

double to_real(const std::string& key, const std::string& value) {
    try {
        return parse_double(value);
    } catch (const ParseError&) {
        throw UsageError("config key '" + key + "' expects a number, got '" + value + "'");
    }
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw UsageError("config key '" + key + "' expects true|false, got '" + value + "'");
}

}  // namespace

void RunConfig::apply_kv(const std::string& key, const std::string& value) {
    if (key == "frames_dir") frames_dir = value;
    else if (key == "labels_csv") labels_csv = value;
    else if (key == "out_dir") out_dir = value;
    else if (key == "checkpoint_in") checkpoint_in = value;
    else if (key == "feature_dim") model.feature_dim = to_count(key, value);
    else if (key == "n_layers") model.n_layers = to_count(key, value);
    else if (key == "hidden_width") model.hidden_width = to_count(key, value);
    else if (key == "th_dist") model.th_dist = to_real(key, value);
    else if (key == "attention_heads") model.attention_heads = to_count(key, value);
    else if (key == "coord_update_form") {
        try {
            model.coord_update_form = coord_update_form_from_name(value);
        } catch (const ContractError& e) {
            throw UsageError(e.what());
        }
    } else if (key == "r_edge_protein") graph.r_edge_protein = to_real(key, value);
    else if (key == "r_edge_ligand") graph.r_edge_ligand = to_real(key, value);
    else if (key == "contact_dist") graph.contact_dist = to_real(key, value);
    else if (key == "pocket_hops") graph.pocket_hops = to_count(key, value, true);
    else if (key == "max_epochs") train.max_epochs = to_count(key, value);
    else if (key == "patience") train.patience = to_count(key, value, true);
    else if (key == "batch_size") train.batch_size = to_count(key, value);
    else if (key == "lr") train.lr = to_real(key, value);
    else if (key == "seed") train.seed = to_count(key, value, true);
    else if (key == "freeze_coords") train.freeze_coords = to_bool(key, value);
    else if (key == "freeze_encoder") train.freeze_encoder = to_bool(key, value);
    else if (key == "synth_targets") synth_targets = to_count(key, value);
    else if (key == "synth_frames") synth_frames = to_count(key, value);
    else if (key == "synth_complexes") synth_complexes = to_count(key, value);
    else if (key == "synth_protein_atoms") synth_protein_atoms = to_count(key, value);
    else if (key == "synth_ligand_atoms") synth_ligand_atoms = to_count(key, value);
    else if (key == "synth_dt") synth_dt = to_real(key, value);
    else if (key == "synth_spring_constant") synth_spring_constant = to_real(key, value);
    else if (key == "synth_noise_sigma") synth_noise_sigma = to_real(key, value);
    else if (key == "synth_mode") {
        if (value != "trajectory" && value != "affinity") {
            throw UsageError("synth_mode must be trajectory|affinity, got '" + value + "'");
        }
        synth_mode = value;
    } else if (key == "bin_edges") {
        bin_edges.clear();
        std::istringstream is(value);
        std::string tok;
        while (is >> tok) bin_edges.push_back(to_real(key, tok));
    } else if (key == "threads") threads = to_count(key, value);
    else throw UsageError("unknown config key '" + key + "'");
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string stripped = trim(line.substr(0, line.find('#')));
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw UsageError(path + ":" + std::to_string(line_no) +
                             ": expected 'key = value', got '" + stripped + "'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        try {
            apply_kv(key, value);
        } catch (const UsageError& e) {
            throw UsageError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void RunConfig::apply_env() {
    if (const char* env = std::getenv("GEOPLIH_SEED")) {
        try {
            train.seed = static_cast<std::uint64_t>(parse_int(env));
        } catch (const ParseError&) {
            throw UsageError("GEOPLIH_SEED must be an integer, got '" + std::string(env) + "'");
        }
    }
}

SynthSpec RunConfig::synth_spec(std::size_t target_index) const {
    SynthSpec spec;
    spec.n_protein_atoms = synth_protein_atoms;
    spec.n_ligand_atoms = synth_ligand_atoms;
    spec.n_frames = synth_frames;
    spec.dt = synth_dt;
    spec.spring_constant = synth_spring_constant;
    spec.noise_sigma = synth_noise_sigma;
    spec.seed = train.seed + target_index;
    char name[32];
    std::snprintf(name, sizeof(name), "tgt_%03zu", target_index);
    spec.target_id = name;
    return spec;
}

}  // namespace geopli
