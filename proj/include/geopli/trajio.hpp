// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geopli/molgraph.hpp"

namespace geopli {

// One trajectory snapshot of a protein-ligand complex. Atom lists are kept
// sorted by serial so frames of the same target line up index-for-index.
struct ComplexFrame {
    std::string target_id;
    int t_index = 0;
    std::vector<Atom> protein_atoms;
    std::vector<Atom> ligand_atoms;
};

struct FramePair {
    const ComplexFrame* current = nullptr;
    const ComplexFrame* next = nullptr;
};

struct AffinityRecord {
    std::string target_id;
    double affinity = 0.0;  // -log-scale binding constant (pK units)
};

struct SplitManifest {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
    std::uint64_t seed = 0;
    // Target ratios; actual sizes are val/test = max(1, round(0.1 n)) with
    // the remainder in train, which reproduces 27/3/3 at n = 33.
    static constexpr double kTrain = 0.8, kVal = 0.1, kTest = 0.1;
};

// Line-oriented frame format, UTF-8, LF endings:
//   #target <id> frame <t>
//   <serial> <chain_tag> <element> <x> <y> <z> <residue_index>
// Multiple frames (and targets) per file; parse errors carry line numbers.
std::vector<ComplexFrame> parse_frames(const std::string& path);
// Reads every regular file matching *.frames under `dir` (sorted by name),
// or a single file if `dir` is one.
std::vector<ComplexFrame> parse_frames_dir(const std::string& dir);
void write_frames(const std::vector<ComplexFrame>& frames, const std::string& path);

// Consecutive (t, t+1) pairs for one target's sorted frames; t-index gaps
// produce no pair and are counted instead.
struct PairResult {
    std::vector<FramePair> pairs;
    std::size_t skipped = 0;
};
PairResult pair_consecutive(const std::vector<ComplexFrame>& frames);

// Frames grouped per target, preserving the global (target, t) order.
std::vector<std::vector<const ComplexFrame*>> group_by_target(
    const std::vector<ComplexFrame>& frames);

// Deterministic target-level split.
SplitManifest split_targets(std::vector<std::string> target_ids, std::uint64_t seed);
void write_manifest(const SplitManifest& m, const std::string& path);
SplitManifest read_manifest(const std::string& path);
// Throws IntegrityError if any id appears in more than one split or the
// union does not cover exactly `all_ids`.
void audit_splits(const SplitManifest& m, const std::vector<std::string>& all_ids);

// Label CSV: header "target_id,affinity", one row per target.
std::vector<AffinityRecord> read_labels(const std::string& path);
void write_labels(const std::vector<AffinityRecord>& labels, const std::string& path);

}  // namespace geopli
