// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "geopli/tensor.hpp"

namespace geopli {

enum class ChainTag { Protein, Ligand };

std::string chain_tag_name(ChainTag tag);
ChainTag chain_tag_from_name(const std::string& name);

struct Atom {
    std::string element;
    std::array<double, 3> position{};  // angstrom
    ChainTag chain_tag = ChainTag::Ligand;
    int residue_index = -1;  // protein only; -1 otherwise
    int serial = 0;
};

// Fixed 116-wide feature layout, version 1.
//
//   [  0, 54)  element one-hot: Z = 1..53 in order, slot 53 = other
//   [ 54, 60)  heavy-neighbor degree one-hot: 0,1,2,3,4,>=5
//   [ 60, 65)  formal charge one-hot: -2,-1,0,+1,+2 (records carry no
//              charge, so the neutral slot is always set)
//   [ 65, 70)  hybridization one-hot: sp, sp2, sp3, other, unspecified
//              (heuristic from heavy degree; no bond-order perception)
//   [ 70]      aromatic flag (no perception; always 0)
//   [ 71]      in-ring flag (no perception; always 0)
//   [ 72]      is-protein flag
//   [ 73, 94)  residue-type one-hot: 20 amino acids + unknown. Atom records
//              carry only residue indices, so the unknown slot is always set;
//              the slots exist for inputs that do provide types.
//   [ 94,116)  physicochemical scalars, then zero padding
struct FeatureSchema {
    static constexpr std::size_t kWidth = 116;
    static constexpr int kVersion = 1;

    static constexpr std::size_t kElementOffset = 0;
    static constexpr std::size_t kElementSlots = 54;
    static constexpr std::size_t kDegreeOffset = 54;
    static constexpr std::size_t kDegreeSlots = 6;
    static constexpr std::size_t kChargeOffset = 60;
    static constexpr std::size_t kChargeSlots = 5;
    static constexpr std::size_t kHybridOffset = 65;
    static constexpr std::size_t kHybridSlots = 5;
    static constexpr std::size_t kAromaticFlag = 70;
    static constexpr std::size_t kInRingFlag = 71;
    static constexpr std::size_t kIsProteinFlag = 72;
    static constexpr std::size_t kResidueOffset = 73;
    static constexpr std::size_t kResidueSlots = 21;
    static constexpr std::size_t kScalarOffset = 94;
    static constexpr std::size_t kScalarSlots = 22;

    // Neighbors closer than this count toward the bonded degree.
    static constexpr double kBondDistance = 2.0;
};

struct MolecularGraph {
    Tensor node_features;  // [N x 116]
    Tensor coordinates;    // [N x 3]
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // canonical i < j
    ChainTag origin_tag = ChainTag::Ligand;
    std::vector<int> serials;  // per node, for cross-frame identity

    std::size_t n_nodes() const { return coordinates.rows(); }
};

// 116-vector for one atom. `context` is the rest of the molecule (the atom
// itself is skipped by serial). Unknown elements land in the "other" slot
// and bump featurize_unknown_element_count().
std::vector<double> featurize(const Atom& atom, const std::vector<Atom>& context);
std::size_t featurize_unknown_element_count();

// Radius graph: edge (i, j) iff euclidean distance <= r_edge and i != j.
MolecularGraph build_graph(const std::vector<Atom>& atoms, double r_edge);

struct PocketCrop {
    MolecularGraph graph;
    std::vector<std::size_t> kept;           // new index -> original index
    std::vector<std::ptrdiff_t> old_to_new;  // original index -> new, -1 if dropped
};

// Protein subgraph within k graph-hops of any atom whose distance to the
// ligand is <= contact_dist. Node order is ascending original index.
PocketCrop crop_pocket(const MolecularGraph& protein, const MolecularGraph& ligand,
                       double contact_dist, std::size_t k_hops);

double sq_distance(const Tensor& coords, std::size_t i, const Tensor& other, std::size_t j);

}  // namespace geopli
