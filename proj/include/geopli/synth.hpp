// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "geopli/trajio.hpp"

namespace geopli {

// Desk-scale trajectory generator: a protein chain and a ligand chain built
// at canonical ~1.5 A bond lengths, evolving under pairwise harmonic springs
// whose rest lengths are the initial pair distances. Explicit-Euler steps of
// size dt with per-coordinate Gaussian noise drive the motion; with zero
// noise the system starts at rest and stays there.
struct SynthSpec {
    std::size_t n_protein_atoms = 12;
    std::size_t n_ligand_atoms = 5;
    std::size_t n_frames = 200;
    double dt = 0.15;
    double spring_constant = 3.0;
    double noise_sigma = 0.05;
    std::uint64_t seed = 1;
    std::string target_id = "tgt_000";

    void validate() const;
};

// Springs between atoms of the same chain closer than this in frame 0.
inline constexpr double kSpringCutoff = 2.2;

struct SpringSystem {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<double> rest_lengths;
};

// Spring topology over one frame's combined atom list (protein first, then
// ligand); only same-chain pairs are coupled.
SpringSystem spring_topology(const std::vector<Atom>& atoms);

// Net spring force per atom, -k * (|x_ij| - rest) along the pair axis.
std::vector<std::array<double, 3>> spring_forces(const std::vector<Atom>& atoms,
                                                 const SpringSystem& springs, double k);

// One position-space Euler step: x += dt * F(x). Noise is the caller's
// business (the generator adds it; tests usually do not).
void euler_step(std::vector<Atom>& atoms, const SpringSystem& springs, double k, double dt);

// Spring energy of a configuration, sum over pairs of k/2 (|x_ij| - rest)^2.
double spring_energy(const std::vector<Atom>& atoms, const SpringSystem& springs, double k);

// Anchored displacement energy sum_i k/2 |x_i - x0_i|^2 against a reference
// frame; the trajectory invariant checks this is non-increasing at zero noise.
double anchor_energy(const std::vector<Atom>& atoms, const std::vector<Atom>& reference,
                     double k);

std::vector<ComplexFrame> gen_trajectory(const SynthSpec& spec);

// Label = alpha * (protein-ligand atom pairs within the contact distance)
//         + beta + Gaussian noise.
inline constexpr double kAffinityAlpha = 0.5;
inline constexpr double kAffinityBeta = 2.0;
inline constexpr double kAffinityContactDist = 4.0;
inline constexpr double kAffinityNoiseSigma = 0.1;

std::size_t contact_pair_count(const std::vector<Atom>& protein, const std::vector<Atom>& ligand);
double affinity_label(const std::vector<Atom>& protein, const std::vector<Atom>& ligand,
                      double noise);

struct AffinitySet {
    std::vector<ComplexFrame> frames;  // one frame per complex, t = 0
    std::vector<AffinityRecord> labels;
};
AffinitySet gen_affinity_set(std::size_t n_complexes, std::uint64_t seed);

}  // namespace geopli
