// SPDX-License-Identifier: Apache-2.0
#include "geopli/synth.hpp"

#include <array>
#include <cmath>

#include "geopli/errors.hpp"
#include "geopli/rng.hpp"

namespace geopli {

namespace {

constexpr double kBondLength = 1.5;
constexpr const char* kElements[] = {"C", "N", "O", "S"};

std::array<double, 3> random_unit(Rng& rng) {
    while (true) {
        std::array<double, 3> v{rng.gaussian(), rng.gaussian(), rng.gaussian()};
        const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        if (n > 1e-6) return {v[0] / n, v[1] / n, v[2] / n};
    }
}

double dist3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Connected cluster carved from a cubic lattice of spacing kBondLength.
// Every in-range pair distance is one of two canonical values (the lattice
// edge and its face diagonal), so spring rest lengths look the same on
// every generated structure.
std::vector<std::array<double, 3>> cluster_positions(std::size_t n, std::array<double, 3> start,
                                                     Rng& rng) {
    std::vector<std::array<int, 3>> cells{{0, 0, 0}};
    auto occupied = [&](const std::array<int, 3>& c) {
        for (const auto& cell : cells) {
            if (cell == c) return true;
        }
        return false;
    };
    static constexpr int kDirs[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                                        {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    while (cells.size() < n) {
        const auto& base = cells[rng.below(cells.size())];
        const int* d = kDirs[rng.below(6)];
        const std::array<int, 3> candidate{base[0] + d[0], base[1] + d[1], base[2] + d[2]};
        if (!occupied(candidate)) cells.push_back(candidate);
    }
    std::vector<std::array<double, 3>> points;
    points.reserve(n);
    for (const auto& cell : cells) {
        points.push_back({start[0] + kBondLength * cell[0], start[1] + kBondLength * cell[1],
                          start[2] + kBondLength * cell[2]});
    }
    return points;
}

std::array<double, 3> centroid(const std::vector<std::array<double, 3>>& pts) {
    std::array<double, 3> c{};
    for (const auto& p : pts) {
        for (int i = 0; i < 3; ++i) c[i] += p[i];
    }
    for (int i = 0; i < 3; ++i) c[i] /= static_cast<double>(pts.size());
    return c;
}

// Protein chain around the origin plus a ligand chain whose start sits
// `gap` angstrom outward from a randomly chosen pocket atom.
std::vector<Atom> build_complex(std::size_t n_protein, std::size_t n_ligand, double gap,
                                Rng& rng) {
    auto protein_pts = cluster_positions(n_protein, {0, 0, 0}, rng);
    const auto center = centroid(protein_pts);
    const std::size_t anchor = static_cast<std::size_t>(rng.below(n_protein));
    std::array<double, 3> out = {protein_pts[anchor][0] - center[0],
                                 protein_pts[anchor][1] - center[1],
                                 protein_pts[anchor][2] - center[2]};
    const double norm = std::sqrt(out[0] * out[0] + out[1] * out[1] + out[2] * out[2]);
    if (norm < 1e-9) {
        out = random_unit(rng);
    } else {
        for (double& v : out) v /= norm;
    }
    std::array<double, 3> ligand_start = {protein_pts[anchor][0] + gap * out[0],
                                          protein_pts[anchor][1] + gap * out[1],
                                          protein_pts[anchor][2] + gap * out[2]};
    auto ligand_pts = cluster_positions(n_ligand, ligand_start, rng);

    std::vector<Atom> atoms;
    atoms.reserve(n_protein + n_ligand);
    for (std::size_t i = 0; i < n_protein; ++i) {
        Atom a;
        a.element = kElements[i % 4];
        a.position = protein_pts[i];
        a.chain_tag = ChainTag::Protein;
        a.residue_index = static_cast<int>(i / 3);
        a.serial = static_cast<int>(i + 1);
        atoms.push_back(std::move(a));
    }
    for (std::size_t i = 0; i < n_ligand; ++i) {
        Atom a;
        a.element = kElements[i % 4];
        a.position = ligand_pts[i];
        a.chain_tag = ChainTag::Ligand;
        a.residue_index = -1;
        a.serial = static_cast<int>(n_protein + i + 1);
        atoms.push_back(std::move(a));
    }
    return atoms;
}

ComplexFrame to_frame(const std::string& target, int t, const std::vector<Atom>& atoms) {
    ComplexFrame f;
    f.target_id = target;
    f.t_index = t;
    for (const Atom& a : atoms) {
        (a.chain_tag == ChainTag::Protein ? f.protein_atoms : f.ligand_atoms).push_back(a);
    }
    return f;
}

}  // namespace

void SynthSpec::validate() const {
    if (n_protein_atoms == 0 || n_ligand_atoms == 0 || n_frames == 0) {
        throw ContractError("synth spec counts must be at least 1");
    }
    if (dt <= 0.0) throw ContractError("synth spec requires dt > 0");
    if (noise_sigma < 0.0) throw ContractError("synth spec requires noise_sigma >= 0");
}

SpringSystem spring_topology(const std::vector<Atom>& atoms) {
    SpringSystem s;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        for (std::size_t j = i + 1; j < atoms.size(); ++j) {
            if (atoms[i].chain_tag != atoms[j].chain_tag) continue;
            const double d = dist3(atoms[i].position, atoms[j].position);
            if (d <= kSpringCutoff) {
                s.pairs.emplace_back(i, j);
                s.rest_lengths.push_back(d);
            }
        }
    }
    return s;
}

std::vector<std::array<double, 3>> spring_forces(const std::vector<Atom>& atoms,
                                                 const SpringSystem& springs, double k) {
    std::vector<std::array<double, 3>> forces(atoms.size(), {0, 0, 0});
    for (std::size_t s = 0; s < springs.pairs.size(); ++s) {
        const auto [i, j] = springs.pairs[s];
        const auto& pi = atoms[i].position;
        const auto& pj = atoms[j].position;
        const double d = dist3(pi, pj);
        if (d < 1e-9) continue;  // coincident pair exerts no directed force
        const double coeff = -k * (d - springs.rest_lengths[s]) / d;
        for (int c = 0; c < 3; ++c) {
            const double f = coeff * (pi[c] - pj[c]);
            forces[i][c] += f;
            forces[j][c] -= f;
        }
    }
    return forces;
}

void euler_step(std::vector<Atom>& atoms, const SpringSystem& springs, double k, double dt) {
    const auto forces = spring_forces(atoms, springs, k);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        for (int c = 0; c < 3; ++c) atoms[i].position[c] += dt * forces[i][c];
    }
}

double spring_energy(const std::vector<Atom>& atoms, const SpringSystem& springs, double k) {
    double e = 0.0;
    for (std::size_t s = 0; s < springs.pairs.size(); ++s) {
        const auto [i, j] = springs.pairs[s];
        const double d = dist3(atoms[i].position, atoms[j].position);
        e += 0.5 * k * (d - springs.rest_lengths[s]) * (d - springs.rest_lengths[s]);
    }
    return e;
}

double anchor_energy(const std::vector<Atom>& atoms, const std::vector<Atom>& reference,
                     double k) {
    double e = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const double d = dist3(atoms[i].position, reference[i].position);
        e += 0.5 * k * d * d;
    }
    return e;
}

std::vector<ComplexFrame> gen_trajectory(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::vector<Atom> atoms =
        build_complex(spec.n_protein_atoms, spec.n_ligand_atoms, 2.5, rng);
    const SpringSystem springs = spring_topology(atoms);

    std::vector<ComplexFrame> frames;
    frames.reserve(spec.n_frames);
    frames.push_back(to_frame(spec.target_id, 0, atoms));
    for (std::size_t t = 1; t < spec.n_frames; ++t) {
        euler_step(atoms, springs, spec.spring_constant, spec.dt);
        if (spec.noise_sigma > 0.0) {
            for (Atom& a : atoms) {
                for (int c = 0; c < 3; ++c) a.position[c] += spec.noise_sigma * rng.gaussian();
            }
        }
        frames.push_back(to_frame(spec.target_id, static_cast<int>(t), atoms));
    }
    return frames;
}

std::size_t contact_pair_count(const std::vector<Atom>& protein,
                               const std::vector<Atom>& ligand) {
    std::size_t n = 0;
    for (const Atom& p : protein) {
        for (const Atom& l : ligand) {
            if (dist3(p.position, l.position) <= kAffinityContactDist) ++n;
        }
    }
    return n;
}

double affinity_label(const std::vector<Atom>& protein, const std::vector<Atom>& ligand,
                      double noise) {
    return kAffinityAlpha * static_cast<double>(contact_pair_count(protein, ligand)) +
           kAffinityBeta + noise;
}

AffinitySet gen_affinity_set(std::size_t n_complexes, std::uint64_t seed) {
    if (n_complexes == 0) throw ContractError("gen_affinity_set needs at least one complex");
    Rng rng(seed);
    AffinitySet set;
    set.frames.reserve(n_complexes);
    set.labels.reserve(n_complexes);
    for (std::size_t c = 0; c < n_complexes; ++c) {
        char name[32];
        std::snprintf(name, sizeof(name), "cplx_%04zu", c);
        const std::size_t n_protein = 10 + rng.below(7);   // 10..16
        const std::size_t n_ligand = 4 + rng.below(5);     // 4..8
        // Keep every complex croppable at the default 5 A contact distance;
        // gaps past the 4 A label radius still yield zero-contact labels.
        const double gap = rng.uniform(0.5, 4.8);
        std::vector<Atom> atoms = build_complex(n_protein, n_ligand, gap, rng);

        std::vector<Atom> protein, ligand;
        for (const Atom& a : atoms) {
            (a.chain_tag == ChainTag::Protein ? protein : ligand).push_back(a);
        }
        set.frames.push_back(to_frame(name, 0, atoms));
        set.labels.push_back(
            AffinityRecord{name, affinity_label(protein, ligand,
                                                kAffinityNoiseSigma * rng.gaussian())});
    }
    return set;
}

}  // namespace geopli
