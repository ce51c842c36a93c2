// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "geopli/errors.hpp"
#include "geopli/molgraph.hpp"
#include "geopli/rng.hpp"
#include "test_util.hpp"

using namespace geopli;

namespace {

Atom make_atom(const std::string& element, double x, double y, double z,
               ChainTag tag = ChainTag::Ligand, int serial = 0, int residue = -1) {
    Atom a;
    a.element = element;
    a.position = {x, y, z};
    a.chain_tag = tag;
    a.serial = serial;
    a.residue_index = residue;
    return a;
}

std::vector<Atom> random_cloud(std::size_t n, Rng& rng, double box, ChainTag tag) {
    static const char* elems[] = {"C", "N", "O", "S"};
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < n; ++i) {
        atoms.push_back(make_atom(elems[i % 4], rng.uniform(0, box), rng.uniform(0, box),
                                  rng.uniform(0, box), tag, static_cast<int>(i),
                                  static_cast<int>(i / 3)));
    }
    return atoms;
}

// Independent O(N^2) edge oracle.
std::set<std::pair<std::size_t, std::size_t>> brute_edges(const std::vector<Atom>& atoms,
                                                          double r_edge) {
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        for (std::size_t j = 0; j < atoms.size(); ++j) {
            if (i == j) continue;
            double acc = 0;
            for (int c = 0; c < 3; ++c) {
                const double d = atoms[i].position[c] - atoms[j].position[c];
                acc += d * d;
            }
            if (std::sqrt(acc) <= r_edge) edges.insert({std::min(i, j), std::max(i, j)});
        }
    }
    return edges;
}

// Independent BFS oracle over an explicit adjacency list.
std::set<std::size_t> brute_khop(const MolecularGraph& g, const std::vector<std::size_t>& seeds,
                                 std::size_t k) {
    std::set<std::size_t> visited(seeds.begin(), seeds.end());
    std::vector<std::size_t> frontier(seeds.begin(), seeds.end());
    for (std::size_t hop = 0; hop < k; ++hop) {
        std::vector<std::size_t> next;
        for (std::size_t u : frontier) {
            for (const auto& [a, b] : g.edges) {
                std::size_t other = SIZE_MAX;
                if (a == u) other = b;
                if (b == u) other = a;
                if (other != SIZE_MAX && visited.insert(other).second) next.push_back(other);
            }
        }
        frontier = std::move(next);
    }
    return visited;
}

}  // namespace

TEST_CASE("carbon with four neighbors hits the expected one-hot slots") {
    std::vector<Atom> mol;
    mol.push_back(make_atom("C", 0, 0, 0, ChainTag::Ligand, 1));
    mol.push_back(make_atom("H", 1.1, 0, 0, ChainTag::Ligand, 2));
    mol.push_back(make_atom("H", -1.1, 0, 0, ChainTag::Ligand, 3));
    mol.push_back(make_atom("H", 0, 1.1, 0, ChainTag::Ligand, 4));
    mol.push_back(make_atom("H", 0, -1.1, 0, ChainTag::Ligand, 5));

    auto f = featurize(mol[0], mol);
    REQUIRE(f.size() == FeatureSchema::kWidth);
    CHECK(f[FeatureSchema::kElementOffset + 5] == 1.0);  // C is Z=6
    CHECK(f[FeatureSchema::kDegreeOffset + 4] == 1.0);
    CHECK(f[FeatureSchema::kChargeOffset + 2] == 1.0);  // neutral
    for (std::size_t s = 0; s < FeatureSchema::kChargeSlots; ++s) {
        if (s != 2) CHECK(f[FeatureSchema::kChargeOffset + s] == 0.0);
    }
    CHECK(f[FeatureSchema::kAromaticFlag] == 0.0);
    CHECK(f[FeatureSchema::kIsProteinFlag] == 0.0);
}

TEST_CASE("featurization is deterministic for identical records") {
    std::vector<Atom> mol;
    mol.push_back(make_atom("N", 0.5, -0.25, 3.0, ChainTag::Protein, 11, 2));
    mol.push_back(make_atom("C", 1.6, -0.25, 3.0, ChainTag::Protein, 12, 2));
    auto f1 = featurize(mol[0], mol);
    auto f2 = featurize(mol[0], mol);
    CHECK(f1 == f2);
}

TEST_CASE("unknown elements fall into the other slot and bump the counter") {
    std::vector<Atom> mol;
    mol.push_back(make_atom("Xx", 0, 0, 0, ChainTag::Ligand, 1));
    const std::size_t before = featurize_unknown_element_count();
    auto f = featurize(mol[0], mol);
    CHECK(f[FeatureSchema::kElementOffset + FeatureSchema::kElementSlots - 1] == 1.0);
    CHECK(featurize_unknown_element_count() == before + 1);
}

TEST_CASE("one-hot groups always sum to exactly one and nothing is NaN") {
    Rng rng(31);
    auto atoms = random_cloud(25, rng, 8.0, ChainTag::Protein);
    atoms.push_back(make_atom("Qq", 1, 1, 1, ChainTag::Protein, 99));
    for (const Atom& a : atoms) {
        auto f = featurize(a, atoms);
        auto group_sum = [&](std::size_t off, std::size_t n) {
            double s = 0;
            for (std::size_t i = 0; i < n; ++i) s += f[off + i];
            return s;
        };
        CHECK(group_sum(FeatureSchema::kElementOffset, FeatureSchema::kElementSlots) == 1.0);
        CHECK(group_sum(FeatureSchema::kDegreeOffset, FeatureSchema::kDegreeSlots) == 1.0);
        CHECK(group_sum(FeatureSchema::kChargeOffset, FeatureSchema::kChargeSlots) == 1.0);
        CHECK(group_sum(FeatureSchema::kHybridOffset, FeatureSchema::kHybridSlots) == 1.0);
        CHECK(group_sum(FeatureSchema::kResidueOffset, FeatureSchema::kResidueSlots) == 1.0);
        for (double v : f) CHECK(std::isfinite(v));
    }
}

TEST_CASE("featurization of a permuted complex matches per serial") {
    Rng rng(17);
    auto atoms = random_cloud(20, rng, 6.0, ChainTag::Ligand);
    auto shuffled = atoms;
    rng.shuffle(shuffled);

    std::map<int, std::vector<double>> by_serial;
    for (const Atom& a : atoms) by_serial[a.serial] = featurize(a, atoms);
    for (const Atom& a : shuffled) {
        CHECK(featurize(a, shuffled) == by_serial[a.serial]);
    }
}

TEST_CASE("build_graph edge rule at the boundary") {
    std::vector<Atom> two;
    two.push_back(make_atom("C", 0, 0, 0, ChainTag::Ligand, 1));
    two.push_back(make_atom("C", 1.0, 0, 0, ChainTag::Ligand, 2));
    CHECK(build_graph(two, 1.5).edges.size() == 1);

    two[1].position = {2.0, 0, 0};
    CHECK(build_graph(two, 1.5).edges.empty());
}

TEST_CASE("build_graph rejects empty input and bad radius") {
    CHECK_THROWS_AS(build_graph({}, 1.0), ContractError);
    std::vector<Atom> one{make_atom("C", 0, 0, 0)};
    CHECK_THROWS_AS(build_graph(one, 0.0), ContractError);
}

TEST_CASE("build_graph matches the brute-force distance scan on 50 random atoms") {
    Rng rng(77);
    auto atoms = random_cloud(50, rng, 12.0, ChainTag::Protein);
    MolecularGraph g = build_graph(atoms, 4.0);
    std::set<std::pair<std::size_t, std::size_t>> got(g.edges.begin(), g.edges.end());
    CHECK(got == brute_edges(atoms, 4.0));
    CHECK(got.size() == g.edges.size());  // canonical, no duplicates
    for (const auto& [a, b] : g.edges) {
        CHECK(a < b);
        CHECK(b < atoms.size());
    }
}

TEST_CASE("build_graph is permutation invariant up to relabeling by serial") {
    Rng rng(5);
    auto atoms = random_cloud(18, rng, 7.0, ChainTag::Ligand);
    auto shuffled = atoms;
    rng.shuffle(shuffled);
    MolecularGraph a = build_graph(atoms, 3.0);
    MolecularGraph b = build_graph(shuffled, 3.0);

    auto serial_edges = [](const MolecularGraph& g) {
        std::set<std::pair<int, int>> out;
        for (const auto& [i, j] : g.edges) {
            const int si = g.serials[i];
            const int sj = g.serials[j];
            out.insert({std::min(si, sj), std::max(si, sj)});
        }
        return out;
    };
    CHECK(serial_edges(a) == serial_edges(b));
}

TEST_CASE("crop_pocket with k=0 keeps only the contact atoms") {
    // Chain A-B-C-D spaced 1.5 A; ligand sits next to A.
    std::vector<Atom> protein;
    for (int i = 0; i < 4; ++i)
        protein.push_back(make_atom("C", 1.5 * i, 0, 0, ChainTag::Protein, i + 1, i));
    std::vector<Atom> ligand{make_atom("O", -1.0, 0, 0, ChainTag::Ligand, 100)};
    MolecularGraph gp = build_graph(protein, 1.6);
    MolecularGraph gl = build_graph(ligand, 2.0);

    PocketCrop crop = crop_pocket(gp, gl, 1.2, 0);
    REQUIRE(crop.kept.size() == 1);
    CHECK(crop.kept[0] == 0);
    CHECK(crop.old_to_new[0] == 0);
    CHECK(crop.old_to_new[1] == -1);

    SUBCASE("k=2 walks two hops down the chain") {
        PocketCrop c2 = crop_pocket(gp, gl, 1.2, 2);
        CHECK(c2.kept == std::vector<std::size_t>{0, 1, 2});
        CHECK(c2.graph.edges.size() == 2);  // A-B, B-C induced
    }
    SUBCASE("no contact atoms raises an error naming the distance") {
        try {
            crop_pocket(gp, gl, 0.5, 2);
            FAIL("expected EmptyPocketError");
        } catch (const EmptyPocketError& e) {
            CHECK(std::string(e.what()).find("0.5") != std::string::npos);
        }
    }
}

TEST_CASE("crop_pocket matches an independent BFS oracle on a random 200-atom protein") {
    Rng rng(99);
    auto protein_atoms = random_cloud(200, rng, 24.0, ChainTag::Protein);
    auto ligand_atoms = random_cloud(6, rng, 4.0, ChainTag::Ligand);
    // Park the ligand inside the box so it has contacts.
    for (auto& a : ligand_atoms) {
        a.position[0] += 10.0;
        a.position[1] += 10.0;
        a.position[2] += 10.0;
    }
    MolecularGraph gp = build_graph(protein_atoms, 4.0);
    MolecularGraph gl = build_graph(ligand_atoms, 2.0);

    PocketCrop crop = crop_pocket(gp, gl, 5.0, 3);

    std::vector<std::size_t> seeds;
    for (std::size_t i = 0; i < gp.n_nodes(); ++i) {
        for (std::size_t j = 0; j < gl.n_nodes(); ++j) {
            if (sq_distance(gp.coordinates, i, gl.coordinates, j) <= 25.0) {
                seeds.push_back(i);
                break;
            }
        }
    }
    std::set<std::size_t> want = brute_khop(gp, seeds, 3);
    std::set<std::size_t> got(crop.kept.begin(), crop.kept.end());
    CHECK(got == want);
    CHECK(std::is_sorted(crop.kept.begin(), crop.kept.end()));

    SUBCASE("pocket grows monotonically with k") {
        std::set<std::size_t> prev;
        for (std::size_t k = 0; k <= 4; ++k) {
            PocketCrop c = crop_pocket(gp, gl, 5.0, k);
            std::set<std::size_t> cur(c.kept.begin(), c.kept.end());
            CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
            prev = std::move(cur);
        }
    }
}
