// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>

#include "geopli/errors.hpp"
#include "geopli/rng.hpp"
#include "geopli/trajio.hpp"
#include "test_util.hpp"

using namespace geopli;

namespace {

Atom atom(int serial, ChainTag tag, const std::string& elem, double x, double y, double z,
          int residue = -1) {
    Atom a;
    a.serial = serial;
    a.chain_tag = tag;
    a.element = elem;
    a.position = {x, y, z};
    a.residue_index = residue;
    return a;
}

std::vector<ComplexFrame> two_frame_three_atom() {
    std::vector<ComplexFrame> frames;
    for (int t = 0; t < 2; ++t) {
        ComplexFrame f;
        f.target_id = "tgt_a";
        f.t_index = t;
        f.protein_atoms.push_back(atom(1, ChainTag::Protein, "C", 0.125 + t, 0, 0, 0));
        f.protein_atoms.push_back(atom(2, ChainTag::Protein, "N", 1.5, -2.25, 0.75, 0));
        f.ligand_atoms.push_back(atom(3, ChainTag::Ligand, "O", 0.1, 0.2, 0.3 + 0.5 * t));
        frames.push_back(std::move(f));
    }
    return frames;
}

}  // namespace

TEST_CASE("frame file round-trips to identical in-memory frames") {
    testutil::TempDir dir("trajio");
    auto frames = two_frame_three_atom();
    const std::string path = dir.str("a.frames");
    write_frames(frames, path);
    auto parsed = parse_frames(path);

    REQUIRE(parsed.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(parsed[i].target_id == frames[i].target_id);
        CHECK(parsed[i].t_index == frames[i].t_index);
        REQUIRE(parsed[i].protein_atoms.size() == 2);
        REQUIRE(parsed[i].ligand_atoms.size() == 1);
        for (std::size_t a = 0; a < 2; ++a) {
            CHECK(parsed[i].protein_atoms[a].serial == frames[i].protein_atoms[a].serial);
            CHECK(parsed[i].protein_atoms[a].element == frames[i].protein_atoms[a].element);
            CHECK(parsed[i].protein_atoms[a].position == frames[i].protein_atoms[a].position);
            CHECK(parsed[i].protein_atoms[a].residue_index ==
                  frames[i].protein_atoms[a].residue_index);
        }
        CHECK(parsed[i].ligand_atoms[0].position == frames[i].ligand_atoms[0].position);
    }
}

TEST_CASE("missing atom in a later frame is an integrity error") {
    testutil::TempDir dir("trajio");
    auto frames = two_frame_three_atom();
    frames[1].protein_atoms.pop_back();
    const std::string path = dir.str("bad.frames");
    write_frames(frames, path);
    CHECK_THROWS_AS(parse_frames(path), IntegrityError);
}

TEST_CASE("malformed lines report their line number") {
    testutil::TempDir dir("trajio");
    const std::string path = dir.str("broken.frames");
    {
        std::ofstream os(path);
        os << "#target t frame 0\n";
        os << "1 protein C 0 0 0 0\n";
        os << "2 protein C zero 0 0 0\n";
        os << "3 ligand O 0 0 0 -1\n";
    }
    try {
        parse_frames(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
}

TEST_CASE("frames without a ligand are rejected") {
    testutil::TempDir dir("trajio");
    const std::string path = dir.str("nolig.frames");
    {
        std::ofstream os(path);
        os << "#target t frame 0\n";
        os << "1 protein C 0 0 0 0\n";
    }
    CHECK_THROWS_AS(parse_frames(path), IntegrityError);
}

TEST_CASE("pair_consecutive pairs gapless runs and counts gaps") {
    auto frames = two_frame_three_atom();
    {
        ComplexFrame f = frames[1];
        f.t_index = 2;
        frames.push_back(std::move(f));
    }
    PairResult r = pair_consecutive(frames);
    CHECK(r.pairs.size() == 2);
    CHECK(r.skipped == 0);
    CHECK(r.pairs[0].current->t_index == 0);
    CHECK(r.pairs[0].next->t_index == 1);
    CHECK(r.pairs[1].current->t_index == 1);

    SUBCASE("a gap yields zero pairs and one skip") {
        std::vector<ComplexFrame> gapped{frames[0], frames[2]};  // t = 0, 2
        PairResult g = pair_consecutive(gapped);
        CHECK(g.pairs.empty());
        CHECK(g.skipped == 1);
    }
    SUBCASE("pairs satisfy the FramePair invariants under random gap patterns") {
        Rng rng(8);
        for (int trial = 0; trial < 25; ++trial) {
            std::vector<ComplexFrame> traj;
            int t = 0;
            const int n = 2 + static_cast<int>(rng.below(20));
            for (int i = 0; i < n; ++i) {
                ComplexFrame f = frames[0];
                f.t_index = t;
                traj.push_back(std::move(f));
                t += 1 + static_cast<int>(rng.below(3));  // gap 0..2
            }
            PairResult pr = pair_consecutive(traj);
            std::size_t expected_pairs = 0;
            for (std::size_t i = 1; i < traj.size(); ++i) {
                if (traj[i].t_index == traj[i - 1].t_index + 1) ++expected_pairs;
            }
            CHECK(pr.pairs.size() == expected_pairs);
            CHECK(pr.skipped == traj.size() - 1 - expected_pairs);
            for (const FramePair& p : pr.pairs) {
                CHECK(p.current->target_id == p.next->target_id);
                CHECK(p.next->t_index == p.current->t_index + 1);
                CHECK(p.current->protein_atoms.size() == p.next->protein_atoms.size());
                CHECK(p.current->ligand_atoms.size() == p.next->ligand_atoms.size());
            }
        }
    }
}

TEST_CASE("5000 frames give 4999 pairs") {
    std::vector<ComplexFrame> traj;
    traj.reserve(5000);
    for (int t = 0; t < 5000; ++t) {
        ComplexFrame f;
        f.target_id = "long";
        f.t_index = t;
        f.protein_atoms.push_back(atom(1, ChainTag::Protein, "C", 0, 0, 0, 0));
        f.ligand_atoms.push_back(atom(2, ChainTag::Ligand, "O", 1, 0, 0));
        traj.push_back(std::move(f));
    }
    PairResult r = pair_consecutive(traj);
    CHECK(r.pairs.size() == 4999);
    CHECK(r.skipped == 0);
}

TEST_CASE("split sizes follow the 80-10-10 rule") {
    std::vector<std::string> ids;
    for (int i = 0; i < 33; ++i) ids.push_back("t" + std::to_string(i));
    SplitManifest m = split_targets(ids, 4);
    CHECK(m.train.size() == 27);
    CHECK(m.val.size() == 3);
    CHECK(m.test.size() == 3);

    SUBCASE("10 targets split 8/1/1") {
        ids.resize(10);
        SplitManifest m10 = split_targets(ids, 4);
        CHECK(m10.train.size() == 8);
        CHECK(m10.val.size() == 1);
        CHECK(m10.test.size() == 1);
    }
    SUBCASE("3 targets keep all splits nonempty") {
        ids.resize(3);
        SplitManifest m3 = split_targets(ids, 4);
        CHECK(m3.train.size() == 1);
        CHECK(m3.val.size() == 1);
        CHECK(m3.test.size() == 1);
    }
    SUBCASE("fewer than 3 targets is a contract error") {
        ids.resize(2);
        CHECK_THROWS_AS(split_targets(ids, 4), ContractError);
    }
}

TEST_CASE("splits are deterministic per seed and leak-free") {
    std::vector<std::string> ids;
    for (int i = 0; i < 20; ++i) ids.push_back("t" + std::to_string(i));
    SplitManifest a = split_targets(ids, 42);
    SplitManifest b = split_targets(ids, 42);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);
    CHECK_NOTHROW(audit_splits(a, ids));

    SUBCASE("different seeds give a different assignment somewhere") {
        bool any_diff = false;
        for (std::uint64_t s = 43; s < 48 && !any_diff; ++s) {
            SplitManifest c = split_targets(ids, s);
            any_diff = c.train != a.train;
        }
        CHECK(any_diff);
    }
    SUBCASE("audit catches leakage") {
        SplitManifest bad = a;
        bad.val.push_back(bad.train.front());
        CHECK_THROWS_AS(audit_splits(bad, ids), IntegrityError);
    }
    SUBCASE("audit catches missing coverage") {
        SplitManifest bad = a;
        bad.test.pop_back();
        CHECK_THROWS_AS(audit_splits(bad, ids), IntegrityError);
    }
}

TEST_CASE("manifest round-trips through its text form") {
    testutil::TempDir dir("manifest");
    std::vector<std::string> ids;
    for (int i = 0; i < 12; ++i) ids.push_back("cplx_" + std::to_string(i));
    SplitManifest m = split_targets(ids, 7);
    const std::string path = dir.str("split.manifest");
    write_manifest(m, path);
    SplitManifest r = read_manifest(path);
    CHECK(r.seed == 7);
    CHECK(r.train == m.train);
    CHECK(r.val == m.val);
    CHECK(r.test == m.test);
}

TEST_CASE("label CSV round-trips and rejects duplicates") {
    testutil::TempDir dir("labels");
    std::vector<AffinityRecord> labels{{"a", 4.25}, {"b", 6.5}, {"c", 2.125}};
    const std::string path = dir.str("labels.csv");
    write_labels(labels, path);
    auto r = read_labels(path);
    REQUIRE(r.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(r[i].target_id == labels[i].target_id);
        CHECK(r[i].affinity == labels[i].affinity);
    }
    SUBCASE("duplicate target id is an integrity error") {
        std::ofstream os(path, std::ios::app);
        os << "a,9.0\n";
        os.close();
        CHECK_THROWS_AS(read_labels(path), IntegrityError);
    }
    SUBCASE("bad header is a parse error") {
        std::ofstream os(path, std::ios::trunc);
        os << "id,value\n";
        os.close();
        CHECK_THROWS_AS(read_labels(path), ParseError);
    }
}

TEST_CASE("group_by_target groups sorted frames") {
    auto frames = two_frame_three_atom();
    ComplexFrame other;
    other.target_id = "tgt_b";
    other.t_index = 0;
    other.protein_atoms.push_back(atom(1, ChainTag::Protein, "C", 0, 0, 0, 0));
    other.ligand_atoms.push_back(atom(2, ChainTag::Ligand, "O", 1, 1, 1));
    frames.push_back(std::move(other));

    auto groups = group_by_target(frames);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].size() == 2);
    CHECK(groups[1].size() == 1);
    CHECK(groups[1][0]->target_id == "tgt_b");
}
