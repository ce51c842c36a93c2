// SPDX-License-Identifier: Apache-2.0
#include "geopli/trajio.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "geopli/errors.hpp"
#include "geopli/rng.hpp"
#include "geopli/textio.hpp"

namespace geopli {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

ParseError at_line(const std::string& path, std::size_t line_no, const std::string& msg) {
    return ParseError(path + ":" + std::to_string(line_no) + ": " + msg);
}

// Sorted serials of one frame (protein and ligand together).
std::vector<int> frame_serials(const ComplexFrame& f) {
    std::vector<int> s;
    s.reserve(f.protein_atoms.size() + f.ligand_atoms.size());
    for (const Atom& a : f.protein_atoms) s.push_back(a.serial);
    for (const Atom& a : f.ligand_atoms) s.push_back(a.serial);
    std::sort(s.begin(), s.end());
    return s;
}

void validate_frames(std::vector<ComplexFrame>& frames) {
    std::sort(frames.begin(), frames.end(), [](const ComplexFrame& a, const ComplexFrame& b) {
        return std::tie(a.target_id, a.t_index) < std::tie(b.target_id, b.t_index);
    });
    for (ComplexFrame& f : frames) {
        auto by_serial = [](const Atom& a, const Atom& b) { return a.serial < b.serial; };
        std::sort(f.protein_atoms.begin(), f.protein_atoms.end(), by_serial);
        std::sort(f.ligand_atoms.begin(), f.ligand_atoms.end(), by_serial);
        if (f.ligand_atoms.empty()) {
            throw IntegrityError("target " + f.target_id + " frame " +
                                 std::to_string(f.t_index) + " has no ligand atoms");
        }
        if (f.t_index < 0) {
            throw IntegrityError("target " + f.target_id + " has negative frame index");
        }
        std::vector<int> serials = frame_serials(f);
        if (std::adjacent_find(serials.begin(), serials.end()) != serials.end()) {
            throw IntegrityError("target " + f.target_id + " frame " +
                                 std::to_string(f.t_index) + " has duplicate atom serials");
        }
    }
    for (std::size_t i = 1; i < frames.size(); ++i) {
        const ComplexFrame& prev = frames[i - 1];
        const ComplexFrame& cur = frames[i];
        if (prev.target_id != cur.target_id) continue;
        if (prev.t_index == cur.t_index) {
            throw IntegrityError("target " + cur.target_id + " has duplicate frame index " +
                                 std::to_string(cur.t_index));
        }
        if (prev.protein_atoms.size() + prev.ligand_atoms.size() !=
            cur.protein_atoms.size() + cur.ligand_atoms.size()) {
            throw IntegrityError("target " + cur.target_id +
                                 " changes atom count between frames " +
                                 std::to_string(prev.t_index) + " and " +
                                 std::to_string(cur.t_index));
        }
        if (frame_serials(prev) != frame_serials(cur)) {
            throw IntegrityError("target " + cur.target_id +
                                 " changes atom serials between frames " +
                                 std::to_string(prev.t_index) + " and " +
                                 std::to_string(cur.t_index));
        }
    }
}

}  // namespace

std::vector<ComplexFrame> parse_frames(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open frame file: " + path);

    std::vector<ComplexFrame> frames;
    ComplexFrame* current = nullptr;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto toks = split_ws(line);
            if (toks.size() != 4 || toks[0] != "#target" || toks[2] != "frame") {
                throw at_line(path, line_no, "malformed frame header '" + line + "'");
            }
            ComplexFrame f;
            f.target_id = toks[1];
            try {
                f.t_index = static_cast<int>(parse_int(toks[3]));
            } catch (const ParseError&) {
                throw at_line(path, line_no, "bad frame index '" + toks[3] + "'");
            }
            frames.push_back(std::move(f));
            current = &frames.back();
            continue;
        }
        if (current == nullptr) {
            throw at_line(path, line_no, "atom line before any frame header");
        }
        auto toks = split_ws(line);
        if (toks.size() != 7) {
            throw at_line(path, line_no,
                          "expected 7 fields (serial chain element x y z residue), got " +
                              std::to_string(toks.size()));
        }
        Atom a;
        try {
            a.serial = static_cast<int>(parse_int(toks[0]));
            a.chain_tag = chain_tag_from_name(toks[1]);
            a.element = toks[2];
            a.position = {parse_double(toks[3]), parse_double(toks[4]), parse_double(toks[5])};
            a.residue_index = static_cast<int>(parse_int(toks[6]));
        } catch (const Error& e) {
            throw at_line(path, line_no, e.what());
        }
        for (double c : a.position) {
            if (!std::isfinite(c)) throw at_line(path, line_no, "non-finite coordinate");
        }
        if (a.chain_tag == ChainTag::Protein) {
            current->protein_atoms.push_back(std::move(a));
        } else {
            current->ligand_atoms.push_back(std::move(a));
        }
    }
    validate_frames(frames);
    return frames;
}

std::vector<ComplexFrame> parse_frames_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::exists(dir)) throw IoError("no such path: " + dir);
    if (fs::is_regular_file(dir)) return parse_frames(dir);

    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".frames") {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no *.frames files under " + dir);

    std::vector<ComplexFrame> all;
    for (const std::string& f : files) {
        auto frames = parse_frames(f);
        all.insert(all.end(), std::make_move_iterator(frames.begin()),
                   std::make_move_iterator(frames.end()));
    }
    validate_frames(all);
    return all;
}

void write_frames(const std::vector<ComplexFrame>& frames, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open frame file for writing: " + path);
    for (const ComplexFrame& f : frames) {
        os << "#target " << f.target_id << " frame " << f.t_index << "\n";
        auto emit = [&](const Atom& a) {
            os << a.serial << ' ' << chain_tag_name(a.chain_tag) << ' ' << a.element << ' '
               << format_double(a.position[0]) << ' ' << format_double(a.position[1]) << ' '
               << format_double(a.position[2]) << ' ' << a.residue_index << "\n";
        };
        for (const Atom& a : f.protein_atoms) emit(a);
        for (const Atom& a : f.ligand_atoms) emit(a);
    }
    if (!os) throw IoError("failed writing frames: " + path);
}

PairResult pair_consecutive(const std::vector<ComplexFrame>& frames) {
    PairResult result;
    for (std::size_t i = 1; i < frames.size(); ++i) {
        const ComplexFrame& a = frames[i - 1];
        const ComplexFrame& b = frames[i];
        if (a.target_id != b.target_id) {
            throw ContractError("pair_consecutive expects frames of a single target, got '" +
                                a.target_id + "' and '" + b.target_id + "'");
        }
        if (b.t_index <= a.t_index) {
            throw ContractError("pair_consecutive expects frames sorted by t_index");
        }
        if (b.t_index == a.t_index + 1) {
            if (a.protein_atoms.size() != b.protein_atoms.size() ||
                a.ligand_atoms.size() != b.ligand_atoms.size() ||
                frame_serials(a) != frame_serials(b)) {
                throw IntegrityError("target " + a.target_id + " frames " +
                                     std::to_string(a.t_index) + "," +
                                     std::to_string(b.t_index) + " disagree on atoms");
            }
            result.pairs.push_back(FramePair{&a, &b});
        } else {
            ++result.skipped;
        }
    }
    return result;
}

std::vector<std::vector<const ComplexFrame*>> group_by_target(
    const std::vector<ComplexFrame>& frames) {
    std::vector<std::vector<const ComplexFrame*>> groups;
    for (const ComplexFrame& f : frames) {
        if (groups.empty() || groups.back().back()->target_id != f.target_id) {
            groups.emplace_back();
        }
        groups.back().push_back(&f);
    }
    return groups;
}

SplitManifest split_targets(std::vector<std::string> target_ids, std::uint64_t seed) {
    std::sort(target_ids.begin(), target_ids.end());
    target_ids.erase(std::unique(target_ids.begin(), target_ids.end()), target_ids.end());
    const std::size_t n = target_ids.size();
    if (n < 3) {
        throw ContractError("split_targets needs at least 3 targets, got " + std::to_string(n));
    }
    // val/test round half-up with a floor of 1 so every split is usable;
    // the remainder goes to train (33 -> 27/3/3, 10 -> 8/1/1).
    const auto tenth = static_cast<std::size_t>(
        std::max(1.0, std::floor(0.1 * static_cast<double>(n) + 0.5)));
    const std::size_t n_val = tenth;
    const std::size_t n_test = tenth;
    const std::size_t n_train = n - n_val - n_test;

    Rng rng(seed);
    rng.shuffle(target_ids);

    SplitManifest m;
    m.seed = seed;
    m.train.assign(target_ids.begin(), target_ids.begin() + n_train);
    m.val.assign(target_ids.begin() + n_train, target_ids.begin() + n_train + n_val);
    m.test.assign(target_ids.begin() + n_train + n_val, target_ids.end());
    std::sort(m.train.begin(), m.train.end());
    std::sort(m.val.begin(), m.val.end());
    std::sort(m.test.begin(), m.test.end());
    return m;
}

void write_manifest(const SplitManifest& m, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open manifest for writing: " + path);
    os << "seed = " << m.seed << "\n";
    os << "ratios = 0.8 0.1 0.1\n";
    auto section = [&](const char* name, const std::vector<std::string>& ids) {
        os << "[" << name << "]\n";
        for (const std::string& id : ids) os << id << "\n";
    };
    section("train", m.train);
    section("val", m.val);
    section("test", m.test);
    if (!os) throw IoError("failed writing manifest: " + path);
}

SplitManifest read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open manifest: " + path);
    SplitManifest m;
    std::vector<std::string>* section = nullptr;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("seed = ", 0) == 0) {
            m.seed = static_cast<std::uint64_t>(parse_int(line.substr(7)));
        } else if (line.rfind("ratios = ", 0) == 0) {
            continue;  // fixed 0.8/0.1/0.1
        } else if (line == "[train]") {
            section = &m.train;
        } else if (line == "[val]") {
            section = &m.val;
        } else if (line == "[test]") {
            section = &m.test;
        } else if (section != nullptr) {
            section->push_back(line);
        } else {
            throw at_line(path, line_no, "unexpected manifest line '" + line + "'");
        }
    }
    return m;
}

void audit_splits(const SplitManifest& m, const std::vector<std::string>& all_ids) {
    std::map<std::string, int> seen;
    for (const auto* list : {&m.train, &m.val, &m.test}) {
        for (const std::string& id : *list) ++seen[id];
    }
    for (const auto& [id, count] : seen) {
        if (count > 1) {
            throw IntegrityError("split leakage: target '" + id + "' appears in " +
                                 std::to_string(count) + " splits");
        }
    }
    std::set<std::string> want(all_ids.begin(), all_ids.end());
    std::set<std::string> have;
    for (const auto& [id, _] : seen) have.insert(id);
    if (want != have) {
        throw IntegrityError("split manifest does not cover the target set exactly (" +
                             std::to_string(have.size()) + " vs " + std::to_string(want.size()) +
                             " targets)");
    }
}

std::vector<AffinityRecord> read_labels(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open label file: " + path);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(is, line)) throw ParseError(path + ": empty label file");
    ++line_no;
    if (line != "target_id,affinity") {
        throw at_line(path, line_no, "expected header 'target_id,affinity'");
    }
    std::vector<AffinityRecord> out;
    std::set<std::string> ids;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw at_line(path, line_no, "missing comma");
        AffinityRecord rec;
        rec.target_id = line.substr(0, comma);
        try {
            rec.affinity = parse_double(line.substr(comma + 1));
        } catch (const ParseError& e) {
            throw at_line(path, line_no, e.what());
        }
        if (!std::isfinite(rec.affinity)) throw at_line(path, line_no, "non-finite affinity");
        if (!ids.insert(rec.target_id).second) {
            throw IntegrityError(path + ": duplicate label for target '" + rec.target_id + "'");
        }
        out.push_back(std::move(rec));
    }
    return out;
}

void write_labels(const std::vector<AffinityRecord>& labels, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open label file for writing: " + path);
    os << "target_id,affinity\n";
    for (const AffinityRecord& rec : labels) {
        os << rec.target_id << ',' << format_double(rec.affinity) << "\n";
    }
    if (!os) throw IoError("failed writing labels: " + path);
}

}  // namespace geopli
