// SPDX-License-Identifier: Apache-2.0
#include "geopli/molgraph.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <map>

#include "geopli/errors.hpp"

namespace geopli {

namespace {

struct ElementInfo {
    const char* symbol;
    double mass;
    double electronegativity;  // Pauling; 0 where undefined
    double covalent_radius;    // angstrom
    bool metal;
};

// Z = 1..53. Radii and electronegativities are the usual tabulated values;
// they only feed normalized feature scalars.
constexpr ElementInfo kElements[] = {
    {"H", 1.008, 2.20, 0.31, false},   {"He", 4.003, 0.00, 0.28, false},
    {"Li", 6.940, 0.98, 1.28, true},   {"Be", 9.012, 1.57, 0.96, true},
    {"B", 10.81, 2.04, 0.84, false},   {"C", 12.011, 2.55, 0.76, false},
    {"N", 14.007, 3.04, 0.71, false},  {"O", 15.999, 3.44, 0.66, false},
    {"F", 18.998, 3.98, 0.57, false},  {"Ne", 20.180, 0.00, 0.58, false},
    {"Na", 22.990, 0.93, 1.66, true},  {"Mg", 24.305, 1.31, 1.41, true},
    {"Al", 26.982, 1.61, 1.21, true},  {"Si", 28.085, 1.90, 1.11, false},
    {"P", 30.974, 2.19, 1.07, false},  {"S", 32.060, 2.58, 1.05, false},
    {"Cl", 35.450, 3.16, 1.02, false}, {"Ar", 39.948, 0.00, 1.06, false},
    {"K", 39.098, 0.82, 2.03, true},   {"Ca", 40.078, 1.00, 1.76, true},
    {"Sc", 44.956, 1.36, 1.70, true},  {"Ti", 47.867, 1.54, 1.60, true},
    {"V", 50.942, 1.63, 1.53, true},   {"Cr", 51.996, 1.66, 1.39, true},
    {"Mn", 54.938, 1.55, 1.39, true},  {"Fe", 55.845, 1.83, 1.32, true},
    {"Co", 58.933, 1.88, 1.26, true},  {"Ni", 58.693, 1.91, 1.24, true},
    {"Cu", 63.546, 1.90, 1.32, true},  {"Zn", 65.380, 1.65, 1.22, true},
    {"Ga", 69.723, 1.81, 1.22, true},  {"Ge", 72.630, 2.01, 1.20, false},
    {"As", 74.922, 2.18, 1.19, false}, {"Se", 78.971, 2.55, 1.20, false},
    {"Br", 79.904, 2.96, 1.20, false}, {"Kr", 83.798, 3.00, 1.16, false},
    {"Rb", 85.468, 0.82, 2.20, true},  {"Sr", 87.620, 0.95, 1.95, true},
    {"Y", 88.906, 1.22, 1.90, true},   {"Zr", 91.224, 1.33, 1.75, true},
    {"Nb", 92.906, 1.60, 1.64, true},  {"Mo", 95.950, 2.16, 1.54, true},
    {"Tc", 98.000, 1.90, 1.47, true},  {"Ru", 101.07, 2.20, 1.46, true},
    {"Rh", 102.91, 2.28, 1.42, true},  {"Pd", 106.42, 2.20, 1.39, true},
    {"Ag", 107.87, 1.93, 1.45, true},  {"Cd", 112.41, 1.69, 1.44, true},
    {"In", 114.82, 1.78, 1.42, true},  {"Sn", 118.71, 1.96, 1.39, true},
    {"Sb", 121.76, 2.05, 1.39, false}, {"Te", 127.60, 2.10, 1.38, false},
    {"I", 126.90, 2.66, 1.39, false},
};
constexpr std::size_t kNumElements = sizeof(kElements) / sizeof(kElements[0]);
static_assert(kNumElements == FeatureSchema::kElementSlots - 1);

std::atomic<std::size_t> g_unknown_element_count{0};

// 0-based table index, or kNumElements for unknown symbols.
std::size_t element_index(const std::string& symbol) {
    static const std::map<std::string, std::size_t> lookup = [] {
        std::map<std::string, std::size_t> m;
        for (std::size_t i = 0; i < kNumElements; ++i) m[kElements[i].symbol] = i;
        return m;
    }();
    auto it = lookup.find(symbol);
    return it == lookup.end() ? kNumElements : it->second;
}

double distance(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

std::string chain_tag_name(ChainTag tag) {
    return tag == ChainTag::Protein ? "protein" : "ligand";
}

ChainTag chain_tag_from_name(const std::string& name) {
    if (name == "protein") return ChainTag::Protein;
    if (name == "ligand") return ChainTag::Ligand;
    throw ContractError("unknown chain tag '" + name + "'");
}

std::size_t featurize_unknown_element_count() { return g_unknown_element_count.load(); }

std::vector<double> featurize(const Atom& atom, const std::vector<Atom>& context) {
    using S = FeatureSchema;
    for (double c : atom.position) {
        if (!std::isfinite(c)) {
            throw ContractError("atom serial " + std::to_string(atom.serial) +
                                " has a non-finite coordinate");
        }
    }
    std::vector<double> f(S::kWidth, 0.0);

    const std::size_t elem = element_index(atom.element);
    if (elem == kNumElements) g_unknown_element_count.fetch_add(1);
    f[S::kElementOffset + elem] = 1.0;

    std::size_t degree = 0;
    std::size_t near4 = 0;
    double nearest = 0.0;
    bool have_nearest = false;
    for (const Atom& other : context) {
        if (other.serial == atom.serial) continue;
        const double d = distance(atom.position, other.position);
        if (d <= S::kBondDistance) ++degree;
        if (d <= 4.0) ++near4;
        if (!have_nearest || d < nearest) {
            nearest = d;
            have_nearest = true;
        }
    }
    f[S::kDegreeOffset + std::min(degree, S::kDegreeSlots - 1)] = 1.0;

    // Neutral charge: the record format has no charge column.
    f[S::kChargeOffset + 2] = 1.0;

    // Heavy-degree heuristic: 2 -> sp, 3 -> sp2, >=4 -> sp3; organic subset
    // only, everything else lands in "other"/"unspecified".
    const bool organic = atom.element == "C" || atom.element == "N" || atom.element == "O" ||
                         atom.element == "S" || atom.element == "P";
    std::size_t hybrid = 4;  // unspecified
    if (!organic) {
        hybrid = 3;  // other
    } else if (degree == 2) {
        hybrid = 0;
    } else if (degree == 3) {
        hybrid = 1;
    } else if (degree >= 4) {
        hybrid = 2;
    }
    f[S::kHybridOffset + hybrid] = 1.0;

    f[S::kIsProteinFlag] = atom.chain_tag == ChainTag::Protein ? 1.0 : 0.0;

    // Residue types are not carried by the record format; the unknown slot
    // keeps the one-hot group valid.
    f[S::kResidueOffset + S::kResidueSlots - 1] = 1.0;

    const std::size_t sc = S::kScalarOffset;
    if (elem < kNumElements) {
        const ElementInfo& info = kElements[elem];
        f[sc + 0] = static_cast<double>(elem + 1) / 53.0;
        f[sc + 1] = info.mass / 130.0;
        f[sc + 2] = info.electronegativity / 4.0;
        f[sc + 3] = info.covalent_radius / 2.5;
        const std::size_t z = elem + 1;
        const double period = z <= 2 ? 1 : z <= 10 ? 2 : z <= 18 ? 3 : z <= 36 ? 4 : 5;
        f[sc + 4] = period / 5.0;
        f[sc + 5] = info.metal ? 1.0 : 0.0;
    }
    f[sc + 6] = static_cast<double>(std::min(degree, S::kDegreeSlots - 1)) /
                static_cast<double>(S::kDegreeSlots - 1);
    f[sc + 7] = have_nearest ? std::min(nearest, 5.0) / 5.0 : 0.0;
    f[sc + 8] = std::min(static_cast<double>(near4), 20.0) / 20.0;
    // Remaining scalar slots stay zero padding.
    return f;
}

MolecularGraph build_graph(const std::vector<Atom>& atoms, double r_edge) {
    if (atoms.empty()) throw ContractError("build_graph requires at least one atom");
    if (r_edge <= 0.0) throw ContractError("build_graph requires r_edge > 0");

    const std::size_t n = atoms.size();
    MolecularGraph g;
    g.origin_tag = atoms.front().chain_tag;
    g.node_features = Tensor({n, FeatureSchema::kWidth});
    g.coordinates = Tensor({n, 3});
    g.serials.reserve(n);

    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> f = featurize(atoms[i], atoms);
        for (std::size_t c = 0; c < FeatureSchema::kWidth; ++c) g.node_features.at(i, c) = f[c];
        for (std::size_t c = 0; c < 3; ++c) g.coordinates.at(i, c) = atoms[i].position[c];
        g.serials.push_back(atoms[i].serial);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (distance(atoms[i].position, atoms[j].position) <= r_edge) {
                g.edges.emplace_back(i, j);
            }
        }
    }
    return g;
}

double sq_distance(const Tensor& coords, std::size_t i, const Tensor& other, std::size_t j) {
    double acc = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        const double d = coords.at(i, c) - other.at(j, c);
        acc += d * d;
    }
    return acc;
}

PocketCrop crop_pocket(const MolecularGraph& protein, const MolecularGraph& ligand,
                       double contact_dist, std::size_t k_hops) {
    if (contact_dist <= 0.0) throw ContractError("crop_pocket requires contact_dist > 0");
    const std::size_t n = protein.n_nodes();

    std::vector<int> hop(n, -1);
    std::deque<std::size_t> frontier;
    const double contact_sq = contact_dist * contact_dist;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < ligand.n_nodes(); ++j) {
            if (sq_distance(protein.coordinates, i, ligand.coordinates, j) <= contact_sq) {
                hop[i] = 0;
                frontier.push_back(i);
                break;
            }
        }
    }
    if (frontier.empty()) {
        throw EmptyPocketError("no protein atom within contact distance " +
                               std::to_string(contact_dist) + " A of the ligand");
    }

    std::vector<std::vector<std::size_t>> adjacency(n);
    for (const auto& [a, b] : protein.edges) {
        adjacency[a].push_back(b);
        adjacency[b].push_back(a);
    }
    while (!frontier.empty()) {
        const std::size_t u = frontier.front();
        frontier.pop_front();
        if (static_cast<std::size_t>(hop[u]) >= k_hops) continue;
        for (std::size_t v : adjacency[u]) {
            if (hop[v] == -1) {
                hop[v] = hop[u] + 1;
                frontier.push_back(v);
            }
        }
    }

    PocketCrop crop;
    crop.old_to_new.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (hop[i] >= 0) {
            crop.old_to_new[i] = static_cast<std::ptrdiff_t>(crop.kept.size());
            crop.kept.push_back(i);
        }
    }

    const std::size_t m = crop.kept.size();
    MolecularGraph& sub = crop.graph;
    sub.origin_tag = protein.origin_tag;
    sub.node_features = Tensor({m, FeatureSchema::kWidth});
    sub.coordinates = Tensor({m, 3});
    sub.serials.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t old = crop.kept[i];
        for (std::size_t c = 0; c < FeatureSchema::kWidth; ++c)
            sub.node_features.at(i, c) = protein.node_features.at(old, c);
        for (std::size_t c = 0; c < 3; ++c) sub.coordinates.at(i, c) = protein.coordinates.at(old, c);
        sub.serials.push_back(protein.serials[old]);
    }
    for (const auto& [a, b] : protein.edges) {
        if (crop.old_to_new[a] >= 0 && crop.old_to_new[b] >= 0) {
            auto na = static_cast<std::size_t>(crop.old_to_new[a]);
            auto nb = static_cast<std::size_t>(crop.old_to_new[b]);
            sub.edges.emplace_back(std::min(na, nb), std::max(na, nb));
        }
    }
    std::sort(sub.edges.begin(), sub.edges.end());
    return crop;
}

}  // namespace geopli
