#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "adgraph/error.hpp"
#include "adgraph/extractor.hpp"
#include "adgraph/rational.hpp"
#include "adgraph/text.hpp"

namespace adgraph {

// Tracking and Measurement IDs share the Analytics family.
enum class Family : std::uint8_t { Publisher, Analytics, Container };

inline constexpr std::array<Family, 3> kAllFamilies{Family::Publisher, Family::Analytics, Family::Container};

constexpr std::size_t index_of(Family f) noexcept { return static_cast<std::size_t>(f); }

constexpr Family family_of(IdKind k) noexcept {
    switch (k) {
        case IdKind::Publisher: return Family::Publisher;
        case IdKind::Tracking:
        case IdKind::Measurement: return Family::Analytics;
        case IdKind::Container: return Family::Container;
    }
    return Family::Publisher;
}

constexpr std::string_view family_name(Family f) noexcept {
    switch (f) {
        case Family::Publisher: return "publisher";
        case Family::Analytics: return "analytics";
        case Family::Container: return "container";
    }
    return "unknown";
}

inline std::optional<Family> parse_family(std::string_view name) {
    for (Family f : kAllFamilies) {
        if (family_name(f) == name) return f;
    }
    return std::nullopt;
}

// Site -> identifier edges for one family. Node name vectors are sorted and
// edges are sorted (site, id) index pairs without duplicates.
struct BipartiteGraph {
    Family family = Family::Publisher;
    std::vector<std::string> sites;
    std::vector<std::string> ids;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;

    std::size_t node_count() const noexcept { return sites.size() + ids.size(); }

    std::vector<std::vector<std::uint32_t>> sites_by_id() const {
        std::vector<std::vector<std::uint32_t>> out(ids.size());
        for (const auto& [s, i] : edges) out[i].push_back(s);
        return out;
    }
};

inline BipartiteGraph build_bipartite(const std::vector<SiteIdProfile>& profiles, Family family) {
    std::map<std::string, std::vector<std::string>> site_keys;
    for (const auto& p : profiles) {
        for (IdKind kind : kAllKinds) {
            if (family_of(kind) != family) continue;
            for (const auto& [key, sources] : p.keys_of(kind)) site_keys[p.landing_domain].push_back(key);
        }
    }
    BipartiteGraph g;
    g.family = family;
    std::vector<std::string> ids;
    for (auto& [site, keys] : site_keys) {
        if (keys.empty()) continue;
        g.sites.push_back(site);
        ids.insert(ids.end(), keys.begin(), keys.end());
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    g.ids = std::move(ids);

    std::uint32_t s = 0;
    for (const auto& [site, keys] : site_keys) {
        if (keys.empty()) continue;
        for (const auto& key : keys) {
            const auto i = std::lower_bound(g.ids.begin(), g.ids.end(), key) - g.ids.begin();
            g.edges.emplace_back(s, static_cast<std::uint32_t>(i));
        }
        ++s;
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    return g;
}

// Removes keys found on more than `threshold` sites (intermediary publishing
// partners). Sites may end up with no keys at all.
inline std::vector<SiteIdProfile> exclude_intermediaries(std::vector<SiteIdProfile> profiles,
                                                         std::size_t threshold = 100) {
    if (threshold < 2) throw InvalidArgument("intermediary threshold must be >= 2");
    std::array<std::unordered_map<std::string, std::size_t>, 4> counts;
    for (const auto& p : profiles) {
        for (IdKind kind : kAllKinds) {
            for (const auto& [key, sources] : p.keys_of(kind)) ++counts[index_of(kind)][key];
        }
    }
    for (auto& p : profiles) {
        for (IdKind kind : kAllKinds) {
            std::erase_if(p.keys_of(kind), [&](const auto& kv) { return counts[index_of(kind)][kv.first] > threshold; });
        }
    }
    return profiles;
}

template <class Weight>
struct WeightedEdge {
    std::uint32_t u;
    std::uint32_t v;
    Weight weight;

    friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

// Undirected simple graph. Nodes are sorted names; every edge has u < v
// (hence name(u) < name(v)) and edges are sorted by (u, v).
template <class Weight>
struct WeightedGraph {
    std::vector<std::string> nodes;
    std::vector<WeightedEdge<Weight>> edges;

    std::size_t node_count() const noexcept { return nodes.size(); }
    std::size_t edge_count() const noexcept { return edges.size(); }

    std::optional<std::uint32_t> index_of_node(std::string_view name) const {
        const auto it = std::lower_bound(nodes.begin(), nodes.end(), name);
        if (it == nodes.end() || *it != name) return std::nullopt;
        return static_cast<std::uint32_t>(it - nodes.begin());
    }

    std::optional<Weight> weight(std::string_view a, std::string_view b) const {
        auto ia = index_of_node(a);
        auto ib = index_of_node(b);
        if (!ia || !ib || *ia == *ib) return std::nullopt;
        if (*ia > *ib) std::swap(ia, ib);
        const auto it = std::lower_bound(edges.begin(), edges.end(), std::pair{*ia, *ib},
                                         [](const WeightedEdge<Weight>& e, const std::pair<std::uint32_t, std::uint32_t>& k) {
                                             return std::pair{e.u, e.v} < k;
                                         });
        if (it == edges.end() || it->u != *ia || it->v != *ib) return std::nullopt;
        return it->weight;
    }
};

// Per-family count of distinct keys present on more than one site.
using FamilyNormalizers = std::array<std::size_t, 3>;

// Site-site projection; weights are exact sums of shared_keys / n_family.
struct Metagraph : WeightedGraph<Rational> {
    FamilyNormalizers normalizers{};
};

inline FamilyNormalizers family_normalizers(const BipartiteGraph& publisher, const BipartiteGraph& analytics,
                                            const BipartiteGraph& container) {
    FamilyNormalizers n{};
    for (const BipartiteGraph* g : {&publisher, &analytics, &container}) {
        for (const auto& sites : g->sites_by_id()) n[index_of(g->family)] += sites.size() >= 2;
    }
    return n;
}

// `normalizers` overrides the per-family n (for example with values taken
// before intermediary exclusion); by default n is computed from the graphs.
inline Metagraph build_metagraph(const BipartiteGraph& publisher, const BipartiteGraph& analytics,
                                 const BipartiteGraph& container,
                                 std::optional<FamilyNormalizers> normalizers = std::nullopt) {
    const std::array<const BipartiteGraph*, 3> graphs{&publisher, &analytics, &container};
    for (Family f : kAllFamilies) {
        if (graphs[index_of(f)]->family != f) throw InvalidArgument("bipartite graphs passed in the wrong family order");
    }

    Metagraph mg;
    mg.normalizers = normalizers.value_or(family_normalizers(publisher, analytics, container));
    for (const auto* g : graphs) mg.nodes.insert(mg.nodes.end(), g->sites.begin(), g->sites.end());
    std::sort(mg.nodes.begin(), mg.nodes.end());
    mg.nodes.erase(std::unique(mg.nodes.begin(), mg.nodes.end()), mg.nodes.end());

    std::unordered_map<std::uint64_t, std::array<std::uint32_t, 3>> shared;
    for (const auto* g : graphs) {
        const std::size_t f = index_of(g->family);
        if (mg.normalizers[f] == 0) continue;
        std::vector<std::uint32_t> global(g->sites.size());
        for (std::size_t s = 0; s < g->sites.size(); ++s) global[s] = *mg.index_of_node(g->sites[s]);
        for (const auto& sites : g->sites_by_id()) {
            for (std::size_t a = 0; a < sites.size(); ++a) {
                for (std::size_t b = a + 1; b < sites.size(); ++b) {
                    auto u = global[sites[a]];
                    auto v = global[sites[b]];
                    if (u > v) std::swap(u, v);
                    ++shared[(static_cast<std::uint64_t>(u) << 32) | v][f];
                }
            }
        }
    }

    mg.edges.reserve(shared.size());
    for (const auto& [pair, counts] : shared) {
        Rational w;
        for (std::size_t f = 0; f < 3; ++f) {
            if (counts[f] != 0) w += Rational(counts[f], static_cast<std::int64_t>(mg.normalizers[f]));
        }
        if (w > Rational(0)) {
            mg.edges.push_back({static_cast<std::uint32_t>(pair >> 32), static_cast<std::uint32_t>(pair & 0xffffffffU), w});
        }
    }
    std::sort(mg.edges.begin(), mg.edges.end(), [](const auto& a, const auto& b) { return std::pair{a.u, a.v} < std::pair{b.u, b.v}; });
    return mg;
}

struct Component {
    std::vector<std::string> members;  // sorted

    std::size_t size() const noexcept { return members.size(); }
};

namespace detail {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::uint8_t> rank_;
};

// Components ordered by size descending, then by smallest member.
inline std::vector<Component> group_components(const std::vector<std::string>& names, DisjointSets& sets) {
    std::unordered_map<std::size_t, std::size_t> slot;
    std::vector<Component> out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto [it, inserted] = slot.emplace(sets.find(i), out.size());
        if (inserted) out.emplace_back();
        out[it->second].members.push_back(names[i]);
    }
    for (auto& c : out) std::sort(c.members.begin(), c.members.end());
    std::sort(out.begin(), out.end(), [](const Component& a, const Component& b) {
        return a.size() != b.size() ? a.size() > b.size() : a.members.front() < b.members.front();
    });
    return out;
}

}  // namespace detail

// Edges are treated as undirected. Node names are sites and keys.
inline std::vector<Component> connected_components(const BipartiteGraph& g) {
    std::vector<std::string> names = g.sites;
    names.insert(names.end(), g.ids.begin(), g.ids.end());
    detail::DisjointSets sets(names.size());
    for (const auto& [s, i] : g.edges) sets.unite(s, g.sites.size() + i);
    return detail::group_components(names, sets);
}

template <class Weight>
std::vector<Component> connected_components(const WeightedGraph<Weight>& g) {
    detail::DisjointSets sets(g.nodes.size());
    for (const auto& e : g.edges) sets.unite(e.u, e.v);
    return detail::group_components(g.nodes, sets);
}

// --- CSV dumps -------------------------------------------------------------

inline std::string bipartite_csv(const BipartiteGraph& g) {
    std::string out = "site,key,family\n";
    for (const auto& [s, i] : g.edges) {
        out += text::csv_field(g.sites[s]) + ',' + text::csv_field(g.ids[i]) + ',' + std::string(family_name(g.family)) + '\n';
    }
    return out;
}

template <class Weight>
std::string metagraph_csv(const WeightedGraph<Weight>& g) {
    std::string out = "site_a,site_b,weight\n";
    for (const auto& e : g.edges) {
        out += text::csv_field(g.nodes[e.u]) + ',' + text::csv_field(g.nodes[e.v]) + ',' +
               text::format_double(to_double(e.weight)) + '\n';
    }
    return out;
}

// Reads a site_a,site_b,weight edge list (header row optional).
inline WeightedGraph<double> parse_metagraph_csv(std::istream& in) {
    struct Row {
        std::string a, b;
        double w;
    };
    std::vector<Row> rows;
    std::size_t number = 0;
    for (const auto& line : text::read_lines(in)) {
        ++number;
        if (text::trim(line).empty()) continue;
        const auto fields = text::split_csv(line);
        if (!fields || fields->size() != 3) throw FormatError("edge row must be site_a,site_b,weight", number);
        const auto w = text::parse_double((*fields)[2]);
        if (!w) {
            if (number == 1) continue;  // header
            throw FormatError("weight is not a number", number);
        }
        if (!(*w > 0)) throw FormatError("weight must be positive", number);
        if ((*fields)[0] == (*fields)[1] || (*fields)[0].empty()) throw FormatError("self-loop or empty site", number);
        rows.push_back({(*fields)[0], (*fields)[1], *w});
    }
    WeightedGraph<double> g;
    for (const auto& r : rows) {
        g.nodes.push_back(r.a);
        g.nodes.push_back(r.b);
    }
    std::sort(g.nodes.begin(), g.nodes.end());
    g.nodes.erase(std::unique(g.nodes.begin(), g.nodes.end()), g.nodes.end());
    for (const auto& r : rows) {
        auto u = *g.index_of_node(r.a);
        auto v = *g.index_of_node(r.b);
        if (u > v) std::swap(u, v);
        g.edges.push_back({u, v, r.w});
    }
    std::sort(g.edges.begin(), g.edges.end(), [](const auto& a, const auto& b) { return std::pair{a.u, a.v} < std::pair{b.u, b.v}; });
    const auto dup = std::adjacent_find(g.edges.begin(), g.edges.end(), [](const auto& a, const auto& b) { return a.u == b.u && a.v == b.v; });
    if (dup != g.edges.end()) throw FormatError("duplicate edge " + g.nodes[dup->u] + "," + g.nodes[dup->v]);
    return g;
}

}  // namespace adgraph
