#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "adgraph/error.hpp"
#include "adgraph/graphs.hpp"
#include "adgraph/parallel.hpp"

namespace adgraph {

// Keeps every edge at least as heavy as the ceil(top_fraction * E)-th
// heaviest one (boundary ties survive), then drops nodes left without edges.
template <class Weight>
WeightedGraph<Weight> prune_edges(const WeightedGraph<Weight>& g, double top_fraction = 0.05) {
    if (!(top_fraction > 0.0 && top_fraction <= 1.0)) throw InvalidArgument("top fraction must be in (0, 1]");
    WeightedGraph<Weight> out;
    if (g.edges.empty()) return out;

    const std::size_t e = g.edges.size();
    auto keep = static_cast<std::size_t>(std::ceil(top_fraction * static_cast<double>(e) - 1e-9));
    keep = std::clamp<std::size_t>(keep, 1, e);
    std::vector<Weight> weights;
    weights.reserve(e);
    for (const auto& edge : g.edges) weights.push_back(edge.weight);
    std::nth_element(weights.begin(), weights.begin() + static_cast<std::ptrdiff_t>(keep - 1), weights.end(),
                     [](const Weight& a, const Weight& b) { return b < a; });
    const Weight threshold = weights[keep - 1];

    std::vector<std::uint32_t> remap(g.nodes.size(), std::numeric_limits<std::uint32_t>::max());
    for (const auto& edge : g.edges) {
        if (!(edge.weight < threshold)) remap[edge.u] = remap[edge.v] = 0;
    }
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        if (remap[i] == 0) {
            remap[i] = static_cast<std::uint32_t>(out.nodes.size());
            out.nodes.push_back(g.nodes[i]);
        }
    }
    for (const auto& edge : g.edges) {
        if (!(edge.weight < threshold)) out.edges.push_back({remap[edge.u], remap[edge.v], edge.weight});
    }
    return out;
}

// Shortest-path metric for betweenness: hop count, or 1/weight.
enum class DistanceMode { Hops, InverseWeight };

namespace detail {

// Compact adjacency over a node subset; edge slots index into `edge_ids`.
struct LocalGraph {
    std::size_t n = 0;
    std::vector<std::uint32_t> offsets;   // n + 1
    std::vector<std::uint32_t> neighbour; // 2m
    std::vector<std::uint32_t> slot;      // 2m, local edge index
    std::vector<double> length;           // m
};

inline LocalGraph make_local_graph(std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& ends,
                                   std::vector<double> length) {
    LocalGraph lg;
    lg.n = n;
    lg.offsets.assign(n + 1, 0);
    for (const auto& [a, b] : ends) {
        ++lg.offsets[a + 1];
        ++lg.offsets[b + 1];
    }
    for (std::size_t i = 0; i < n; ++i) lg.offsets[i + 1] += lg.offsets[i];
    lg.neighbour.resize(ends.size() * 2);
    lg.slot.resize(ends.size() * 2);
    std::vector<std::uint32_t> fill(lg.offsets.begin(), lg.offsets.end() - 1);
    for (std::uint32_t e = 0; e < ends.size(); ++e) {
        const auto [a, b] = ends[e];
        lg.neighbour[fill[a]] = b;
        lg.slot[fill[a]++] = e;
        lg.neighbour[fill[b]] = a;
        lg.slot[fill[b]++] = e;
    }
    lg.length = std::move(length);
    return lg;
}

struct BrandesWorkspace {
    std::vector<double> sigma, delta, dist;
    std::vector<std::uint32_t> order;

    explicit BrandesWorkspace(std::size_t n)
        : sigma(n, 0), delta(n, 0), dist(n, std::numeric_limits<double>::infinity()) {
        order.reserve(n);
    }
};

inline bool same_distance(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

// Adds the dependency contributions of one source to `scores`.
inline void accumulate_source(const LocalGraph& g, std::uint32_t source, DistanceMode mode, BrandesWorkspace& ws,
                              std::vector<double>& scores) {
    ws.order.clear();
    ws.sigma[source] = 1;
    ws.dist[source] = 0;
    if (mode == DistanceMode::Hops) {
        ws.order.push_back(source);
        for (std::size_t head = 0; head < ws.order.size(); ++head) {
            const auto v = ws.order[head];
            for (auto k = g.offsets[v]; k < g.offsets[v + 1]; ++k) {
                const auto w = g.neighbour[k];
                if (std::isinf(ws.dist[w])) {
                    ws.dist[w] = ws.dist[v] + 1;
                    ws.order.push_back(w);
                }
                if (ws.dist[w] == ws.dist[v] + 1) ws.sigma[w] += ws.sigma[v];
            }
        }
    } else {
        using Item = std::pair<double, std::uint32_t>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
        std::vector<bool> settled(g.n, false);
        queue.emplace(0.0, source);
        while (!queue.empty()) {
            const auto [d, v] = queue.top();
            queue.pop();
            if (settled[v] || d > ws.dist[v]) continue;
            settled[v] = true;
            ws.order.push_back(v);
            for (auto k = g.offsets[v]; k < g.offsets[v + 1]; ++k) {
                const auto w = g.neighbour[k];
                if (settled[w]) continue;
                const double nd = ws.dist[v] + g.length[g.slot[k]];
                if (std::isinf(ws.dist[w]) || (nd < ws.dist[w] && !same_distance(nd, ws.dist[w]))) {
                    ws.dist[w] = nd;
                    ws.sigma[w] = ws.sigma[v];
                    queue.emplace(nd, w);
                } else if (same_distance(nd, ws.dist[w])) {
                    ws.sigma[w] += ws.sigma[v];
                }
            }
        }
    }

    for (auto it = ws.order.rbegin(); it != ws.order.rend(); ++it) {
        const auto w = *it;
        for (auto k = g.offsets[w]; k < g.offsets[w + 1]; ++k) {
            const auto v = g.neighbour[k];
            if (std::isinf(ws.dist[v])) continue;
            const bool predecessor = mode == DistanceMode::Hops
                                         ? ws.dist[v] + 1 == ws.dist[w]
                                         : ws.dist[v] < ws.dist[w] && same_distance(ws.dist[v] + g.length[g.slot[k]], ws.dist[w]);
            if (!predecessor) continue;
            const double c = ws.sigma[v] / ws.sigma[w] * (1.0 + ws.delta[w]);
            scores[g.slot[k]] += c;
            ws.delta[v] += c;
        }
    }
    for (const auto v : ws.order) {
        ws.sigma[v] = 0;
        ws.delta[v] = 0;
        ws.dist[v] = std::numeric_limits<double>::infinity();
    }
}

// Edge betweenness over unordered node pairs. Sources are dealt round-robin
// into a fixed number of lanes (a function of n only) and lanes are summed
// in order, so the result is identical for every thread count.
inline std::vector<double> brandes(const LocalGraph& g, DistanceMode mode, std::size_t threads) {
    const std::size_t m = g.length.size();
    std::vector<double> total(m, 0.0);
    if (m == 0) return total;
    const std::size_t lanes = g.n < 256 ? 1 : std::min<std::size_t>(64, g.n / 4);
    std::vector<std::vector<double>> partial(lanes, std::vector<double>(m, 0.0));
    for_each_chunk(lanes, 1, threads, [&](std::size_t lane, std::size_t, std::size_t) {
        BrandesWorkspace ws(g.n);
        for (std::size_t s = lane; s < g.n; s += lanes) accumulate_source(g, static_cast<std::uint32_t>(s), mode, ws, partial[lane]);
    });
    for (const auto& p : partial) {
        for (std::size_t e = 0; e < m; ++e) total[e] += p[e];
    }
    for (auto& t : total) t /= 2.0;
    return total;
}

template <class Weight>
double edge_length(const Weight& w, DistanceMode mode) {
    return mode == DistanceMode::Hops ? 1.0 : 1.0 / to_double(w);
}

}  // namespace detail

// Betweenness of every edge of `g`, aligned with g.edges.
template <class Weight>
std::vector<double> edge_betweenness(const WeightedGraph<Weight>& g, DistanceMode mode = DistanceMode::Hops,
                                     std::size_t threads = 1) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> ends;
    std::vector<double> length;
    for (const auto& e : g.edges) {
        ends.emplace_back(e.u, e.v);
        length.push_back(detail::edge_length(e.weight, mode));
    }
    return detail::brandes(detail::make_local_graph(g.nodes.size(), ends, std::move(length)), mode, threads);
}

// Weighted Newman modularity of a partition given as node-index groups.
template <class Weight>
double modularity(const WeightedGraph<Weight>& g, const std::vector<std::vector<std::uint32_t>>& communities) {
    double total = 0;
    for (const auto& e : g.edges) total += to_double(e.weight);
    if (total <= 0) return 0.0;
    std::vector<std::size_t> label(g.nodes.size(), std::numeric_limits<std::size_t>::max());
    for (std::size_t c = 0; c < communities.size(); ++c) {
        for (auto v : communities[c]) label[v] = c;
    }
    std::vector<double> inside(communities.size(), 0.0), degree(communities.size(), 0.0);
    for (const auto& e : g.edges) {
        const double w = to_double(e.weight);
        if (label[e.u] < communities.size()) degree[label[e.u]] += w;
        if (label[e.v] < communities.size()) degree[label[e.v]] += w;
        if (label[e.u] == label[e.v] && label[e.u] < communities.size()) inside[label[e.u]] += w;
    }
    double q = 0;
    for (std::size_t c = 0; c < communities.size(); ++c) {
        const double share = degree[c] / (2 * total);
        q += inside[c] / total - share * share;
    }
    return q;
}

template <class Weight>
double modularity(const WeightedGraph<Weight>& g, const std::vector<std::vector<std::string>>& communities) {
    std::vector<std::vector<std::uint32_t>> groups;
    for (const auto& c : communities) {
        auto& group = groups.emplace_back();
        for (const auto& name : c) {
            const auto idx = g.index_of_node(name);
            if (!idx) throw InvalidArgument("community member '" + name + "' is not a graph node");
            group.push_back(*idx);
        }
    }
    return modularity(g, groups);
}

struct RemovalEvent {
    std::string u;
    std::string v;
    double betweenness = 0;
    std::size_t components_after = 0;
};

struct Partition {
    std::vector<std::vector<std::string>> communities;  // size desc, then smallest member
    double modularity = 0;
    std::vector<RemovalEvent> dendrogram;               // every removal, in order
    std::size_t cut_step = 0;                           // removals applied to reach `communities`
};

struct GirvanNewmanOptions {
    std::optional<std::size_t> max_communities;
    DistanceMode distance = DistanceMode::Hops;
    std::size_t threads = 1;
};

namespace detail {

template <class Weight>
class GirvanNewmanRun {
public:
    GirvanNewmanRun(const WeightedGraph<Weight>& g, const GirvanNewmanOptions& options)
        : g_(g), options_(options), active_(g.edges.size(), true), score_(g.edges.size(), 0.0),
          comp_of_(g.nodes.size(), 0) {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> ends;
        std::vector<double> length;
        for (const auto& e : g.edges) {
            ends.emplace_back(e.u, e.v);
            length.push_back(to_double(e.weight));
            total_weight_ += to_double(e.weight);
        }
        adjacency_ = make_local_graph(g.nodes.size(), ends, std::move(length));
    }

    Partition run() {
        Partition result;
        if (g_.nodes.empty()) return result;

        std::vector<bool> seen(g_.nodes.size(), false);
        for (std::uint32_t v = 0; v < g_.nodes.size(); ++v) {
            if (seen[v]) continue;
            const auto members = reach(v);
            const auto id = static_cast<std::uint32_t>(components_.size());
            for (auto m : members) {
                seen[m] = true;
                comp_of_[m] = id;
            }
            components_.push_back(members);
        }
        std::size_t count = components_.size();
        terms_.resize(components_.size());
        double q = 0;
        for (std::uint32_t c = 0; c < components_.size(); ++c) q += (terms_[c] = term(c));
        for (std::uint32_t c = 0; c < components_.size(); ++c) refresh(c);

        double best_q = q;
        std::size_t best_step = 0;
        const auto cap = options_.max_communities.value_or(std::numeric_limits<std::size_t>::max());

        while (!candidates_.empty()) {
            if (count > cap) break;
            const Candidate top = *candidates_.begin();
            candidates_.erase(candidates_.begin());
            active_[top.edge] = false;
            removal_order_.push_back(top.edge);
            const auto& e = g_.edges[top.edge];

            const std::uint32_t c = comp_of_[e.u];
            best_of_.erase(c);
            const auto side = reach(e.u);
            if (side.size() != components_[c].size()) {
                const auto fresh = static_cast<std::uint32_t>(components_.size());
                std::vector<bool> in_side(g_.nodes.size(), false);
                for (auto m : side) in_side[m] = true;
                std::vector<std::uint32_t> other;
                for (auto m : components_[c]) {
                    if (!in_side[m]) {
                        other.push_back(m);
                        comp_of_[m] = fresh;
                    }
                }
                components_[c] = side;
                components_.push_back(std::move(other));
                terms_.push_back(0);
                q -= terms_[c];
                q += (terms_[c] = term(c));
                q += (terms_[fresh] = term(fresh));
                ++count;
                refresh(c);
                refresh(fresh);
                if (count <= cap && q > best_q + 1e-12) {
                    best_q = q;
                    best_step = result.dendrogram.size() + 1;
                }
            } else {
                refresh(c);
            }
            result.dendrogram.push_back({g_.nodes[e.u], g_.nodes[e.v], top.score, count});
        }

        result.cut_step = best_step;
        std::vector<bool> alive(g_.edges.size(), true);
        for (std::size_t s = 0; s < best_step; ++s) alive[removal_order_[s]] = false;
        DisjointSets sets(g_.nodes.size());
        for (std::size_t i = 0; i < g_.edges.size(); ++i) {
            if (alive[i]) sets.unite(g_.edges[i].u, g_.edges[i].v);
        }
        std::vector<std::vector<std::uint32_t>> groups;
        for (const auto& comp : group_components(g_.nodes, sets)) {
            auto& group = groups.emplace_back();
            for (const auto& name : comp.members) group.push_back(*g_.index_of_node(name));
            result.communities.push_back(comp.members);
        }
        result.modularity = adgraph::modularity(g_, groups);
        return result;
    }

private:
    struct Candidate {
        std::int64_t quantized;
        std::uint32_t u, v, edge;
        double score;

        bool operator<(const Candidate& o) const {
            if (quantized != o.quantized) return quantized > o.quantized;
            return std::pair{u, v} < std::pair{o.u, o.v};
        }
    };

    std::vector<std::uint32_t> reach(std::uint32_t start) const {
        std::vector<std::uint32_t> out{start};
        if (mark_.size() != g_.nodes.size()) mark_.assign(g_.nodes.size(), 0);
        const auto epoch = ++epoch_;
        mark_[start] = epoch;
        for (std::size_t head = 0; head < out.size(); ++head) {
            const auto v = out[head];
            for (auto k = adjacency_.offsets[v]; k < adjacency_.offsets[v + 1]; ++k) {
                const auto w = adjacency_.neighbour[k];
                if (active_[adjacency_.slot[k]] && mark_[w] != epoch) {
                    mark_[w] = epoch;
                    out.push_back(w);
                }
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    // Modularity contribution of component c, measured on the input graph.
    double term(std::uint32_t c) const {
        if (total_weight_ <= 0) return 0.0;
        double inside = 0, degree = 0;
        for (auto v : components_[c]) {
            for (auto k = adjacency_.offsets[v]; k < adjacency_.offsets[v + 1]; ++k) {
                const double w = adjacency_.length[adjacency_.slot[k]];
                degree += w;
                if (comp_of_[adjacency_.neighbour[k]] == c) inside += w / 2;
            }
        }
        const double share = degree / (2 * total_weight_);
        return inside / total_weight_ - share * share;
    }

    // Recomputes betweenness inside component c and re-queues its best edge.
    void refresh(std::uint32_t c) {
        if (const auto it = best_of_.find(c); it != best_of_.end()) {
            candidates_.erase(it->second);
            best_of_.erase(it);
        }
        const auto& members = components_[c];
        std::vector<std::pair<std::uint32_t, std::uint32_t>> ends;
        std::vector<std::uint32_t> edge_ids;
        std::vector<double> length;
        auto& index = local_index_;
        if (index.size() != g_.nodes.size()) index.assign(g_.nodes.size(), 0);
        for (std::uint32_t i = 0; i < members.size(); ++i) index[members[i]] = i;
        for (auto v : members) {
            for (auto k = adjacency_.offsets[v]; k < adjacency_.offsets[v + 1]; ++k) {
                const auto e = adjacency_.slot[k];
                if (!active_[e] || g_.edges[e].u != v) continue;
                ends.emplace_back(index[g_.edges[e].u], index[g_.edges[e].v]);
                edge_ids.push_back(e);
                length.push_back(edge_length(g_.edges[e].weight, options_.distance));
            }
        }
        if (edge_ids.empty()) return;
        const auto scores = brandes(make_local_graph(members.size(), ends, std::move(length)), options_.distance,
                                    members.size() >= 256 ? options_.threads : 1);
        std::optional<Candidate> best;
        for (std::size_t i = 0; i < edge_ids.size(); ++i) {
            const auto e = edge_ids[i];
            score_[e] = scores[i];
            const Candidate cand{static_cast<std::int64_t>(std::llround(scores[i] * 1e6)), g_.edges[e].u, g_.edges[e].v, e,
                                 scores[i]};
            if (!best || cand < *best) best = cand;
        }
        best_of_[c] = candidates_.insert(*best).first;
    }

    const WeightedGraph<Weight>& g_;
    GirvanNewmanOptions options_;
    LocalGraph adjacency_;
    std::vector<bool> active_;
    std::vector<double> score_;
    std::vector<std::uint32_t> comp_of_;
    std::vector<std::vector<std::uint32_t>> components_;
    std::vector<double> terms_;
    std::set<Candidate> candidates_;
    std::map<std::uint32_t, typename std::set<Candidate>::iterator> best_of_;
    std::vector<std::uint32_t> removal_order_;
    double total_weight_ = 0;
    mutable std::vector<std::uint64_t> mark_;
    mutable std::uint64_t epoch_ = 0;
    std::vector<std::uint32_t> local_index_;
};

}  // namespace detail

// Divisive Girvan-Newman: repeatedly removes the edge of highest betweenness
// (ties: smallest endpoint pair by name), recomputing betweenness inside the
// component that lost the edge. Among the partitions seen each time the
// component count grows, the one of maximal weighted modularity is returned.
template <class Weight>
Partition girvan_newman(const WeightedGraph<Weight>& g, const GirvanNewmanOptions& options = {}) {
    return detail::GirvanNewmanRun<Weight>(g, options).run();
}

struct SizeHistogram {
    std::map<std::size_t, std::size_t> counts;
    double fraction_pairs = 0;
};

inline SizeHistogram community_size_distribution(const std::vector<std::vector<std::string>>& communities) {
    SizeHistogram h;
    for (const auto& c : communities) ++h.counts[c.size()];
    if (!communities.empty()) {
        const auto pairs = h.counts.count(2) ? h.counts.at(2) : 0;
        h.fraction_pairs = static_cast<double>(pairs) / static_cast<double>(communities.size());
    }
    return h;
}

inline SizeHistogram community_size_distribution(const Partition& p) { return community_size_distribution(p.communities); }

inline std::string communities_csv(const std::vector<std::vector<std::string>>& communities) {
    std::string out = "community_id,site\n";
    for (std::size_t c = 0; c < communities.size(); ++c) {
        for (const auto& site : communities[c]) out += std::to_string(c) + ',' + text::csv_field(site) + '\n';
    }
    return out;
}

}  // namespace adgraph
