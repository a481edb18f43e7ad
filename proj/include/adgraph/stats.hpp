#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "adgraph/corpus.hpp"
#include "adgraph/error.hpp"
#include "adgraph/extractor.hpp"
#include "adgraph/graphs.hpp"
#include "adgraph/parallel.hpp"
#include "adgraph/power_law.hpp"

namespace adgraph {

// --- regression ------------------------------------------------------------

struct RegressionFit {
    double slope = 0;
    double intercept = 0;
    double r_squared = 0;  // 1 by convention when all y are equal
};

using Point = std::pair<double, double>;

// Ordinary least squares on >= 2 points with non-constant x.
inline RegressionFit least_squares(std::span<const Point> points) {
    if (points.size() < 2) throw InsufficientData("least squares needs at least 2 points");
    const auto n = static_cast<double>(points.size());
    double mx = 0, my = 0;
    for (const auto& [x, y] : points) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& [x, y] : points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (sxx <= 0) throw InsufficientData("regression x values are all equal");
    RegressionFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy <= 0) {
        fit.r_squared = 1.0;
    } else {
        double ss_res = 0;
        for (const auto& [x, y] : points) {
            const double r = y - (fit.intercept + fit.slope * x);
            ss_res += r * r;
        }
        fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    }
    return fit;
}

// least_squares with the >= 3 point precondition used for reported trends.
inline RegressionFit linear_fit(std::span<const Point> points) {
    if (points.size() < 3) throw InsufficientData("linear fit needs at least 3 points");
    return least_squares(points);
}

// --- identifier counts -------------------------------------------------------

// Per kind: fraction of key-bearing sites carrying exactly k distinct keys.
using CountHistogram = std::map<std::size_t, double>;

inline std::array<CountHistogram, 4> per_site_id_counts(const std::vector<SiteIdProfile>& profiles) {
    std::array<CountHistogram, 4> out;
    for (IdKind kind : kAllKinds) {
        std::map<std::size_t, std::size_t> counts;
        std::size_t bearing = 0;
        for (const auto& p : profiles) {
            const auto n = p.keys_of(kind).size();
            if (n == 0) continue;
            ++counts[n];
            ++bearing;
        }
        for (const auto& [k, c] : counts) out[index_of(kind)][k] = static_cast<double>(c) / static_cast<double>(bearing);
    }
    return out;
}

// --- publishers --------------------------------------------------------------

struct PublisherRecord {
    std::string key;
    std::vector<std::string> sites;
    std::size_t size = 0;
    std::optional<double> mean_rank;
    std::optional<double> median_rank;
};

using RankLookup = std::function<std::optional<std::int64_t>(const std::string&)>;

inline RankLookup rank_lookup(const std::vector<SiteIdProfile>& profiles) {
    auto ranks = std::make_shared<std::unordered_map<std::string, std::int64_t>>();
    for (const auto& p : profiles) {
        if (p.rank) (*ranks)[p.landing_domain] = *p.rank;
    }
    return [ranks](const std::string& site) -> std::optional<std::int64_t> {
        const auto it = ranks->find(site);
        if (it == ranks->end()) return std::nullopt;
        return it->second;
    };
}

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

// One record per identifier node, by size descending then key.
inline std::vector<PublisherRecord> publisher_sizes(const BipartiteGraph& graph, const RankLookup& rank_of = {}) {
    std::vector<PublisherRecord> out;
    const auto members = graph.sites_by_id();
    out.reserve(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
        PublisherRecord rec;
        rec.key = graph.ids[i];
        for (auto s : members[i]) rec.sites.push_back(graph.sites[s]);
        rec.size = rec.sites.size();
        if (rank_of) {
            std::vector<double> ranks;
            for (const auto& site : rec.sites) {
                if (const auto r = rank_of(site)) ranks.push_back(static_cast<double>(*r));
            }
            if (!ranks.empty()) {
                double sum = 0;
                for (double r : ranks) sum += r;
                rec.mean_rank = sum / static_cast<double>(ranks.size());
                rec.median_rank = median_of(std::move(ranks));
            }
        }
        out.push_back(std::move(rec));
    }
    std::sort(out.begin(), out.end(), [](const PublisherRecord& a, const PublisherRecord& b) {
        return a.size != b.size ? a.size > b.size : a.key < b.key;
    });
    return out;
}

inline std::size_t top_k_total(const std::vector<PublisherRecord>& records, std::size_t k) {
    std::size_t total = 0;
    for (std::size_t i = 0; i < std::min(k, records.size()); ++i) total += records[i].size;
    return total;
}

struct PopularityBucket {
    std::size_t size = 0;
    std::size_t publishers = 0;
    double mean_rank = 0;    // mean of per-publisher mean ranks
    double median_rank = 0;  // median of per-publisher median ranks
};

struct PopularityResult {
    std::vector<PopularityBucket> buckets;
    RegressionFit fit;  // mean rank against size
};

// Sizes above `max_size_bucket` share the last bucket.
inline PopularityResult popularity_by_size(const std::vector<PublisherRecord>& records,
                                           std::optional<std::size_t> max_size_bucket = std::nullopt) {
    std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& r : records) {
        if (!r.mean_rank) continue;
        const std::size_t bucket = max_size_bucket ? std::min(r.size, *max_size_bucket) : r.size;
        groups[bucket].first.push_back(*r.mean_rank);
        groups[bucket].second.push_back(*r.median_rank);
    }
    if (groups.empty()) throw InsufficientData("no publisher has ranked member sites");

    PopularityResult out;
    std::vector<Point> points;
    for (auto& [size, ranks] : groups) {
        PopularityBucket b;
        b.size = size;
        b.publishers = ranks.first.size();
        double sum = 0;
        for (double r : ranks.first) sum += r;
        b.mean_rank = sum / static_cast<double>(ranks.first.size());
        b.median_rank = median_of(ranks.second);
        points.emplace_back(static_cast<double>(size), b.mean_rank);
        out.buckets.push_back(b);
    }
    out.fit = linear_fit(points);
    return out;
}

// --- categories and diversity -----------------------------------------------

struct DiversityReport {
    std::size_t richness = 0;
    std::map<std::string, double> proportions;
    double shannon_h = 0;
    double h_max = 0;  // ln(richness)
};

// H' = -sum p_i ln p_i over the distinct categories of the multiset.
inline DiversityReport shannon_diversity(std::span<const std::string> categories) {
    if (categories.empty()) throw InsufficientData("diversity of an empty multiset");
    std::map<std::string, std::size_t> counts;
    for (const auto& c : categories) ++counts[c];
    DiversityReport r;
    r.richness = counts.size();
    const auto n = static_cast<double>(categories.size());
    for (const auto& [label, count] : counts) {
        const double p = static_cast<double>(count) / n;
        r.proportions[label] = p;
        r.shannon_h -= p * std::log(p);
    }
    r.shannon_h = std::max(r.shannon_h, 0.0);
    r.h_max = std::log(static_cast<double>(r.richness));
    return r;
}

// Mean number of distinct categories among k labeled sites drawn uniformly
// without replacement. Every trial has its own generator seeded from
// (seed, trial), so the result does not depend on the thread count.
inline double poisson_sampling_baseline(std::span<const std::string> labels, std::size_t k, std::size_t trials,
                                        std::uint64_t seed, std::size_t threads = 1) {
    if (trials < 1) throw InvalidArgument("trials must be >= 1");
    if (k > labels.size()) throw InvalidArgument("sample size exceeds labeled corpus");
    if (k == 0) return 0.0;

    std::unordered_map<std::string, std::uint32_t> ids;
    std::vector<std::uint32_t> coded;
    coded.reserve(labels.size());
    for (const auto& l : labels) coded.push_back(ids.emplace(l, static_cast<std::uint32_t>(ids.size())).first->second);

    std::vector<std::size_t> richness(trials, 0);
    for_each_chunk(trials, 256, threads, [&](std::size_t begin, std::size_t end, std::size_t) {
        std::unordered_set<std::size_t> chosen;
        std::vector<bool> present(ids.size(), false);
        for (std::size_t t = begin; t < end; ++t) {
            std::mt19937_64 rng(mix_seed(seed, t));
            // Floyd's algorithm: k distinct indices out of n.
            chosen.clear();
            const std::size_t n = coded.size();
            for (std::size_t j = n - k; j < n; ++j) {
                const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, j)(rng);
                if (!chosen.insert(pick).second) chosen.insert(j);
            }
            std::size_t distinct = 0;
            for (auto i : chosen) {
                if (!present[coded[i]]) {
                    present[coded[i]] = true;
                    ++distinct;
                }
            }
            for (auto i : chosen) present[coded[i]] = false;
            richness[t] = distinct;
        }
    });
    double sum = 0;
    for (auto r : richness) sum += static_cast<double>(r);
    return sum / static_cast<double>(trials);
}

struct RichnessPoint {
    std::size_t size = 0;    // labeled members per group
    std::size_t groups = 0;
    double observed = 0;     // mean richness of the groups
    double baseline = 0;     // sampled mean richness at the same size
};

// Observed richness per group size against the sampling baseline drawn from
// `labels`. Uncategorized members are ignored; groups with none are skipped.
inline std::vector<RichnessPoint> richness_vs_baseline(const std::vector<std::vector<std::string>>& groups,
                                                       const CategoryMap& categories,
                                                       std::span<const std::string> labels, std::size_t trials,
                                                       std::uint64_t seed, std::size_t threads = 1) {
    std::map<std::size_t, std::pair<std::size_t, double>> observed;
    for (const auto& group : groups) {
        std::vector<std::string> labelled;
        for (const auto& site : group) {
            if (auto c = categories.lookup(site)) labelled.push_back(std::move(*c));
        }
        if (labelled.empty()) continue;
        auto& [count, total] = observed[labelled.size()];
        ++count;
        total += static_cast<double>(shannon_diversity(labelled).richness);
    }
    std::vector<RichnessPoint> out;
    for (const auto& [size, acc] : observed) {
        RichnessPoint p;
        p.size = size;
        p.groups = acc.first;
        p.observed = acc.second / static_cast<double>(acc.first);
        p.baseline = poisson_sampling_baseline(labels, size, trials, mix_seed(seed, size), threads);
        out.push_back(p);
    }
    return out;
}

struct CategoryHistogram {
    std::size_t labeled = 0;
    std::map<std::string, double> fractions;
};

// Fraction per category among the labeled subset of `sites`.
inline CategoryHistogram category_distribution(const std::vector<std::string>& sites, const CategoryMap& categories) {
    CategoryHistogram h;
    std::map<std::string, std::size_t> counts;
    for (const auto& site : sites) {
        if (auto c = categories.lookup(site)) {
            ++counts[*c];
            ++h.labeled;
        }
    }
    for (const auto& [label, c] : counts) h.fractions[label] = static_cast<double>(c) / static_cast<double>(h.labeled);
    return h;
}

// Landing domains of the profiles that carry at least one Publisher key.
inline std::vector<std::string> publisher_bearing_sites(const std::vector<SiteIdProfile>& profiles) {
    std::vector<std::string> out;
    for (const auto& p : profiles) {
        if (!p.keys_of(IdKind::Publisher).empty()) out.push_back(p.landing_domain);
    }
    return out;
}

}  // namespace adgraph
