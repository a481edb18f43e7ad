#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "adgraph/adgraph.hpp"

namespace fixtures {

using adgraph::IdKind;
using adgraph::Source;
using adgraph::SourceSet;

inline std::filesystem::path data_file(const std::string& name) { return std::filesystem::path(ADGRAPH_DATA_DIR) / name; }

inline const adgraph::Dictionary& shipped_dictionary() {
    static const auto d = adgraph::Dictionary::load(data_file("dictionary.txt"));
    return d;
}

inline const adgraph::Blocklist& shipped_blocklist() {
    static const auto b = adgraph::Blocklist::load(data_file("blocklist.txt"));
    return b;
}

inline adgraph::ExtractionFilters shipped_filters() { return {&shipped_dictionary(), &shipped_blocklist()}; }

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("adgraph_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// (site, kind, canonical key)
using Triple = std::tuple<std::string, IdKind, std::string>;

struct SyntheticCorpus {
    std::vector<adgraph::CrawlRecord> records;
    std::map<Triple, SourceSet> manifest;  // ground truth
    std::map<std::string, std::string> categories;
};

struct CorpusShape {
    std::size_t sites = 50;
    std::size_t max_group = 6;           // sites per operator
    std::size_t intermediary_sites = 0;  // one Publisher key shared by this many sites
    std::size_t page_padding = 200;      // bytes of filler text per page
    bool decoys = true;
};

namespace detail {

inline std::string digits(std::mt19937_64& rng, std::size_t n) {
    std::string s;
    s += static_cast<char>('1' + rng() % 9);
    while (s.size() < n) s += static_cast<char>('0' + rng() % 10);
    return s;
}

// Upper-case alphanumerics with at least one digit, so never a dictionary word.
inline std::string alnum(std::mt19937_64& rng, std::size_t n) {
    static constexpr char kChars[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    std::string s;
    while (s.size() < n) s += kChars[rng() % 36];
    s[rng() % n] = static_cast<char>('0' + rng() % 10);
    return s;
}

struct Operator {
    std::vector<std::pair<IdKind, std::string>> keys;  // canonical keys
    std::string category;
};

inline std::string raw_for(IdKind kind, const std::string& key, std::mt19937_64& rng) {
    if (kind == IdKind::Tracking) return key + "-" + std::to_string(1 + rng() % 30);
    return key;
}

inline std::string html_snippet(IdKind kind, const std::string& raw) {
    switch (kind) {
        case IdKind::Publisher: return "<ins class=\"adsbygoogle\" data-ad-client=\"ca-" + raw + "\"></ins>";
        case IdKind::Tracking: return "<script>ga('create', '" + raw + "', 'auto');</script>";
        case IdKind::Measurement: return "<script>gtag('config', '" + raw + "');</script>";
        case IdKind::Container:
            return "<noscript><iframe src=\"https://www.googletagmanager.com/ns.html?id=" + raw + "\"></iframe></noscript>";
    }
    return {};
}

inline std::string request_url(IdKind kind, const std::string& raw) {
    switch (kind) {
        case IdKind::Publisher: return "https://pagead2.googlesyndication.com/pagead/js/adsbygoogle.js?client=ca-" + raw;
        case IdKind::Tracking: return "https://www.google-analytics.com/collect?v=1&tid=" + raw + "&t=pageview";
        case IdKind::Measurement: return "https://www.googletagmanager.com/gtag/js?id=" + raw;
        case IdKind::Container: return "https://www.googletagmanager.com/gtm.js?id=" + raw;
    }
    return {};
}

inline adgraph::Cookie cookie_for(IdKind kind, const std::string& raw) {
    switch (kind) {
        case IdKind::Publisher: return {"__gads", "ID=8f2c:T=1590000000:S=" + raw};
        case IdKind::Tracking: return {"_gat_" + raw, "1"};
        case IdKind::Measurement: return {"_gcl_ls", "tag=" + raw + "&ts=1590000000"};
        case IdKind::Container: return {"gtm_preview", raw};
    }
    return {};
}

// Strings that resemble identifiers but must not be extracted.
inline const std::vector<std::string>& decoys() {
    static const std::vector<std::string> d{
        "G-BACKPACK",        // dictionary word
        "G-APRIL2020",       // blocklisted promo token
        "GTM-NOODLE",        // dictionary word
        "XG-ABCDEF12",       // left boundary is alphanumeric
        "epub-123456789012",  // left boundary is alphanumeric
        "pub-12345678",      // too few digits
        "UA-123-4",          // account too short
        "g-abcdef12",        // wrong case
        "pub-1234567890123x",  // right boundary is alphanumeric
        "G-XXXXXXX",         // placeholder
    };
    return d;
}

}  // namespace detail

// Websites grouped under operators that share identifiers; every embedded
// identifier is recorded in the manifest with the sources it was placed in.
inline SyntheticCorpus make_corpus(const CorpusShape& shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    static const std::vector<std::string> kCategories{"News and Media", "Arts", "Sports", "Technology", "Shopping", "Health"};
    SyntheticCorpus corpus;
    std::set<std::string> used;
    const auto fresh = [&](IdKind kind) {
        for (;;) {
            std::string key;
            switch (kind) {
                case IdKind::Publisher: key = "pub-" + detail::digits(rng, 16); break;
                case IdKind::Tracking: key = "UA-" + detail::digits(rng, 4 + rng() % 5); break;
                case IdKind::Measurement: key = "G-" + detail::alnum(rng, 10); break;
                case IdKind::Container: key = "GTM-" + detail::alnum(rng, 7); break;
            }
            if (used.insert(key).second) return key;
        }
    };

    std::string intermediary;
    if (shape.intermediary_sites > 0) intermediary = fresh(IdKind::Publisher);

    std::size_t site = 0;
    std::string filler;
    for (std::size_t i = 0; i < shape.page_padding; ++i) filler += "lorem ipsum dolor sit amet "[i % 27];
    while (site < shape.sites) {
        detail::Operator op;
        op.category = kCategories[rng() % kCategories.size()];
        const double p[4] = {0.6, 0.6, 0.35, 0.3};
        for (IdKind kind : adgraph::kAllKinds) {
            if (std::uniform_real_distribution<double>(0, 1)(rng) < p[adgraph::index_of(kind)]) op.keys.emplace_back(kind, fresh(kind));
        }
        std::size_t group = 1;
        while (group < shape.max_group && rng() % 3 == 0) ++group;
        for (std::size_t g = 0; g < group && site < shape.sites; ++g, ++site) {
            const std::string domain = "site" + std::to_string(site) + (site % 7 == 0 ? ".co.uk" : ".com");
            adgraph::CrawlRecord r;
            r.requested_domain = domain;
            r.landing_url = "https://www." + domain + "/";
            r.landing_domain = domain;
            r.rank = static_cast<std::int64_t>(site + 1);
            corpus.categories[domain] = op.category;

            auto keys = op.keys;
            if (rng() % 4 == 0) keys.emplace_back(IdKind::Tracking, fresh(IdKind::Tracking));
            if (site < shape.intermediary_sites) keys.emplace_back(IdKind::Publisher, intermediary);

            std::string html = "<html><head><title>" + domain + "</title></head><body><p>" + filler + "</p>";
            for (const auto& [kind, key] : keys) {
                int mask = 0;
                while (mask == 0) mask = static_cast<int>(rng() % 8);
                SourceSet sources;
                for (Source s : adgraph::kAllSources) {
                    if (!(mask & static_cast<int>(s))) continue;
                    sources |= s;
                    const auto raw = detail::raw_for(kind, key, rng);
                    if (s == Source::Html) html += detail::html_snippet(kind, raw);
                    if (s == Source::Request) r.request_urls.push_back(detail::request_url(kind, raw));
                    if (s == Source::Cookie) r.cookies.push_back(detail::cookie_for(kind, raw));
                }
                corpus.manifest[{domain, kind, key}] |= sources;
            }
            if (shape.decoys) {
                const auto& d = detail::decoys();
                html += "<p>" + d[rng() % d.size()] + " and " + d[rng() % d.size()] + "</p>";
                r.request_urls.push_back("https://cdn.example.net/assets/" + d[rng() % d.size()] + ".js");
                r.cookies.push_back({"promo", d[rng() % d.size()]});
            }
            r.request_urls.push_back("https://cdn.example.net/app.js");
            html += "</body></html>";
            r.page_text = std::move(html);
            corpus.records.push_back(std::move(r));
        }
    }
    return corpus;
}

inline std::map<Triple, SourceSet> triples_of(const std::vector<adgraph::SiteIdProfile>& profiles) {
    std::map<Triple, SourceSet> out;
    for (const auto& p : profiles) {
        for (IdKind kind : adgraph::kAllKinds) {
            for (const auto& [key, sources] : p.keys_of(kind)) out[{p.landing_domain, kind, key}] = sources;
        }
    }
    return out;
}

// Profile with the given keys, each seen in HTML.
inline adgraph::SiteIdProfile profile(const std::string& domain, const std::vector<std::pair<IdKind, std::string>>& keys,
                                      std::optional<std::int64_t> rank = std::nullopt) {
    adgraph::SiteIdProfile p;
    p.landing_domain = domain;
    p.rank = rank;
    for (const auto& [kind, key] : keys) {
        p.keys_of(kind)[key] |= Source::Html;
        ++p.raw_hits[adgraph::index_of(kind)];
    }
    return p;
}

inline std::vector<adgraph::SiteIdProfile> publisher_profiles(const std::map<std::string, std::vector<std::string>>& site_keys) {
    std::vector<adgraph::SiteIdProfile> out;
    for (const auto& [site, keys] : site_keys) {
        std::vector<std::pair<IdKind, std::string>> ks;
        for (const auto& k : keys) ks.emplace_back(IdKind::Publisher, k);
        out.push_back(profile(site, ks));
    }
    return out;
}

// Random profiles over small key pools, so keys are shared often.
inline std::vector<adgraph::SiteIdProfile> random_profiles(std::mt19937_64& rng, std::size_t max_sites) {
    const std::size_t n = 1 + rng() % max_sites;
    std::vector<adgraph::SiteIdProfile> out;
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<std::pair<IdKind, std::string>> keys;
        for (IdKind kind : adgraph::kAllKinds) {
            const std::size_t count = rng() % 3;
            for (std::size_t i = 0; i < count; ++i) {
                const auto id = std::to_string(rng() % 6);
                switch (kind) {
                    case IdKind::Publisher: keys.emplace_back(kind, "pub-10000000" + id); break;
                    case IdKind::Tracking: keys.emplace_back(kind, "UA-100" + id); break;
                    case IdKind::Measurement: keys.emplace_back(kind, "G-ABC123" + id); break;
                    case IdKind::Container: keys.emplace_back(kind, "GTM-XYZ9" + id); break;
                }
            }
        }
        out.push_back(profile("s" + std::to_string(s) + ".example", keys));
    }
    return out;
}

template <class W>
adgraph::WeightedGraph<W> make_graph(const std::vector<std::tuple<std::string, std::string, W>>& edges) {
    adgraph::WeightedGraph<W> g;
    for (const auto& [a, b, w] : edges) {
        g.nodes.push_back(a);
        g.nodes.push_back(b);
    }
    std::sort(g.nodes.begin(), g.nodes.end());
    g.nodes.erase(std::unique(g.nodes.begin(), g.nodes.end()), g.nodes.end());
    for (const auto& [a, b, w] : edges) {
        auto u = static_cast<std::uint32_t>(*g.index_of_node(a));
        auto v = static_cast<std::uint32_t>(*g.index_of_node(b));
        if (u > v) std::swap(u, v);
        g.edges.push_back({u, v, w});
    }
    std::sort(g.edges.begin(), g.edges.end(), [](const auto& x, const auto& y) { return std::pair{x.u, x.v} < std::pair{y.u, y.v}; });
    return g;
}

inline adgraph::WeightedGraph<double> unit_graph(const std::vector<std::pair<std::string, std::string>>& edges) {
    std::vector<std::tuple<std::string, std::string, double>> e;
    for (const auto& [a, b] : edges) e.emplace_back(a, b, 1.0);
    return make_graph(e);
}

inline adgraph::WeightedGraph<double> two_triangles() {
    return unit_graph({{"a", "b"}, {"a", "c"}, {"b", "c"}, {"c", "d"}, {"d", "e"}, {"d", "f"}, {"e", "f"}});
}

inline adgraph::WeightedGraph<double> path_graph(std::size_t n) {
    std::vector<std::pair<std::string, std::string>> e;
    for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back("p" + std::to_string(i), "p" + std::to_string(i + 1));
    return unit_graph(e);
}

inline adgraph::WeightedGraph<double> star_graph(std::size_t leaves) {
    std::vector<std::pair<std::string, std::string>> e;
    for (std::size_t i = 0; i < leaves; ++i) e.emplace_back("hub", "leaf" + std::to_string(i));
    return unit_graph(e);
}

// Two k-cliques joined by one edge between their first members.
inline adgraph::WeightedGraph<double> two_cliques(std::size_t k) {
    std::vector<std::pair<std::string, std::string>> e;
    for (const char* side : {"x", "y"}) {
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = i + 1; j < k; ++j) e.emplace_back(side + std::to_string(i), side + std::to_string(j));
        }
    }
    e.emplace_back("x0", "y0");
    return unit_graph(e);
}

// Discrete power law P(x) = x^-alpha / zeta(alpha, xmin) by inverse CDF over
// an explicit table; beyond the table the continuous tail is used.
class PowerLawSampler {
public:
    PowerLawSampler(double alpha, std::int64_t xmin, std::int64_t table_max = 2'000'000) : alpha_(alpha), xmin_(xmin), xmax_(table_max) {
        double sum = 0;
        for (std::int64_t x = xmin; x <= xmax_; ++x) {
            sum += std::pow(static_cast<double>(x), -alpha);
            cdf_.push_back(sum);
        }
        // Tail beyond the table: integral of x^-alpha from xmax + 1/2.
        tail_ = std::pow(static_cast<double>(xmax_) + 0.5, 1.0 - alpha) / (alpha - 1.0);
        total_ = sum + tail_;
    }

    std::int64_t operator()(std::mt19937_64& rng) const {
        const double u = std::uniform_real_distribution<double>(0, 1)(rng) * total_;
        if (u < cdf_.back()) {
            const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
            return xmin_ + (it - cdf_.begin());
        }
        const double v = (u - cdf_.back()) / tail_;
        const double x = (static_cast<double>(xmax_) + 0.5) * std::pow(1.0 - v, -1.0 / (alpha_ - 1.0));
        return static_cast<std::int64_t>(std::floor(x + 0.5));
    }

    std::vector<std::int64_t> sample(std::size_t n, std::uint64_t seed) const {
        std::mt19937_64 rng(seed);
        std::vector<std::int64_t> out(n);
        for (auto& x : out) x = (*this)(rng);
        return out;
    }

private:
    double alpha_;
    std::int64_t xmin_;
    std::int64_t xmax_;
    std::vector<double> cdf_;
    double tail_ = 0;
    double total_ = 0;
};

// Discrete exponential on {1, 2, ...}: P(x) proportional to exp(-lambda x).
inline std::vector<std::int64_t> exponential_sample(double lambda, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::geometric_distribution<std::int64_t> geo(1.0 - std::exp(-lambda));
    std::vector<std::int64_t> out(n);
    for (auto& x : out) x = 1 + geo(rng);
    return out;
}

}  // namespace fixtures
