#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "adgraph/corpus.hpp"
#include "adgraph/error.hpp"
#include "adgraph/parallel.hpp"
#include "adgraph/text.hpp"

namespace adgraph {

enum class IdKind : std::uint8_t { Publisher, Tracking, Measurement, Container };

inline constexpr std::array<IdKind, 4> kAllKinds{IdKind::Publisher, IdKind::Tracking, IdKind::Measurement,
                                                 IdKind::Container};

constexpr std::size_t index_of(IdKind k) noexcept { return static_cast<std::size_t>(k); }

constexpr std::string_view kind_name(IdKind k) noexcept {
    switch (k) {
        case IdKind::Publisher: return "publisher";
        case IdKind::Tracking: return "tracking";
        case IdKind::Measurement: return "measurement";
        case IdKind::Container: return "container";
    }
    return "unknown";
}

inline std::optional<IdKind> parse_kind(std::string_view name) {
    for (IdKind k : kAllKinds) {
        if (kind_name(k) == name) return k;
    }
    return std::nullopt;
}

enum class Source : std::uint8_t { Html = 1, Request = 2, Cookie = 4 };

inline constexpr std::array<Source, 3> kAllSources{Source::Html, Source::Request, Source::Cookie};

constexpr std::string_view source_name(Source s) noexcept {
    switch (s) {
        case Source::Html: return "html";
        case Source::Request: return "request";
        case Source::Cookie: return "cookie";
    }
    return "unknown";
}

// Channels in which an identifier was observed.
class SourceSet {
public:
    constexpr SourceSet() = default;
    constexpr SourceSet(Source s) : bits_(static_cast<std::uint8_t>(s)) {}

    constexpr void insert(Source s) noexcept { bits_ |= static_cast<std::uint8_t>(s); }
    constexpr bool contains(Source s) const noexcept { return (bits_ & static_cast<std::uint8_t>(s)) != 0; }
    constexpr bool empty() const noexcept { return bits_ == 0; }
    constexpr std::uint8_t bits() const noexcept { return bits_; }

    constexpr SourceSet& operator|=(SourceSet o) noexcept {
        bits_ |= o.bits_;
        return *this;
    }
    friend constexpr bool operator==(SourceSet, SourceSet) = default;

private:
    std::uint8_t bits_ = 0;
};

struct RawMatch {
    std::string value;
    IdKind kind;
    Source source;

    friend bool operator==(const RawMatch&, const RawMatch&) = default;
};

namespace detail {

struct IdPattern {
    IdKind kind;
    std::string_view prefix;
    bool upper_alnum;     // [A-Z0-9] body, otherwise [0-9]
    std::size_t min_run;
    bool property_suffix; // trailing "-[0-9]+" (Tracking)
};

// pub-[0-9]{9,}, UA-[0-9]{4,}-[0-9]+, G-[A-Z0-9]{7,}, GTM-[A-Z0-9]{6,}
inline constexpr std::array<IdPattern, 4> kPatterns{{
    {IdKind::Publisher, "pub-", false, 9, false},
    {IdKind::Tracking, "UA-", false, 4, true},
    {IdKind::Container, "GTM-", true, 6, false},
    {IdKind::Measurement, "G-", true, 7, false},
}};

constexpr bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }
constexpr bool is_upper_alnum(char c) noexcept { return is_digit(c) || (c >= 'A' && c <= 'Z'); }

// End offset of a match of `p` starting at `pos`, or 0 when none.
inline std::size_t match_at(std::string_view s, std::size_t pos, const IdPattern& p) {
    if (s.compare(pos, p.prefix.size(), p.prefix) != 0) return 0;
    std::size_t j = pos + p.prefix.size();
    const std::size_t body = j;
    while (j < s.size() && (p.upper_alnum ? is_upper_alnum(s[j]) : is_digit(s[j]))) ++j;
    if (j - body < p.min_run) return 0;
    if (p.property_suffix) {
        if (j + 1 >= s.size() || s[j] != '-' || !is_digit(s[j + 1])) return 0;
        ++j;
        while (j < s.size() && is_digit(s[j])) ++j;
    }
    return j;
}

}  // namespace detail

// All non-overlapping, case-sensitive occurrences of the four identifier
// patterns. A candidate touching an ASCII letter or digit on either side is
// rejected, so identifiers are never read out of the middle of longer tokens.
inline std::vector<RawMatch> scan_text(std::string_view s, Source source) {
    std::vector<RawMatch> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if ((c != 'p' && c != 'U' && c != 'G') || (i > 0 && text::is_ascii_alnum(s[i - 1]))) {
            ++i;
            continue;
        }
        std::size_t end = 0;
        IdKind kind{};
        for (const auto& p : detail::kPatterns) {
            const std::size_t e = detail::match_at(s, i, p);
            if (e != 0 && (e == s.size() || !text::is_ascii_alnum(s[e]))) {
                end = e;
                kind = p.kind;
                break;
            }
        }
        if (end == 0) {
            ++i;
            continue;
        }
        out.push_back({std::string(s.substr(i, end - i)), kind, source});
        i = end;
    }
    return out;
}

// Lowercase word list (one word per line).
class Dictionary {
public:
    Dictionary() = default;
    explicit Dictionary(std::unordered_set<std::string> words) : words_(std::move(words)) {}

    static Dictionary parse(std::istream& in) {
        Dictionary d;
        std::string line;
        while (std::getline(in, line)) {
            const auto w = text::trim(line);
            if (!w.empty()) d.words_.insert(text::to_lower(w));
        }
        return d;
    }
    static Dictionary load(const std::filesystem::path& path) {
        std::istringstream in(text::read_file(path));
        return parse(in);
    }

    bool contains(std::string_view lower_word) const { return words_.count(std::string(lower_word)) != 0; }
    std::size_t size() const noexcept { return words_.size(); }

private:
    std::unordered_set<std::string> words_;
};

// Exact raw values to discard; "#" starts a comment line.
class Blocklist {
public:
    Blocklist() = default;
    explicit Blocklist(std::unordered_set<std::string> values) : values_(std::move(values)) {}

    static Blocklist parse(std::istream& in) {
        Blocklist b;
        std::string line;
        while (std::getline(in, line)) {
            const auto v = text::trim(line);
            if (!v.empty() && v.front() != '#') b.values_.insert(std::string(v));
        }
        return b;
    }
    static Blocklist load(const std::filesystem::path& path) {
        std::istringstream in(text::read_file(path));
        return parse(in);
    }

    bool contains(std::string_view raw) const { return values_.count(std::string(raw)) != 0; }
    std::size_t size() const noexcept { return values_.size(); }

private:
    std::unordered_set<std::string> values_;
};

// Drops G-/GTM- values whose suffix is an English word. Publisher and
// Tracking suffixes are numeric and always pass.
inline std::vector<RawMatch> filter_dictionary(std::vector<RawMatch> matches, const Dictionary& dictionary) {
    std::erase_if(matches, [&](const RawMatch& m) {
        if (m.kind != IdKind::Measurement && m.kind != IdKind::Container) return false;
        const auto dash = m.value.find('-');
        return dictionary.contains(text::to_lower(std::string_view(m.value).substr(dash + 1)));
    });
    return matches;
}

inline std::vector<RawMatch> filter_keywords(std::vector<RawMatch> matches, const Blocklist& blocklist) {
    std::erase_if(matches, [&](const RawMatch& m) { return blocklist.contains(m.value); });
    return matches;
}

// Tracking IDs collapse to their account prefix ("UA-12345-6" -> "UA-12345").
inline std::string canonical_key(const RawMatch& m) {
    if (m.kind != IdKind::Tracking) return m.value;
    return m.value.substr(0, m.value.rfind('-'));
}

struct IdentifierHit {
    std::string raw;
    IdKind kind;
    std::string canonical;
    SourceSet sources;
};

using KeySet = std::map<std::string, SourceSet>;

// Validated identifiers of one site, keyed by canonical value per kind.
struct SiteIdProfile {
    std::string landing_domain;
    std::optional<std::int64_t> rank;
    std::array<KeySet, 4> keys;
    std::array<std::size_t, 4> raw_hits{};

    const KeySet& keys_of(IdKind k) const { return keys[index_of(k)]; }
    KeySet& keys_of(IdKind k) { return keys[index_of(k)]; }

    std::size_t total_keys() const {
        std::size_t n = 0;
        for (const auto& ks : keys) n += ks.size();
        return n;
    }
    bool empty() const { return total_keys() == 0; }

    friend bool operator==(const SiteIdProfile&, const SiteIdProfile&) = default;
};

struct ExtractionFilters {
    const Dictionary* dictionary = nullptr;
    const Blocklist* blocklist = nullptr;
};

inline std::vector<RawMatch> apply_filters(std::vector<RawMatch> matches, const ExtractionFilters& filters) {
    if (filters.dictionary) matches = filter_dictionary(std::move(matches), *filters.dictionary);
    if (filters.blocklist) matches = filter_keywords(std::move(matches), *filters.blocklist);
    return matches;
}

// Scans page text, every request URL and every cookie (name and value).
inline SiteIdProfile extract_profile(const CrawlRecord& record, const ExtractionFilters& filters = {}) {
    SiteIdProfile profile;
    profile.landing_domain = record.landing_domain;
    profile.rank = record.rank;

    const auto absorb = [&](std::string_view s, Source source) {
        for (const auto& m : apply_filters(scan_text(s, source), filters)) {
            profile.keys_of(m.kind)[canonical_key(m)].insert(source);
            ++profile.raw_hits[index_of(m.kind)];
        }
    };
    absorb(record.page_text, Source::Html);
    for (const auto& url : record.request_urls) absorb(url, Source::Request);
    for (const auto& cookie : record.cookies) {
        absorb(cookie.name, Source::Cookie);
        absorb(cookie.value, Source::Cookie);
    }
    return profile;
}

inline SiteIdProfile extract_profile(const CrawlRecord& record, const Dictionary& dictionary, const Blocklist& blocklist) {
    return extract_profile(record, ExtractionFilters{&dictionary, &blocklist});
}

// Per-record extraction in parallel; output order follows input order.
inline std::vector<SiteIdProfile> extract_profiles(const std::vector<CrawlRecord>& records, const ExtractionFilters& filters,
                                                   std::size_t threads = 1) {
    std::vector<SiteIdProfile> out(records.size());
    parallel_for(records.size(), threads, [&](std::size_t i) { out[i] = extract_profile(records[i], filters); });
    return out;
}

struct KindSummary {
    std::size_t unique_ids = 0;
    std::size_t unique_sites = 0;
    double pct_of_sites = 0;
    double pct_in_html = 0;
    double pct_in_requests = 0;
    double pct_in_cookies = 0;
};

struct ExtractionSummary {
    std::size_t corpus_size = 0;
    std::array<KindSummary, 4> kinds;

    const KindSummary& of(IdKind k) const { return kinds[index_of(k)]; }
};

inline ExtractionSummary summarize_extraction(const std::vector<SiteIdProfile>& profiles, std::size_t corpus_size) {
    if (corpus_size == 0) throw InvalidArgument("corpus size must be positive");
    const auto bearing = std::count_if(profiles.begin(), profiles.end(), [](const auto& p) { return !p.empty(); });
    if (static_cast<std::size_t>(bearing) > corpus_size) throw InvalidArgument("corpus size smaller than profiled sites");

    ExtractionSummary summary;
    summary.corpus_size = corpus_size;
    for (IdKind kind : kAllKinds) {
        std::unordered_map<std::string, SourceSet> ids;
        KindSummary& ks = summary.kinds[index_of(kind)];
        for (const auto& p : profiles) {
            const auto& keys = p.keys_of(kind);
            if (keys.empty()) continue;
            ++ks.unique_sites;
            for (const auto& [key, sources] : keys) ids[key] |= sources;
        }
        ks.unique_ids = ids.size();
        ks.pct_of_sites = static_cast<double>(ks.unique_sites) / static_cast<double>(corpus_size);
        if (ids.empty()) continue;
        std::array<std::size_t, 3> per_source{};
        for (const auto& [key, sources] : ids) {
            for (std::size_t s = 0; s < kAllSources.size(); ++s) per_source[s] += sources.contains(kAllSources[s]);
        }
        const auto n = static_cast<double>(ids.size());
        ks.pct_in_html = static_cast<double>(per_source[0]) / n;
        ks.pct_in_requests = static_cast<double>(per_source[1]) / n;
        ks.pct_in_cookies = static_cast<double>(per_source[2]) / n;
    }
    return summary;
}

struct Anomaly {
    std::string landing_domain;
    std::size_t distinct_keys;

    friend bool operator==(const Anomaly&, const Anomaly&) = default;
};

// Sites carrying strictly more than `threshold` distinct keys across kinds.
inline std::vector<Anomaly> flag_anomalies(const std::vector<SiteIdProfile>& profiles, std::size_t threshold = 40) {
    if (threshold < 1) throw InvalidArgument("anomaly threshold must be >= 1");
    std::vector<Anomaly> out;
    for (const auto& p : profiles) {
        if (const auto n = p.total_keys(); n > threshold) out.push_back({p.landing_domain, n});
    }
    std::sort(out.begin(), out.end(), [](const Anomaly& a, const Anomaly& b) {
        return a.distinct_keys != b.distinct_keys ? a.distinct_keys > b.distinct_keys : a.landing_domain < b.landing_domain;
    });
    return out;
}

// --- profile JSONL ---------------------------------------------------------

inline nlohmann::json to_json(const SiteIdProfile& p) {
    nlohmann::json j;
    j["landing_domain"] = p.landing_domain;
    if (p.rank) j["rank"] = *p.rank;
    auto ids = nlohmann::json::array();
    for (IdKind kind : kAllKinds) {
        for (const auto& [key, sources] : p.keys_of(kind)) {
            auto names = nlohmann::json::array();
            for (Source s : kAllSources) {
                if (sources.contains(s)) names.push_back(source_name(s));
            }
            ids.push_back({{"kind", kind_name(kind)}, {"key", key}, {"sources", std::move(names)}});
        }
    }
    j["ids"] = std::move(ids);
    auto hits = nlohmann::json::object();
    for (IdKind kind : kAllKinds) hits[std::string(kind_name(kind))] = p.raw_hits[index_of(kind)];
    j["raw_hits"] = std::move(hits);
    return j;
}

inline SiteIdProfile profile_from_json(const nlohmann::json& j) {
    SiteIdProfile p;
    p.landing_domain = j.at("landing_domain").get<std::string>();
    if (p.landing_domain.empty()) throw FormatError("profile without landing_domain");
    if (const auto it = j.find("rank"); it != j.end() && !it->is_null()) p.rank = it->get<std::int64_t>();
    for (const auto& id : j.at("ids")) {
        const auto kind = parse_kind(id.at("kind").get<std::string>());
        if (!kind) throw FormatError("unknown identifier kind " + id.at("kind").dump());
        SourceSet sources;
        for (const auto& s : id.value("sources", nlohmann::json::array())) {
            const auto name = s.get<std::string>();
            for (Source src : kAllSources) {
                if (source_name(src) == name) sources.insert(src);
            }
        }
        p.keys_of(*kind)[id.at("key").get<std::string>()] |= sources;
    }
    if (const auto it = j.find("raw_hits"); it != j.end()) {
        for (IdKind kind : kAllKinds) p.raw_hits[index_of(kind)] = it->value(std::string(kind_name(kind)), std::size_t{0});
    }
    return p;
}

inline std::string serialize_profiles_jsonl(const std::vector<SiteIdProfile>& profiles) {
    std::string out;
    for (const auto& p : profiles) {
        out += to_json(p).dump();
        out += '\n';
    }
    return out;
}

inline std::vector<SiteIdProfile> parse_profiles_jsonl(std::istream& in) {
    std::vector<SiteIdProfile> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(profile_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("bad profile: ") + e.what(), number);
        } catch (const FormatError& e) {
            throw FormatError(e.what(), number);
        }
    }
    return out;
}

inline std::vector<SiteIdProfile> load_profiles(const std::filesystem::path& path) {
    std::istringstream in(text::read_file(path));
    return parse_profiles_jsonl(in);
}

}  // namespace adgraph
