#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "adgraph/domain.hpp"
#include "adgraph/error.hpp"
#include "adgraph/text.hpp"

namespace adgraph {

struct Cookie {
    std::string name;
    std::string value;

    friend bool operator==(const Cookie&, const Cookie&) = default;
    friend auto operator<=>(const Cookie&, const Cookie&) = default;
};

// One crawled website.
struct CrawlRecord {
    std::string requested_domain;
    std::string landing_url;
    std::string landing_domain;
    std::string page_text;
    std::vector<std::string> request_urls;
    std::vector<Cookie> cookies;
    std::optional<std::int64_t> rank;
    std::optional<std::string> snapshot_id;

    friend bool operator==(const CrawlRecord&, const CrawlRecord&) = default;
};

struct SkippedLine {
    std::size_t line = 0;
    std::string reason;
};

struct CrawlParseResult {
    std::vector<CrawlRecord> records;
    std::vector<SkippedLine> skipped;
};

namespace detail {

inline CrawlRecord record_from_json(const nlohmann::json& j, const PublicSuffixList& psl) {
    if (!j.is_object()) throw FormatError("record is not a JSON object");
    CrawlRecord r;
    r.requested_domain = text::to_lower(j.value("domain", std::string{}));
    r.landing_url = j.value("landing_url", std::string{});
    r.page_text = j.value("html", std::string{});
    if (const auto it = j.find("requests"); it != j.end() && !it->is_null()) {
        for (const auto& u : *it) r.request_urls.push_back(u.get<std::string>());
    }
    if (const auto it = j.find("cookies"); it != j.end() && !it->is_null()) {
        for (const auto& c : *it) r.cookies.push_back({c.value("name", std::string{}), c.value("value", std::string{})});
    }
    if (const auto it = j.find("rank"); it != j.end() && !it->is_null()) {
        const auto rank = it->get<std::int64_t>();
        if (rank < 1) throw FormatError("rank must be >= 1");
        r.rank = rank;
    }
    if (const auto it = j.find("snapshot"); it != j.end() && !it->is_null()) r.snapshot_id = it->get<std::string>();

    // A failed render may lack a landing URL; fall back to the requested domain.
    if (!r.landing_url.empty()) {
        r.landing_domain = canonicalize(r.landing_url, psl);
    } else if (!r.requested_domain.empty()) {
        r.landing_domain = canonicalize(r.requested_domain, psl);
    } else {
        throw FormatError("record has neither landing_url nor domain");
    }
    return r;
}

}  // namespace detail

// One record per well-formed line; malformed lines are reported, not fatal.
inline CrawlParseResult parse_crawl_jsonl(std::istream& in, const PublicSuffixList& psl = default_suffix_list()) {
    CrawlParseResult result;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (text::trim(line).empty()) {
            result.skipped.push_back({number, "empty line"});
            continue;
        }
        try {
            result.records.push_back(detail::record_from_json(nlohmann::json::parse(line), psl));
        } catch (const nlohmann::json::exception& e) {
            result.skipped.push_back({number, e.what()});
        } catch (const InputError& e) {
            result.skipped.push_back({number, e.what()});
        }
    }
    return result;
}

inline nlohmann::json to_json(const CrawlRecord& r) {
    nlohmann::json j;
    j["domain"] = r.requested_domain;
    j["landing_url"] = r.landing_url;
    j["html"] = r.page_text;
    j["requests"] = r.request_urls;
    auto cookies = nlohmann::json::array();
    for (const auto& c : r.cookies) cookies.push_back({{"name", c.name}, {"value", c.value}});
    j["cookies"] = std::move(cookies);
    if (r.rank) j["rank"] = *r.rank;
    if (r.snapshot_id) j["snapshot"] = *r.snapshot_id;
    return j;
}

inline std::string serialize_crawl_jsonl(const std::vector<CrawlRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

// HAR 1.2 capture of a single page load.
inline CrawlRecord parse_har(std::istream& in, const PublicSuffixList& psl = default_suffix_list()) {
    nlohmann::json har;
    try {
        har = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("HAR is not valid JSON: ") + e.what());
    }
    const auto log = har.find("log");
    if (log == har.end() || !log->is_object()) throw FormatError("HAR has no log section");
    const auto entries = log->find("entries");
    if (entries == log->end() || !entries->is_array()) throw FormatError("HAR has no entries");
    if (entries->empty()) throw FormatError("HAR has zero entries");

    const auto is_document = [](const nlohmann::json& entry) {
        if (entry.value("_resourceType", std::string{}) == "document") return true;
        const auto& resp = entry.value("response", nlohmann::json::object());
        const auto& content = resp.value("content", nlohmann::json::object());
        return text::to_lower(content.value("mimeType", std::string{})).rfind("text/html", 0) == 0;
    };

    CrawlRecord r;
    std::map<std::pair<std::string, std::string>, bool> seen_cookies;
    bool have_document = false;
    for (const auto& entry : *entries) {
        const auto& request = entry.value("request", nlohmann::json::object());
        const std::string url = request.value("url", std::string{});
        if (!url.empty()) r.request_urls.push_back(url);
        if (r.requested_domain.empty() && !url.empty()) r.requested_domain = text::to_lower(detail::host_of(url));

        const auto& response = entry.value("response", nlohmann::json::object());
        if (const auto cookies = response.find("cookies"); cookies != response.end() && cookies->is_array()) {
            for (const auto& c : *cookies) {
                Cookie cookie{c.value("name", std::string{}), c.value("value", std::string{})};
                if (seen_cookies.emplace(std::pair{cookie.name, cookie.value}, true).second) r.cookies.push_back(std::move(cookie));
            }
        }

        const int status = response.value("status", 0);
        if (!have_document && status >= 200 && status < 300 && is_document(entry)) {
            have_document = true;
            r.landing_url = url;
            const auto& content = response.value("content", nlohmann::json::object());
            std::string body = content.value("text", std::string{});
            if (content.value("encoding", std::string{}) == "base64") {
                auto decoded = text::base64_decode(body);
                if (!decoded) throw FormatError("document body is not valid base64");
                body = std::move(*decoded);
            }
            r.page_text = std::move(body);
        }
    }
    if (r.landing_url.empty()) r.landing_url = r.request_urls.empty() ? std::string{} : r.request_urls.front();
    if (r.landing_url.empty()) throw FormatError("HAR entries carry no request URLs");
    r.landing_domain = canonicalize(r.landing_url, psl);
    return r;
}

inline CrawlRecord parse_har_file(const std::filesystem::path& path, const PublicSuffixList& psl = default_suffix_list()) {
    std::istringstream in(text::read_file(path));
    return parse_har(in, psl);
}

// Keeps one record per landing domain: the best (smallest) rank wins, a
// ranked record beats an unranked one, and remaining ties go to the earlier
// record. Survivors keep their relative input order.
inline std::vector<CrawlRecord> dedup_by_landing(std::vector<CrawlRecord> records) {
    std::unordered_map<std::string, std::size_t> best;
    const auto better = [](const CrawlRecord& a, const CrawlRecord& b) {
        if (a.rank && b.rank) return *a.rank < *b.rank;
        return a.rank.has_value() && !b.rank.has_value();
    };
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto [it, inserted] = best.emplace(records[i].landing_domain, i);
        if (!inserted && better(records[i], records[it->second])) it->second = i;
    }
    std::vector<bool> keep(records.size(), false);
    for (const auto& [domain, index] : best) keep[index] = true;
    std::vector<CrawlRecord> out;
    out.reserve(best.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (keep[i]) out.push_back(std::move(records[i]));
    }
    return out;
}

// Two-column CSV mapping loaded with last-occurrence-wins semantics.
template <class Value>
struct KeyedTable {
    std::unordered_map<std::string, Value> entries;
    std::size_t duplicate_keys = 0;

    std::size_t size() const noexcept { return entries.size(); }
    std::optional<Value> lookup(const std::string& key) const {
        const auto it = entries.find(key);
        if (it == entries.end()) return std::nullopt;
        return it->second;
    }
};

// requested domain -> rank.
using RankList = KeyedTable<std::int64_t>;
// landing domain -> category label.
using CategoryMap = KeyedTable<std::string>;

// "rank,domain" rows, no header.
inline RankList load_rank_list(std::istream& in) {
    RankList list;
    std::size_t row = 0;
    for (const auto& line : text::read_lines(in)) {
        ++row;
        if (text::trim(line).empty()) continue;
        const auto fields = text::split_csv(line);
        if (!fields || fields->size() != 2) throw FormatError("rank list row must be rank,domain", row);
        const auto rank = text::parse_int<std::int64_t>((*fields)[0]);
        if (!rank || *rank < 1) throw FormatError("rank must be a positive integer", row);
        const std::string domain = text::to_lower((*fields)[1]);
        if (domain.empty()) throw FormatError("empty domain", row);
        auto [it, inserted] = list.entries.insert_or_assign(domain, *rank);
        if (!inserted) ++list.duplicate_keys;
    }
    return list;
}

// "domain,category" rows, no header. An unquoted label may itself contain
// commas: everything after the first comma is the label.
inline CategoryMap load_category_map(std::istream& in) {
    CategoryMap map;
    std::size_t row = 0;
    for (const auto& line : text::read_lines(in)) {
        ++row;
        if (text::trim(line).empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw FormatError("category row must be domain,category", row);
        const std::string domain = text::to_lower(text::trim(std::string_view(line).substr(0, comma)));
        std::string label(text::trim(std::string_view(line).substr(comma + 1)));
        if (!label.empty() && label.front() == '"') {
            const auto fields = text::split_csv(label);
            if (!fields || fields->size() != 1) throw FormatError("malformed quoted category", row);
            label = fields->front();
        }
        if (domain.empty() || label.empty()) throw FormatError("empty domain or category", row);
        auto [it, inserted] = map.entries.insert_or_assign(domain, std::move(label));
        if (!inserted) ++map.duplicate_keys;
    }
    return map;
}

inline RankList load_rank_list(const std::filesystem::path& path) {
    std::istringstream in(text::read_file(path));
    return load_rank_list(in);
}

inline CategoryMap load_category_map(const std::filesystem::path& path) {
    std::istringstream in(text::read_file(path));
    return load_category_map(in);
}

}  // namespace adgraph
