#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "adgraph/error.hpp"
#include "adgraph/text.hpp"

#ifndef ADGRAPH_DATA_DIR
#define ADGRAPH_DATA_DIR "data"
#endif

namespace adgraph {

// Rules of the Mozilla public suffix list (normal, "*." wildcard and "!"
// exception rules). Lookups follow the list's published algorithm: an
// exception rule wins, otherwise the rule with the most labels prevails,
// and the implicit default rule is "*".
class PublicSuffixList {
public:
    static PublicSuffixList parse(std::istream& in) {
        PublicSuffixList psl;
        std::string line;
        while (std::getline(in, line)) {
            std::string_view rule = text::trim(line);
            if (rule.empty() || rule.rfind("//", 0) == 0) continue;
            rule = rule.substr(0, rule.find_first_of(" \t"));
            std::string lowered = text::to_lower(rule);
            if (lowered.front() == '!') {
                psl.exceptions_.insert(lowered.substr(1));
            } else if (lowered.rfind("*.", 0) == 0) {
                psl.wildcards_.insert(lowered.substr(2));
            } else {
                psl.rules_.insert(std::move(lowered));
            }
        }
        return psl;
    }

    static PublicSuffixList load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open public suffix list " + path.string());
        return parse(in);
    }

    std::size_t size() const noexcept { return rules_.size() + wildcards_.size() + exceptions_.size(); }

    // Lowercase host without trailing dot expected.
    std::string public_suffix(std::string_view host) const {
        const auto starts = label_starts(host);
        for (std::size_t i = 0; i < starts.size(); ++i) {
            if (exceptions_.count(std::string(host.substr(starts[i])))) {
                return i + 1 < starts.size() ? std::string(host.substr(starts[i + 1])) : std::string(host.substr(starts[i]));
            }
        }
        for (std::size_t i = 0; i < starts.size(); ++i) {
            const std::string candidate(host.substr(starts[i]));
            if (rules_.count(candidate)) return candidate;
            if (i + 1 < starts.size() && wildcards_.count(std::string(host.substr(starts[i + 1])))) return candidate;
        }
        return std::string(host.substr(starts.back()));
    }

    // Public suffix plus one label; a host that is itself a public suffix is
    // returned unchanged.
    std::string registrable_domain(std::string_view host) const {
        const std::string suffix = public_suffix(host);
        if (suffix.size() >= host.size()) return std::string(host);
        const std::string_view head = host.substr(0, host.size() - suffix.size() - 1);
        const auto dot = head.rfind('.');
        return std::string(dot == std::string_view::npos ? host : host.substr(dot + 1));
    }

private:
    static std::vector<std::size_t> label_starts(std::string_view host) {
        std::vector<std::size_t> starts{0};
        for (std::size_t i = 0; i < host.size(); ++i) {
            if (host[i] == '.') starts.push_back(i + 1);
        }
        return starts;
    }

    std::unordered_set<std::string> rules_;
    std::unordered_set<std::string> wildcards_;
    std::unordered_set<std::string> exceptions_;
};

// The shipped list, or the file named by $ADGRAPH_PSL.
inline const PublicSuffixList& default_suffix_list() {
    static const PublicSuffixList psl = [] {
        if (const char* env = std::getenv("ADGRAPH_PSL")) return PublicSuffixList::load(env);
        return PublicSuffixList::load(std::filesystem::path(ADGRAPH_DATA_DIR) / "public_suffix_list.dat");
    }();
    return psl;
}

namespace detail {

inline bool is_ipv4(std::string_view host) {
    int parts = 0;
    std::size_t pos = 0;
    while (pos <= host.size()) {
        const auto dot = std::min(host.find('.', pos), host.size());
        const auto octet = text::parse_int<int>(host.substr(pos, dot - pos));
        if (!octet || *octet < 0 || *octet > 255 || dot == pos || dot - pos > 3) return false;
        ++parts;
        pos = dot + 1;
        if (dot == host.size()) break;
    }
    return parts == 4;
}

inline bool is_ipv6(std::string_view host) {
    if (host.find(':') == std::string_view::npos) return false;
    for (char c : host) {
        const bool hex = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
        if (!hex && c != ':' && c != '.') return false;
    }
    return true;
}

// Extracts the host part of a URL or bare hostname.
inline std::string_view host_of(std::string_view s) {
    if (const auto scheme = s.find("://"); scheme != std::string_view::npos) {
        s.remove_prefix(scheme + 3);
    } else if (s.rfind("//", 0) == 0) {
        s.remove_prefix(2);
    }
    s = s.substr(0, s.find_first_of("/?#"));
    if (const auto at = s.rfind('@'); at != std::string_view::npos) s.remove_prefix(at + 1);
    if (!s.empty() && s.front() == '[') {
        const auto close = s.find(']');
        return close == std::string_view::npos ? std::string_view{} : s.substr(0, close + 1);
    }
    if (const auto colon = s.find(':'); colon != std::string_view::npos && s.find(':', colon + 1) == std::string_view::npos) {
        s = s.substr(0, colon);
    }
    return s;
}

}  // namespace detail

// Registrable domain (public suffix + 1 label) of a URL or hostname,
// lowercased. IP literals come back unchanged.
inline std::string canonicalize(std::string_view input, const PublicSuffixList& psl = default_suffix_list()) {
    const std::string_view trimmed = text::trim(input);
    std::string host = text::to_lower(detail::host_of(trimmed));
    if (!host.empty() && host.back() == '.') host.pop_back();
    if (host.empty()) throw CanonicalizationError("no host in '" + std::string(trimmed) + "'");

    if (host.front() == '[' || detail::is_ipv6(host)) {
        if (host.front() == '[' && (host.size() < 3 || !detail::is_ipv6(std::string_view(host).substr(1, host.size() - 2)))) {
            throw CanonicalizationError("bad IPv6 literal '" + host + "'");
        }
        return host;
    }
    if (detail::is_ipv4(host)) return host;

    bool label_empty = true;
    for (char c : host) {
        const auto u = static_cast<unsigned char>(c);
        if (c == '.') {
            if (label_empty) throw CanonicalizationError("empty label in '" + host + "'");
            label_empty = true;
            continue;
        }
        if (!(text::is_ascii_alnum(c) || c == '-' || c == '_' || u >= 0x80)) {
            throw CanonicalizationError("invalid character in host '" + host + "'");
        }
        label_empty = false;
    }
    if (label_empty) throw CanonicalizationError("empty label in '" + host + "'");
    return psl.registrable_domain(host);
}

}  // namespace adgraph
