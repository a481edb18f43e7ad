#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "adgraph/error.hpp"
#include "adgraph/extractor.hpp"
#include "adgraph/stats.hpp"
#include "adgraph/text.hpp"

namespace adgraph {

// One timestamped extraction. Publisher sizes are computed over every site
// of the snapshot, not only over sites shared with other snapshots.
class Snapshot {
public:
    Snapshot(std::string id, std::size_t total_sites, std::vector<SiteIdProfile> profiles)
        : id_(std::move(id)), total_sites_(total_sites) {
        for (auto& p : profiles) {
            for (const auto& [key, sources] : p.keys_of(IdKind::Publisher)) ++publisher_size_[key];
            profiles_.insert_or_assign(p.landing_domain, std::move(p));
        }
        if (total_sites_ < profiles_.size()) throw InvalidArgument("snapshot " + id_ + ": total_sites below profile count");
    }

    const std::string& id() const noexcept { return id_; }
    std::size_t total_sites() const noexcept { return total_sites_; }
    const std::map<std::string, SiteIdProfile>& profiles() const noexcept { return profiles_; }
    const std::unordered_map<std::string, std::size_t>& publisher_sizes() const noexcept { return publisher_size_; }

    std::size_t size_of(const std::string& key) const {
        const auto it = publisher_size_.find(key);
        return it == publisher_size_.end() ? 0 : it->second;
    }

    const KeySet* publisher_keys(const std::string& site) const {
        const auto it = profiles_.find(site);
        if (it == profiles_.end() || it->second.keys_of(IdKind::Publisher).empty()) return nullptr;
        return &it->second.keys_of(IdKind::Publisher);
    }

    // Largest publisher size among the site's Publisher keys.
    std::size_t max_publisher_size(const std::string& site) const {
        std::size_t best = 0;
        if (const auto* keys = publisher_keys(site)) {
            for (const auto& [key, sources] : *keys) best = std::max(best, size_of(key));
        }
        return best;
    }

private:
    std::string id_;
    std::size_t total_sites_;
    std::map<std::string, SiteIdProfile> profiles_;
    std::unordered_map<std::string, std::size_t> publisher_size_;
};

// Directory holding manifest.json {snapshot_id, total_sites} and profiles.jsonl.
inline Snapshot load_snapshot(const std::filesystem::path& dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(text::read_file(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad manifest in " + dir.string() + ": " + e.what());
    }
    auto profiles = load_profiles(dir / "profiles.jsonl");
    const auto id = manifest.value("snapshot_id", std::string{});
    if (id.empty()) throw FormatError("manifest in " + dir.string() + " lacks snapshot_id");
    const auto total = manifest.value("total_sites", profiles.size());
    return Snapshot(id, total, std::move(profiles));
}

inline void validate_sequence(std::span<const Snapshot> snapshots) {
    for (std::size_t i = 1; i < snapshots.size(); ++i) {
        if (!(snapshots[i - 1].id() < snapshots[i].id())) {
            throw InvalidArgument("snapshot ids must be strictly increasing: " + snapshots[i - 1].id() + " then " + snapshots[i].id());
        }
    }
}

inline std::pair<double, double> mean_and_sd(std::span<const double> xs) {
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

struct CoveragePoint {
    std::string snapshot_id;
    std::size_t total_sites = 0;
    double publisher = 0;
    double tracking = 0;
};

struct CoverageSeries {
    std::vector<CoveragePoint> points;
    double publisher_mean = 0, publisher_sd = 0;  // population standard deviation
    double tracking_mean = 0, tracking_sd = 0;
};

inline CoverageSeries coverage_series(std::span<const Snapshot> snapshots) {
    if (snapshots.empty()) throw InsufficientData("coverage needs at least one snapshot");
    CoverageSeries out;
    std::vector<double> pub, trk;
    for (const auto& s : snapshots) {
        if (s.total_sites() == 0) throw InsufficientData("snapshot " + s.id() + " is empty");
        std::size_t p = 0, t = 0;
        for (const auto& [site, profile] : s.profiles()) {
            p += !profile.keys_of(IdKind::Publisher).empty();
            t += !profile.keys_of(IdKind::Tracking).empty();
        }
        const auto total = static_cast<double>(s.total_sites());
        out.points.push_back({s.id(), s.total_sites(), static_cast<double>(p) / total, static_cast<double>(t) / total});
        pub.push_back(out.points.back().publisher);
        trk.push_back(out.points.back().tracking);
    }
    std::tie(out.publisher_mean, out.publisher_sd) = mean_and_sd(pub);
    std::tie(out.tracking_mean, out.tracking_sd) = mean_and_sd(trk);
    return out;
}

struct IdCountPoint {
    std::string snapshot_id;
    std::size_t bearing_sites = 0;
    double one = 0, two = 0, three_or_more = 0;
    double mean = 0;  // distinct Publisher keys per bearing site
};

inline std::vector<IdCountPoint> publisher_id_count_series(std::span<const Snapshot> snapshots) {
    std::vector<IdCountPoint> out;
    for (const auto& s : snapshots) {
        IdCountPoint pt;
        pt.snapshot_id = s.id();
        std::array<std::size_t, 3> buckets{};
        std::size_t keys = 0;
        for (const auto& [site, profile] : s.profiles()) {
            const auto n = profile.keys_of(IdKind::Publisher).size();
            if (n == 0) continue;
            ++pt.bearing_sites;
            ++buckets[std::min<std::size_t>(n, 3) - 1];
            keys += n;
        }
        if (pt.bearing_sites > 0) {
            const auto b = static_cast<double>(pt.bearing_sites);
            pt.one = static_cast<double>(buckets[0]) / b;
            pt.two = static_cast<double>(buckets[1]) / b;
            pt.three_or_more = static_cast<double>(buckets[2]) / b;
            pt.mean = static_cast<double>(keys) / b;
        }
        out.push_back(pt);
    }
    return out;
}

enum class Transition : std::uint8_t { NoChange, Bigger, Smaller, Insignificant };

inline constexpr std::array<Transition, 4> kAllTransitions{Transition::NoChange, Transition::Bigger, Transition::Smaller,
                                                           Transition::Insignificant};

constexpr std::string_view transition_name(Transition t) noexcept {
    switch (t) {
        case Transition::NoChange: return "no_change";
        case Transition::Bigger: return "bigger";
        case Transition::Smaller: return "smaller";
        case Transition::Insignificant: return "insignificant";
    }
    return "unknown";
}

struct TransitionRecord {
    std::string site;
    std::size_t old_size = 0;
    std::size_t new_size = 0;
    Transition kind = Transition::NoChange;
};

// Identical key sets -> NoChange; otherwise compare the largest publisher
// size of the site before and after.
inline TransitionRecord classify_transition(const std::string& site, const Snapshot& earlier, const Snapshot& later) {
    const KeySet* before = earlier.publisher_keys(site);
    const KeySet* after = later.publisher_keys(site);
    if (!before || !after) throw InvalidArgument("site " + site + " lacks Publisher keys in one of the snapshots");

    TransitionRecord r{site, earlier.max_publisher_size(site), later.max_publisher_size(site), Transition::NoChange};
    const bool same = before->size() == after->size() &&
                      std::equal(before->begin(), before->end(), after->begin(), [](const auto& a, const auto& b) { return a.first == b.first; });
    if (same) return r;
    if (r.new_size > r.old_size) {
        r.kind = Transition::Bigger;
    } else if (r.new_size < r.old_size) {
        r.kind = Transition::Smaller;
    } else {
        r.kind = Transition::Insignificant;
    }
    return r;
}

// AllSnapshots: sites bearing Publisher keys in every snapshot of the range.
// PerPair: such sites in the two snapshots of each interval.
enum class UniverseMode { AllSnapshots, PerPair };

struct IntervalCounts {
    std::string from, to;
    std::size_t universe = 0;
    std::array<std::size_t, 4> counts{};

    double fraction(Transition t) const {
        return universe == 0 ? 0.0 : static_cast<double>(counts[static_cast<std::size_t>(t)]) / static_cast<double>(universe);
    }
};

struct TransitionSeries {
    std::vector<IntervalCounts> intervals;
    // Per class, least-squares trend of the class fraction over interval index;
    // present once there are at least two intervals.
    std::optional<std::array<RegressionFit, 4>> trends;
};

inline std::vector<std::string> bearing_in_all(std::span<const Snapshot> snapshots) {
    std::vector<std::string> out;
    for (const auto& [site, profile] : snapshots.front().profiles()) {
        const bool everywhere = std::all_of(snapshots.begin(), snapshots.end(), [&](const Snapshot& s) { return s.publisher_keys(site) != nullptr; });
        if (everywhere) out.push_back(site);
    }
    return out;
}

inline TransitionSeries transition_series(std::span<const Snapshot> snapshots, UniverseMode mode = UniverseMode::AllSnapshots) {
    if (snapshots.size() < 2) throw InsufficientData("transitions need at least two snapshots");
    validate_sequence(snapshots);
    TransitionSeries out;
    const auto global = bearing_in_all(snapshots);
    if (mode == UniverseMode::AllSnapshots && global.empty()) throw InsufficientData("no site bears Publisher keys in every snapshot");

    for (std::size_t i = 0; i + 1 < snapshots.size(); ++i) {
        const auto universe = mode == UniverseMode::AllSnapshots ? global : bearing_in_all(snapshots.subspan(i, 2));
        if (universe.empty()) throw InsufficientData("empty transition universe between " + snapshots[i].id() + " and " + snapshots[i + 1].id());
        IntervalCounts ic;
        ic.from = snapshots[i].id();
        ic.to = snapshots[i + 1].id();
        ic.universe = universe.size();
        for (const auto& site : universe) ++ic.counts[static_cast<std::size_t>(classify_transition(site, snapshots[i], snapshots[i + 1]).kind)];
        out.intervals.push_back(ic);
    }
    if (out.intervals.size() >= 2) {
        std::array<RegressionFit, 4> trends;
        for (Transition t : kAllTransitions) {
            std::vector<Point> pts;
            for (std::size_t i = 0; i < out.intervals.size(); ++i) pts.emplace_back(static_cast<double>(i), out.intervals[i].fraction(t));
            trends[static_cast<std::size_t>(t)] = least_squares(pts);
        }
        out.trends = trends;
    }
    return out;
}

enum class PublisherClass : std::uint8_t { Small, Medium, Large, Mega };

inline constexpr std::array<PublisherClass, 4> kAllClasses{PublisherClass::Small, PublisherClass::Medium, PublisherClass::Large,
                                                           PublisherClass::Mega};

constexpr std::string_view class_name(PublisherClass c) noexcept {
    switch (c) {
        case PublisherClass::Small: return "small";
        case PublisherClass::Medium: return "medium";
        case PublisherClass::Large: return "large";
        case PublisherClass::Mega: return "mega";
    }
    return "unknown";
}

// Small <= 10 < Medium <= 50 < Large <= 100 < Mega.
inline PublisherClass classify_publisher(std::size_t size) {
    if (size < 1) throw InvalidArgument("publisher size must be >= 1");
    if (size <= 10) return PublisherClass::Small;
    if (size <= 50) return PublisherClass::Medium;
    if (size <= 100) return PublisherClass::Large;
    return PublisherClass::Mega;
}

struct ClassPopulation {
    std::vector<std::pair<std::string, std::array<std::size_t, 4>>> counts;  // per snapshot
    std::array<double, 4> slopes{};                                         // publishers per step
};

inline ClassPopulation class_population_series(std::span<const Snapshot> snapshots) {
    if (snapshots.size() < 2) throw InsufficientData("class population needs at least two snapshots");
    validate_sequence(snapshots);
    ClassPopulation out;
    for (const auto& s : snapshots) {
        std::array<std::size_t, 4> c{};
        for (const auto& [key, size] : s.publisher_sizes()) ++c[static_cast<std::size_t>(classify_publisher(size))];
        out.counts.emplace_back(s.id(), c);
    }
    for (PublisherClass cls : kAllClasses) {
        std::vector<Point> pts;
        for (std::size_t i = 0; i < out.counts.size(); ++i) {
            pts.emplace_back(static_cast<double>(i), static_cast<double>(out.counts[i].second[static_cast<std::size_t>(cls)]));
        }
        out.slopes[static_cast<std::size_t>(cls)] = least_squares(pts).slope;
    }
    return out;
}

struct TopPublishersPoint {
    std::string snapshot_id;
    std::size_t top_k_sites = 0;    // top-k of this snapshot
    std::size_t fixed_k_sites = 0;  // fixed top-k among keys present in all snapshots
};

struct TopPublishersSeries {
    std::vector<TopPublishersPoint> points;
    std::vector<std::string> fixed_keys;
    double top_k_change = 0;    // last / first - 1
    double fixed_k_change = 0;
};

// The fixed set holds the k largest keys of the first snapshot among those
// present in every snapshot (ties by key).
inline TopPublishersSeries top_publishers_series(std::span<const Snapshot> snapshots, std::size_t k = 10) {
    if (k < 1) throw InvalidArgument("k must be >= 1");
    if (snapshots.empty()) throw InsufficientData("top publishers need at least one snapshot");
    const auto ranked = [](const Snapshot& s) {
        std::vector<std::pair<std::string, std::size_t>> v(s.publisher_sizes().begin(), s.publisher_sizes().end());
        std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
        return v;
    };

    TopPublishersSeries out;
    for (const auto& [key, size] : ranked(snapshots.front())) {
        if (out.fixed_keys.size() >= k) break;
        if (std::all_of(snapshots.begin(), snapshots.end(), [&](const Snapshot& s) { return s.size_of(key) > 0; })) out.fixed_keys.push_back(key);
    }
    for (const auto& s : snapshots) {
        TopPublishersPoint pt;
        pt.snapshot_id = s.id();
        const auto r = ranked(s);
        for (std::size_t i = 0; i < std::min(k, r.size()); ++i) pt.top_k_sites += r[i].second;
        for (const auto& key : out.fixed_keys) pt.fixed_k_sites += s.size_of(key);
        out.points.push_back(pt);
    }
    const auto change = [](std::size_t first, std::size_t last) {
        return first == 0 ? 0.0 : static_cast<double>(last) / static_cast<double>(first) - 1.0;
    };
    out.top_k_change = change(out.points.front().top_k_sites, out.points.back().top_k_sites);
    out.fixed_k_change = change(out.points.front().fixed_k_sites, out.points.back().fixed_k_sites);
    return out;
}

}  // namespace adgraph
