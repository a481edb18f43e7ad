#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adgraph/adgraph.hpp"
#include "adgraph/parallel.hpp"

namespace adgraph::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum class Format { Csv, Json };

inline fs::path data_path(const std::string& name) {
    if (const char* dir = std::getenv("ADGRAPH_DATA_DIR")) return fs::path(dir) / name;
    return fs::path(ADGRAPH_DATA_DIR) / name;
}

// --- output helpers ----------------------------------------------------------

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;
};

inline std::string render_cell(const json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) return text::csv_field(v.get<std::string>());
    if (v.is_number_float()) return text::format_double(v.get<double>());
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
}

inline std::string render_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + text::csv_field(t.columns[i]);
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + render_cell(row[i]);
        out += '\n';
    }
    return out;
}

inline json table_json(const Table& t) {
    json arr = json::array();
    for (const auto& row : t.rows) {
        json obj = json::object();
        for (std::size_t i = 0; i < t.columns.size(); ++i) obj[t.columns[i]] = row[i];
        arr.push_back(std::move(obj));
    }
    return arr;
}

// Collects the files written by a command, in write order.
class Output {
public:
    explicit Output(fs::path dir) : dir_(std::move(dir)) {}

    const fs::path& dir() const noexcept { return dir_; }

    fs::path text(const std::string& name, std::string_view content) { return file(dir_ / name, content); }
    fs::path file(const fs::path& path, std::string_view content) {
        text::write_file(path, content);
        written_.push_back(path);
        return path;
    }
    fs::path json_file(const std::string& name, const json& j) { return text(name, j.dump(2) + "\n"); }
    fs::path table(const std::string& stem, const Table& t, Format format) {
        return format == Format::Csv ? text(stem + ".csv", render_csv(t)) : json_file(stem + ".json", table_json(t));
    }

    const std::vector<fs::path>& written() const noexcept { return written_; }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
};

inline json num(double v) { return json(v); }
inline json opt_num(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// --- extract -------------------------------------------------------------------

struct ExtractOptions {
    std::vector<std::string> inputs;
    bool har = false;
    std::string dictionary = data_path("dictionary.txt").string();
    std::string blocklist = data_path("blocklist.txt").string();
    bool no_filters = false;
    std::string ranks;
    std::string out = "profiles.jsonl";
    std::size_t anomaly_threshold = 40;
};

inline std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
    std::vector<fs::path> out;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(in)) {
                const auto ext = e.path().extension();
                if (e.is_regular_file() && (ext == ".har" || ext == ".jsonl")) files.push_back(e.path());
            }
            std::sort(files.begin(), files.end());
            out.insert(out.end(), files.begin(), files.end());
        } else {
            out.emplace_back(in);
        }
    }
    return out;
}

struct LoadedCorpus {
    std::vector<CrawlRecord> records;
    std::size_t read = 0;
    std::size_t skipped = 0;
};

inline LoadedCorpus load_corpus(const ExtractOptions& o, std::ostream& err) {
    LoadedCorpus c;
    for (const auto& path : expand_inputs(o.inputs)) {
        if (o.har || path.extension() == ".har") {
            c.records.push_back(parse_har_file(path));
            ++c.read;
            continue;
        }
        std::istringstream in(text::read_file(path));
        auto parsed = parse_crawl_jsonl(in);
        for (const auto& s : parsed.skipped) err << "warning: " << path.string() << ":" << s.line << ": " << s.reason << "\n";
        c.skipped += parsed.skipped.size();
        c.read += parsed.records.size();
        for (auto& r : parsed.records) c.records.push_back(std::move(r));
    }
    if (!o.ranks.empty()) {
        const auto ranks = load_rank_list(fs::path(o.ranks));
        for (auto& r : c.records) {
            if (!r.rank) r.rank = ranks.lookup(r.requested_domain);
        }
    }
    c.records = dedup_by_landing(std::move(c.records));
    return c;
}

inline json summary_json(const ExtractionSummary& s) {
    json kinds = json::object();
    for (IdKind k : kAllKinds) {
        const auto& ks = s.of(k);
        kinds[std::string(kind_name(k))] = {{"unique_ids", ks.unique_ids},
                                            {"unique_sites", ks.unique_sites},
                                            {"pct_of_sites", ks.pct_of_sites},
                                            {"pct_in_html", ks.pct_in_html},
                                            {"pct_in_requests", ks.pct_in_requests},
                                            {"pct_in_cookies", ks.pct_in_cookies}};
    }
    return {{"corpus_size", s.corpus_size}, {"kinds", kinds}};
}

inline std::vector<SiteIdProfile> stage_extract(const ExtractOptions& o, std::size_t threads, Output& output, std::ostream& err) {
    auto corpus = load_corpus(o, err);
    Dictionary dictionary;
    Blocklist blocklist;
    ExtractionFilters filters;
    if (!o.no_filters) {
        dictionary = Dictionary::load(o.dictionary);
        blocklist = Blocklist::load(o.blocklist);
        filters = {&dictionary, &blocklist};
    }
    auto profiles = extract_profiles(corpus.records, filters, threads);
    std::sort(profiles.begin(), profiles.end(), [](const auto& a, const auto& b) { return a.landing_domain < b.landing_domain; });
    output.file(o.out, serialize_profiles_jsonl(profiles));

    json summary = json::object();
    if (!profiles.empty()) summary = summary_json(summarize_extraction(profiles, profiles.size()));
    summary["records_read"] = corpus.read;
    summary["lines_skipped"] = corpus.skipped;
    summary["duplicates_dropped"] = corpus.read - corpus.records.size();
    json anomalies = json::array();
    for (const auto& a : flag_anomalies(profiles, o.anomaly_threshold)) anomalies.push_back({{"landing_domain", a.landing_domain}, {"distinct_keys", a.distinct_keys}});
    summary["anomalies"] = anomalies;
    output.json_file("summary.json", summary);
    return profiles;
}

// --- graph ---------------------------------------------------------------------

struct GraphOptions {
    std::string profiles;
    std::size_t threshold = 100;
    bool no_exclusion = false;
    bool normalize_before_exclusion = false;
};

inline json component_json(const std::vector<Component>& comps) {
    return {{"components", comps.size()}, {"largest", comps.empty() ? 0 : comps.front().size()}};
}

inline Metagraph stage_graph(const GraphOptions& o, std::vector<SiteIdProfile> profiles, Output& output) {
    const auto families = [](const std::vector<SiteIdProfile>& ps) {
        return std::array<BipartiteGraph, 3>{build_bipartite(ps, Family::Publisher), build_bipartite(ps, Family::Analytics),
                                             build_bipartite(ps, Family::Container)};
    };
    std::optional<FamilyNormalizers> normalizers;
    if (!o.no_exclusion) {
        if (o.normalize_before_exclusion) {
            const auto before = families(profiles);
            normalizers = family_normalizers(before[0], before[1], before[2]);
        }
        profiles = exclude_intermediaries(std::move(profiles), o.threshold);
    }
    const auto bip = families(profiles);
    auto mg = build_metagraph(bip[0], bip[1], bip[2], normalizers);

    json summary = json::object();
    for (const auto& g : bip) {
        const std::string name(family_name(g.family));
        output.text("bipartite_" + name + ".csv", bipartite_csv(g));
        auto s = component_json(connected_components(g));
        s["sites"] = g.sites.size();
        s["ids"] = g.ids.size();
        s["edges"] = g.edges.size();
        s["normalizer"] = mg.normalizers[index_of(g.family)];
        summary["families"][name] = s;
    }
    output.text("metagraph.csv", metagraph_csv(mg));
    auto m = component_json(connected_components(mg));
    m["nodes"] = mg.node_count();
    m["edges"] = mg.edge_count();
    summary["metagraph"] = m;
    output.json_file("graph.json", summary);
    return mg;
}

// --- communities -----------------------------------------------------------------

struct CommunityOptions {
    std::string metagraph;
    double top_fraction = 0.05;
    std::optional<std::size_t> max_communities;
    DistanceMode distance = DistanceMode::Hops;
};

inline WeightedGraph<double> as_double_graph(const WeightedGraph<Rational>& g) {
    WeightedGraph<double> out;
    out.nodes = g.nodes;
    out.edges.reserve(g.edges.size());
    for (const auto& e : g.edges) out.edges.push_back({e.u, e.v, e.weight.to_double()});
    return out;
}

inline Partition stage_communities(const CommunityOptions& o, const WeightedGraph<double>& metagraph, std::size_t threads,
                                   Output& output) {
    const auto pruned = prune_edges(metagraph, o.top_fraction);
    output.text("pruned.csv", metagraph_csv(pruned));
    const auto partition = girvan_newman(pruned, {o.max_communities, o.distance, threads});
    output.text("communities.csv", communities_csv(partition.communities));

    std::string dendrogram = "step,site_a,site_b,betweenness,components_after\n";
    for (std::size_t i = 0; i < partition.dendrogram.size(); ++i) {
        const auto& e = partition.dendrogram[i];
        dendrogram += std::to_string(i + 1) + ',' + text::csv_field(e.u) + ',' + text::csv_field(e.v) + ',' +
                      text::format_double(e.betweenness) + ',' + std::to_string(e.components_after) + '\n';
    }
    output.text("dendrogram.csv", dendrogram);

    const auto hist = community_size_distribution(partition);
    json sizes = json::object();
    for (const auto& [size, count] : hist.counts) sizes[std::to_string(size)] = count;
    output.json_file("communities.json", {{"pruned_nodes", pruned.node_count()},
                                          {"pruned_edges", pruned.edge_count()},
                                          {"communities", partition.communities.size()},
                                          {"modularity", partition.modularity},
                                          {"cut_step", partition.cut_step},
                                          {"size_counts", sizes},
                                          {"fraction_pairs", hist.fraction_pairs}});
    return partition;
}

inline std::vector<std::vector<std::string>> load_communities(const fs::path& path) {
    std::istringstream in(text::read_file(path));
    std::map<std::int64_t, std::vector<std::string>> groups;
    const auto lines = text::read_lines(in);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) continue;
        const auto fields = text::split_csv(lines[i]);
        if (!fields || fields->size() != 2) throw FormatError("expected community_id,site", i + 1);
        if (i == 0 && (*fields)[0] == "community_id") continue;
        const auto id = text::parse_int<std::int64_t>((*fields)[0]);
        if (!id) throw FormatError("bad community id", i + 1);
        groups[*id].push_back((*fields)[1]);
    }
    std::vector<std::vector<std::string>> out;
    for (auto& [id, members] : groups) out.push_back(std::move(members));
    return out;
}

// --- stats -----------------------------------------------------------------------

inline Table stats_ids(const std::vector<SiteIdProfile>& profiles) {
    Table t{{"kind", "ids_per_site", "fraction"}, {}};
    const auto hist = per_site_id_counts(profiles);
    for (IdKind k : kAllKinds) {
        for (const auto& [n, f] : hist[index_of(k)]) t.rows.push_back({std::string(kind_name(k)), n, num(f)});
    }
    return t;
}

inline std::vector<PublisherRecord> family_sizes(const std::vector<SiteIdProfile>& profiles, Family family) {
    return publisher_sizes(build_bipartite(profiles, family), rank_lookup(profiles));
}

inline void stats_sizes(const std::vector<SiteIdProfile>& profiles, Family family, std::size_t top_k, Format format, Output& output) {
    const auto records = family_sizes(profiles, family);
    Table t{{"key", "size", "mean_rank", "median_rank"}, {}};
    for (const auto& r : records) t.rows.push_back({r.key, r.size, opt_num(r.mean_rank), opt_num(r.median_rank)});
    output.table("publisher_sizes", t, format);
    const auto bearing = build_bipartite(profiles, family).sites.size();
    const auto top = top_k_total(records, top_k);
    output.json_file("sizes.json", {{"family", family_name(family)},
                                     {"publishers", records.size()},
                                     {"bearing_sites", bearing},
                                     {"top_k", top_k},
                                     {"top_k_sites", top},
                                     {"top_k_fraction", bearing ? static_cast<double>(top) / static_cast<double>(bearing) : 0.0}});
}

inline json powerlaw_json(std::span<const std::int64_t> values, const PowerLawOptions& options = {}) {
    const auto fit = fit_power_law(values, options);
    return {{"n", values.size()},        {"alpha", fit.alpha},
            {"alpha_min", options.alpha_min}, {"alpha_max", options.alpha_max},
            {"xmin", fit.xmin},          {"ks_stat", fit.ks_stat},
            {"n_tail", fit.n_tail},      {"lr_statistic", fit.lr_statistic},
            {"lr_p_value", fit.lr_p_value}};
}

inline std::vector<std::int64_t> load_values(const fs::path& path) {
    std::istringstream in(text::read_file(path));
    std::vector<std::int64_t> out;
    const auto lines = text::read_lines(in);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto s = text::trim(lines[i]);
        if (s.empty()) continue;
        const auto v = text::parse_int<std::int64_t>(s);
        if (!v) throw FormatError("expected an integer", i + 1);
        out.push_back(*v);
    }
    return out;
}

inline std::vector<std::int64_t> size_values(const std::vector<PublisherRecord>& records) {
    std::vector<std::int64_t> v;
    for (const auto& r : records) v.push_back(static_cast<std::int64_t>(r.size));
    return v;
}

inline void stats_popularity(const std::vector<SiteIdProfile>& profiles, std::optional<std::size_t> max_size, Format format,
                             Output& output) {
    const auto result = popularity_by_size(family_sizes(profiles, Family::Publisher), max_size);
    Table t{{"size", "publishers", "mean_rank", "median_rank"}, {}};
    for (const auto& b : result.buckets) t.rows.push_back({b.size, b.publishers, num(b.mean_rank), num(b.median_rank)});
    output.table("popularity", t, format);
    output.json_file("popularity.json", {{"slope", result.fit.slope}, {"intercept", result.fit.intercept}, {"r_squared", result.fit.r_squared}});
}

inline void stats_categories(const std::vector<SiteIdProfile>& profiles, const CategoryMap& categories, Format format, Output& output) {
    std::vector<std::string> all;
    for (const auto& p : profiles) all.push_back(p.landing_domain);
    const auto pub = category_distribution(publisher_bearing_sites(profiles), categories);
    const auto every = category_distribution(all, categories);
    std::set<std::string> labels;
    for (const auto& [l, f] : pub.fractions) labels.insert(l);
    for (const auto& [l, f] : every.fractions) labels.insert(l);
    const auto get = [](const CategoryHistogram& h, const std::string& l) {
        const auto it = h.fractions.find(l);
        return it == h.fractions.end() ? 0.0 : it->second;
    };
    Table t{{"category", "publisher_sites_fraction", "all_sites_fraction"}, {}};
    for (const auto& l : labels) t.rows.push_back({l, num(get(pub, l)), num(get(every, l))});
    output.table("categories", t, format);
}

inline void stats_diversity(const std::vector<std::vector<std::string>>& communities, const CategoryMap& categories, Format format,
                            Output& output) {
    Table t{{"community_id", "size", "labeled", "richness", "shannon_h", "h_max"}, {}};
    for (std::size_t c = 0; c < communities.size(); ++c) {
        std::vector<std::string> labels;
        for (const auto& site : communities[c]) {
            if (auto l = categories.lookup(site)) labels.push_back(std::move(*l));
        }
        if (labels.empty()) {
            t.rows.push_back({c, communities[c].size(), 0, 0, nullptr, nullptr});
            continue;
        }
        const auto d = shannon_diversity(labels);
        t.rows.push_back({c, communities[c].size(), labels.size(), d.richness, num(d.shannon_h), num(d.h_max)});
    }
    output.table("diversity", t, format);
}

// Category labels ordered by domain, so sampling does not depend on hash order.
inline std::vector<std::string> ordered_labels(const CategoryMap& categories) {
    std::vector<std::pair<std::string, std::string>> entries(categories.entries.begin(), categories.entries.end());
    std::sort(entries.begin(), entries.end());
    std::vector<std::string> labels;
    labels.reserve(entries.size());
    for (auto& [site, label] : entries) labels.push_back(std::move(label));
    return labels;
}

struct PoissonOptions {
    std::size_t size = 10;
    std::size_t trials = 10000;
    std::uint64_t seed = 7;
};

inline void stats_poisson(const CategoryMap& categories, const std::optional<std::vector<std::vector<std::string>>>& communities,
                          const PoissonOptions& o, std::size_t threads, Format format, Output& output) {
    const auto labels = ordered_labels(categories);
    const double mean = poisson_sampling_baseline(labels, o.size, o.trials, o.seed, threads);
    output.json_file("baseline.json", {{"size", o.size},
                                       {"trials", o.trials},
                                       {"seed", o.seed},
                                       {"labeled_sites", labels.size()},
                                       {"mean_richness", mean}});
    if (!communities) return;
    Table t{{"size", "groups", "observed_richness", "baseline_richness"}, {}};
    for (const auto& p : richness_vs_baseline(*communities, categories, labels, o.trials, o.seed, threads)) {
        t.rows.push_back({p.size, p.groups, num(p.observed), num(p.baseline)});
    }
    output.table("richness", t, format);
}

// --- history -----------------------------------------------------------------------

inline std::vector<Snapshot> load_snapshots(const std::vector<std::string>& dirs, std::size_t threads) {
    std::vector<std::optional<Snapshot>> loaded(dirs.size());
    parallel_for(dirs.size(), threads, [&](std::size_t i) { loaded[i].emplace(load_snapshot(dirs[i])); });
    std::vector<Snapshot> out;
    for (auto& s : loaded) out.push_back(std::move(*s));
    validate_sequence(out);
    return out;
}

inline Table history_table(const std::string& topic, std::span<const Snapshot> snapshots, UniverseMode mode, std::size_t top_k) {
    Table t{{"snapshot_id", "metric", "value"}, {}};
    const auto row = [&](const std::string& label, const std::string& metric, json value) {
        t.rows.push_back({label, metric, std::move(value)});
    };
    if (topic == "coverage") {
        const auto c = coverage_series(snapshots);
        for (const auto& p : c.points) {
            row(p.snapshot_id, "total_sites", p.total_sites);
            row(p.snapshot_id, "publisher_fraction", num(p.publisher));
            row(p.snapshot_id, "tracking_fraction", num(p.tracking));
        }
        row("all", "publisher_mean", num(c.publisher_mean));
        row("all", "publisher_sd", num(c.publisher_sd));
        row("all", "tracking_mean", num(c.tracking_mean));
        row("all", "tracking_sd", num(c.tracking_sd));
    } else if (topic == "idcounts") {
        for (const auto& p : publisher_id_count_series(snapshots)) {
            row(p.snapshot_id, "bearing_sites", p.bearing_sites);
            row(p.snapshot_id, "one_fraction", num(p.one));
            row(p.snapshot_id, "two_fraction", num(p.two));
            row(p.snapshot_id, "three_or_more_fraction", num(p.three_or_more));
            row(p.snapshot_id, "mean_keys", num(p.mean));
        }
    } else if (topic == "transitions") {
        t.columns[0] = "interval";
        const auto s = transition_series(snapshots, mode);
        for (const auto& ic : s.intervals) {
            const auto label = ic.from + ".." + ic.to;
            row(label, "universe", ic.universe);
            for (Transition k : kAllTransitions) {
                row(label, std::string(transition_name(k)) + "_count", ic.counts[static_cast<std::size_t>(k)]);
                row(label, std::string(transition_name(k)) + "_fraction", num(ic.fraction(k)));
            }
        }
        if (s.trends) {
            for (Transition k : kAllTransitions) {
                const auto& f = (*s.trends)[static_cast<std::size_t>(k)];
                row("trend", std::string(transition_name(k)) + "_slope", num(f.slope));
                row("trend", std::string(transition_name(k)) + "_intercept", num(f.intercept));
            }
        }
    } else if (topic == "classes") {
        const auto c = class_population_series(snapshots);
        for (const auto& [id, counts] : c.counts) {
            for (PublisherClass k : kAllClasses) row(id, std::string(class_name(k)), counts[static_cast<std::size_t>(k)]);
        }
        for (PublisherClass k : kAllClasses) row("trend", std::string(class_name(k)) + "_slope", num(c.slopes[static_cast<std::size_t>(k)]));
    } else if (topic == "top") {
        const auto s = top_publishers_series(snapshots, top_k);
        for (const auto& p : s.points) {
            row(p.snapshot_id, "top_k_sites", p.top_k_sites);
            row(p.snapshot_id, "fixed_top_k_sites", p.fixed_k_sites);
        }
        row("all", "top_k_change", num(s.top_k_change));
        row("all", "fixed_top_k_change", num(s.fixed_k_change));
    } else {
        throw InvalidArgument("unknown history topic: " + topic);
    }
    return t;
}

// --- command line ----------------------------------------------------------------------

struct Settings {
    ExtractOptions extract;
    GraphOptions graph;
    CommunityOptions communities;
    PoissonOptions poisson;
    PowerLawOptions power;
    std::string distance = "hops";
    std::size_t max_communities = 0;
    std::optional<std::size_t> max_size;
    std::size_t top_k = 10;
    std::string family = "publisher";
    std::string values;
    std::string categories;
    std::string communities_path;
    std::vector<std::string> snapshots;
    bool per_pair = false;
    std::string echo;
    std::string format = "csv";
    std::string out_dir = ".";
    std::size_t threads = 0;
};

inline json effective_options(const CLI::App& sub) {
    json j = json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        const auto name = opt->get_name();
        if (name == "--help" || name.empty()) continue;
        if (opt->get_expected_min() == 0) {
            j[name] = opt->count() > 0;
        } else if (opt->count() > 0) {
            const auto& r = opt->results();
            j[name] = r.size() == 1 ? json(r.front()) : json(r);
        } else if (!opt->get_default_str().empty()) {
            j[name] = opt->get_default_str();
        } else {
            j[name] = nullptr;
        }
    }
    return j;
}

inline const CLI::App* deepest_parsed(const CLI::App& app) {
    const CLI::App* cur = &app;
    for (;;) {
        const CLI::App* next = nullptr;
        for (const auto* sub : cur->get_subcommands()) {
            if (sub->parsed()) next = sub;
        }
        if (!next) return cur;
        cur = next;
    }
}

inline Format parse_format(const std::string& s) {
    if (s == "csv") return Format::Csv;
    if (s == "json") return Format::Json;
    throw InvalidArgument("format must be csv or json");
}

inline DistanceMode parse_distance(const std::string& s) {
    if (s == "hops") return DistanceMode::Hops;
    if (s == "inverse-weight") return DistanceMode::InverseWeight;
    throw InvalidArgument("distance must be hops or inverse-weight");
}

inline Family parse_family_arg(const std::string& s) {
    const auto f = parse_family(s);
    if (!f) throw InvalidArgument("unknown family: " + s);
    return *f;
}

inline void check_fraction(double f, const char* what) {
    if (!(f > 0.0 && f <= 1.0)) throw InvalidArgument(std::string(what) + " must lie in (0, 1]");
}

int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr);

namespace detail {

inline void add_threads(CLI::App* sub, Settings& s) {
    sub->add_option("--threads", s.threads, "Worker threads (default: $ADGRAPH_THREADS or 1)");
}
inline void add_alpha_range(CLI::App* sub, Settings& s) {
    sub->add_option("--alpha-min", s.power.alpha_min, "Lower end of the exponent search");
    sub->add_option("--alpha-max", s.power.alpha_max, "Upper end of the exponent search");
}
inline void add_out_dir(CLI::App* sub, Settings& s) { sub->add_option("--out-dir", s.out_dir, "Output directory"); }
inline void add_format(CLI::App* sub, Settings& s) {
    sub->add_option("--format", s.format, "Tabular output format")->check(CLI::IsMember({"csv", "json"}));
}

inline void add_extract_options(CLI::App* sub, Settings& s, bool with_out) {
    sub->add_option("--in", s.extract.inputs, "Crawl JSONL or HAR files, or directories of them")->required()->check(CLI::ExistingPath);
    sub->add_flag("--har", s.extract.har, "Treat every input file as HAR");
    sub->add_option("--dict", s.extract.dictionary, "Dictionary word list")->check(CLI::ExistingFile);
    sub->add_option("--blocklist", s.extract.blocklist, "Blocked raw identifier values")->check(CLI::ExistingFile);
    sub->add_flag("--no-filters", s.extract.no_filters, "Disable dictionary and blocklist filtering");
    sub->add_option("--ranks", s.extract.ranks, "rank,domain list for records without a rank")->check(CLI::ExistingFile);
    sub->add_option("--anomaly-threshold", s.extract.anomaly_threshold, "Flag sites with more distinct keys than this");
    if (with_out) sub->add_option("--out", s.extract.out, "Profiles JSONL output path");
}

inline void add_graph_options(CLI::App* sub, Settings& s) {
    sub->add_option("--threshold", s.graph.threshold, "Drop keys found on more than this many sites");
    sub->add_flag("--no-exclusion", s.graph.no_exclusion, "Keep intermediary keys");
    sub->add_flag("--normalize-before-exclusion", s.graph.normalize_before_exclusion,
                  "Count per-family shared keys before intermediaries are dropped");
}

inline void add_community_options(CLI::App* sub, Settings& s) {
    sub->add_option("--top-fraction", s.communities.top_fraction, "Fraction of heaviest edges kept");
    sub->add_option("--max-communities", s.max_communities, "Upper bound on the number of communities (0 = none)");
    sub->add_option("--distance", s.distance, "Shortest-path metric")->check(CLI::IsMember({"hops", "inverse-weight"}));
}

inline void write_echo(Output& output, const std::string& name, const CLI::App& sub, const std::vector<std::string>& args,
                       std::size_t threads) {
    json echo = {{"command", name},
                 {"argv", args},
                 {"cwd", fs::current_path().string()},
                 {"threads", threads},
                 {"options", effective_options(sub)}};
    output.json_file(name + ".config.json", echo);
}

inline std::string command_name(const CLI::App& leaf) {
    std::vector<std::string> parts;
    for (const CLI::App* a = &leaf; a && a->get_parent(); a = a->get_parent()) parts.push_back(a->get_name());
    std::reverse(parts.begin(), parts.end());
    std::string name;
    for (const auto& p : parts) name += (name.empty() ? "" : "_") + p;
    return name;
}

inline int rerun(const Settings& s, std::ostream& out, std::ostream& err) {
    const auto echo = json::parse(text::read_file(s.echo));
    auto argv = echo.at("argv").get<std::vector<std::string>>();
    if (!argv.empty() && argv.front() == "rerun") throw InvalidArgument("refusing to rerun a rerun");
    const auto replace = [&](const std::string& flag, const std::string& value) {
        bool found = false;
        for (std::size_t i = 0; i + 1 < argv.size(); ++i) {
            if (argv[i] == flag) {
                argv[i + 1] = value;
                found = true;
            }
        }
        for (auto& a : argv) {
            if (a.rfind(flag + "=", 0) == 0) {
                a = flag + "=" + value;
                found = true;
            }
        }
        if (!found) {
            argv.push_back(flag);
            argv.push_back(value);
        }
    };
    const auto cwd = fs::current_path();
    const fs::path out_dir = fs::absolute(s.out_dir);
    if (s.out_dir != ".") {
        replace("--out-dir", out_dir.string());
    }
    if (s.threads) replace("--threads", std::to_string(s.threads));
    fs::current_path(echo.at("cwd").get<std::string>());
    int code = 0;
    try {
        code = run(argv, out, err);
    } catch (...) {
        fs::current_path(cwd);
        throw;
    }
    fs::current_path(cwd);
    return code;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Settings s;
    CLI::App app{"Publisher-specific identifier extraction and website ownership graphs", "adgraph"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);

    auto* extract = app.add_subcommand("extract", "Crawl corpus -> identifier profiles + summary");
    detail::add_extract_options(extract, s, true);
    detail::add_threads(extract, s);
    extract->add_option("--out-dir", s.out_dir, "Directory for summary and config echo (default: directory of --out)");

    auto* graph = app.add_subcommand("graph", "Profiles -> bipartite graphs + metagraph");
    graph->add_option("--profiles", s.graph.profiles, "Profiles JSONL")->required()->check(CLI::ExistingFile);
    detail::add_graph_options(graph, s);
    detail::add_threads(graph, s);
    detail::add_out_dir(graph, s);

    auto* communities = app.add_subcommand("communities", "Metagraph -> pruned graph -> Girvan-Newman communities");
    communities->add_option("--metagraph", s.communities.metagraph, "Metagraph edge CSV")->required()->check(CLI::ExistingFile);
    detail::add_community_options(communities, s);
    detail::add_threads(communities, s);
    detail::add_out_dir(communities, s);

    auto* stats = app.add_subcommand("stats", "Statistics over profiles and communities");
    stats->require_subcommand(1);
    const auto stats_sub = [&](const char* name, const char* desc) {
        auto* sub = stats->add_subcommand(name, desc);
        detail::add_threads(sub, s);
        detail::add_out_dir(sub, s);
        detail::add_format(sub, s);
        return sub;
    };
    auto* st_ids = stats_sub("ids", "Distribution of distinct keys per site");
    st_ids->add_option("--profiles", s.graph.profiles, "Profiles JSONL")->required()->check(CLI::ExistingFile);
    auto* st_sizes = stats_sub("sizes", "Sites per identifier");
    st_sizes->add_option("--profiles", s.graph.profiles, "Profiles JSONL")->required()->check(CLI::ExistingFile);
    st_sizes->add_option("--family", s.family, "publisher, analytics or container");
    st_sizes->add_option("--top-k", s.top_k, "Top publishers summed in sizes.json");
    auto* st_power = stats_sub("powerlaw", "Discrete power-law fit of identifier sizes");
    auto* power_profiles = st_power->add_option("--profiles", s.graph.profiles, "Profiles JSONL")->check(CLI::ExistingFile);
    auto* power_values = st_power->add_option("--values", s.values, "One positive integer per line")->check(CLI::ExistingFile);
    power_profiles->excludes(power_values);
    st_power->add_option("--family", s.family, "publisher, analytics or container");
    detail::add_alpha_range(st_power, s);
    auto* st_pop = stats_sub("popularity", "Mean site rank against publisher size");
    st_pop->add_option("--profiles", s.graph.profiles, "Profiles JSONL")->required()->check(CLI::ExistingFile);
    st_pop->add_option("--max-size", s.max_size, "Sizes above this share one bucket");
    auto* st_cat = stats_sub("categories", "Category distribution of publisher-bearing sites");
    st_cat->add_option("--profiles", s.graph.profiles, "Profiles JSONL")->required()->check(CLI::ExistingFile);
    st_cat->add_option("--categories", s.categories, "domain,category CSV")->required()->check(CLI::ExistingFile);
    auto* st_div = stats_sub("diversity", "Richness and Shannon diversity per community");
    st_div->add_option("--communities", s.communities_path, "communities.csv")->required()->check(CLI::ExistingFile);
    st_div->add_option("--categories", s.categories, "domain,category CSV")->required()->check(CLI::ExistingFile);
    auto* st_poisson = stats_sub("poisson", "Sampling baseline for category richness");
    st_poisson->add_option("--categories", s.categories, "domain,category CSV")->required()->check(CLI::ExistingFile);
    st_poisson->add_option("--size", s.poisson.size, "Sites per sample");
    st_poisson->add_option("--trials", s.poisson.trials, "Monte-Carlo trials");
    st_poisson->add_option("--seed", s.poisson.seed, "Random seed");
    st_poisson->add_option("--communities", s.communities_path, "Also compare community richness")->check(CLI::ExistingFile);

    auto* history = app.add_subcommand("history", "Longitudinal analysis over snapshot directories");
    history->require_subcommand(1);
    std::vector<CLI::App*> history_subs;
    for (const auto& [name, desc] : std::vector<std::pair<const char*, const char*>>{
             {"coverage", "Share of sites with Publisher and Tracking keys"},
             {"idcounts", "Publisher keys per bearing site"},
             {"transitions", "Publisher change classes between consecutive snapshots"},
             {"classes", "Small/Medium/Large/Mega publisher census"},
             {"top", "Sites held by the largest publishers"}}) {
        auto* sub = history->add_subcommand(name, desc);
        sub->add_option("--snapshots", s.snapshots, "Snapshot directories in time order")->required()->check(CLI::ExistingDirectory);
        detail::add_threads(sub, s);
        detail::add_out_dir(sub, s);
        detail::add_format(sub, s);
        history_subs.push_back(sub);
    }
    history_subs[2]->add_flag("--per-pair", s.per_pair, "Universe per consecutive pair instead of all snapshots");
    history_subs[4]->add_option("--top-k", s.top_k, "Number of top publishers");

    auto* report = app.add_subcommand("report", "Run the whole pipeline into one directory");
    detail::add_extract_options(report, s, false);
    detail::add_graph_options(report, s);
    detail::add_community_options(report, s);
    report->add_option("--categories", s.categories, "domain,category CSV")->check(CLI::ExistingFile);
    report->add_option("--size", s.poisson.size, "Sites per Poisson sample");
    report->add_option("--trials", s.poisson.trials, "Monte-Carlo trials");
    report->add_option("--seed", s.poisson.seed, "Random seed");
    report->add_option("--snapshots", s.snapshots, "Snapshot directories in time order")->check(CLI::ExistingDirectory);
    report->add_option("--top-k", s.top_k, "Number of top publishers");
    detail::add_alpha_range(report, s);
    detail::add_threads(report, s);
    report->add_option("--out-dir", s.out_dir, "Report directory")->required();
    detail::add_format(report, s);

    auto* rerun = app.add_subcommand("rerun", "Repeat a run from its config echo");
    rerun->add_option("echo", s.echo, "<command>.config.json")->required()->check(CLI::ExistingFile);
    rerun->add_option("--out-dir", s.out_dir, "Write outputs here instead");
    rerun->add_option("--threads", s.threads, "Override the worker count");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        err << "error: " << e.what() << "\n" << deepest_parsed(app)->help();
        return 2;
    }

    try {
        const CLI::App* leaf = deepest_parsed(app);
        if (leaf == rerun) return detail::rerun(s, out, err);

        const std::size_t threads = resolve_threads(s.threads ? std::optional<std::size_t>(s.threads) : std::nullopt);
        const Format format = parse_format(s.format);
        s.communities.distance = parse_distance(s.distance);
        if (s.max_communities) s.communities.max_communities = s.max_communities;
        check_fraction(s.communities.top_fraction, "--top-fraction");

        fs::path out_dir = s.out_dir;
        if (leaf == extract && extract->get_option("--out-dir")->count() == 0) out_dir = fs::path(s.extract.out).parent_path();
        if (out_dir.empty()) out_dir = ".";
        Output output(out_dir);
        const auto name = detail::command_name(*leaf);

        if (leaf == extract) {
            stage_extract(s.extract, threads, output, err);
        } else if (leaf == graph) {
            stage_graph(s.graph, load_profiles(s.graph.profiles), output);
        } else if (leaf == communities) {
            std::istringstream in(text::read_file(s.communities.metagraph));
            stage_communities(s.communities, parse_metagraph_csv(in), threads, output);
        } else if (leaf == st_ids) {
            output.table("id_counts", stats_ids(load_profiles(s.graph.profiles)), format);
        } else if (leaf == st_sizes) {
            stats_sizes(load_profiles(s.graph.profiles), parse_family_arg(s.family), s.top_k, format, output);
        } else if (leaf == st_power) {
            std::vector<std::int64_t> values;
            if (!s.values.empty()) {
                values = load_values(s.values);
            } else if (!s.graph.profiles.empty()) {
                values = size_values(family_sizes(load_profiles(s.graph.profiles), parse_family_arg(s.family)));
            } else {
                throw InvalidArgument("stats powerlaw needs --profiles or --values");
            }
            output.json_file("powerlaw.json", powerlaw_json(values, s.power));
        } else if (leaf == st_pop) {
            stats_popularity(load_profiles(s.graph.profiles), s.max_size, format, output);
        } else if (leaf == st_cat) {
            stats_categories(load_profiles(s.graph.profiles), load_category_map(fs::path(s.categories)), format, output);
        } else if (leaf == st_div) {
            stats_diversity(load_communities(s.communities_path), load_category_map(fs::path(s.categories)), format, output);
        } else if (leaf == st_poisson) {
            std::optional<std::vector<std::vector<std::string>>> groups;
            if (!s.communities_path.empty()) groups = load_communities(s.communities_path);
            stats_poisson(load_category_map(fs::path(s.categories)), groups, s.poisson, threads, format, output);
        } else if (leaf->get_parent() == history) {
            const auto snaps = load_snapshots(s.snapshots, threads);
            output.table("history_" + leaf->get_name(),
                         history_table(leaf->get_name(), snaps, s.per_pair ? UniverseMode::PerPair : UniverseMode::AllSnapshots, s.top_k),
                         format);
        } else if (leaf == report) {
            json skipped = json::object();
            const auto attempt = [&](const std::string& what, auto&& fn) {
                try {
                    fn();
                } catch (const InputError& e) {
                    skipped[what] = e.what();
                }
            };
            s.extract.out = (out_dir / "profiles.jsonl").string();
            auto profiles = stage_extract(s.extract, threads, output, err);
            const auto mg = stage_graph(s.graph, profiles, output);
            const auto partition = stage_communities(s.communities, as_double_graph(mg), threads, output);
            output.table("id_counts", stats_ids(profiles), format);
            stats_sizes(profiles, Family::Publisher, s.top_k, format, output);
            attempt("powerlaw", [&] { output.json_file("powerlaw.json", powerlaw_json(size_values(family_sizes(profiles, Family::Publisher)), s.power)); });
            attempt("popularity", [&] { stats_popularity(profiles, s.max_size, format, output); });
            if (!s.categories.empty()) {
                const auto cats = load_category_map(fs::path(s.categories));
                stats_categories(profiles, cats, format, output);
                stats_diversity(partition.communities, cats, format, output);
                attempt("poisson", [&] { stats_poisson(cats, partition.communities, s.poisson, threads, format, output); });
            }
            if (!s.snapshots.empty()) {
                const auto snaps = load_snapshots(s.snapshots, threads);
                for (const std::string topic : {"coverage", "idcounts", "transitions", "classes", "top"}) {
                    attempt("history_" + topic,
                            [&] { output.table("history_" + topic, history_table(topic, snaps, UniverseMode::AllSnapshots, s.top_k), format); });
                }
            }
            json artifacts = json::array();
            for (const auto& p : output.written()) artifacts.push_back(p.filename().string());
            artifacts.push_back(name + ".config.json");
            output.json_file("report.json", {{"artifacts", artifacts}, {"skipped", skipped}});
        }
        detail::write_echo(output, name, *leaf, args, threads);
        for (const auto& p : output.written()) out << p.string() << "\n";
        return 0;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace adgraph::cli
