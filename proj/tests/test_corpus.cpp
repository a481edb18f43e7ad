#include <gtest/gtest.h>

#include <sstream>

#include "adgraph/corpus.hpp"
#include "support/fixtures.hpp"

namespace {

using adgraph::canonicalize;
using adgraph::CrawlRecord;

// Expected values produced by the `publicsuffixlist` Python package over the
// shipped data/public_suffix_list.dat.
struct PslCase {
    const char* host;
    const char* registrable;
};

void PrintTo(const PslCase& c, std::ostream* os) { *os << c.host; }

class Canonicalize : public ::testing::TestWithParam<PslCase> {};

TEST_P(Canonicalize, MatchesReferenceImplementation) { EXPECT_EQ(canonicalize(GetParam().host), GetParam().registrable); }

INSTANTIATE_TEST_SUITE_P(Psl, Canonicalize,
                         ::testing::Values(PslCase{"www.example.co.uk", "example.co.uk"},
                                           PslCase{"foo.bar.github.io", "bar.github.io"},
                                           PslCase{"a.b.kawasaki.jp", "a.b.kawasaki.jp"},
                                           PslCase{"city.kawasaki.jp", "city.kawasaki.jp"},
                                           PslCase{"www.city.kawasaki.jp", "city.kawasaki.jp"},
                                           PslCase{"shop.example.com", "example.com"},
                                           PslCase{"sub.example.unknowntld", "example.unknowntld"},
                                           PslCase{"blog.xn--p1ai", "blog.xn--p1ai"},
                                           PslCase{"a.b.c.d.example.ac.jp", "example.ac.jp"},
                                           PslCase{"x.s3.amazonaws.com", "x.s3.amazonaws.com"},
                                           PslCase{"news.google.com.au", "google.com.au"},
                                           PslCase{"test.pvt.k12.ma.us", "test.pvt.k12.ma.us"},
                                           PslCase{"https://news.example.co.uk/a", "example.co.uk"}));

TEST(CanonicalizeRules, LowercasesAndStripsUrlParts) {
    EXPECT_EQ(canonicalize("A.EXAMPLE"), "a.example");
    EXPECT_EQ(canonicalize("https://user:pw@WWW.B.Example:8443/path?q=1#frag"), "b.example");
    EXPECT_EQ(canonicalize("example.com."), "example.com");
    EXPECT_EQ(canonicalize("//cdn.example.org/x.js"), "example.org");
}

TEST(CanonicalizeRules, IpLiteralsPassThrough) {
    EXPECT_EQ(canonicalize("203.0.113.7"), "203.0.113.7");
    EXPECT_EQ(canonicalize("http://203.0.113.7:8080/"), "203.0.113.7");
    EXPECT_EQ(canonicalize("http://[2001:db8::1]/"), "[2001:db8::1]");
}

TEST(CanonicalizeRules, PublicSuffixItselfIsKept) {
    EXPECT_EQ(canonicalize("co.uk"), "co.uk");
    EXPECT_EQ(canonicalize("localhost"), "localhost");
}

TEST(CanonicalizeRules, RejectsGarbage) {
    EXPECT_THROW(canonicalize(""), adgraph::CanonicalizationError);
    EXPECT_THROW(canonicalize("a..example"), adgraph::CanonicalizationError);
    EXPECT_THROW(canonicalize("bad host.example"), adgraph::CanonicalizationError);
    EXPECT_THROW(canonicalize("https:///nohost"), adgraph::CanonicalizationError);
}

TEST(CanonicalizeRules, Idempotent) {
    for (const char* h : {"https://www.bbc.co.uk/news", "foo.bar.github.io", "203.0.113.7", "A.B.C.EXAMPLE.ORG"}) {
        const auto once = canonicalize(h);
        EXPECT_EQ(canonicalize(once), once);
    }
}

TEST(CrawlJsonl, ParsesMinimalRecord) {
    std::istringstream in(R"({"domain":"a.example","landing_url":"https://a.example/","html":"<html/>","requests":[],"cookies":[]})");
    const auto result = adgraph::parse_crawl_jsonl(in);
    ASSERT_EQ(result.records.size(), 1u);
    EXPECT_EQ(result.records[0].landing_domain, "a.example");
    EXPECT_EQ(result.records[0].page_text, "<html/>");
    EXPECT_TRUE(result.skipped.empty());
}

TEST(CrawlJsonl, CanonicalizesLanding) {
    std::istringstream in(R"({"domain":"b.example","landing_url":"https://WWW.B.Example/path"})");
    EXPECT_EQ(adgraph::parse_crawl_jsonl(in).records.at(0).landing_domain, "b.example");
}

TEST(CrawlJsonl, SkipsBadLinesWithLineNumbers) {
    std::istringstream in("\n{\"domain\":\"a.example\",\"landing_url\":\"https://a.example\"}\n{not json\n{\"domain\":\"c.example\",\"landing_url\":\"https://c.example\",\"rank\":0}\n");
    const auto result = adgraph::parse_crawl_jsonl(in);
    EXPECT_EQ(result.records.size(), 1u);
    ASSERT_EQ(result.skipped.size(), 3u);
    EXPECT_EQ(result.skipped[0].line, 1u);
    EXPECT_EQ(result.skipped[1].line, 3u);
    EXPECT_EQ(result.skipped[2].line, 4u);
}

TEST(CrawlJsonl, EmptyLineIsOneSkip) {
    std::istringstream in("\n");
    const auto result = adgraph::parse_crawl_jsonl(in);
    EXPECT_TRUE(result.records.empty());
    EXPECT_EQ(result.skipped.size(), 1u);
}

TEST(CrawlJsonl, MissingLandingFallsBackToDomain) {
    std::istringstream in(R"({"domain":"www.d.example"})");
    EXPECT_EQ(adgraph::parse_crawl_jsonl(in).records.at(0).landing_domain, "d.example");
}

TEST(CrawlJsonl, RoundTrip) {
    const auto corpus = fixtures::make_corpus({.sites = 30}, 11);
    auto records = corpus.records;
    records[0].snapshot_id = "2021-03-01";
    records[1].rank.reset();
    std::istringstream in(adgraph::serialize_crawl_jsonl(records));
    const auto back = adgraph::parse_crawl_jsonl(in);
    EXPECT_TRUE(back.skipped.empty());
    EXPECT_EQ(back.records, records);
}

std::string har_entry(const std::string& url, const std::string& type, int status, const std::string& mime, const std::string& body,
                      const std::string& cookies = "[]") {
    return R"({"_resourceType":")" + type + R"(","request":{"url":")" + url + R"("},"response":{"status":)" + std::to_string(status) +
           R"(,"cookies":)" + cookies + R"(,"content":{"mimeType":")" + mime + R"(","text":")" + body + R"("}}})";
}

TEST(Har, CollectsRequestsAndDocument) {
    const std::string har = R"({"log":{"entries":[)" +
                            har_entry("https://www.shop.example/", "document", 200, "text/html", "<p>pub-123456789</p>",
                                      R"([{"name":"_ga","value":"GA1.2.3"}])") +
                            "," + har_entry("https://www.googletagmanager.com/gtm.js?id=GTM-ABC123", "script", 200, "application/javascript", "") +
                            "," + har_entry("https://cdn.example.net/app.js", "script", 200, "application/javascript", "",
                                           R"([{"name":"_ga","value":"GA1.2.3"}])") +
                            "]}}";
    std::istringstream in(har);
    const auto r = adgraph::parse_har(in);
    EXPECT_EQ(r.request_urls.size(), 3u);
    EXPECT_EQ(r.request_urls[1], "https://www.googletagmanager.com/gtm.js?id=GTM-ABC123");
    EXPECT_EQ(r.landing_domain, "shop.example");
    EXPECT_EQ(r.page_text, "<p>pub-123456789</p>");
    ASSERT_EQ(r.cookies.size(), 1u);
}

TEST(Har, Base64DocumentBody) {
    const std::string har = R"({"log":{"entries":[{"request":{"url":"https://a.example/"},"response":{"status":200,"content":{"mimeType":"text/html; charset=utf-8","encoding":"base64","text":"PGh0bWw+"}}}]}})";
    std::istringstream in(har);
    EXPECT_EQ(adgraph::parse_har(in).page_text, "<html>");
}

TEST(Har, NoDocumentGivesEmptyPage) {
    const std::string har = R"({"log":{"entries":[)" + har_entry("https://a.example/x.js", "script", 200, "application/javascript", "x") + "]}}";
    std::istringstream in(har);
    const auto r = adgraph::parse_har(in);
    EXPECT_TRUE(r.page_text.empty());
    EXPECT_EQ(r.landing_domain, "a.example");
}

TEST(Har, StructuralErrors) {
    for (const char* bad : {R"({"log":{"entries":[]}})", R"({"log":{}})", R"({"nolog":1})", "not json"}) {
        std::istringstream in(bad);
        EXPECT_THROW(adgraph::parse_har(in), adgraph::FormatError) << bad;
    }
}

CrawlRecord landing(const std::string& domain, std::optional<std::int64_t> rank, const std::string& tag = "") {
    CrawlRecord r;
    r.requested_domain = tag.empty() ? domain : tag;
    r.landing_domain = domain;
    r.rank = rank;
    return r;
}

TEST(Dedup, BestRankWins) {
    const auto out = adgraph::dedup_by_landing({landing("c.example", 500, "x"), landing("c.example", 10, "y")});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(*out[0].rank, 10);
}

TEST(Dedup, DistinctUnchanged) {
    const std::vector<CrawlRecord> in{landing("a.example", 3), landing("b.example", 1), landing("c.example", std::nullopt)};
    EXPECT_EQ(adgraph::dedup_by_landing(in), in);
}

TEST(Dedup, UnrankedTieKeepsFirst) {
    const auto out = adgraph::dedup_by_landing({landing("c.example", std::nullopt, "first"), landing("c.example", std::nullopt, "second")});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].requested_domain, "first");
}

TEST(Dedup, RankedBeatsUnranked) {
    const auto out = adgraph::dedup_by_landing({landing("c.example", std::nullopt, "first"), landing("c.example", 900, "second")});
    EXPECT_EQ(out.at(0).requested_domain, "second");
}

TEST(Dedup, Idempotent) {
    std::vector<CrawlRecord> in;
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        std::optional<std::int64_t> rank;
        if (rng() % 3) rank = 1 + static_cast<std::int64_t>(rng() % 50);
        in.push_back(landing("d" + std::to_string(rng() % 40) + ".example", rank, "r" + std::to_string(i)));
    }
    const auto once = adgraph::dedup_by_landing(in);
    EXPECT_EQ(adgraph::dedup_by_landing(once), once);
}

TEST(Tables, RankList) {
    std::istringstream in("1,google.com\n2,youtube.com\n");
    const auto ranks = adgraph::load_rank_list(in);
    EXPECT_EQ(ranks.size(), 2u);
    EXPECT_EQ(*ranks.lookup("youtube.com"), 2);
}

TEST(Tables, RankListDuplicates) {
    std::istringstream in("1,google.com\n2,google.com\n3,a.example\n");
    const auto ranks = adgraph::load_rank_list(in);
    EXPECT_EQ(ranks.size(), 2u);
    EXPECT_EQ(ranks.duplicate_keys, 1u);
}

TEST(Tables, RankListMalformedRow) {
    std::istringstream in("1,google.com\nabc,youtube.com\n");
    try {
        adgraph::load_rank_list(in);
        FAIL();
    } catch (const adgraph::FormatError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(Tables, CategoryMap) {
    std::istringstream in("a.example,News and Media\nb.example,\"Arts, Culture\"\nc.example,Food, Drink\n");
    const auto cats = adgraph::load_category_map(in);
    EXPECT_EQ(*cats.lookup("a.example"), "News and Media");
    EXPECT_EQ(*cats.lookup("b.example"), "Arts, Culture");
    EXPECT_EQ(*cats.lookup("c.example"), "Food, Drink");
    EXPECT_FALSE(cats.lookup("z.example"));
}

TEST(Tables, UnreadableFile) {
    EXPECT_THROW(adgraph::load_rank_list(std::filesystem::path("/nonexistent/ranks.csv")), adgraph::InputError);
}

}  // namespace
