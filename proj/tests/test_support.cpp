#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>

#include "adgraph/parallel.hpp"
#include "adgraph/rational.hpp"
#include "adgraph/text.hpp"

namespace {

using adgraph::Rational;

TEST(Rational, NormalizesSignAndGcd) {
    const Rational r(6, -4);
    EXPECT_EQ(r.numerator(), -3);
    EXPECT_EQ(r.denominator(), 2);
    EXPECT_THROW(Rational(1, 0), adgraph::InvalidArgument);
}

TEST(Rational, ArithmeticIsExact) {
    Rational sum;
    for (int i = 0; i < 3; ++i) sum += Rational(1, 3);
    EXPECT_EQ(sum, Rational(1));
    EXPECT_EQ(Rational(1, 2) + Rational(1, 1), Rational(3, 2));
    EXPECT_EQ(Rational(2, 7) * 7, Rational(2));
    EXPECT_LT(Rational(1, 3), Rational(34, 100));
    EXPECT_GT(Rational(1, 3), Rational(33, 100));
}

TEST(Rational, OverflowThrows) {
    const Rational big(std::numeric_limits<std::int64_t>::max() - 1, 1);
    EXPECT_THROW(big + big, adgraph::Error);
}

TEST(Text, FormatDoubleRoundTrips) {
    for (double v : {0.1, 1.5, 1.0 / 3.0, 2.0 / 7.0, 1e-300, 123456789.125}) {
        const auto s = adgraph::text::format_double(v);
        EXPECT_EQ(*adgraph::text::parse_double(s), v) << s;
    }
    EXPECT_EQ(adgraph::text::format_double(1.5), "1.5");
    EXPECT_EQ(adgraph::text::format_double(2.0), "2");
}

TEST(Text, CsvQuoting) {
    const auto fields = adgraph::text::split_csv(R"(a.example,"News, Media ""daily""")");
    ASSERT_TRUE(fields);
    ASSERT_EQ(fields->size(), 2u);
    EXPECT_EQ((*fields)[1], "News, Media \"daily\"");
    EXPECT_EQ(adgraph::text::csv_field("News, Media \"daily\""), R"("News, Media ""daily""")");
    EXPECT_FALSE(adgraph::text::split_csv(R"(a,"open)"));
}

TEST(Text, ReadLinesStripsBomAndCr) {
    std::istringstream in("\xEF\xBB\xBFone\r\ntwo\n");
    const auto lines = adgraph::text::read_lines(in);
    ASSERT_EQ(lines.size(), 2u);
    EXPECT_EQ(lines[0], "one");
    EXPECT_EQ(lines[1], "two");
}

TEST(Text, Base64) {
    EXPECT_EQ(*adgraph::text::base64_decode("PGh0bWw+"), "<html>");
    EXPECT_EQ(*adgraph::text::base64_decode("YQ=="), "a");
    EXPECT_FALSE(adgraph::text::base64_decode("*&^%"));
}

TEST(Parallel, ChunksCoverRangeForAnyThreadCount) {
    for (std::size_t threads : {1u, 2u, 7u}) {
        std::vector<std::atomic<int>> hits(1000);
        adgraph::for_each_chunk(hits.size(), 64, threads, [&](std::size_t b, std::size_t e, std::size_t) {
            for (auto i = b; i < e; ++i) ++hits[i];
        });
        for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
}

TEST(Parallel, PropagatesExceptions) {
    EXPECT_THROW(adgraph::parallel_for(100, 4, [](std::size_t i) {
        if (i == 57) throw std::runtime_error("boom");
    }), std::runtime_error);
}

TEST(Parallel, ResolveThreadsUsesEnvironment) {
    ::setenv("ADGRAPH_THREADS", "3", 1);
    EXPECT_EQ(adgraph::resolve_threads(), 3u);
    EXPECT_EQ(adgraph::resolve_threads(5), 5u);
    ::unsetenv("ADGRAPH_THREADS");
    EXPECT_EQ(adgraph::resolve_threads(), 1u);
}

TEST(Parallel, MixSeedSeparatesStreams) {
    EXPECT_NE(adgraph::mix_seed(7, 0), adgraph::mix_seed(7, 1));
    EXPECT_NE(adgraph::mix_seed(7, 0), adgraph::mix_seed(8, 0));
    EXPECT_EQ(adgraph::mix_seed(7, 3), adgraph::mix_seed(7, 3));
}

}  // namespace
