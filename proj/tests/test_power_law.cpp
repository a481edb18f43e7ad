#include <gtest/gtest.h>

#include <iomanip>

#include "adgraph/power_law.hpp"
#include "support/fixtures.hpp"

namespace {

// Reference values from mpmath.zeta(s, q) at 30 digits.
struct ZetaCase {
    double s, q, value;
};

void PrintTo(const ZetaCase& c, std::ostream* os) { *os << std::setprecision(10) << "s" << c.s << "_q" << c.q; }

class HurwitzZeta : public ::testing::TestWithParam<ZetaCase> {};

TEST_P(HurwitzZeta, MatchesMpmath) {
    const auto c = GetParam();
    EXPECT_NEAR(adgraph::hurwitz_zeta(c.s, c.q), c.value, 1e-12 * std::max(1.0, c.value));
}

INSTANTIATE_TEST_SUITE_P(Reference, HurwitzZeta,
                         ::testing::Values(ZetaCase{2, 1, 1.6449340668482264365}, ZetaCase{2.5, 1, 1.3414872572509171798},
                                           ZetaCase{1.8, 3, 0.59505502935356323729}, ZetaCase{3.2, 10, 0.003200231524965119916},
                                           ZetaCase{1.500001, 1, 2.6123714164537459979}, ZetaCase{2, 100, 0.010050166663333571395},
                                           ZetaCase{1.5, 2.5, 1.4037797688568257958}, ZetaCase{6, 1, 1.0173430619844491397}));

TEST(Vuong, IdenticalModels) {
    const std::vector<double> a{-1.0, -2.0, -0.5};
    const auto lr = adgraph::vuong_test(a, a);
    EXPECT_EQ(lr.statistic, 0.0);
    EXPECT_EQ(lr.p_value, 1.0);
}

TEST(Vuong, KnownStatistic) {
    // Differences {1, 3}: mean 2, population variance 1, R = 4, stat = 4 / sqrt(2).
    const std::vector<double> a{0.0, 0.0}, b{-1.0, -3.0};
    const auto lr = adgraph::vuong_test(a, b);
    EXPECT_NEAR(lr.statistic, 4.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(lr.p_value, std::erfc(2.0), 1e-12);
    EXPECT_THROW(adgraph::vuong_test(a, std::vector<double>{1.0}), adgraph::InvalidArgument);
}

TEST(Fit, RecoversAlphaAtXminOne) {
    const fixtures::PowerLawSampler sampler(2.5, 1);
    const auto x = sampler.sample(10000, 1);
    const auto fit = adgraph::fit_power_law(x);
    EXPECT_NEAR(fit.alpha, 2.5, 0.2);
    EXPECT_GT(fit.lr_statistic, 0.0);
    EXPECT_LT(fit.lr_p_value, 0.01);
}

TEST(Fit, RecoversAlphaWithShiftedXmin) {
    // Uniform noise below 5, power law from 5 on.
    const fixtures::PowerLawSampler sampler(2.2, 5);
    auto x = sampler.sample(6000, 2);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 3000; ++i) x.push_back(1 + static_cast<std::int64_t>(rng() % 4));
    const auto fit = adgraph::fit_power_law(x);
    EXPECT_NEAR(fit.alpha, 2.2, 0.2);
    EXPECT_GE(fit.xmin, 3);
    EXPECT_LE(fit.xmin, 8);
}

TEST(Fit, ConstantSampleIsAnError) {
    const std::vector<std::int64_t> x(50, 5);
    EXPECT_THROW(adgraph::fit_power_law(x), adgraph::InsufficientData);
}

TEST(Fit, PreconditionErrors) {
    EXPECT_THROW(adgraph::fit_power_law(std::vector<std::int64_t>{1, 2, 3}), adgraph::InsufficientData);
    std::vector<std::int64_t> x{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    EXPECT_THROW(adgraph::fit_power_law(x), adgraph::InvalidArgument);
}

TEST(Fit, ExponentialPreferredForGeometricData) {
    for (double lambda : {0.1, 0.3, 1.0}) {
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            const auto fit = adgraph::fit_power_law(fixtures::exponential_sample(lambda, 10000, seed));
            EXPECT_LT(fit.lr_statistic, 0.0) << lambda << " " << seed;
            EXPECT_LT(fit.lr_p_value, 0.01) << lambda << " " << seed;
        }
    }
}

TEST(Fit, AlphaStaysInSearchRange) {
    const auto x = fixtures::exponential_sample(1.0, 5000, 2);
    const auto fit = adgraph::fit_power_law(x);
    EXPECT_GE(fit.alpha, 1.5);
    EXPECT_LE(fit.alpha, 3.5);
    const auto wide = adgraph::fit_power_law(x, {.alpha_min = 1.01, .alpha_max = 12.0});
    EXPECT_LE(wide.alpha, 12.0);
    EXPECT_GE(wide.xmin, fit.xmin);
}

TEST(Fit, InvalidRange) {
    const fixtures::PowerLawSampler sampler(2.5, 1);
    const auto x = sampler.sample(100, 3);
    EXPECT_THROW(adgraph::fit_power_law(x, {.alpha_min = 1.0, .alpha_max = 3.5}), adgraph::InvalidArgument);
    EXPECT_THROW(adgraph::fit_power_law(x, {.alpha_min = 3.0, .alpha_max = 2.0}), adgraph::InvalidArgument);
}

TEST(LikelihoodRatio, ShortTailIsAnError) {
    const fixtures::PowerLawSampler sampler(2.5, 1);
    const auto x = sampler.sample(500, 6);
    auto fit = adgraph::fit_power_law(x);
    fit.xmin = 1'000'000;
    EXPECT_THROW(adgraph::loglikelihood_ratio(x, fit), adgraph::InsufficientData);
}

TEST(LikelihoodRatio, AgreesWithFit) {
    const fixtures::PowerLawSampler sampler(3.0, 1);
    const auto x = sampler.sample(3000, 8);
    const auto fit = adgraph::fit_power_law(x);
    const auto lr = adgraph::loglikelihood_ratio(x, fit);
    EXPECT_DOUBLE_EQ(lr.statistic, fit.lr_statistic);
    EXPECT_DOUBLE_EQ(lr.p_value, fit.lr_p_value);
}

TEST(Sampler, EmpiricalMassMatchesDefinition) {
    // Sanity check of the test oracle itself: P(X = 1) = 1 / zeta(2.5).
    const fixtures::PowerLawSampler sampler(2.5, 1);
    const auto x = sampler.sample(200000, 10);
    const double ones = static_cast<double>(std::count(x.begin(), x.end(), 1)) / static_cast<double>(x.size());
    EXPECT_NEAR(ones, 1.0 / 1.3414872572509171798, 0.005);
}

}  // namespace
