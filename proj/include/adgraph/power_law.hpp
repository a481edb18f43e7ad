#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "adgraph/error.hpp"

namespace adgraph {

// Hurwitz zeta(s, q) = sum_{k>=0} (q + k)^-s for s > 1, q > 0, by
// Euler-Maclaurin summation after shifting q past 12.
inline double hurwitz_zeta(double s, double q) {
    if (!(s > 1.0) || !(q > 0.0)) throw InvalidArgument("hurwitz_zeta requires s > 1 and q > 0");
    // B_2j / (2j)!
    static constexpr double kCoeff[] = {
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
        -3617.0 / 10670622842880000.0,
    };
    double sum = 0.0;
    while (q < 12.0) {
        sum += std::pow(q, -s);
        q += 1.0;
    }
    const double qs = std::pow(q, -s);
    sum += q * qs / (s - 1.0) + qs / 2.0;
    double rising = s;        // s (s+1) ... (s+2j-2)
    double qpow = qs / q;     // q^(-s-2j+1)
    for (std::size_t j = 0; j < std::size(kCoeff); ++j) {
        const double t = kCoeff[j] * rising * qpow;
        sum += t;
        if (std::abs(t) < 1e-17 * sum) break;
        rising *= (s + 2.0 * static_cast<double>(j) + 1.0) * (s + 2.0 * static_cast<double>(j) + 2.0);
        qpow /= q * q;
    }
    return sum;
}

struct LikelihoodRatio {
    double statistic = 0;  // normalized; > 0 favours the first model
    double p_value = 1;
    double log_ratio = 0;  // unnormalized sum of log-likelihood differences
};

// Vuong's normalized log-likelihood ratio test with a two-sided p-value
// from the normal approximation.
inline LikelihoodRatio vuong_test(std::span<const double> loglik_a, std::span<const double> loglik_b) {
    if (loglik_a.size() != loglik_b.size() || loglik_a.empty()) throw InvalidArgument("vuong_test needs paired samples");
    const auto n = static_cast<double>(loglik_a.size());
    double sum = 0;
    for (std::size_t i = 0; i < loglik_a.size(); ++i) sum += loglik_a[i] - loglik_b[i];
    const double mean = sum / n;
    double var = 0;
    for (std::size_t i = 0; i < loglik_a.size(); ++i) {
        const double d = loglik_a[i] - loglik_b[i] - mean;
        var += d * d;
    }
    var /= n;

    LikelihoodRatio lr;
    lr.log_ratio = sum;
    if (var <= 0) {
        if (sum == 0) return lr;
        lr.statistic = sum > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        lr.p_value = 0;
        return lr;
    }
    lr.statistic = sum / std::sqrt(n * var);
    lr.p_value = std::erfc(std::abs(lr.statistic) / std::sqrt(2.0));
    return lr;
}

struct PowerLawFit {
    double alpha = 0;
    std::int64_t xmin = 1;
    double ks_stat = 0;
    double lr_statistic = 0;
    double lr_p_value = 1;
    std::size_t n_tail = 0;
};

inline constexpr std::size_t kMinTail = 10;

// Search interval for the exponent.
struct PowerLawOptions {
    double alpha_min = 1.5;
    double alpha_max = 3.5;
};

namespace detail {

struct TailStats {
    std::size_t n = 0;
    double sum_log = 0;
};

// Discrete power-law MLE: maximizes -n ln zeta(a, xmin) - a sum ln x.
inline double discrete_alpha_mle(const TailStats& tail, std::int64_t xmin, const PowerLawOptions& options) {
    const double q = static_cast<double>(xmin);
    const auto n = static_cast<double>(tail.n);
    const auto negative_ll = [&](double a) { return n * std::log(hurwitz_zeta(a, q)) + a * tail.sum_log; };
    return boost::math::tools::brent_find_minima(negative_ll, options.alpha_min, options.alpha_max, 48).first;
}

}  // namespace detail

inline void validate_sample(std::span<const std::int64_t> sample) {
    for (auto x : sample) {
        if (x < 1) throw InvalidArgument("power-law samples must be positive integers");
    }
}

// Vuong test of the fitted discrete power law against a discrete
// exponential (geometric) fitted by maximum likelihood on the same tail.
inline LikelihoodRatio loglikelihood_ratio(std::span<const std::int64_t> sample, const PowerLawFit& fit) {
    validate_sample(sample);
    if (!(fit.alpha > 1.0) || fit.xmin < 1) throw InvalidArgument("invalid power-law fit");
    std::vector<double> tail;
    for (auto x : sample) {
        if (x >= fit.xmin) tail.push_back(static_cast<double>(x));
    }
    if (tail.size() < kMinTail) throw InsufficientData("likelihood ratio needs at least 10 tail observations");

    const double xmin = static_cast<double>(fit.xmin);
    double excess = 0;
    for (double x : tail) excess += x - xmin;
    excess /= static_cast<double>(tail.size());
    if (excess <= 0) throw InsufficientData("tail has no variation");
    const double lambda = std::log1p(1.0 / excess);
    const double log_norm_exp = std::log(-std::expm1(-lambda));
    const double log_zeta = std::log(hurwitz_zeta(fit.alpha, xmin));

    std::vector<double> ll_power, ll_exp;
    ll_power.reserve(tail.size());
    ll_exp.reserve(tail.size());
    for (double x : tail) {
        ll_power.push_back(-fit.alpha * std::log(x) - log_zeta);
        ll_exp.push_back(log_norm_exp - lambda * (x - xmin));
    }
    return vuong_test(ll_power, ll_exp);
}

// Discrete power-law fit: alpha by maximum likelihood for every candidate
// xmin (each distinct value leaving at least 10 tail points), xmin chosen by
// minimal Kolmogorov-Smirnov distance, then a likelihood-ratio test against
// the exponential alternative at the chosen xmin.
inline PowerLawFit fit_power_law(std::span<const std::int64_t> sample, const PowerLawOptions& options = {}) {
    validate_sample(sample);
    if (!(options.alpha_min > 1.0 && options.alpha_min < options.alpha_max)) throw InvalidArgument("alpha range must satisfy 1 < min < max");
    if (sample.size() < kMinTail) throw InsufficientData("power-law fit needs at least 10 observations");
    std::vector<std::int64_t> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());

    // Distinct values with their counts, ascending.
    std::vector<std::int64_t> values;
    std::vector<std::size_t> counts;
    for (auto x : sorted) {
        if (values.empty() || values.back() != x) {
            values.push_back(x);
            counts.push_back(0);
        }
        ++counts.back();
    }
    // Suffix sums over distinct values.
    std::vector<std::size_t> tail_n(values.size() + 1, 0);
    std::vector<double> tail_log(values.size() + 1, 0.0);
    for (std::size_t i = values.size(); i-- > 0;) {
        tail_n[i] = tail_n[i + 1] + counts[i];
        tail_log[i] = tail_log[i + 1] + static_cast<double>(counts[i]) * std::log(static_cast<double>(values[i]));
    }

    PowerLawFit best;
    bool found = false;
    for (std::size_t c = 0; c + 1 < values.size() && tail_n[c] >= kMinTail; ++c) {
        const std::int64_t xmin = values[c];
        const double alpha = detail::discrete_alpha_mle({tail_n[c], tail_log[c]}, xmin, options);
        const double zeta_min = hurwitz_zeta(alpha, static_cast<double>(xmin));
        const auto cdf = [&](std::int64_t x) { return 1.0 - hurwitz_zeta(alpha, static_cast<double>(x + 1)) / zeta_min; };

        const auto n = static_cast<double>(tail_n[c]);
        double ks = 0;
        std::size_t below = 0;
        for (std::size_t j = c; j < values.size(); ++j) {
            below += counts[j];
            const double empirical = static_cast<double>(below) / n;
            ks = std::max(ks, std::abs(empirical - cdf(values[j])));
            if (j + 1 < values.size() && values[j + 1] - 1 > values[j]) {
                ks = std::max(ks, std::abs(empirical - cdf(values[j + 1] - 1)));
            }
        }
        if (!found || ks < best.ks_stat) {
            best.alpha = alpha;
            best.xmin = xmin;
            best.ks_stat = ks;
            best.n_tail = tail_n[c];
            found = true;
        }
    }
    if (!found) throw InsufficientData("degenerate sample: no candidate xmin leaves a varied tail of 10 points");

    const auto lr = loglikelihood_ratio(sample, best);
    best.lr_statistic = lr.statistic;
    best.lr_p_value = lr.p_value;
    return best;
}

}  // namespace adgraph
