#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>

#include "adgraph/error.hpp"

namespace adgraph {

// Non-negative exact fraction used for metagraph weights, so that ranking
// and tie detection during pruning never depend on rounding.
class Rational {
public:
    constexpr Rational() = default;
    constexpr Rational(std::int64_t num, std::int64_t den = 1) : num_(num), den_(den) {
        if (den_ == 0) throw InvalidArgument("Rational with zero denominator");
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        const std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
    }

    constexpr std::int64_t numerator() const noexcept { return num_; }
    constexpr std::int64_t denominator() const noexcept { return den_; }
    constexpr double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        const std::int64_t g = std::gcd(a.den_, b.den_);
        const __int128 den = static_cast<__int128>(a.den_ / g) * b.den_;
        const __int128 num = static_cast<__int128>(a.num_) * (b.den_ / g) + static_cast<__int128>(b.num_) * (a.den_ / g);
        return from_wide(num, den);
    }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }

    friend Rational operator*(const Rational& a, std::int64_t k) {
        return from_wide(static_cast<__int128>(a.num_) * k, a.den_);
    }

    friend constexpr bool operator==(const Rational& a, const Rational& b) noexcept {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend constexpr std::strong_ordering operator<=>(const Rational& a, const Rational& b) noexcept {
        const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
        const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
        return lhs <=> rhs;
    }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) {
        return os << r.num_ << '/' << r.den_;
    }

private:
    static Rational from_wide(__int128 num, __int128 den) {
        __int128 a = num < 0 ? -num : num;
        __int128 b = den;
        while (b != 0) {
            const __int128 t = a % b;
            a = b;
            b = t;
        }
        if (a > 1) {
            num /= a;
            den /= a;
        }
        constexpr __int128 limit = INT64_MAX;
        if (num > limit || num < -limit || den > limit) throw Error("Rational overflow");
        return Rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

inline double to_double(const Rational& r) noexcept { return r.to_double(); }
inline double to_double(double d) noexcept { return d; }

}  // namespace adgraph
